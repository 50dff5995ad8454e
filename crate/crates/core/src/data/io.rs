//! Feature-file ingestion and the companion labels manifest.
//!
//! Binary layout: magic `RRAE`, format version (u32 LE), video count (u32),
//! then per video: id length (u32) + UTF-8 id, unit count (u32), dim (u32),
//! and the payload as row-major 32-bit little-endian floats, one row per
//! unit. A plain-text alternative (`video_id,v0,v1,...` per unit line) is
//! accepted for small tests; readers sniff the magic bytes.

use crate::data::stream::{Dataset, FeatureStream, LabelSet, SnippetLabel};
use crate::error::{Result, RraeError};
use crate::numeric::Vector;
use crate::pipeline::segment::{SnippetRange, VideoSegmentation};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"RRAE";
const FORMAT_VERSION: u32 = 1;

/// Writes a dataset's streams in the binary feature format.
pub fn save_features(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(dataset.streams.len() as u32).to_le_bytes())?;
    for stream in &dataset.streams {
        let id = stream.video_id.as_bytes();
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id)?;
        w.write_all(&(stream.n_units() as u32).to_le_bytes())?;
        w.write_all(&(stream.dim as u32).to_le_bytes())?;
        for unit in &stream.units {
            for &v in unit.data() {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the plain-text tabular alternative: one unit per line,
/// comma-separated, id first.
pub fn save_features_text(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for stream in &dataset.streams {
        for unit in &stream.units {
            write!(w, "{}", stream.video_id)?;
            for &v in unit.data() {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Loads a feature file, sniffing binary vs text by the magic bytes.
pub fn load_features(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path)?;
    let name = path.display().to_string();
    if bytes.len() >= 4 && &bytes[..4] == MAGIC {
        load_binary(&bytes, &name)
    } else {
        load_text(&bytes, &name)
    }
}

fn load_binary(bytes: &[u8], path: &str) -> Result<Dataset> {
    let mut r = BufReader::new(bytes);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, path)?;
    if &magic != MAGIC {
        return Err(RraeError::MalformedHeader {
            path: path.into(),
            detail: format!("bad magic {magic:?}"),
        });
    }
    let version = read_u32(&mut r, path)?;
    if version != FORMAT_VERSION {
        return Err(RraeError::MalformedHeader {
            path: path.into(),
            detail: format!("unsupported format version {version}"),
        });
    }
    let n_videos = read_u32(&mut r, path)? as usize;
    if n_videos == 0 {
        return Err(RraeError::MalformedData {
            path: path.into(),
            detail: "file contains no videos".into(),
        });
    }
    let mut streams = Vec::with_capacity(n_videos);
    let mut dim0: Option<usize> = None;
    for _ in 0..n_videos {
        let id_len = read_u32(&mut r, path)? as usize;
        let mut id_bytes = vec![0u8; id_len];
        read_exact(&mut r, &mut id_bytes, path)?;
        let id = String::from_utf8(id_bytes).map_err(|e| RraeError::MalformedData {
            path: path.into(),
            detail: format!("video id is not UTF-8: {e}"),
        })?;
        let n_units = read_u32(&mut r, path)? as usize;
        let dim = read_u32(&mut r, path)? as usize;
        match dim0 {
            None => dim0 = Some(dim),
            Some(d) if d != dim => {
                return Err(RraeError::StreamDimMismatch {
                    first: d,
                    second: dim,
                });
            }
            _ => {}
        }
        let mut units = Vec::with_capacity(n_units);
        let mut buf = vec![0u8; dim * 4];
        for _ in 0..n_units {
            read_exact(&mut r, &mut buf, path)?;
            let data: Vec<f64> = buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            units.push(Vector::from_vec(data));
        }
        streams.push(FeatureStream::new(id, dim, units)?);
    }
    Dataset::new(path, streams)
}

fn load_text(bytes: &[u8], path: &str) -> Result<Dataset> {
    let text = std::str::from_utf8(bytes).map_err(|_| RraeError::MalformedHeader {
        path: path.into(),
        detail: "neither the binary magic nor UTF-8 text".into(),
    })?;
    let mut streams: Vec<(String, Vec<Vector>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or_default().trim().to_string();
        if id.is_empty() {
            return Err(RraeError::MalformedData {
                path: path.into(),
                detail: format!("line {}: empty video id", lineno + 1),
            });
        }
        let values: Vec<f64> = fields
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| RraeError::MalformedData {
                    path: path.into(),
                    detail: format!("line {}: {e}", lineno + 1),
                })
            })
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(RraeError::MalformedData {
                path: path.into(),
                detail: format!("line {}: no feature values", lineno + 1),
            });
        }
        match streams.last_mut() {
            Some((last_id, units)) if *last_id == id => units.push(Vector::from_vec(values)),
            _ => streams.push((id, vec![Vector::from_vec(values)])),
        }
    }
    if streams.is_empty() {
        return Err(RraeError::MalformedData {
            path: path.into(),
            detail: "no feature rows".into(),
        });
    }
    let built: Vec<FeatureStream> = streams
        .into_iter()
        .map(|(id, units)| {
            let dim = units[0].len();
            if let Some(u) = units.iter().find(|u| u.len() != dim) {
                return Err(RraeError::MalformedData {
                    path: path.into(),
                    detail: format!("video {id}: row width {} != {dim}", u.len()),
                });
            }
            FeatureStream::new(id, dim, units)
        })
        .collect::<Result<_>>()?;
    let dim = built[0].dim;
    if let Some(s) = built.iter().find(|s| s.dim != dim) {
        return Err(RraeError::StreamDimMismatch {
            first: dim,
            second: s.dim,
        });
    }
    Dataset::new(path, built)
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| RraeError::TruncatedPayload {
        path: path.into(),
        detail: e.to_string(),
    })
}

fn read_u32(r: &mut impl Read, path: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, path)?;
    Ok(u32::from_le_bytes(b))
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestVideo {
    id: String,
    /// Half-open `[start, end)` unit ranges the labels align to.
    boundaries: Vec<(usize, usize)>,
    /// 1 highlight, 0 non-highlight, -1 unlabeled; one entry per boundary.
    labels: Vec<i8>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    version: u32,
    videos: Vec<ManifestVideo>,
}

/// Writes the labels manifest for a labeled dataset.
pub fn save_labels(dataset: &Dataset, path: &Path) -> Result<()> {
    let labels = dataset
        .labels
        .as_ref()
        .ok_or_else(|| RraeError::Unlabeled(dataset.name.clone()))?;
    let videos = dataset
        .streams
        .iter()
        .enumerate()
        .map(|(i, stream)| ManifestVideo {
            id: stream.video_id.clone(),
            boundaries: labels.segmentation[i]
                .ranges
                .iter()
                .map(|r| (r.start, r.end))
                .collect(),
            labels: labels.labels[i].iter().map(|l| l.to_code()).collect(),
        })
        .collect();
    let file = ManifestFile {
        version: 1,
        videos,
    };
    let json = serde_json::to_string_pretty(&file).map_err(|e| RraeError::MalformedData {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    fs::write(path, json)?;
    Ok(())
}

/// Reads a labels manifest and attaches it to the dataset, matching videos
/// by id.
pub fn load_labels(dataset: Dataset, path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let file: ManifestFile =
        serde_json::from_str(&text).map_err(|e| RraeError::MalformedData {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
    if file.version != 1 {
        return Err(RraeError::MalformedHeader {
            path: path.display().to_string(),
            detail: format!("unsupported manifest version {}", file.version),
        });
    }
    let mut segmentation = Vec::with_capacity(dataset.streams.len());
    let mut labels = Vec::with_capacity(dataset.streams.len());
    for stream in &dataset.streams {
        let entry = file
            .videos
            .iter()
            .find(|v| v.id == stream.video_id)
            .ok_or_else(|| RraeError::MalformedData {
                path: path.display().to_string(),
                detail: format!("manifest missing video {}", stream.video_id),
            })?;
        if entry.labels.len() != entry.boundaries.len() {
            return Err(RraeError::MalformedData {
                path: path.display().to_string(),
                detail: format!(
                    "video {}: {} labels for {} boundaries",
                    entry.id,
                    entry.labels.len(),
                    entry.boundaries.len()
                ),
            });
        }
        segmentation.push(VideoSegmentation {
            ranges: entry
                .boundaries
                .iter()
                .map(|&(start, end)| SnippetRange {
                    start,
                    end,
                    short: false,
                })
                .collect(),
        });
        labels.push(
            entry
                .labels
                .iter()
                .map(|&c| SnippetLabel::from_code(c))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    dataset.with_labels(LabelSet {
        segmentation,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn small_dataset() -> Dataset {
        let s1 = FeatureStream::new(
            "a",
            3,
            vec![
                Vector::from_slice(&[1.0, 2.0, 3.0]),
                Vector::from_slice(&[4.0, 5.0, 6.0]),
                Vector::from_slice(&[7.0, 8.0, 9.0]),
                Vector::from_slice(&[-1.0, 0.5, 0.25]),
            ],
        )
        .unwrap();
        Dataset::new("small", vec![s1]).unwrap()
    }

    #[test]
    fn binary_roundtrip_is_bit_identical() {
        let dir = tempdir().unwrap();
        let p1 = dir.path().join("a.rrae");
        let p2 = dir.path().join("b.rrae");
        let ds = small_dataset();
        save_features(&ds, &p1).unwrap();
        let loaded = load_features(&p1).unwrap();
        assert_eq!(loaded.streams, ds.streams);
        save_features(&loaded, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn corrupted_magic_is_malformed_header() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad.rrae");
        let ds = small_dataset();
        save_features(&ds, &p).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[0] = b'X';
        // A corrupted magic falls through to the text reader, which must
        // reject the binary payload as malformed rather than parse it.
        fs::write(&p, &bytes).unwrap();
        let err = load_features(&p).unwrap_err();
        assert!(
            matches!(
                err,
                RraeError::MalformedHeader { .. } | RraeError::MalformedData { .. }
            ),
            "unexpected error {err:?}"
        );
    }

    #[test]
    fn mixed_dims_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("mixed.rrae");
        // Hand-build a file whose two streams disagree on dimension.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        for (id, dim) in [("x", 512u32), ("y", 256u32)] {
            bytes.extend_from_slice(&(id.len() as u32).to_le_bytes());
            bytes.extend_from_slice(id.as_bytes());
            bytes.extend_from_slice(&1u32.to_le_bytes());
            bytes.extend_from_slice(&dim.to_le_bytes());
            for _ in 0..dim {
                bytes.extend_from_slice(&1.0f32.to_le_bytes());
            }
        }
        fs::write(&p, &bytes).unwrap();
        let err = load_features(&p).unwrap_err();
        assert!(matches!(
            err,
            RraeError::StreamDimMismatch {
                first: 512,
                second: 256
            }
        ));
    }

    #[test]
    fn truncated_payload_detected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("trunc.rrae");
        let ds = small_dataset();
        save_features(&ds, &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
        let err = load_features(&p).unwrap_err();
        assert!(matches!(err, RraeError::TruncatedPayload { .. }));
    }

    #[test]
    fn text_roundtrip_preserves_values() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let ds = small_dataset();
        save_features_text(&ds, &p).unwrap();
        let loaded = load_features(&p).unwrap();
        assert_eq!(loaded.streams.len(), 1);
        assert_eq!(loaded.streams[0].n_units(), 4);
        for (a, b) in loaded.streams[0].units.iter().zip(&ds.streams[0].units) {
            assert!(a.dist_sq(b).unwrap() < 1e-20);
        }
    }

    #[test]
    fn labels_manifest_roundtrip() {
        let dir = tempdir().unwrap();
        let fp = dir.path().join("f.rrae");
        let lp = dir.path().join("labels.json");
        let ds = small_dataset();
        let seg = vec![VideoSegmentation {
            ranges: vec![
                SnippetRange {
                    start: 0,
                    end: 2,
                    short: false,
                },
                SnippetRange {
                    start: 2,
                    end: 4,
                    short: false,
                },
            ],
        }];
        let labels = vec![vec![SnippetLabel::Highlight, SnippetLabel::NonHighlight]];
        let ds = ds
            .with_labels(LabelSet {
                segmentation: seg,
                labels,
            })
            .unwrap();
        save_features(&ds, &fp).unwrap();
        save_labels(&ds, &lp).unwrap();
        let loaded = load_labels(load_features(&fp).unwrap(), &lp).unwrap();
        let ls = loaded.labels.unwrap();
        assert_eq!(
            ls.labels,
            vec![vec![SnippetLabel::Highlight, SnippetLabel::NonHighlight]]
        );
        assert_eq!(ls.segmentation[0].ranges.len(), 2);
    }
}
