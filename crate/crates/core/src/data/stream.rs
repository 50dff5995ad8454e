//! Feature streams, snippet labels, and datasets.

use crate::error::{Result, RraeError};
use crate::numeric::Vector;
use crate::pipeline::segment::Segmentation;

/// Per-video time series of fixed-dimension feature vectors, one vector per
/// 16-frame unit.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStream {
    pub video_id: String,
    pub dim: usize,
    pub units: Vec<Vector>,
}

impl FeatureStream {
    pub fn new(video_id: impl Into<String>, dim: usize, units: Vec<Vector>) -> Result<Self> {
        let video_id = video_id.into();
        if units.is_empty() {
            return Err(RraeError::MalformedData {
                path: video_id,
                detail: "feature stream has no units".into(),
            });
        }
        if let Some(bad) = units.iter().find(|u| u.len() != dim) {
            return Err(RraeError::DimMismatch {
                op: "FeatureStream::new",
                left: format!("dim {dim}"),
                right: format!("unit len {}", bad.len()),
            });
        }
        if units.iter().any(|u| !u.is_finite()) {
            return Err(RraeError::MalformedData {
                path: video_id,
                detail: "non-finite feature value".into(),
            });
        }
        Ok(FeatureStream {
            video_id,
            dim,
            units,
        })
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }
}

/// Ground-truth annotation for one snippet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnippetLabel {
    Highlight,
    NonHighlight,
    Unlabeled,
}

impl SnippetLabel {
    /// Manifest encoding: 1 highlight, 0 non-highlight, -1 unlabeled.
    pub fn to_code(self) -> i8 {
        match self {
            SnippetLabel::Highlight => 1,
            SnippetLabel::NonHighlight => 0,
            SnippetLabel::Unlabeled => -1,
        }
    }

    pub fn from_code(code: i8) -> Result<Self> {
        match code {
            1 => Ok(SnippetLabel::Highlight),
            0 => Ok(SnippetLabel::NonHighlight),
            -1 => Ok(SnippetLabel::Unlabeled),
            other => Err(RraeError::MalformedData {
                path: "labels".into(),
                detail: format!("unknown label code {other}"),
            }),
        }
    }
}

/// Snippet labels together with the segmentation they are aligned to.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub segmentation: Segmentation,
    pub labels: Vec<Vec<SnippetLabel>>,
}

/// A named collection of feature streams, optionally labeled.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub streams: Vec<FeatureStream>,
    pub labels: Option<LabelSet>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, streams: Vec<FeatureStream>) -> Result<Self> {
        let name = name.into();
        if streams.is_empty() {
            return Err(RraeError::MalformedData {
                path: name,
                detail: "dataset has no streams".into(),
            });
        }
        let dim = streams[0].dim;
        if let Some(s) = streams.iter().find(|s| s.dim != dim) {
            return Err(RraeError::StreamDimMismatch {
                first: dim,
                second: s.dim,
            });
        }
        Ok(Dataset {
            name,
            streams,
            labels: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.streams[0].dim
    }

    pub fn n_videos(&self) -> usize {
        self.streams.len()
    }

    /// Attaches labels after checking they line up with the dataset and the
    /// carrying segmentation.
    pub fn with_labels(mut self, labels: LabelSet) -> Result<Self> {
        if labels.segmentation.len() != self.streams.len()
            || labels.labels.len() != self.streams.len()
        {
            return Err(RraeError::DimMismatch {
                op: "Dataset::with_labels",
                left: format!("{} videos", self.streams.len()),
                right: format!(
                    "{} segmentations / {} label lists",
                    labels.segmentation.len(),
                    labels.labels.len()
                ),
            });
        }
        for (i, stream) in self.streams.iter().enumerate() {
            labels.segmentation[i].check_partitions(stream.n_units())?;
            if labels.labels[i].len() != labels.segmentation[i].n_snippets() {
                return Err(RraeError::DimMismatch {
                    op: "Dataset::with_labels",
                    left: format!("{} snippets", labels.segmentation[i].n_snippets()),
                    right: format!("{} labels", labels.labels[i].len()),
                });
            }
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Resolves per-snippet labels against an arbitrary segmentation.
    ///
    /// When `seg` matches the stored segmentation the labels pass through
    /// unchanged. Otherwise each unit inherits the label of the stored
    /// snippet containing it and a queried snippet takes the majority label
    /// of its units (ties go to highlight; all-unlabeled stays unlabeled).
    pub fn labels_for(&self, seg: &Segmentation) -> Result<Vec<Vec<SnippetLabel>>> {
        let stored = self
            .labels
            .as_ref()
            .ok_or_else(|| RraeError::Unlabeled(self.name.clone()))?;
        if seg.len() != self.streams.len() {
            return Err(RraeError::DimMismatch {
                op: "labels_for",
                left: format!("{} videos", self.streams.len()),
                right: format!("{} segmentations", seg.len()),
            });
        }
        if *seg == stored.segmentation {
            return Ok(stored.labels.clone());
        }
        let mut out = Vec::with_capacity(seg.len());
        for (v, video_seg) in seg.iter().enumerate() {
            video_seg.check_partitions(self.streams[v].n_units())?;
            let mut unit_labels = vec![SnippetLabel::Unlabeled; self.streams[v].n_units()];
            for (range, &label) in stored.segmentation[v]
                .ranges
                .iter()
                .zip(&stored.labels[v])
            {
                for u in range.start..range.end {
                    unit_labels[u] = label;
                }
            }
            let mut video_out = Vec::with_capacity(video_seg.n_snippets());
            for range in &video_seg.ranges {
                let mut highlight = 0usize;
                let mut non = 0usize;
                for u in range.start..range.end {
                    match unit_labels[u] {
                        SnippetLabel::Highlight => highlight += 1,
                        SnippetLabel::NonHighlight => non += 1,
                        SnippetLabel::Unlabeled => {}
                    }
                }
                let label = if highlight == 0 && non == 0 {
                    SnippetLabel::Unlabeled
                } else if highlight >= non {
                    SnippetLabel::Highlight
                } else {
                    SnippetLabel::NonHighlight
                };
                video_out.push(label);
            }
            out.push(video_out);
        }
        Ok(out)
    }
}
