//! The segment → pool → standardize → PCA preprocessing pipeline.

pub mod pca;
pub mod pool;
pub mod scaler;
pub mod segment;

pub use pca::PcaModel;
pub use pool::{pool, SnippetFeature};
pub use scaler::Standardizer;
pub use segment::{
    segment, segment_all, Segmentation, SnippetRange, VideoSegmentation, DEFAULT_MAX_UNITS,
    DEFAULT_MIN_UNITS,
};

use crate::data::Dataset;
use crate::error::{Result, RraeError};
use crate::numeric::Vector;
use crate::pipeline::pca::{read_exact, read_f64, read_f64s, read_u32};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

const PIPELINE_MAGIC: &[u8; 4] = b"RPIP";
const PIPELINE_VERSION: u32 = 1;

/// Preprocessing choices shared by training and scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub min_units: usize,
    pub max_units: usize,
    pub penalty: f64,
    pub standardize: bool,
    /// Energy fraction for PCA, or `None` to skip projection entirely.
    pub pca_energy: Option<f64>,
    /// Snippet-window length fed to the recurrent model; must be odd.
    pub window_len: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            min_units: DEFAULT_MIN_UNITS,
            max_units: DEFAULT_MAX_UNITS,
            penalty: 1.0,
            standardize: true,
            pca_energy: Some(0.9),
            window_len: 9,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_units < 1 || self.max_units < self.min_units {
            return Err(RraeError::config(format!(
                "snippet length bounds [{}, {}] invalid",
                self.min_units, self.max_units
            )));
        }
        if let Some(e) = self.pca_energy {
            if !(e > 0.0 && e <= 1.0) {
                return Err(RraeError::config(format!(
                    "pca energy must be in (0, 1], got {e}"
                )));
            }
        }
        if self.window_len == 0 || self.window_len % 2 == 0 {
            return Err(RraeError::config(format!(
                "window length must be odd, got {}",
                self.window_len
            )));
        }
        if !(self.penalty >= 0.0) {
            return Err(RraeError::config(format!(
                "segment penalty must be non-negative, got {}",
                self.penalty
            )));
        }
        Ok(())
    }
}

/// One video's preprocessed snippet features together with the ranges they
/// came from.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSnippets {
    pub video_id: String,
    pub segmentation: VideoSegmentation,
    pub features: Vec<Vector>,
}

/// A fitted preprocessing pipeline: segmentation parameters plus the
/// standardizer and PCA learned from a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub config: PipelineConfig,
    pub standardizer: Option<Standardizer>,
    pub pca: Option<PcaModel>,
    pub input_dim: usize,
}

impl FittedPipeline {
    /// Segments, pools, and fits the standardizer/PCA on `dataset`,
    /// returning the pipeline and the transformed training snippets.
    pub fn fit(config: PipelineConfig, dataset: &Dataset) -> Result<(Self, Vec<VideoSnippets>)> {
        config.validate()?;
        let input_dim = dataset.dim();
        let raw = segment_and_pool(&config, dataset)?;

        let all: Vec<Vector> = raw
            .iter()
            .flat_map(|v| v.features.iter().cloned())
            .collect();
        let standardizer = if config.standardize {
            Some(Standardizer::fit(&all)?)
        } else {
            None
        };
        let scaled: Vec<Vector> = match &standardizer {
            Some(s) => all.iter().map(|v| s.apply(v)).collect::<Result<_>>()?,
            None => all,
        };
        let pca = match config.pca_energy {
            Some(energy) => Some(PcaModel::fit(&scaled, energy)?),
            None => None,
        };

        let pipeline = FittedPipeline {
            config,
            standardizer,
            pca,
            input_dim,
        };
        let transformed = pipeline.transform_pooled(raw)?;
        Ok((pipeline, transformed))
    }

    /// Output dimension after standardization and PCA.
    pub fn output_dim(&self) -> usize {
        match &self.pca {
            Some(p) => p.n_components(),
            None => self.input_dim,
        }
    }

    /// Applies the fitted pipeline to a dataset.
    pub fn apply(&self, dataset: &Dataset) -> Result<Vec<VideoSnippets>> {
        if dataset.dim() != self.input_dim {
            return Err(RraeError::DimMismatch {
                op: "FittedPipeline::apply",
                left: format!("pipeline dim {}", self.input_dim),
                right: format!("dataset dim {}", dataset.dim()),
            });
        }
        let raw = segment_and_pool(&self.config, dataset)?;
        self.transform_pooled(raw)
    }

    fn transform_pooled(&self, raw: Vec<VideoSnippets>) -> Result<Vec<VideoSnippets>> {
        raw.into_iter()
            .map(|video| {
                let features = video
                    .features
                    .iter()
                    .map(|f| self.transform_vector(f))
                    .collect::<Result<Vec<_>>>()?;
                Ok(VideoSnippets {
                    video_id: video.video_id,
                    segmentation: video.segmentation,
                    features,
                })
            })
            .collect()
    }

    fn transform_vector(&self, v: &Vector) -> Result<Vector> {
        let scaled = match &self.standardizer {
            Some(s) => s.apply(v)?,
            None => v.clone(),
        };
        match &self.pca {
            Some(p) => p.project(&scaled),
            None => Ok(scaled),
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(PIPELINE_MAGIC)?;
        w.write_all(&PIPELINE_VERSION.to_le_bytes())?;
        w.write_all(&(self.config.min_units as u32).to_le_bytes())?;
        w.write_all(&(self.config.max_units as u32).to_le_bytes())?;
        w.write_all(&self.config.penalty.to_le_bytes())?;
        w.write_all(&[u8::from(self.config.standardize)])?;
        w.write_all(&self.config.pca_energy.unwrap_or(-1.0).to_le_bytes())?;
        w.write_all(&(self.config.window_len as u32).to_le_bytes())?;
        w.write_all(&(self.input_dim as u32).to_le_bytes())?;
        match &self.standardizer {
            None => w.write_all(&[0u8])?,
            Some(s) => {
                w.write_all(&[1u8])?;
                w.write_all(&(s.mean.len() as u32).to_le_bytes())?;
                for &v in s.mean.data() {
                    w.write_all(&v.to_le_bytes())?;
                }
                for &v in s.scale.data() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        match &self.pca {
            None => w.write_all(&[0u8])?,
            Some(p) => {
                w.write_all(&[1u8])?;
                p.write_to(w)?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read, path: &str) -> Result<FittedPipeline> {
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic, path)?;
        if &magic != PIPELINE_MAGIC {
            return Err(RraeError::MalformedHeader {
                path: path.into(),
                detail: format!("bad pipeline magic {magic:?}"),
            });
        }
        let version = read_u32(r, path)?;
        if version != PIPELINE_VERSION {
            return Err(RraeError::MalformedHeader {
                path: path.into(),
                detail: format!("unsupported pipeline version {version}"),
            });
        }
        let min_units = read_u32(r, path)? as usize;
        let max_units = read_u32(r, path)? as usize;
        let penalty = read_f64(r, path)?;
        let standardize = read_flag(r, path)?;
        let energy = read_f64(r, path)?;
        let window_len = read_u32(r, path)? as usize;
        let input_dim = read_u32(r, path)? as usize;
        let standardizer = if read_flag(r, path)? {
            let dim = read_u32(r, path)? as usize;
            let mean = Vector::from_vec(read_f64s(r, dim, path)?);
            let scale = Vector::from_vec(read_f64s(r, dim, path)?);
            Some(Standardizer { mean, scale })
        } else {
            None
        };
        let pca = if read_flag(r, path)? {
            Some(PcaModel::read_from(r, path)?)
        } else {
            None
        };
        Ok(FittedPipeline {
            config: PipelineConfig {
                min_units,
                max_units,
                penalty,
                standardize,
                pca_energy: if energy < 0.0 { None } else { Some(energy) },
                window_len,
            },
            standardizer,
            pca,
            input_dim,
        })
    }
}

fn read_flag(r: &mut impl Read, path: &str) -> Result<bool> {
    let mut b = [0u8; 1];
    read_exact(r, &mut b, path)?;
    Ok(b[0] != 0)
}

fn segment_and_pool(config: &PipelineConfig, dataset: &Dataset) -> Result<Vec<VideoSnippets>> {
    dataset
        .streams
        .iter()
        .map(|stream| {
            let seg = segment(stream, config.min_units, config.max_units, config.penalty)?;
            let features = pool(stream, &seg)?
                .into_iter()
                .map(|s| s.vector)
                .collect();
            Ok(VideoSnippets {
                video_id: stream.video_id.clone(),
                segmentation: seg,
                features,
            })
        })
        .collect()
}

/// The segmentation of every video under this pipeline's parameters.
pub fn dataset_segmentation(pipelines: &[VideoSnippets]) -> Segmentation {
    pipelines.iter().map(|v| v.segmentation.clone()).collect()
}
