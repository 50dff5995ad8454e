//! Synthetic contaminated datasets.
//!
//! Highlight (inlier) snippets are drawn from a low-rank linear subspace
//! with ambient noise and follow a deterministic progression along the
//! subspace within each highlight run, so recurrent models have temporal
//! context to exploit. Non-highlight (outlier) snippets are isotropic with
//! a larger sigma. Ground-truth labels ride along, aligned to the
//! generator's own snippet boundaries.

use crate::data::stream::{Dataset, FeatureStream, LabelSet, SnippetLabel};
use crate::error::{Result, RraeError};
use crate::numeric::{Matrix, Rng, Vector};
use crate::pipeline::segment::{
    SnippetRange, VideoSegmentation, DEFAULT_MAX_UNITS, DEFAULT_MIN_UNITS,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub dim: usize,
    pub n_videos: usize,
    /// Inclusive (min, max) units per video.
    pub units_per_video: (usize, usize),
    /// Target fraction of highlight snippets among all snippets, in (0, 1).
    pub h_ratio: f64,
    /// Target fraction of videos containing at least one highlight, in (0, 1].
    pub coverage: f64,
    /// Rank of the inlier subspace; must be below `dim`.
    pub inlier_rank: usize,
    /// Ambient noise sigma on inlier units.
    pub noise_sigma: f64,
    /// Isotropic sigma of outlier units.
    pub outlier_sigma: f64,
    /// Autoregressive order of the in-subspace progression.
    pub temporal_order: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dim: 32,
            n_videos: 60,
            units_per_video: (120, 180),
            h_ratio: 0.3,
            coverage: 0.7,
            inlier_rank: 4,
            noise_sigma: 0.25,
            outlier_sigma: 1.0,
            temporal_order: 1,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(RraeError::config("dim must be >= 1"));
        }
        if self.n_videos == 0 {
            return Err(RraeError::config("n_videos must be >= 1"));
        }
        let (lo, hi) = self.units_per_video;
        if lo < DEFAULT_MIN_UNITS || hi < lo {
            return Err(RraeError::config(format!(
                "units_per_video ({lo}, {hi}) must satisfy {DEFAULT_MIN_UNITS} <= min <= max"
            )));
        }
        if !(self.h_ratio > 0.0 && self.h_ratio < 1.0) {
            return Err(RraeError::config(format!(
                "h_ratio must be in (0, 1), got {}",
                self.h_ratio
            )));
        }
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            return Err(RraeError::config(format!(
                "coverage must be in (0, 1], got {}",
                self.coverage
            )));
        }
        if self.h_ratio > self.coverage {
            return Err(RraeError::config(format!(
                "h_ratio {} infeasible at coverage {}: covered videos would need more \
                 highlight snippets than they have",
                self.h_ratio, self.coverage
            )));
        }
        if self.inlier_rank == 0 || self.inlier_rank >= self.dim {
            return Err(RraeError::config(format!(
                "inlier_rank {} must be in [1, dim) with dim {}",
                self.inlier_rank, self.dim
            )));
        }
        if self.noise_sigma < 0.0 || self.outlier_sigma < 0.0 {
            return Err(RraeError::config("sigmas must be non-negative"));
        }
        if self.temporal_order == 0 {
            return Err(RraeError::config("temporal_order must be >= 1"));
        }
        Ok(())
    }
}

/// Generation internals exposed for diagnostics: the inlier subspace basis
/// (columns) actually used.
#[derive(Debug, Clone)]
pub struct SynthTruth {
    pub basis: Matrix,
}

/// Deterministic in-subspace progression: a near-identity rotation of the
/// running mean of the last `order` coordinates, plus a fixed drift.
struct SubspaceWalk {
    rotation: Matrix,
    drift: Vector,
    order: usize,
    history: Vec<Vector>,
}

impl SubspaceWalk {
    fn start(&mut self, z0: Vector) {
        self.history.clear();
        self.history.push(z0);
    }

    fn current(&self) -> &Vector {
        self.history.last().expect("walk started")
    }

    fn advance(&mut self) {
        let take = self.order.min(self.history.len());
        let mut mean = Vector::zeros(self.drift.len());
        for z in &self.history[self.history.len() - take..] {
            mean.axpy(1.0 / take as f64, z).expect("walk dims agree");
        }
        let mut next = self
            .rotation
            .matvec(&mean)
            .expect("rotation matches subspace dim");
        next.axpy(1.0, &self.drift).expect("walk dims agree");
        self.history.push(next);
        if self.history.len() > self.order + 1 {
            self.history.remove(0);
        }
    }
}

/// Gram-Schmidt orthonormalization of the columns of `m`, in place.
fn orthonormalize_columns(m: &mut Matrix) {
    let (rows, cols) = (m.rows(), m.cols());
    for c in 0..cols {
        for prev in 0..c {
            let mut dot = 0.0;
            for r in 0..rows {
                dot += m.get(r, c) * m.get(r, prev);
            }
            for r in 0..rows {
                m.set(r, c, m.get(r, c) - dot * m.get(r, prev));
            }
        }
        let mut norm = 0.0;
        for r in 0..rows {
            norm += m.get(r, c) * m.get(r, c);
        }
        let norm = norm.sqrt().max(1e-12);
        for r in 0..rows {
            m.set(r, c, m.get(r, c) / norm);
        }
    }
}

fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.normal(0.0, 1.0)).collect();
    Matrix::from_vec(rows, cols, data).expect("shape matches generated data")
}

fn gaussian_vector(rng: &mut Rng, len: usize, sigma: f64) -> Vector {
    Vector::from_vec((0..len).map(|_| rng.normal(0.0, sigma)).collect())
}

/// Splits `n` units (n >= min) into snippet lengths within
/// [DEFAULT_MIN_UNITS, DEFAULT_MAX_UNITS].
fn snippet_lengths(rng: &mut Rng, n: usize) -> Vec<usize> {
    let (min, max) = (DEFAULT_MIN_UNITS, DEFAULT_MAX_UNITS);
    let mut out = Vec::new();
    let mut rem = n;
    while rem > 0 {
        if rem <= max {
            out.push(rem);
            rem = 0;
        } else if rem < max + min {
            // Leaving the tail as-is would strand fewer than `min` units.
            let len = rem - min;
            out.push(len);
            rem = min;
        } else {
            let len = rng.uniform_usize(min, max);
            out.push(len);
            rem -= len;
        }
    }
    out
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    Ok(generate_synthetic_with_truth(cfg)?.0)
}

pub fn generate_synthetic_with_truth(cfg: &SynthConfig) -> Result<(Dataset, SynthTruth)> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);
    let rank = cfg.inlier_rank;

    let mut basis = gaussian_matrix(&mut rng, cfg.dim, rank);
    orthonormalize_columns(&mut basis);

    // Near-identity rotation in subspace coordinates.
    let skew_src = gaussian_matrix(&mut rng, rank, rank);
    let mut rotation = Matrix::identity(rank);
    for r in 0..rank {
        for c in 0..rank {
            let skew = 0.35 * 0.5 * (skew_src.get(r, c) - skew_src.get(c, r));
            rotation.set(r, c, rotation.get(r, c) + skew);
        }
    }
    orthonormalize_columns(&mut rotation);
    let mut drift = gaussian_vector(&mut rng, rank, 1.0);
    let drift_norm = drift.norm().max(1e-12);
    drift = drift.scale(0.25 / drift_norm);

    let mut walk = SubspaceWalk {
        rotation,
        drift,
        order: cfg.temporal_order,
        history: Vec::new(),
    };

    // Exact coverage: round(coverage * n) videos receive highlights.
    let n_covered = ((cfg.coverage * cfg.n_videos as f64).round() as usize)
        .clamp(1, cfg.n_videos);
    let mut order: Vec<usize> = (0..cfg.n_videos).collect();
    rng.shuffle(&mut order);
    let mut covered = vec![false; cfg.n_videos];
    for &v in order.iter().take(n_covered) {
        covered[v] = true;
    }
    // Highlight fraction within covered videos that realizes the global
    // target.
    let per_video_ratio = cfg.h_ratio / (n_covered as f64 / cfg.n_videos as f64);

    let mut streams = Vec::with_capacity(cfg.n_videos);
    let mut segmentation = Vec::with_capacity(cfg.n_videos);
    let mut labels = Vec::with_capacity(cfg.n_videos);

    for video in 0..cfg.n_videos {
        let n_units = rng.uniform_usize(cfg.units_per_video.0, cfg.units_per_video.1);
        let lengths = snippet_lengths(&mut rng, n_units);
        let n_snips = lengths.len();

        let snippet_labels = if covered[video] {
            let target_h = ((per_video_ratio * n_snips as f64).round() as usize)
                .clamp(1, n_snips);
            allocate_highlight_runs(&mut rng, n_snips, target_h)
        } else {
            vec![false; n_snips]
        };

        let mut ranges = Vec::with_capacity(n_snips);
        let mut units: Vec<Vector> = Vec::with_capacity(n_units);
        let mut cursor = 0usize;
        let mut in_run = false;
        for (&len, &is_highlight) in lengths.iter().zip(&snippet_labels) {
            ranges.push(SnippetRange {
                start: cursor,
                end: cursor + len,
                short: false,
            });
            cursor += len;
            if is_highlight {
                if !in_run {
                    walk.start(gaussian_vector(&mut rng, rank, 1.0));
                    in_run = true;
                }
                for _ in 0..len {
                    let z = walk.current().clone();
                    let mut x = basis.matvec(&z).expect("basis matches dim");
                    if cfg.noise_sigma > 0.0 {
                        let noise = gaussian_vector(&mut rng, cfg.dim, cfg.noise_sigma);
                        x.axpy(1.0, &noise).expect("dims agree");
                    }
                    units.push(x);
                    walk.advance();
                }
            } else {
                in_run = false;
                for _ in 0..len {
                    units.push(if cfg.outlier_sigma > 0.0 {
                        gaussian_vector(&mut rng, cfg.dim, cfg.outlier_sigma)
                    } else {
                        Vector::zeros(cfg.dim)
                    });
                }
            }
        }

        streams.push(FeatureStream::new(
            format!("v{video:04}"),
            cfg.dim,
            units,
        )?);
        segmentation.push(VideoSegmentation { ranges });
        labels.push(
            snippet_labels
                .iter()
                .map(|&h| {
                    if h {
                        SnippetLabel::Highlight
                    } else {
                        SnippetLabel::NonHighlight
                    }
                })
                .collect(),
        );
    }

    let dataset = Dataset::new(format!("synth-d{}-s{}", cfg.dim, cfg.seed), streams)?
        .with_labels(LabelSet {
            segmentation,
            labels,
        })?;
    Ok((dataset, SynthTruth { basis }))
}

/// Distributes `target_h` highlight snippets over `n_snips` positions as
/// 1-3 contiguous runs at deterministic random gaps.
fn allocate_highlight_runs(rng: &mut Rng, n_snips: usize, target_h: usize) -> Vec<bool> {
    let target_h = target_h.min(n_snips);
    if target_h == n_snips {
        return vec![true; n_snips];
    }
    let n_non = n_snips - target_h;
    let max_runs = target_h.min(3).min(n_non + 1);
    let n_runs = if max_runs <= 1 {
        1
    } else {
        rng.uniform_usize(1, max_runs)
    };
    // Run sizes: split target_h into n_runs parts, each >= 1.
    let mut sizes = vec![1usize; n_runs];
    for _ in 0..target_h - n_runs {
        let i = rng.uniform_usize(0, n_runs - 1);
        sizes[i] += 1;
    }
    // Place runs into gaps between non-highlight snippets. With g
    // non-highlight snippets there are g + 1 gaps; distinct gaps keep the
    // runs non-adjacent.
    let mut gaps: Vec<usize> = (0..=n_non).collect();
    rng.shuffle(&mut gaps);
    let mut chosen = gaps[..n_runs.min(gaps.len())].to_vec();
    chosen.sort_unstable();

    let mut out = Vec::with_capacity(n_snips);
    let mut run_iter = chosen.iter().zip(&sizes).peekable();
    for gap in 0..=n_non {
        if let Some(&(&g, &size)) = run_iter.peek() {
            if g == gap {
                out.extend(std::iter::repeat(true).take(size));
                run_iter.next();
            }
        }
        if gap < n_non {
            out.push(false);
        }
    }
    debug_assert_eq!(out.len(), n_snips);
    out
}
