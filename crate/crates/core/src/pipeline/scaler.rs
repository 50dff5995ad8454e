//! Per-dimension standardization to zero mean, unit variance.

use crate::error::{Result, RraeError};
use crate::numeric::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vector,
    /// Per-dimension standard deviation; zero-variance dimensions keep 1.0
    /// so they pass through unchanged after centering.
    pub scale: Vector,
}

impl Standardizer {
    pub fn fit(vectors: &[Vector]) -> Result<Standardizer> {
        if vectors.len() < 2 {
            return Err(RraeError::config(format!(
                "standardizer needs at least 2 samples, got {}",
                vectors.len()
            )));
        }
        let dim = vectors[0].len();
        let n = vectors.len() as f64;
        let mut mean = Vector::zeros(dim);
        for v in vectors {
            mean.axpy(1.0 / n, v)?;
        }
        let mut var = vec![0.0; dim];
        for v in vectors {
            for d in 0..dim {
                let c = v.get(d) - mean.get(d);
                var[d] += c * c;
            }
        }
        let scale = Vector::from_vec(
            var.into_iter()
                .map(|s| {
                    let sd = (s / (n - 1.0)).sqrt();
                    if sd > 1e-12 {
                        sd
                    } else {
                        1.0
                    }
                })
                .collect(),
        );
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        if v.len() != self.mean.len() {
            return Err(RraeError::DimMismatch {
                op: "Standardizer::apply",
                left: format!("dim {}", self.mean.len()),
                right: format!("len {}", v.len()),
            });
        }
        Ok(Vector::from_vec(
            (0..v.len())
                .map(|d| (v.get(d) - self.mean.get(d)) / self.scale.get(d))
                .collect(),
        ))
    }
}
