//! PCA fitting, projection, and reconstruction with an energy-fraction
//! component cutoff.

use crate::error::{Result, RraeError};
use crate::numeric::{Matrix, Vector};
use nalgebra::{DMatrix, SymmetricEigen};
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"RPCA";
const VERSION: u32 = 1;

/// Principal component model. `components` holds the top-k eigenvectors of
/// the sample covariance as rows; `eigenvalues` keeps the full descending
/// spectrum so discarded energy stays reportable.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vector,
    pub components: Matrix,
    pub eigenvalues: Vector,
    pub retained_energy: f64,
    pub target_energy: f64,
}

impl PcaModel {
    /// Fits on `vectors`, keeping the smallest component count whose
    /// cumulative eigenvalue fraction reaches `target_energy`.
    pub fn fit(vectors: &[Vector], target_energy: f64) -> Result<PcaModel> {
        if vectors.len() < 2 {
            return Err(RraeError::config(format!(
                "PCA needs at least 2 samples, got {}",
                vectors.len()
            )));
        }
        if !(target_energy > 0.0 && target_energy <= 1.0) {
            return Err(RraeError::config(format!(
                "PCA target energy must be in (0, 1], got {target_energy}"
            )));
        }
        let dim = vectors[0].len();
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(RraeError::DimMismatch {
                op: "PcaModel::fit",
                left: format!("dim {dim}"),
                right: format!("len {}", v.len()),
            });
        }
        let n = vectors.len() as f64;
        let mut mean = Vector::zeros(dim);
        for v in vectors {
            mean.axpy(1.0 / n, v)?;
        }

        // Sample covariance, normalized by n - 1.
        let mut cov = vec![0.0; dim * dim];
        let mut centered = vec![0.0; dim];
        for v in vectors {
            for d in 0..dim {
                centered[d] = v.get(d) - mean.get(d);
            }
            for r in 0..dim {
                let cr = centered[r];
                let row = &mut cov[r * dim..(r + 1) * dim];
                for (c, &cc) in centered.iter().enumerate() {
                    row[c] += cr * cc;
                }
            }
        }
        let denom = n - 1.0;
        for entry in &mut cov {
            *entry /= denom;
        }

        let eigen = SymmetricEigen::new(DMatrix::from_row_slice(dim, dim, &cov));
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| {
            eigen.eigenvalues[b]
                .partial_cmp(&eigen.eigenvalues[a])
                .expect("eigenvalues are finite")
                .then(a.cmp(&b))
        });

        let eigenvalues: Vec<f64> = order
            .iter()
            .map(|&i| eigen.eigenvalues[i].max(0.0))
            .collect();
        let total: f64 = eigenvalues.iter().sum();
        if total <= 0.0 {
            return Err(RraeError::Numeric(
                "PCA input has zero total variance".into(),
            ));
        }

        let mut k = 0;
        let mut cum = 0.0;
        for &ev in &eigenvalues {
            k += 1;
            cum += ev;
            if cum / total >= target_energy - 1e-12 {
                break;
            }
        }

        let mut components = Matrix::zeros(k, dim);
        for (row, &i) in order.iter().take(k).enumerate() {
            let col = eigen.eigenvectors.column(i);
            // Orient deterministically: the largest-magnitude entry is
            // made positive so refits are byte-stable.
            let mut pivot = 0usize;
            for d in 1..dim {
                if col[d].abs() > col[pivot].abs() {
                    pivot = d;
                }
            }
            let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
            for d in 0..dim {
                components.set(row, d, sign * col[d]);
            }
        }

        Ok(PcaModel {
            mean,
            components,
            eigenvalues: Vector::from_vec(eigenvalues),
            retained_energy: cum / total,
            target_energy,
        })
    }

    /// Fits with a fixed component count instead of an energy target.
    pub fn fit_k(vectors: &[Vector], k: usize) -> Result<PcaModel> {
        if k == 0 {
            return Err(RraeError::config("PCA component count must be >= 1"));
        }
        let full = PcaModel::fit(vectors, 1.0)?;
        let dim = full.mean.len();
        if k > dim {
            return Err(RraeError::config(format!(
                "PCA component count {k} exceeds dimension {dim}"
            )));
        }
        // Rank-deficient data may retain fewer than k directions.
        let k = k.min(full.n_components());
        let total: f64 = full.eigenvalues.data().iter().sum();
        let kept: f64 = full.eigenvalues.data().iter().take(k).sum();
        let mut components = Matrix::zeros(k, dim);
        for r in 0..k {
            for d in 0..dim {
                components.set(r, d, full.components.get(r, d));
            }
        }
        Ok(PcaModel {
            mean: full.mean,
            components,
            eigenvalues: full.eigenvalues,
            retained_energy: kept / total,
            target_energy: kept / total,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    /// `components · (v − mean)`.
    pub fn project(&self, v: &Vector) -> Result<Vector> {
        let centered = v.sub(&self.mean)?;
        self.components.matvec(&centered)
    }

    /// `componentsᵀ · z + mean`.
    pub fn lift(&self, z: &Vector) -> Result<Vector> {
        let mut out = self.components.matvec_t(z)?;
        out.axpy(1.0, &self.mean)?;
        Ok(out)
    }

    /// Squared distance from `v` to the retained affine subspace.
    pub fn residual_sq(&self, v: &Vector) -> Result<f64> {
        let reconstructed = self.lift(&self.project(v)?)?;
        v.dist_sq(&reconstructed)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let d = self.input_dim();
        let k = self.n_components();
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(d as u32).to_le_bytes())?;
        w.write_all(&(k as u32).to_le_bytes())?;
        w.write_all(&(self.eigenvalues.len() as u32).to_le_bytes())?;
        for &v in self.mean.data() {
            w.write_all(&v.to_le_bytes())?;
        }
        for &v in self.eigenvalues.data() {
            w.write_all(&v.to_le_bytes())?;
        }
        for &v in self.components.data() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.retained_energy.to_le_bytes())?;
        w.write_all(&self.target_energy.to_le_bytes())?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read, path: &str) -> Result<PcaModel> {
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic, path)?;
        if &magic != MAGIC {
            return Err(RraeError::MalformedHeader {
                path: path.into(),
                detail: format!("bad PCA magic {magic:?}"),
            });
        }
        let version = read_u32(r, path)?;
        if version != VERSION {
            return Err(RraeError::MalformedHeader {
                path: path.into(),
                detail: format!("unsupported PCA version {version}"),
            });
        }
        let d = read_u32(r, path)? as usize;
        let k = read_u32(r, path)? as usize;
        let n_eig = read_u32(r, path)? as usize;
        let mean = Vector::from_vec(read_f64s(r, d, path)?);
        let eigenvalues = Vector::from_vec(read_f64s(r, n_eig, path)?);
        let components = Matrix::from_vec(k, d, read_f64s(r, k * d, path)?)?;
        let retained_energy = read_f64(r, path)?;
        let target_energy = read_f64(r, path)?;
        Ok(PcaModel {
            mean,
            components,
            eigenvalues,
            retained_energy,
            target_energy,
        })
    }
}

pub(crate) fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| RraeError::TruncatedPayload {
        path: path.into(),
        detail: e.to_string(),
    })
}

pub(crate) fn read_u32(r: &mut impl Read, path: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, path)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_f64(r: &mut impl Read, path: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, path)?;
    Ok(f64::from_le_bytes(b))
}

pub(crate) fn read_f64s(r: &mut impl Read, n: usize, path: &str) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n];
    for v in &mut out {
        *v = read_f64(r, path)?;
    }
    Ok(out)
}
