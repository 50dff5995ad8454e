//! Single-hidden-layer auto-encoder with linear activations.

use crate::error::{Result, RraeError};
use crate::loss::{grad_prefactor, loss_of_error, GRAD_EPS_CLAMP};
use crate::numeric::{init_uniform, xavier_scale, Matrix, Rng, Vector};
use crate::params::{FieldMut, FieldRef, ParamModel};

#[derive(Debug, Clone, PartialEq)]
pub struct AeModel {
    pub w_enc: Matrix,
    pub b_enc: Vector,
    pub w_dec: Matrix,
    pub b_dec: Vector,
}

#[derive(Debug, Clone)]
pub struct AeGradients {
    pub w_enc: Matrix,
    pub b_enc: Vector,
    pub w_dec: Matrix,
    pub b_dec: Vector,
}

impl AeModel {
    /// Hidden width defaults to half the input width.
    pub fn new(input_dim: usize, rng: &mut Rng) -> Result<AeModel> {
        if input_dim < 2 {
            return Err(RraeError::config(format!(
                "auto-encoder needs input dim >= 2, got {input_dim}"
            )));
        }
        AeModel::with_hidden(input_dim, input_dim / 2, rng)
    }

    pub fn with_hidden(input_dim: usize, hidden_dim: usize, rng: &mut Rng) -> Result<AeModel> {
        if hidden_dim == 0 {
            return Err(RraeError::config("hidden dim must be >= 1"));
        }
        let w_enc = init_uniform(rng, hidden_dim, input_dim, xavier_scale(input_dim, hidden_dim))?;
        let w_dec = init_uniform(rng, input_dim, hidden_dim, xavier_scale(hidden_dim, input_dim))?;
        Ok(AeModel {
            w_enc,
            b_enc: Vector::zeros(hidden_dim),
            w_dec,
            b_dec: Vector::zeros(input_dim),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.w_enc.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_enc.rows()
    }

    /// `h = W x + b`, `y = W' h + b'`.
    pub fn forward(&self, x: &Vector) -> Result<(Vector, Vector)> {
        let mut h = self.w_enc.matvec(x)?;
        h.axpy(1.0, &self.b_enc)?;
        let mut y = self.w_dec.matvec(&h)?;
        y.axpy(1.0, &self.b_dec)?;
        Ok((h, y))
    }

    pub fn reconstruction_error(&self, x: &Vector) -> Result<f64> {
        let (_, y) = self.forward(x)?;
        x.dist_sq(&y)
    }

    /// Exact gradients of `(‖x − y‖²)^λ` with respect to every parameter.
    pub fn backward(&self, x: &Vector, lambda: f64) -> Result<(f64, AeGradients)> {
        let (h, y) = self.forward(x)?;
        let err_sq = x.dist_sq(&y)?;
        let loss = loss_of_error(err_sq, lambda);
        let pref = grad_prefactor(err_sq, lambda, GRAD_EPS_CLAMP);

        // dL/dy = pref * 2 (y - x)
        let mut dy = y.sub(x)?;
        for v in dy.data_mut() {
            *v *= 2.0 * pref;
        }

        let mut w_dec = Matrix::zeros(self.w_dec.rows(), self.w_dec.cols());
        w_dec.add_outer(&dy, &h, 1.0)?;
        let b_dec = dy.clone();
        let dh = self.w_dec.matvec_t(&dy)?;
        let mut w_enc = Matrix::zeros(self.w_enc.rows(), self.w_enc.cols());
        w_enc.add_outer(&dh, x, 1.0)?;
        let b_enc = dh;

        Ok((
            loss,
            AeGradients {
                w_enc,
                b_enc,
                w_dec,
                b_dec,
            },
        ))
    }
}

impl ParamModel for AeModel {
    type Example = Vector;

    fn fields(&self) -> Vec<(&'static str, FieldRef<'_>)> {
        vec![
            ("w_enc", FieldRef::Mat(&self.w_enc)),
            ("b_enc", FieldRef::Vec(&self.b_enc)),
            ("w_dec", FieldRef::Mat(&self.w_dec)),
            ("b_dec", FieldRef::Vec(&self.b_dec)),
        ]
    }

    fn fields_mut(&mut self) -> Vec<(&'static str, FieldMut<'_>)> {
        vec![
            ("w_enc", FieldMut::Mat(&mut self.w_enc)),
            ("b_enc", FieldMut::Vec(&mut self.b_enc)),
            ("w_dec", FieldMut::Mat(&mut self.w_dec)),
            ("b_dec", FieldMut::Vec(&mut self.b_dec)),
        ]
    }

    fn loss_and_grad(&self, example: &Vector, lambda: f64) -> Result<(f64, Vec<f64>)> {
        let (loss, grads) = self.backward(example, lambda)?;
        let mut flat = Vec::with_capacity(self.flat_len());
        flat.extend_from_slice(grads.w_enc.data());
        flat.extend_from_slice(grads.b_enc.data());
        flat.extend_from_slice(grads.w_dec.data());
        flat.extend_from_slice(grads.b_dec.data());
        Ok((loss, flat))
    }

    fn plain_error(&self, example: &Vector) -> Result<f64> {
        self.reconstruction_error(example)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{finite_difference_grad, max_relative_error};

    fn zero_model(d: usize, h: usize) -> AeModel {
        AeModel {
            w_enc: Matrix::zeros(h, d),
            b_enc: Vector::zeros(h),
            w_dec: Matrix::zeros(d, h),
            b_dec: Vector::zeros(d),
        }
    }

    fn random_model(d: usize, h: usize, seed: u64) -> AeModel {
        let mut rng = Rng::new(seed);
        AeModel::with_hidden(d, h, &mut rng).unwrap()
    }

    fn random_vector(rng: &mut Rng, d: usize) -> Vector {
        Vector::from_vec((0..d).map(|_| rng.normal(0.0, 1.0)).collect())
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let m = zero_model(3, 1);
        let (_, y) = m.forward(&Vector::from_slice(&[5.0, -2.0, 9.0])).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hand_forward_case() {
        // W = [[1, 0]], b = 0, W' = [[1], [0]], b' = 0, x = (3, 5).
        let m = AeModel {
            w_enc: Matrix::from_rows(1, 2, &[1.0, 0.0]).unwrap(),
            b_enc: Vector::zeros(1),
            w_dec: Matrix::from_rows(2, 1, &[1.0, 0.0]).unwrap(),
            b_dec: Vector::zeros(2),
        };
        let (h, y) = m.forward(&Vector::from_slice(&[3.0, 5.0])).unwrap();
        assert_eq!(h.data(), &[3.0]);
        assert_eq!(y.data(), &[3.0, 0.0]);
    }

    #[test]
    fn orthonormal_tied_rows_reconstruct_subspace() {
        // W spans the x-y plane of R³, W' = Wᵀ: points in the plane map to
        // themselves.
        let m = AeModel {
            w_enc: Matrix::from_rows(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap(),
            b_enc: Vector::zeros(2),
            w_dec: Matrix::from_rows(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap(),
            b_dec: Vector::zeros(3),
        };
        let x = Vector::from_slice(&[0.7, -1.3, 0.0]);
        let (_, y) = m.forward(&x).unwrap();
        assert!(x.dist_sq(&y).unwrap() < 1e-30);
    }

    #[test]
    fn perfect_reconstruction_has_zero_gradients() {
        let m = AeModel {
            w_enc: Matrix::identity(2),
            b_enc: Vector::zeros(2),
            w_dec: Matrix::identity(2),
            b_dec: Vector::zeros(2),
        };
        let x = Vector::from_slice(&[1.5, -0.5]);
        for lambda in [0.25, 0.5, 1.0, 2.0] {
            let (loss, grads) = m.backward(&x, lambda).unwrap();
            assert_eq!(loss, 0.0);
            assert!(grads.w_enc.data().iter().all(|&v| v == 0.0));
            assert!(grads.b_enc.data().iter().all(|&v| v == 0.0));
            assert!(grads.w_dec.data().iter().all(|&v| v == 0.0));
            assert!(grads.b_dec.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(40);
        for (i, lambda) in [0.25, 0.5, 1.0, 2.0].into_iter().enumerate() {
            let m = random_model(4, 2, 100 + i as u64);
            let x = random_vector(&mut rng, 4);
            let (_, analytic) = m.loss_and_grad(&x, lambda).unwrap();
            let fd = finite_difference_grad(&m, &x, lambda, 1e-5).unwrap();
            let err = max_relative_error(&analytic, &fd, 1e-8);
            assert!(err < 1e-6, "lambda={lambda} rel err {err}");
        }
    }

    /// Independent closed-form squared-loss backprop, written directly from
    /// the chain rule with scalar loops.
    fn squared_loss_backprop_oracle(m: &AeModel, x: &Vector) -> Vec<f64> {
        let d = m.input_dim();
        let h_dim = m.hidden_dim();
        let mut h = vec![0.0; h_dim];
        for j in 0..h_dim {
            let mut acc = m.b_enc.get(j);
            for k in 0..d {
                acc += m.w_enc.get(j, k) * x.get(k);
            }
            h[j] = acc;
        }
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut acc = m.b_dec.get(i);
            for (j, &hj) in h.iter().enumerate() {
                acc += m.w_dec.get(i, j) * hj;
            }
            y[i] = acc;
        }
        let dy: Vec<f64> = (0..d).map(|i| 2.0 * (y[i] - x.get(i))).collect();
        let mut dh = vec![0.0; h_dim];
        for j in 0..h_dim {
            for (i, &dyi) in dy.iter().enumerate() {
                dh[j] += m.w_dec.get(i, j) * dyi;
            }
        }
        let mut flat = Vec::new();
        for j in 0..h_dim {
            for k in 0..d {
                flat.push(dh[j] * x.get(k));
            }
        }
        flat.extend_from_slice(&dh);
        for &dyi in &dy {
            for &hj in &h {
                flat.push(dyi * hj);
            }
        }
        flat.extend_from_slice(&dy);
        flat
    }

    #[test]
    fn lambda_one_equals_classic_squared_loss_backprop() {
        let mut rng = Rng::new(77);
        for seed in 0..10 {
            let m = random_model(5, 2, 500 + seed);
            let x = random_vector(&mut rng, 5);
            let (_, analytic) = m.loss_and_grad(&x, 1.0).unwrap();
            let oracle = squared_loss_backprop_oracle(&m, &x);
            let err = max_relative_error(&analytic, &oracle, 1e-12);
            assert!(err < 1e-10, "seed={seed} rel err {err}");
        }
    }

    #[test]
    fn flat_roundtrip_preserves_model() {
        let m = random_model(6, 3, 9);
        let mut copy = m.clone();
        let flat = m.to_flat();
        assert_eq!(flat.len(), m.flat_len());
        copy.set_from_flat(&flat).unwrap();
        assert_eq!(m, copy);
        let mask = m.decay_mask();
        let n_bias: usize = mask.iter().filter(|&&b| !b).count();
        assert_eq!(n_bias, 3 + 6);
    }
}
