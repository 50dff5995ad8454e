//! Flat-parameter views over model tensors.
//!
//! Models expose their tensors in a fixed named order. The trainer, the
//! gradient checks, and the serialization code all walk that one ordering,
//! so a flat `Vec<f64>` of parameters or gradients always lines up with the
//! model's own fields.

use crate::error::{Result, RraeError};
use crate::numeric::{Matrix, Vector};

#[derive(Debug, Clone, Copy)]
pub enum FieldRef<'a> {
    Mat(&'a Matrix),
    Vec(&'a Vector),
}

pub enum FieldMut<'a> {
    Mat(&'a mut Matrix),
    Vec(&'a mut Vector),
}

/// Shape and role of one tensor in a model's flat layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorMeta {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Bias vectors are excluded from weight decay.
    pub bias: bool,
}

impl TensorMeta {
    pub fn len(&self) -> usize {
        self.rows * self.cols.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn is_bias_name(name: &str) -> bool {
    name.rsplit('.').next().is_some_and(|n| n.starts_with("b_"))
}

pub fn meta_of(name: &str, field: &FieldRef) -> TensorMeta {
    match field {
        FieldRef::Mat(m) => TensorMeta {
            name: name.to_string(),
            rows: m.rows(),
            cols: m.cols(),
            bias: is_bias_name(name),
        },
        FieldRef::Vec(v) => TensorMeta {
            name: name.to_string(),
            rows: v.len(),
            cols: 0,
            bias: is_bias_name(name),
        },
    }
}

/// One example's evaluation under the robust loss.
#[derive(Debug, Clone)]
pub struct ExampleEval {
    pub loss: f64,
    /// Squared reconstruction error before exponentiation.
    pub plain_error: f64,
    /// Gradient with respect to every parameter, in flat layout order.
    pub grad: Vec<f64>,
}

/// A model whose parameters can be traversed in a fixed order. Examples are
/// whatever the concrete model trains on.
pub trait ParamModel: Clone {
    type Example;

    /// Tensors in flat order.
    fn fields(&self) -> Vec<(&'static str, FieldRef<'_>)>;
    fn fields_mut(&mut self) -> Vec<(&'static str, FieldMut<'_>)>;

    /// Robust loss, plain error, and the flat gradient for one example.
    fn loss_and_grad(&self, example: &Self::Example, lambda: f64) -> Result<ExampleEval>;

    /// Plain squared reconstruction error of one example.
    fn plain_error(&self, example: &Self::Example) -> Result<f64>;

    fn layout(&self) -> Vec<TensorMeta> {
        self.fields()
            .iter()
            .map(|(name, f)| meta_of(name, f))
            .collect()
    }

    fn flat_len(&self) -> usize {
        self.fields()
            .iter()
            .map(|(_, f)| match f {
                FieldRef::Mat(m) => m.data().len(),
                FieldRef::Vec(v) => v.len(),
            })
            .sum()
    }

    fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        for (_, f) in self.fields() {
            match f {
                FieldRef::Mat(m) => out.extend_from_slice(m.data()),
                FieldRef::Vec(v) => out.extend_from_slice(v.data()),
            }
        }
        out
    }

    fn set_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.flat_len();
        if flat.len() != expected {
            return Err(RraeError::DimMismatch {
                op: "set_from_flat",
                left: format!("{expected} params"),
                right: format!("{} values", flat.len()),
            });
        }
        let mut cursor = 0usize;
        for (_, f) in self.fields_mut() {
            match f {
                FieldMut::Mat(m) => {
                    let n = m.data().len();
                    m.data_mut().copy_from_slice(&flat[cursor..cursor + n]);
                    cursor += n;
                }
                FieldMut::Vec(v) => {
                    let n = v.len();
                    v.data_mut().copy_from_slice(&flat[cursor..cursor + n]);
                    cursor += n;
                }
            }
        }
        Ok(())
    }

    /// Mask over the flat layout: true where weight decay applies.
    fn decay_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.flat_len());
        for meta in self.layout() {
            mask.extend(std::iter::repeat(!meta.bias).take(meta.len()));
        }
        mask
    }
}

/// Central-difference gradient of the loss at the model's current
/// parameters. Test and diagnostic tool; exact analytic gradients are the
/// models' job.
pub fn finite_difference_grad<M: ParamModel>(
    model: &M,
    example: &M::Example,
    lambda: f64,
    step: f64,
) -> Result<Vec<f64>> {
    let theta = model.to_flat();
    let mut grad = vec![0.0; theta.len()];
    let mut work = model.clone();
    for i in 0..theta.len() {
        let h = step * (1.0 + theta[i].abs());
        let mut plus = theta.clone();
        plus[i] += h;
        work.set_from_flat(&plus)?;
        let lp = work.loss_and_grad(example, lambda)?.loss;
        let mut minus = theta.clone();
        minus[i] -= h;
        work.set_from_flat(&minus)?;
        let lm = work.loss_and_grad(example, lambda)?.loss;
        grad[i] = (lp - lm) / (2.0 * h);
    }
    Ok(grad)
}

/// Largest relative disagreement between two gradient vectors, with an
/// absolute floor for near-zero entries.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}
