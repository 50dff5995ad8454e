//! Bidirectional peephole-LSTM auto-encoder with backpropagation through
//! time.
//!
//! Each training example is a fixed-length window of consecutive snippet
//! features. Two LSTM directions consume the window left-to-right and
//! right-to-left from zero initial states; the hidden vectors aligned at
//! each time step are concatenated and linearly decoded back to the input
//! dimension. Peephole weights are diagonal: gates read the cell state
//! through an elementwise product.

use crate::error::{Result, RraeError};
use crate::loss::{grad_prefactor, loss_of_error, GRAD_EPS_CLAMP};
use crate::numeric::{init_uniform, sigmoid, tanh_vec, xavier_scale, Matrix, Rng, Vector};
use crate::params::{FieldMut, FieldRef, ParamModel};
use serde::{Deserialize, Serialize};

/// How a window's per-step squared errors combine into one training loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowLossMode {
    /// `(mean_t ‖x_t − y_t‖²)^λ` — one exponentiation per example.
    ExponentOfMean,
    /// `mean_t (‖x_t − y_t‖²)^λ` — the exponent applied per time step.
    MeanOfExponents,
}

impl Default for WindowLossMode {
    fn default() -> Self {
        WindowLossMode::ExponentOfMean
    }
}

/// One direction's parameters. Gate order everywhere: cell candidate,
/// input, forget, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_xc: Matrix,
    pub w_hc: Matrix,
    pub b_c: Vector,
    pub w_xi: Matrix,
    pub w_hi: Matrix,
    pub w_ci: Vector,
    pub b_i: Vector,
    pub w_xf: Matrix,
    pub w_hf: Matrix,
    pub w_cf: Vector,
    pub b_f: Vector,
    pub w_xo: Matrix,
    pub w_ho: Matrix,
    pub w_co: Vector,
    pub b_o: Vector,
}

impl LstmParams {
    fn init(rng: &mut Rng, input_dim: usize, hidden_dim: usize) -> Result<LstmParams> {
        let sx = xavier_scale(input_dim, hidden_dim);
        let sh = xavier_scale(hidden_dim, hidden_dim);
        let mat_x = |rng: &mut Rng| init_uniform(rng, hidden_dim, input_dim, sx);
        let mat_h = |rng: &mut Rng| init_uniform(rng, hidden_dim, hidden_dim, sh);
        let peep = |rng: &mut Rng| -> Result<Vector> {
            Ok(Vector::from_vec(
                (0..hidden_dim).map(|_| rng.uniform(-sh, sh)).collect(),
            ))
        };
        Ok(LstmParams {
            w_xc: mat_x(rng)?,
            w_hc: mat_h(rng)?,
            b_c: Vector::zeros(hidden_dim),
            w_xi: mat_x(rng)?,
            w_hi: mat_h(rng)?,
            w_ci: peep(rng)?,
            b_i: Vector::zeros(hidden_dim),
            w_xf: mat_x(rng)?,
            w_hf: mat_h(rng)?,
            w_cf: peep(rng)?,
            b_f: Vector::zeros(hidden_dim),
            w_xo: mat_x(rng)?,
            w_ho: mat_h(rng)?,
            w_co: peep(rng)?,
            b_o: Vector::zeros(hidden_dim),
        })
    }

    fn zeros(input_dim: usize, hidden_dim: usize) -> LstmParams {
        LstmParams {
            w_xc: Matrix::zeros(hidden_dim, input_dim),
            w_hc: Matrix::zeros(hidden_dim, hidden_dim),
            b_c: Vector::zeros(hidden_dim),
            w_xi: Matrix::zeros(hidden_dim, input_dim),
            w_hi: Matrix::zeros(hidden_dim, hidden_dim),
            w_ci: Vector::zeros(hidden_dim),
            b_i: Vector::zeros(hidden_dim),
            w_xf: Matrix::zeros(hidden_dim, input_dim),
            w_hf: Matrix::zeros(hidden_dim, hidden_dim),
            w_cf: Vector::zeros(hidden_dim),
            b_f: Vector::zeros(hidden_dim),
            w_xo: Matrix::zeros(hidden_dim, input_dim),
            w_ho: Matrix::zeros(hidden_dim, hidden_dim),
            w_co: Vector::zeros(hidden_dim),
            b_o: Vector::zeros(hidden_dim),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.b_c.len()
    }

    pub fn input_dim(&self) -> usize {
        self.w_xc.cols()
    }

    fn fields(&self) -> Vec<(&'static str, FieldRef<'_>)> {
        vec![
            ("w_xc", FieldRef::Mat(&self.w_xc)),
            ("w_hc", FieldRef::Mat(&self.w_hc)),
            ("b_c", FieldRef::Vec(&self.b_c)),
            ("w_xi", FieldRef::Mat(&self.w_xi)),
            ("w_hi", FieldRef::Mat(&self.w_hi)),
            ("w_ci", FieldRef::Vec(&self.w_ci)),
            ("b_i", FieldRef::Vec(&self.b_i)),
            ("w_xf", FieldRef::Mat(&self.w_xf)),
            ("w_hf", FieldRef::Mat(&self.w_hf)),
            ("w_cf", FieldRef::Vec(&self.w_cf)),
            ("b_f", FieldRef::Vec(&self.b_f)),
            ("w_xo", FieldRef::Mat(&self.w_xo)),
            ("w_ho", FieldRef::Mat(&self.w_ho)),
            ("w_co", FieldRef::Vec(&self.w_co)),
            ("b_o", FieldRef::Vec(&self.b_o)),
        ]
    }

    fn fields_mut(&mut self) -> Vec<(&'static str, FieldMut<'_>)> {
        vec![
            ("w_xc", FieldMut::Mat(&mut self.w_xc)),
            ("w_hc", FieldMut::Mat(&mut self.w_hc)),
            ("b_c", FieldMut::Vec(&mut self.b_c)),
            ("w_xi", FieldMut::Mat(&mut self.w_xi)),
            ("w_hi", FieldMut::Mat(&mut self.w_hi)),
            ("w_ci", FieldMut::Vec(&mut self.w_ci)),
            ("b_i", FieldMut::Vec(&mut self.b_i)),
            ("w_xf", FieldMut::Mat(&mut self.w_xf)),
            ("w_hf", FieldMut::Mat(&mut self.w_hf)),
            ("w_cf", FieldMut::Vec(&mut self.w_cf)),
            ("b_f", FieldMut::Vec(&mut self.b_f)),
            ("w_xo", FieldMut::Mat(&mut self.w_xo)),
            ("w_ho", FieldMut::Mat(&mut self.w_ho)),
            ("w_co", FieldMut::Vec(&mut self.w_co)),
            ("b_o", FieldMut::Vec(&mut self.b_o)),
        ]
    }
}

/// Intermediates of one step, retained for backpropagation through time.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub x: Vector,
    pub h_prev: Vector,
    pub c_prev: Vector,
    pub gate_i: Vector,
    pub gate_f: Vector,
    pub gate_o: Vector,
    pub cand: Vector,
    pub c: Vector,
    pub tanh_c: Vector,
}

/// One LSTM step.
///
/// Input and forget gates peek at the previous cell state; the output gate
/// peeks at the current one.
pub fn lstm_step(
    p: &LstmParams,
    x: &Vector,
    h_prev: &Vector,
    c_prev: &Vector,
) -> Result<(Vector, Vector, StepCache)> {
    if x.len() != p.input_dim() || h_prev.len() != p.hidden_dim() || c_prev.len() != p.hidden_dim()
    {
        return Err(RraeError::DimMismatch {
            op: "lstm_step",
            left: format!("params ({} in, {} hidden)", p.input_dim(), p.hidden_dim()),
            right: format!(
                "x {} / h {} / c {}",
                x.len(),
                h_prev.len(),
                c_prev.len()
            ),
        });
    }
    let preact = |wx: &Matrix,
                  wh: &Matrix,
                  peep: Option<(&Vector, &Vector)>,
                  bias: &Vector|
     -> Result<Vector> {
        let mut a = wx.matvec(x)?;
        a.axpy(1.0, &wh.matvec(h_prev)?)?;
        if let Some((w, c)) = peep {
            a.axpy(1.0, &w.hadamard(c)?)?;
        }
        a.axpy(1.0, bias)?;
        Ok(a)
    };

    let gate_i = sigmoid(&preact(&p.w_xi, &p.w_hi, Some((&p.w_ci, c_prev)), &p.b_i)?);
    let gate_f = sigmoid(&preact(&p.w_xf, &p.w_hf, Some((&p.w_cf, c_prev)), &p.b_f)?);
    let cand = tanh_vec(&preact(&p.w_xc, &p.w_hc, None, &p.b_c)?);
    let mut c = gate_f.hadamard(c_prev)?;
    c.axpy(1.0, &gate_i.hadamard(&cand)?)?;
    let gate_o = sigmoid(&preact(&p.w_xo, &p.w_ho, Some((&p.w_co, &c)), &p.b_o)?);
    let tanh_c = tanh_vec(&c);
    let h = gate_o.hadamard(&tanh_c)?;

    let cache = StepCache {
        x: x.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        gate_i,
        gate_f,
        gate_o,
        cand,
        c: c.clone(),
        tanh_c,
        // `h` is reconstructible as gate_o ⊙ tanh_c.
    };
    Ok((h, c, cache))
}

fn run_direction(p: &LstmParams, inputs: &[&Vector]) -> Result<(Vec<Vector>, Vec<StepCache>)> {
    let mut h = Vector::zeros(p.hidden_dim());
    let mut c = Vector::zeros(p.hidden_dim());
    let mut hs = Vec::with_capacity(inputs.len());
    let mut caches = Vec::with_capacity(inputs.len());
    for &x in inputs {
        let (nh, nc, cache) = lstm_step(p, x, &h, &c)?;
        hs.push(nh.clone());
        caches.push(cache);
        h = nh;
        c = nc;
    }
    Ok((hs, caches))
}

/// Gradients for one direction, field-aligned with [`LstmParams`].
#[derive(Debug, Clone)]
pub struct LstmGrads(pub LstmParams);

impl LstmGrads {
    fn zeros(input_dim: usize, hidden_dim: usize) -> LstmGrads {
        LstmGrads(LstmParams::zeros(input_dim, hidden_dim))
    }
}

/// Reverse-time unrolling of one direction. `dh_out[t]` is the loss
/// gradient arriving at the hidden vector emitted at step `t` of this
/// direction's own processing order.
fn backward_direction(
    p: &LstmParams,
    caches: &[StepCache],
    dh_out: &[Vector],
) -> Result<LstmGrads> {
    let hidden = p.hidden_dim();
    let mut g = LstmGrads::zeros(p.input_dim(), hidden);
    let mut dh_rec = Vector::zeros(hidden);
    let mut dc_rec = Vector::zeros(hidden);

    for t in (0..caches.len()).rev() {
        let cache = &caches[t];
        let mut dh = dh_out[t].clone();
        dh.axpy(1.0, &dh_rec)?;

        // h = o ⊙ tanh(c)
        let d_o = dh.hadamard(&cache.tanh_c)?;
        let ones_minus_o = Vector::from_vec(cache.gate_o.data().iter().map(|v| 1.0 - v).collect());
        let da_o = d_o.hadamard(&cache.gate_o)?.hadamard(&ones_minus_o)?;

        // c receives gradient through h, through the future, and through
        // the output gate's peephole.
        let mut dc = Vector::from_vec(
            cache
                .tanh_c
                .data()
                .iter()
                .zip(dh.data())
                .zip(cache.gate_o.data())
                .map(|((tc, dhv), o)| dhv * o * (1.0 - tc * tc))
                .collect(),
        );
        dc.axpy(1.0, &dc_rec)?;
        dc.axpy(1.0, &da_o.hadamard(&p.w_co)?)?;

        let d_i = dc.hadamard(&cache.cand)?;
        let ones_minus_i = Vector::from_vec(cache.gate_i.data().iter().map(|v| 1.0 - v).collect());
        let da_i = d_i.hadamard(&cache.gate_i)?.hadamard(&ones_minus_i)?;

        let d_f = dc.hadamard(&cache.c_prev)?;
        let ones_minus_f = Vector::from_vec(cache.gate_f.data().iter().map(|v| 1.0 - v).collect());
        let da_f = d_f.hadamard(&cache.gate_f)?.hadamard(&ones_minus_f)?;

        let d_g = dc.hadamard(&cache.gate_i)?;
        let da_g = Vector::from_vec(
            d_g.data()
                .iter()
                .zip(cache.cand.data())
                .map(|(dg, g)| dg * (1.0 - g * g))
                .collect(),
        );

        // Flows to the previous step.
        dc_rec = dc.hadamard(&cache.gate_f)?;
        dc_rec.axpy(1.0, &da_i.hadamard(&p.w_ci)?)?;
        dc_rec.axpy(1.0, &da_f.hadamard(&p.w_cf)?)?;
        dh_rec = p.w_hi.matvec_t(&da_i)?;
        dh_rec.axpy(1.0, &p.w_hf.matvec_t(&da_f)?)?;
        dh_rec.axpy(1.0, &p.w_hc.matvec_t(&da_g)?)?;
        dh_rec.axpy(1.0, &p.w_ho.matvec_t(&da_o)?)?;

        let gp = &mut g.0;
        gp.w_xi.add_outer(&da_i, &cache.x, 1.0)?;
        gp.w_hi.add_outer(&da_i, &cache.h_prev, 1.0)?;
        gp.w_ci.axpy(1.0, &da_i.hadamard(&cache.c_prev)?)?;
        gp.b_i.axpy(1.0, &da_i)?;
        gp.w_xf.add_outer(&da_f, &cache.x, 1.0)?;
        gp.w_hf.add_outer(&da_f, &cache.h_prev, 1.0)?;
        gp.w_cf.axpy(1.0, &da_f.hadamard(&cache.c_prev)?)?;
        gp.b_f.axpy(1.0, &da_f)?;
        gp.w_xc.add_outer(&da_g, &cache.x, 1.0)?;
        gp.w_hc.add_outer(&da_g, &cache.h_prev, 1.0)?;
        gp.b_c.axpy(1.0, &da_g)?;
        gp.w_xo.add_outer(&da_o, &cache.x, 1.0)?;
        gp.w_ho.add_outer(&da_o, &cache.h_prev, 1.0)?;
        gp.w_co.axpy(1.0, &da_o.hadamard(&cache.c)?)?;
        gp.b_o.axpy(1.0, &da_o)?;
    }
    Ok(g)
}

/// A fixed-length window of consecutive snippet features, centered on the
/// snippet being trained or scored.
#[derive(Debug, Clone, PartialEq)]
pub struct SnippetWindow {
    /// Index of the center snippet within its video.
    pub center_index: usize,
    pub vectors: Vec<Vector>,
}

impl SnippetWindow {
    pub fn new(center_index: usize, vectors: Vec<Vector>) -> Result<SnippetWindow> {
        if vectors.is_empty() || vectors.len() % 2 == 0 {
            return Err(RraeError::config(format!(
                "snippet window length must be odd and positive, got {}",
                vectors.len()
            )));
        }
        let dim = vectors[0].len();
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(RraeError::DimMismatch {
                op: "SnippetWindow::new",
                left: format!("dim {dim}"),
                right: "mixed vector lengths".into(),
            });
        }
        Ok(SnippetWindow {
            center_index,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn center_pos(&self) -> usize {
        self.vectors.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }
}

/// Builds one window per snippet with edge replication at video boundaries.
pub fn windows_for(features: &[Vector], window_len: usize) -> Result<Vec<SnippetWindow>> {
    if window_len == 0 || window_len % 2 == 0 {
        return Err(RraeError::config(format!(
            "window length must be odd, got {window_len}"
        )));
    }
    let half = window_len / 2;
    let n = features.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(n);
    for center in 0..n {
        let vectors = (0..window_len)
            .map(|offset| {
                let idx = (center + offset).saturating_sub(half).min(n - 1);
                features[idx].clone()
            })
            .collect();
        out.push(SnippetWindow::new(center, vectors)?);
    }
    Ok(out)
}

/// Bidirectional peephole-LSTM auto-encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct RraeModel {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
    /// Readout from the concatenated (forward, backward) hidden vector.
    pub w_out: Matrix,
    pub b_out: Vector,
    pub window_loss: WindowLossMode,
}

#[derive(Debug, Clone)]
pub struct RraeGradients {
    pub fwd: LstmGrads,
    pub bwd: LstmGrads,
    pub w_out: Matrix,
    pub b_out: Vector,
}

impl RraeModel {
    /// Per-direction hidden width defaults to a quarter of the input so the
    /// concatenated hidden layer is half the input width.
    pub fn new(input_dim: usize, rng: &mut Rng) -> Result<RraeModel> {
        if input_dim < 2 {
            return Err(RraeError::config(format!(
                "recurrent auto-encoder needs input dim >= 2, got {input_dim}"
            )));
        }
        RraeModel::with_hidden(input_dim, (input_dim / 4).max(1), rng)
    }

    pub fn with_hidden(input_dim: usize, hidden_dim: usize, rng: &mut Rng) -> Result<RraeModel> {
        if hidden_dim == 0 {
            return Err(RraeError::config("hidden dim must be >= 1"));
        }
        if 2 * hidden_dim > input_dim {
            return Err(RraeError::config(format!(
                "concatenated hidden width {} exceeds input dim {input_dim}",
                2 * hidden_dim
            )));
        }
        let fwd = LstmParams::init(rng, input_dim, hidden_dim)?;
        let bwd = LstmParams::init(rng, input_dim, hidden_dim)?;
        let w_out = init_uniform(
            rng,
            input_dim,
            2 * hidden_dim,
            xavier_scale(2 * hidden_dim, input_dim),
        )?;
        Ok(RraeModel {
            fwd,
            bwd,
            w_out,
            b_out: Vector::zeros(input_dim),
            window_loss: WindowLossMode::default(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.fwd.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.fwd.hidden_dim()
    }

    fn check_window(&self, w: &SnippetWindow) -> Result<()> {
        if w.dim() != self.input_dim() {
            return Err(RraeError::DimMismatch {
                op: "rrae_forward",
                left: format!("model dim {}", self.input_dim()),
                right: format!("window dim {}", w.dim()),
            });
        }
        Ok(())
    }

    /// Reconstructs the whole window: `y_t = W_out · [h_t^fwd ; h_(T-1-t)^bwd] + b_out`.
    pub fn forward(&self, w: &SnippetWindow) -> Result<Vec<Vector>> {
        Ok(self.forward_with_states(w)?.0)
    }

    #[allow(clippy::type_complexity)]
    fn forward_with_states(
        &self,
        w: &SnippetWindow,
    ) -> Result<(Vec<Vector>, Vec<Vector>, Vec<StepCache>, Vec<StepCache>)> {
        self.check_window(w)?;
        let t_len = w.len();
        let fwd_inputs: Vec<&Vector> = w.vectors.iter().collect();
        let bwd_inputs: Vec<&Vector> = w.vectors.iter().rev().collect();
        let (hf, cache_f) = run_direction(&self.fwd, &fwd_inputs)?;
        let (hb, cache_b) = run_direction(&self.bwd, &bwd_inputs)?;

        let mut ys = Vec::with_capacity(t_len);
        let mut h_cat_all = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let mut h_cat = Vec::with_capacity(2 * self.hidden_dim());
            h_cat.extend_from_slice(hf[t].data());
            h_cat.extend_from_slice(hb[t_len - 1 - t].data());
            let h_cat = Vector::from_vec(h_cat);
            let mut y = self.w_out.matvec(&h_cat)?;
            y.axpy(1.0, &self.b_out)?;
            ys.push(y);
            h_cat_all.push(h_cat);
        }
        Ok((ys, h_cat_all, cache_f, cache_b))
    }

    /// Squared reconstruction error of the center time step only.
    pub fn window_error(&self, w: &SnippetWindow) -> Result<f64> {
        let ys = self.forward(w)?;
        let c = w.center_pos();
        w.vectors[c].dist_sq(&ys[c])
    }

    /// Mean squared reconstruction error across all time steps.
    pub fn window_error_mean(&self, w: &SnippetWindow) -> Result<f64> {
        let ys = self.forward(w)?;
        let mut acc = 0.0;
        for (x, y) in w.vectors.iter().zip(&ys) {
            acc += x.dist_sq(y)?;
        }
        Ok(acc / w.len() as f64)
    }

    /// Exact gradients of the window's robust loss with respect to every
    /// parameter, via reverse-time unrolling.
    pub fn backward(&self, w: &SnippetWindow, lambda: f64) -> Result<(f64, RraeGradients)> {
        let (ys, h_cat_all, cache_f, cache_b) = self.forward_with_states(w)?;
        let t_len = w.len();
        let t_f = t_len as f64;
        let hidden = self.hidden_dim();

        let mut step_err = Vec::with_capacity(t_len);
        let mut residuals = Vec::with_capacity(t_len);
        for (x, y) in w.vectors.iter().zip(&ys) {
            residuals.push(y.sub(x)?);
            step_err.push(x.dist_sq(y)?);
        }
        let mean_err: f64 = step_err.iter().sum::<f64>() / t_f;

        let (loss, step_scale): (f64, Vec<f64>) = match self.window_loss {
            WindowLossMode::ExponentOfMean => {
                let loss = loss_of_error(mean_err, lambda);
                let pref = grad_prefactor(mean_err, lambda, GRAD_EPS_CLAMP);
                (loss, vec![pref * 2.0 / t_f; t_len])
            }
            WindowLossMode::MeanOfExponents => {
                let loss = step_err.iter().map(|&e| loss_of_error(e, lambda)).sum::<f64>() / t_f;
                let scales = step_err
                    .iter()
                    .map(|&e| grad_prefactor(e, lambda, GRAD_EPS_CLAMP) * 2.0 / t_f)
                    .collect();
                (loss, scales)
            }
        };

        let mut w_out_grad = Matrix::zeros(self.w_out.rows(), self.w_out.cols());
        let mut b_out_grad = Vector::zeros(self.b_out.len());
        let mut dh_f = vec![Vector::zeros(hidden); t_len];
        let mut dh_b = vec![Vector::zeros(hidden); t_len];
        for t in 0..t_len {
            let dy = residuals[t].scale(step_scale[t]);
            w_out_grad.add_outer(&dy, &h_cat_all[t], 1.0)?;
            b_out_grad.axpy(1.0, &dy)?;
            let dh_cat = self.w_out.matvec_t(&dy)?;
            dh_f[t] = Vector::from_slice(&dh_cat.data()[..hidden]);
            dh_b[t_len - 1 - t] = Vector::from_slice(&dh_cat.data()[hidden..]);
        }

        let fwd = backward_direction(&self.fwd, &cache_f, &dh_f)?;
        let bwd = backward_direction(&self.bwd, &cache_b, &dh_b)?;
        Ok((
            loss,
            RraeGradients {
                fwd,
                bwd,
                w_out: w_out_grad,
                b_out: b_out_grad,
            },
        ))
    }
}

impl ParamModel for RraeModel {
    type Example = SnippetWindow;

    fn fields(&self) -> Vec<(&'static str, FieldRef<'_>)> {
        let mut out: Vec<(&'static str, FieldRef)> = Vec::with_capacity(32);
        for (name, f) in self.fwd.fields() {
            out.push((fwd_name(name), f));
        }
        for (name, f) in self.bwd.fields() {
            out.push((bwd_name(name), f));
        }
        out.push(("w_out", FieldRef::Mat(&self.w_out)));
        out.push(("b_out", FieldRef::Vec(&self.b_out)));
        out
    }

    fn fields_mut(&mut self) -> Vec<(&'static str, FieldMut<'_>)> {
        let mut out: Vec<(&'static str, FieldMut)> = Vec::with_capacity(32);
        for (name, f) in self.fwd.fields_mut() {
            out.push((fwd_name(name), f));
        }
        for (name, f) in self.bwd.fields_mut() {
            out.push((bwd_name(name), f));
        }
        out.push(("w_out", FieldMut::Mat(&mut self.w_out)));
        out.push(("b_out", FieldMut::Vec(&mut self.b_out)));
        out
    }

    fn loss_and_grad(&self, example: &SnippetWindow, lambda: f64) -> Result<(f64, Vec<f64>)> {
        let (loss, grads) = self.backward(example, lambda)?;
        let mut flat = Vec::with_capacity(self.flat_len());
        for (_, f) in grads.fwd.0.fields() {
            push_field(&mut flat, f);
        }
        for (_, f) in grads.bwd.0.fields() {
            push_field(&mut flat, f);
        }
        flat.extend_from_slice(grads.w_out.data());
        flat.extend_from_slice(grads.b_out.data());
        Ok((loss, flat))
    }

    fn plain_error(&self, example: &SnippetWindow) -> Result<f64> {
        self.window_error_mean(example)
    }
}

fn push_field(flat: &mut Vec<f64>, f: FieldRef<'_>) {
    match f {
        FieldRef::Mat(m) => flat.extend_from_slice(m.data()),
        FieldRef::Vec(v) => flat.extend_from_slice(v.data()),
    }
}

/// Static names for the two direction prefixes so field lists stay
/// `&'static str`.
fn fwd_name(name: &str) -> &'static str {
    match name {
        "w_xc" => "fwd.w_xc",
        "w_hc" => "fwd.w_hc",
        "b_c" => "fwd.b_c",
        "w_xi" => "fwd.w_xi",
        "w_hi" => "fwd.w_hi",
        "w_ci" => "fwd.w_ci",
        "b_i" => "fwd.b_i",
        "w_xf" => "fwd.w_xf",
        "w_hf" => "fwd.w_hf",
        "w_cf" => "fwd.w_cf",
        "b_f" => "fwd.b_f",
        "w_xo" => "fwd.w_xo",
        "w_ho" => "fwd.w_ho",
        "w_co" => "fwd.w_co",
        "b_o" => "fwd.b_o",
        other => unreachable!("unknown lstm field {other}"),
    }
}

fn bwd_name(name: &str) -> &'static str {
    match name {
        "w_xc" => "bwd.w_xc",
        "w_hc" => "bwd.w_hc",
        "b_c" => "bwd.b_c",
        "w_xi" => "bwd.w_xi",
        "w_hi" => "bwd.w_hi",
        "w_ci" => "bwd.w_ci",
        "b_i" => "bwd.b_i",
        "w_xf" => "bwd.w_xf",
        "w_hf" => "bwd.w_hf",
        "w_cf" => "bwd.w_cf",
        "b_f" => "bwd.b_f",
        "w_xo" => "bwd.w_xo",
        "w_ho" => "bwd.w_ho",
        "w_co" => "bwd.w_co",
        "b_o" => "bwd.b_o",
        other => unreachable!("unknown lstm field {other}"),
    }
}
