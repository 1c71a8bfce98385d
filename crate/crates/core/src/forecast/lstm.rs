//! Stacked LSTM with a dense multistep head, trained by backpropagation
//! through time.
//!
//! Activations are stored time-major: row `t * batch + b` holds sample `b` at
//! step `t`. Gate pre-activations for a whole layer are laid out as
//! `[input | forget | candidate | output]` blocks of `hidden` columns, so the
//! input projection of every step is one GEMM and each recurrent step is
//! another.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::gemm;

/// Nonlinearity of the candidate and of the cell output. Gates are always sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellActivation {
    Tanh,
    Relu,
}

impl CellActivation {
    pub fn name(self) -> &'static str {
        match self {
            CellActivation::Tanh => "tanh",
            CellActivation::Relu => "relu",
        }
    }

    pub fn from_name(name: &str) -> Option<CellActivation> {
        match name {
            "tanh" => Some(CellActivation::Tanh),
            "relu" => Some(CellActivation::Relu),
            _ => None,
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            CellActivation::Tanh => x.tanh(),
            CellActivation::Relu => x.max(0.0),
        }
    }

    /// Derivative given the input `x` and output `y = apply(x)`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            CellActivation::Tanh => 1.0 - y * y,
            CellActivation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmArch {
    pub input_size: usize,
    pub hidden: Vec<usize>,
    pub horizon: usize,
    /// Dropout rate on the sequences passed between recurrent layers.
    pub dropout: f64,
    pub cell_activation: CellActivation,
    /// ReLU on every recurrent layer's output sequence before the next layer
    /// (including the dense head).
    pub relu_between_layers: bool,
}

impl LstmArch {
    /// Four recurrent layers of 100, 64, 64 and 32 units, dropout 0.4.
    pub fn standard(horizon: usize) -> LstmArch {
        LstmArch {
            input_size: 1,
            hidden: vec![100, 64, 64, 32],
            horizon,
            dropout: 0.4,
            cell_activation: CellActivation::Tanh,
            relu_between_layers: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 || self.horizon == 0 {
            return Err(invalid("lstm", "input size and horizon must be positive"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(invalid("lstm.hidden", "need at least one layer, all sizes positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(invalid("lstm.dropout", "must lie in [0, 1)"));
        }
        Ok(())
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_size
        } else {
            self.hidden[layer - 1]
        }
    }

    fn layout(&self) -> Layout {
        let mut offset = 0;
        let mut take = |n: usize| {
            let r = offset..offset + n;
            offset += n;
            r
        };
        let layers = (0..self.hidden.len())
            .map(|l| {
                let (inp, h) = (self.layer_input(l), self.hidden[l]);
                LayerSlots {
                    w: take(inp * 4 * h),
                    u: take(h * 4 * h),
                    b: take(4 * h),
                }
            })
            .collect();
        let last = *self.hidden.last().unwrap();
        let head_w = take(last * self.horizon);
        let head_b = take(self.horizon);
        Layout {
            layers,
            head_w,
            head_b,
            total: offset,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }
}

#[derive(Debug, Clone)]
struct LayerSlots {
    /// `input × 4h`
    w: Range<usize>,
    /// `h × 4h`
    u: Range<usize>,
    b: Range<usize>,
}

#[derive(Debug, Clone)]
struct Layout {
    layers: Vec<LayerSlots>,
    /// `last_hidden × horizon`
    head_w: Range<usize>,
    head_b: Range<usize>,
    total: usize,
}

/// Model parameters as one flat vector, in layer order: for each recurrent
/// layer the input kernel, recurrent kernel and bias, then the dense head.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    arch: LstmArch,
    params: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    steps: usize,
    layers: Vec<LayerCache>,
    head_in: Vec<f64>,
    output: Vec<f64>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    /// Layer input sequence, `steps·batch × input`.
    x: Vec<f64>,
    /// Pre-activations of the candidate, needed for the ReLU derivative.
    z_cand: Vec<f64>,
    /// Gate activations, `steps·batch × 4h`.
    gates: Vec<f64>,
    c: Vec<f64>,
    act_c: Vec<f64>,
    /// Raw cell outputs before inter-layer ReLU / dropout.
    h: Vec<f64>,
    /// Inverted-dropout multipliers applied to this layer's output.
    mask: Option<Vec<f64>>,
}

impl ForwardCache {
    /// Outputs, `batch × horizon`.
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LstmModel {
    pub fn zeroed(arch: LstmArch) -> Result<LstmModel> {
        arch.validate()?;
        let n = arch.param_count();
        Ok(LstmModel {
            arch,
            params: vec![0.0; n],
        })
    }

    /// Glorot-uniform kernels, zero biases except a forget-gate bias of 1.
    pub fn init(arch: LstmArch, seed: u64) -> Result<LstmModel> {
        let mut model = LstmModel::zeroed(arch)?;
        let layout = model.arch.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |params: &mut [f64], fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in params {
                *p = rng.random_range(-limit..limit);
            }
        };
        for (l, slots) in layout.layers.iter().enumerate() {
            let (inp, h) = (model.arch.layer_input(l), model.arch.hidden[l]);
            glorot(&mut model.params[slots.w.clone()], inp, 4 * h);
            glorot(&mut model.params[slots.u.clone()], h, 4 * h);
            model.params[slots.b.clone()][h..2 * h].fill(1.0);
        }
        let last = *model.arch.hidden.last().unwrap();
        glorot(&mut model.params[layout.head_w.clone()], last, model.arch.horizon);
        Ok(model)
    }

    pub fn from_params(arch: LstmArch, params: Vec<f64>) -> Result<LstmModel> {
        arch.validate()?;
        let n = arch.param_count();
        if params.len() != n {
            return Err(Error::Shape {
                what: "lstm parameters",
                expected: n,
                actual: params.len(),
            });
        }
        Ok(LstmModel { arch, params })
    }

    pub fn arch(&self) -> &LstmArch {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Named parameter blocks with their shapes `(rows, cols)`, in storage order.
    pub fn blocks(&self) -> Vec<(alloc::string::String, (usize, usize), &[f64])> {
        let layout = self.arch.layout();
        let mut out = Vec::new();
        for (l, s) in layout.layers.iter().enumerate() {
            let (inp, h) = (self.arch.layer_input(l), self.arch.hidden[l]);
            out.push((alloc::format!("layer{l}.kernel"), (inp, 4 * h), &self.params[s.w.clone()]));
            out.push((alloc::format!("layer{l}.recurrent"), (h, 4 * h), &self.params[s.u.clone()]));
            out.push((alloc::format!("layer{l}.bias"), (1, 4 * h), &self.params[s.b.clone()]));
        }
        let last = *self.arch.hidden.last().unwrap();
        out.push(("head.kernel".into(), (last, self.arch.horizon), &self.params[layout.head_w.clone()]));
        out.push(("head.bias".into(), (1, self.arch.horizon), &self.params[layout.head_b.clone()]));
        out
    }

    /// Offset of `(layer, gate)`'s parameters: returns the ranges of the
    /// kernel, recurrent kernel and bias columns for that gate. Gates are
    /// numbered input, forget, candidate, output.
    pub fn gate_columns(&self, layer: usize, gate: usize) -> Range<usize> {
        let h = self.arch.hidden[layer];
        gate * h..(gate + 1) * h
    }

    /// Forward pass over `batch` windows laid out sample-major
    /// (`batch × steps × input_size`).
    ///
    /// Dropout masks are drawn from `dropout_seed` only when `training` is set.
    pub fn forward(
        &self,
        inputs: &[f64],
        batch: usize,
        training: bool,
        dropout_seed: u64,
    ) -> Result<ForwardCache> {
        let arch = &self.arch;
        let in0 = arch.input_size;
        if batch == 0 || inputs.is_empty() || inputs.len() % (batch * in0) != 0 {
            return Err(Error::Shape {
                what: "lstm input",
                expected: batch * in0,
                actual: inputs.len(),
            });
        }
        let steps = inputs.len() / (batch * in0);
        let layout = arch.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);

        let mut x = vec![0.0; steps * batch * in0];
        for b in 0..batch {
            for t in 0..steps {
                let src = (b * steps + t) * in0;
                let dst = (t * batch + b) * in0;
                x[dst..dst + in0].copy_from_slice(&inputs[src..src + in0]);
            }
        }

        let n_layers = arch.hidden.len();
        let mut layers = Vec::with_capacity(n_layers);
        for (l, slots) in layout.layers.iter().enumerate() {
            let inp = arch.layer_input(l);
            let h = arch.hidden[l];
            let g4 = 4 * h;
            let w = &self.params[slots.w.clone()];
            let u = &self.params[slots.u.clone()];
            let bias = &self.params[slots.b.clone()];
            let rows = steps * batch;

            let mut z = vec![0.0; rows * g4];
            for row in z.chunks_exact_mut(g4) {
                row.copy_from_slice(bias);
            }
            gemm(rows, inp, g4, &x, false, w, false, 1.0, &mut z);

            let mut z_cand = vec![0.0; rows * h];
            let mut c = vec![0.0; rows * h];
            let mut act_c = vec![0.0; rows * h];
            let mut hout = vec![0.0; rows * h];
            for t in 0..steps {
                let zt = t * batch * g4..(t + 1) * batch * g4;
                if t > 0 {
                    let prev = &hout[(t - 1) * batch * h..t * batch * h];
                    gemm(batch, h, g4, prev, false, u, false, 1.0, &mut z[zt.clone()]);
                }
                for b in 0..batch {
                    let r = t * batch + b;
                    let zr = &mut z[r * g4..(r + 1) * g4];
                    for j in 0..h {
                        let i_g = sigmoid(zr[j]);
                        let f_g = sigmoid(zr[h + j]);
                        z_cand[r * h + j] = zr[2 * h + j];
                        let g_g = arch.cell_activation.apply(zr[2 * h + j]);
                        let o_g = sigmoid(zr[3 * h + j]);
                        zr[j] = i_g;
                        zr[h + j] = f_g;
                        zr[2 * h + j] = g_g;
                        zr[3 * h + j] = o_g;
                        let c_prev = if t > 0 { c[(r - batch) * h + j] } else { 0.0 };
                        let cc = f_g * c_prev + i_g * g_g;
                        let a = arch.cell_activation.apply(cc);
                        c[r * h + j] = cc;
                        act_c[r * h + j] = a;
                        hout[r * h + j] = o_g * a;
                    }
                }
            }

            let mut next = hout.clone();
            if arch.relu_between_layers {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            let mask = if training && arch.dropout > 0.0 && l + 1 < n_layers {
                let keep = 1.0 - arch.dropout;
                let m: Vec<f64> = (0..next.len())
                    .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                next.iter_mut().zip(&m).for_each(|(v, k)| *v *= k);
                Some(m)
            } else {
                None
            };
            layers.push(LayerCache {
                x: core::mem::replace(&mut x, next),
                z_cand,
                gates: z,
                c,
                act_c,
                h: hout,
                mask,
            });
        }

        let last = *arch.hidden.last().unwrap();
        let k = arch.horizon;
        let head_in = x[(steps - 1) * batch * last..].to_vec();
        let mut output = vec![0.0; batch * k];
        for row in output.chunks_exact_mut(k) {
            row.copy_from_slice(&self.params[layout.head_b.clone()]);
        }
        gemm(batch, last, k, &head_in, false, &self.params[layout.head_w.clone()], false, 1.0, &mut output);

        Ok(ForwardCache {
            batch,
            steps,
            layers,
            head_in,
            output,
        })
    }

    /// Evaluation-mode forward of a single window.
    pub fn predict(&self, window: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(window, 1, false, 0)?.output)
    }

    /// Mean squared error over all `batch × horizon` outputs.
    pub fn loss(cache: &ForwardCache, targets: &[f64]) -> Result<f64> {
        if targets.len() != cache.output.len() {
            return Err(Error::Shape {
                what: "lstm targets",
                expected: cache.output.len(),
                actual: targets.len(),
            });
        }
        let n = targets.len() as f64;
        Ok(cache
            .output
            .iter()
            .zip(targets)
            .map(|(y, t)| (y - t) * (y - t))
            .sum::<f64>()
            / n)
    }

    /// Gradient of the MSE loss with respect to every parameter, written into
    /// `grad` (overwritten). Returns the loss.
    pub fn backward(&self, cache: &ForwardCache, targets: &[f64], grad: &mut [f64]) -> Result<f64> {
        let loss = Self::loss(cache, targets)?;
        if grad.len() != self.params.len() {
            return Err(Error::Shape {
                what: "gradient buffer",
                expected: self.params.len(),
                actual: grad.len(),
            });
        }
        if cache.layers.len() != self.arch.hidden.len() {
            return Err(invalid("cache", "forward cache does not match this model"));
        }
        grad.fill(0.0);
        let arch = &self.arch;
        let layout = arch.layout();
        let (batch, steps) = (cache.batch, cache.steps);
        let k = arch.horizon;
        let last = *arch.hidden.last().unwrap();

        let scale = 2.0 / targets.len() as f64;
        let dout: Vec<f64> = cache
            .output
            .iter()
            .zip(targets)
            .map(|(y, t)| scale * (y - t))
            .collect();
        gemm(last, batch, k, &cache.head_in, true, &dout, false, 0.0, &mut grad[layout.head_w.clone()]);
        for row in dout.chunks_exact(k) {
            for (g, d) in grad[layout.head_b.clone()].iter_mut().zip(row) {
                *g += d;
            }
        }
        // Gradient with respect to the (post ReLU / dropout) sequence fed to the next stage.
        let mut dnext = vec![0.0; steps * batch * last];
        gemm(
            batch,
            k,
            last,
            &dout,
            false,
            &self.params[layout.head_w.clone()],
            true,
            0.0,
            &mut dnext[(steps - 1) * batch * last..],
        );

        for l in (0..arch.hidden.len()).rev() {
            let lc = &cache.layers[l];
            let slots = &layout.layers[l];
            let inp = arch.layer_input(l);
            let h = arch.hidden[l];
            let g4 = 4 * h;
            let rows = steps * batch;

            let mut dh_seq = dnext;
            if let Some(mask) = &lc.mask {
                dh_seq.iter_mut().zip(mask).for_each(|(d, m)| *d *= m);
            }
            if arch.relu_between_layers {
                dh_seq
                    .iter_mut()
                    .zip(&lc.h)
                    .for_each(|(d, &hv)| if hv <= 0.0 { *d = 0.0 });
            }

            let u = &self.params[slots.u.clone()];
            let mut dz = vec![0.0; rows * g4];
            let mut dh_next = vec![0.0; batch * h];
            let mut dc_next = vec![0.0; batch * h];
            for t in (0..steps).rev() {
                for b in 0..batch {
                    let r = t * batch + b;
                    let gr = &lc.gates[r * g4..(r + 1) * g4];
                    let dzr = &mut dz[r * g4..(r + 1) * g4];
                    for j in 0..h {
                        let (i_g, f_g, g_g, o_g) = (gr[j], gr[h + j], gr[2 * h + j], gr[3 * h + j]);
                        let idx = r * h + j;
                        let dh = dh_seq[idx] + dh_next[b * h + j];
                        let a = lc.act_c[idx];
                        let d_o = dh * a;
                        let dc = dh * o_g * arch.cell_activation.derivative(lc.c[idx], a)
                            + dc_next[b * h + j];
                        let c_prev = if t > 0 { lc.c[idx - batch * h] } else { 0.0 };
                        dc_next[b * h + j] = dc * f_g;
                        dzr[j] = dc * g_g * i_g * (1.0 - i_g);
                        dzr[h + j] = dc * c_prev * f_g * (1.0 - f_g);
                        dzr[2 * h + j] =
                            dc * i_g * arch.cell_activation.derivative(lc.z_cand[idx], g_g);
                        dzr[3 * h + j] = d_o * o_g * (1.0 - o_g);
                    }
                }
                if t > 0 {
                    let dzt = &dz[t * batch * g4..(t + 1) * batch * g4];
                    let h_prev = &lc.h[(t - 1) * batch * h..t * batch * h];
                    gemm(h, batch, g4, h_prev, true, dzt, false, 1.0, &mut grad[slots.u.clone()]);
                    gemm(batch, g4, h, dzt, false, u, true, 0.0, &mut dh_next);
                }
            }

            gemm(inp, rows, g4, &lc.x, true, &dz, false, 0.0, &mut grad[slots.w.clone()]);
            for row in dz.chunks_exact(g4) {
                for (g, d) in grad[slots.b.clone()].iter_mut().zip(row) {
                    *g += d;
                }
            }
            dnext = if l > 0 {
                let mut dx = vec![0.0; rows * inp];
                gemm(rows, g4, inp, &dz, false, &self.params[slots.w.clone()], true, 0.0, &mut dx);
                dx
            } else {
                Vec::new()
            };
        }
        Ok(loss)
    }
}

/// Largest relative error between [`LstmModel::backward`] and central finite
/// differences with step `eps`, over every parameter. Relative error is
/// `|a - n| / max(|a|, |n|, 1e-6)`.
///
/// Train-mode forwards share `dropout_seed`, so the masks are fixed.
pub fn gradient_check(
    model: &LstmModel,
    inputs: &[f64],
    batch: usize,
    targets: &[f64],
    dropout_seed: u64,
    eps: f64,
) -> Result<f64> {
    let cache = model.forward(inputs, batch, true, dropout_seed)?;
    let mut grad = vec![0.0; model.param_count()];
    model.backward(&cache, targets, &mut grad)?;
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (i, &analytic) in grad.iter().enumerate() {
        let orig = probe.params[i];
        probe.params[i] = orig + eps;
        let up = LstmModel::loss(&probe.forward(inputs, batch, true, dropout_seed)?, targets)?;
        probe.params[i] = orig - eps;
        let down = LstmModel::loss(&probe.forward(inputs, batch, true, dropout_seed)?, targets)?;
        probe.params[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let denom = analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic - numeric).abs() / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_arch(hidden: Vec<usize>, horizon: usize) -> LstmArch {
        LstmArch {
            input_size: 1,
            hidden,
            horizon,
            dropout: 0.0,
            cell_activation: CellActivation::Tanh,
            relu_between_layers: false,
        }
    }

    fn random_case(seed: u64, arch: LstmArch, batch: usize, steps: usize) -> (LstmModel, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = LstmModel::init(arch, seed).unwrap();
        for p in model.params_mut() {
            *p += rng.random_range(-0.3..0.3);
        }
        let n_in = batch * steps * model.arch().input_size;
        let x = (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = (0..batch * model.arch().horizon).map(|_| rng.random_range(-1.0..1.0)).collect();
        (model, x, y)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let cases = [
            tiny_arch(vec![1], 1),
            tiny_arch(vec![3, 2], 2),
            LstmArch { input_size: 2, relu_between_layers: true, ..tiny_arch(vec![4, 3, 5], 3) },
            LstmArch { dropout: 0.3, relu_between_layers: true, ..tiny_arch(vec![6, 8], 4) },
            LstmArch { cell_activation: CellActivation::Relu, ..tiny_arch(vec![5], 2) },
            LstmArch { dropout: 0.4, relu_between_layers: true, ..tiny_arch(vec![6, 4, 4, 3], 4) },
        ];
        for (seed, arch) in cases.into_iter().enumerate() {
            let (model, x, y) = random_case(seed as u64, arch, 3, 5);
            let err = gradient_check(&model, &x, 3, &y, 17, 1e-5).unwrap();
            assert!(err < 1e-4, "case {seed}: relative error {err}");
        }
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let model = LstmModel::zeroed(LstmArch::standard(4)).unwrap();
        let out = model.predict(&[0.3; 15]).unwrap();
        assert_eq!(out, vec![0.0; 4]);
    }

    #[test]
    fn eval_forward_is_deterministic() {
        let model = LstmModel::init(LstmArch::standard(3), 5).unwrap();
        let w: Vec<f64> = (0..15).map(|i| (i as f64 * 0.3).sin().abs()).collect();
        assert_eq!(model.predict(&w).unwrap(), model.predict(&w).unwrap());
        let a = model.forward(&w, 1, true, 99).unwrap();
        let b = model.forward(&w, 1, true, 99).unwrap();
        assert_eq!(a.output(), b.output());
    }

    #[test]
    fn hand_computed_single_unit_recursion() {
        // One layer, one unit, canonical gates, no inter-layer ReLU.
        let arch = tiny_arch(vec![1], 1);
        // kernel [wi wf wg wo], recurrent [ui uf ug uo], bias [bi bf bg bo], head [v], [c0]
        let params = vec![
            0.5, -0.3, 0.8, 0.1, //
            0.2, 0.4, -0.6, 0.7, //
            0.05, 1.0, -0.1, 0.2, //
            1.5, -0.25,
        ];
        let model = LstmModel::from_params(arch, params).unwrap();
        let xs = [0.4, 0.9];
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let (mut h, mut c) = (0.0f64, 0.0f64);
        for x in xs {
            let i = sig(0.5 * x + 0.2 * h + 0.05);
            let f = sig(-0.3 * x + 0.4 * h + 1.0);
            let g = (0.8 * x - 0.6 * h - 0.1).tanh();
            let o = sig(0.1 * x + 0.7 * h + 0.2);
            c = f * c + i * g;
            h = o * c.tanh();
        }
        let want = 1.5 * h - 0.25;
        let got = model.predict(&xs).unwrap()[0];
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn head_outputs_are_independent_coordinates() {
        let mut model = LstmModel::init(LstmArch::standard(4), 11).unwrap();
        let w: Vec<f64> = (0..15).map(|i| i as f64 / 15.0).collect();
        let before = model.predict(&w).unwrap();
        let layout = model.arch.layout();
        let k = model.arch.horizon;
        // Column 0 of the head kernel feeds only step 1.
        for row in model.params[layout.head_w.clone()].chunks_exact_mut(k) {
            row[0] += 0.5;
        }
        let after = model.predict(&w).unwrap();
        assert_eq!(&before[1..], &after[1..]);
        assert_ne!(before[0], after[0]);
    }

    #[test]
    fn batched_forward_matches_per_sample() {
        let model = LstmModel::init(
            LstmArch { hidden: vec![6, 5], ..LstmArch::standard(2) },
            3,
        )
        .unwrap();
        let windows: Vec<Vec<f64>> = (0..4)
            .map(|b| (0..7).map(|t| ((b * 7 + t) as f64 * 0.37).cos()).collect())
            .collect();
        let flat: Vec<f64> = windows.concat();
        let batched = model.forward(&flat, 4, false, 0).unwrap();
        for (b, w) in windows.iter().enumerate() {
            let single = model.predict(w).unwrap();
            for j in 0..2 {
                assert!((batched.output()[b * 2 + j] - single[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let model = LstmModel::init(tiny_arch(vec![2], 1), 0).unwrap();
        assert!(model.forward(&[0.0; 5], 2, false, 0).is_err());
        let cache = model.forward(&[0.0; 4], 2, false, 0).unwrap();
        let mut grad = vec![0.0; model.param_count()];
        assert!(model.backward(&cache, &[0.0; 3], &mut grad).is_err());
        assert!(LstmModel::from_params(tiny_arch(vec![2], 1), vec![0.0; 3]).is_err());
        assert!(LstmModel::zeroed(LstmArch { dropout: 1.0, ..tiny_arch(vec![2], 1) }).is_err());
    }
}
