//! Small dense function approximators with analytic gradients, plus an
//! adaptive-moment optimizer. Hidden layers use tanh, the output layer is
//! linear; heads apply their own transforms.
//!
//! Forward and backward are pure; optimizer state mutation is
//! single-writer. Evaluation workers share read-only parameter snapshots.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("input of length {got} fed to a network expecting {expected}")]
    InputLengthMismatch { expected: usize, got: usize },
    #[error("upstream gradient of length {got}, output layer has {expected}")]
    UpstreamLengthMismatch { expected: usize, got: usize },
    #[error("shape mismatch between parameter sets")]
    ShapeMismatch,
    #[error("non-finite gradient rejected")]
    NonFiniteGradient,
    #[error("network needs at least an input and an output layer")]
    TooFewLayers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    /// Row-major `[out][in]` weight matrix.
    w: Vec<f64>,
    b: Vec<f64>,
    fan_in: usize,
    fan_out: usize,
}

/// Feed-forward network parameters: tanh hidden layers, linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
}

/// Per-layer parameter gradients, shape-matched to an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    layers: Vec<Layer>,
}

/// Forward pass intermediates needed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Post-activation values per layer; `activations[0]` is the input.
    activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("nonempty trace")
    }
}

impl Mlp {
    /// Zero-initialized network.
    pub fn zeros(sizes: &[usize]) -> Result<Self, NnError> {
        if sizes.len() < 2 {
            return Err(NnError::TooFewLayers);
        }
        let layers = sizes
            .windows(2)
            .map(|pair| Layer {
                w: vec![0.0; pair[0] * pair[1]],
                b: vec![0.0; pair[1]],
                fan_in: pair[0],
                fan_out: pair[1],
            })
            .collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            layers,
        })
    }

    /// Glorot-uniform initialization from a seeded generator.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self, NnError> {
        let mut mlp = Self::zeros(sizes)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        for layer in &mut mlp.layers {
            let bound = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            for w in &mut layer.w {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(mlp)
    }

    /// Glorot hidden layers with a zeroed output layer: the network maps
    /// everything to zero until trained. Policy heads start uniform and
    /// value heads start silent instead of injecting init noise into
    /// action selection.
    pub fn init_zero_head(sizes: &[usize], seed: u64) -> Result<Self, NnError> {
        let mut mlp = Self::init(sizes, seed)?;
        if let Some(last) = mlp.layers.last_mut() {
            last.w.fill(0.0);
            last.b.fill(0.0);
        }
        Ok(mlp)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Flat view of all parameters, weights then biases per layer.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    /// Load parameters from a flat slice produced by [`Mlp::flatten`].
    pub fn unflatten(&mut self, flat: &[f64]) -> Result<(), NnError> {
        if flat.len() != self.param_count() {
            return Err(NnError::ShapeMismatch);
        }
        let mut idx = 0;
        for l in &mut self.layers {
            let wlen = l.w.len();
            l.w.copy_from_slice(&flat[idx..idx + wlen]);
            idx += wlen;
            let blen = l.b.len();
            l.b.copy_from_slice(&flat[idx..idx + blen]);
            idx += blen;
        }
        Ok(())
    }

    /// Add `delta` to one parameter in flat order (finite-difference probes).
    pub fn nudge_param(&mut self, flat_index: usize, delta: f64) {
        let mut idx = flat_index;
        for l in &mut self.layers {
            if idx < l.w.len() {
                l.w[idx] += delta;
                return;
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                l.b[idx] += delta;
                return;
            }
            idx -= l.b.len();
        }
        panic!("flat index out of range");
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        let trace = self.forward_trace(input)?;
        Ok(trace.activations.into_iter().next_back().unwrap())
    }

    /// Forward pass keeping per-layer activations for a later backward.
    pub fn forward_trace(&self, input: &[f64]) -> Result<ForwardTrace, NnError> {
        if input.len() != self.input_len() {
            return Err(NnError::InputLengthMismatch {
                expected: self.input_len(),
                got: input.len(),
            });
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for (li, layer) in self.layers.iter().enumerate() {
            let prev = activations.last().unwrap();
            let mut out = vec![0.0; layer.fan_out];
            for (o, out_v) in out.iter_mut().enumerate() {
                let row = &layer.w[o * layer.fan_in..(o + 1) * layer.fan_in];
                let mut acc = layer.b[o];
                for (w, x) in row.iter().zip(prev) {
                    acc += w * x;
                }
                *out_v = acc;
            }
            let is_output = li + 1 == self.layers.len();
            if !is_output {
                for v in &mut out {
                    *v = v.tanh();
                }
            }
            activations.push(out);
        }
        Ok(ForwardTrace { activations })
    }

    /// Exact reverse-mode gradients of the forward map for a loss whose
    /// gradient at the output is `upstream`.
    pub fn backward(&self, trace: &ForwardTrace, upstream: &[f64]) -> Result<MlpGrads, NnError> {
        if upstream.len() != self.output_len() {
            return Err(NnError::UpstreamLengthMismatch {
                expected: self.output_len(),
                got: upstream.len(),
            });
        }
        let mut grads = MlpGrads::zeros_like(self);
        let mut delta = upstream.to_vec(); // output layer is linear
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let inputs = &trace.activations[li];
            let g = &mut grads.layers[li];
            for (o, &d) in delta.iter().enumerate() {
                g.b[o] += d;
                let row = &mut g.w[o * layer.fan_in..(o + 1) * layer.fan_in];
                for (gw, x) in row.iter_mut().zip(inputs) {
                    *gw += d * x;
                }
            }
            if li > 0 {
                // Propagate through the weights, then through the previous
                // layer's tanh; activations hold post-tanh values, and
                // tanh' = 1 - tanh^2.
                let mut prev_delta = vec![0.0; layer.fan_in];
                for (o, &d) in delta.iter().enumerate() {
                    let row = &layer.w[o * layer.fan_in..(o + 1) * layer.fan_in];
                    for (pd, w) in prev_delta.iter_mut().zip(row) {
                        *pd += d * w;
                    }
                }
                for (pd, a) in prev_delta.iter_mut().zip(inputs) {
                    *pd *= 1.0 - a * a;
                }
                delta = prev_delta;
            }
        }
        Ok(grads)
    }

    /// Element-wise convex blend used for slow-moving parameter copies:
    /// `self = rate * source + (1 - rate) * self`.
    pub fn blend_from(&mut self, source: &Mlp, rate: f64) -> Result<(), NnError> {
        if self.sizes != source.sizes {
            return Err(NnError::ShapeMismatch);
        }
        for (dst, src) in self.layers.iter_mut().zip(&source.layers) {
            for (d, s) in dst.w.iter_mut().zip(&src.w) {
                *d = rate * s + (1.0 - rate) * *d;
            }
            for (d, s) in dst.b.iter_mut().zip(&src.b) {
                *d = rate * s + (1.0 - rate) * *d;
            }
        }
        Ok(())
    }
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            layers: mlp
                .layers
                .iter()
                .map(|l| Layer {
                    w: vec![0.0; l.w.len()],
                    b: vec![0.0; l.b.len()],
                    fan_in: l.fan_in,
                    fan_out: l.fan_out,
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &MlpGrads) {
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            for (d, s) in dst.w.iter_mut().zip(&src.w) {
                *d += s;
            }
            for (d, s) in dst.b.iter_mut().zip(&src.b) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v *= factor;
            }
        }
    }

    /// Flat view matching [`Mlp::flatten`] ordering.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn global_norm(&self) -> f64 {
        let mut sq = 0.0;
        for l in &self.layers {
            for v in l.w.iter().chain(l.b.iter()) {
                sq += v * v;
            }
        }
        sq.sqrt()
    }

    /// Scale down so the global norm does not exceed `max_norm`.
    pub fn clip_global_norm(&mut self, max_norm: f64) {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
    }

    fn shape_matches(&self, mlp: &Mlp) -> bool {
        self.layers.len() == mlp.layers.len()
            && self
                .layers
                .iter()
                .zip(&mlp.layers)
                .all(|(g, p)| g.w.len() == p.w.len() && g.b.len() == p.b.len())
    }

    fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adaptive-moment optimizer state for one [`Mlp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub cfg: AdamConfig,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(mlp: &Mlp, cfg: AdamConfig) -> Self {
        let n = mlp.param_count();
        Self {
            cfg,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    /// Rebuild state from serialized parts (checkpoint loading).
    pub fn from_parts(
        cfg: AdamConfig,
        step: u64,
        m: Vec<f64>,
        v: Vec<f64>,
    ) -> Result<Self, NnError> {
        if m.len() != v.len() {
            return Err(NnError::ShapeMismatch);
        }
        Ok(Self { cfg, step, m, v })
    }

    /// First and second moment vectors in flat parameter order.
    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    pub fn restore_moments(&mut self, m: Vec<f64>, v: Vec<f64>) -> Result<(), NnError> {
        if m.len() != self.m.len() || v.len() != self.v.len() {
            return Err(NnError::ShapeMismatch);
        }
        self.m = m;
        self.v = v;
        Ok(())
    }
}

/// One bias-corrected adaptive-moment descent step.
pub fn adam_step(params: &mut Mlp, grads: &MlpGrads, state: &mut AdamState) -> Result<(), NnError> {
    if !grads.shape_matches(params) || state.m.len() != params.param_count() {
        return Err(NnError::ShapeMismatch);
    }
    if !grads.is_finite() {
        return Err(NnError::NonFiniteGradient);
    }
    state.step += 1;
    let c = state.cfg;
    let t = state.step as i32;
    let bias1 = 1.0 - c.beta1.powi(t);
    let bias2 = 1.0 - c.beta2.powi(t);
    let mut cursor = 0usize;
    for (layer, glayer) in params.layers.iter_mut().zip(&grads.layers) {
        for (p, g) in layer
            .w
            .iter_mut()
            .chain(layer.b.iter_mut())
            .zip(glayer.w.iter().chain(glayer.b.iter()))
        {
            let m = &mut state.m[cursor];
            let v = &mut state.v[cursor];
            *m = c.beta1 * *m + (1.0 - c.beta1) * g;
            *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
            cursor += 1;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_vec(len: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mlp = Mlp::zeros(&[5, 7, 3]).unwrap();
        let out = mlp.forward(&[1.0, -2.0, 0.5, 3.0, -0.1]).unwrap();
        assert_eq!(out, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn identity_single_layer_passes_input_through() {
        let mut mlp = Mlp::zeros(&[4, 4]).unwrap();
        let mut flat = mlp.flatten();
        for i in 0..4 {
            flat[i * 4 + i] = 1.0;
        }
        mlp.unflatten(&flat).unwrap();
        let input = [0.3, -1.2, 5.0, 0.0];
        assert_eq!(mlp.forward(&input).unwrap(), input.to_vec());
    }

    /// Straightforward re-implementation of the forward map, written
    /// independently of the production path.
    fn naive_forward(mlp: &Mlp, input: &[f64]) -> Vec<f64> {
        let flat = mlp.flatten();
        let sizes = mlp.sizes();
        let mut offset = 0;
        let mut x: Vec<f64> = input.to_vec();
        for li in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[li], sizes[li + 1]);
            let w = &flat[offset..offset + fan_in * fan_out];
            offset += fan_in * fan_out;
            let b = &flat[offset..offset + fan_out];
            offset += fan_out;
            let mut y = vec![0.0; fan_out];
            for o in 0..fan_out {
                y[o] = b[o];
                for i in 0..fan_in {
                    y[o] += w[o * fan_in + i] * x[i];
                }
            }
            if li + 1 < sizes.len() - 1 {
                for v in &mut y {
                    *v = v.tanh();
                }
            }
            x = y;
        }
        x
    }

    #[test]
    fn forward_matches_independent_reimplementation() {
        let mlp = Mlp::init(&[6, 8, 3], 42).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..20 {
            let input = random_vec(6, &mut rng);
            let a = mlp.forward(&input).unwrap();
            let b = naive_forward(&mlp, &input);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    /// Scalar loss used by the gradient checks: dot(output, probe).
    fn probe_loss(mlp: &Mlp, input: &[f64], probe: &[f64]) -> f64 {
        mlp.forward(input)
            .unwrap()
            .iter()
            .zip(probe)
            .map(|(o, p)| o * p)
            .sum()
    }

    fn check_gradients(sizes: &[usize], seed: u64) {
        let mlp = Mlp::init(sizes, seed).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xABCD);
        let input = random_vec(sizes[0], &mut rng);
        let probe = random_vec(*sizes.last().unwrap(), &mut rng);
        let trace = mlp.forward_trace(&input).unwrap();
        let analytic = mlp.backward(&trace, &probe).unwrap().flatten();
        let h = 1e-5;
        for idx in 0..mlp.param_count() {
            let mut plus = mlp.clone();
            plus.nudge_param(idx, h);
            let mut minus = mlp.clone();
            minus.nudge_param(idx, -h);
            let numeric = (probe_loss(&plus, &input, &probe) - probe_loss(&minus, &input, &probe))
                / (2.0 * h);
            let a = analytic[idx];
            let denom = a.abs().max(numeric.abs()).max(1e-6);
            assert!(
                (a - numeric).abs() / denom < 1e-4,
                "param {idx}: analytic {a} vs numeric {numeric}"
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        check_gradients(&[10, 16, 4], 1);
    }

    #[test]
    fn gradients_match_across_seeds_and_architectures() {
        for seed in 0..20 {
            for sizes in [&[4, 6, 2][..], &[3, 5, 5, 1][..], &[6, 4][..]] {
                check_gradients(sizes, seed);
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mlp = Mlp::init(&[5, 8, 3], 3).unwrap();
        let trace = mlp.forward_trace(&[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let grads = mlp.backward(&trace, &[0.0, 0.0, 0.0]).unwrap();
        assert!(grads.flatten().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradient_of_sum_is_sum_of_gradients() {
        let mlp = Mlp::init(&[4, 6, 3], 9).unwrap();
        let input = [0.3, -0.8, 0.05, 1.1];
        let trace = mlp.forward_trace(&input).unwrap();
        let sum_grad = mlp.backward(&trace, &[1.0, 1.0, 1.0]).unwrap().flatten();
        let mut acc = vec![0.0; mlp.param_count()];
        for o in 0..3 {
            let mut upstream = vec![0.0; 3];
            upstream[o] = 1.0;
            for (a, g) in acc
                .iter_mut()
                .zip(mlp.backward(&trace, &upstream).unwrap().flatten())
            {
                *a += g;
            }
        }
        for (s, a) in sum_grad.iter().zip(&acc) {
            assert!((s - a).abs() < 1e-12);
        }
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let mut mlp = Mlp::zeros(&[2, 1]).unwrap();
        let mut state = AdamState::new(&mlp, AdamConfig::with_lr(0.01));
        let mut grads = MlpGrads::zeros_like(&mlp);
        // Any gradient magnitude: the bias-corrected first step is ~lr.
        let mut flat = grads.flatten();
        flat.copy_from_slice(&[250.0, -0.04, 3.0]);
        grads = grads_from_flat(&mlp, &flat);
        adam_step(&mut mlp, &grads, &mut state).unwrap();
        for (p, g) in mlp.flatten().iter().zip(&flat) {
            assert!((p.abs() - 0.01).abs() < 1e-6, "step {p} for grad {g}");
            assert_eq!(p.signum(), -g.signum());
        }
    }

    fn grads_from_flat(mlp: &Mlp, flat: &[f64]) -> MlpGrads {
        let mut g = MlpGrads::zeros_like(mlp);
        let mut cursor = 0;
        for l in &mut g.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = flat[cursor];
                cursor += 1;
            }
        }
        g
    }

    #[test]
    fn adam_zero_gradient_is_fixed_point() {
        let mut mlp = Mlp::init(&[3, 3], 5).unwrap();
        let before = mlp.flatten();
        let mut state = AdamState::new(&mlp, AdamConfig::with_lr(0.1));
        let grads = MlpGrads::zeros_like(&mlp);
        for _ in 0..10 {
            adam_step(&mut mlp, &grads, &mut state).unwrap();
        }
        assert_eq!(mlp.flatten(), before);
    }

    #[test]
    fn adam_minimizes_convex_quadratic() {
        // Loss = sum (p_i - t_i)^2 over the parameters of a small net.
        let mut mlp = Mlp::init(&[4, 4], 11).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let target = random_vec(mlp.param_count(), &mut rng);
        let loss = |m: &Mlp| -> f64 {
            m.flatten()
                .iter()
                .zip(&target)
                .map(|(p, t)| (p - t) * (p - t))
                .sum()
        };
        let initial = loss(&mlp);
        let mut state = AdamState::new(&mlp, AdamConfig::with_lr(0.05));
        for _ in 0..200 {
            let flat: Vec<f64> = mlp
                .flatten()
                .iter()
                .zip(&target)
                .map(|(p, t)| 2.0 * (p - t))
                .collect();
            let grads = grads_from_flat(&mlp, &flat);
            adam_step(&mut mlp, &grads, &mut state).unwrap();
        }
        assert!(
            loss(&mlp) * 100.0 <= initial,
            "{} -> {}",
            initial,
            loss(&mlp)
        );
    }

    #[test]
    fn adam_rejects_non_finite_gradients() {
        let mut mlp = Mlp::zeros(&[2, 2]).unwrap();
        let mut state = AdamState::new(&mlp, AdamConfig::with_lr(0.01));
        let flat = vec![f64::NAN; mlp.param_count()];
        let grads = grads_from_flat(&mlp, &flat);
        assert_eq!(
            adam_step(&mut mlp, &grads, &mut state),
            Err(NnError::NonFiniteGradient)
        );
    }

    #[test]
    fn clipped_updates_stay_finite_under_huge_gradients() {
        let mut mlp = Mlp::init(&[3, 5, 1], 2).unwrap();
        let mut state = AdamState::new(&mlp, AdamConfig::with_lr(0.01));
        for i in 0..50 {
            let flat: Vec<f64> = (0..mlp.param_count())
                .map(|j| 1e12 * ((i + j) as f64 - 10.0))
                .collect();
            let mut grads = grads_from_flat(&mlp, &flat);
            grads.clip_global_norm(1.0);
            assert!(grads.global_norm() <= 1.0 + 1e-9);
            adam_step(&mut mlp, &grads, &mut state).unwrap();
        }
        assert!(mlp.flatten().iter().all(|p| p.is_finite()));
    }

    #[test]
    fn blend_from_copies_at_rate_one() {
        let a = Mlp::init(&[3, 4, 2], 1).unwrap();
        let mut b = Mlp::init(&[3, 4, 2], 2).unwrap();
        b.blend_from(&a, 1.0).unwrap();
        assert_eq!(a.flatten(), b.flatten());
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let a = Mlp::zeros(&[3, 4, 2]).unwrap();
        let mut b = Mlp::zeros(&[3, 5, 2]).unwrap();
        assert_eq!(b.blend_from(&a, 0.5), Err(NnError::ShapeMismatch));
        assert!(a.forward(&[1.0, 2.0]).is_err());
        let trace = a.forward_trace(&[1.0, 2.0, 3.0]).unwrap();
        assert!(a.backward(&trace, &[1.0]).is_err());
    }
}
