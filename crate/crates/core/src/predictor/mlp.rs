use rand::Rng;

use crate::dataset::Batch;
use crate::error::domain;
use crate::Result;

/// Largest double below 1; keeps scores strictly inside (0, 1).
const MAX_SCORE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Anything the first layer can consume: visits the non-zero inputs.
pub trait Input {
    fn dim(&self) -> usize;
    fn for_each_nonzero(&self, f: impl FnMut(usize, f64));
}

impl Input for [f64] {
    fn dim(&self) -> usize {
        self.len()
    }

    fn for_each_nonzero(&self, mut f: impl FnMut(usize, f64)) {
        for (i, &v) in self.iter().enumerate() {
            if v != 0.0 {
                f(i, v);
            }
        }
    }
}

/// A 0/1 vector given by the positions of its ones.
#[derive(Debug, Clone, Copy)]
pub struct SparseBinary<'a> {
    pub dim: usize,
    pub active: &'a [u32],
}

impl Input for SparseBinary<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn for_each_nonzero(&self, mut f: impl FnMut(usize, f64)) {
        for &i in self.active {
            f(i as usize, 1.0);
        }
    }
}

/// Weights of an `n_in -> n_hidden -> 1` network.
///
/// Kernels are stored input-major (`kernel[i * fan_out + j]` connects input
/// `i` to unit `j`), so one active input touches a contiguous row.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    n_in: usize,
    n_hidden: usize,
    hidden_kernel: Vec<f64>,
    hidden_bias: Vec<f64>,
    output_kernel: Vec<f64>,
    output_bias: f64,
}

fn sigmoid(a: f64) -> f64 {
    let s = if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, MAX_SCORE)
}

/// Intermediate values of one forward pass.
pub(crate) struct Activations {
    pub pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub score: f64,
}

impl MlpModel {
    pub fn zeros(n_in: usize, n_hidden: usize) -> Self {
        MlpModel {
            n_in,
            n_hidden,
            hidden_kernel: vec![0.0; n_in * n_hidden],
            hidden_bias: vec![0.0; n_hidden],
            output_kernel: vec![0.0; n_hidden],
            output_bias: 0.0,
        }
    }

    /// Glorot-uniform kernels, zero biases.
    pub fn glorot(n_in: usize, n_hidden: usize, rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros(n_in, n_hidden);
        let l1 = (6.0 / (n_in + n_hidden) as f64).sqrt();
        for w in &mut m.hidden_kernel {
            *w = rng.random_range(-l1..=l1);
        }
        let l2 = (6.0 / (n_hidden + 1) as f64).sqrt();
        for w in &mut m.output_kernel {
            *w = rng.random_range(-l2..=l2);
        }
        m
    }

    pub fn n_inputs(&self) -> usize {
        self.n_in
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn n_params(&self) -> usize {
        self.n_in * self.n_hidden + 2 * self.n_hidden + 1
    }

    /// `[in, hidden, out]`.
    pub fn layer_sizes(&self) -> [usize; 3] {
        [self.n_in, self.n_hidden, 1]
    }

    /// Flat parameter vector: hidden kernel, hidden bias, output kernel, output bias.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        p.extend_from_slice(&self.hidden_kernel);
        p.extend_from_slice(&self.hidden_bias);
        p.extend_from_slice(&self.output_kernel);
        p.push(self.output_bias);
        p
    }

    pub fn from_params(n_in: usize, n_hidden: usize, params: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(n_in, n_hidden);
        if params.len() != m.n_params() {
            return Err(domain(format!(
                "{} parameters given, a {n_in}-{n_hidden}-1 network has {}",
                params.len(),
                m.n_params()
            )));
        }
        if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
            return Err(domain(format!("non-finite weight {bad}")));
        }
        m.set_params(params);
        Ok(m)
    }

    pub(crate) fn set_params(&mut self, p: &[f64]) {
        let k = self.n_in * self.n_hidden;
        let h = self.n_hidden;
        self.hidden_kernel.copy_from_slice(&p[..k]);
        self.hidden_bias.copy_from_slice(&p[k..k + h]);
        self.output_kernel.copy_from_slice(&p[k + h..k + 2 * h]);
        self.output_bias = p[k + 2 * h];
    }

    /// Applies `f` to every parameter in flat order.
    /// Mutable parameter blocks in flat-layout order.
    pub(crate) fn param_blocks_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.hidden_kernel,
            &mut self.hidden_bias,
            &mut self.output_kernel,
            std::slice::from_mut(&mut self.output_bias),
        ]
    }

    pub(crate) fn forward<I: Input + ?Sized>(&self, x: &I) -> Activations {
        let h = self.n_hidden;
        let mut pre = self.hidden_bias.clone();
        x.for_each_nonzero(|i, v| {
            let row = &self.hidden_kernel[i * h..(i + 1) * h];
            for (z, w) in pre.iter_mut().zip(row) {
                *z += w * v;
            }
        });
        let hidden: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
        let a = self.output_bias
            + hidden
                .iter()
                .zip(&self.output_kernel)
                .map(|(a, w)| a * w)
                .sum::<f64>();
        Activations {
            pre,
            hidden,
            score: sigmoid(a),
        }
    }

    /// Usage score of a dense input vector.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_in {
            return Err(domain(format!(
                "input has {} values, the model expects {}",
                x.len(),
                self.n_in
            )));
        }
        Ok(self.forward(x).score)
    }

    /// Usage score of a binary window given by its active positions.
    pub fn predict_active(&self, active: &[u32]) -> Result<f64> {
        if let Some(&bad) = active.iter().find(|&&i| i as usize >= self.n_in) {
            return Err(domain(format!(
                "active input {bad} out of range for {} inputs",
                self.n_in
            )));
        }
        Ok(self.forward(&SparseBinary { dim: self.n_in, active }).score)
    }

    /// Adds the gradient of `scale * (score - target)^2` for one example to
    /// `grad` and returns the squared error.
    pub(crate) fn accumulate_gradient<I: Input + ?Sized>(&self, x: &I, target: f64, scale: f64, grad: &mut Gradients) -> f64 {
        let act = self.forward(x);
        let err = act.score - target;
        let h = self.n_hidden;
        // d/da of scale * err^2 through the sigmoid
        let d_out = scale * 2.0 * err * act.score * (1.0 - act.score);
        let k = self.n_in * h;
        let g = &mut grad.values;
        g[k + 2 * h] += d_out;
        let mut d_pre = vec![0.0; h];
        for j in 0..h {
            g[k + h + j] += d_out * act.hidden[j];
            if act.pre[j] > 0.0 {
                d_pre[j] = d_out * self.output_kernel[j];
                g[k + j] += d_pre[j];
            }
        }
        x.for_each_nonzero(|i, v| {
            let row = &mut g[i * h..(i + 1) * h];
            for (gw, d) in row.iter_mut().zip(&d_pre) {
                *gw += d * v;
            }
        });
        err * err
    }

    /// Mean squared error over a sparse batch and its gradient.
    pub fn batch_gradient(&self, batch: &Batch, grad: &mut Gradients) -> f64 {
        grad.clear();
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for r in 0..batch.len() {
            let x = SparseBinary {
                dim: self.n_in,
                active: batch.row(r),
            };
            loss += self.accumulate_gradient(&x, batch.targets[r], scale, grad);
        }
        loss * scale
    }

    /// Mean squared error over dense examples and its gradient.
    pub fn dense_gradient(&self, inputs: &[Vec<f64>], targets: &[f64]) -> (f64, Gradients) {
        let mut grad = Gradients::zeros(self.n_params());
        let scale = 1.0 / inputs.len() as f64;
        let mut loss = 0.0;
        for (x, &t) in inputs.iter().zip(targets) {
            loss += self.accumulate_gradient(x.as_slice(), t, scale, &mut grad);
        }
        (loss * scale, grad)
    }

    pub fn dense_loss(&self, inputs: &[Vec<f64>], targets: &[f64]) -> f64 {
        let n = inputs.len() as f64;
        inputs
            .iter()
            .zip(targets)
            .map(|(x, t)| (self.forward(x.as_slice()).score - t).powi(2))
            .sum::<f64>()
            / n
    }

    /// Which hidden units are active for `x`; used to keep finite differences
    /// inside one linear region.
    pub(crate) fn activation_pattern(&self, x: &[f64]) -> Vec<bool> {
        self.forward(x).pre.iter().map(|&z| z > 0.0).collect()
    }
}

/// Gradient in the same flat layout as [`MlpModel::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub values: Vec<f64>,
}

impl Gradients {
    pub fn zeros(n: usize) -> Self {
        Gradients { values: vec![0.0; n] }
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|g| *g = 0.0);
    }
}
