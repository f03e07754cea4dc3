//! Differentiable classifiers with exact gradients in both the parameters and
//! the inputs.
//!
//! Parameters live in one flat vector so optimizers can treat every
//! architecture alike. Layout:
//!
//! * logistic: `W (C×d)`, `b (C)`
//! * mlp: `W₁ (h×d)`, `b₁ (h)`, `W₂ (C×h)`, `b₂ (C)`
//!
//! A model may carry an input projection `Σ` (used by the projection
//! baseline); the network then sees `Σx` instead of `x`.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, gemm_acc, Matrix};

/// Hidden-layer nonlinearity. ReLU's derivative at zero is taken as zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z`.
    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "arch", rename_all = "lowercase")]
pub enum Architecture {
    /// Multinomial logistic regression.
    Logistic,
    /// One fully connected hidden layer.
    Mlp { hidden: usize, activation: Activation },
}

impl Architecture {
    pub fn mlp(hidden: usize) -> Self {
        Architecture::Mlp {
            hidden,
            activation: Activation::Relu,
        }
    }
}

/// Per-class scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits(pub Vec<f64>);

impl Logits {
    /// Predicted class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    arch: Architecture,
    input_dim: usize,
    classes: usize,
    theta: Vec<f64>,
    input_projection: Option<Matrix>,
}

/// Offsets of each block inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    d: usize,
    h: usize,
    c: usize,
}

impl Layout {
    fn w1(&self) -> std::ops::Range<usize> {
        0..self.h * self.d
    }
    fn b1(&self) -> std::ops::Range<usize> {
        let s = self.h * self.d;
        s..s + self.h
    }
    /// Input width of the output layer.
    fn fan_in(&self) -> usize {
        if self.h == 0 {
            self.d
        } else {
            self.h
        }
    }
    fn w2(&self) -> std::ops::Range<usize> {
        let s = self.h * self.d + self.h;
        s..s + self.c * self.fan_in()
    }
    fn b2(&self) -> std::ops::Range<usize> {
        let s = self.w2().end;
        s..s + self.c
    }
    fn len(&self) -> usize {
        self.b2().end
    }
}

/// Losses and gradients for a batch of inputs.
pub struct BatchGrad {
    pub losses: Vec<f64>,
    /// Row `i` is `∂ℓᵢ/∂xᵢ`.
    pub input: Option<Matrix>,
    /// `Σᵢ ∂ℓᵢ/∂θ` (a sum, not a mean).
    pub params: Option<Vec<f64>>,
}

impl ModelParams {
    pub fn zeros(arch: Architecture, input_dim: usize, classes: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input dimension must be positive"));
        }
        if classes < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        if let Architecture::Mlp { hidden: 0, .. } = arch {
            return Err(Error::invalid("hidden width must be positive"));
        }
        let mut p = Self {
            arch,
            input_dim,
            classes,
            theta: Vec::new(),
            input_projection: None,
        };
        p.theta = vec![0.0; p.layout().len()];
        Ok(p)
    }

    /// Glorot-uniform weights `U(−a, a)`, `a = √(6 / (fan_in + fan_out))`,
    /// zero biases.
    pub fn init(arch: Architecture, input_dim: usize, classes: usize, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(arch, input_dim, classes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = p.layout();
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, fan_out: usize, theta: &mut [f64]| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in &mut theta[range] {
                *v = rng.random_range(-a..a);
            }
        };
        match arch {
            Architecture::Logistic => fill(l.w2(), l.d, l.c, &mut p.theta),
            Architecture::Mlp { .. } => {
                fill(l.w1(), l.d, l.h, &mut p.theta);
                fill(l.w2(), l.h, l.c, &mut p.theta);
            }
        }
        Ok(p)
    }

    /// Logistic regression with explicit weights (`C × d`) and bias.
    pub fn logistic(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        let (c, d) = weights.shape();
        check_dim(c, bias.len())?;
        let mut p = Self::zeros(Architecture::Logistic, d, c)?;
        let l = p.layout();
        p.theta[l.w2()].copy_from_slice(weights.as_slice());
        p.theta[l.b2()].copy_from_slice(&bias);
        p.check_finite()?;
        Ok(p)
    }

    /// One-hidden-layer network with explicit weights.
    pub fn mlp(
        w1: Matrix,
        b1: Vec<f64>,
        w2: Matrix,
        b2: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        let (h, d) = w1.shape();
        let (c, h2) = w2.shape();
        check_dim(h, h2)?;
        check_dim(h, b1.len())?;
        check_dim(c, b2.len())?;
        let mut p = Self::zeros(Architecture::Mlp { hidden: h, activation }, d, c)?;
        let l = p.layout();
        p.theta[l.w1()].copy_from_slice(w1.as_slice());
        p.theta[l.b1()].copy_from_slice(&b1);
        p.theta[l.w2()].copy_from_slice(w2.as_slice());
        p.theta[l.b2()].copy_from_slice(&b2);
        p.check_finite()?;
        Ok(p)
    }

    /// Applies `sigma` to every input before the network.
    pub fn with_input_projection(mut self, sigma: Matrix) -> Result<Self> {
        check_dim(self.input_dim, sigma.rows())?;
        check_dim(self.input_dim, sigma.cols())?;
        self.input_projection = Some(sigma);
        Ok(self)
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn input_projection(&self) -> Option<&Matrix> {
        self.input_projection.as_ref()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn num_params(&self) -> usize {
        self.theta.len()
    }

    fn layout(&self) -> Layout {
        match self.arch {
            Architecture::Logistic => Layout {
                d: self.input_dim,
                h: 0,
                c: self.classes,
            },
            Architecture::Mlp { hidden, .. } => Layout {
                d: self.input_dim,
                h: hidden,
                c: self.classes,
            },
        }
    }

    fn check_finite(&self) -> Result<()> {
        match self.theta.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFinite(i)),
            None => Ok(()),
        }
    }

    /// Output-layer weights `(C × fan_in)` and bias.
    pub fn output_layer(&self) -> (Matrix, Vec<f64>) {
        let l = self.layout();
        (
            Matrix::from_raw(l.c, l.fan_in(), self.theta[l.w2()].to_vec()),
            self.theta[l.b2()].to_vec(),
        )
    }

    /// Hidden-layer weights `(h × d)` and bias; `None` for logistic models.
    pub fn hidden_layer(&self) -> Option<(Matrix, Vec<f64>)> {
        let l = self.layout();
        (l.h > 0).then(|| {
            (
                Matrix::from_raw(l.h, l.d, self.theta[l.w1()].to_vec()),
                self.theta[l.b1()].to_vec(),
            )
        })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Logits> {
        check_dim(self.input_dim, x.len())?;
        let out = self.forward_batch(&Matrix::from_raw(1, x.len(), x.to_vec()))?;
        Ok(Logits(out.into_vec()))
    }

    /// Logits for every row of `x`.
    pub fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        check_dim(self.input_dim, x.cols())?;
        let xin = self.project(x)?;
        let l = self.layout();
        let (w2, b2) = (&self.theta[l.w2()], &self.theta[l.b2()]);
        let logits = match self.arch {
            Architecture::Logistic => affine(&xin, w2, b2, l.c),
            Architecture::Mlp { activation, .. } => {
                let mut a1 = affine(&xin, &self.theta[l.w1()], &self.theta[l.b1()], l.h);
                a1.as_mut_slice().iter_mut().for_each(|z| *z = activation.apply(*z));
                affine(&a1, w2, b2, l.c)
            }
        };
        Ok(logits)
    }

    pub fn predict_batch(&self, x: &Matrix) -> Result<Vec<usize>> {
        let logits = self.forward_batch(x)?;
        Ok((0..logits.rows()).map(|i| argmax(logits.row(i))).collect())
    }

    /// Cross-entropy `−log softmax(f(x))[y]`.
    pub fn loss(&self, x: &[f64], y: usize) -> Result<f64> {
        self.check_label(y)?;
        Ok(cross_entropy(&self.forward(x)?.0, y))
    }

    fn check_label(&self, y: usize) -> Result<()> {
        if y >= self.classes {
            return Err(Error::invalid(format!(
                "label {y} out of range for {} classes",
                self.classes
            )));
        }
        Ok(())
    }

    pub fn grad_params(&self, x: &[f64], y: usize) -> Result<Vec<f64>> {
        self.check_label(y)?;
        let g = self.backprop(&Matrix::from_raw(1, x.len(), x.to_vec()), &[y], false, true)?;
        Ok(g.params.unwrap_or_default())
    }

    pub fn grad_input(&self, x: &[f64], y: usize) -> Result<Vec<f64>> {
        self.check_label(y)?;
        let g = self.backprop(&Matrix::from_raw(1, x.len(), x.to_vec()), &[y], true, false)?;
        Ok(g.input.map(Matrix::into_vec).unwrap_or_default())
    }

    fn project(&self, x: &Matrix) -> Result<Matrix> {
        match &self.input_projection {
            Some(sigma) => x.matmul_transpose(sigma),
            None => Ok(x.clone()),
        }
    }

    /// Per-sample losses plus the requested gradients for a batch.
    pub fn backprop(
        &self,
        x: &Matrix,
        y: &[usize],
        want_input: bool,
        want_params: bool,
    ) -> Result<BatchGrad> {
        check_dim(self.input_dim, x.cols())?;
        check_dim(x.rows(), y.len())?;
        if let Some(&bad) = y.iter().find(|&&v| v >= self.classes) {
            self.check_label(bad)?;
        }
        let l = self.layout();
        let n = x.rows();
        let xin = self.project(x)?;
        let w2 = &self.theta[l.w2()];
        let b2 = &self.theta[l.b2()];

        let (hidden_pre, hidden_act) = match self.arch {
            Architecture::Logistic => (None, None),
            Architecture::Mlp { activation, .. } => {
                let z1 = affine(&xin, &self.theta[l.w1()], &self.theta[l.b1()], l.h);
                let mut a1 = z1.clone();
                a1.as_mut_slice().iter_mut().for_each(|z| *z = activation.apply(*z));
                (Some(z1), Some(a1))
            }
        };
        let top_in = hidden_act.as_ref().unwrap_or(&xin);
        let mut dz2 = affine(top_in, w2, b2, l.c);
        let mut losses = Vec::with_capacity(n);
        for (i, &yi) in y.iter().enumerate() {
            let row = dz2.row_mut(i);
            losses.push(cross_entropy(row, yi));
            softmax_in_place(row);
            row[yi] -= 1.0;
        }

        let mut grad = want_params.then(|| vec![0.0; l.len()]);
        if let Some(g) = grad.as_mut() {
            let dw2 = dz2.transpose_matmul(top_in)?;
            g[l.w2()].copy_from_slice(dw2.as_slice());
            col_sums(&dz2, &mut g[l.b2()]);
        }

        let w2m = Matrix::from_raw(l.c, l.fan_in(), w2.to_vec());
        let dxin = match (self.arch, hidden_pre) {
            (Architecture::Logistic, _) => want_input.then(|| dz2.matmul(&w2m)).transpose()?,
            (Architecture::Mlp { activation, .. }, Some(z1)) => {
                let mut dz1 = dz2.matmul(&w2m)?;
                for (d, z) in dz1.as_mut_slice().iter_mut().zip(z1.as_slice()) {
                    *d *= activation.derivative(*z);
                }
                if let Some(g) = grad.as_mut() {
                    let dw1 = dz1.transpose_matmul(&xin)?;
                    g[l.w1()].copy_from_slice(dw1.as_slice());
                    col_sums(&dz1, &mut g[l.b1()]);
                }
                if want_input {
                    let w1m = Matrix::from_raw(l.h, l.d, self.theta[l.w1()].to_vec());
                    Some(dz1.matmul(&w1m)?)
                } else {
                    None
                }
            }
            (Architecture::Mlp { .. }, None) => unreachable!("hidden activations computed above"),
        };
        let input = match (dxin, &self.input_projection) {
            (Some(g), Some(sigma)) => Some(g.matmul_transpose(sigma)?),
            (g, _) => g,
        };
        debug_assert!(n == losses.len());
        Ok(BatchGrad {
            losses,
            input,
            params: grad,
        })
    }

    /// Largest relative discrepancy between analytic gradients and central
    /// differences, over every parameter and input coordinate.
    ///
    /// Relative error is `|a − n| / max(|a|, |n|, 1e-4)`; the floor keeps
    /// near-zero entries from amplifying rounding noise.
    pub fn gradient_check(&self, x: &[f64], y: usize, step: f64) -> Result<f64> {
        if step <= 0.0 {
            return Err(Error::invalid("finite-difference step must be positive"));
        }
        let analytic_p = self.grad_params(x, y)?;
        let analytic_x = self.grad_input(x, y)?;
        let mut worst = 0.0f64;
        let mut probe = self.clone();
        for i in 0..self.theta.len() {
            let orig = probe.theta[i];
            probe.theta[i] = orig + step;
            let up = probe.loss(x, y)?;
            probe.theta[i] = orig - step;
            let down = probe.loss(x, y)?;
            probe.theta[i] = orig;
            worst = worst.max(relative_error(analytic_p[i], (up - down) / (2.0 * step)));
        }
        let mut xp = x.to_vec();
        for i in 0..x.len() {
            let orig = xp[i];
            xp[i] = orig + step;
            let up = self.loss(&xp, y)?;
            xp[i] = orig - step;
            let down = self.loss(&xp, y)?;
            xp[i] = orig;
            worst = worst.max(relative_error(analytic_x[i], (up - down) / (2.0 * step)));
        }
        Ok(worst)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let l = self.layout();
        let rows = |range: std::ops::Range<usize>, cols: usize| -> Vec<Vec<f64>> {
            self.theta[range].chunks(cols).map(<[f64]>::to_vec).collect()
        };
        let (arch, activation, dims, weights) = match self.arch {
            Architecture::Logistic => (
                "logistic",
                None,
                vec![l.d, l.c],
                CheckpointWeights {
                    w: Some(rows(l.w2(), l.d)),
                    b: Some(self.theta[l.b2()].to_vec()),
                    ..Default::default()
                },
            ),
            Architecture::Mlp { activation, .. } => (
                "mlp",
                Some(activation),
                vec![l.d, l.h, l.c],
                CheckpointWeights {
                    w1: Some(rows(l.w1(), l.d)),
                    b1: Some(self.theta[l.b1()].to_vec()),
                    w2: Some(rows(l.w2(), l.h)),
                    b2: Some(self.theta[l.b2()].to_vec()),
                    ..Default::default()
                },
            ),
        };
        Checkpoint {
            arch: arch.to_string(),
            activation,
            dims,
            weights,
            input_projection: self.input_projection.as_ref().map(Matrix::to_rows),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let need = |v: &Option<Vec<Vec<f64>>>, name: &str| -> Result<Matrix> {
            let rows = v
                .as_ref()
                .ok_or_else(|| Error::Config(format!("checkpoint is missing weights.{name}")))?;
            Matrix::from_rows(rows)
        };
        let need_vec = |v: &Option<Vec<f64>>, name: &str| -> Result<Vec<f64>> {
            v.clone()
                .ok_or_else(|| Error::Config(format!("checkpoint is missing weights.{name}")))
        };
        let w = &ck.weights;
        let params = match (ck.arch.as_str(), ck.dims.as_slice()) {
            ("logistic", [d, c]) => {
                let m = need(&w.w, "w")?;
                if m.shape() != (*c, *d) {
                    return Err(Error::Config("logistic weight shape does not match dims".into()));
                }
                Self::logistic(m, need_vec(&w.b, "b")?)?
            }
            ("mlp", [d, h, c]) => {
                let w1 = need(&w.w1, "w1")?;
                let w2 = need(&w.w2, "w2")?;
                if w1.shape() != (*h, *d) || w2.shape() != (*c, *h) {
                    return Err(Error::Config("mlp weight shapes do not match dims".into()));
                }
                Self::mlp(
                    w1,
                    need_vec(&w.b1, "b1")?,
                    w2,
                    need_vec(&w.b2, "b2")?,
                    ck.activation.unwrap_or_default(),
                )?
            }
            (arch, dims) => {
                return Err(Error::Config(format!(
                    "unsupported checkpoint arch {arch:?} with dims {dims:?}"
                )))
            }
        };
        match &ck.input_projection {
            Some(rows) => params.with_input_projection(Matrix::from_rows(rows)?),
            None => Ok(params),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.to_checkpoint())?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&serde_json::from_str(&text)?)
    }
}

/// Serialized model: `{"arch", "dims", "weights", ...}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub arch: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
    pub dims: Vec<usize>,
    pub weights: CheckpointWeights,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_projection: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct CheckpointWeights {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w2: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<Vec<f64>>,
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

/// `x · Wᵀ + b` with `W` given flat as `out × x.cols()`.
fn affine(x: &Matrix, w: &[f64], b: &[f64], out: usize) -> Matrix {
    let k = x.cols();
    if out < 8 {
        return Matrix::from_fn(x.rows(), out, |i, j| dot(x.row(i), &w[j * k..(j + 1) * k]) + b[j]);
    }
    let wt = Matrix::from_raw(out, k, w.to_vec()).transpose();
    let mut z = Matrix::from_fn(x.rows(), out, |_, j| b[j]);
    gemm_acc(x, &wt, &mut z);
    z
}

fn col_sums(m: &Matrix, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..m.rows() {
        for (o, v) in out.iter_mut().zip(m.row(i)) {
            *o += v;
        }
    }
}

/// `log Σ exp(z) − z[y]`, stabilized by the max logit.
pub fn cross_entropy(logits: &[f64], y: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - m).exp()).sum();
    (m + sum.ln() - logits[y]).max(0.0)
}

pub fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}
