//! Auditing a classifier for individual fairness through the dual of the
//! fair-Wasserstein robust loss.
//!
//! For a budget `ε` the worst-case loss over distributions within fair
//! transport distance `ε` of the audit data equals
//!
//! ```text
//! inf_{λ ≥ 0}  λε + (1/n) Σᵢ ℓ_λ^c(xᵢ, yᵢ),
//! ℓ_λ^c(xᵢ, yᵢ) = sup_x  ℓ(x, yᵢ) − λ·d_x²(x, xᵢ).
//! ```
//!
//! [`c_transform`] approximates the inner supremum with a two-phase ascent
//! (sensitive subspace first, then the full space), [`solve_dual`] runs
//! projected stochastic gradient steps on `λ`, and [`audit`] assembles the
//! robust loss, the clean loss and their gap into an [`AuditReport`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fair_metric::MahalanobisMetric;
use crate::linalg::{dot, Matrix};
use crate::models::ModelParams;
use crate::optim::{Adam, AdamConfig};

const ATTACK_CHUNK: usize = 64;

/// A loss that can be differentiated with respect to its input.
pub trait InputLoss: Sync {
    fn input_dim(&self) -> usize;

    /// Per-row losses and input gradients.
    fn loss_and_input_grad(&self, x: &Matrix, y: &[usize]) -> Result<(Vec<f64>, Matrix)>;
}

impl InputLoss for ModelParams {
    fn input_dim(&self) -> usize {
        ModelParams::input_dim(self)
    }

    fn loss_and_input_grad(&self, x: &Matrix, y: &[usize]) -> Result<(Vec<f64>, Matrix)> {
        let g = self.backprop(x, y, true, false)?;
        Ok((g.losses, g.input.expect("input gradient requested")))
    }
}

/// `ℓ(x) = gᵀx + offset`, ignoring the label. Its c-transform under the
/// Euclidean metric is known in closed form, which makes it a handy oracle.
#[derive(Debug, Clone)]
pub struct LinearLoss {
    pub gradient: Vec<f64>,
    pub offset: f64,
}

impl InputLoss for LinearLoss {
    fn input_dim(&self) -> usize {
        self.gradient.len()
    }

    fn loss_and_input_grad(&self, x: &Matrix, _y: &[usize]) -> Result<(Vec<f64>, Matrix)> {
        check_dim(self.gradient.len(), x.cols())?;
        let losses = (0..x.rows())
            .map(|i| dot(&self.gradient, x.row(i)) + self.offset)
            .collect();
        let mut grad = Vec::with_capacity(x.rows() * x.cols());
        for _ in 0..x.rows() {
            grad.extend_from_slice(&self.gradient);
        }
        Ok((losses, Matrix::new(x.rows(), x.cols(), grad)?))
    }
}

/// Two-phase attack settings: subspace steps then full-space steps, each
/// driven by its own Adam optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    pub subspace_step: f64,
    pub subspace_epochs: usize,
    pub full_step: f64,
    pub full_epochs: usize,
    #[serde(flatten)]
    pub adam: AdamConfig,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self::adult()
    }
}

impl AttackConfig {
    /// s = 10, se = 50, f = 1e-4, fe = 40.
    pub fn adult() -> Self {
        Self {
            subspace_step: 10.0,
            subspace_epochs: 50,
            full_step: 1e-4,
            full_epochs: 40,
            adam: AdamConfig::default(),
        }
    }

    /// s = 0.1, se = 10, f = 0.01, fe = 10.
    pub fn sentiment() -> Self {
        Self {
            subspace_step: 0.1,
            subspace_epochs: 10,
            full_step: 0.01,
            full_epochs: 10,
            adam: AdamConfig::default(),
        }
    }

    /// No perturbation at all.
    pub fn none() -> Self {
        Self {
            subspace_epochs: 0,
            full_epochs: 0,
            ..Self::adult()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.subspace_step > 0.0) || !(self.full_step > 0.0) {
            return Err(Error::invalid("attack step sizes must be positive"));
        }
        Ok(())
    }

    /// Drops the full-space phase when the budget is zero.
    pub fn for_budget(&self, epsilon: f64) -> Self {
        let mut cfg = *self;
        if epsilon <= 0.0 {
            cfg.full_epochs = 0;
        }
        if epsilon > 0.0 && cfg.full_epochs > 0 && cfg.full_step >= epsilon {
            log::warn!(
                "full_step {} is not below the budget {}; the full phase may overshoot",
                cfg.full_step,
                epsilon
            );
        }
        cfg
    }
}

/// Approximate c-transform at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CTransformResult {
    /// `ℓ(x*) − λ·d_x²(x*, xᵢ)`.
    pub value: f64,
    /// The unfair map's image of `xᵢ`.
    pub x_star: Vec<f64>,
    /// `ℓ(x*)`.
    pub loss: f64,
    /// Loss at the unperturbed point.
    pub clean_loss: f64,
    /// `d_x²(x*, xᵢ)`.
    pub dist_sq: f64,
}

/// c-transform of a single labelled point.
pub fn c_transform<L: InputLoss + ?Sized>(
    model: &L,
    metric: &MahalanobisMetric,
    x: &[f64],
    y: usize,
    lambda: f64,
    attack: &AttackConfig,
) -> Result<CTransformResult> {
    let xs = Matrix::new(1, x.len(), x.to_vec())?;
    let mut out = c_transform_batch(model, metric, &xs, &[y], lambda, attack)?;
    Ok(out.remove(0))
}

/// c-transforms of every row of `x`. Rows are attacked independently (and in
/// parallel); the result order matches the input order.
pub fn c_transform_batch<L: InputLoss + ?Sized>(
    model: &L,
    metric: &MahalanobisMetric,
    x: &Matrix,
    y: &[usize],
    lambda: f64,
    attack: &AttackConfig,
) -> Result<Vec<CTransformResult>> {
    check_dim(model.input_dim(), x.cols())?;
    check_dim(metric.dim(), x.cols())?;
    check_dim(x.rows(), y.len())?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("lambda must be a nonnegative finite number"));
    }
    attack.validate()?;
    let n = x.rows();
    let chunks: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(ATTACK_CHUNK)
        .map(|s| s..(s + ATTACK_CHUNK).min(n))
        .collect();
    let parts = chunks
        .into_par_iter()
        .map(|range| {
            let idx: Vec<usize> = range.clone().collect();
            attack_rows(model, metric, &x.select_rows(&idx), &y[range], lambda, attack)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Running state of the attack for a block of rows.
struct AttackState<'a> {
    metric: &'a MahalanobisMetric,
    lambda: f64,
    origin: &'a Matrix,
    clean: Vec<f64>,
    best_value: Vec<f64>,
    best_loss: Vec<f64>,
    best_dist: Vec<f64>,
    best_x: Matrix,
}

impl AttackState<'_> {
    /// Scores the point `x`, updates the best iterates and returns the
    /// objective gradient `∇ℓ − 2λΣ(x − xᵢ)` per row.
    fn evaluate<L: InputLoss + ?Sized>(&mut self, model: &L, x: &Matrix, y: &[usize]) -> Result<Matrix> {
        let (losses, mut grad) = model.loss_and_input_grad(x, y)?;
        let d = x.cols();
        let mut disp = vec![0.0; d];
        let mut sigma_disp = vec![0.0; d];
        for i in 0..x.rows() {
            for ((o, a), b) in disp.iter_mut().zip(x.row(i)).zip(self.origin.row(i)) {
                *o = a - b;
            }
            self.metric.apply(&disp, &mut sigma_disp);
            let dist = dot(&disp, &sigma_disp).max(0.0);
            let value = losses[i] - self.lambda * dist;
            if !value.is_finite() {
                return Err(Error::AttackDiverged);
            }
            if value > self.best_value[i] {
                self.best_value[i] = value;
                self.best_loss[i] = losses[i];
                self.best_dist[i] = dist;
                self.best_x.row_mut(i).copy_from_slice(x.row(i));
            }
            if self.lambda != 0.0 {
                for (g, s) in grad.row_mut(i).iter_mut().zip(&sigma_disp) {
                    *g -= 2.0 * self.lambda * s;
                }
            }
        }
        if !grad.is_finite() {
            return Err(Error::AttackDiverged);
        }
        Ok(grad)
    }
}

fn attack_rows<L: InputLoss + ?Sized>(
    model: &L,
    metric: &MahalanobisMetric,
    x0: &Matrix,
    y: &[usize],
    lambda: f64,
    attack: &AttackConfig,
) -> Result<Vec<CTransformResult>> {
    let (n, d) = x0.shape();
    let (clean, grad0) = model.loss_and_input_grad(x0, y)?;
    if clean.iter().any(|v| !v.is_finite()) {
        return Err(Error::AttackDiverged);
    }
    let mut state = AttackState {
        metric,
        lambda,
        origin: x0,
        best_value: clean.clone(),
        best_loss: clean.clone(),
        best_dist: vec![0.0; n],
        best_x: x0.clone(),
        clean,
    };
    let mut grad = grad0;
    let mut current = x0.clone();

    // phase 1: ascend along the sensitive subspace, x = x₀ + u Qᵀ
    if let Some(sub) = metric.subspace().filter(|_| attack.subspace_epochs > 0) {
        let q = sub.basis();
        let r = q.cols();
        let mut u = Matrix::zeros(n, r);
        let mut adam = Adam::new(n * r, attack.subspace_step, attack.adam);
        for _ in 0..attack.subspace_epochs {
            let grad_u = grad.matmul(q)?;
            adam.ascend(u.as_mut_slice(), grad_u.as_slice());
            current = x0.add(&u.matmul_transpose(q)?)?;
            grad = state.evaluate(model, &current, y)?;
        }
    }

    // phase 2: ascend the full perturbation from where phase 1 stopped
    if attack.full_epochs > 0 {
        let start = current.clone();
        let mut delta = Matrix::zeros(n, d);
        let mut adam = Adam::new(n * d, attack.full_step, attack.adam);
        for _ in 0..attack.full_epochs {
            adam.ascend(delta.as_mut_slice(), grad.as_slice());
            current = start.add(&delta)?;
            grad = state.evaluate(model, &current, y)?;
        }
    }

    Ok((0..n)
        .map(|i| CTransformResult {
            value: state.best_value[i],
            x_star: state.best_x.row(i).to_vec(),
            loss: state.best_loss[i],
            clean_loss: state.clean[i],
            dist_sq: state.best_dist[i],
        })
        .collect())
}

/// Settings of the dual solver and the audit built on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    /// Transport budget `ε`.
    pub epsilon: f64,
    pub lambda_init: f64,
    /// Constant step `α` on the dual variable.
    pub lambda_step: f64,
    pub batch_size: usize,
    pub max_iters: usize,
    /// Stop once `|Δλ|` stays below this for `window` consecutive iterations.
    pub tolerance: f64,
    pub window: usize,
    pub seed: u64,
    pub attack: AttackConfig,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            lambda_init: 1.0,
            lambda_step: 0.01,
            batch_size: 100,
            max_iters: 1000,
            tolerance: 1e-4,
            window: 50,
            seed: 0,
            attack: AttackConfig::adult(),
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid("epsilon must be a nonnegative finite number"));
        }
        if !(self.lambda_init >= 0.0) {
            return Err(Error::invalid("lambda_init must be nonnegative"));
        }
        if !(self.lambda_step > 0.0) {
            return Err(Error::invalid("lambda_step must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        self.attack.validate()
    }
}

/// Result of the stochastic dual iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSolution {
    pub lambda: f64,
    /// `λ̂_t` for t = 1, 2, … (starting value first).
    pub trajectory: Vec<f64>,
    /// Mean transport cost of each minibatch.
    pub mean_costs: Vec<f64>,
    pub converged: bool,
}

/// `λ̂_{t+1} = max{0, λ̂_t − α(ε − (1/B) Σ_b d_x²(x_b, x_b*))}`.
pub fn dual_update(lambda: f64, step: f64, epsilon: f64, mean_cost: f64) -> f64 {
    (lambda - step * (epsilon - mean_cost)).max(0.0)
}

/// Stochastic gradient method on the univariate dual.
pub fn solve_dual<L: InputLoss + ?Sized>(
    model: &L,
    metric: &MahalanobisMetric,
    features: &Matrix,
    labels: &[usize],
    cfg: &AuditConfig,
) -> Result<DualSolution> {
    cfg.validate()?;
    if !(cfg.epsilon > 0.0) {
        return Err(Error::invalid("solve_dual needs epsilon > 0"));
    }
    let n = features.rows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    check_dim(n, labels.len())?;
    let attack = cfg.attack.for_budget(cfg.epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut lambda = cfg.lambda_init;
    let mut trajectory = vec![lambda];
    let mut mean_costs = Vec::new();
    let mut quiet = 0;
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let idx: Vec<usize> = (0..cfg.batch_size).map(|_| rng.random_range(0..n)).collect();
        let xb = features.select_rows(&idx);
        let yb: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        let res = c_transform_batch(model, metric, &xb, &yb, lambda, &attack)?;
        let mean_cost = res.iter().map(|r| r.dist_sq).sum::<f64>() / res.len() as f64;
        let next = dual_update(lambda, cfg.lambda_step, cfg.epsilon, mean_cost);
        mean_costs.push(mean_cost);
        trajectory.push(next);
        quiet = if (next - lambda).abs() < cfg.tolerance { quiet + 1 } else { 0 };
        lambda = next;
        if quiet >= cfg.window {
            converged = true;
            break;
        }
    }
    Ok(DualSolution {
        lambda,
        trajectory,
        mean_costs,
        converged,
    })
}

/// Dual objective `λε + (1/n) Σᵢ ℓ_λ^c(zᵢ)` over the whole data set.
pub fn dual_value<L: InputLoss + ?Sized>(
    model: &L,
    metric: &MahalanobisMetric,
    features: &Matrix,
    labels: &[usize],
    lambda: f64,
    epsilon: f64,
    attack: &AttackConfig,
) -> Result<f64> {
    let res = c_transform_batch(model, metric, features, labels, lambda, &attack.for_budget(epsilon))?;
    Ok(lambda * epsilon + mean(res.iter().map(|r| r.value)))
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = it.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if c == 0 {
        0.0
    } else {
        s / c as f64
    }
}

/// Unfair-map output for one audited sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePerturbation {
    pub index: usize,
    pub x_star: Vec<f64>,
    /// `ℓ(x*) − ℓ(x)`.
    pub loss_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub epsilon: f64,
    pub lambda_final: f64,
    /// `λ*ε + (1/n) Σ ℓ_{λ*}^c`, an estimate of the worst-case loss.
    pub robust_loss: f64,
    pub clean_loss: f64,
    /// `robust_loss − clean_loss`.
    pub certificate_gap: f64,
    /// Mean `d_x²(x, x*)` over the audit set.
    pub mean_perturbation_cost: f64,
    pub dual_iterations: usize,
    pub dual_converged: bool,
    pub per_sample: Vec<SamplePerturbation>,
}

impl AuditReport {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// One row per sample: index, original features, perturbed features,
    /// loss gain.
    pub fn write_perturbations_csv(&self, features: &Matrix, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let d = features.cols();
        let mut header = vec!["index".to_string()];
        header.extend((0..d).map(|j| format!("x{j}")));
        header.extend((0..d).map(|j| format!("x_star{j}")));
        header.push("loss_gain".into());
        let io = |e| Error::io(path, e);
        writeln!(w, "{}", header.join(",")).map_err(io)?;
        for s in &self.per_sample {
            let mut row = vec![s.index.to_string()];
            row.extend(features.row(s.index).iter().map(|v| v.to_string()));
            row.extend(s.x_star.iter().map(|v| v.to_string()));
            row.push(s.loss_gain.to_string());
            writeln!(w, "{}", row.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Solves the dual, then evaluates the robust loss and the unfair map on the
/// full audit set.
///
/// A zero budget is the trivial ball: the report equals the clean loss with
/// every sample left in place.
pub fn audit<L: InputLoss + ?Sized>(
    model: &L,
    metric: &MahalanobisMetric,
    features: &Matrix,
    labels: &[usize],
    cfg: &AuditConfig,
) -> Result<AuditReport> {
    cfg.validate()?;
    let n = features.rows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    check_dim(n, labels.len())?;
    if cfg.epsilon == 0.0 {
        let (losses, _) = model.loss_and_input_grad(features, labels)?;
        let clean = mean(losses.iter().copied());
        return Ok(AuditReport {
            epsilon: 0.0,
            lambda_final: cfg.lambda_init,
            robust_loss: clean,
            clean_loss: clean,
            certificate_gap: 0.0,
            mean_perturbation_cost: 0.0,
            dual_iterations: 0,
            dual_converged: true,
            per_sample: (0..n)
                .map(|i| SamplePerturbation {
                    index: i,
                    x_star: features.row(i).to_vec(),
                    loss_gain: 0.0,
                })
                .collect(),
        });
    }
    let dual = solve_dual(model, metric, features, labels, cfg)?;
    let lambda = dual.lambda;
    let res = c_transform_batch(
        model,
        metric,
        features,
        labels,
        lambda,
        &cfg.attack.for_budget(cfg.epsilon),
    )?;
    let clean_loss = mean(res.iter().map(|r| r.clean_loss));
    let robust_loss = lambda * cfg.epsilon + mean(res.iter().map(|r| r.value));
    Ok(AuditReport {
        epsilon: cfg.epsilon,
        lambda_final: lambda,
        robust_loss,
        clean_loss,
        certificate_gap: robust_loss - clean_loss,
        mean_perturbation_cost: mean(res.iter().map(|r| r.dist_sq)),
        dual_iterations: dual.trajectory.len() - 1,
        dual_converged: dual.converged,
        per_sample: res
            .into_iter()
            .enumerate()
            .map(|(i, r)| SamplePerturbation {
                index: i,
                loss_gain: r.loss - r.clean_loss,
                x_star: r.x_star,
            })
            .collect(),
    })
}

/// Empirical Lipschitz constant of the loss with respect to `d_x`: the largest
/// `|ℓ(z₁) − ℓ(z₂)| / d_x(x₁, x₂)` over randomly drawn pairs sharing a label.
pub fn lipschitz_estimate<L: InputLoss + ?Sized>(
    model: &L,
    metric: &MahalanobisMetric,
    features: &Matrix,
    labels: &[usize],
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    let n = features.rows();
    if n < 2 {
        return Ok(0.0);
    }
    check_dim(n, labels.len())?;
    let (losses, _) = model.loss_and_input_grad(features, labels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..samples {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j || labels[i] != labels[j] {
            continue;
        }
        let d = metric.distance(features.row(i), features.row(j))?;
        if d > 0.0 {
            best = best.max((losses[i] - losses[j]).abs() / d);
        }
    }
    Ok(best)
}
