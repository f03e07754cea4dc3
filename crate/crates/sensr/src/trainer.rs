//! SenSR training and the two reference trainers.
//!
//! An "epoch" here is a single minibatch step, so `epochs` counts parameter
//! updates.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auditor::{c_transform_batch, dual_update, AttackConfig};
use crate::error::{check_dim, Error, Result};
use crate::fair_metric::MahalanobisMetric;
use crate::linalg::Matrix;
use crate::models::{Architecture, ModelParams};
use crate::optim::{Adam, AdamConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Sensr,
    Baseline,
    Project,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sensr" => Ok(Mode::Sensr),
            "baseline" => Ok(Mode::Baseline),
            "project" => Ok(Mode::Project),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub epsilon: f64,
    pub lambda_init: f64,
    pub lambda_step: f64,
    pub theta_step: f64,
    pub attack: AttackConfig,
    pub adam: AdamConfig,
    pub seed: u64,
    pub mode: Mode,
    /// Keep an in-memory copy of the parameters this often, for recovery
    /// after divergence.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::adult()
    }
}

impl TrainConfig {
    /// E = 12000, B = 1000, ε = 1e-3 with the Adult attack.
    pub fn adult() -> Self {
        Self {
            epochs: 12_000,
            batch_size: 1000,
            epsilon: 1e-3,
            lambda_init: 1.0,
            lambda_step: 0.01,
            theta_step: 1e-3,
            attack: AttackConfig::adult(),
            adam: AdamConfig::default(),
            seed: 0,
            mode: Mode::Sensr,
            checkpoint_every: 500,
        }
    }

    /// E = 4000, B = 1000, ε = 0.1 with the sentiment attack.
    pub fn sentiment() -> Self {
        Self {
            epochs: 4000,
            epsilon: 0.1,
            attack: AttackConfig::sentiment(),
            ..Self::adult()
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch_size must be at least 1"));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid("epsilon must be a nonnegative finite number"));
        }
        if !(self.lambda_step > 0.0) || !(self.theta_step > 0.0) {
            return Err(Error::invalid("step sizes must be positive"));
        }
        if !(self.lambda_init >= 0.0) {
            return Err(Error::invalid("lambda_init must be nonnegative"));
        }
        self.attack.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// `λ̂` after this epoch's update.
    pub lambda: f64,
    pub clean_loss: f64,
    /// `λ̂ε + mean c-transform` at the `λ̂` used for the attack.
    pub robust_loss: f64,
    pub mean_cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Row indices of each class.
pub fn class_index(labels: &[usize], classes: usize) -> Result<Vec<Vec<usize>>> {
    let mut by_class = vec![Vec::new(); classes];
    for (i, &y) in labels.iter().enumerate() {
        if y >= classes {
            return Err(Error::invalid(format!("label {y} out of range for {classes} classes")));
        }
        by_class[y].push(i);
    }
    if let Some(c) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::EmptyClass(c));
    }
    Ok(by_class)
}

/// `batch` indices with an equal share (up to one) per class, drawn with
/// replacement inside each class. The remainder goes to the lowest classes.
pub fn balanced_minibatch<R: Rng + ?Sized>(
    by_class: &[Vec<usize>],
    batch: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let c = by_class.len();
    if c == 0 {
        return Err(Error::EmptyInput);
    }
    if batch < c {
        return Err(Error::invalid(format!(
            "batch size {batch} is smaller than the number of classes {c}"
        )));
    }
    if let Some(k) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::EmptyClass(k));
    }
    let mut out = Vec::with_capacity(batch);
    for (k, members) in by_class.iter().enumerate() {
        let take = batch / c + usize::from(k < batch % c);
        out.extend((0..take).map(|_| members[rng.random_range(0..members.len())]));
    }
    Ok(out)
}

/// SenSR: alternate the unfair-map attack, the dual step on `λ̂` and an
/// Adam step on the parameters evaluated at the attacked points.
pub fn train_sensr(
    features: &Matrix,
    labels: &[usize],
    classes: usize,
    metric: &MahalanobisMetric,
    arch: Architecture,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainLog)> {
    check_dim(features.cols(), metric.dim())?;
    let model = ModelParams::init(arch, features.cols(), classes, cfg.seed)?;
    run(features, labels, model, Some(metric), cfg)
}

/// Empirical risk minimization on the same balanced batches and optimizer.
pub fn train_baseline(
    features: &Matrix,
    labels: &[usize],
    classes: usize,
    arch: Architecture,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainLog)> {
    let model = ModelParams::init(arch, features.cols(), classes, cfg.seed)?;
    run(features, labels, model, None, cfg)
}

/// Baseline training on inputs projected by the metric's `Σ`. The projection
/// stays attached to the returned model, so it is applied at evaluation too.
pub fn train_project(
    features: &Matrix,
    labels: &[usize],
    classes: usize,
    metric: &MahalanobisMetric,
    arch: Architecture,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainLog)> {
    check_dim(features.cols(), metric.dim())?;
    let model = ModelParams::init(arch, features.cols(), classes, cfg.seed)?
        .with_input_projection(metric.sigma().clone())?;
    run(features, labels, model, None, cfg)
}

/// Dispatches on `cfg.mode`.
pub fn train(
    features: &Matrix,
    labels: &[usize],
    classes: usize,
    metric: Option<&MahalanobisMetric>,
    arch: Architecture,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainLog)> {
    let need_metric = || Error::Config(format!("mode {:?} needs a fair metric", cfg.mode));
    match cfg.mode {
        Mode::Sensr => train_sensr(features, labels, classes, metric.ok_or_else(need_metric)?, arch, cfg),
        Mode::Baseline => train_baseline(features, labels, classes, arch, cfg),
        Mode::Project => train_project(features, labels, classes, metric.ok_or_else(need_metric)?, arch, cfg),
    }
}

fn run(
    features: &Matrix,
    labels: &[usize],
    mut model: ModelParams,
    metric: Option<&MahalanobisMetric>,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainLog)> {
    cfg.validate()?;
    if features.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    check_dim(features.rows(), labels.len())?;
    check_dim(model.input_dim(), features.cols())?;
    let by_class = class_index(labels, model.classes())?;
    let attack = cfg.attack.for_budget(cfg.epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut adam = Adam::new(model.num_params(), cfg.theta_step, cfg.adam);
    let mut lambda = cfg.lambda_init;
    let mut last_good = model.clone();
    let mut log = TrainLog::default();
    let inv_b = 1.0 / cfg.batch_size as f64;

    for epoch in 0..cfg.epochs {
        if cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 {
            last_good = model.clone();
        }
        let diverged = |last_good: &ModelParams| Error::TrainingDiverged {
            epoch,
            last_good: Box::new(last_good.clone()),
        };
        let idx = balanced_minibatch(&by_class, cfg.batch_size, &mut rng)?;
        let xb = features.select_rows(&idx);
        let yb: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();

        let (x_fit, record) = match metric {
            Some(metric) => {
                let res = match c_transform_batch(&model, metric, &xb, &yb, lambda, &attack) {
                    Err(Error::AttackDiverged) => return Err(diverged(&last_good)),
                    other => other?,
                };
                let clean = res.iter().map(|r| r.clean_loss).sum::<f64>() * inv_b;
                let values = res.iter().map(|r| r.value).sum::<f64>() * inv_b;
                let mean_cost = res.iter().map(|r| r.dist_sq).sum::<f64>() * inv_b;
                let robust = lambda * cfg.epsilon + values;
                let mut data = Vec::with_capacity(xb.rows() * xb.cols());
                for r in &res {
                    data.extend_from_slice(&r.x_star);
                }
                lambda = dual_update(lambda, cfg.lambda_step, cfg.epsilon, mean_cost);
                let x_star = Matrix::new(xb.rows(), xb.cols(), data).map_err(|_| diverged(&last_good))?;
                (x_star, EpochRecord { epoch, lambda, clean_loss: clean, robust_loss: robust, mean_cost })
            }
            None => (xb, EpochRecord { epoch, lambda, clean_loss: f64::NAN, robust_loss: f64::NAN, mean_cost: 0.0 }),
        };

        let grads = model.backprop(&x_fit, &yb, false, true)?;
        let fit_loss = grads.losses.iter().sum::<f64>() * inv_b;
        let mut grad = grads.params.expect("parameter gradient requested");
        grad.iter_mut().for_each(|g| *g *= inv_b);
        if !fit_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(diverged(&last_good));
        }
        adam.descend(model.theta_mut(), &grad);
        if model.theta().iter().any(|t| !t.is_finite()) {
            return Err(diverged(&last_good));
        }

        let mut record = record;
        if metric.is_none() {
            record.clean_loss = fit_loss;
            record.robust_loss = fit_loss;
        }
        if !record.clean_loss.is_finite() || !record.robust_loss.is_finite() {
            return Err(diverged(&last_good));
        }
        if (epoch + 1) % 500 == 0 {
            log::info!(
                "epoch {} lambda {:.4} clean {:.4} robust {:.4} cost {:.3e}",
                epoch + 1,
                record.lambda,
                record.clean_loss,
                record.robust_loss,
                record.mean_cost
            );
        }
        log.records.push(record);
    }
    Ok((model, log))
}
