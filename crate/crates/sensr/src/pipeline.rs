//! End-to-end recipes shared by the command line, the examples and the tests.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::auditor::{audit, AttackConfig, AuditConfig, AuditReport};
use crate::data::{make_toy, TabularDataset, ToyConfig, GENDER, RACE};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::{Architecture, ModelParams};
use crate::plot::{decision_heatmap, to_pixel, Image, Window};
use crate::trainer::{train as train_model, Mode, TrainConfig};
use crate::fair_metric::{
    axis, learn_subspace_softmax, projection_complement, MahalanobisMetric, SensitiveSubspace, SoftmaxFitConfig,
};

/// ℓ2 penalty of the gender classifier used for the Adult subspace.
pub const ADULT_GENDER_L2: f64 = 0.1;

/// Sensitive subspace for Adult: the span of a gender classifier's
/// coefficients (fit with the gender column zeroed) and the gender and race
/// axes.
pub fn adult_subspace(train: &TabularDataset, l2_reg: f64, fit: &SoftmaxFitConfig) -> Result<SensitiveSubspace> {
    let g = train.meta.index_of(GENDER)?;
    let r = train.meta.index_of(RACE)?;
    let mut x = train.features.clone();
    for i in 0..x.rows() {
        x.set(i, g, 0.0);
    }
    let w = learn_subspace_softmax(&x, train.protected(GENDER)?, l2_reg, fit)?;
    let d = train.dim();
    w.with_extra_directions(&[axis(d, g), axis(d, r)])
}

/// Projector metric `I − QQᵀ` on [`adult_subspace`].
pub fn adult_metric(train: &TabularDataset, l2_reg: f64, fit: &SoftmaxFitConfig) -> Result<MahalanobisMetric> {
    projection_complement(&adult_subspace(train, l2_reg, fit)?)
}

/// Settings of the two-group toy demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyDemoConfig {
    pub toy: ToyConfig,
    /// The held-out sample is this many times larger than the training one.
    pub test_scale: usize,
    pub arch: Architecture,
    pub train: TrainConfig,
    pub audit: AuditConfig,
    /// Side of the square heatmaps, in pixels.
    pub image_size: usize,
}

impl Default for ToyDemoConfig {
    fn default() -> Self {
        Self {
            toy: ToyConfig::default(),
            test_scale: 10,
            arch: Architecture::Logistic,
            train: TrainConfig {
                epochs: 2000,
                batch_size: 100,
                epsilon: 0.1,
                lambda_init: 1.0,
                lambda_step: 0.1,
                theta_step: 0.01,
                attack: AttackConfig {
                    subspace_step: 0.5,
                    subspace_epochs: 10,
                    full_step: 0.05,
                    full_epochs: 20,
                    ..AttackConfig::adult()
                },
                ..TrainConfig::adult()
            },
            audit: AuditConfig {
                epsilon: 0.1,
                lambda_init: 1.0,
                lambda_step: 0.1,
                batch_size: 100,
                max_iters: 500,
                attack: AttackConfig {
                    subspace_step: 0.5,
                    subspace_epochs: 10,
                    full_step: 0.05,
                    full_epochs: 20,
                    ..AttackConfig::adult()
                },
                ..AuditConfig::default()
            },
            image_size: 160,
        }
    }
}

impl ToyDemoConfig {
    /// Uses `seed` for the data, the training run and the audit.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.toy.seed = seed;
        self.train.seed = seed;
        self.audit.seed = seed;
        self
    }
}

/// Outcome for one trained toy model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModelSummary {
    pub accuracy_majority: f64,
    pub accuracy_minority: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub robust_loss: f64,
    pub clean_loss: f64,
    pub certificate_gap: f64,
    /// Mean `|x*₀ − x₀|` of the unfair map on the training data.
    pub mean_horizontal_shift: f64,
    /// Mean `|x*₁ − x₁|`.
    pub mean_vertical_shift: f64,
    /// Largest change of the logit margin over held-out points moved along the
    /// horizontal axis by up to the data width.
    pub horizontal_sensitivity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyDemoReport {
    pub baseline: ToyModelSummary,
    pub sensr: ToyModelSummary,
}

/// Models and audits produced by [`run_toy_demo`].
pub struct ToyDemoOutput {
    pub train: TabularDataset,
    pub test: TabularDataset,
    pub metric: MahalanobisMetric,
    pub baseline: ModelParams,
    pub sensr: ModelParams,
    pub baseline_audit: AuditReport,
    pub sensr_audit: AuditReport,
    pub report: ToyDemoReport,
}

/// Fair metric of the toy problem: the horizontal axis is sensitive.
pub fn toy_metric() -> Result<MahalanobisMetric> {
    projection_complement(&SensitiveSubspace::from_axes(2, &[0])?)
}

/// Trains the baseline and SenSR on toy data, audits both and measures
/// per-group accuracy on a larger held-out sample.
pub fn run_toy_demo(cfg: &ToyDemoConfig) -> Result<ToyDemoOutput> {
    let train = make_toy(&cfg.toy)?;
    let test = make_toy(&ToyConfig {
        seed: cfg.toy.seed.wrapping_add(1),
        n_major: cfg.toy.n_major * cfg.test_scale.max(1),
        n_minor: cfg.toy.n_minor * cfg.test_scale.max(1),
        ..cfg.toy.clone()
    })?;
    let metric = toy_metric()?;
    let fit = |mode: Mode| -> Result<ModelParams> {
        if cfg.train.epochs == 0 {
            return ModelParams::init(cfg.arch, 2, 2, cfg.train.seed);
        }
        let tc = cfg.train.clone().with_mode(mode);
        Ok(train_model(&train.features, &train.labels, 2, Some(&metric), cfg.arch, &tc)?.0)
    };
    let baseline = fit(Mode::Baseline)?;
    let sensr = fit(Mode::Sensr)?;
    let baseline_audit = audit(&baseline, &metric, &train.features, &train.labels, &cfg.audit)?;
    let sensr_audit = audit(&sensr, &metric, &train.features, &train.labels, &cfg.audit)?;
    let report = ToyDemoReport {
        baseline: summarize(&baseline, &baseline_audit, &train, &test)?,
        sensr: summarize(&sensr, &sensr_audit, &train, &test)?,
    };
    Ok(ToyDemoOutput {
        train,
        test,
        metric,
        baseline,
        sensr,
        baseline_audit,
        sensr_audit,
        report,
    })
}

fn summarize(
    model: &ModelParams,
    report: &AuditReport,
    train: &TabularDataset,
    test: &TabularDataset,
) -> Result<ToyModelSummary> {
    let preds = model.predict_batch(&test.features)?;
    let group = test.protected("group")?;
    let acc = |g: usize| {
        let idx: Vec<usize> = (0..test.len()).filter(|&i| group[i] == g).collect();
        idx.iter().filter(|&&i| preds[i] == test.labels[i]).count() as f64 / idx.len() as f64
    };
    let n = report.per_sample.len() as f64;
    let shift = |j: usize| {
        report
            .per_sample
            .iter()
            .map(|s| (s.x_star[j] - train.features.get(s.index, j)).abs())
            .sum::<f64>()
            / n
    };
    Ok(ToyModelSummary {
        accuracy_majority: acc(0),
        accuracy_minority: acc(1),
        epsilon: report.epsilon,
        lambda: report.lambda_final,
        robust_loss: report.robust_loss,
        clean_loss: report.clean_loss,
        certificate_gap: report.certificate_gap,
        mean_horizontal_shift: shift(0),
        mean_vertical_shift: shift(1),
        horizontal_sensitivity: horizontal_sensitivity(model, &test.features)?,
    })
}

/// `max |margin(x + t·e₀) − margin(x)|` over the rows of `x` and a grid of
/// `|t|` up to the horizontal extent of `x`.
pub fn horizontal_sensitivity(model: &ModelParams, x: &Matrix) -> Result<f64> {
    let h = x.column(0);
    let lo = h.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = hi - lo;
    let margins = |m: &Matrix| -> Result<Vec<f64>> {
        let l = model.forward_batch(m)?;
        Ok((0..l.rows()).map(|i| l.get(i, 1) - l.get(i, 0)).collect())
    };
    let base = margins(x)?;
    let mut worst = 0.0f64;
    for step in [-1.0, -0.5, -0.25, 0.25, 0.5, 1.0] {
        let moved = Matrix::from_fn(x.rows(), 2, |i, j| x.get(i, j) + if j == 0 { step * width } else { 0.0 });
        for (a, b) in margins(&moved)?.iter().zip(&base) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Writes the demo's data, checkpoints, audits, report and the three
/// heatmaps (baseline, baseline unfair map, SenSR) into `dir`.
pub fn write_toy_demo(out: &ToyDemoOutput, cfg: &ToyDemoConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    out.train.save_snapshot(&dir.join("toy_train.csv"))?;
    out.test.save_snapshot(&dir.join("toy_test.csv"))?;
    out.metric.save(&dir.join("metric.json"))?;
    out.baseline.save(&dir.join("baseline.json"))?;
    out.sensr.save(&dir.join("sensr.json"))?;
    out.baseline_audit.save_json(&dir.join("baseline_audit.json"))?;
    out.sensr_audit.save_json(&dir.join("sensr_audit.json"))?;
    let json = serde_json::to_string_pretty(&out.report)?;
    let report_path = dir.join("report.json");
    std::fs::write(&report_path, json).map_err(|e| Error::io(&report_path, e))?;

    let size = cfg.image_size.max(2);
    let win = Window::around(&out.train.features, 0.5)?;
    let group = out.train.protected("group")?;
    let draw_points = |img: &mut Image| {
        for i in 0..out.train.len() {
            let (px, py) = to_pixel(&win, size, size, out.train.features.get(i, 0), out.train.features.get(i, 1));
            let colour = match (group[i], out.train.labels[i]) {
                (0, 0) => [20, 20, 120],
                (0, _) => [120, 20, 20],
                (_, 0) => [0, 160, 220],
                _ => [240, 140, 0],
            };
            img.dot(px, py, 1, colour);
        }
    };
    let mut a = decision_heatmap(&out.baseline, &win, size, size)?;
    draw_points(&mut a);
    a.write_ppm(&dir.join("fig_a_baseline.ppm"))?;

    let mut b = decision_heatmap(&out.baseline, &win, size, size)?;
    for s in &out.baseline_audit.per_sample {
        let x = out.train.features.row(s.index);
        let from = to_pixel(&win, size, size, x[0], x[1]);
        let to = to_pixel(&win, size, size, s.x_star[0], s.x_star[1]);
        b.line(from, to, [90, 90, 90]);
        b.dot(to.0, to.1, 1, [0, 0, 0]);
    }
    b.write_ppm(&dir.join("fig_b_unfair_map.ppm"))?;

    let mut c = decision_heatmap(&out.sensr, &win, size, size)?;
    draw_points(&mut c);
    c.write_ppm(&dir.join("fig_c_sensr.ppm"))
}
