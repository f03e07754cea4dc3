//! Command-line front end: `sensr metric|train|audit|eval|demo-toy`.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numeric
//! divergence, 4 I/O error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::auditor::{audit, AuditConfig};
use crate::data::{load_adult, TabularDataset};
use crate::error::{Error, Result};
use crate::fair_metric::{
    axis, learn_subspace_factor, learn_subspace_softmax, projection_complement, ComparableGroup, MahalanobisMetric,
    SoftmaxFitConfig,
};
use crate::linalg::Matrix;
use crate::metrics::evaluate;
use crate::models::{Activation, Architecture, ModelParams};
use crate::pipeline::{run_toy_demo, write_toy_demo, ToyDemoConfig, ADULT_GENDER_L2};
use crate::trainer::{train, Mode, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        e if e.is_divergence() => EXIT_DIVERGED,
        Error::SvdNotConverged => EXIT_DIVERGED,
        Error::Io { .. } => EXIT_IO,
        Error::Csv(e) if e.is_io_error() => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

#[derive(Debug, Parser)]
#[command(name = "sensr", version, about = "Train and audit individually fair classifiers")]
pub struct Cli {
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the attacks; 0 uses every core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for every output file.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Preprocess the UCI Adult files into train/test snapshots.
    PrepareAdult(PrepareAdultArgs),
    /// Learn a fair metric from data.
    Metric(MetricArgs),
    /// Train a classifier.
    Train(TrainArgs),
    /// Audit a classifier for individual fairness.
    Audit(AuditArgs),
    /// Accuracy and fairness metrics of a classifier.
    Eval(EvalArgs),
    /// Two-group toy demonstration with heatmaps.
    DemoToy(DemoToyArgs),
}

#[derive(Debug, Args)]
pub struct PrepareAdultArgs {
    /// Directory holding adult.data and adult.test.
    #[arg(long)]
    pub adult_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricMethod {
    Softmax,
    Factor,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    #[arg(long, value_enum, default_value = "softmax")]
    pub method: MetricMethod,
    /// Dataset snapshot (CSV).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Protected attribute to regress on (softmax).
    #[arg(long)]
    pub protected: Option<String>,
    /// Columns zeroed before fitting (softmax).
    #[arg(long = "zero-column")]
    pub zero_columns: Vec<String>,
    /// Coordinate axes added to the subspace.
    #[arg(long = "axis")]
    pub axes: Vec<String>,
    /// ℓ2 penalty of the protected-attribute classifier.
    #[arg(long)]
    pub l2: Option<f64>,
    /// JSON list of comparable groups: row-index lists or vector lists (factor).
    #[arg(long)]
    pub groups: Option<PathBuf>,
    /// Number of factor directions (factor).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value = "metric.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Sensr,
    Baseline,
    Project,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sensr => Mode::Sensr,
            ModeArg::Baseline => Mode::Baseline,
            ModeArg::Project => Mode::Project,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub metric: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Hidden units; 0 trains a logistic model.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    #[arg(long, default_value = "train_log.csv")]
    pub log: PathBuf,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub metric: Option<PathBuf>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value = "audit.json")]
    pub out: PathBuf,
    #[arg(long, default_value = "perturbations.csv")]
    pub perturbations: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "eval.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DemoToyArgs {
    /// Training epochs for both models; 0 keeps the initialization.
    #[arg(long)]
    pub epochs: Option<usize>,
}

/// Paths a run may refer to.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    /// Training snapshot (used by `metric` and `train`).
    pub train: Option<PathBuf>,
    /// Held-out snapshot (used by `audit` and `eval`).
    pub test: Option<PathBuf>,
    pub adult_dir: Option<PathBuf>,
    pub metric: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

/// JSON run configuration. Every section is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub paths: DataPaths,
    pub arch: Architecture,
    pub train: TrainConfig,
    pub audit: AuditConfig,
    pub softmax: SoftmaxFitConfig,
    pub softmax_l2: f64,
    pub split_seed: u64,
    pub toy: ToyDemoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            paths: DataPaths::default(),
            arch: Architecture::mlp(100),
            train: TrainConfig::adult(),
            audit: AuditConfig::default(),
            softmax: SoftmaxFitConfig::adult(),
            softmax_l2: ADULT_GENDER_L2,
            split_seed: 0,
            toy: ToyDemoConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses and checks that every referenced input file exists.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let p = &cfg.paths;
        for path in [&p.train, &p.test, &p.metric, &p.model, &p.adult_dir].into_iter().flatten() {
            if !path.exists() {
                return Err(Error::Config(format!("referenced file {} does not exist", path.display())));
            }
        }
        cfg.train.validate().map_err(|e| Error::Config(e.to_string()))?;
        cfg.audit.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Pushes one seed into every seeded section.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self.train.seed = seed;
        self.audit.seed = seed;
        self.softmax.seed = seed;
        self.split_seed = seed;
        self.toy = self.toy.with_seed(seed);
        self
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed.or(cfg.seed) {
        cfg = cfg.with_seed(seed);
    }
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| Error::io(&cli.out_dir, e))?;
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| dispatch(cli, &cfg))
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let out = |p: &Path| cli.out_dir.join(p);
    match &cli.command {
        Command::PrepareAdult(a) => prepare_adult(a, cfg, &cli.out_dir),
        Command::Metric(a) => cmd_metric(a, cfg, &out(&a.out)),
        Command::Train(a) => cmd_train(a, cfg, &out(&a.out), &out(&a.log)),
        Command::Audit(a) => cmd_audit(a, cfg, &out(&a.out), &out(&a.perturbations)),
        Command::Eval(a) => cmd_eval(a, cfg, &out(&a.out)),
        Command::DemoToy(a) => cmd_demo_toy(a, cfg, &cli.out_dir),
    }
}

fn required<'a>(flag: &'a Option<PathBuf>, fallback: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    flag.as_deref()
        .or(fallback.as_deref())
        .ok_or_else(|| Error::Config(format!("missing {what}: pass a flag or set it in the config")))
}

fn prepare_adult(a: &PrepareAdultArgs, cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let dir = required(&a.adult_dir, &cfg.paths.adult_dir, "--adult-dir")?;
    let (data, test) = (dir.join("adult.data"), dir.join("adult.test"));
    let adult = load_adult(&[&data, &test], cfg.split_seed)?;
    adult.train.save_snapshot(&out_dir.join("adult_train.csv"))?;
    adult.test.save_snapshot(&out_dir.join("adult_test.csv"))?;
    log::info!(
        "wrote {} training and {} test rows to {}",
        adult.train.len(),
        adult.test.len(),
        out_dir.display()
    );
    Ok(())
}

/// Comparable groups file: either row indices into the data or explicit
/// vectors.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GroupsFile {
    Indices(Vec<Vec<usize>>),
    Vectors(Vec<Vec<Vec<f64>>>),
}

fn cmd_metric(a: &MetricArgs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let data_path = a.data.as_deref().or(cfg.paths.train.as_deref());
    let subspace = match a.method {
        MetricMethod::Softmax => {
            let path = data_path.ok_or_else(|| Error::Config("metric needs --data".into()))?;
            let ds = TabularDataset::load_snapshot(path)?;
            let name = a
                .protected
                .as_deref()
                .ok_or_else(|| Error::Config("softmax metric needs --protected".into()))?;
            let mut x = ds.features.clone();
            for col in &a.zero_columns {
                let j = ds.meta.index_of(col).map_err(|e| Error::Config(e.to_string()))?;
                for i in 0..x.rows() {
                    x.set(i, j, 0.0);
                }
            }
            let protected = ds.protected(name).map_err(|e| Error::Config(e.to_string()))?;
            let sub = learn_subspace_softmax(&x, protected, a.l2.unwrap_or(cfg.softmax_l2), &cfg.softmax)?;
            let axes = a
                .axes
                .iter()
                .map(|n| ds.meta.index_of(n).map(|j| axis(ds.dim(), j)))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Config(e.to_string()))?;
            if axes.is_empty() {
                sub
            } else {
                sub.with_extra_directions(&axes)?
            }
        }
        MetricMethod::Factor => {
            let gpath = a
                .groups
                .as_deref()
                .ok_or_else(|| Error::Config("factor metric needs --groups".into()))?;
            let k = a.k.ok_or_else(|| Error::Config("factor metric needs --k".into()))?;
            let text = std::fs::read_to_string(gpath).map_err(|e| Error::io(gpath, e))?;
            let parsed: GroupsFile = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            let groups = match parsed {
                GroupsFile::Vectors(gs) => gs
                    .iter()
                    .map(|g| ComparableGroup::new(Matrix::from_rows(g)?))
                    .collect::<Result<Vec<_>>>()?,
                GroupsFile::Indices(gs) => {
                    let path = data_path.ok_or_else(|| Error::Config("index groups need --data".into()))?;
                    let ds = TabularDataset::load_snapshot(path)?;
                    gs.iter()
                        .map(|g| {
                            if let Some(&bad) = g.iter().find(|&&i| i >= ds.len()) {
                                return Err(Error::Config(format!("group row {bad} is out of range")));
                            }
                            ComparableGroup::new(ds.features.select_rows(g))
                        })
                        .collect::<Result<Vec<_>>>()?
                }
            };
            learn_subspace_factor(&groups, k)?
        }
    };
    let metric = projection_complement(&subspace)?;
    metric.save(out)?;
    log::info!("subspace rank {} written to {}", subspace.rank(), out.display());
    Ok(())
}

fn cmd_train(a: &TrainArgs, cfg: &RunConfig, out: &Path, log_path: &Path) -> Result<()> {
    let data = TabularDataset::load_snapshot(required(&a.data, &cfg.paths.train, "--data")?)?;
    let mut tc = cfg.train.clone();
    if let Some(m) = a.mode {
        tc.mode = m.into();
    }
    if let Some(e) = a.epochs {
        tc.epochs = e;
    }
    let arch = match a.hidden {
        Some(0) => Architecture::Logistic,
        Some(h) => Architecture::Mlp {
            hidden: h,
            activation: match cfg.arch {
                Architecture::Mlp { activation, .. } => activation,
                Architecture::Logistic => Activation::default(),
            },
        },
        None => cfg.arch,
    };
    tc.validate().map_err(|e| Error::Config(e.to_string()))?;
    let metric = match tc.mode {
        Mode::Baseline => None,
        _ => Some(MahalanobisMetric::load(required(&a.metric, &cfg.paths.metric, "--metric")?)?),
    };
    match train(&data.features, &data.labels, data.classes, metric.as_ref(), arch, &tc) {
        Ok((model, log)) => {
            model.save(out)?;
            log.write_csv(log_path)?;
            if let Some(last) = log.last() {
                log::info!(
                    "trained {} epochs: clean loss {:.4}, robust loss {:.4}, lambda {:.4}",
                    log.records.len(),
                    last.clean_loss,
                    last.robust_loss,
                    last.lambda
                );
            }
            Ok(())
        }
        Err(Error::TrainingDiverged { epoch, last_good }) => {
            let keep = out.with_extension("last_good.json");
            last_good.save(&keep)?;
            log::error!("training diverged at epoch {epoch}; last good parameters in {}", keep.display());
            Err(Error::TrainingDiverged { epoch, last_good })
        }
        Err(e) => Err(e),
    }
}

fn cmd_audit(a: &AuditArgs, cfg: &RunConfig, out: &Path, perturbations: &Path) -> Result<()> {
    let data = TabularDataset::load_snapshot(required(&a.data, &cfg.paths.test, "--data")?)?;
    let model = ModelParams::load(required(&a.model, &cfg.paths.model, "--model")?)?;
    let metric = MahalanobisMetric::load(required(&a.metric, &cfg.paths.metric, "--metric")?)?;
    let mut ac = cfg.audit.clone();
    if let Some(e) = a.epsilon {
        ac.epsilon = e;
    }
    ac.validate().map_err(|e| Error::Config(e.to_string()))?;
    let report = audit(&model, &metric, &data.features, &data.labels, &ac)?;
    report.save_json(out)?;
    report.write_perturbations_csv(&data.features, perturbations)?;
    println!(
        "epsilon {}  lambda {:.6}  clean {:.6}  robust {:.6}  gap {:.6}",
        report.epsilon, report.lambda_final, report.clean_loss, report.robust_loss, report.certificate_gap
    );
    Ok(())
}

fn cmd_eval(a: &EvalArgs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let data = TabularDataset::load_snapshot(required(&a.data, &cfg.paths.test, "--data")?)?;
    let model = ModelParams::load(required(&a.model, &cfg.paths.model, "--model")?)?;
    let report = evaluate(&model, &data)?;
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(out, json).map_err(|e| Error::io(out, e))?;
    print!("{report}");
    Ok(())
}

fn cmd_demo_toy(a: &DemoToyArgs, cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let mut demo = cfg.toy.clone();
    if let Some(e) = a.epochs {
        demo.train.epochs = e;
    }
    let out = run_toy_demo(&demo)?;
    write_toy_demo(&out, &demo, out_dir)?;
    let (b, s) = (&out.report.baseline, &out.report.sensr);
    println!("{:>10} {:>10} {:>10} {:>10}", "model", "acc_major", "acc_minor", "cert_gap");
    println!("{:>10} {:>10.4} {:>10.4} {:>10.4}", "baseline", b.accuracy_majority, b.accuracy_minority, b.certificate_gap);
    println!("{:>10} {:>10.4} {:>10.4} {:>10.4}", "sensr", s.accuracy_majority, s.accuracy_minority, s.certificate_gap);
    if demo.train.epochs > 0 && s.certificate_gap >= b.certificate_gap {
        log::warn!("SenSR certificate gap is not below the baseline's");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_config_key_rejected() {
        let err = RunConfig::from_json(r#"{"trian": {}}"#).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_CONFIG);
    }

    #[test]
    fn missing_referenced_file_rejected() {
        let err = RunConfig::from_json(r#"{"paths": {"train": "/no/such/file.csv"}}"#).unwrap_err();
        assert!(err.to_string().contains("does not exist"));
    }

    #[test]
    fn seed_reaches_every_section() {
        let cfg = RunConfig::default().with_seed(7);
        assert_eq!((cfg.train.seed, cfg.audit.seed, cfg.toy.toy.seed), (7, 7, 7));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::AttackDiverged), EXIT_DIVERGED);
        assert_eq!(exit_code(&Error::io("x", std::io::Error::other("boom"))), EXIT_IO);
        assert_eq!(exit_code(&Error::Config("bad".into())), EXIT_CONFIG);
    }
}
