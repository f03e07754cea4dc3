//! Trains the three modes (ERM, SenSR, and ERM on projected inputs) on the
//! toy data and compares held-out accuracy per group and sensitivity to the
//! horizontal axis.

use sensr::data::{make_toy, ToyConfig};
use sensr::metrics::{accuracy, tpr_gaps};
use sensr::models::Architecture;
use sensr::pipeline::{horizontal_sensitivity, toy_metric, ToyDemoConfig};
use sensr::trainer::{train, Mode};

fn main() -> sensr::Result<()> {
    let cfg = ToyDemoConfig::default();
    let data = make_toy(&cfg.toy)?;
    let test = make_toy(&ToyConfig { seed: 99, n_major: 5000, n_minor: 500, ..cfg.toy.clone() })?;
    let metric = toy_metric()?;
    println!("{:<9} {:>9} {:>10} {:>12}", "mode", "accuracy", "gap_rms", "sensitivity");
    for mode in [Mode::Baseline, Mode::Sensr, Mode::Project] {
        let tc = cfg.train.clone().with_mode(mode);
        let (model, log) = train(&data.features, &data.labels, 2, Some(&metric), Architecture::Logistic, &tc)?;
        let preds = model.predict_batch(&test.features)?;
        let gaps = tpr_gaps(&preds, &test.labels, test.protected("group")?, 2)?;
        println!(
            "{:<9} {:>9.3} {:>10.4} {:>12.4}   final lambda {:.3}",
            format!("{mode:?}").to_lowercase(),
            accuracy(&preds, &test.labels)?,
            gaps.gap_rms,
            horizontal_sensitivity(&model, &test.features)?,
            log.last().map_or(f64::NAN, |r| r.lambda)
        );
    }
    Ok(())
}
