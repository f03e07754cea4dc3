//! Audits an ERM classifier on the toy problem: the robust loss over the fair
//! Wasserstein ball, the certificate gap, and a few unfair-map images.

use sensr::auditor::{audit, lipschitz_estimate};
use sensr::data::make_toy;
use sensr::models::Architecture;
use sensr::pipeline::{toy_metric, ToyDemoConfig};
use sensr::trainer::train_baseline;

fn main() -> sensr::Result<()> {
    let cfg = ToyDemoConfig::default();
    let data = make_toy(&cfg.toy)?;
    let metric = toy_metric()?;
    let (model, _) = train_baseline(&data.features, &data.labels, 2, Architecture::Logistic, &cfg.train)?;
    let report = audit(&model, &metric, &data.features, &data.labels, &cfg.audit)?;
    println!(
        "epsilon {}  lambda {:.4} (converged: {})  clean {:.4}  robust {:.4}  gap {:.4}",
        report.epsilon,
        report.lambda_final,
        report.dual_converged,
        report.clean_loss,
        report.robust_loss,
        report.certificate_gap
    );
    let l = lipschitz_estimate(&model, &metric, &data.features, &data.labels, 20_000, 0)?;
    println!("empirical Lipschitz constant {l:.3}; bound on lambda L/√ε = {:.3}", l / report.epsilon.sqrt());
    for s in report.per_sample.iter().step_by(220) {
        let x = data.features.row(s.index);
        println!(
            "({:+.2}, {:+.2}) -> ({:+.2}, {:+.2})  loss gain {:.3}",
            x[0], x[1], s.x_star[0], s.x_star[1], s.loss_gain
        );
    }
    Ok(())
}
