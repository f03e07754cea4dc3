//! The c-transform of a linear loss under the Euclidean metric has a closed
//! form: sup_x gᵀx − λ‖x − x₀‖² = gᵀx₀ + ‖g‖²/(4λ), attained at
//! x₀ + g/(2λ). This example runs the attack and compares.

use sensr::auditor::{c_transform, AttackConfig, LinearLoss};
use sensr::fair_metric::MahalanobisMetric;
use sensr::linalg::{dot, norm};

fn main() -> sensr::Result<()> {
    let loss = LinearLoss { gradient: vec![0.6, -0.8, 0.0], offset: 0.0 };
    let metric = MahalanobisMetric::euclidean(3);
    let x0 = [0.1, 0.2, -0.3];
    let attack = AttackConfig {
        subspace_epochs: 0,
        full_step: 0.01,
        full_epochs: 4000,
        ..AttackConfig::adult()
    };
    println!("{:>8} {:>12} {:>12} {:>10}", "lambda", "attack", "exact", "d²");
    for lambda in [0.1, 1.0, 10.0] {
        let r = c_transform(&loss, &metric, &x0, 0, lambda, &attack)?;
        let g2 = norm(&loss.gradient).powi(2);
        let exact = dot(&loss.gradient, &x0) + g2 / (4.0 * lambda);
        println!("{lambda:>8} {:>12.6} {exact:>12.6} {:>10.5}", r.value, r.dist_sq);
    }
    Ok(())
}
