//! Learns a sensitive subspace from comparable groups and checks it against
//! the directions that generated them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sensr::fair_metric::{learn_subspace_factor, projection_complement, ComparableGroup};
use sensr::linalg::{largest_principal_angle, qr_orthonormal, Matrix};

fn main() -> sensr::Result<()> {
    let (d, k, groups, per_group) = (10, 2, 30, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n01 = Normal::new(0.0, 1.0).unwrap();
    let a = Matrix::from_fn(d, k, |_, _| n01.sample(&mut rng));
    let truth = qr_orthonormal(&a)?;
    for noise in [0.0f64, 0.01, 0.1] {
        let noise_dist = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).unwrap();
        let mut gs = Vec::new();
        for _ in 0..groups {
            // relevant attributes shared by the group, sensitive ones vary
            let shared: Vec<f64> = (0..d).map(|_| n01.sample(&mut rng)).collect();
            let mut members = Matrix::zeros(per_group, d);
            for i in 0..per_group {
                let w: Vec<f64> = (0..k).map(|_| n01.sample(&mut rng)).collect();
                for (j, sh) in shared.iter().enumerate() {
                    let s: f64 = (0..k).map(|l| a.get(j, l) * w[l]).sum();
                    let e = if noise > 0.0 { noise_dist.sample(&mut rng) } else { 0.0 };
                    members.set(i, j, sh + s + e);
                }
            }
            gs.push(ComparableGroup::new(members)?);
        }
        let sub = learn_subspace_factor(&gs, k)?;
        let angle = largest_principal_angle(sub.basis(), &truth)?.to_degrees();
        println!("noise {noise:<5} rank {} largest principal angle {angle:.2e}°", sub.rank());
    }
    let metric = projection_complement(&learn_subspace_factor(
        &[ComparableGroup::new(Matrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]])?)?],
        1,
    )?)?;
    println!("d² between (0,0) and (3,1): {}", metric.distance_sq(&[0.0, 0.0], &[3.0, 1.0])?);
    Ok(())
}
