//! Compares analytic gradients of every architecture against central
//! differences on random parameters and inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sensr::models::{Activation, Architecture, ModelParams};

fn main() -> sensr::Result<()> {
    let archs = [
        Architecture::Logistic,
        Architecture::Mlp { hidden: 8, activation: Activation::Relu },
        Architecture::Mlp { hidden: 8, activation: Activation::Tanh },
    ];
    let (d, c) = (5, 3);
    for arch in archs {
        let mut worst = 0.0f64;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let model = ModelParams::init(arch, d, c, seed)?;
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y = rng.random_range(0..c);
            worst = worst.max(model.gradient_check(&x, y, 1e-5)?);
        }
        println!("{arch:?}: max relative error {worst:.2e}");
    }
    Ok(())
}
