//! Adult income: preprocessing, the gender/race fair metric, training and
//! evaluation.
//!
//!     cargo run --release --example adult -- [epochs] [sensr|baseline|project] [seed]

use std::path::Path;
use std::time::Instant;

use sensr::data::load_adult;
use sensr::fair_metric::SoftmaxFitConfig;
use sensr::metrics::evaluate;
use sensr::models::Architecture;
use sensr::pipeline::{adult_metric, ADULT_GENDER_L2};
use sensr::trainer::{train, Mode, TrainConfig};

fn main() -> sensr::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let epochs = args.next().and_then(|s| s.parse().ok()).unwrap_or(4000);
    let mode: Mode = args.next().and_then(|s| s.parse().ok()).unwrap_or(Mode::Sensr);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/adult");
    let data = load_adult(&[&dir.join("adult.data"), &dir.join("adult.test")], seed)?;
    println!("train {} test {} features {}", data.train.len(), data.test.len(), data.train.dim());

    let fit = SoftmaxFitConfig { seed, ..SoftmaxFitConfig::adult() };
    let metric = adult_metric(&data.train, ADULT_GENDER_L2, &fit)?;
    println!("sensitive subspace rank {}", metric.subspace().map_or(0, |s| s.rank()));

    let cfg = TrainConfig { epochs, seed, mode, ..TrainConfig::adult() };
    let t = Instant::now();
    let (model, log) = train(&data.train.features, &data.train.labels, 2, Some(&metric), Architecture::mlp(100), &cfg)?;
    println!("trained in {:.1?}; last record {:?}", t.elapsed(), log.last());
    print!("{}", evaluate(&model, &data.test)?);
    Ok(())
}
