use std::path::{Path, PathBuf};

use sensr::data::{counterfactual_gender_race, load_adult, AdultData, TabularDataset, GENDER, RACE};
use sensr::fair_metric::SoftmaxFitConfig;
use sensr::metrics::gender_race_consistency;
use sensr::models::Architecture;
use sensr::pipeline::{adult_metric, adult_subspace, ADULT_GENDER_L2};
use sensr::trainer::{train, Mode, TrainConfig};

fn adult_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/adult")
}

fn load() -> AdultData {
    let dir = adult_dir();
    load_adult(&[&dir.join("adult.data"), &dir.join("adult.test")], 0).unwrap()
}

fn quick_fit() -> SoftmaxFitConfig {
    SoftmaxFitConfig { epochs: 300, ..SoftmaxFitConfig::adult() }
}

#[test]
fn preprocessing_shape_and_scaling() {
    let d = load();
    assert_eq!(d.train.len() + d.test.len(), 45_222);
    assert_eq!((d.train.len(), d.test.len()), (36_178, 9_044));
    assert_eq!(d.train.dim(), 42);
    for name in ["fnlwgt", "education", "native-country"] {
        assert!(d.train.meta.index_of(name).is_err(), "{name} should be dropped");
    }
    // standardized on the training split
    let j = d.train.meta.index_of("age").unwrap();
    let col = d.train.features.column(j);
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!(mean.abs() < 1e-10 && (var - 1.0).abs() < 1e-10);
    // binary attributes are left as 0/1 and agree with the protected columns
    for (name, attr) in [(GENDER, d.test.protected(GENDER).unwrap()), (RACE, d.test.protected(RACE).unwrap())] {
        let j = d.test.meta.index_of(name).unwrap();
        for (i, a) in attr.iter().enumerate() {
            assert_eq!(d.test.features.get(i, j), *a as f64);
        }
    }
    // every one-hot group has exactly one active column
    for group in ["workclass", "marital-status", "occupation", "relationship"] {
        let cols = d.train.meta.group_columns(group);
        assert!(!cols.is_empty());
        for i in (0..d.train.len()).step_by(97) {
            let s: f64 = cols.iter().map(|&j| d.train.features.get(i, j)).sum();
            assert_eq!(s, 1.0);
        }
    }
}

#[test]
fn snapshot_roundtrip() {
    let d = load();
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("adult_test.csv");
    d.test.save_snapshot(&p).unwrap();
    let back = TabularDataset::load_snapshot(&p).unwrap();
    assert_eq!(back.features, d.test.features);
    assert_eq!(back.labels, d.test.labels);
    assert_eq!(back.protected(GENDER).unwrap(), d.test.protected(GENDER).unwrap());
    assert_eq!(back.meta, d.test.meta);
}

#[test]
fn metric_ignores_gender_and_race() {
    let d = load();
    let sub = adult_subspace(&d.train, ADULT_GENDER_L2, &quick_fit()).unwrap();
    assert_eq!(sub.rank(), 3);
    let metric = adult_metric(&d.train, ADULT_GENDER_L2, &quick_fit()).unwrap();
    let x = d.test.features.row(0);
    for v in counterfactual_gender_race(x, &d.test.meta).unwrap() {
        assert!(metric.distance_sq(x, &v).unwrap().abs() < 1e-12);
    }
}

#[test]
fn projected_model_is_exactly_gender_race_consistent() {
    let d = load();
    let metric = adult_metric(&d.train, ADULT_GENDER_L2, &quick_fit()).unwrap();
    let cfg = TrainConfig { epochs: 100, mode: Mode::Project, ..TrainConfig::adult() };
    let (model, _) = train(&d.train.features, &d.train.labels, 2, Some(&metric), Architecture::mlp(20), &cfg).unwrap();
    let gr = gender_race_consistency(&model, &d.test.features, &d.test.meta).unwrap();
    assert_eq!(gr, 1.0);
}
