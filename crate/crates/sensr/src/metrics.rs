//! Accuracy, group-fairness and individual-fairness measures.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{counterfactual_gender_race, counterfactual_spouse, FeatureMeta, TabularDataset, GENDER, RACE};
use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::models::{argmax, ModelParams};

pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    check_dim(labels.len(), preds.len())?;
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = preds.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mean per-class recall over the classes present in `labels`.
pub fn balanced_accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    check_dim(labels.len(), preds.len())?;
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (&p, &y) in preds.iter().zip(labels) {
        let e = counts.entry(y).or_default();
        e.0 += usize::from(p == y);
        e.1 += 1;
    }
    Ok(counts.values().map(|&(h, n)| h as f64 / n as f64).sum::<f64>() / counts.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TprGaps {
    pub gap_rms: f64,
    pub gap_max: f64,
    /// `TPR₀,c − TPR₁,c` per class; `None` where a group has no members of
    /// that class.
    pub per_class: Vec<Option<f64>>,
}

/// True-positive-rate gaps between the two values of a binary attribute.
pub fn tpr_gaps(preds: &[usize], labels: &[usize], attribute: &[usize], classes: usize) -> Result<TprGaps> {
    check_dim(labels.len(), preds.len())?;
    check_dim(labels.len(), attribute.len())?;
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    // hits[a][c], totals[a][c]
    let mut hits = [vec![0usize; classes], vec![0usize; classes]];
    let mut totals = [vec![0usize; classes], vec![0usize; classes]];
    for i in 0..labels.len() {
        let a = attribute[i];
        if a > 1 {
            return Err(Error::invalid(format!("attribute value {a} is not binary")));
        }
        let c = labels[i];
        if c >= classes {
            return Err(Error::invalid(format!("label {c} out of range for {classes} classes")));
        }
        totals[a][c] += 1;
        hits[a][c] += usize::from(preds[i] == c);
    }
    let per_class: Vec<Option<f64>> = (0..classes)
        .map(|c| {
            if totals[0][c] == 0 && totals[1][c] == 0 {
                return None;
            }
            if totals[0][c] == 0 || totals[1][c] == 0 {
                log::warn!("class {c} is missing from one attribute group; its gap is undefined");
                return None;
            }
            let tpr = |a: usize| hits[a][c] as f64 / totals[a][c] as f64;
            Some(tpr(0) - tpr(1))
        })
        .collect();
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::invalid("no class has both attribute groups"));
    }
    let gap_rms = (defined.iter().map(|g| g * g).sum::<f64>() / defined.len() as f64).sqrt();
    let gap_max = defined.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    Ok(TprGaps {
        gap_rms,
        gap_max,
        per_class,
    })
}

/// Fraction of rows whose predicted class is the same on every variant
/// produced by `variants`.
pub fn consistency<F>(model: &ModelParams, features: &Matrix, mut variants: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<Vec<Vec<f64>>>,
{
    if features.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    let mut consistent = 0usize;
    for i in 0..features.rows() {
        let copies = variants(features.row(i))?;
        if copies.is_empty() {
            return Err(Error::invalid("variant generator returned nothing"));
        }
        let m = Matrix::from_rows(&copies)?;
        let logits = model.forward_batch(&m)?;
        let first = argmax(logits.row(0));
        consistent += usize::from((1..m.rows()).all(|r| argmax(logits.row(r)) == first));
    }
    Ok(consistent as f64 / features.rows() as f64)
}

/// Spouse consistency on Adult-encoded features.
pub fn spouse_consistency(model: &ModelParams, features: &Matrix, meta: &FeatureMeta) -> Result<f64> {
    consistency(model, features, |x| counterfactual_spouse(x, meta))
}

/// Gender-and-race consistency on Adult-encoded features.
pub fn gender_race_consistency(model: &ModelParams, features: &Matrix, meta: &FeatureMeta) -> Result<f64> {
    consistency(model, features, |x| counterfactual_gender_race(x, meta))
}

/// Mean `h₁ − h₀` logit margin over `group0` minus the same over `group1`.
pub fn group_logit_gap(model: &ModelParams, group0: &Matrix, group1: &Matrix) -> Result<f64> {
    if model.classes() != 2 {
        return Err(Error::invalid("group logit gap needs a binary classifier"));
    }
    let margin = |g: &Matrix| -> Result<f64> {
        if g.rows() == 0 {
            return Err(Error::EmptyInput);
        }
        let l = model.forward_batch(g)?;
        Ok((0..l.rows()).map(|i| l.get(i, 1) - l.get(i, 0)).sum::<f64>() / l.rows() as f64)
    };
    Ok(margin(group0)? - margin(group1)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    /// TPR gaps keyed by protected attribute.
    pub gaps: BTreeMap<String, TprGaps>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_con: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gr_con: Option<f64>,
    /// Logit gap between attribute value 0 and value 1, keyed by attribute.
    pub group_logit_gaps: BTreeMap<String, f64>,
}

/// Every metric that the dataset supports: gaps for each binary protected
/// attribute, and consistency when the Adult columns are present.
pub fn evaluate(model: &ModelParams, data: &TabularDataset) -> Result<EvalReport> {
    let preds = model.predict_batch(&data.features)?;
    let mut gaps = BTreeMap::new();
    let mut logit_gaps = BTreeMap::new();
    for (name, attr) in &data.protected {
        if attr.iter().any(|&a| a > 1) {
            continue;
        }
        match tpr_gaps(&preds, &data.labels, attr, data.classes) {
            Ok(g) => {
                gaps.insert(name.clone(), g);
            }
            Err(e) => log::warn!("skipping gaps for {name}: {e}"),
        }
        if data.classes == 2 {
            let idx = |v: usize| (0..attr.len()).filter(|&i| attr[i] == v).collect::<Vec<_>>();
            let (g0, g1) = (idx(0), idx(1));
            if !g0.is_empty() && !g1.is_empty() {
                let gap = group_logit_gap(
                    model,
                    &data.features.select_rows(&g0),
                    &data.features.select_rows(&g1),
                )?;
                logit_gaps.insert(name.clone(), gap);
            }
        }
    }
    let meta = &data.meta;
    let s_con = if meta.group_columns(crate::data::RELATIONSHIP).is_empty() {
        None
    } else {
        Some(spouse_consistency(model, &data.features, meta)?)
    };
    let gr_con = if meta.index_of(GENDER).is_ok() && meta.index_of(RACE).is_ok() {
        Some(gender_race_consistency(model, &data.features, meta)?)
    } else {
        None
    };
    Ok(EvalReport {
        accuracy: accuracy(&preds, &data.labels)?,
        balanced_accuracy: balanced_accuracy(&preds, &data.labels)?,
        gaps,
        s_con,
        gr_con,
        group_logit_gaps: logit_gaps,
    })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        write!(f, "{:>8} {:>8} {:>8}", "B-Acc,%", "S-Con.", "GR-Con.")?;
        for name in self.gaps.keys() {
            write!(f, " {:>12} {:>12}", format!("gap_rms[{name}]"), format!("gap_max[{name}]"))?;
        }
        writeln!(f)?;
        write!(
            f,
            "{:>8.1} {:>8} {:>8}",
            100.0 * self.balanced_accuracy,
            opt(self.s_con),
            opt(self.gr_con)
        )?;
        for g in self.gaps.values() {
            write!(f, " {:>12.3} {:>12.3}", g.gap_rms, g.gap_max)?;
        }
        writeln!(f)
    }
}
