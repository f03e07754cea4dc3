//! Tabular datasets: Adult ingestion, the two-group toy problem, snapshots
//! and counterfactual copies for consistency metrics.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;

/// Name of the binary gender column (1 = male) in Adult.
pub const GENDER: &str = "sex";
/// Name of the binary race column (1 = White) in Adult.
pub const RACE: &str = "race";
/// One-hot group holding the relationship categories in Adult.
pub const RELATIONSHIP: &str = "relationship";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: f64,
    pub std: f64,
}

impl Scaler {
    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.mean) / self.std
    }

    pub fn invert(&self, scaled: f64) -> f64 {
        scaled * self.std + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Binary,
    OneHot { group: String, category: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
    /// Present when the stored values are standardized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<Scaler>,
}

impl Column {
    pub fn continuous(name: &str) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Continuous,
            scaler: None,
        }
    }

    pub fn binary(name: &str) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Binary,
            scaler: None,
        }
    }

    pub fn one_hot(group: &str, category: &str) -> Self {
        Self {
            name: format!("{group}={category}"),
            kind: ColumnKind::OneHot {
                group: group.into(),
                category: category.into(),
            },
            scaler: None,
        }
    }

    /// Stored value for a raw value.
    pub fn encode(&self, raw: f64) -> f64 {
        self.scaler.map_or(raw, |s| s.apply(raw))
    }
}

/// Per-column descriptors of a feature matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub columns: Vec<Column>,
}

impl FeatureMeta {
    pub fn all_continuous(names: &[String]) -> Self {
        Self {
            columns: names.iter().map(|n| Column::continuous(n)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::invalid(format!("no column named {name:?}")))
    }

    /// Column indices of a one-hot group, in order.
    pub fn group_columns(&self, group: &str) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(&c.kind, ColumnKind::OneHot { group: g, .. } if g == group))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn category_column(&self, group: &str, category: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| {
                matches!(&c.kind, ColumnKind::OneHot { group: g, category: k } if g == group && k == category)
            })
            .ok_or_else(|| Error::invalid(format!("no category {category:?} in group {group:?}")))
    }

    /// Writes the raw value `raw` into column `col` of `x`, honouring the
    /// column's scaler.
    pub fn set_raw(&self, x: &mut [f64], col: usize, raw: f64) {
        x[col] = self.columns[col].encode(raw);
    }

    /// Activates `category` of a one-hot group and clears its siblings.
    pub fn set_category(&self, x: &mut [f64], group: &str, category: &str) -> Result<()> {
        let on = self.category_column(group, category)?;
        for c in self.group_columns(group) {
            self.set_raw(x, c, if c == on { 1.0 } else { 0.0 });
        }
        Ok(())
    }

    /// Fits a scaler on `x` for every column selected by `pick` and rewrites
    /// those columns in place. Columns with zero spread get `std = 1`.
    pub fn standardize(&mut self, x: &mut Matrix, pick: impl Fn(&Column) -> bool) -> Result<()> {
        check_dim(self.dim(), x.cols())?;
        if x.rows() == 0 {
            return Err(Error::EmptyInput);
        }
        for j in 0..self.dim() {
            if !pick(&self.columns[j]) || self.columns[j].scaler.is_some() {
                continue;
            }
            let scaler = fit_scaler(&x.column(j));
            self.columns[j].scaler = Some(scaler);
            for i in 0..x.rows() {
                let v = x.get(i, j);
                x.set(i, j, scaler.apply(v));
            }
        }
        Ok(())
    }

    /// Applies the scalers stored here to raw columns of `x`.
    pub fn apply_scalers(&self, x: &mut Matrix) -> Result<()> {
        check_dim(self.dim(), x.cols())?;
        for (j, col) in self.columns.iter().enumerate() {
            if let Some(s) = col.scaler {
                for i in 0..x.rows() {
                    let v = x.get(i, j);
                    x.set(i, j, s.apply(v));
                }
            }
        }
        Ok(())
    }
}

/// Mean and population standard deviation.
pub fn fit_scaler(values: &[f64]) -> Scaler {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = if var > 0.0 { var.sqrt() } else { 1.0 };
    Scaler { mean, std }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub classes: usize,
    /// Named protected attributes, one label per row.
    pub protected: BTreeMap<String, Vec<usize>>,
    pub meta: FeatureMeta,
}

impl TabularDataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        classes: usize,
        protected: BTreeMap<String, Vec<usize>>,
        meta: FeatureMeta,
    ) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::EmptyInput);
        }
        check_dim(features.rows(), labels.len())?;
        check_dim(features.cols(), meta.dim())?;
        if classes < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::invalid(format!("label {y} out of range for {classes} classes")));
        }
        for (name, v) in &protected {
            if v.len() != labels.len() {
                return Err(Error::invalid(format!("protected column {name:?} has wrong length")));
            }
        }
        if !features.is_finite() {
            return Err(Error::invalid("features must be finite"));
        }
        Ok(Self {
            features,
            labels,
            classes,
            protected,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn protected(&self, name: &str) -> Result<&[usize]> {
        self.protected
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid(format!("no protected attribute {name:?}")))
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
            protected: self
                .protected
                .iter()
                .map(|(k, v)| (k.clone(), indices.iter().map(|&i| v[i]).collect()))
                .collect(),
            meta: self.meta.clone(),
        }
    }

    /// Shuffled split with `round(train_fraction · n)` training rows.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(Error::invalid("train fraction must lie in [0, 1]"));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = (train_fraction * self.len() as f64).round() as usize;
        if cut == 0 || cut == self.len() {
            return Err(Error::invalid("split leaves one side empty"));
        }
        Ok((self.subset(&idx[..cut]), self.subset(&idx[cut..])))
    }

    /// Writes features, `label` and `protected:<name>` columns as CSV, plus
    /// the feature metadata as JSON next to it (`<stem>.meta.json`).
    pub fn save_snapshot(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        let mut header = self.meta.names();
        header.push("label".into());
        header.extend(self.protected.keys().map(|k| format!("protected:{k}")));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.features.row(i).iter().map(|v| v.to_string()).collect();
            row.push(self.labels[i].to_string());
            row.extend(self.protected.values().map(|v| v[i].to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        let meta_path = meta_path(path);
        let json = serde_json::to_string_pretty(&self.meta)?;
        std::fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))
    }

    /// Reads a snapshot written by [`save_snapshot`](Self::save_snapshot).
    /// Without a metadata file every column is taken as continuous.
    pub fn load_snapshot(path: &Path) -> Result<Self> {
        let mut ds = load_csv(path, "label", None)?;
        let meta_path = meta_path(path);
        if meta_path.exists() {
            let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
            let meta: FeatureMeta = serde_json::from_str(&text)?;
            if meta.names() != ds.meta.names() {
                return Err(Error::invalid(format!(
                    "{} does not match the columns of {}",
                    meta_path.display(),
                    path.display()
                )));
            }
            ds.meta = meta;
        }
        Ok(ds)
    }
}

fn meta_path(path: &Path) -> std::path::PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!("checked io error"),
        }
    } else {
        Error::Csv(e)
    }
}

/// Generic numeric CSV with a header row. `label` names the class column
/// (values 0..C); columns named `protected:<name>`, or listed in `protected`,
/// become protected attributes. Listed protected columns also stay features.
pub fn load_csv(path: &Path, label: &str, protected: Option<&[String]>) -> Result<TabularDataset> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let label_col = header
        .iter()
        .position(|h| h == label)
        .ok_or_else(|| Error::Config(format!("{}: no column named {label:?}", path.display())))?;
    let extra: &[String] = protected.unwrap_or(&[]);
    for p in extra {
        if !header.contains(p) {
            return Err(Error::Config(format!("{}: no column named {p:?}", path.display())));
        }
    }
    let mut feature_cols = Vec::new();
    let mut protected_cols = Vec::new();
    for (j, h) in header.iter().enumerate() {
        if j == label_col {
            continue;
        }
        if let Some(name) = h.strip_prefix("protected:") {
            protected_cols.push((name.to_string(), j));
            continue;
        }
        if extra.contains(h) {
            protected_cols.push((h.clone(), j));
        }
        feature_cols.push(j);
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut prot: BTreeMap<String, Vec<usize>> =
        protected_cols.iter().map(|(n, _)| (n.clone(), Vec::new())).collect();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let field = |j: usize| rec.get(j).unwrap_or("");
        for &j in &feature_cols {
            let v: f64 = field(j)
                .parse()
                .map_err(|_| parse_err(format!("column {:?}: not a number: {:?}", header[j], field(j))))?;
            if !v.is_finite() {
                return Err(parse_err(format!("column {:?}: non-finite value", header[j])));
            }
            data.push(v);
        }
        let parse_class = |j: usize| -> Result<usize> {
            let s = field(j);
            s.parse::<usize>()
                .or_else(|_| match s.parse::<f64>() {
                    Ok(f) if f >= 0.0 && f.fract() == 0.0 => Ok(f as usize),
                    _ => Err(()),
                })
                .map_err(|_| parse_err(format!("column {:?}: not a class index: {s:?}", header[j])))
        };
        labels.push(parse_class(label_col)?);
        for (name, j) in &protected_cols {
            let v = parse_class(*j)?;
            prot.get_mut(name).expect("initialized above").push(v);
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let classes = (labels.iter().max().copied().unwrap_or(0) + 1).max(2);
    let names: Vec<String> = feature_cols.iter().map(|&j| header[j].clone()).collect();
    let features = Matrix::new(labels.len(), names.len(), data)?;
    TabularDataset::new(features, labels, classes, prot, FeatureMeta::all_continuous(&names))
}

const ADULT_FIELDS: usize = 15;
const ADULT_CONTINUOUS: [(&str, usize); 5] = [
    ("age", 0),
    ("education-num", 4),
    ("capital-gain", 10),
    ("capital-loss", 11),
    ("hours-per-week", 12),
];
const ADULT_ONE_HOT: [(&str, usize, &[&str]); 4] = [
    (
        "workclass",
        1,
        &[
            "Private",
            "Self-emp-not-inc",
            "Self-emp-inc",
            "Federal-gov",
            "Local-gov",
            "State-gov",
            "Without-pay",
            "Never-worked",
        ],
    ),
    (
        "marital-status",
        5,
        &[
            "Married-civ-spouse",
            "Divorced",
            "Never-married",
            "Separated",
            "Widowed",
            "Married-spouse-absent",
            "Married-AF-spouse",
        ],
    ),
    (
        "occupation",
        6,
        &[
            "Tech-support",
            "Craft-repair",
            "Other-service",
            "Sales",
            "Exec-managerial",
            "Prof-specialty",
            "Handlers-cleaners",
            "Machine-op-inspct",
            "Adm-clerical",
            "Farming-fishing",
            "Transport-moving",
            "Priv-house-serv",
            "Protective-serv",
            "Armed-Forces",
        ],
    ),
    (
        RELATIONSHIP,
        7,
        &["Wife", "Own-child", "Husband", "Not-in-family", "Other-relative", "Unmarried"],
    ),
];
const ADULT_RACE: usize = 8;
const ADULT_SEX: usize = 9;
const ADULT_INCOME: usize = 14;
/// Rows left in the full UCI release after dropping incomplete records.
pub const ADULT_CANONICAL_ROWS: usize = 45_222;

/// Adult after the standard pipeline, split into train and test.
#[derive(Debug, Clone)]
pub struct AdultData {
    pub train: TabularDataset,
    pub test: TabularDataset,
}

fn adult_meta() -> FeatureMeta {
    let mut columns: Vec<Column> = ADULT_CONTINUOUS.iter().map(|(n, _)| Column::continuous(n)).collect();
    columns.push(Column::binary(GENDER));
    columns.push(Column::binary(RACE));
    for (group, _, cats) in ADULT_ONE_HOT {
        columns.extend(cats.iter().map(|c| Column::one_hot(group, c)));
    }
    FeatureMeta { columns }
}

/// Parses UCI Adult files (`adult.data`, `adult.test` layout) into raw
/// encoded rows. Rows with a missing field are skipped.
fn parse_adult(path: &Path, rows: &mut Vec<f64>, labels: &mut Vec<usize>, sex: &mut Vec<usize>, race: &mut Vec<usize>) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('|') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != ADULT_FIELDS {
            return Err(err(format!("expected {ADULT_FIELDS} fields, found {}", fields.len())));
        }
        if fields.contains(&"?") {
            continue;
        }
        for (name, j) in ADULT_CONTINUOUS {
            let v: f64 = fields[j]
                .parse()
                .map_err(|_| err(format!("{name}: not a number: {:?}", fields[j])))?;
            rows.push(v);
        }
        let s = match fields[ADULT_SEX] {
            "Male" => 1,
            "Female" => 0,
            other => return Err(err(format!("sex: unknown value {other:?}"))),
        };
        let r = usize::from(fields[ADULT_RACE] == "White");
        rows.push(s as f64);
        rows.push(r as f64);
        for (group, j, cats) in ADULT_ONE_HOT {
            let k = cats
                .iter()
                .position(|c| *c == fields[j])
                .ok_or_else(|| err(format!("{group}: unknown value {:?}", fields[j])))?;
            rows.extend((0..cats.len()).map(|c| if c == k { 1.0 } else { 0.0 }));
        }
        let y = match fields[ADULT_INCOME].trim_end_matches('.') {
            ">50K" => 1,
            "<=50K" => 0,
            other => return Err(err(format!("income: unknown value {other:?}"))),
        };
        labels.push(y);
        sex.push(s);
        race.push(r);
    }
    Ok(())
}

/// Loads Adult from one or more files in the UCI layout, pools them, splits
/// 80/20 with `split_seed` and standardizes the continuous columns with a
/// scaler fit on the training part.
pub fn load_adult(paths: &[&Path], split_seed: u64) -> Result<AdultData> {
    if paths.is_empty() {
        return Err(Error::invalid("no Adult files given"));
    }
    let (mut rows, mut labels, mut sex, mut race) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for p in paths {
        parse_adult(p, &mut rows, &mut labels, &mut sex, &mut race)?;
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = labels.len();
    let full_release = paths.len() == 2
        && paths.iter().any(|p| p.ends_with("adult.data"))
        && paths.iter().any(|p| p.ends_with("adult.test"));
    if full_release && n != ADULT_CANONICAL_ROWS {
        log::warn!("Adult has {n} complete rows, expected {ADULT_CANONICAL_ROWS}");
    }
    let meta = adult_meta();
    let features = Matrix::new(n, meta.dim(), rows)?;
    let protected = BTreeMap::from([(GENDER.to_string(), sex), (RACE.to_string(), race)]);
    let all = TabularDataset::new(features, labels, 2, protected, meta)?;
    let (mut train, mut test) = all.split(0.8, split_seed)?;
    train
        .meta
        .standardize(&mut train.features, |c| c.kind == ColumnKind::Continuous)?;
    test.meta = train.meta.clone();
    test.meta.apply_scalers(&mut test.features)?;
    Ok(AdultData { train, test })
}

/// Parameters of the two-group toy problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyConfig {
    pub seed: u64,
    pub n_major: usize,
    pub n_minor: usize,
    /// Horizontal distance between the two group centres.
    pub separation: f64,
    /// Standard deviation of the vertical noise around `±1`.
    pub noise: f64,
    /// Horizontal offset `±label_shift` tied to the label inside each group.
    pub label_shift: f64,
    /// Standard deviation of the horizontal jitter.
    pub jitter: f64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_major: 1000,
            n_minor: 100,
            separation: 4.0,
            noise: 0.5,
            label_shift: 1.0,
            jitter: 0.5,
        }
    }
}

/// Two groups side by side on the horizontal axis, majority on the left,
/// with the label carried by the vertical coordinate. Each group is split
/// evenly between the classes. Protected attribute `group`: 0 majority,
/// 1 minority.
pub fn make_toy(cfg: &ToyConfig) -> Result<TabularDataset> {
    if cfg.n_major < 4 || cfg.n_minor < 4 {
        return Err(Error::invalid("each group needs at least 2 points per class"));
    }
    if !(cfg.noise >= 0.0) || !(cfg.jitter >= 0.0) {
        return Err(Error::invalid("noise levels must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut groups = Vec::new();
    for (g, count, centre) in [(0, cfg.n_major, -cfg.separation / 2.0), (1, cfg.n_minor, cfg.separation / 2.0)] {
        for i in 0..count {
            let y = usize::from(i >= count / 2);
            let s = if y == 1 { 1.0 } else { -1.0 };
            let zh: f64 = rng.sample(StandardNormal);
            let zv: f64 = rng.sample(StandardNormal);
            data.push(centre + cfg.label_shift * s + cfg.jitter * zh);
            data.push(s + cfg.noise * zv);
            labels.push(y);
            groups.push(g);
        }
    }
    let n = labels.len();
    let meta = FeatureMeta {
        columns: vec![Column::continuous("horizontal"), Column::continuous("vertical")],
    };
    TabularDataset::new(
        Matrix::new(n, 2, data)?,
        labels,
        2,
        BTreeMap::from([("group".to_string(), groups)]),
        meta,
    )
}

/// Copies of `x` with the relationship set to Husband and to Wife.
pub fn counterfactual_spouse(x: &[f64], meta: &FeatureMeta) -> Result<Vec<Vec<f64>>> {
    check_dim(meta.dim(), x.len())?;
    ["Husband", "Wife"]
        .iter()
        .map(|cat| {
            let mut v = x.to_vec();
            meta.set_category(&mut v, RELATIONSHIP, cat)?;
            Ok(v)
        })
        .collect()
}

/// Copies of `x` for every combination of the binary columns `names`, in
/// binary counting order (first name varies slowest).
pub fn counterfactual_binary(x: &[f64], meta: &FeatureMeta, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    check_dim(meta.dim(), x.len())?;
    let cols = names.iter().map(|n| meta.index_of(n)).collect::<Result<Vec<_>>>()?;
    Ok((0..1usize << cols.len())
        .map(|mask| {
            let mut v = x.to_vec();
            for (b, &c) in cols.iter().enumerate() {
                let bit = (mask >> (cols.len() - 1 - b)) & 1;
                meta.set_raw(&mut v, c, bit as f64);
            }
            v
        })
        .collect())
}

/// The four gender × race versions of `x`.
pub fn counterfactual_gender_race(x: &[f64], meta: &FeatureMeta) -> Result<Vec<Vec<f64>>> {
    counterfactual_binary(x, meta, &[GENDER, RACE])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const ROWS: &str = "\
39, State-gov, 77516, Bachelors, 13, Never-married, Adm-clerical, Not-in-family, White, Male, 2174, 0, 40, United-States, <=50K
50, Self-emp-not-inc, 83311, Bachelors, 13, Married-civ-spouse, Exec-managerial, Husband, White, Male, 0, 0, 13, United-States, >50K
38, Private, 215646, HS-grad, 9, Divorced, ?, Not-in-family, Black, Female, 0, 0, 40, United-States, <=50K
";

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn missing_row_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.data", ROWS);
        let (mut rows, mut y, mut s, mut r) = (vec![], vec![], vec![], vec![]);
        parse_adult(&p, &mut rows, &mut y, &mut s, &mut r).unwrap();
        assert_eq!(y, vec![0, 1]);
        assert_eq!(rows.len(), 2 * adult_meta().dim());
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.data", &format!("{ROWS}12, Private\n"));
        let (mut rows, mut y, mut s, mut r) = (vec![], vec![], vec![], vec![]);
        let err = parse_adult(&p, &mut rows, &mut y, &mut s, &mut r).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn toy_is_reproducible_and_balanced() {
        let cfg = ToyConfig::default();
        let a = make_toy(&cfg).unwrap();
        assert_eq!(a, make_toy(&cfg).unwrap());
        let g = a.protected("group").unwrap();
        assert_eq!(g.iter().filter(|&&v| v == 1).count(), 100);
        let minority_pos = (0..a.len()).filter(|&i| g[i] == 1 && a.labels[i] == 1).count();
        assert_eq!(minority_pos, 50);
    }

    #[test]
    fn noiseless_toy_is_separable() {
        let ds = make_toy(&ToyConfig {
            noise: 0.0,
            ..Default::default()
        })
        .unwrap();
        for i in 0..ds.len() {
            assert_eq!(ds.labels[i] == 1, ds.features.get(i, 1) > 0.0);
        }
    }

    #[test]
    fn spouse_copies_touch_only_relationship() {
        let meta = adult_meta();
        let mut x = vec![0.5; meta.dim()];
        meta.set_category(&mut x, RELATIONSHIP, "Own-child").unwrap();
        let copies = counterfactual_spouse(&x, &meta).unwrap();
        let rel = meta.group_columns(RELATIONSHIP);
        for c in &copies {
            for j in 0..x.len() {
                if !rel.contains(&j) {
                    assert_eq!(c[j], x[j]);
                }
            }
            assert_eq!(counterfactual_spouse(c, &meta).unwrap(), copies);
        }
        assert_eq!(copies[0][meta.category_column(RELATIONSHIP, "Husband").unwrap()], 1.0);
        assert_eq!(copies[1][meta.category_column(RELATIONSHIP, "Wife").unwrap()], 1.0);
    }

    #[test]
    fn gender_flip_on_standardized_column() {
        let mut meta = adult_meta();
        let g = meta.index_of(GENDER).unwrap();
        meta.columns[g].scaler = Some(Scaler { mean: 0.67, std: 0.47 });
        let x = vec![0.0; meta.dim()];
        let copies = counterfactual_gender_race(&x, &meta).unwrap();
        assert_eq!(copies.len(), 4);
        assert!((copies[0][g] - (0.0 - 0.67) / 0.47).abs() < 1e-15);
        assert!((copies[3][g] - (1.0 - 0.67) / 0.47).abs() < 1e-15);
    }

    #[test]
    fn snapshot_round_trip() {
        let ds = make_toy(&ToyConfig {
            n_major: 8,
            n_minor: 4,
            ..Default::default()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("toy.csv");
        ds.save_snapshot(&p).unwrap();
        assert_eq!(TabularDataset::load_snapshot(&p).unwrap(), ds);
    }
}
