//! Fair Mahalanobis metrics and the sensitive subspaces they ignore.
//!
//! The canonical quantity exposed here is the squared fair distance
//! `d_x²(x₁, x₂) = (x₁ − x₂)ᵀ Σ (x₁ − x₂)`. Costs, the c-transform and the
//! dual update all consume the squared form, so the square root is never
//! taken except by [`MahalanobisMetric::distance`].
//!
//! Two ways of estimating the sensitive subspace are provided:
//! [`learn_subspace_softmax`] regresses an observed protected attribute on the
//! features, and [`learn_subspace_factor`] runs factor analysis on groups of
//! comparable samples.

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, dot, Matrix};

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Sensitive directions together with an orthonormal basis of their span.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitiveSubspace {
    directions: Matrix,
    basis: Matrix,
}

impl SensitiveSubspace {
    /// Orthonormalizes the columns of `directions` (d × k).
    pub fn from_directions(directions: Matrix) -> Result<Self> {
        let basis = linalg::qr_orthonormal(&directions)?;
        if basis.cols() == 0 {
            return Err(Error::invalid("sensitive directions are all zero"));
        }
        Ok(Self { directions, basis })
    }

    /// Subspace spanned by coordinate axes.
    pub fn from_axes(dim: usize, axes: &[usize]) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::EmptyInput);
        }
        let columns = axes
            .iter()
            .map(|&a| {
                if a >= dim {
                    return Err(Error::invalid(format!("axis {a} out of range for dim {dim}")));
                }
                Ok(axis(dim, a))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_directions(Matrix::from_columns(&columns)?)
    }

    /// Appends further directions (e.g. protected-attribute axes) and
    /// re-orthonormalizes.
    pub fn with_extra_directions(&self, extra: &[Vec<f64>]) -> Result<Self> {
        let mut cols = self.directions.columns();
        for e in extra {
            check_dim(self.dim(), e.len())?;
            cols.push(e.clone());
        }
        Self::from_directions(Matrix::from_columns(&cols)?)
    }

    pub fn dim(&self) -> usize {
        self.directions.rows()
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    pub fn directions(&self) -> &Matrix {
        &self.directions
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }
}

/// Unit vector along coordinate `index`.
pub fn axis(dim: usize, index: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[index] = 1.0;
    e
}

/// Positive semidefinite matrix defining `d_x²`, optionally remembering the
/// sensitive subspace it was built from so attacks can move along it.
#[derive(Debug, Clone, PartialEq)]
pub struct MahalanobisMetric {
    sigma: Matrix,
    subspace: Option<SensitiveSubspace>,
}

impl MahalanobisMetric {
    /// Validates symmetry and positive semidefiniteness.
    pub fn new(sigma: Matrix) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !sigma.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::invalid("metric matrix is not symmetric"));
        }
        let (eig, _) = linalg::symmetric_eigen(&sigma)?;
        let min = eig.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::invalid(format!(
                "metric matrix is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        Ok(Self {
            sigma,
            subspace: None,
        })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self {
            sigma: Matrix::identity(dim),
            subspace: None,
        }
    }

    /// Attaches a subspace for the attack's subspace phase without changing Σ.
    pub fn with_subspace(mut self, subspace: SensitiveSubspace) -> Result<Self> {
        check_dim(self.dim(), subspace.dim())?;
        self.subspace = Some(subspace);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    pub fn subspace(&self) -> Option<&SensitiveSubspace> {
        self.subspace.as_ref()
    }

    /// `(x1 − x2)ᵀ Σ (x1 − x2)`, clamped at zero against rounding.
    pub fn distance_sq(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x1.len())?;
        check_dim(self.dim(), x2.len())?;
        let diff = linalg::sub(x1, x2);
        Ok(self.quadratic_form(&diff))
    }

    /// `d_x`, the square root of [`distance_sq`](Self::distance_sq).
    pub fn distance(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        Ok(self.distance_sq(x1, x2)?.sqrt())
    }

    /// `vᵀ Σ v` for a displacement `v`.
    pub(crate) fn quadratic_form(&self, v: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, vi) in v.iter().enumerate() {
            if *vi == 0.0 {
                continue;
            }
            total += vi * dot(self.sigma.row(i), v);
        }
        total.max(0.0)
    }

    /// `Σ v`, written into `out`.
    pub(crate) fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.sigma.row(i), v);
        }
    }

    /// Projects each row of `x` through Σ (rows are `Σx` since Σ is symmetric).
    pub fn project_rows(&self, x: &Matrix) -> Result<Matrix> {
        x.matmul_transpose(&self.sigma)
    }

    /// Transport cost `d_z²` between labelled points.
    pub fn transport_cost(
        &self,
        z1: (&[f64], usize),
        z2: (&[f64], usize),
    ) -> Result<TransportCost> {
        let d = self.distance_sq(z1.0, z2.0)?;
        Ok(if z1.1 == z2.1 {
            TransportCost::Finite(d)
        } else {
            TransportCost::Infinite
        })
    }

    pub fn to_file(&self) -> MetricFile {
        MetricFile {
            dim: self.dim(),
            directions: self.subspace.as_ref().map(|s| s.directions.to_rows()),
            basis: self.subspace.as_ref().map(|s| s.basis.to_rows()),
            sigma: Some(self.sigma.to_rows()),
        }
    }

    pub fn from_file(file: &MetricFile) -> Result<Self> {
        let subspace = match (&file.directions, &file.basis) {
            (Some(directions), Some(basis)) => Some(SensitiveSubspace {
                directions: matrix_from_json(directions, file.dim)?,
                basis: matrix_from_json(basis, file.dim)?,
            }),
            (None, None) => None,
            _ => return Err(Error::Config("metric file needs both directions and basis".into())),
        };
        let metric = match (&file.sigma, subspace) {
            (Some(sigma), subspace) => {
                let sigma = matrix_from_json(sigma, file.dim)?;
                check_dim(file.dim, sigma.cols())?;
                let mut m = Self::new(sigma)?;
                m.subspace = subspace;
                m
            }
            (None, Some(subspace)) => projection_complement(&subspace)?,
            (None, None) => return Err(Error::Config("metric file has neither sigma nor subspace".into())),
        };
        Ok(metric)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.to_file())?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file(&serde_json::from_str(&text)?)
    }
}

/// Cost of transporting mass between two labelled points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransportCost {
    Finite(f64),
    /// Labels differ: mass may not move between these points.
    Infinite,
}

impl TransportCost {
    pub fn is_infinite(&self) -> bool {
        matches!(self, TransportCost::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            TransportCost::Finite(v) => Some(*v),
            TransportCost::Infinite => None,
        }
    }
}

/// On-disk layout for subspaces and metrics. Matrices are row-major arrays.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MetricFile {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
}

fn matrix_from_json(rows: &[Vec<f64>], dim: usize) -> Result<Matrix> {
    check_dim(dim, rows.len())?;
    if rows.iter().all(Vec::is_empty) {
        return Ok(Matrix::zeros(dim, 0));
    }
    Matrix::from_rows(rows)
}

/// `Σ = I − QQᵀ` for the orthonormal basis `Q` of `subspace`.
pub fn projection_complement(subspace: &SensitiveSubspace) -> Result<MahalanobisMetric> {
    let d = subspace.dim();
    let q = subspace.basis();
    if q.cols() == 0 {
        return Err(Error::EmptyInput);
    }
    if q.cols() >= d {
        return Err(Error::SubspaceSpansWholeSpace);
    }
    let qqt = q.matmul_transpose(q)?;
    let mut sigma = Matrix::identity(d).sub(&qqt)?;
    // exact symmetry
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (sigma.get(i, j) + sigma.get(j, i));
            sigma.set(i, j, v);
            sigma.set(j, i, v);
        }
    }
    Ok(MahalanobisMetric {
        sigma,
        subspace: Some(subspace.clone()),
    })
}

/// Settings for fitting the protected-attribute classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SoftmaxFitConfig {
    /// Gradient step.
    pub step: f64,
    /// Number of (minibatch) gradient steps.
    pub epochs: usize,
    /// `None` means full batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for SoftmaxFitConfig {
    fn default() -> Self {
        Self {
            step: 0.1,
            epochs: 2000,
            batch_size: None,
            seed: 0,
        }
    }
}

impl SoftmaxFitConfig {
    /// Batch 5000, 5000 steps, as used for the Adult gender hyperplane.
    pub fn adult() -> Self {
        Self {
            step: 0.1,
            epochs: 5000,
            batch_size: Some(5000),
            seed: 0,
        }
    }
}

/// Coefficients of an ℓ2-penalized logistic (two classes) or softmax (more)
/// regression of `protected` on `features`, without intercept.
///
/// The penalty is `reg · ‖w‖₂` per coefficient vector. Binary problems yield
/// a single direction, multiclass problems one per class.
pub fn fit_protected_classifier(
    features: &Matrix,
    protected: &[usize],
    l2_reg: f64,
    opt: &SoftmaxFitConfig,
) -> Result<Matrix> {
    let (n, d) = features.shape();
    if n == 0 || d == 0 {
        return Err(Error::EmptyInput);
    }
    check_dim(n, protected.len())?;
    if l2_reg < 0.0 || !l2_reg.is_finite() {
        return Err(Error::invalid("l2_reg must be a nonnegative finite number"));
    }
    if opt.step <= 0.0 {
        return Err(Error::invalid("step must be positive"));
    }
    let classes = protected.iter().copied().max().unwrap_or(0) + 1;
    if classes < 2 || (0..classes).filter(|c| protected.contains(c)).count() < 2 {
        return Err(Error::invalid("need at least two protected classes"));
    }
    // binary: one logit (class 1 vs 0); otherwise one logit per class
    let k = if classes == 2 { 1 } else { classes };
    let mut w = vec![0.0; k * d];
    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    let all: Vec<usize> = (0..n).collect();
    let mut logits = vec![0.0; k];
    let mut grad = vec![0.0; k * d];
    for _ in 0..opt.epochs {
        let batch: Vec<usize> = match opt.batch_size {
            Some(b) if b < n => sample(&mut rng, n, b).into_vec(),
            _ => all.clone(),
        };
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for &i in &batch {
            let x = features.row(i);
            for (c, l) in logits.iter_mut().enumerate() {
                *l = dot(&w[c * d..(c + 1) * d], x);
            }
            let y = protected[i];
            if k == 1 {
                let z = logits[0];
                let target = if y == 1 { 1.0 } else { 0.0 };
                loss += softplus(z) - target * z;
                let r = sigmoid(z) - target;
                linalg::axpy(r, x, &mut grad[..d]);
            } else {
                let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = logits.iter().map(|l| (l - m).exp()).sum();
                loss += m + sum.ln() - logits[y];
                for c in 0..k {
                    let p = (logits[c] - m).exp() / sum;
                    let r = p - if c == y { 1.0 } else { 0.0 };
                    linalg::axpy(r, x, &mut grad[c * d..(c + 1) * d]);
                }
            }
        }
        let scale = 1.0 / batch.len() as f64;
        if !(loss * scale).is_finite() {
            return Err(Error::FitDiverged);
        }
        for c in 0..k {
            let wc = &w[c * d..(c + 1) * d];
            let nrm = linalg::norm(wc);
            let gc = &mut grad[c * d..(c + 1) * d];
            gc.iter_mut().for_each(|g| *g *= scale);
            if nrm > 0.0 {
                linalg::axpy(l2_reg / nrm, wc, gc);
            }
        }
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= opt.step * gi;
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::FitDiverged);
        }
    }
    // d × k, one coefficient vector per column
    Ok(Matrix::from_fn(d, k, |i, c| w[c * d + i]))
}

/// Sensitive subspace spanned by the protected-attribute classifier's
/// coefficient vectors. Append axis directions with
/// [`SensitiveSubspace::with_extra_directions`].
pub fn learn_subspace_softmax(
    features: &Matrix,
    protected: &[usize],
    l2_reg: f64,
    opt: &SoftmaxFitConfig,
) -> Result<SensitiveSubspace> {
    let coefficients = fit_protected_classifier(features, protected, l2_reg, opt)?;
    SensitiveSubspace::from_directions(coefficients)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Representations of one group of mutually comparable samples (rows).
#[derive(Debug, Clone)]
pub struct ComparableGroup {
    members: Matrix,
}

impl ComparableGroup {
    pub fn new(members: Matrix) -> Result<Self> {
        if members.rows() < 2 {
            return Err(Error::invalid("a comparable group needs at least 2 members"));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &Matrix {
        &self.members
    }

    /// Members with the group mean subtracted from every row.
    pub fn centered(&self) -> Matrix {
        let (n, d) = self.members.shape();
        let mut mean = vec![0.0; d];
        for i in 0..n {
            linalg::axpy(1.0, self.members.row(i), &mut mean);
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut out = self.members.clone();
        for i in 0..n {
            for (v, m) in out.row_mut(i).iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        out
    }
}

/// Factor-analysis estimate of the sensitive subspace from comparable groups.
///
/// Minimizing `½ Σ_g ‖H_g Φ_g − W_g Aᵀ‖²_F` over `(W_g, A)` is a rank-`k`
/// approximation of the vertically stacked centered blocks, so `ran(A)` is
/// spanned by their top-`k` right singular vectors.
pub fn learn_subspace_factor(groups: &[ComparableGroup], k: usize) -> Result<SensitiveSubspace> {
    if groups.is_empty() {
        return Err(Error::EmptyInput);
    }
    let d = groups[0].members.cols();
    if k == 0 || k > d {
        return Err(Error::invalid(format!("k = {k} must be in 1..={d}")));
    }
    let centered: Vec<Matrix> = groups.iter().map(ComparableGroup::centered).collect();
    let stacked = Matrix::vstack(&centered)?;
    let rank_cap = stacked.rows().min(d);
    if k > rank_cap {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the rank bound {rank_cap} of the centered data"
        )));
    }
    let svd = linalg::truncated_svd(&stacked, rank_cap)?;
    let top = svd.singular_values[0];
    let rank = svd
        .singular_values
        .iter()
        .take_while(|s| **s > linalg::RANK_TOLERANCE * top && top > 0.0)
        .count();
    if k > rank {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the rank {rank} of the centered data"
        )));
    }
    SensitiveSubspace::from_directions(svd.right_vectors.leading_columns(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag2() -> MahalanobisMetric {
        let s = 1.0 / 2f64.sqrt();
        let sub = SensitiveSubspace::from_directions(Matrix::from_columns(&[vec![s, s]]).unwrap())
            .unwrap();
        projection_complement(&sub).unwrap()
    }

    #[test]
    fn axis_projectors() {
        let m = projection_complement(&SensitiveSubspace::from_axes(2, &[0]).unwrap()).unwrap();
        assert!(m.sigma().max_abs_diff(&Matrix::from_diag(&[0.0, 1.0])) < 1e-15);
        let m = projection_complement(&SensitiveSubspace::from_axes(3, &[0, 1]).unwrap()).unwrap();
        assert!(m.sigma().max_abs_diff(&Matrix::from_diag(&[0.0, 0.0, 1.0])) < 1e-15);
    }

    #[test]
    fn diagonal_direction_projector() {
        let expected = Matrix::from_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap();
        assert!(diag2().sigma().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn full_space_is_rejected() {
        let sub = SensitiveSubspace::from_axes(2, &[0, 1]).unwrap();
        assert!(matches!(
            projection_complement(&sub),
            Err(Error::SubspaceSpansWholeSpace)
        ));
    }

    #[test]
    fn distances() {
        let eu = MahalanobisMetric::euclidean(2);
        assert_eq!(eu.distance_sq(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
        let m = projection_complement(&SensitiveSubspace::from_axes(2, &[0]).unwrap()).unwrap();
        assert_eq!(m.distance_sq(&[0.0, 0.0], &[7.5, 0.0]).unwrap(), 0.0);
        // (1,-1)ᵀ Σ (1,-1) with Σ = [[.5,-.5],[-.5,.5]] is 0.5 + 0.5 + 0.5 + 0.5
        assert!((diag2().distance_sq(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(eu.distance_sq(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn transport_costs() {
        let eu = MahalanobisMetric::euclidean(2);
        let x = [0.3, -1.0];
        assert_eq!(eu.transport_cost((&x, 1), (&x, 1)).unwrap(), TransportCost::Finite(0.0));
        assert!(eu.transport_cost((&x, 0), (&x, 1)).unwrap().is_infinite());
        assert_eq!(
            eu.transport_cost((&[0.0, 0.0], 0), (&[1.0, 1.0], 0)).unwrap(),
            TransportCost::Finite(2.0)
        );
    }

    #[test]
    fn metric_rejects_non_psd() {
        assert!(MahalanobisMetric::new(Matrix::from_diag(&[1.0, -0.5])).is_err());
        let asym = Matrix::from_rows(&[vec![1.0, 0.1], vec![0.0, 1.0]]).unwrap();
        assert!(MahalanobisMetric::new(asym).is_err());
    }

    #[test]
    fn metric_file_round_trip_is_bit_stable() {
        let sub = SensitiveSubspace::from_directions(
            Matrix::from_columns(&[vec![0.1, 0.7, -1.0 / 3.0], vec![1e-7, 2.0, 0.5]]).unwrap(),
        )
        .unwrap();
        let m = projection_complement(&sub).unwrap();
        let json = serde_json::to_string(&m.to_file()).unwrap();
        let back = MahalanobisMetric::from_file(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn separated_classes_give_axis_direction() {
        // classes split by the sign of the first coordinate
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let t = (i as f64 - 19.5) / 10.0;
            for &s in &[-1.0, 1.0] {
                rows.push(vec![s * (0.5 + (i % 5) as f64 * 0.2), t]);
                labels.push(usize::from(s > 0.0));
            }
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let sub = learn_subspace_softmax(&x, &labels, 0.1, &SoftmaxFitConfig::default()).unwrap();
        let w = sub.directions().column(0);
        let cos = w[0].abs() / linalg::norm(&w);
        assert!(cos > 5f64.to_radians().cos(), "angle too large, cos = {cos}");
    }

    #[test]
    fn independent_attribute_gives_small_coefficients() {
        // attribute is balanced within every feature value
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..50 {
            let x = [(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()];
            for c in 0..2 {
                rows.push(x.to_vec());
                labels.push(c);
            }
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let w = fit_protected_classifier(&x, &labels, 5.0, &SoftmaxFitConfig::default()).unwrap();
        assert!(w.frobenius_norm() < 0.1);
    }

    #[test]
    fn multiclass_fit_gives_one_direction_per_class() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let c = i % 3;
                let mut v = vec![0.1 * (i as f64).sin(); 3];
                v[c] += 1.0;
                v
            })
            .collect();
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let w = fit_protected_classifier(&Matrix::from_rows(&rows).unwrap(), &labels, 0.0, &Default::default())
            .unwrap();
        assert_eq!(w.shape(), (3, 3));
    }

    #[test]
    fn fit_rejects_single_class() {
        let x = Matrix::identity(3);
        assert!(fit_protected_classifier(&x, &[1, 1, 1], 0.1, &Default::default()).is_err());
    }

    #[test]
    fn huge_step_reports_divergence() {
        let x = Matrix::from_rows(&[vec![1e200, 0.0], vec![-1e200, 1.0]]).unwrap();
        let opt = SoftmaxFitConfig {
            step: 1e200,
            epochs: 10,
            ..Default::default()
        };
        assert!(matches!(
            fit_protected_classifier(&x, &[0, 1], 0.0, &opt),
            Err(Error::FitDiverged)
        ));
    }

    #[test]
    fn factor_single_axis_variation() {
        let members = Matrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![-1.0, 2.0, 3.0],
            vec![4.0, 2.0, 3.0],
        ])
        .unwrap();
        let sub = learn_subspace_factor(&[ComparableGroup::new(members).unwrap()], 1).unwrap();
        let b = sub.basis().column(0);
        assert!((b[0].abs() - 1.0).abs() < 1e-12);
        assert!(b[1].abs() < 1e-12 && b[2].abs() < 1e-12);
    }

    #[test]
    fn factor_rejects_excess_rank() {
        let members = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let g = ComparableGroup::new(members).unwrap();
        assert!(learn_subspace_factor(&[g], 2).is_err());
        assert!(ComparableGroup::new(Matrix::zeros(1, 2)).is_err());
    }
}
