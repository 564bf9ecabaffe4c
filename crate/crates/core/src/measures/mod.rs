//! Discrete measures, cost matrices, couplings and the functionals evaluated
//! on them.
//!
//! Every measure here is finitely supported: a list of points in `R^d` with
//! strictly positive weights summing to one. A [`Coupling`] is an `N x M`
//! nonnegative matrix carrying references to its two marginals, and the cost
//! is a dense [`CostMatrix`] of ground-metric evaluations, optionally passed
//! through an affine rescale `a * c + b`.
//!
//! The functionals are
//!
//! * [`entropy`]: relative entropy `H(gamma | mu x nu)` in nats, with `0 log 0 = 0`;
//! * [`ess_sup`]: the maximal cost over the (thresholded) support;
//! * [`eval_jpe`]: the penalized functional `(sum gamma c^p + eps H)^(1/p)`;
//! * [`lp_norm`]: `||c||_{L^p(gamma)}`, the entropy-free part of the above;
//! * [`marginal_errors`]: L1 and max-abs distance of the marginals of a plan
//!   to the prescribed ones.

mod files;

use std::cmp::Ordering;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use files::{Instance, PlanFile};

/// Tolerance on `sum(weights) == 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Weights at or below this value are rejected at construction.
pub const MIN_WEIGHT: f64 = 1e-15;

/// Default support threshold, relative to the largest entry of a plan.
pub const DEFAULT_SUPPORT_REL_TAU: f64 = 1e-9;

/// A finitely supported probability measure on `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DiscreteMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        DiscreteMeasure::new(raw.points, raw.weights)
    }
}

impl From<DiscreteMeasure> for RawMeasure {
    fn from(m: DiscreteMeasure) -> Self {
        RawMeasure {
            points: m.points,
            weights: m.weights,
        }
    }
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidMeasure("zero-dimensional points".into()));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMeasure(format!("non-finite point {p:?}")));
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w <= MIN_WEIGHT {
                return Err(Error::InvalidMeasure(format!(
                    "weight {w} of atom {i} is not above {MIN_WEIGHT}"
                )));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, not 1"
            )));
        }

        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]));
        for w in order.windows(2) {
            if points[w[0]] == points[w[1]] {
                return Err(Error::InvalidMeasure(format!(
                    "atoms {} and {} share the point {:?}",
                    w[0], w[1], points[w[0]]
                )));
            }
        }

        Ok(Self { points, weights })
    }

    /// Uniform weights `1/n` on the given points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        Self::new(points, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Whether all weights coincide up to `tol`.
    pub fn is_uniform(&self, tol: f64) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|&x| (x - w).abs() <= tol)
    }

    /// Shannon entropy `-sum w log w` of the weight vector.
    pub fn shannon_entropy(&self) -> f64 {
        self.weights.iter().map(|&w| -w * w.ln()).sum()
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Ground metric used to evaluate costs between atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Chebyshev,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Chebyshev => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "chebyshev" => Ok(Metric::Chebyshev),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

/// Affine map `c -> scale * c + shift` applied to metric evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rescale {
    pub scale: f64,
    pub shift: f64,
}

impl Default for Rescale {
    fn default() -> Self {
        Self {
            scale: 1.0,
            shift: 0.0,
        }
    }
}

impl Rescale {
    pub fn new(scale: f64, shift: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!("rescale scale {scale} must be > 0")));
        }
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(Error::InvalidParameter(format!("rescale shift {shift} must be >= 0")));
        }
        Ok(Self { scale, shift })
    }

    pub fn apply(self, c: f64) -> f64 {
        self.scale * c + self.shift
    }

    /// `self` followed by `outer`.
    pub fn then(self, outer: Rescale) -> Rescale {
        Rescale {
            scale: outer.scale * self.scale,
            shift: outer.scale * self.shift + outer.shift,
        }
    }
}

/// Dense `N x M` matrix of nonnegative costs `c_ij = c(x_i, y_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    entries: Array2<f64>,
    metric: Option<Metric>,
    rescale: Rescale,
}

impl CostMatrix {
    /// Wraps a raw matrix that did not come from a ground metric.
    pub fn from_entries(entries: Array2<f64>) -> Result<Self> {
        Self::validated(entries, None, Rescale::default())
    }

    fn validated(entries: Array2<f64>, metric: Option<Metric>, rescale: Rescale) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidCost("empty matrix".into()));
        }
        if let Some(bad) = entries.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidCost(format!("entry {bad} is not a finite nonnegative real")));
        }
        if rescale.shift >= 1.0 && entries.iter().any(|&c| c < 1.0) {
            return Err(Error::InvalidCost("shift >= 1 but some entry is below 1".into()));
        }
        Ok(Self {
            entries,
            metric,
            rescale,
        })
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn metric(&self) -> Option<Metric> {
        self.metric
    }

    pub fn rescale(&self) -> Rescale {
        self.rescale
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[[i, j]]
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Applies a further affine rescale on top of the current one.
    pub fn rescaled(&self, outer: Rescale) -> Result<Self> {
        Self::validated(
            self.entries.mapv(|c| outer.apply(c)),
            self.metric,
            self.rescale.then(outer),
        )
    }

    /// Entry-wise transform `f(c)`; the result no longer carries a metric.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::validated(self.entries.mapv(f), None, Rescale::default())
    }

    /// `c^p` entry-wise.
    pub fn powered(&self, p: f64) -> Array2<f64> {
        self.entries.mapv(|c| c.powf(p))
    }

    pub fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        let (n, m) = self.shape();
        if n != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: n,
            });
        }
        if m != cols {
            return Err(Error::DimensionMismatch {
                expected: cols,
                found: m,
            });
        }
        Ok(())
    }
}

/// Evaluates `a * metric(x_i, y_j) + b` for every pair of atoms.
pub fn build_cost(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    metric: Metric,
    rescale: Rescale,
) -> Result<CostMatrix> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    let entries = Array2::from_shape_fn((mu.len(), nu.len()), |(i, j)| {
        rescale.apply(metric.distance(mu.point(i), nu.point(j)))
    });
    CostMatrix::validated(entries, Some(metric), rescale)
}

/// A transport plan: nonnegative `N x M` matrix tied to its two marginals.
///
/// Marginal feasibility is not enforced at construction since iterative
/// solvers only reach it up to a tolerance; see [`Coupling::is_feasible`].
#[derive(Clone, Debug)]
pub struct Coupling {
    entries: Array2<f64>,
    mu: Arc<DiscreteMeasure>,
    nu: Arc<DiscreteMeasure>,
}

impl Coupling {
    pub fn new(
        entries: Array2<f64>,
        mu: Arc<DiscreteMeasure>,
        nu: Arc<DiscreteMeasure>,
    ) -> Result<Self> {
        let (n, m) = entries.dim();
        if n != mu.len() || m != nu.len() {
            return Err(Error::InvalidCoupling(format!(
                "plan is {n}x{m} but marginals have {} and {} atoms",
                mu.len(),
                nu.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::InvalidCoupling(format!("entry {bad} is negative or non-finite")));
        }
        Ok(Self { entries, mu, nu })
    }

    /// The independent coupling `mu x nu`.
    pub fn product(mu: Arc<DiscreteMeasure>, nu: Arc<DiscreteMeasure>) -> Self {
        let entries = Array2::from_shape_fn((mu.len(), nu.len()), |(i, j)| {
            mu.weights()[i] * nu.weights()[j]
        });
        Self { entries, mu, nu }
    }

    /// The plan `gamma_{i, perm[i]} = mu_i`; requires `mu_i = nu_{perm[i]}`.
    pub fn from_permutation(
        mu: Arc<DiscreteMeasure>,
        nu: Arc<DiscreteMeasure>,
        perm: &[usize],
    ) -> Result<Self> {
        if mu.len() != nu.len() || perm.len() != mu.len() {
            return Err(Error::InvalidCoupling("permutation size mismatch".into()));
        }
        let mut seen = vec![false; perm.len()];
        let mut entries = Array2::zeros((mu.len(), nu.len()));
        for (i, &j) in perm.iter().enumerate() {
            if j >= perm.len() || seen[j] {
                return Err(Error::InvalidCoupling(format!("{perm:?} is not a permutation")));
            }
            seen[j] = true;
            if (mu.weights()[i] - nu.weights()[j]).abs() > WEIGHT_SUM_TOL {
                return Err(Error::InvalidCoupling(format!(
                    "mu_{i} != nu_{j}; permutation plan infeasible"
                )));
            }
            entries[[i, j]] = mu.weights()[i];
        }
        Ok(Self { entries, mu, nu })
    }

    /// The north-west corner vertex of the transportation polytope.
    pub fn north_west_corner(mu: Arc<DiscreteMeasure>, nu: Arc<DiscreteMeasure>) -> Self {
        let (n, m) = (mu.len(), nu.len());
        let mut entries = Array2::zeros((n, m));
        let mut supply = mu.weights().to_vec();
        let mut demand = nu.weights().to_vec();
        let (mut i, mut j) = (0, 0);
        while i < n && j < m {
            let q = supply[i].min(demand[j]);
            entries[[i, j]] = q;
            supply[i] -= q;
            demand[j] -= q;
            if i + 1 == n {
                j += 1;
            } else if j + 1 == m || supply[i] <= demand[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { entries, mu, nu }
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<f64> {
        self.entries
    }

    pub fn mu(&self) -> &Arc<DiscreteMeasure> {
        &self.mu
    }

    pub fn nu(&self) -> &Arc<DiscreteMeasure> {
        &self.nu
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[[i, j]]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.sum_axis(Axis(1)).to_vec()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        self.entries.sum_axis(Axis(0)).to_vec()
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    /// Both L1 marginal errors are at most `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        let e = marginal_errors(self);
        e.row_l1 <= tol && e.col_l1 <= tol
    }

    /// Number of entries strictly above `tau`.
    pub fn support_size(&self, tau: f64) -> usize {
        self.entries.iter().filter(|&&g| g > tau).count()
    }
}

/// Cells `(i, j)` with `gamma_ij > tau`; a finite-sample stand-in for `spt gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportSet {
    pairs: Vec<(usize, usize)>,
    tau: f64,
}

impl SupportSet {
    /// Cells strictly above the absolute threshold `tau`, in row-major order.
    pub fn from_coupling(gamma: &Coupling, tau: f64) -> Self {
        let pairs = gamma
            .entries
            .indexed_iter()
            .filter(|(_, &g)| g > tau)
            .map(|(ij, _)| ij)
            .collect();
        Self { pairs, tau }
    }

    /// Threshold `rel * max_ij gamma_ij`.
    pub fn from_coupling_relative(gamma: &Coupling, rel: f64) -> Self {
        Self::from_coupling(gamma, rel * gamma.max_entry())
    }

    /// A hand-built support; the recorded threshold is 0.
    pub fn from_pairs(pairs: Vec<(usize, usize)>) -> Self {
        Self { pairs, tau: 0.0 }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, cell: (usize, usize)) -> bool {
        self.pairs.contains(&cell)
    }
}

/// Relative entropy `H(gamma | mu x nu)` in nats.
pub fn entropy(gamma: &Coupling) -> f64 {
    let mu = gamma.mu.weights();
    let nu = gamma.nu.weights();
    gamma
        .entries
        .indexed_iter()
        .filter(|(_, &g)| g > 0.0)
        .map(|((i, j), &g)| g * (g / (mu[i] * nu[j])).ln())
        .sum()
}

/// The crude bound `M = -sum mu log mu - sum nu log nu` on the entropy of
/// any feasible plan.
pub fn crude_entropy_bound(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    mu.shannon_entropy() + nu.shannon_entropy()
}

/// `max { c_ij : gamma_ij > tau }`.
pub fn ess_sup(gamma: &Coupling, cost: &CostMatrix, tau: f64) -> Result<f64> {
    let (n, m) = gamma.shape();
    cost.check_shape(n, m)?;
    if tau < 0.0 {
        return Err(Error::InvalidParameter(format!("threshold {tau} < 0")));
    }
    gamma
        .entries
        .indexed_iter()
        .filter(|(_, &g)| g > tau)
        .map(|(ij, _)| cost.entries[ij])
        .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))))
        .ok_or(Error::EmptySupport { tau })
}

fn check_exponents(p: f64, eps: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be >= 1")));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be > 0")));
    }
    Ok(())
}

/// `(sum gamma c^p + extra)^(1/p)` computed with the largest active cost
/// factored out, so `c^p` never overflows for large `p`.
fn pth_root_of_moment(gamma: &Coupling, cost: &CostMatrix, p: f64, extra: f64) -> f64 {
    let cmax = gamma
        .entries
        .indexed_iter()
        .filter(|(_, &g)| g > 0.0)
        .map(|(ij, _)| cost.entries[ij])
        .fold(0.0, f64::max);
    if cmax == 0.0 {
        return extra.max(0.0).powf(1.0 / p);
    }
    let scaled: f64 = gamma
        .entries
        .iter()
        .zip(cost.entries.iter())
        .filter(|(&g, _)| g > 0.0)
        .map(|(&g, &c)| g * (c / cmax).powf(p))
        .sum();
    let log_cmax_p = p * cmax.ln();
    let mut inner = scaled + extra * (-log_cmax_p).exp();
    if inner < 0.0 {
        log::warn!("J_(p,eps) inner value {inner:e} < 0 from round-off; clamped to 0");
        inner = 0.0;
    }
    if inner == 0.0 {
        return 0.0;
    }
    ((log_cmax_p + inner.ln()) / p).exp()
}

/// `||c||_{L^p(gamma)} = (sum gamma c^p)^(1/p)`.
pub fn lp_norm(gamma: &Coupling, cost: &CostMatrix, p: f64) -> Result<f64> {
    let (n, m) = gamma.shape();
    cost.check_shape(n, m)?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be >= 1")));
    }
    Ok(pth_root_of_moment(gamma, cost, p, 0.0))
}

/// The penalized functional `J_{p,eps}(gamma) = (sum gamma c^p + eps H)^(1/p)`.
pub fn eval_jpe(gamma: &Coupling, cost: &CostMatrix, p: f64, eps: f64) -> Result<f64> {
    let (n, m) = gamma.shape();
    cost.check_shape(n, m)?;
    check_exponents(p, eps)?;
    Ok(pth_root_of_moment(gamma, cost, p, eps * entropy(gamma)))
}

/// Distance of the marginals of a plan to the prescribed ones.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MarginalErrors {
    /// `||gamma 1_M - mu||_1`
    pub row_l1: f64,
    /// `||gamma^T 1_N - nu||_1`
    pub col_l1: f64,
    pub row_max: f64,
    pub col_max: f64,
}

pub fn marginal_errors(gamma: &Coupling) -> MarginalErrors {
    let (row_l1, row_max) = deviation(&gamma.row_sums(), gamma.mu.weights());
    let (col_l1, col_max) = deviation(&gamma.col_sums(), gamma.nu.weights());
    MarginalErrors {
        row_l1,
        col_l1,
        row_max,
        col_max,
    }
}

fn deviation(actual: &[f64], target: &[f64]) -> (f64, f64) {
    actual
        .iter()
        .zip(target)
        .map(|(a, t)| (a - t).abs())
        .fold((0.0, 0.0), |(s, m), d| (s + d, f64::max(m, d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn arc(points: Vec<Vec<f64>>) -> Arc<DiscreteMeasure> {
        Arc::new(DiscreteMeasure::uniform(points).unwrap())
    }

    fn line(n: usize) -> Arc<DiscreteMeasure> {
        arc((0..n).map(|i| vec![i as f64]).collect())
    }

    #[test]
    fn rejects_bad_measures() {
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.4]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.0, 0.0]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![0.0]], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.0 - 1e-16, 1e-16]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![f64::NAN]], vec![1.0]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn cost_examples() {
        let x = DiscreteMeasure::uniform(vec![vec![0.0, 0.0]]).unwrap();
        let y = DiscreteMeasure::uniform(vec![vec![1.0, 2.0]]).unwrap();
        let e = build_cost(&x, &y, Metric::Euclidean, Rescale::default()).unwrap();
        assert!((e.get(0, 0) - 5f64.sqrt()).abs() < 1e-15);
        let c = build_cost(&x, &y, Metric::Chebyshev, Rescale::default()).unwrap();
        assert_eq!(c.get(0, 0), 2.0);
        let s = build_cost(&x, &x, Metric::Euclidean, Rescale::default()).unwrap();
        assert_eq!(s.get(0, 0), 0.0);
        let r = build_cost(&x, &y, Metric::Euclidean, Rescale::new(2.0, 1.0).unwrap()).unwrap();
        assert!((r.get(0, 0) - (2.0 * 5f64.sqrt() + 1.0)).abs() < 1e-14);

        let z = DiscreteMeasure::uniform(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(
            build_cost(&x, &z, Metric::Euclidean, Rescale::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rescale_composition() {
        let a = Rescale::new(2.0, 1.0).unwrap();
        let b = Rescale::new(3.0, 0.5).unwrap();
        let ab = a.then(b);
        assert_eq!(ab.apply(1.0), b.apply(a.apply(1.0)));
        assert!(Rescale::new(0.0, 0.0).is_err());
        assert!(Rescale::new(1.0, -1.0).is_err());
    }

    #[test]
    fn entropy_of_product_and_permutation() {
        let mu = line(4);
        let nu = arc((0..4).map(|i| vec![i as f64, 1.0]).collect());
        let prod = Coupling::product(mu.clone(), nu.clone());
        assert!(entropy(&prod).abs() < 1e-15);
        let perm = Coupling::from_permutation(mu.clone(), nu, &[2, 0, 3, 1]).unwrap();
        assert!((entropy(&perm) - 4f64.ln()).abs() < 1e-14);
        let bound = crude_entropy_bound(&mu, perm.nu());
        assert!(entropy(&perm) <= bound);
    }

    #[test]
    fn ess_sup_examples() {
        let mu = line(1);
        let nu = arc(vec![vec![3.0]]);
        let cost = build_cost(&mu, &nu, Metric::Euclidean, Rescale::default()).unwrap();
        let g = Coupling::product(mu, nu);
        assert_eq!(ess_sup(&g, &cost, 0.0).unwrap(), 3.0);
        assert!(matches!(ess_sup(&g, &cost, 2.0), Err(Error::EmptySupport { .. })));

        let cost = CostMatrix::from_entries(array![[1.0, 5.0, 9.0], [2.0, 6.0, 0.5], [7.0, 3.0, 4.0]])
            .unwrap();
        let perm = Coupling::from_permutation(line(3), line(3), &[1, 2, 0]).unwrap();
        assert_eq!(ess_sup(&perm, &cost, 0.0).unwrap(), 7.0);
    }

    #[test]
    fn jpe_on_product_is_lp_norm() {
        let mu = line(3);
        let nu = arc(vec![vec![0.5], vec![4.0]]);
        let cost = build_cost(&mu, &nu, Metric::Euclidean, Rescale::default()).unwrap();
        let g = Coupling::product(mu.clone(), nu.clone());
        for p in [1.0, 2.0, 7.5, 40.0] {
            let direct: f64 = (0..3)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| g.get(i, j) * cost.get(i, j).powf(p))
                .sum::<f64>()
                .powf(1.0 / p);
            let j = eval_jpe(&g, &cost, p, 3.0).unwrap();
            assert!((j - direct).abs() <= 1e-13 * direct, "p={p}: {j} vs {direct}");
            assert!((lp_norm(&g, &cost, p).unwrap() - j).abs() <= 1e-13 * j);
        }
    }

    #[test]
    fn jpe_two_by_two_matches_brute_force_summation() {
        // second code path: expand every term by hand
        let mu = arc(vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        let nu = arc(vec![vec![0.0, 1.5], vec![2.0, 1.0]]);
        let cost = build_cost(&mu, &nu, Metric::Euclidean, Rescale::default()).unwrap();
        let g = Coupling::new(array![[0.35, 0.15], [0.15, 0.35]], mu, nu).unwrap();
        let (p, eps) = (3.0, 0.7);
        let c = |i: usize, j: usize| cost.get(i, j);
        let moment = 0.35 * c(0, 0).powi(3)
            + 0.15 * c(0, 1).powi(3)
            + 0.15 * c(1, 0).powi(3)
            + 0.35 * c(1, 1).powi(3);
        let h = 2.0 * 0.35 * (0.35f64 / 0.25).ln() + 2.0 * 0.15 * (0.15f64 / 0.25).ln();
        let expected = (moment + eps * h).powf(1.0 / p);
        let got = eval_jpe(&g, &cost, p, eps).unwrap();
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
        assert!(got >= lp_norm(&g, &cost, p).unwrap());
    }

    #[test]
    fn jpe_large_p_does_not_overflow() {
        let mu = line(2);
        let nu = arc(vec![vec![30.0], vec![40.0]]);
        let cost = build_cost(&mu, &nu, Metric::Euclidean, Rescale::default()).unwrap();
        let g = Coupling::product(mu, nu);
        let v = eval_jpe(&g, &cost, 400.0, 1.0).unwrap();
        assert!(v.is_finite());
        assert!(v <= 40.0 + 1e-9 && v > 39.0);
    }

    #[test]
    fn jpe_rejects_bad_parameters() {
        let g = Coupling::product(line(2), line(2));
        let cost = CostMatrix::from_entries(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(eval_jpe(&g, &cost, 0.5, 1.0).is_err());
        assert!(eval_jpe(&g, &cost, 2.0, 0.0).is_err());
        let wrong = CostMatrix::from_entries(array![[0.0, 1.0, 2.0]]).unwrap();
        assert!(eval_jpe(&g, &wrong, 2.0, 1.0).is_err());
    }

    #[test]
    fn marginal_errors_exact_and_perturbed() {
        let g = Coupling::product(line(3), line(2));
        assert_eq!(marginal_errors(&g), MarginalErrors::default());
        let perm = Coupling::from_permutation(line(3), line(3), &[0, 2, 1]).unwrap();
        assert_eq!(marginal_errors(&perm).row_l1, 0.0);

        let mut e = g.entries().clone();
        e[[0, 0]] += 1e-3;
        let g2 = Coupling::new(e, g.mu().clone(), g.nu().clone()).unwrap();
        let err = marginal_errors(&g2);
        assert!((err.row_l1 - 1e-3).abs() < 1e-15);
        assert!((err.col_max - 1e-3).abs() < 1e-15);
        assert!(!g2.is_feasible(1e-4));
    }

    #[test]
    fn north_west_corner_is_feasible() {
        let mu = Arc::new(
            DiscreteMeasure::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.5, 0.25, 0.25])
                .unwrap(),
        );
        let nu = Arc::new(
            DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.125, 0.875]).unwrap(),
        );
        let g = Coupling::north_west_corner(mu, nu);
        assert!(g.is_feasible(0.0));
        assert!(g.support_size(0.0) <= 4);
    }

    #[test]
    fn support_thresholds() {
        let g = Coupling::new(array![[0.5, 1e-12], [0.0, 0.5]], line(2), line(2)).unwrap();
        assert_eq!(SupportSet::from_coupling(&g, 0.0).len(), 3);
        let s = SupportSet::from_coupling_relative(&g, 1e-9);
        assert_eq!(s.pairs(), &[(0, 0), (1, 1)]);
        assert!((s.tau() - 0.5e-9).abs() < 1e-24);
    }

    #[test]
    fn rejects_cost_violating_shift_invariant() {
        let c = CostMatrix::from_entries(array![[0.5]]).unwrap();
        assert!(c.rescaled(Rescale::new(1.0, 1.0).unwrap()).is_ok());
        assert!(CostMatrix::from_entries(array![[-1.0]]).is_err());
    }
}
