//! Entropic transport for the powered cost `c^p`.
//!
//! Raising `J_{p,eps}` to the power `p` leaves its minimizer unchanged and
//! turns it into the classical problem
//! `min <gamma, c^p> + eps H(gamma | mu x nu)` over `Pi(mu, nu)`, which is
//! solved by alternating diagonal scalings of the Gibbs kernel
//! `K = exp(-c^p / eps)`.
//!
//! Two engines run the same iteration:
//!
//! * [`Mode::Standard`] keeps the scalings `u, v` and the kernel `K`;
//! * [`Mode::LogDomain`] keeps `log u, log v` and evaluates each update with a
//!   single-pass log-sum-exp, so it is well defined when `c^p / eps` is far
//!   beyond the exponent range of `f64`.
//!
//! [`Mode::Auto`] picks the standard engine when `max c^p / eps <= 700` and the
//! kernel has no vanishing row or column, and otherwise (or if the scalings
//! blow up mid-run) uses the log-domain engine.
//!
//! Both engines start from unit scalings and stop once the L1 errors of both
//! marginals are at most `tol`, checked after every row+column pair.

mod schedule;

use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{
    self, marginal_errors, CostMatrix, Coupling, DiscreteMeasure, MarginalErrors,
};

pub use schedule::{
    degenerate_schedule_demo, validate_schedule, DegeneratePoint, EpsSchedule, ScheduleReport,
    ScheduleRow,
};

pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITER: usize = 50_000;

/// Largest `c^p / eps` for which `exp(-c^p / eps)` stays a normal double.
pub const EXP_UNDERFLOW_BOUND: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Standard,
    LogDomain,
    Auto,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Mode::Standard),
            "log" | "log-domain" | "logdomain" => Ok(Mode::LogDomain),
            "auto" => Ok(Mode::Auto),
            other => Err(Error::InvalidParameter(format!("unknown solver mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub p: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub mode: Mode,
}

impl SolverConfig {
    pub fn new(p: f64, eps: f64) -> Self {
        Self {
            p,
            eps,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            mode: Mode::Auto,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::InvalidParameter(format!("p = {} must be >= 1", self.p)));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps = {} must be > 0", self.eps)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol = {} must be > 0", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Output of a solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub coupling: Coupling,
    /// `J_{p,eps}` at the returned coupling.
    pub value: f64,
    pub entropy: f64,
    pub iterations: usize,
    pub marginal_errors: MarginalErrors,
    pub converged: bool,
    /// Engine that produced the result (never `Auto`).
    pub mode: Mode,
    pub p: f64,
    pub eps: f64,
    /// `log u`; the plan is `gamma_ij = exp(log_u_i + log_v_j - c_ij^p / eps)`.
    pub log_u: Vec<f64>,
    pub log_v: Vec<f64>,
}

impl SolveReport {
    /// `log gamma_ij` from the scalings; finite even where `gamma_ij`
    /// underflows to zero.
    pub fn log_entry(&self, cost: &CostMatrix, i: usize, j: usize) -> f64 {
        self.log_u[i] + self.log_v[j] - cost.get(i, j).powf(self.p) / self.eps
    }

    /// `log gamma(C)` for a set of cells `C`.
    pub fn log_mass(&self, cost: &CostMatrix, cells: &[(usize, usize)]) -> Result<f64> {
        let (n, m) = self.coupling.shape();
        cost.check_shape(n, m)?;
        if let Some(&(i, j)) = cells.iter().find(|&&(i, j)| i >= n || j >= m) {
            return Err(Error::InvalidParameter(format!("cell ({i}, {j}) out of range")));
        }
        let lse = log_sum_exp(cells.iter().map(|&(i, j)| self.log_entry(cost, i, j)));
        if lse == f64::NEG_INFINITY {
            return Err(Error::EmptyCellMass);
        }
        Ok(lse)
    }

    pub fn lp_norm(&self, cost: &CostMatrix) -> Result<f64> {
        measures::lp_norm(&self.coupling, cost, self.p)
    }
}

/// Per-iteration view handed to [`solve_traced`] observers.
#[derive(Debug)]
pub struct IterationSnapshot<'a> {
    pub iteration: usize,
    pub log_u: &'a [f64],
    pub log_v: &'a [f64],
    pub row_err: f64,
    pub col_err: f64,
}

/// Solves with the engine selected by `config.mode`.
pub fn solve(
    mu: &Arc<DiscreteMeasure>,
    nu: &Arc<DiscreteMeasure>,
    cost: &CostMatrix,
    config: &SolverConfig,
) -> Result<SolveReport> {
    solve_traced(mu, nu, cost, config, |_| {})
}

/// Log-domain engine regardless of `config.mode`.
pub fn solve_log_domain(
    mu: &Arc<DiscreteMeasure>,
    nu: &Arc<DiscreteMeasure>,
    cost: &CostMatrix,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let config = config.with_mode(Mode::LogDomain);
    solve_traced(mu, nu, cost, &config, |_| {})
}

/// As [`solve`], calling `observer` after every row+column pair.
pub fn solve_traced<F>(
    mu: &Arc<DiscreteMeasure>,
    nu: &Arc<DiscreteMeasure>,
    cost: &CostMatrix,
    config: &SolverConfig,
    mut observer: F,
) -> Result<SolveReport>
where
    F: FnMut(&IterationSnapshot<'_>),
{
    config.validate()?;
    cost.check_shape(mu.len(), nu.len())?;
    let scaled = scaled_cost(cost, config.p, config.eps)?;

    if mu.len() == 1 || nu.len() == 1 {
        return Ok(single_plan(mu, nu, cost, config, &scaled));
    }

    let outcome = match config.mode {
        Mode::Standard => {
            let kernel = gibbs_kernel(&scaled)?;
            run_standard(mu, nu, &kernel, config, &mut observer)?
        }
        Mode::LogDomain => run_log_domain(mu, nu, &scaled, config, &mut observer),
        Mode::Auto => {
            let max_exponent = scaled.iter().copied().fold(0.0, f64::max);
            let standard = if max_exponent > EXP_UNDERFLOW_BOUND {
                None
            } else {
                gibbs_kernel(&scaled)
                    .and_then(|k| run_standard(mu, nu, &k, config, &mut observer))
                    .ok()
            };
            match standard {
                Some(outcome) => outcome,
                None => {
                    log::debug!("falling back to the log-domain engine");
                    run_log_domain(mu, nu, &scaled, config, &mut observer)
                }
            }
        }
    };
    finish(mu, nu, cost, config, outcome)
}

/// `c^p / eps`, rejecting overflow.
fn scaled_cost(cost: &CostMatrix, p: f64, eps: f64) -> Result<Array2<f64>> {
    let scaled = cost.entries().mapv(|c| c.powf(p) / eps);
    if scaled.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "c^p / eps overflows for p = {p}, eps = {eps}"
        )));
    }
    Ok(scaled)
}

fn gibbs_kernel(scaled: &Array2<f64>) -> Result<Array2<f64>> {
    let kernel = scaled.mapv(|x| (-x).exp());
    if let Some(i) = kernel.rows().into_iter().position(|r| r.iter().all(|&k| k == 0.0)) {
        return Err(Error::KernelUnderflow { axis: "row", index: i });
    }
    if let Some(j) = kernel
        .columns()
        .into_iter()
        .position(|c| c.iter().all(|&k| k == 0.0))
    {
        return Err(Error::KernelUnderflow {
            axis: "column",
            index: j,
        });
    }
    Ok(kernel)
}

struct Outcome {
    log_u: Vec<f64>,
    log_v: Vec<f64>,
    iterations: usize,
    mode: Mode,
}

fn run_standard<F>(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    kernel: &Array2<f64>,
    config: &SolverConfig,
    observer: &mut F,
) -> Result<Outcome>
where
    F: FnMut(&IterationSnapshot<'_>),
{
    let (a, b) = (mu.weights(), nu.weights());
    let (n, m) = kernel.dim();
    let mut u = vec![1.0; n];
    let mut v = vec![1.0; m];
    let mut kv = kernel.dot(&ndarray::ArrayView1::from(&v)).to_vec();
    let mut ktu = vec![0.0; m];
    let mut iterations = 0;

    for it in 1..=config.max_iter {
        iterations = it;
        for i in 0..n {
            u[i] = a[i] / kv[i];
        }
        ktu.iter_mut().for_each(|x| *x = 0.0);
        for (row, &ui) in kernel.rows().into_iter().zip(&u) {
            for (acc, &k) in ktu.iter_mut().zip(row) {
                *acc += k * ui;
            }
        }
        for j in 0..m {
            v[j] = b[j] / ktu[j];
        }
        for (slot, row) in kv.iter_mut().zip(kernel.rows()) {
            *slot = row.iter().zip(&v).map(|(k, vj)| k * vj).sum();
        }
        if let Some(i) = u.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::KernelUnderflow { axis: "row", index: i });
        }
        if let Some(j) = v.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::KernelUnderflow {
                axis: "column",
                index: j,
            });
        }

        let row_err: f64 = (0..n).map(|i| (u[i] * kv[i] - a[i]).abs()).sum();
        let col_err: f64 = (0..m).map(|j| (v[j] * ktu[j] - b[j]).abs()).sum();
        let log_u: Vec<f64> = u.iter().map(|x| x.ln()).collect();
        let log_v: Vec<f64> = v.iter().map(|x| x.ln()).collect();
        observer(&IterationSnapshot {
            iteration: it,
            log_u: &log_u,
            log_v: &log_v,
            row_err,
            col_err,
        });
        if row_err <= config.tol && col_err <= config.tol {
            break;
        }
    }

    Ok(Outcome {
        log_u: u.iter().map(|x| x.ln()).collect(),
        log_v: v.iter().map(|x| x.ln()).collect(),
        iterations,
        mode: Mode::Standard,
    })
}

fn run_log_domain<F>(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    scaled: &Array2<f64>,
    config: &SolverConfig,
    observer: &mut F,
) -> Outcome
where
    F: FnMut(&IterationSnapshot<'_>),
{
    let (a, b) = (mu.weights(), nu.weights());
    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let (n, m) = scaled.dim();
    let mut log_u = vec![0.0; n];
    let mut log_v = vec![0.0; m];
    let mut lse_rows = row_lse(scaled, &log_v);
    let mut iterations = 0;

    for it in 1..=config.max_iter {
        iterations = it;
        for i in 0..n {
            log_u[i] = log_a[i] - lse_rows[i];
        }
        let lse_cols = col_lse(scaled, &log_u);
        for j in 0..m {
            log_v[j] = log_b[j] - lse_cols[j];
        }
        lse_rows = row_lse(scaled, &log_v);

        let row_err: f64 = (0..n)
            .map(|i| ((log_u[i] + lse_rows[i]).exp() - a[i]).abs())
            .sum();
        let col_err: f64 = (0..m)
            .map(|j| ((log_v[j] + lse_cols[j]).exp() - b[j]).abs())
            .sum();
        observer(&IterationSnapshot {
            iteration: it,
            log_u: &log_u,
            log_v: &log_v,
            row_err,
            col_err,
        });
        if row_err <= config.tol && col_err <= config.tol {
            break;
        }
    }

    Outcome {
        log_u,
        log_v,
        iterations,
        mode: Mode::LogDomain,
    }
}

/// Running-max accumulator for `log sum exp`.
#[derive(Clone, Copy)]
struct Lse {
    max: f64,
    sum: f64,
}

impl Lse {
    const EMPTY: Lse = Lse {
        max: f64::NEG_INFINITY,
        sum: 0.0,
    };

    #[inline]
    fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    #[inline]
    fn value(self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Single-pass `log sum exp` with a running max.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Lse::EMPTY;
    for x in xs {
        acc.push(x);
    }
    acc.value()
}

/// `LSE_j(log_v_j - scaled_ij)` for every row.
fn row_lse(scaled: &Array2<f64>, log_v: &[f64]) -> Vec<f64> {
    scaled
        .rows()
        .into_iter()
        .map(|row| log_sum_exp(row.iter().zip(log_v).map(|(s, lv)| lv - s)))
        .collect()
}

/// `LSE_i(log_u_i - scaled_ij)` for every column, streaming over rows.
fn col_lse(scaled: &Array2<f64>, log_u: &[f64]) -> Vec<f64> {
    let mut acc = vec![Lse::EMPTY; scaled.ncols()];
    for (row, lu) in scaled.rows().into_iter().zip(log_u) {
        for (a, s) in acc.iter_mut().zip(row) {
            a.push(lu - s);
        }
    }
    acc.into_iter().map(Lse::value).collect()
}

fn materialize(scaled: &Array2<f64>, log_u: &[f64], log_v: &[f64]) -> Array2<f64> {
    Array2::from_shape_fn(scaled.dim(), |(i, j)| {
        (log_u[i] + log_v[j] - scaled[[i, j]]).exp()
    })
}

fn finish(
    mu: &Arc<DiscreteMeasure>,
    nu: &Arc<DiscreteMeasure>,
    cost: &CostMatrix,
    config: &SolverConfig,
    outcome: Outcome,
) -> Result<SolveReport> {
    let scaled = scaled_cost(cost, config.p, config.eps)?;
    let plan = materialize(&scaled, &outcome.log_u, &outcome.log_v);
    let coupling = Coupling::new(plan, mu.clone(), nu.clone())?;
    let errors = marginal_errors(&coupling);
    Ok(SolveReport {
        value: measures::eval_jpe(&coupling, cost, config.p, config.eps)?,
        entropy: measures::entropy(&coupling),
        iterations: outcome.iterations,
        marginal_errors: errors,
        converged: errors.row_l1 <= config.tol && errors.col_l1 <= config.tol,
        mode: outcome.mode,
        p: config.p,
        eps: config.eps,
        log_u: outcome.log_u,
        log_v: outcome.log_v,
        coupling,
    })
}

/// With a single atom on either side `Pi(mu, nu) = {mu x nu}`.
fn single_plan(
    mu: &Arc<DiscreteMeasure>,
    nu: &Arc<DiscreteMeasure>,
    cost: &CostMatrix,
    config: &SolverConfig,
    scaled: &Array2<f64>,
) -> SolveReport {
    let (log_u, log_v) = if mu.len() == 1 {
        let log_v = nu
            .weights()
            .iter()
            .enumerate()
            .map(|(j, w)| w.ln() + scaled[[0, j]])
            .collect();
        (vec![0.0], log_v)
    } else {
        let log_u = mu
            .weights()
            .iter()
            .enumerate()
            .map(|(i, w)| w.ln() + scaled[[i, 0]])
            .collect();
        (log_u, vec![0.0])
    };
    let coupling = Coupling::product(mu.clone(), nu.clone());
    let errors = marginal_errors(&coupling);
    SolveReport {
        value: measures::eval_jpe(&coupling, cost, config.p, config.eps)
            .expect("validated parameters"),
        entropy: measures::entropy(&coupling),
        iterations: 0,
        marginal_errors: errors,
        converged: true,
        mode: match config.mode {
            Mode::Auto => Mode::Standard,
            m => m,
        },
        p: config.p,
        eps: config.eps,
        log_u,
        log_v,
        coupling,
    }
}

/// Entropic dual objective at scalings `(log_u, log_v)`:
/// `<f, mu> + <g, nu> - eps <gamma, 1> + eps` with `f = eps (log_u - log mu)`
/// and `g = eps (log_v - log nu)`. Bounded above by the primal optimum and
/// nondecreasing along Sinkhorn iterations.
pub fn entropic_dual(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    p: f64,
    eps: f64,
    log_u: &[f64],
    log_v: &[f64],
) -> Result<f64> {
    let scaled = scaled_cost(cost, p, eps)?;
    let linear: f64 = mu
        .weights()
        .iter()
        .zip(log_u)
        .map(|(w, lu)| w * eps * (lu - w.ln()))
        .sum::<f64>()
        + nu
            .weights()
            .iter()
            .zip(log_v)
            .map(|(w, lv)| w * eps * (lv - w.ln()))
            .sum::<f64>();
    let mass: f64 = materialize(&scaled, log_u, log_v).sum();
    Ok(linear - eps * mass + eps)
}

/// `sum gamma c^p + eps H`, the objective raised to the power `p`.
pub fn powered_objective(gamma: &Coupling, cost: &CostMatrix, p: f64, eps: f64) -> f64 {
    gamma
        .entries()
        .iter()
        .zip(cost.entries().iter())
        .map(|(g, c)| g * c.powf(p))
        .sum::<f64>()
        + eps * measures::entropy(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{build_cost, Metric, Rescale};
    use ndarray::array;

    fn arc(m: DiscreteMeasure) -> Arc<DiscreteMeasure> {
        Arc::new(m)
    }

    fn two_by_two() -> (Arc<DiscreteMeasure>, Arc<DiscreteMeasure>, CostMatrix) {
        let mu = arc(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.4, 0.6]).unwrap());
        let nu = arc(DiscreteMeasure::new(vec![vec![0.5], vec![2.0]], vec![0.3, 0.7]).unwrap());
        let cost = build_cost(&mu, &nu, Metric::Euclidean, Rescale::default()).unwrap();
        (mu, nu, cost)
    }

    /// Golden-section minimization of the strictly convex objective over the
    /// one-parameter family `gamma_00 = t`.
    fn golden_section_plan(
        mu: &[f64],
        nu: &[f64],
        cost: &CostMatrix,
        p: f64,
        eps: f64,
    ) -> [f64; 4] {
        let plan = |t: f64| [t, mu[0] - t, nu[0] - t, mu[1] - nu[0] + t];
        let objective = |t: f64| {
            plan(t)
                .iter()
                .zip([(0, 0), (0, 1), (1, 0), (1, 1)])
                .map(|(&g, (i, j))| {
                    let base = mu[i] * nu[j];
                    g * cost.get(i, j).powf(p) + eps * if g > 0.0 { g * (g / base).ln() } else { 0.0 }
                })
                .sum::<f64>()
        };
        let mut lo = f64::max(0.0, nu[0] - mu[1]);
        let mut hi = f64::min(mu[0], nu[0]);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = hi - phi * (hi - lo);
            let x2 = lo + phi * (hi - lo);
            if objective(x1) < objective(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        plan(0.5 * (lo + hi))
    }

    #[test]
    fn single_atom_is_trivial() {
        let mu = arc(DiscreteMeasure::uniform(vec![vec![0.0, 0.0]]).unwrap());
        let nu = arc(DiscreteMeasure::uniform(vec![vec![3.0, 4.0]]).unwrap());
        let cost = build_cost(&mu, &nu, Metric::Euclidean, Rescale::default()).unwrap();
        let r = solve(&mu, &nu, &cost, &SolverConfig::new(5.0, 1.0)).unwrap();
        assert_eq!(r.coupling.entries(), &array![[1.0]]);
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
        assert!((r.value - 5.0).abs() < 1e-12);
        assert!(r.log_entry(&cost, 0, 0).abs() < 1e-9);
    }

    #[test]
    fn single_row_plan_matches_potentials() {
        let mu = arc(DiscreteMeasure::uniform(vec![vec![0.0]]).unwrap());
        let nu = arc(DiscreteMeasure::new(vec![vec![1.0], vec![2.0]], vec![0.25, 0.75]).unwrap());
        let cost = build_cost(&mu, &nu, Metric::Euclidean, Rescale::default()).unwrap();
        let r = solve(&mu, &nu, &cost, &SolverConfig::new(2.0, 0.5)).unwrap();
        for j in 0..2 {
            assert!((r.log_entry(&cost, 0, j).exp() - r.coupling.get(0, j)).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_golden_section_oracle() {
        let (mu, nu, cost) = two_by_two();
        for (p, eps) in [(1.0, 1.0), (2.0, 0.3), (4.0, 2.0)] {
            let cfg = SolverConfig::new(p, eps).with_tol(1e-13);
            let r = solve(&mu, &nu, &cost, &cfg).unwrap();
            assert!(r.converged);
            let oracle = golden_section_plan(mu.weights(), nu.weights(), &cost, p, eps);
            for (k, (i, j)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
                assert!(
                    (r.coupling.get(i, j) - oracle[k]).abs() < 1e-8,
                    "p={p} eps={eps} cell=({i},{j}): {} vs {}",
                    r.coupling.get(i, j),
                    oracle[k]
                );
            }
        }
    }

    #[test]
    fn modes_agree() {
        let (mu, nu, cost) = two_by_two();
        let cfg = SolverConfig::new(3.0, 0.2).with_tol(1e-12);
        let s = solve(&mu, &nu, &cost, &cfg.with_mode(Mode::Standard)).unwrap();
        let l = solve_log_domain(&mu, &nu, &cost, &cfg).unwrap();
        assert_eq!(s.mode, Mode::Standard);
        assert_eq!(l.mode, Mode::LogDomain);
        assert_eq!(s.iterations, l.iterations);
        for (a, b) in s.coupling.entries().iter().zip(l.coupling.entries()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn standard_mode_reports_underflow_and_auto_falls_back() {
        let mu = arc(DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0]]).unwrap());
        let nu = arc(DiscreteMeasure::uniform(vec![vec![40.0], vec![41.0]]).unwrap());
        let cost = build_cost(&mu, &nu, Metric::Euclidean, Rescale::default()).unwrap();
        let cfg = SolverConfig::new(2.0, 1.0);
        assert!(matches!(
            solve(&mu, &nu, &cost, &cfg.with_mode(Mode::Standard)),
            Err(Error::KernelUnderflow { .. })
        ));
        let r = solve(&mu, &nu, &cost, &cfg).unwrap();
        assert_eq!(r.mode, Mode::LogDomain);
        assert!(r.converged);
    }

    #[test]
    fn non_convergence_is_reported_not_raised() {
        let (mu, nu, cost) = two_by_two();
        let cfg = SolverConfig::new(8.0, 0.01).with_tol(1e-15).with_max_iter(3);
        let r = solve(&mu, &nu, &cost, &cfg).unwrap();
        assert_eq!(r.iterations, 3);
        assert!(!r.converged);
    }

    #[test]
    fn invalid_configs_rejected() {
        let (mu, nu, cost) = two_by_two();
        for cfg in [
            SolverConfig::new(0.5, 1.0),
            SolverConfig::new(2.0, 0.0),
            SolverConfig::new(2.0, 1.0).with_tol(0.0),
            SolverConfig::new(2.0, 1.0).with_max_iter(0),
        ] {
            assert!(solve(&mu, &nu, &cost, &cfg).is_err());
        }
        assert!(solve(&mu, &nu, &cost, &SolverConfig::new(2000.0, 1e-300)).is_err());
    }

    #[test]
    fn log_sum_exp_is_stable() {
        assert_eq!(log_sum_exp([f64::NEG_INFINITY]), f64::NEG_INFINITY);
        let v = log_sum_exp([1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let w = log_sum_exp([-1e6, -1e6 + 1.0, -1e6 - 3.0]);
        let expected = -1e6 + (1.0 + 1f64.exp() + (-3f64).exp()).ln();
        assert!((w - expected).abs() < 1e-9);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("auto".parse::<Mode>().unwrap(), Mode::Auto);
        assert_eq!("log".parse::<Mode>().unwrap(), Mode::LogDomain);
        assert!("fast".parse::<Mode>().is_err());
    }
}
