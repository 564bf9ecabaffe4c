//! Convergence sweeps of `v_p` towards `v_inf`.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::bottleneck::solve_bottleneck;
use crate::error::{Error, Result};
use crate::measures::{CostMatrix, Instance, Rescale};
use crate::sinkhorn::{solve, EpsSchedule, Mode, SolverConfig, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub p: f64,
    pub eps: f64,
    /// `J_{p,eps_p}` at the computed minimizer.
    pub v_p: f64,
    /// `v_p - v_inf`
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaSource {
    /// `beta = log v_inf`
    FixedLogVInf,
}

/// Envelope `-A/p <= gap <= B e^{-beta p}` fitted by least squares. A bound
/// with no records of the matching sign is `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundFit {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub beta: f64,
    pub beta_source: BetaSource,
}

impl BoundFit {
    /// Fits `B` to `log gap = log B - beta p` over positive gaps and `A` to
    /// `gap = -A / p` over negative gaps, using converged records only.
    pub fn fit(records: &[SweepRecord], v_inf: f64) -> Self {
        let beta = v_inf.ln();
        let ok = || records.iter().filter(|r| r.converged && r.gap.is_finite());
        let positive: Vec<&SweepRecord> = ok().filter(|r| r.gap > 0.0).collect();
        let negative: Vec<&SweepRecord> = ok().filter(|r| r.gap < 0.0).collect();
        let b = (!positive.is_empty()).then(|| {
            let mean = positive.iter().map(|r| r.gap.ln() + beta * r.p).sum::<f64>()
                / positive.len() as f64;
            mean.exp()
        });
        let a = (!negative.is_empty()).then(|| {
            let num: f64 = negative.iter().map(|r| r.gap / r.p).sum();
            let den: f64 = negative.iter().map(|r| 1.0 / (r.p * r.p)).sum();
            -num / den
        });
        Self {
            a,
            b,
            beta,
            beta_source: BetaSource::FixedLogVInf,
        }
    }

    pub fn upper(&self, p: f64) -> Option<f64> {
        self.b.map(|b| b * (-self.beta * p).exp())
    }

    pub fn lower(&self, p: f64) -> Option<f64> {
        self.a.map(|a| -a / p)
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub p_values: Vec<f64>,
    pub schedule: EpsSchedule,
    /// Rescale the cost by `t / v_inf(c)` so that the new `v_inf` is `t`.
    pub target_v_inf: Option<f64>,
    pub mode: Mode,
    pub tol: f64,
    pub max_iter: usize,
}

impl SweepConfig {
    pub fn new(p_values: Vec<f64>, schedule: EpsSchedule) -> Self {
        Self {
            p_values,
            schedule,
            target_v_inf: None,
            mode: Mode::Auto,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target_v_inf = Some(target);
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub records: Vec<SweepRecord>,
    pub fit: BoundFit,
    pub v_inf: f64,
    /// Multiplier applied to the instance cost.
    pub scale: f64,
    pub cost: CostMatrix,
}

impl Sweep {
    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }
}

/// `count` values from `lo` to `hi` with constant ratio.
pub fn geometric_p_values(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo >= 1.0 && hi > lo && count >= 2) {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= lo < hi and count >= 2, got {lo}, {hi}, {count}"
        )));
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    let mut values: Vec<f64> = (0..count).map(|k| lo * (ratio * k as f64).exp()).collect();
    values[count - 1] = hi;
    Ok(values)
}

pub fn sweep(instance: &Instance, config: &SweepConfig) -> Result<Sweep> {
    let p = &config.p_values;
    if p.is_empty() || p.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("p values must be nonempty and increasing".into()));
    }
    let base = instance.cost()?;
    let (mu, nu) = (&instance.mu, &instance.nu);
    let (cost, scale) = match config.target_v_inf {
        Some(target) => {
            if !(target > 0.0 && target.is_finite()) {
                return Err(Error::InvalidParameter(format!("target v_inf {target} must be > 0")));
            }
            let v = solve_bottleneck(mu, nu, &base)?.value;
            if v <= 0.0 {
                return Err(Error::InvalidCost("v_inf is 0; cannot rescale".into()));
            }
            let scale = target / v;
            (base.rescaled(Rescale::new(scale, 0.0)?)?, scale)
        }
        None => (base, 1.0),
    };
    let v_inf = solve_bottleneck(mu, nu, &cost)?.value;

    let records = p
        .par_iter()
        .map(|&p| {
            let eps = config.schedule.eps(p)?;
            let solver = SolverConfig::new(p, eps)
                .with_mode(config.mode)
                .with_tol(config.tol)
                .with_max_iter(config.max_iter);
            let report = solve(mu, nu, &cost, &solver)?;
            if !report.converged {
                log::warn!("p = {p}: no convergence after {} iterations", report.iterations);
            }
            Ok(SweepRecord {
                p,
                eps,
                v_p: report.value,
                gap: report.value - v_inf,
                iterations: report.iterations,
                converged: report.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Sweep {
        fit: BoundFit::fit(&records, v_inf),
        records,
        v_inf,
        scale,
        cost,
    })
}

/// `v_inf ((1 + eps M / (1+lambda)^p)^{1/p} - 1)`, the gap bound obtained by
/// evaluating `J_{p,eps}` at a `J_inf` minimizer, for `v_inf >= 1 + lambda`.
pub fn discrete_upper_bound(v_inf: f64, entropy_bound: f64, eps: f64, lambda: f64, p: f64) -> f64 {
    let inner = eps * entropy_bound * (-p * lambda.ln_1p()).exp();
    v_inf * (inner.ln_1p() / p).exp_m1()
}

/// Writes `p,eps,v_p,gap,iterations`.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyData("no sweep records"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "eps", "v_p", "gap", "iterations"])?;
    for r in records {
        w.write_record([
            r.p.to_string(),
            r.eps.to_string(),
            r.v_p.to_string(),
            r.gap.to_string(),
            r.iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// As [`write_sweep_csv`]; no file is created for an empty record list.
pub fn save_sweep_csv(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyData("no sweep records"));
    }
    write_sweep_csv(records, File::create(path)?)
}
