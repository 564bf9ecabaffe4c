//! Regularization schedules `p -> eps_p` and their asymptotic diagnostics.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{solve, Mode, SolverConfig};
use crate::error::{Error, Result};
use crate::measures::{CostMatrix, Coupling, DiscreteMeasure};

/// Margin, in log space, by which consecutive diagnostics must drop.
const DECREASE_MARGIN: f64 = 1e-12;

/// How `eps` depends on `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum EpsSchedule {
    Constant { eps: f64 },
    /// `eps0 * p^(-alpha)`
    PowerDecay { eps0: f64, alpha: f64 },
    /// `eps0 * ratio^p`
    Geometric { eps0: f64, ratio: f64 },
    /// Knots `(p, eps)`, interpolated linearly in `log eps` and held constant
    /// outside the knot range.
    Custom { knots: Vec<(f64, f64)> },
}

impl EpsSchedule {
    pub fn constant(eps: f64) -> Self {
        EpsSchedule::Constant { eps }
    }

    /// `log eps_p`; stays finite where `eps_p` itself would overflow.
    pub fn ln_eps(&self, p: f64) -> Result<f64> {
        let value = match self {
            EpsSchedule::Constant { eps } => positive(*eps)?.ln(),
            EpsSchedule::PowerDecay { eps0, alpha } => positive(*eps0)?.ln() - alpha * p.ln(),
            EpsSchedule::Geometric { eps0, ratio } => {
                positive(*eps0)?.ln() + p * positive(*ratio)?.ln()
            }
            EpsSchedule::Custom { knots } => interpolate_log(knots, p)?,
        };
        if value.is_nan() {
            return Err(Error::InvalidParameter(format!("eps undefined at p = {p}")));
        }
        Ok(value)
    }

    pub fn eps(&self, p: f64) -> Result<f64> {
        let eps = self.ln_eps(p)?.exp();
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps_p = {eps} is not a positive double at p = {p}"
            )));
        }
        Ok(eps)
    }
}

fn positive(x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!("schedule constant {x} must be > 0")))
    }
}

fn interpolate_log(knots: &[(f64, f64)], p: f64) -> Result<f64> {
    if knots.is_empty() {
        return Err(Error::InvalidParameter("custom schedule has no knots".into()));
    }
    for pair in knots.windows(2) {
        if !(pair[1].0 > pair[0].0) {
            return Err(Error::InvalidParameter(
                "custom schedule knots must have increasing p".into(),
            ));
        }
    }
    for &(_, eps) in knots {
        positive(eps)?;
    }
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    if p <= first.0 {
        return Ok(first.1.ln());
    }
    if p >= last.0 {
        return Ok(last.1.ln());
    }
    let k = knots.partition_point(|&(q, _)| q <= p);
    let ((p0, e0), (p1, e1)) = (knots[k - 1], knots[k]);
    let t = (p - p0) / (p1 - p0);
    Ok((1.0 - t) * e0.ln() + t * e1.ln())
}

/// Diagnostics at one `p`, stored as natural logs so that values far below
/// the double range still compare.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScheduleRow {
    pub p: f64,
    pub ln_eps: f64,
    /// `log eps_p^{1/p}`
    pub ln_root: f64,
    /// `log[(1/p) log(1 + eps_p log p / (1+lambda)^p)]`
    pub ln_condition: f64,
    /// `log[eps_p / (p (1+lambda)^p)]`
    pub ln_ratio: f64,
}

impl ScheduleRow {
    pub fn root(&self) -> f64 {
        self.ln_root.exp()
    }

    pub fn condition(&self) -> f64 {
        self.ln_condition.exp()
    }

    pub fn ratio(&self) -> f64 {
        self.ln_ratio.exp()
    }
}

/// Finite-sample proxy for the limit conditions on `eps_p`: each diagnostic
/// is flagged unless it strictly decreases over the second half of the range.
#[derive(Clone, Debug, Serialize)]
pub struct ScheduleReport {
    pub lambda: f64,
    pub rows: Vec<ScheduleRow>,
    pub root_decreasing: bool,
    pub condition_decreasing: bool,
    pub ratio_decreasing: bool,
}

impl ScheduleReport {
    pub fn all_decreasing(&self) -> bool {
        self.root_decreasing && self.condition_decreasing && self.ratio_decreasing
    }

    pub fn flagged(&self) -> Vec<&'static str> {
        [
            ("root", self.root_decreasing),
            ("condition", self.condition_decreasing),
            ("ratio", self.ratio_decreasing),
        ]
        .into_iter()
        .filter(|&(_, ok)| !ok)
        .map(|(name, _)| name)
        .collect()
    }
}

/// `log(log(1 + e^x))` without overflow or underflow.
fn ln_softplus(x: f64) -> f64 {
    if x < -30.0 {
        x
    } else if x > 30.0 {
        (x + (-x).exp()).ln()
    } else {
        x.exp().ln_1p().ln()
    }
}

pub fn validate_schedule(
    schedule: &EpsSchedule,
    lambda: f64,
    p_values: &[f64],
) -> Result<ScheduleReport> {
    if p_values.is_empty() {
        return Err(Error::InvalidParameter("empty p range".into()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be >= 0")));
    }
    if p_values.windows(2).any(|w| !(w[1] > w[0])) || p_values[0] < 1.0 {
        return Err(Error::InvalidParameter(
            "p range must be increasing and >= 1".into(),
        ));
    }
    let ln_base = lambda.ln_1p();
    let rows = p_values
        .iter()
        .map(|&p| {
            let ln_eps = schedule.ln_eps(p)?;
            let ln_log_p = p.ln().ln();
            Ok(ScheduleRow {
                p,
                ln_eps,
                ln_root: ln_eps / p,
                ln_condition: ln_softplus(ln_eps + ln_log_p - p * ln_base) - p.ln(),
                ln_ratio: ln_eps - p.ln() - p * ln_base,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let tail = &rows[rows.len() / 2..];
    let decreasing = |f: fn(&ScheduleRow) -> f64| {
        tail.windows(2)
            .all(|w| f(&w[1]) < f(&w[0]) - DECREASE_MARGIN)
    };
    Ok(ScheduleReport {
        lambda,
        root_decreasing: decreasing(|r| r.ln_root),
        condition_decreasing: decreasing(|r| r.ln_condition),
        ratio_decreasing: decreasing(|r| r.ln_ratio),
        rows,
    })
}

/// One `p` of [`degenerate_schedule_demo`].
#[derive(Clone, Debug)]
pub struct DegeneratePoint {
    pub p: f64,
    pub eps: f64,
    pub entropy: f64,
    /// `p 2^{-p}`
    pub bound: f64,
    /// `max |gamma - mu x nu|`
    pub product_deviation: f64,
    pub iterations: usize,
    pub converged: bool,
    pub coupling: Coupling,
}

/// Solves with `eps = 1/p` for a cost bounded by `1/2`, where the minimizer
/// has entropy at most `p 2^{-p}` and collapses onto `mu x nu`.
pub fn degenerate_schedule_demo(
    mu: &Arc<DiscreteMeasure>,
    nu: &Arc<DiscreteMeasure>,
    cost: &CostMatrix,
    p_values: &[f64],
) -> Result<Vec<DegeneratePoint>> {
    if cost.max() > 0.5 {
        return Err(Error::CostBound(format!(
            "max cost {} exceeds 1/2",
            cost.max()
        )));
    }
    let product = Coupling::product(mu.clone(), nu.clone());
    p_values
        .iter()
        .map(|&p| {
            let eps = 1.0 / p;
            let config = SolverConfig::new(p, eps).with_tol(1e-12).with_mode(Mode::Auto);
            let report = solve(mu, nu, cost, &config)?;
            let product_deviation = report
                .coupling
                .entries()
                .iter()
                .zip(product.entries())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok(DegeneratePoint {
                p,
                eps,
                entropy: report.entropy,
                bound: p * 2f64.powf(-p),
                product_deviation,
                iterations: report.iterations,
                converged: report.converged,
                coupling: report.coupling,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{build_cost, Metric, Rescale};

    fn range(lo: usize, hi: usize) -> Vec<f64> {
        (lo..=hi).map(|p| p as f64).collect()
    }

    #[test]
    fn constant_eps() {
        let r = validate_schedule(&EpsSchedule::constant(1.0), 0.1, &range(10, 200)).unwrap();
        assert!(r.condition_decreasing);
        assert!(r.ratio_decreasing);
        // eps^{1/p} = 1 for every p does not go to zero
        assert!(!r.root_decreasing);
        assert_eq!(r.flagged(), vec!["root"]);
    }

    #[test]
    fn fast_growth_is_flagged_by_root_only() {
        let lambda = 0.1;
        let s = EpsSchedule::Geometric {
            eps0: 1.0,
            ratio: 1.0 + lambda,
        };
        let r = validate_schedule(&s, lambda, &range(10, 200)).unwrap();
        assert!(r.condition_decreasing);
        assert!(r.ratio_decreasing);
        assert!(!r.root_decreasing);
        let last = r.rows.last().unwrap();
        assert!((last.root() - 1.1).abs() < 1e-12);
        assert!((last.ratio() - 1.0 / 200.0).abs() < 1e-14);
    }

    #[test]
    fn doubling_with_zero_lambda() {
        let s = EpsSchedule::Geometric {
            eps0: 1.0,
            ratio: 2.0,
        };
        let r = validate_schedule(&s, 0.0, &range(10, 200)).unwrap();
        assert!(!r.root_decreasing);
        assert!(r.rows.iter().all(|row| (row.root() - 2.0).abs() < 1e-12));
    }

    #[test]
    fn power_decay_root_tends_to_one() {
        // (1/p)^{1/p} -> 1 from below, so it increases over the tail
        let s = EpsSchedule::PowerDecay {
            eps0: 1.0,
            alpha: 1.0,
        };
        let r = validate_schedule(&s, 0.1, &range(10, 200)).unwrap();
        assert_eq!(r.flagged(), vec!["root"]);
    }

    #[test]
    fn custom_interpolates_in_log() {
        let s = EpsSchedule::Custom {
            knots: vec![(10.0, 1.0), (20.0, 100.0)],
        };
        assert!((s.eps(15.0).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(s.eps(5.0).unwrap(), 1.0);
        assert!((s.eps(50.0).unwrap() - 100.0).abs() < 1e-12);
        let bad = EpsSchedule::Custom {
            knots: vec![(10.0, 1.0), (5.0, 2.0)],
        };
        assert!(bad.eps(7.0).is_err());
    }

    #[test]
    fn invalid_inputs() {
        assert!(validate_schedule(&EpsSchedule::constant(1.0), 0.1, &[]).is_err());
        assert!(validate_schedule(&EpsSchedule::constant(-1.0), 0.1, &[2.0]).is_err());
        assert!(validate_schedule(&EpsSchedule::constant(1.0), -0.1, &[2.0]).is_err());
        assert!(validate_schedule(&EpsSchedule::constant(1.0), 0.1, &[3.0, 2.0]).is_err());
    }

    #[test]
    fn softplus_log_is_stable() {
        for x in [-800.0, -31.0, -1.0, 0.0, 5.0, 31.0, 800.0] {
            let direct = f64::exp(x).ln_1p().ln();
            let v = ln_softplus(x);
            if direct.is_finite() && x.abs() < 700.0 {
                assert!((v - direct).abs() < 1e-9 * direct.abs().max(1.0), "x={x}");
            }
            assert!(v.is_finite());
        }
    }

    #[test]
    fn degenerate_demo_respects_bound() {
        let mu = Arc::new(
            DiscreteMeasure::new(vec![vec![0.0], vec![0.1], vec![0.25]], vec![0.2, 0.3, 0.5])
                .unwrap(),
        );
        let nu = Arc::new(DiscreteMeasure::uniform(vec![vec![0.2], vec![0.3]]).unwrap());
        let cost = build_cost(&mu, &nu, Metric::Euclidean, Rescale::default()).unwrap();
        let points = degenerate_schedule_demo(&mu, &nu, &cost, &[5.0, 10.0, 20.0]).unwrap();
        for pt in &points {
            assert!(pt.converged);
            assert!(pt.entropy <= pt.bound + 1e-12, "p={} H={}", pt.p, pt.entropy);
        }
        assert!(points[2].product_deviation < 1e-3);

        let far = Arc::new(DiscreteMeasure::uniform(vec![vec![2.0], vec![3.0]]).unwrap());
        let big = build_cost(&mu, &far, Metric::Euclidean, Rescale::default()).unwrap();
        assert!(matches!(
            degenerate_schedule_demo(&mu, &far, &big, &[5.0]),
            Err(Error::CostBound(_))
        ));
    }
}
