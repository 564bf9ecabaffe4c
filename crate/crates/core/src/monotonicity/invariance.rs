//! Multiplicative cycle identities of entropic minimizers.

use serde::Serialize;

use super::ENUMERATION_BUDGET;
use crate::error::{Error, Result};
use crate::measures::{CostMatrix, Coupling};

fn check_cells(gamma: &Coupling, cells: &[(usize, usize)]) -> Result<()> {
    let (n, m) = gamma.shape();
    match cells.iter().find(|&&(i, j)| i >= n || j >= m) {
        Some(&(i, j)) => Err(Error::InvalidParameter(format!(
            "cell ({i}, {j}) outside the {n}x{m} plan"
        ))),
        None => Ok(()),
    }
}

fn log_density(gamma: &Coupling, i: usize, j: usize) -> Result<f64> {
    let g = gamma.get(i, j);
    if !(g > 0.0) {
        return Err(Error::ZeroDensity(i, j));
    }
    Ok(g.ln() - gamma.mu().weights()[i].ln() - gamma.nu().weights()[j].ln())
}

/// Largest relative gap, over the given cycles, in
/// `prod dgamma(x_r, y_r) = exp(-sum (c^p(x_r, y_r) - c^p(x_r, y_{r+1})) / eps) prod dgamma(x_r, y_{r+1})`
/// where `dgamma = gamma_ij / (mu_i nu_j)`. Each gap is measured against the
/// larger side, so it lies in `[0, 1)`.
pub fn invariance_residual(
    gamma: &Coupling,
    cost: &CostMatrix,
    p: f64,
    eps: f64,
    cycles: &[Vec<(usize, usize)>],
) -> Result<f64> {
    let (n, m) = gamma.shape();
    cost.check_shape(n, m)?;
    if !(eps > 0.0) || !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p}, eps = {eps}")));
    }
    let mut worst: f64 = 0.0;
    for cycle in cycles {
        check_cells(gamma, cycle)?;
        let k = cycle.len();
        let mut log_lhs = 0.0;
        let mut log_rhs = 0.0;
        let mut excess = 0.0;
        for r in 0..k {
            let (i, j) = cycle[r];
            let shifted = cycle[(r + 1) % k].1;
            log_lhs += log_density(gamma, i, j)?;
            log_rhs += log_density(gamma, i, shifted)?;
            excess += cost.get(i, j).powf(p) - cost.get(i, shifted).powf(p);
        }
        log_rhs -= excess / eps;
        // |a - b| / max(a, b) = 1 - exp(-|log a - log b|)
        worst = worst.max(-(-(log_lhs - log_rhs).abs()).exp_m1());
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaBound {
    /// `gamma^k(A) = prod_r gamma(A_r)`
    pub mass: f64,
    /// `e^{-delta / eps}`
    pub bound: f64,
    /// Smallest `sum c^p(own) - sum c^p(shifted)` over the tuples of the box.
    pub min_excess: Option<f64>,
    pub holds: bool,
}

/// Relative slack allowed on top of `e^{-delta/eps}`.
const MASS_SLACK: f64 = 1e-6;

/// Relative rounding allowed when testing `excess >= delta`.
const EXCESS_ROUNDING: f64 = 1e-14;

/// Mass of the box `A = A_1 x ... x A_k` of cell tuples under `gamma^k`,
/// against `e^{-delta/eps}`.
///
/// Every tuple `((i_1, j_1), ..., (i_k, j_k))` of the box must satisfy
/// `sum_r c^p(i_r, j_r) - sum_r c^p(i_r, j_{r+1}) >= delta`; this is checked
/// by enumerating the box.
pub fn lemma_probability_bound(
    gamma: &Coupling,
    cost: &CostMatrix,
    p: f64,
    eps: f64,
    delta: f64,
    boxes: &[Vec<(usize, usize)>],
) -> Result<LemmaBound> {
    let (n, m) = gamma.shape();
    cost.check_shape(n, m)?;
    if !(eps > 0.0) || !(p >= 1.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "p = {p}, eps = {eps}, delta = {delta}"
        )));
    }
    if boxes.len() < 2 {
        return Err(Error::InvalidParameter("a box needs k >= 2 factors".into()));
    }
    for factor in boxes {
        check_cells(gamma, factor)?;
    }
    let tuples: f64 = boxes.iter().map(|f| f.len() as f64).product();
    if tuples > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            needed: tuples,
            budget: ENUMERATION_BUDGET,
        });
    }

    let mut min_excess: Option<f64> = None;
    let mut index = vec![0usize; boxes.len()];
    if tuples > 0.0 {
        loop {
            let tuple: Vec<(usize, usize)> =
                index.iter().zip(boxes).map(|(&t, f)| f[t]).collect();
            let k = tuple.len();
            let (mut excess, mut scale) = (0.0, 0.0);
            for r in 0..k {
                let (i, j) = tuple[r];
                let (own, shifted) = (cost.get(i, j).powf(p), cost.get(i, tuple[(r + 1) % k].1).powf(p));
                excess += own - shifted;
                scale += own + shifted;
            }
            // summation order is the caller's business; allow its rounding
            if excess < delta - EXCESS_ROUNDING * scale {
                return Err(Error::NotInExcessSet {
                    tuple,
                    excess,
                    delta,
                });
            }
            min_excess = Some(min_excess.map_or(excess, |e| e.min(excess)));
            // odometer over the box
            let mut r = 0;
            while r < index.len() {
                index[r] += 1;
                if index[r] < boxes[r].len() {
                    break;
                }
                index[r] = 0;
                r += 1;
            }
            if r == index.len() {
                break;
            }
        }
    }

    let mass: f64 = boxes
        .iter()
        .map(|f| f.iter().map(|&(i, j)| gamma.get(i, j)).sum::<f64>())
        .product();
    let bound = (-delta / eps).exp();
    Ok(LemmaBound {
        mass,
        bound,
        min_excess,
        holds: mass <= bound * (1.0 + MASS_SLACK),
    })
}
