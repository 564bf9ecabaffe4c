//! Block approximation of a coupling at scale `delta`.
//!
//! Atoms are binned into half-open cubes `delta (k + [0,1)^d)`, `k = floor(x / delta)`.
//! Inside each pair of cubes `(Q_k, Q_l)` the mass `gamma(Q_k x Q_l)` is
//! spread as the product of the normalized restrictions of `mu` to `Q_k` and
//! `nu` to `Q_l`. The result keeps the marginals of `gamma`, has entropy at
//! most `d log(L / delta)` and lies within `sqrt(2d) delta` of `gamma` in
//! `W_inf`.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::Array2;
use serde::Serialize;

use crate::bottleneck::solve_bottleneck;
use crate::error::{Error, Result};
use crate::measures::{self, CostMatrix, Coupling, DiscreteMeasure, Metric, MIN_WEIGHT};

/// Slack on the entropy and distance comparisons.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct BlockApproximation {
    /// `gamma^delta`
    pub coupling: Coupling,
    pub delta: f64,
    /// `L = 1 + ` the side of the smallest cube containing `spt mu`.
    pub side_bound: f64,
    pub mu_cubes: Vec<Vec<i64>>,
    pub nu_cubes: Vec<Vec<i64>>,
    /// Occupied cube pairs `(mu-cube members, nu-cube members)`.
    blocks: Vec<(Vec<usize>, Vec<usize>)>,
}

impl BlockApproximation {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

fn cube_of(point: &[f64], delta: f64) -> Vec<i64> {
    point.iter().map(|x| (x / delta).floor() as i64).collect()
}

fn group(measure: &DiscreteMeasure, delta: f64) -> (Vec<Vec<i64>>, Vec<Vec<usize>>) {
    let cubes: Vec<Vec<i64>> = measure.points().iter().map(|x| cube_of(x, delta)).collect();
    let mut members: BTreeMap<&[i64], Vec<usize>> = BTreeMap::new();
    for (i, k) in cubes.iter().enumerate() {
        members.entry(k).or_default().push(i);
    }
    let groups = members.into_values().collect();
    (cubes, groups)
}

fn side_bound(mu: &DiscreteMeasure) -> f64 {
    let side = (0..mu.dim())
        .map(|k| {
            let coords = mu.points().iter().map(|x| x[k]);
            let hi = coords.clone().fold(f64::NEG_INFINITY, f64::max);
            let lo = coords.fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .fold(0.0, f64::max);
    1.0 + side
}

pub fn block_approximate(gamma: &Coupling, delta: f64) -> Result<BlockApproximation> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} must lie in (0, 1)"
        )));
    }
    let (mu, nu) = (gamma.mu(), gamma.nu());
    let (mu_cubes, mu_groups) = group(mu, delta);
    let (nu_cubes, nu_groups) = group(nu, delta);
    let g = gamma.entries();

    let mut out = Array2::zeros(gamma.shape());
    let mut blocks = Vec::new();
    for rows in &mu_groups {
        let mu_mass: f64 = rows.iter().map(|&i| mu.weights()[i]).sum();
        for cols in &nu_groups {
            let mass: f64 = rows
                .iter()
                .flat_map(|&i| cols.iter().map(move |&j| g[[i, j]]))
                .sum();
            if mass <= 0.0 {
                continue;
            }
            let nu_mass: f64 = cols.iter().map(|&j| nu.weights()[j]).sum();
            for &i in rows {
                for &j in cols {
                    out[[i, j]] = mass * (mu.weights()[i] / mu_mass) * (nu.weights()[j] / nu_mass);
                }
            }
            blocks.push((rows.clone(), cols.clone()));
        }
    }

    Ok(BlockApproximation {
        coupling: Coupling::new(out, mu.clone(), nu.clone())?,
        delta,
        side_bound: side_bound(mu),
        mu_cubes,
        nu_cubes,
        blocks,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EntropyCheck {
    pub entropy: f64,
    /// `d log(L / delta)`
    pub bound: f64,
    pub pass: bool,
}

pub fn verify_entropy_bound(ba: &BlockApproximation) -> EntropyCheck {
    let d = ba.coupling.mu().dim() as f64;
    let entropy = measures::entropy(&ba.coupling);
    let bound = d * (ba.side_bound / ba.delta).ln();
    EntropyCheck {
        entropy,
        bound,
        pass: entropy <= bound + BOUND_SLACK,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WinfCheck {
    /// Largest displacement of the coupling between `gamma` and `gamma^delta`
    /// that only pairs atoms inside the same cube pair.
    pub certificate: f64,
    /// `sqrt(2d) delta`
    pub target: f64,
    pub pass: bool,
}

fn lifted_distance(gamma: &Coupling, a: (usize, usize), b: (usize, usize)) -> f64 {
    let (mu, nu) = (gamma.mu(), gamma.nu());
    let dx = Metric::Euclidean.distance(mu.point(a.0), mu.point(b.0));
    let dy = Metric::Euclidean.distance(nu.point(a.1), nu.point(b.1));
    dx.hypot(dy)
}

/// Bounds `W_inf(gamma, gamma^delta)` in `R^{2d}` by the coupling that pairs
/// `gamma` and `gamma^delta` within each occupied cube pair.
pub fn verify_winf_bound(ba: &BlockApproximation, gamma: &Coupling) -> Result<WinfCheck> {
    if gamma.shape() != ba.coupling.shape() {
        return Err(Error::InvalidCoupling("plan does not match the approximation".into()));
    }
    let approx = ba.coupling.entries();
    let mut certificate: f64 = 0.0;
    for (rows, cols) in &ba.blocks {
        let cells = || rows.iter().flat_map(|&i| cols.iter().map(move |&j| (i, j)));
        for a in cells().filter(|&(i, j)| gamma.get(i, j) > 0.0) {
            for b in cells().filter(|&(i, j)| approx[[i, j]] > 0.0) {
                certificate = certificate.max(lifted_distance(gamma, a, b));
            }
        }
    }
    let d = gamma.mu().dim() as f64;
    let target = (2.0 * d).sqrt() * ba.delta;
    Ok(WinfCheck {
        certificate,
        target,
        pass: certificate <= target + BOUND_SLACK,
    })
}

fn lift(gamma: &Coupling) -> Result<(Vec<(usize, usize)>, DiscreteMeasure)> {
    let cells: Vec<(usize, usize)> = gamma
        .entries()
        .indexed_iter()
        .filter(|(_, &g)| g > MIN_WEIGHT)
        .map(|(ij, _)| ij)
        .collect();
    let total: f64 = cells.iter().map(|&(i, j)| gamma.get(i, j)).sum();
    let points = cells
        .iter()
        .map(|&(i, j)| [gamma.mu().point(i), gamma.nu().point(j)].concat())
        .collect();
    let weights = cells.iter().map(|&(i, j)| gamma.get(i, j) / total).collect();
    Ok((cells, DiscreteMeasure::new(points, weights)?))
}

/// Exact `W_inf(gamma, gamma^delta)` for the Euclidean metric on `R^{2d}`,
/// computed as a bottleneck problem between the two lifted measures. Cells
/// below the minimal atom weight are dropped and both sides renormalized.
pub fn lifted_winf(gamma: &Coupling, approx: &Coupling) -> Result<f64> {
    let (a_cells, a) = lift(gamma)?;
    let (b_cells, b) = lift(approx)?;
    let entries = Array2::from_shape_fn((a_cells.len(), b_cells.len()), |(s, t)| {
        lifted_distance(gamma, a_cells[s], b_cells[t])
    });
    let cost = CostMatrix::from_entries(entries)?;
    Ok(solve_bottleneck(&Arc::new(a), &Arc::new(b), &cost)?.value)
}
