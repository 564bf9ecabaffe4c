//! Exact bottleneck value `v_inf = min_{gamma in Pi(mu, nu)} max_{spt gamma} c`.
//!
//! [`solve_bottleneck`] binary-searches the sorted distinct cost entries and
//! decides each threshold with a max-flow on the bipartite graph of admissible
//! cells. Weights are scaled to integers so every feasibility decision is
//! exact. [`permutation_brute_force`] is an independent branch-and-bound over
//! permutations for uniform square instances.

mod flow;

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::measures::{CostMatrix, Coupling, DiscreteMeasure, DEFAULT_SUPPORT_REL_TAU};
use flow::FlowNetwork;

/// Mass of one flow unit is `1 / WEIGHT_SCALE`.
pub const WEIGHT_SCALE: f64 = 1e12;

pub const PERMUTATION_LIMIT: usize = 10;

pub const DEFAULT_TOL_EQ: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct BottleneckResult {
    pub value: f64,
    /// An optimal plan; its support only uses cells with `c <= value`.
    pub witness: Coupling,
    /// A witness cell with `c == value`, the one carrying the most mass.
    pub critical_pair: (usize, usize),
}

impl BottleneckResult {
    /// Cells carrying positive witness mass, row-major.
    pub fn witness_support(&self) -> Vec<(usize, usize)> {
        self.witness
            .entries()
            .indexed_iter()
            .filter(|(_, &g)| g > 0.0)
            .map(|(ij, _)| ij)
            .collect()
    }
}

struct Scaled {
    supply: Vec<i64>,
    demand: Vec<i64>,
    target: i64,
}

fn scale_weights(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Scaled {
    let units = |w: &[f64]| -> Vec<i64> {
        w.iter().map(|x| (x * WEIGHT_SCALE).round() as i64).collect()
    };
    let supply = units(mu.weights());
    let demand = units(nu.weights());
    let total = supply.iter().sum::<i64>().min(demand.iter().sum());
    // per-atom rounding can lose up to one unit on each side
    let slack = (mu.len() + nu.len()) as i64;
    Scaled {
        supply,
        demand,
        target: total - slack,
    }
}

/// Max-flow restricted to cells with `c <= threshold`; returns the network,
/// the achieved flow and the edge ids of the cells.
fn admissible_flow(
    scaled: &Scaled,
    cost: &CostMatrix,
    threshold: f64,
) -> (FlowNetwork, i64, Vec<((usize, usize), usize)>) {
    let (n, m) = cost.shape();
    let (source, sink) = (0, n + m + 1);
    let mut g = FlowNetwork::new(n + m + 2);
    for (i, &s) in scaled.supply.iter().enumerate() {
        g.add_edge(source, 1 + i, s);
    }
    for (j, &d) in scaled.demand.iter().enumerate() {
        g.add_edge(1 + n + j, sink, d);
    }
    let mut cells = Vec::new();
    for ((i, j), &c) in cost.entries().indexed_iter() {
        if c <= threshold {
            let id = g.add_edge(1 + i, 1 + n + j, scaled.supply[i]);
            cells.push(((i, j), id));
        }
    }
    let value = g.max_flow(source, sink);
    (g, value, cells)
}

pub fn solve_bottleneck(
    mu: &Arc<DiscreteMeasure>,
    nu: &Arc<DiscreteMeasure>,
    cost: &CostMatrix,
) -> Result<BottleneckResult> {
    cost.check_shape(mu.len(), nu.len())?;
    let mut values: Vec<f64> = cost.entries().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();

    let scaled = scale_weights(mu, nu);
    let feasible = |t: f64| admissible_flow(&scaled, cost, t).1 >= scaled.target;

    // invariant: values[hi] feasible; values[lo - 1] infeasible (or lo == 0)
    let (mut lo, mut hi) = (0, values.len() - 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if feasible(values[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let value = values[hi];

    let (g, _, cells) = admissible_flow(&scaled, cost, value);
    let mut plan = Array2::zeros(cost.shape());
    for &((i, j), id) in &cells {
        plan[[i, j]] = g.flow(id) as f64 / WEIGHT_SCALE;
    }
    let critical_pair = cells
        .iter()
        .filter(|&&((i, j), _)| cost.get(i, j) == value)
        .map(|&(ij, id)| (ij, g.flow(id)))
        .fold(None, |best: Option<((usize, usize), i64)>, (ij, f)| match best {
            Some((_, bf)) if bf >= f => best,
            _ => Some((ij, f)),
        })
        .map(|(ij, _)| ij)
        .expect("the optimal threshold is a cost entry");

    Ok(BottleneckResult {
        value,
        witness: Coupling::new(plan, mu.clone(), nu.clone())?,
        critical_pair,
    })
}

/// `min_sigma max_i c_{i, sigma(i)}` for uniform square instances.
pub fn permutation_brute_force(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
) -> Result<f64> {
    let n = mu.len();
    if nu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: nu.len(),
        });
    }
    if n > PERMUTATION_LIMIT {
        return Err(Error::TooLarge(format!(
            "{n}! permutations (limit {PERMUTATION_LIMIT})"
        )));
    }
    if !mu.is_uniform(1e-12) || !nu.is_uniform(1e-12) {
        return Err(Error::InvalidMeasure(
            "permutation enumeration needs uniform marginals".into(),
        ));
    }
    cost.check_shape(n, n)?;
    Ok(permutation_min_max(cost.entries()))
}

/// Branch-and-bound over permutations: a partial assignment whose running max
/// already reaches the incumbent cannot improve it.
pub fn permutation_min_max(cost: &Array2<f64>) -> f64 {
    fn descend(
        cost: &Array2<f64>,
        row: usize,
        used: &mut [bool],
        running: f64,
        best: &mut f64,
    ) {
        if row == used.len() {
            *best = running;
            return;
        }
        for j in 0..used.len() {
            if used[j] {
                continue;
            }
            let next = running.max(cost[[row, j]]);
            if next >= *best {
                continue;
            }
            used[j] = true;
            descend(cost, row + 1, used, next, best);
            used[j] = false;
        }
    }
    let n = cost.nrows();
    let mut best = f64::INFINITY;
    descend(cost, 0, &mut vec![false; n], f64::NEG_INFINITY, &mut best);
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MGamma {
    /// `max gamma_ij` over support cells with `c_ij = v_inf`; 0 if none.
    pub value: f64,
    pub found: bool,
    /// Whether `ess sup c <= v_inf + tol` held on the support.
    pub optimal: bool,
}

/// `m(gamma)`, the largest mass `gamma` puts on a cell of cost `v_inf`.
///
/// The support is `gamma_ij > 1e-9 * max gamma` and costs are compared with
/// the relative tolerance `tol_eq * max(1, |v_inf|)`.
pub fn compute_m_gamma(gamma: &Coupling, cost: &CostMatrix, v_inf: f64, tol_eq: f64) -> Result<MGamma> {
    let (n, m) = gamma.shape();
    cost.check_shape(n, m)?;
    let tau = DEFAULT_SUPPORT_REL_TAU * gamma.max_entry();
    let tol = tol_eq * v_inf.abs().max(1.0);
    let mut out = MGamma {
        value: 0.0,
        found: false,
        optimal: true,
    };
    for ((i, j), &g) in gamma.entries().indexed_iter() {
        if g <= tau {
            continue;
        }
        let c = cost.get(i, j);
        if c > v_inf + tol {
            out.optimal = false;
        }
        if (c - v_inf).abs() <= tol && g > out.value {
            out.value = g;
            out.found = true;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{build_cost, ess_sup, Metric, Rescale};
    use ndarray::array;

    fn uniform_line(xs: &[f64]) -> Arc<DiscreteMeasure> {
        Arc::new(DiscreteMeasure::uniform(xs.iter().map(|&x| vec![x]).collect()).unwrap())
    }

    fn raw(n: usize) -> Arc<DiscreteMeasure> {
        uniform_line(&(0..n).map(|i| i as f64).collect::<Vec<_>>())
    }

    #[test]
    fn single_cell() {
        let mu = uniform_line(&[0.0]);
        let nu = uniform_line(&[2.5]);
        let cost = build_cost(&mu, &nu, Metric::Euclidean, Rescale::default()).unwrap();
        let r = solve_bottleneck(&mu, &nu, &cost).unwrap();
        assert_eq!(r.value, 2.5);
        assert_eq!(r.critical_pair, (0, 0));
        assert_eq!(permutation_brute_force(&mu, &nu, &cost).unwrap(), 2.5);
    }

    #[test]
    fn two_by_two_example() {
        let cost = CostMatrix::from_entries(array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let (mu, nu) = (raw(2), raw(2));
        assert_eq!(permutation_brute_force(&mu, &nu, &cost).unwrap(), 3.0);
        let r = solve_bottleneck(&mu, &nu, &cost).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.critical_pair, (1, 0));
        assert_eq!(r.witness_support(), vec![(0, 1), (1, 0)]);
        assert!(r.witness.is_feasible(1e-11));
        assert_eq!(ess_sup(&r.witness, &cost, 0.0).unwrap(), 3.0);
    }

    #[test]
    fn non_uniform_marginals() {
        // mu = (0.9, 0.1) must send 0.4 of row 0 to the expensive column
        let mu = Arc::new(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.9, 0.1]).unwrap());
        let nu = Arc::new(DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0]]).unwrap());
        let cost = CostMatrix::from_entries(array![[1.0, 5.0], [0.5, 0.2]]).unwrap();
        let r = solve_bottleneck(&mu, &nu, &cost).unwrap();
        assert_eq!(r.value, 5.0);
        assert_eq!(r.critical_pair, (0, 1));
        assert!(permutation_brute_force(&mu, &nu, &cost).is_err());
    }

    #[test]
    fn brute_force_guards() {
        let big = raw(11);
        let cost = CostMatrix::from_entries(Array2::zeros((11, 11))).unwrap();
        assert!(matches!(
            permutation_brute_force(&big, &big, &cost),
            Err(Error::TooLarge(_))
        ));
        let cost = CostMatrix::from_entries(Array2::zeros((2, 3))).unwrap();
        assert!(permutation_brute_force(&raw(2), &raw(3), &cost).is_err());
    }

    #[test]
    fn scale_equivariance() {
        let mu = uniform_line(&[0.0, 0.3, 1.1, 2.0]);
        let nu = uniform_line(&[0.5, 0.9, 1.7, 3.0]);
        let base = build_cost(&mu, &nu, Metric::Euclidean, Rescale::default()).unwrap();
        let r = solve_bottleneck(&mu, &nu, &base).unwrap();
        let shifted = base.rescaled(Rescale::new(2.5, 1.0).unwrap()).unwrap();
        let s = solve_bottleneck(&mu, &nu, &shifted).unwrap();
        assert!((s.value - (2.5 * r.value + 1.0)).abs() < 1e-12);
        assert_eq!(s.critical_pair, r.critical_pair);
    }

    #[test]
    fn m_gamma_on_permutation() {
        let mu = raw(3);
        let nu = raw(3);
        let cost = CostMatrix::from_entries(array![[1.0, 9.0, 9.0], [9.0, 2.0, 9.0], [9.0, 9.0, 0.5]])
            .unwrap();
        let gamma = Coupling::from_permutation(mu.clone(), nu.clone(), &[0, 1, 2]).unwrap();
        let m = compute_m_gamma(&gamma, &cost, 2.0, DEFAULT_TOL_EQ).unwrap();
        assert!(m.found && m.optimal);
        assert!((m.value - 1.0 / 3.0).abs() < 1e-15);

        let miss = compute_m_gamma(&gamma, &cost, 1.5, DEFAULT_TOL_EQ).unwrap();
        assert!(!miss.found);
        assert!(!miss.optimal);
        assert_eq!(miss.value, 0.0);
    }
}
