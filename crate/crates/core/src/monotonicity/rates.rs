//! Cycle-length-capped rate functions `I_inf^(K)` and `~I_inf^(K)`.
//!
//! For a query cell `q = (x, y)` and a support `S`:
//!
//! * `~I^(K)(q)` is the largest `max_r c(x_r, y_r) - max_r c(x_r, y_{r+1})`
//!   over chains `q, s_2, ..., s_k` with `s_r` in `S` and `2 <= k <= K`;
//! * `I^(K)(q)` is the same supremum with the cyclic shift replaced by every
//!   permutation of the `k` targets, i.e. `max own` minus the bottleneck
//!   assignment value of the `k x k` block.
//!
//! Chains may revisit support elements.

use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_cycles, CycleForm, ENUMERATION_BUDGET, MAX_RATE_CAP};
use crate::bottleneck::permutation_min_max;
use crate::error::{Error, Result};
use crate::measures::{CostMatrix, SupportSet};
use crate::sinkhorn::SolveReport;

/// Where a support came from: the solve parameters and the extraction
/// threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupportProvenance {
    pub p: f64,
    pub eps: f64,
    pub tau: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateFunctionTable {
    pub cap: usize,
    pub support_size: usize,
    pub provenance: Option<SupportProvenance>,
    pub queries: Vec<(usize, usize)>,
    /// `~I_inf^(K)` per query.
    pub tilde: Vec<f64>,
    /// `I_inf^(K)` per query.
    pub full: Vec<f64>,
}

impl RateFunctionTable {
    pub fn get(&self, cell: (usize, usize)) -> Option<(f64, f64)> {
        self.queries
            .iter()
            .position(|&q| q == cell)
            .map(|k| (self.tilde[k], self.full[k]))
    }

    /// Columns `i, j, tilde, full`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "tilde_i_inf", "i_inf"])?;
        for (k, &(i, j)) in self.queries.iter().enumerate() {
            w.write_record([
                i.to_string(),
                j.to_string(),
                format!("{:.17e}", self.tilde[k]),
                format!("{:.17e}", self.full[k]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rate functions at each query cell, for a support that must pass the
/// infinity-cyclical monotonicity check at cap `K` with no slack.
pub fn rate_functions(
    queries: &[(usize, usize)],
    support: &SupportSet,
    cost: &CostMatrix,
    cap: usize,
    provenance: Option<SupportProvenance>,
) -> Result<RateFunctionTable> {
    if !(2..=MAX_RATE_CAP).contains(&cap) {
        return Err(Error::InvalidParameter(format!(
            "rate-function cap {cap} must lie in 2..={MAX_RATE_CAP}"
        )));
    }
    if support.is_empty() {
        return Err(Error::EmptySupport { tau: support.tau() });
    }
    let (n, m) = cost.shape();
    if let Some(&(i, j)) = queries.iter().find(|&&(i, j)| i >= n || j >= m) {
        return Err(Error::InvalidParameter(format!(
            "query ({i}, {j}) outside the {n}x{m} cost"
        )));
    }
    let s = support.len() as f64;
    let factorial: f64 = (1..=cap).map(|k| k as f64).product();
    let needed = s.powi(cap as i32 - 1) * factorial;
    if needed > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            budget: ENUMERATION_BUDGET,
        });
    }
    if !check_cycles(support, cost, cap, CycleForm::Max, 0.0)?.monotone {
        return Err(Error::NotMonotone { cap });
    }

    let values: Vec<(f64, f64)> = queries
        .par_iter()
        .map(|&q| {
            let mut chains = ChainWalk {
                cost: cost.entries(),
                support: support.pairs(),
                cap,
                chain: vec![q],
                tilde: f64::NEG_INFINITY,
                full: f64::NEG_INFINITY,
            };
            chains.walk(cost.get(q.0, q.1));
            (chains.tilde, chains.full)
        })
        .collect();

    Ok(RateFunctionTable {
        cap,
        support_size: support.len(),
        provenance,
        queries: queries.to_vec(),
        tilde: values.iter().map(|v| v.0).collect(),
        full: values.iter().map(|v| v.1).collect(),
    })
}

struct ChainWalk<'a> {
    cost: &'a Array2<f64>,
    support: &'a [(usize, usize)],
    cap: usize,
    chain: Vec<(usize, usize)>,
    tilde: f64,
    full: f64,
}

impl ChainWalk<'_> {
    fn walk(&mut self, own_max: f64) {
        for &s in self.support {
            self.chain.push(s);
            let own = own_max.max(self.cost[[s.0, s.1]]);
            self.evaluate(own);
            if self.chain.len() < self.cap {
                self.walk(own);
            }
            self.chain.pop();
        }
    }

    fn evaluate(&mut self, own_max: f64) {
        let k = self.chain.len();
        let shifted = (0..k)
            .map(|r| self.cost[[self.chain[r].0, self.chain[(r + 1) % k].1]])
            .fold(f64::NEG_INFINITY, f64::max);
        self.tilde = self.tilde.max(own_max - shifted);
        let block = Array2::from_shape_fn((k, k), |(r, t)| {
            self.cost[[self.chain[r].0, self.chain[t].1]]
        });
        self.full = self.full.max(own_max - permutation_min_max(&block));
    }
}

/// Trace of `(eps/p) log gamma_{p,eps}(C)` along a sweep in `p`, against the
/// target `-inf_C ~I_inf^(K)`.
#[derive(Clone, Debug, Serialize)]
pub struct LdProbe {
    pub trace: Vec<(f64, f64)>,
    pub target: f64,
    pub slack: f64,
    /// Whether the second half of the trace stays below `target + slack`.
    pub tail_ok: bool,
}

pub fn ld_upper_bound_probe(
    solves: &[SolveReport],
    cost: &CostMatrix,
    cells: &[(usize, usize)],
    table: &RateFunctionTable,
    slack: f64,
) -> Result<LdProbe> {
    if cost.min() < 1.0 {
        return Err(Error::CostBound(format!(
            "min cost {} is below 1",
            cost.min()
        )));
    }
    if solves.is_empty() || cells.is_empty() {
        return Err(Error::EmptyData("no solves or no cells"));
    }
    let eps = solves[0].eps;
    if solves
        .iter()
        .any(|r| ((r.eps - eps) / eps).abs() > 1e-12)
    {
        return Err(Error::InvalidParameter("solves must share eps".into()));
    }
    if solves.windows(2).any(|w| !(w[1].p > w[0].p)) {
        return Err(Error::InvalidParameter("solves must have increasing p".into()));
    }
    let mut inf_tilde = f64::INFINITY;
    for &cell in cells {
        let (tilde, _) = table.get(cell).ok_or_else(|| {
            Error::InvalidParameter(format!("cell {cell:?} missing from the rate table"))
        })?;
        inf_tilde = inf_tilde.min(tilde);
    }
    let target = -inf_tilde;

    let trace = solves
        .iter()
        .map(|r| Ok((r.p, r.eps / r.p * r.log_mass(cost, cells)?)))
        .collect::<Result<Vec<_>>>()?;
    let tail_ok = trace[trace.len() / 2..]
        .iter()
        .all(|&(_, v)| v <= target + slack);
    Ok(LdProbe {
        trace,
        target,
        slack,
        tail_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Every chain of length <= cap and every permutation, written out
    /// without shared code.
    fn exhaustive(
        q: (usize, usize),
        support: &[(usize, usize)],
        cost: &Array2<f64>,
        cap: usize,
    ) -> (f64, f64) {
        fn perms(k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(k - 1) {
                for pos in 0..=p.len() {
                    let mut v = p.clone();
                    v.insert(pos, k - 1);
                    out.push(v);
                }
            }
            out
        }
        let mut tilde = f64::NEG_INFINITY;
        let mut full = f64::NEG_INFINITY;
        let s = support.len();
        for k in 2..=cap {
            let total = s.pow(k as u32 - 1);
            for code in 0..total {
                let mut chain = vec![q];
                let mut c = code;
                for _ in 1..k {
                    chain.push(support[c % s]);
                    c /= s;
                }
                let own = chain.iter().map(|&(i, j)| cost[[i, j]]).fold(f64::MIN, f64::max);
                let cyc = (0..k)
                    .map(|r| cost[[chain[r].0, chain[(r + 1) % k].1]])
                    .fold(f64::MIN, f64::max);
                tilde = tilde.max(own - cyc);
                for sigma in perms(k) {
                    let sh = (0..k)
                        .map(|r| cost[[chain[r].0, chain[sigma[r]].1]])
                        .fold(f64::MIN, f64::max);
                    full = full.max(own - sh);
                }
            }
        }
        (tilde, full)
    }

    fn hand_instance() -> (CostMatrix, SupportSet) {
        let cost = CostMatrix::from_entries(array![
            [1.0, 3.0, 2.5],
            [2.0, 1.5, 4.0],
            [3.5, 2.2, 1.2]
        ])
        .unwrap();
        (cost, SupportSet::from_pairs(vec![(0, 0), (1, 1), (2, 2)]))
    }

    fn all_cells(n: usize, m: usize) -> Vec<(usize, usize)> {
        (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect()
    }

    #[test]
    fn matches_exhaustive_oracle() {
        let (cost, support) = hand_instance();
        for cap in 2..=3 {
            let table = rate_functions(&all_cells(3, 3), &support, &cost, cap, None).unwrap();
            for (k, &q) in table.queries.iter().enumerate() {
                let (t, f) = exhaustive(q, support.pairs(), cost.entries(), cap);
                assert_eq!(table.tilde[k], t, "tilde at {q:?}, cap {cap}");
                assert_eq!(table.full[k], f, "full at {q:?}, cap {cap}");
            }
        }
    }

    #[test]
    fn zero_on_support_and_relation() {
        let (cost, support) = hand_instance();
        let table = rate_functions(&all_cells(3, 3), &support, &cost, 3, None).unwrap();
        for (k, &q) in table.queries.iter().enumerate() {
            if support.contains(q) {
                assert_eq!(table.full[k], 0.0);
            }
            assert_eq!(table.full[k], table.tilde[k].max(0.0));
            assert!(table.tilde[k] >= 0.0);
        }
    }

    #[test]
    fn non_monotone_support_rejected() {
        let (cost, _) = hand_instance();
        let bad = SupportSet::from_pairs(vec![(0, 1), (1, 0)]);
        assert!(matches!(
            rate_functions(&[(0, 0)], &bad, &cost, 2, None),
            Err(Error::NotMonotone { cap: 2 })
        ));
        assert!(rate_functions(&[(0, 0)], &bad, &cost, 6, None).is_err());
        assert!(rate_functions(&[(5, 0)], &SupportSet::from_pairs(vec![(0, 0)]), &cost, 2, None).is_err());
    }

    #[test]
    fn csv_layout() {
        let (cost, support) = hand_instance();
        let table = rate_functions(&[(0, 1)], &support, &cost, 2, None).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("i,j,tilde_i_inf,i_inf"));
        assert!(lines.next().unwrap().starts_with("0,1,"));
    }
}
