//! Cyclical monotonicity of finite supports and related certificates.
//!
//! A support `S = {(x_1, y_1), ..., }` is checked cycle by cycle: for distinct
//! elements `s_1, ..., s_k` of `S`, `k <= K`, the *max form* compares
//! `max_r c(x_r, y_r)` with `max_r c(x_r, y_{r+1})` (infinity-cyclical
//! monotonicity) and the *sum form* compares the corresponding sums
//! (c-cyclical monotonicity). Cycles that revisit an element split into
//! shorter cycles with the same edges, so distinct elements suffice.
//!
//! Every report is a partial certificate: cycles longer than the cap are
//! never examined.

mod invariance;
mod rates;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{CostMatrix, SupportSet};

pub use invariance::{invariance_residual, lemma_probability_bound, LemmaBound};
pub use rates::{
    ld_upper_bound_probe, rate_functions, LdProbe, RateFunctionTable, SupportProvenance,
};

pub const DEFAULT_CAP: usize = 4;
pub const DEFAULT_RATE_CAP: usize = 3;
pub const MAX_RATE_CAP: usize = 5;
/// Absolute slack on cycle inequalities.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Largest admissible `binom(|S|, K)`.
pub const ENUMERATION_BUDGET: f64 = 1e7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CycleForm {
    /// `max own <= max shifted`
    Max,
    /// `sum own <= sum shifted`
    Sum,
}

impl FromStr for CycleForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "max" => Ok(CycleForm::Max),
            "sum" | "c" => Ok(CycleForm::Sum),
            other => Err(Error::InvalidParameter(format!("unknown cycle form `{other}`"))),
        }
    }
}

/// A cycle `(i_1, j_1), ..., (i_k, j_k)` with its two sides; `rhs` uses the
/// shifted cells `(i_r, j_{r+1})`, indices taken cyclically.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleWitness {
    pub indices: Vec<(usize, usize)>,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; positive when the cycle breaks the inequality.
    pub violation: f64,
}

impl CycleWitness {
    pub fn evaluate(indices: Vec<(usize, usize)>, cost: &CostMatrix, form: CycleForm) -> Self {
        let k = indices.len();
        let own = indices.iter().map(|&(i, j)| cost.get(i, j));
        let shifted = (0..k).map(|r| cost.get(indices[r].0, indices[(r + 1) % k].1));
        let (lhs, rhs) = match form {
            CycleForm::Max => (
                own.fold(f64::NEG_INFINITY, f64::max),
                shifted.fold(f64::NEG_INFINITY, f64::max),
            ),
            CycleForm::Sum => (own.sum(), shifted.sum()),
        };
        Self {
            indices,
            lhs,
            rhs,
            violation: lhs - rhs,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityReport {
    pub form: CycleForm,
    /// Longest cycle length examined.
    pub cap: usize,
    pub support_size: usize,
    /// Cycles evaluated after pruning.
    pub cycles_examined: u64,
    pub monotone: bool,
    /// The largest violation found, if any exceeds the tolerance.
    pub worst: Option<CycleWitness>,
}

impl fmt::Display for MonotonicityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.form {
            CycleForm::Max => "infinity-cyclical monotonicity",
            CycleForm::Sum => "c-cyclical monotonicity",
        };
        let verdict = if self.monotone { "holds" } else { "fails" };
        write!(
            f,
            "{name} {verdict} on {} support cells for cycles of length <= {} \
             (partial certificate: longer cycles not examined)",
            self.support_size, self.cap
        )?;
        if let Some(w) = &self.worst {
            write!(
                f,
                "; worst cycle {:?}: lhs {:.12} > rhs {:.12} (violation {:.3e})",
                w.indices, w.lhs, w.rhs, w.violation
            )?;
        }
        Ok(())
    }
}

pub fn check_inf_cyclical_monotonicity(
    support: &SupportSet,
    cost: &CostMatrix,
    cap: usize,
) -> Result<MonotonicityReport> {
    check_cycles(support, cost, cap, CycleForm::Max, VIOLATION_TOL)
}

pub fn check_c_cyclical_monotonicity(
    support: &SupportSet,
    cost: &CostMatrix,
    cap: usize,
) -> Result<MonotonicityReport> {
    check_cycles(support, cost, cap, CycleForm::Sum, VIOLATION_TOL)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, r| acc * (n - r) as f64 / (r + 1) as f64)
}

/// Enumerates all cycles of distinct support elements with length `2..=cap`
/// and reports the worst one violating `form` by more than `tol`.
pub fn check_cycles(
    support: &SupportSet,
    cost: &CostMatrix,
    cap: usize,
    form: CycleForm,
    tol: f64,
) -> Result<MonotonicityReport> {
    if cap < 2 {
        return Err(Error::InvalidParameter(format!("cycle cap {cap} must be >= 2")));
    }
    let (n, m) = cost.shape();
    if let Some(&(i, j)) = support.pairs().iter().find(|&&(i, j)| i >= n || j >= m) {
        return Err(Error::InvalidParameter(format!(
            "support cell ({i}, {j}) outside the {n}x{m} cost"
        )));
    }
    let size = support.len();
    let needed = binomial(size, cap.min(size));
    if needed > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            budget: ENUMERATION_BUDGET,
        });
    }

    let search = CycleSearch::new(support.pairs(), cost.entries(), cap, form, tol);
    let per_start: Vec<(u64, Option<(f64, Vec<usize>)>)> =
        (0..size).into_par_iter().map(|s| search.search_from(s)).collect();

    let mut examined = 0;
    let mut worst: Option<(f64, Vec<usize>)> = None;
    for (count, found) in per_start {
        examined += count;
        if let Some((v, chain)) = found {
            if worst
                .as_ref()
                .is_none_or(|(w, c)| v > *w || (v == *w && chain.len() < c.len()))
            {
                worst = Some((v, chain));
            }
        }
    }
    let worst = worst.map(|(_, chain)| {
        let cells = chain.iter().map(|&s| support.pairs()[s]).collect();
        CycleWitness::evaluate(cells, cost, form)
    });
    Ok(MonotonicityReport {
        form,
        cap,
        support_size: size,
        cycles_examined: examined,
        monotone: worst.is_none(),
        worst,
    })
}

struct CycleSearch<'a> {
    pairs: &'a [(usize, usize)],
    cost: &'a Array2<f64>,
    own: Vec<f64>,
    cap: usize,
    form: CycleForm,
    tol: f64,
    /// Sum form: bound on what one more element can add.
    gain: f64,
    /// Sum form: `min_u c(i_u, j_s)` over support rows, per element.
    min_into: Vec<f64>,
}

struct Chain {
    items: Vec<usize>,
    used: Vec<bool>,
    best: f64,
    best_chain: Option<Vec<usize>>,
    count: u64,
}

impl Chain {
    /// Whether a cycle of length `len` would beat the incumbent on a tie.
    fn shorter(&self, len: usize) -> bool {
        self.best_chain.as_ref().is_some_and(|c| len < c.len())
    }
}

impl<'a> CycleSearch<'a> {
    fn new(
        pairs: &'a [(usize, usize)],
        cost: &'a Array2<f64>,
        cap: usize,
        form: CycleForm,
        tol: f64,
    ) -> Self {
        let own: Vec<f64> = pairs.iter().map(|&(i, j)| cost[[i, j]]).collect();
        let min_into: Vec<f64> = pairs
            .iter()
            .map(|&(_, j)| {
                pairs
                    .iter()
                    .map(|&(i, _)| cost[[i, j]])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let gain = own
            .iter()
            .zip(&min_into)
            .map(|(o, m)| o - m)
            .fold(0.0, f64::max);
        Self {
            pairs,
            cost,
            own,
            cap,
            form,
            tol,
            gain,
            min_into,
        }
    }

    fn edge(&self, from: usize, to: usize) -> f64 {
        self.cost[[self.pairs[from].0, self.pairs[to].1]]
    }

    /// Cycles whose canonical first element is `start`: the own-cost maximum
    /// (ties to the larger index) for the max form, the smallest index for
    /// the sum form.
    fn search_from(&self, start: usize) -> (u64, Option<(f64, Vec<usize>)>) {
        let mut chain = Chain {
            items: vec![start],
            used: vec![false; self.pairs.len()],
            best: self.tol,
            best_chain: None,
            count: 0,
        };
        chain.used[start] = true;
        match self.form {
            CycleForm::Max => self.extend_max(start, f64::NEG_INFINITY, &mut chain),
            CycleForm::Sum => self.extend_sum(start, self.own[start], &mut chain),
        }
        (chain.count, chain.best_chain.map(|c| (chain.best, c)))
    }

    fn admissible_max(&self, start: usize, t: usize) -> bool {
        self.own[t] < self.own[start] || (self.own[t] == self.own[start] && t < start)
    }

    fn extend_max(&self, start: usize, running: f64, chain: &mut Chain) {
        let last = *chain.items.last().expect("chain starts nonempty");
        let top = self.own[start];
        for t in 0..self.pairs.len() {
            if chain.used[t] || !self.admissible_max(start, t) {
                continue;
            }
            let shifted = running.max(self.edge(last, t));
            // shifted maxima only grow along the chain
            let reach = top - shifted;
            if reach < chain.best || (reach == chain.best && !chain.shorter(chain.items.len() + 1)) {
                continue;
            }
            chain.count += 1;
            let value = top - shifted.max(self.edge(t, start));
            chain.items.push(t);
            if value > chain.best || (value == chain.best && chain.shorter(chain.items.len())) {
                chain.best = value;
                chain.best_chain = Some(chain.items.clone());
            }
            if chain.items.len() < self.cap {
                chain.used[t] = true;
                self.extend_max(start, shifted, chain);
                chain.used[t] = false;
            }
            chain.items.pop();
        }
    }

    fn extend_sum(&self, start: usize, committed: f64, chain: &mut Chain) {
        let last = *chain.items.last().expect("chain starts nonempty");
        for t in start + 1..self.pairs.len() {
            if chain.used[t] {
                continue;
            }
            let next = committed + self.own[t] - self.edge(last, t);
            chain.count += 1;
            let value = next - self.edge(t, start);
            chain.items.push(t);
            if value > chain.best {
                chain.best = value;
                chain.best_chain = Some(chain.items.clone());
            }
            let room = self.cap - chain.items.len();
            let bound = next + room as f64 * self.gain - self.min_into[start];
            if room > 0 && bound > chain.best {
                chain.used[t] = true;
                self.extend_sum(start, next, chain);
                chain.used[t] = false;
            }
            chain.items.pop();
        }
    }
}
