//! JSON layouts for instances and plans.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{build_cost, CostMatrix, Coupling, DiscreteMeasure, Metric, Rescale};
use crate::error::{Error, Result};

/// Tolerance used when comparing stored marginal checksums with the entries.
const CHECKSUM_TOL: f64 = 1e-9;

/// A transport instance: two marginals, a ground metric and a rescale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub mu: Arc<DiscreteMeasure>,
    pub nu: Arc<DiscreteMeasure>,
    pub metric: Metric,
    #[serde(default)]
    pub rescale: Rescale,
}

impl Instance {
    pub fn new(mu: DiscreteMeasure, nu: DiscreteMeasure, metric: Metric) -> Result<Self> {
        if mu.dim() != nu.dim() {
            return Err(Error::DimensionMismatch {
                expected: mu.dim(),
                found: nu.dim(),
            });
        }
        Ok(Self {
            mu: Arc::new(mu),
            nu: Arc::new(nu),
            metric,
            rescale: Rescale::default(),
        })
    }

    pub fn with_rescale(mut self, rescale: Rescale) -> Self {
        self.rescale = rescale;
        self
    }

    pub fn cost(&self) -> Result<CostMatrix> {
        build_cost(&self.mu, &self.nu, self.metric, self.rescale)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Dense row-major plan with its marginal checksums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
    pub row_sums: Vec<f64>,
    pub col_sums: Vec<f64>,
}

impl PlanFile {
    pub fn from_coupling(gamma: &Coupling) -> Self {
        let (rows, cols) = gamma.shape();
        Self {
            rows,
            cols,
            entries: gamma.entries().iter().copied().collect(),
            row_sums: gamma.row_sums(),
            col_sums: gamma.col_sums(),
        }
    }

    /// Rebuilds the coupling, verifying shape and checksums.
    pub fn into_coupling(
        self,
        mu: Arc<DiscreteMeasure>,
        nu: Arc<DiscreteMeasure>,
    ) -> Result<Coupling> {
        if self.entries.len() != self.rows * self.cols {
            return Err(Error::InvalidCoupling(format!(
                "{} entries for a {}x{} plan",
                self.entries.len(),
                self.rows,
                self.cols
            )));
        }
        let entries = Array2::from_shape_vec((self.rows, self.cols), self.entries)
            .map_err(|e| Error::InvalidCoupling(e.to_string()))?;
        let gamma = Coupling::new(entries, mu, nu)?;
        let checks = [
            ("row", gamma.row_sums(), &self.row_sums),
            ("column", gamma.col_sums(), &self.col_sums),
        ];
        for (axis, actual, stored) in checks {
            if actual.len() != stored.len()
                || actual
                    .iter()
                    .zip(stored.iter())
                    .any(|(a, s)| (a - s).abs() > CHECKSUM_TOL)
            {
                return Err(Error::InvalidCoupling(format!("{axis} checksum mismatch")));
            }
        }
        Ok(gamma)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
        // solve reports embed the plan under "plan"
        let plan = match value.get("plan") {
            Some(inner) => inner.clone(),
            None => value,
        };
        Ok(serde_json::from_value(plan)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}
