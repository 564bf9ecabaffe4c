//! Cycle checks on entropic plans of increasing p, plus the cost transforms
//! that do or do not preserve each verdict.

use std::sync::Arc;

use linf_ot::harness::generate_instance;
use linf_ot::measures::{CostMatrix, DiscreteMeasure, Metric, Rescale, SupportSet, build_cost};
use linf_ot::monotonicity::{check_c_cyclical_monotonicity, check_inf_cyclical_monotonicity, DEFAULT_CAP};
use linf_ot::sinkhorn::{solve, SolverConfig};

fn main() -> linf_ot::Result<()> {
    let inst = generate_instance("fig1")?;
    let cost = inst.cost()?;
    for p in [2.0, 5.0, 8.0] {
        let report = solve(&inst.mu, &inst.nu, &cost, &SolverConfig::new(p, 1.0))?;
        let support = SupportSet::from_coupling(&report.coupling, 1e-9);
        let check = check_inf_cyclical_monotonicity(&support, &cost, DEFAULT_CAP)?;
        println!("p = {p}: {check}");
    }

    // two crossing segments: monotone for c but not for c^2
    let mu = Arc::new(DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![1.0, 1.0]])?);
    let nu = Arc::new(DiscreteMeasure::uniform(vec![vec![3.2, 0.0], vec![2.0, 1.0]])?);
    let c = build_cost(&mu, &nu, Metric::Euclidean, Rescale::default())?;
    let squared = c.map(|x| x * x)?;
    let diagonal = SupportSet::from_pairs(vec![(0, 0), (1, 1)]);
    report("c", &diagonal, &c)?;
    report("c^2", &diagonal, &squared)?;
    Ok(())
}

fn report(label: &str, support: &SupportSet, cost: &CostMatrix) -> linf_ot::Result<()> {
    let sum = check_c_cyclical_monotonicity(support, cost, 2)?;
    let max = check_inf_cyclical_monotonicity(support, cost, 2)?;
    println!("{label}: sum form monotone = {}, max form monotone = {}", sum.monotone, max.monotone);
    Ok(())
}
