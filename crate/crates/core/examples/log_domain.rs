//! The two Sinkhorn engines on a cost large enough to underflow the kernel.

use std::sync::Arc;

use linf_ot::measures::{DiscreteMeasure, Instance, Metric};
use linf_ot::sinkhorn::{solve, Mode, SolverConfig};

fn main() -> linf_ot::Result<()> {
    let mu = DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0], vec![2.0]])?;
    let nu = DiscreteMeasure::uniform(vec![vec![30.0], vec![31.5], vec![33.0]])?;
    let inst = Instance::new(mu, nu, Metric::Euclidean)?;
    let cost = inst.cost()?;
    let (mu, nu) = (Arc::clone(&inst.mu), Arc::clone(&inst.nu));

    for eps in [100.0, 1.0] {
        println!("eps = {eps}, max c^p / eps = {:.1}", cost.max().powi(2) / eps);
        for mode in [Mode::Standard, Mode::LogDomain, Mode::Auto] {
            let config = SolverConfig::new(2.0, eps).with_mode(mode);
            match solve(&mu, &nu, &cost, &config) {
                Ok(r) => println!(
                    "  {mode:?}: ran {:?}, J = {:.9}, {} iterations",
                    r.mode, r.value, r.iterations
                ),
                Err(e) => println!("  {mode:?}: {e}"),
            }
        }
    }
    Ok(())
}
