//! Solves the eight-versus-four instance at p = 5 and prints the plan,
//! its arrows and the value against the exact v_inf.
//!
//! cargo run --release --example fig1_selection [out.svg]

use linf_ot::bottleneck::solve_bottleneck;
use linf_ot::harness::{generate_instance, plan_arrows, plan_svg, Shade};
use linf_ot::sinkhorn::{solve, SolverConfig};

fn main() -> linf_ot::Result<()> {
    for name in ["fig1", "fig3"] {
        let inst = generate_instance(name)?;
        let cost = inst.cost()?;
        let report = solve(&inst.mu, &inst.nu, &cost, &SolverConfig::new(5.0, 1.0))?;
        let v_inf = solve_bottleneck(&inst.mu, &inst.nu, &cost)?.value;
        let arrows = plan_arrows(&report.coupling);
        let black = arrows.iter().filter(|a| a.shade == Shade::Black).count();
        println!(
            "{name}: {} iterations, J = {:.6}, v_inf = {:.6}, {} arrows ({black} black)",
            report.iterations,
            report.value,
            v_inf,
            arrows.len()
        );
        for row in report.coupling.entries().rows() {
            let cells: Vec<String> = row.iter().map(|g| format!("{g:.4}")).collect();
            println!("  {}", cells.join(" "));
        }
        if name == "fig1" {
            if let Some(path) = std::env::args().nth(1) {
                std::fs::write(&path, plan_svg(&report.coupling)?)?;
                println!("wrote {path}");
            }
        }
    }
    Ok(())
}
