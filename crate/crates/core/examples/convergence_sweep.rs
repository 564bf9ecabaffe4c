//! v_p - v_inf on the segment instance with the cost rescaled so that
//! v_inf = 1.052460609, eps = 500^2.
//!
//! cargo run --release --example convergence_sweep [sweep.csv] [sweep.svg]

use linf_ot::harness::{generate_instance, geometric_p_values, save_sweep_csv, sweep, sweep_svg, SweepConfig};
use linf_ot::sinkhorn::{EpsSchedule, Mode};

fn main() -> linf_ot::Result<()> {
    let inst = generate_instance("fig7")?;
    let config = SweepConfig::new(geometric_p_values(10.0, 172.0, 25)?, EpsSchedule::constant(250_000.0))
        .with_target(1.052460609)
        .with_mode(Mode::LogDomain);
    let result = sweep(&inst, &config)?;
    println!("v_inf = {:.9} (cost scaled by {:.6})", result.v_inf, result.scale);
    println!("{:>8} {:>14} {:>10} {:>8}", "p", "gap", "p*gap", "iters");
    for r in &result.records {
        println!("{:>8.2} {:>14.6e} {:>10.4} {:>8}", r.p, r.gap, r.p * r.gap, r.iterations);
    }
    println!("fit: A = {:?}, B = {:?}, beta = {:.6}", result.fit.a, result.fit.b, result.fit.beta);

    let mut args = std::env::args().skip(1);
    if let Some(csv) = args.next() {
        save_sweep_csv(&result.records, &csv)?;
    }
    if let Some(svg) = args.next() {
        std::fs::write(svg, sweep_svg(&result.records, &result.fit)?)?;
    }
    Ok(())
}
