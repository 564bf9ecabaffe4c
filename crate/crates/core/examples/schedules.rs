//! Diagnostics for eps schedules and the collapse of eps = 1/p onto the
//! independent coupling.

use linf_ot::harness::generate_instance;
use linf_ot::measures::Rescale;
use linf_ot::sinkhorn::{degenerate_schedule_demo, validate_schedule, EpsSchedule};

fn main() -> linf_ot::Result<()> {
    let p_values: Vec<f64> = (1..=20).map(|k| 5.0 * k as f64).collect();
    let schedules = [
        ("eps = 1", EpsSchedule::constant(1.0)),
        ("eps = 2^p", EpsSchedule::Geometric { eps0: 1.0, ratio: 2.0 }),
        ("eps = 1/p", EpsSchedule::PowerDecay { eps0: 1.0, alpha: 1.0 }),
        ("eps = 0.5^p", EpsSchedule::Geometric { eps0: 1.0, ratio: 0.5 }),
    ];
    for (label, schedule) in &schedules {
        let report = validate_schedule(schedule, 0.1, &p_values)?;
        println!("{label:<12} flagged: {:?}", report.flagged());
    }

    let inst = generate_instance("fig7")?;
    let cost = inst.cost()?;
    let cost = cost.rescaled(Rescale::new(0.5 / cost.max(), 0.0)?)?;
    for point in degenerate_schedule_demo(&inst.mu, &inst.nu, &cost, &[5.0, 10.0, 15.0, 20.0])? {
        println!(
            "p = {:>4}: H = {:.3e} <= {:.3e}, max |gamma - mu x nu| = {:.3e}",
            point.p, point.entropy, point.bound, point.product_deviation
        );
    }
    Ok(())
}
