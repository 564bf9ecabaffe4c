//! Exact v_inf for the segment instance, checked against brute force.

use linf_ot::bottleneck::{compute_m_gamma, permutation_brute_force, solve_bottleneck, DEFAULT_TOL_EQ};
use linf_ot::harness::generate_instance;

fn main() -> linf_ot::Result<()> {
    let inst = generate_instance("fig7")?;
    let cost = inst.cost()?;
    let result = solve_bottleneck(&inst.mu, &inst.nu, &cost)?;
    let (i, j) = result.critical_pair;
    println!("v_inf          = {:.10}", result.value);
    println!("critical pair  = {:?} -> {:?}", inst.mu.point(i), inst.nu.point(j));
    println!("brute force    = {:.10}", permutation_brute_force(&inst.mu, &inst.nu, &cost)?);

    let m = compute_m_gamma(&result.witness, &cost, result.value, DEFAULT_TOL_EQ)?;
    println!(
        "witness mass on the level set {{c = v_inf}}: {:.4}",
        m.value
    );
    for (i, j) in result.witness_support() {
        println!("  {i} -> {j}  c = {:.6}", cost.get(i, j));
    }
    Ok(())
}
