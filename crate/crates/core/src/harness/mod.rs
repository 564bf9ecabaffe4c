//! Figure instances, convergence sweeps and their plots.

mod instances;
mod plot;
mod sweep;

pub use instances::{generate_instance, INSTANCE_NAMES};
pub use plot::{plan_arrows, plan_svg, sweep_svg, write_plan_csv, Arrow, Shade, BLACK_REL, DRAW_REL};
pub use sweep::{
    discrete_upper_bound, geometric_p_values, save_sweep_csv, sweep, write_sweep_csv, BetaSource,
    BoundFit, Sweep, SweepConfig, SweepRecord,
};
