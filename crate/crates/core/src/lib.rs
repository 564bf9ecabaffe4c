//! Entropic approximation of L-infinity optimal transport between discrete
//! measures.
//!
//! The penalized functional `J_{p,eps}(gamma) = (sum gamma c^p + eps H(gamma | mu x nu))^{1/p}`
//! is minimized by Sinkhorn scaling ([`sinkhorn`]); as `p` grows its
//! minimizers approach plans that minimize the essential supremum of the
//! cost. The exact discrete value `v_inf` comes from a bottleneck search
//! ([`bottleneck`]), and the supports of computed plans can be certified
//! with cycle checks and rate functions ([`monotonicity`]). [`blockapprox`]
//! builds block approximations, and [`harness`] holds the named figure
//! instances, convergence sweeps and plots.
//!
//! ```
//! use linf_ot::bottleneck::solve_bottleneck;
//! use linf_ot::harness::generate_instance;
//! use linf_ot::sinkhorn::{solve, SolverConfig};
//!
//! let inst = generate_instance("fig1")?;
//! let cost = inst.cost()?;
//! let report = solve(&inst.mu, &inst.nu, &cost, &SolverConfig::new(5.0, 1.0))?;
//! let v_inf = solve_bottleneck(&inst.mu, &inst.nu, &cost)?.value;
//! assert!(report.converged && report.value < v_inf);
//! # Ok::<(), linf_ot::Error>(())
//! ```
//!
//! Runnable programs live in `examples/`: `fig1_selection`, `log_domain`,
//! `bottleneck_oracle`, `monotonicity_certificate`, `rate_functions`,
//! `block_approximation`, `schedules` and `convergence_sweep`.

pub mod blockapprox;
pub mod bottleneck;
pub mod error;
pub mod harness;
pub mod measures;
pub mod monotonicity;
pub mod sinkhorn;

pub use error::{Error, Result};
