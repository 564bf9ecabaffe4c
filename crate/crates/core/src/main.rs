use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use linf_ot::blockapprox::{block_approximate, verify_entropy_bound, verify_winf_bound};
use linf_ot::bottleneck::solve_bottleneck;
use linf_ot::harness::{
    generate_instance, geometric_p_values, plan_svg, save_sweep_csv, sweep, sweep_svg,
    SweepConfig, INSTANCE_NAMES,
};
use linf_ot::measures::{Coupling, Instance, PlanFile, SupportSet};
use linf_ot::monotonicity::{check_cycles, rate_functions, CycleForm, VIOLATION_TOL};
use linf_ot::sinkhorn::{solve, EpsSchedule, Mode, SolverConfig, DEFAULT_MAX_ITER, DEFAULT_TOL};
use linf_ot::{Error, Result};

const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "linf-ot", version, about = "L-infinity optimal transport via entropic approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a named instance to JSON.
    Gen {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(INSTANCE_NAMES))]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimize J_{p,eps} with Sinkhorn.
    Solve {
        /// Instance name or JSON file.
        #[arg(long)]
        instance: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value = "auto")]
        mode: Mode,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long)]
        out: PathBuf,
        /// Leave the coupling out of the report.
        #[arg(long)]
        no_plan: bool,
        /// Arrow plot of the plan (planar instances only).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Exact v_inf by bottleneck search.
    Oracle {
        #[arg(long)]
        instance: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cyclical monotonicity of a plan's support.
    Check {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        instance: String,
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// `inf` for the max form, `sum` for the classical one.
        #[arg(long, default_value = "inf")]
        mode: CycleForm,
        /// Absolute mass threshold for the support.
        #[arg(long, default_value_t = 1e-9)]
        tau: f64,
    },
    /// Capped rate functions on every cell.
    Rate {
        #[arg(long)]
        instance: String,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1e-9)]
        tau: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Block approximation and its two bounds.
    Block {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        instance: String,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// v_p - v_inf over geometrically spaced p.
    Sweep {
        #[arg(long)]
        instance: String,
        #[arg(long)]
        p_min: f64,
        #[arg(long)]
        p_max: f64,
        #[arg(long, default_value_t = 25)]
        count: usize,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long)]
        target_vinf: Option<f64>,
        #[arg(long, default_value = "auto")]
        mode: Mode,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn load_instance(source: &str) -> Result<Instance> {
    if INSTANCE_NAMES.contains(&source) {
        generate_instance(source)
    } else {
        Instance::load(source)
    }
}

fn load_plan(path: &Path, instance: &Instance) -> Result<Coupling> {
    PlanFile::load(path)?.into_coupling(instance.mu.clone(), instance.nu.clone())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Gen { name, out } => {
            generate_instance(&name)?.save(&out)?;
            Ok(0)
        }
        Command::Solve {
            instance,
            p,
            eps,
            mode,
            tol,
            max_iter,
            out,
            no_plan,
            svg,
        } => {
            let inst = load_instance(&instance)?;
            let config = SolverConfig::new(p, eps)
                .with_mode(mode)
                .with_tol(tol)
                .with_max_iter(max_iter);
            let report = solve(&inst.mu, &inst.nu, &inst.cost()?, &config)?;
            let mut body = json!({
                "p": p,
                "eps": eps,
                "mode": report.mode,
                "value": report.value,
                "entropy": report.entropy,
                "iterations": report.iterations,
                "converged": report.converged,
                "marginal_errors": report.marginal_errors,
            });
            if !no_plan {
                body["plan"] = serde_json::to_value(PlanFile::from_coupling(&report.coupling))?;
            }
            write_json(&out, &body)?;
            if let Some(path) = svg {
                fs::write(path, plan_svg(&report.coupling)?)?;
            }
            println!(
                "value {:.12} after {} iterations ({})",
                report.value,
                report.iterations,
                if report.converged { "converged" } else { "not converged" }
            );
            Ok(if report.converged { 0 } else { EXIT_NOT_CONVERGED })
        }
        Command::Oracle { instance, out } => {
            let inst = load_instance(&instance)?;
            let result = solve_bottleneck(&inst.mu, &inst.nu, &inst.cost()?)?;
            let (i, j) = result.critical_pair;
            write_json(
                &out,
                &json!({
                    "value": result.value,
                    "critical_pair": {
                        "i": i,
                        "j": j,
                        "x": inst.mu.point(i),
                        "y": inst.nu.point(j),
                    },
                    "witness_support": result.witness_support(),
                }),
            )?;
            println!("v_inf {:.12}, critical pair ({i}, {j})", result.value);
            Ok(0)
        }
        Command::Check {
            plan,
            instance,
            k,
            mode,
            tau,
        } => {
            let inst = load_instance(&instance)?;
            let gamma = load_plan(&plan, &inst)?;
            let support = SupportSet::from_coupling(&gamma, tau);
            let report = check_cycles(&support, &inst.cost()?, k, mode, VIOLATION_TOL)?;
            println!("{report}");
            Ok(if report.monotone { 0 } else { EXIT_VIOLATION })
        }
        Command::Rate {
            instance,
            plan,
            k,
            tau,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let gamma = load_plan(&plan, &inst)?;
            let support = SupportSet::from_coupling(&gamma, tau);
            let (n, m) = gamma.shape();
            let queries: Vec<_> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
            let table = rate_functions(&queries, &support, &inst.cost()?, k, None)?;
            table.write_csv(BufWriter::new(File::create(out)?))?;
            Ok(0)
        }
        Command::Block {
            plan,
            instance,
            delta,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let gamma = load_plan(&plan, &inst)?;
            let ba = block_approximate(&gamma, delta)?;
            let entropy = verify_entropy_bound(&ba);
            let winf = verify_winf_bound(&ba, &gamma)?;
            write_json(
                &out,
                &json!({
                    "delta": delta,
                    "side_bound": ba.side_bound,
                    "blocks": ba.block_count(),
                    "entropy": entropy,
                    "winf": winf,
                    "plan": PlanFile::from_coupling(&ba.coupling),
                }),
            )?;
            println!(
                "entropy {:.6} <= {:.6}: {}; W_inf certificate {:.6} <= {:.6}: {}",
                entropy.entropy, entropy.bound, entropy.pass, winf.certificate, winf.target, winf.pass
            );
            Ok(if entropy.pass && winf.pass { 0 } else { EXIT_VIOLATION })
        }
        Command::Sweep {
            instance,
            p_min,
            p_max,
            count,
            eps,
            target_vinf,
            mode,
            tol,
            max_iter,
            out,
            svg,
        } => {
            let inst = load_instance(&instance)?;
            let mut config = SweepConfig::new(
                geometric_p_values(p_min, p_max, count)?,
                EpsSchedule::constant(eps),
            )
            .with_mode(mode);
            config.tol = tol;
            config.max_iter = max_iter;
            if let Some(t) = target_vinf {
                config = config.with_target(t);
            }
            let result = sweep(&inst, &config)?;
            save_sweep_csv(&result.records, &out)?;
            if let Some(path) = svg {
                fs::write(path, sweep_svg(&result.records, &result.fit)?)?;
            }
            println!(
                "v_inf {:.12} (scale {:.6}); A = {:?}, B = {:?}, beta = {:.6}",
                result.v_inf, result.scale, result.fit.a, result.fit.b, result.fit.beta
            );
            Ok(if result.all_converged() { 0 } else { EXIT_NOT_CONVERGED })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap's own usage-error code is 2, which is reserved for non-convergence
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e @ Error::NotMonotone { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
