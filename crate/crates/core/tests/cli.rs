use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn linf_ot(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linf-ot"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn gen_and_solve_round_trip() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    assert_eq!(linf_ot(dir, &["gen", "--name", "fig1", "--out", "fig1.json"]).status.code(), Some(0));
    let out = linf_ot(
        dir,
        &["solve", "--instance", "fig1.json", "--p", "5", "--eps", "1", "--out", "r.json", "--svg", "r.svg"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(dir, "r.json");
    assert_eq!(report["converged"], true);
    assert_eq!(report["iterations"], 344);
    assert_eq!(report["mode"], "standard");
    assert_eq!(report["plan"]["rows"], 8);
    let svg = std::fs::read_to_string(dir.join("r.svg")).unwrap();
    assert_eq!(svg.matches("stroke=\"black\"").count(), 16);

    linf_ot(dir, &["solve", "--instance", "fig1", "--p", "5", "--eps", "1", "--out", "bare.json", "--no-plan"]);
    assert!(json(dir, "bare.json").get("plan").is_none());
}

#[test]
fn non_convergence_exits_two() {
    let tmp = TempDir::new().unwrap();
    let out = linf_ot(
        tmp.path(),
        &["solve", "--instance", "fig1", "--p", "5", "--eps", "1", "--max-iter", "5", "--out", "r.json"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(tmp.path(), "r.json")["converged"], false);
}

#[test]
fn oracle_reports_critical_pair() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(linf_ot(tmp.path(), &["oracle", "--instance", "fig7", "--out", "o.json"]).status.code(), Some(0));
    let o = json(tmp.path(), "o.json");
    assert!((o["value"].as_f64().unwrap() - 1.38647347).abs() < 1e-6);
    assert_eq!(o["critical_pair"]["x"], serde_json::json!([-0.25, -0.1]));
    assert_eq!(o["witness_support"].as_array().unwrap().len(), 8);
}

#[test]
fn check_exit_codes_and_witness() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    linf_ot(dir, &["solve", "--instance", "fig1", "--p", "5", "--eps", "1", "--out", "p5.json"]);
    let bad = linf_ot(dir, &["check", "--plan", "p5.json", "--instance", "fig1", "--k", "4"]);
    assert_eq!(bad.status.code(), Some(3));
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.contains("fails") && text.contains("worst cycle [(1, 0), (2, 1)]"), "{text}");

    let coarse = linf_ot(
        dir,
        &["check", "--plan", "p5.json", "--instance", "fig1", "--k", "4", "--tau", "0.01"],
    );
    assert_eq!(coarse.status.code(), Some(0));
    let sum = linf_ot(dir, &["check", "--plan", "p5.json", "--instance", "fig1", "--mode", "sum", "--k", "3"]);
    assert!(sum.status.code().is_some());
}

#[test]
fn rate_rejects_non_monotone_support() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    linf_ot(dir, &["solve", "--instance", "fig1", "--p", "5", "--eps", "1", "--out", "p5.json"]);
    let out = linf_ot(dir, &["rate", "--instance", "fig1", "--plan", "p5.json", "--out", "rates.csv"]);
    assert_eq!(out.status.code(), Some(3));
    let out = linf_ot(
        dir,
        &["rate", "--instance", "fig1", "--plan", "p5.json", "--tau", "0.005", "--out", "rates.csv"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("rates.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("i,j,tilde_i_inf,i_inf"));
    assert_eq!(csv.lines().count(), 33);
}

#[test]
fn block_report() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    linf_ot(dir, &["solve", "--instance", "fig7", "--p", "4", "--eps", "0.05", "--out", "p.json"]);
    let out = linf_ot(dir, &["block", "--plan", "p.json", "--instance", "fig7", "--delta", "0.2", "--out", "b.json"]);
    assert_eq!(out.status.code(), Some(0));
    let b = json(dir, "b.json");
    assert_eq!(b["entropy"]["pass"], true);
    assert_eq!(b["winf"]["pass"], true);
    assert!((b["winf"]["target"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    let bad = linf_ot(dir, &["block", "--plan", "p.json", "--instance", "fig7", "--delta", "1.5", "--out", "x.json"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn sweep_outputs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let args = |out: &'static str| {
        [
            "sweep", "--instance", "fig7", "--p-min", "10", "--p-max", "172", "--count", "8", "--eps", "250000",
            "--target-vinf", "1.052460609", "--mode", "log", "--out", out,
        ]
    };
    assert_eq!(linf_ot(dir, &args("a.csv")).status.code(), Some(0));
    let mut with_svg = args("b.csv").to_vec();
    with_svg.extend(["--svg", "s.svg"]);
    assert_eq!(linf_ot(dir, &with_svg).status.code(), Some(0));
    let a = std::fs::read(dir.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next(), Some("p,eps,v_p,gap,iterations"));
    assert_eq!(text.lines().count(), 9);
    assert!(std::fs::read_to_string(dir.join("s.svg")).unwrap().contains("<polyline"));
}

#[test]
fn bad_inputs_fail_cleanly() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    assert_eq!(linf_ot(dir, &["gen", "--name", "fig9", "--out", "x.json"]).status.code(), Some(1));
    let missing = linf_ot(dir, &["oracle", "--instance", "nope.json", "--out", "o.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
}
