use std::path::Path;
use std::process::{Command, Output};

use dirtrace_cli::{Command as Cmd, RunConfig, Thetas};
use proptest::prelude::*;

fn dirtrace(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirtrace")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn cantor_export_then_measure() {
    let dir = tempfile::tempdir().unwrap();
    let o = dirtrace(dir.path(), &["gallery", "cantor", "--rho", "0.25", "--depth", "10", "--emit", "c.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = dirtrace(dir.path(), &["measure", "--domain", "c.json", "--theta", "+1", "--mode", "exact", "--out", "m.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("m.csv")).unwrap();
    let total: f64 = r.records().map(|rec| rec.unwrap()[2].parse::<f64>().unwrap()).sum();
    // truncated mass with ρ = 1/4, K = 10
    let expected = 0.5 - 0.25 * 0.5f64.powi(11) / 0.5;
    assert!((total - expected).abs() < 1e-12, "{total} vs {expected}");
}

#[test]
fn bounds_suite_on_square_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = dirtrace(dir.path(), &["verify", "--suite", "bounds", "--domain", "square", "--field", "sin(pi*x1)", "--thetas", "0deg", "--out", "report.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let reports: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(reports.len(), 4);
    assert!(reports.iter().all(|r| r["pass"] == true));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 4);
}

#[test]
fn fisund_consistency_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let o = dirtrace(dir.path(), &["verify", "--suite", "consistency", "--domain", "fisund", "--field", "u", "--thetas", "1;-1", "--out", "r.json"]);
    assert_eq!(code(&o), 1);
    let text = std::fs::read_to_string(dir.path().join("r.json")).unwrap();
    assert!(text.contains("inconsistent") && text.contains("[1.0]"), "{text}");
}

#[test]
fn trace_from_measure_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let o = dirtrace(dir.path(), &["measure", "--domain", "fisdeuxd", "--theta", "1,0", "--out", "nodes.csv"]);
    assert_eq!(code(&o), 0);
    let o = dirtrace(dir.path(), &["trace", "--domain", "fisdeuxd", "--field", "u", "--theta", "1,0", "--nodes", "nodes.csv", "--out", "t.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("t.csv")).unwrap();
    let mut on_slit = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let (x, y, v): (f64, f64, f64) = (rec[0].parse().unwrap(), rec[1].parse().unwrap(), rec[2].parse().unwrap());
        if (x - 0.5).abs() < 1e-12 && y > 0.0 {
            assert!((v + y).abs() < 1e-9);
            on_slit += 1;
        }
    }
    assert!(on_slit > 0);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let o = dirtrace(
            dir.path(),
            &["measure", "--domain", "cusp", "--theta", "60deg", "--mode", "mc", "--samples", "20000", "--seed", "5", "--json", "--out", name],
        );
        assert_eq!(code(&o), 0);
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&dirtrace(dir.path(), &["measure", "--domain", "square", "--theta", "0,0"])), 2);
    assert_eq!(code(&dirtrace(dir.path(), &["measure", "--domain", "square"])), 2);
    assert_eq!(code(&dirtrace(dir.path(), &["frobnicate"])), 2);
    assert_eq!(code(&dirtrace(dir.path(), &["measure", "--domain", "missing.json", "--theta", "0deg"])), 3);
    assert_eq!(code(&dirtrace(dir.path(), &["measure", "--domain", "nowhere", "--theta", "0deg"])), 2);
    assert_eq!(code(&dirtrace(dir.path(), &["measure", "--domain", "square", "--theta", "0deg", "--out", "no/such/dir/m.csv"])), 3);
    assert_eq!(code(&dirtrace(dir.path(), &["--help"])), 0);
}

#[test]
fn gallery_check_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = dirtrace(dir.path(), &["gallery", "fisund", "--check", "--out", "o.json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().filter(|l| l.starts_with("PASS")).count(), 4);
}

#[test]
fn theta_grammar() {
    let t: Thetas = "0,90deg".parse().unwrap();
    assert_eq!(t.0.len(), 2);
    assert!((t.0[1][0]).abs() < 1e-15 && t.0[1][1] == 1.0);
    assert_eq!("1,0;0,1".parse::<Thetas>().unwrap().0, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert_eq!("+1".parse::<Thetas>().unwrap().0, vec![vec![1.0]]);
    assert!("0,0".parse::<Thetas>().is_err());
    assert!("1,0;1".parse::<Thetas>().is_err());
    assert!("".parse::<Thetas>().is_err());
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, (-1e6..1e6f64).prop_map(|v| v * 1e-12)]
}

fn thetas() -> impl Strategy<Value = Thetas> {
    (1usize..=3)
        .prop_flat_map(|d| prop::collection::vec(prop::collection::vec(finite(), d), 1..4))
        .prop_filter_map("zero direction", |l| l.iter().all(|c| c.iter().any(|v| *v != 0.0)).then_some(Thetas(l)))
}

fn text() -> impl Strategy<Value = String> {
    "[a-z0-9_ ./*+^()-]{1,16}"
}

fn config() -> impl Strategy<Value = RunConfig> {
    use dirtrace_cli::*;
    let sampling = (prop_oneof![Just(Mode::Exact), Just(Mode::Mc)], 1usize..10_000_000, any::<u64>()).prop_map(|(mode, samples, seed)| SamplingArgs {
        mode,
        samples,
        seed,
    });
    let path = prop::option::of("[a-z]{1,8}\\.(json|csv)".prop_map(std::path::PathBuf::from));
    let gallery = (
        prop::sample::select(dirtrace_core::gallery::NAMES.to_vec()),
        prop::option::of(finite()),
        prop::option::of(any::<u32>()),
        prop::option::of(finite()),
        prop::option::of(any::<u32>()),
        path.clone(),
        any::<bool>(),
        path.clone(),
    )
        .prop_map(|(name, rho, depth, alpha, kmax, emit, check, out)| {
            Cmd::Gallery(GalleryArgs { name: name.into(), rho, depth, alpha, kmax, emit, check, out })
        });
    let measure = (text(), thetas(), sampling.clone(), path.clone(), any::<bool>(), 1usize..9, 1usize..17)
        .prop_map(|(domain, theta, sampling, out, json, panels, order)| Cmd::Measure(MeasureArgs { domain, theta, sampling, out, json, panels, order }));
    let trace = (text(), text(), thetas(), path.clone(), path.clone(), 1usize..9, 1usize..17)
        .prop_map(|(domain, field, theta, nodes, out, panels, order)| Cmd::Trace(TraceArgs { domain, field, theta, nodes, out, panels, order }));
    let suite = prop_oneof![Just(Suite::Default), Just(Suite::Green), Just(Suite::Bounds), Just(Suite::Consistency)];
    let verify = (suite, text(), prop::collection::vec(text(), 1..4), thetas(), sampling, prop::option::of(finite()), path)
        .prop_map(|(suite, domain, field, thetas, sampling, tol, out)| Cmd::Verify(VerifyArgs { suite, domain, field, thetas, sampling, tol, out }));
    prop_oneof![gallery, measure, trace, verify].prop_map(|command| RunConfig { command })
}

proptest! {
    #[test]
    fn args_round_trip(cfg in config()) {
        use clap::Parser;
        let back = RunConfig::try_parse_from(cfg.to_args()).unwrap();
        prop_assert_eq!(&back, &cfg);
        let json = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
    }
}

#[test]
fn job_seeds_are_stable() {
    assert_eq!(dirtrace_cli::job_seed(1, "theta0"), dirtrace_cli::job_seed(1, "theta0"));
    assert_ne!(dirtrace_cli::job_seed(1, "theta0"), dirtrace_cli::job_seed(1, "theta1"));
    assert_ne!(dirtrace_cli::job_seed(1, "theta0"), dirtrace_cli::job_seed(2, "theta0"));
}
