use std::path::Path;
use std::process::{Command, Output};

use demguard::formats;

fn demguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_demguard"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(o: &Output, key: &str) -> f64 {
    let text = stdout(o);
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no `{key}` in:\n{text}"));
    line.parse().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn improved_boundary_at_eleven_percent() {
    let o = demguard(&["boundary", "--attack", "improved", "--qber", "0.11"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((value(&o, "eta*") - 0.252).abs() < 0.002);
}

#[test]
fn simplified_rate_without_errors() {
    let o = demguard(&["rate", "--model", "simplified", "--qber", "0", "--eta", "0.7"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((value(&o, "R") - 0.7).abs() < 1e-12);
}

#[test]
fn infeasible_combined_attack() {
    let o = demguard(&["attack", "--kind", "combined", "--qber", "0.45", "--eta", "0.1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stderr.is_empty());
}

#[test]
fn exit_codes() {
    assert_eq!(demguard(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(demguard(&["rate", "--qber", "abc", "--eta", "1"]).status.code(), Some(2));
    assert_eq!(demguard(&["--help"]).status.code(), Some(0));
    assert_eq!(demguard(&["rate", "--qber", "0.1", "--eta", "1.5"]).status.code(), Some(3));
    assert_eq!(
        demguard(&["boundary", "--attack", "improved", "--qber", "0.2"]).status.code(),
        Some(4)
    );
    assert_eq!(
        demguard(&["boundary", "--model", "general", "--qber", "0.2"]).status.code(),
        Some(4)
    );
    let o = demguard(&["region", "--out", "/nonexistent-dir/region.csv"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn boundary_queries() {
    let o = demguard(&["boundary", "--model", "general", "--eta", "1"]);
    assert!((value(&o, "qber*") - 0.110028).abs() < 1e-5);
    let o = demguard(&["boundary", "--attack", "crossover"]);
    assert!((value(&o, "eta*") - 0.160).abs() < 0.005);
    let o = demguard(&["boundary", "--attack", "pure-faked-states", "--qber", "0.11"]);
    assert!((value(&o, "eta*") - 0.0659).abs() < 0.001);
}

#[test]
fn efficiency_csv_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = write(
        dir.path(),
        "curve.csv",
        "# worked example\nt,eta_z0,eta_z1,eta_x0,eta_x1\n0,1,0.5,1,0.5\n1,0.9,0.9,0.9,0.9\n2,0.5,1,0.5,1\n",
    );
    let o = demguard(&["eta", "--in", &fixture, "--mode", "basis-independent"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&o, "eta"), 0.5);

    let flat = write(dir.path(), "flat.csv", "t,eta_z0,eta_z1,eta_x0,eta_x1\n0,0.6,0.6,0.6,0.6\n1,0.3,0.3,0.3,0.3\n");
    assert_eq!(value(&demguard(&["eta", "--in", &flat, "--mode", "basis-independent"]), "eta"), 1.0);
    // once the time labels may mix, the loss difference between them counts
    assert_eq!(value(&demguard(&["eta", "--in", &flat, "--mode", "general"]), "eta"), 0.5);

    let neg = write(dir.path(), "neg.csv", "t,eta_z0,eta_z1,eta_x0,eta_x1\n0,-0.1,0.5,0.5,0.5\n");
    assert_eq!(demguard(&["eta", "--in", &neg]).status.code(), Some(3));

    let bad = write(dir.path(), "bad.csv", "t,eta_z0,eta_z1,eta_x0,eta_x1\n0,0.5,0.5,0.5,0.5\n1,x,0.5,0.5,0.5\n");
    let o = demguard(&["eta", "--in", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let missing = dir.path().join("missing.csv");
    let o = demguard(&["eta", "--in", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn block_model_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let identity = write(
        dir.path(),
        "id.json",
        r#"{"n": 2, "c0": [[[1,0],[0,0]],[[0,0],[1,0]]], "c1": [[[1,0],[0,0]],[[0,0],[1,0]]]}"#,
    );
    assert!((value(&demguard(&["eta", "--in", &identity]), "eta") - 1.0).abs() < 1e-12);

    let diag = write(
        dir.path(),
        "diag.json",
        r#"{"n": 2, "c0": [[[1,0],[0,0]],[[0,0],[1,0]]], "c1": [[[1,0],[0,0]],[[0,0],[0.5,0]]]}"#,
    );
    let o = demguard(&["eta", "--in", &diag, "--trials", "500"]);
    assert!((value(&o, "eta") - 0.25).abs() < 1e-12);
    assert!((value(&o, "eta_brute_force") - 0.25).abs() < 1e-3);

    let ragged = write(
        dir.path(),
        "ragged.json",
        r#"{"n": 2, "c0": [[[1,0],[0,0]],[[0,0]]], "c1": [[[1,0],[0,0]],[[0,0],[1,0]]]}"#,
    );
    assert_eq!(demguard(&["eta", "--in", &ragged]).status.code(), Some(2));
    let wrong_n = write(dir.path(), "n.json", r#"{"n": 3, "c0": [[[1,0]]], "c1": [[[1,0]]]}"#);
    assert_eq!(demguard(&["eta", "--in", &wrong_n]).status.code(), Some(2));
}

#[test]
fn region_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("region.csv");
    let o = demguard(&["region", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("qber,eta_combined,eta_improved,eta_bound_general,eta_bound_single_photon\n"));
    let rows = formats::parse_region_csv(&text).unwrap();
    assert_eq!(rows.len(), 50);
    assert!(rows.windows(2).all(|w| w[0].qber < w[1].qber));
    let r = rows.iter().find(|r| r.qber == 0.11).unwrap();
    assert!((r.eta_combined.unwrap() - 0.215).abs() < 0.002);
    assert!((r.eta_improved.unwrap() - 0.252).abs() < 0.002);
    // rows past the proof threshold have no general bound
    assert!(rows.iter().filter(|r| r.qber > 0.111).all(|r| r.eta_bound_general.is_none()));
    assert_eq!(formats::render_region_csv(&rows), text);

    let manifest = std::fs::read_to_string(dir.path().join("region.csv.manifest")).unwrap();
    let m = demguard::RunManifest::parse(&manifest);
    assert_eq!(m.get("subcommand"), Some("region"));
    assert_eq!(m.get("grid"), Some(demguard::DEFAULT_GRID));
    assert!(m.get("tool_version").is_some());
    assert!(m.get("timestamp").is_some());
    assert!(m.get("boundary_tol").is_some());
}

#[test]
fn simulation_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.txt");
    let args = ["simulate", "--attack", "faked-states", "--eta", "0.5", "--trials", "20000", "--seed", "7"];
    let a = demguard(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", out.to_str().unwrap()]);
    let b = demguard(&with_out);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(value(&a, "qber"), value(&b, "qber"));
    let m = demguard::RunManifest::parse(&std::fs::read_to_string(dir.path().join("sim.txt.manifest")).unwrap());
    assert_eq!(m.get("seed"), Some("7"));
    assert_eq!(m.get("trials"), Some("20000"));

    let o = demguard(&["simulate", "--attack", "time-shift", "--eta", "0.5", "--trials", "20000"]);
    assert_eq!(value(&o, "errors"), 0.0);
}

#[test]
fn verify_models() {
    for model in ["vacuum-unitary", "vacuum-loss", "vacuum-violating", "discrimination"] {
        let o = demguard(&["verify", "--model", model]);
        assert_eq!(o.status.code(), Some(0), "{model}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn formats_round_trip_bit_exactly() {
    use demguard::RegionRow;
    let awkward = [0.1, 1.0 / 3.0, 2.0f64.sqrt() / 7.0, 1e-17, 0.30000000000000004, 5e-324];
    let curve = demguard_core::channels::EfficiencyCurve::basis_independent(&awkward, &awkward[..].iter().rev().copied().collect::<Vec<_>>()).unwrap();
    let back = formats::parse_efficiency_csv(&formats::render_efficiency_csv(&curve)).unwrap();
    assert_eq!(back, curve);

    let rows: Vec<RegionRow> = awkward
        .iter()
        .map(|&x| RegionRow {
            qber: x,
            eta_combined: Some(x / 3.0),
            eta_improved: None,
            eta_bound_general: Some(1.0 - x),
            eta_bound_single_photon: Some(x.sqrt()),
        })
        .collect();
    let back = formats::parse_region_csv(&formats::render_region_csv(&rows)).unwrap();
    assert_eq!(back, rows);
    for (a, b) in back.iter().zip(&rows) {
        assert_eq!(a.qber.to_bits(), b.qber.to_bits());
    }

    use demguard_core::channels::{BlockModel, ComplexMatrix};
    use num_complex::Complex64;
    let m = |s: f64| {
        ComplexMatrix::from_rows(&[
            vec![Complex64::new(s, 1.0 / 7.0), Complex64::new(-0.1, 1e-300)],
            vec![Complex64::new(2.0f64.sqrt(), 0.0), Complex64::new(1.0 / 3.0, -s)],
        ])
        .unwrap()
    };
    let model = BlockModel::new(m(0.7), m(1.3)).unwrap();
    let back = formats::parse_block_model(&formats::render_block_model(&model)).unwrap();
    assert_eq!(back, model);
}

#[test]
fn decoy_rate_flags() {
    let o = demguard(&["rate", "--model", "decoy", "--e-z", "0.02", "--eta-z", "0.8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let single = demguard(&["rate", "--model", "simplified", "--qber", "0.02", "--eta", "0.8"]);
    // ideal single-photon inputs reduce to the simplified rate
    assert!((value(&o, "R_z") - value(&single, "R")).abs() < 1e-12);
    assert_eq!(value(&o, "R_z"), value(&o, "R_x"));
}
