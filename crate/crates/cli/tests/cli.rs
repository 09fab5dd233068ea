use std::path::Path;
use std::process::Command;

use qrseal_cli::config::ScenarioConfig;
use qrseal_cli::report::{Results, RunReport, Value};
use tempfile::TempDir;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("qrseal").chain(args.iter().copied());
    let code = qrseal_cli::main_with_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_report(dir: &Path) -> RunReport {
    RunReport::from_json(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn without_wall_time(mut r: RunReport) -> String {
    r.provenance.wall_time_s = 0.0;
    r.to_json()
}

#[test]
fn unknown_key_is_rejected_without_output() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"scenario": {"kind": "paper-table"}, "colour": "blue"}"#,
    );
    let (code, _, err) = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown field `colour`"), "{err}");
    assert!(err.contains("line 1"), "{err}");
    assert!(!out.exists());
}

#[test]
fn unknown_nested_key_and_bad_parameter_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    for body in [
        r#"{"scenario": {"kind": "device", "device": {"builtin": {"name": "weak_family", "lambda": 0.2, "x": 1}}}}"#,
        r#"{"scenario": {"kind": "device", "device": {"builtin": {"name": "weak_family", "lambda": 0.7}}}}"#,
        r#"{"scenario": {"kind": "device", "device": {"builtin": {"name": "breidbart"}}}}"#,
        r#"{"scenario": {"kind": "frontier", "families": [{"name": "weak_family"}], "grid": [5, 5]}}"#,
        r#"{"scenario": {"kind": "paper-table"}, "sampling": {"workers": 0}}"#,
    ] {
        let cfg = write_config(tmp.path(), "bad.json", body);
        let (code, _, err) = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code, 1, "{body}: {err}");
        assert!(!out.exists());
    }
}

#[test]
fn paper_table_values() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "t.json", r#"{"scenario": {"kind": "paper-table"}}"#);
    let out = tmp.path().join("out");
    let (code, _, err) = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let report = read_report(&out);
    let Results::PaperTable { rows, quantum_seal } = report.results else {
        panic!("wrong result kind")
    };
    let get = |label: &str| rows.iter().find(|r| r.label == label).unwrap_or_else(|| panic!("{label}"));
    let v = |x: Option<Value>| x.unwrap().value();
    let close = |a: f64, b: f64| assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    for d in 2..=6 {
        let r = get(&format!("do_nothing d={d}"));
        close(v(r.f), 1.0);
        close(v(r.g), 1.0 / d as f64);
        let r = get(&format!("measure_reprepare d={d}"));
        close(v(r.f), 2.0 / (d as f64 + 1.0));
        close(v(r.g), 2.0 / (d as f64 + 1.0));
    }
    let b = get("breidbart on bb84");
    close(v(b.g), 0.8535533905932737);
    close(v(b.f), 0.75);
    close(v(b.alpha), 0.8535533905932737);
    close(v(b.beta), 0.25);
    let s = get("simplified");
    close(v(s.f), 0.625);
    close(v(s.g), 0.75);
    let q = get("optimal_qbs");
    assert!(q.f.is_none());
    close(v(q.alpha), 0.75);
    close(v(q.beta), 0.375);
    let p = get("perfect_seal");
    close(v(p.alpha), 1.0);
    close(v(p.beta), 0.0);
    assert_eq!(quantum_seal.len(), 7);
    for s in &quantum_seal {
        let d = s.data.dim as f64;
        close(s.data.beta, (d - 1.0) / (d + 1.0));
    }

    let csv = std::fs::read_to_string(out.join("paper_table.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("label,d,f,g,alpha,beta"));
    assert_eq!(lines.count(), rows.len());
    let qbs: Vec<_> = csv.lines().find(|l| l.starts_with("optimal_qbs,")).unwrap().split(',').collect();
    assert_eq!(&qbs[..4], ["optimal_qbs", "2", "", ""]);
    close(qbs[4].parse().unwrap(), 0.75);
    close(qbs[5].parse().unwrap(), 0.375);
}

#[test]
fn weak_frontier_csv_saturates() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "f.json",
        r#"{"scenario": {"kind": "frontier", "families": [{"name": "weak_family"}], "grid": [101],
            "f_min": [0.7, 0.9, 1.0]}}"#,
    );
    let out = tmp.path().join("out");
    let (code, _, err) = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let mut rdr = csv::Reader::from_path(out.join("frontier_weak_family.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["family", "lambda", "f", "g", "saturation", "envelope"]
    );
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 101);
    for r in &rows {
        let sat: f64 = r[4].parse().unwrap();
        assert!(sat <= 1e-10, "{sat}");
        // The closed form, recomputed from the printed parameter.
        let lambda: f64 = r[1].parse().unwrap();
        let f: f64 = r[2].parse().unwrap();
        let g: f64 = r[3].parse().unwrap();
        assert!((f - (2.0 + 2.0 * (0.25 - lambda * lambda).sqrt()) / 3.0).abs() < 1e-12);
        assert!((g - (0.5 + lambda / 3.0)).abs() < 1e-12);
        assert_eq!(r[2].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    }
    let report = read_report(&out);
    let Results::Frontier(fr) = report.results else { panic!() };
    assert_eq!(fr.optima.len(), 3);
    for o in &fr.optima {
        let opt = o.optimum.as_ref().unwrap();
        let x = (3.0 * o.f_min - 2.0) / 2.0;
        let want = 0.5 + (0.25 - x * x).max(0.0).sqrt() / 3.0;
        assert!((opt.data.point.g - want).abs() <= 1e-5);
    }
    assert!(out.join("region_d2.csv").exists());
}

#[test]
fn classical_frontier_marks_violations_and_infeasible_floors() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "f.json",
        r#"{"scenario": {"kind": "frontier", "families": [{"name": "weak_family"}, {"name": "breidbart_angle"}],
            "grid": [41], "f_min": [0.9]}, "assert_bounds": true}"#,
    );
    let out = tmp.path().join("out");
    let (code, stdout, _) = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stdout.contains("violated: region d=2 breidbart_angle"));
    let report = read_report(&out);
    let Results::Frontier(fr) = report.results else { panic!() };
    let classical = fr.optima.iter().find(|o| o.family == "breidbart_angle").unwrap();
    assert!(classical.optimum.is_none() && classical.infeasible.is_some());
}

#[test]
fn report_round_trips_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "d.json",
        r#"{"scenario": {"kind": "device", "device": {"builtin": {"name": "random", "d": 3, "outcomes": 3, "seed": 9}},
            "monte_carlo": true}, "sampling": {"n": 20000, "seed": 5, "workers": 3}}"#,
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]).0, 0);
    assert_eq!(run(&["run", "--config", &cfg, "--out", b.to_str().unwrap()]).0, 0);

    let text = std::fs::read_to_string(a.join("report.json")).unwrap();
    let report = RunReport::from_json(&text).unwrap();
    assert_eq!(report.to_json(), text);

    let (ra, rb) = (read_report(&a), read_report(&b));
    // Output directories differ; everything else must match byte for byte.
    let normalise = |mut r: RunReport| {
        r.config.output.dir = None;
        without_wall_time(r)
    };
    assert_eq!(normalise(ra.clone()), normalise(rb));

    let Results::Device(d) = ra.results else { panic!() };
    let mc = d.monte_carlo.unwrap();
    match (mc.f, d.exact.f) {
        (Value::Mc { value, samples, std_err }, Value::Exact { value: exact }) => {
            assert_eq!(samples, 20000);
            assert!(std_err > 0.0);
            assert!((value - exact).abs() <= 4.0 * std_err);
        }
        other => panic!("unexpected modes {other:?}"),
    }

    let c = run(&["run", "--config", &cfg, "--out", a.to_str().unwrap(), "--seed", "6"]);
    assert_eq!(c.0, 0);
    let changed = read_report(&a);
    assert_eq!(changed.provenance.seed, 6);
    let Results::Device(d6) = changed.results else { panic!() };
    assert_eq!(d6.exact, d.exact);
    assert_ne!(d6.monte_carlo.unwrap().f, mc.f);
}

#[test]
fn inline_device_with_complex_entries() {
    // Hadamard-basis measurement written out by hand.
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let body = format!(
        r#"{{"scenario": {{"kind": "device",
            "device": {{"inline": {{
                "instrument": [
                    {{"rows": 2, "cols": 2, "entries": [[0.5, 0], [0.5, 0], [0.5, 0], [0.5, 0]]}},
                    {{"rows": 2, "cols": 2, "entries": [[0.5, 0], [-0.5, 0], [-0.5, 0], [0.5, 0]]}}
                ],
                "rule": {{"quantum": {{"estimates": [[[{h}, 0], [{h}, 0]], [[{h}, 0], [-{h}, 0]]]}}}}
            }}}}}}}}"#
    );
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "i.json", &body);
    let (code, stdout, err) = run(&["run", "--config", &cfg]);
    assert_eq!(code, 0, "{err}");
    let report = RunReport::from_json(&stdout).unwrap();
    let Results::Device(d) = report.results else { panic!() };
    assert!((d.exact.f.value() - 2.0 / 3.0).abs() < 1e-12);
    assert!((d.exact.g.value() - 2.0 / 3.0).abs() < 1e-12);

    // An incomplete instrument is a config error.
    let bad = body.replace("[[0.5, 0], [-0.5, 0], [-0.5, 0], [0.5, 0]]", "[[0.5, 0], [0, 0], [0, 0], [0.5, 0]]");
    let cfg = write_config(tmp.path(), "bad.json", &bad);
    let (code, _, err) = run(&["run", "--config", &cfg]);
    assert_eq!(code, 1);
    assert!(err.contains("complete"), "{err}");
}

#[test]
fn seal_bridge_and_bounds_scenarios() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        (r#"{"scenario": {"kind": "seal", "seal": {"builtin": {"name": "optimal_qbs"}}}, "assert_bounds": true}"#, 0),
        (r#"{"scenario": {"kind": "bridge", "seal": {"builtin": {"name": "simplified_seal"}}}}"#, 0),
        (r#"{"scenario": {"kind": "bridge", "seal": {"builtin": {"name": "optimal_qbs"}}}}"#, 1),
        (
            r#"{"scenario": {"kind": "bridge", "device": {"builtin": {"name": "breidbart"}},
                "encoding": {"builtin": {"name": "bb84"}}}}"#,
            0,
        ),
        (
            r#"{"scenario": {"kind": "bounds", "point": {"type": "tradeoff", "f": 0.75, "g": 0.85}, "d": 2},
                "assert_bounds": true}"#,
            2,
        ),
        (
            r#"{"scenario": {"kind": "bounds", "point": {"type": "seal", "alpha": 0.75, "beta": 0.375}, "d": 2,
                "bounds": ["beta_half", "alpha_beta_nine_eighths"]}, "assert_bounds": true}"#,
            0,
        ),
    ];
    for (body, want) in cases {
        let cfg = write_config(tmp.path(), "c.json", body);
        let (code, stdout, err) = run(&["run", "--config", &cfg]);
        assert_eq!(code, want, "{body}\n{err}");
        if want != 1 {
            RunReport::from_json(stdout.split("violated:").next().unwrap()).unwrap();
        }
    }
}

#[test]
fn verify_all_tight_mc_tolerance_is_flagged_as_tolerance() {
    let (code, stdout, _) = run(&["verify-all", "--samples", "2000", "--tol-mc", "1e-15"]);
    assert_eq!(code, 2);
    let lines: Vec<_> = stdout.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert_eq!(lines.len(), 11);
    for id in [3, 10] {
        let l = lines[id - 1];
        assert!(l.starts_with("FAIL") && l.contains("tolerance") && !l.contains("correctness"), "{l}");
    }
    for id in [1, 2, 4, 5, 6, 7, 8, 9, 11] {
        assert!(lines[id - 1].starts_with("PASS"), "{}", lines[id - 1]);
    }
}

#[test]
fn verify_all_seed_leaves_exact_criteria_unchanged() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&["verify-all", "--samples", "2000", "--out", a.to_str().unwrap()]).0, 0);
    assert_eq!(
        run(&["verify-all", "--samples", "2000", "--seed", "99", "--out", b.to_str().unwrap()]).0,
        0
    );
    let (Results::VerifyAll(ra), Results::VerifyAll(rb)) = (read_report(&a).results, read_report(&b).results) else {
        panic!()
    };
    for (x, y) in ra.data.criteria.iter().zip(&rb.data.criteria) {
        if x.mode == qrseal::verify::CriterionMode::Exact {
            assert_eq!(serde_json::to_string(x).unwrap(), serde_json::to_string(y).unwrap());
        }
    }
}

#[test]
fn binary_exit_codes_and_subcommands() {
    let bin = env!("CARGO_BIN_EXE_qrseal");
    let o = Command::new(bin).arg("list-builtins").output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("breidbart"));
    let o = Command::new(bin).args(["describe", "optimal_qbs"]).output().unwrap();
    assert!(o.status.success());
    let o = Command::new(bin).args(["describe", "nonsense"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(bin).args(["run", "--config", "/nonexistent.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_round_trips() {
    let text = r#"{"scenario": {"kind": "frontier", "families": [{"name": "diagonal_weak", "d": 3},
        {"name": "basis_angle", "encoding": {"name": "simplified"}}], "grid": [11]},
        "sampling": {"n": 10, "seed": 1, "workers": 2}, "tolerances": {"exact": 1e-9, "mc_sigmas": 3.0}}"#;
    let cfg = ScenarioConfig::from_json(text).unwrap();
    let again = ScenarioConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(cfg, again);
}
