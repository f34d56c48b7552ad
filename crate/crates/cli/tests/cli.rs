use std::process::Command;

use stl_cli::report::{Report, Rule, SCHEMA};
use stl_cli::{run, Outcome};

fn stl(args: &str) -> Outcome {
    let mut v = vec!["stl".to_string()];
    v.extend(args.split_whitespace().map(String::from));
    run(v)
}

fn json(args: &str) -> (i32, Report) {
    let o = stl(&format!("{args} --json"));
    let r: Report = serde_json::from_str(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}{}", o.stdout, o.stderr));
    (o.code, r)
}

fn check<'a>(r: &'a Report, id: &str) -> &'a stl_cli::report::Check {
    r.checks.iter().find(|c| c.id == id).unwrap_or_else(|| panic!("no check {id}"))
}

fn strip_wall_time(s: &str) -> String {
    s.lines().filter(|l| !l.contains("\"wall_time_s\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn sphere_analysis_reports_field_equation_failure() {
    let (code, r) = json("analyze-connection --preset sphere");
    assert_eq!(r.schema, SCHEMA);
    assert!(check(&r, "weyl").max_residual.unwrap() < 1e-12);
    assert!(check(&r, "symplectic").max_residual.unwrap() < 1e-12);
    assert!(check(&r, "torsion").pass);
    let fe = check(&r, "field_equations");
    assert!(!fe.pass && fe.max_residual.unwrap() > 1.0);
    assert_eq!(code, 1);
    assert!(!r.pass);
}

#[test]
fn trivial_and_log_example_analysis_pass() {
    for p in ["trivial", "log_example", "flat_ti"] {
        let (code, r) = json(&format!("analyze-connection --preset {p}"));
        assert_eq!(code, 0, "{p}");
        assert!(r.pass && r.checks.iter().all(|c| c.pass));
        assert_eq!(r.values["flat"], serde_json::json!(true));
    }
}

#[test]
fn integrability_of_trivial() {
    let (code, r) = json("check-integrability --preset trivial --samples 40");
    assert_eq!(code, 0);
    assert!(check(&r, "integrability").max_residual.unwrap() < 1e-12);
    assert!(check(&r, "nijenhuis").max_residual.unwrap() < 1e-6);
}

#[test]
fn flat_solve_on_curve() {
    let (code, r) = json("flat-solve --abcd 1,0,0,0");
    assert_eq!(code, 0);
    assert_eq!(r.values["on_curve"], serde_json::json!(true));
    assert_eq!(r.values["sigma"], serde_json::json!("sigma1 = x1; sigma2 = x2 + 0.5*x1^2"));
    assert!(check(&r, "pullback").pass && check(&r, "jacobian_identity").pass);
    let (code, r) = json("flat-solve --abcd 1,-2,4,-8");
    assert_eq!(code, 0, "{:?}", r.checks);
}

#[test]
fn flat_solve_off_curve_fails_with_identified_check() {
    let o = stl("flat-solve --abcd 1,1,0,0");
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("on_curve"));
    let (_, r) = json("flat-solve --abcd 1,1,0,0");
    assert!(check(&r, "sigma").error.as_deref().unwrap().contains("not flat"));
}

#[test]
fn json_is_deterministic_given_seed() {
    let a = stl("metric-report --preset sphere --samples 8 --json");
    let b = stl("metric-report --preset sphere --samples 8 --json");
    assert_eq!(strip_wall_time(&a.stdout), strip_wall_time(&b.stdout));
    let c = stl("metric-report --preset sphere --samples 8 --json --seed 7");
    assert_ne!(strip_wall_time(&a.stdout), strip_wall_time(&c.stdout));
}

#[test]
fn tol_scales_and_echoes_thresholds() {
    let (_, a) = json("analyze-connection --preset trivial --samples 5");
    let (_, b) = json("analyze-connection --preset trivial --samples 5 --tol 10");
    assert_eq!(b.tol, 10.0);
    for (x, y) in a.checks.iter().zip(&b.checks) {
        assert_eq!(x.id, y.id);
        if y.rule != Rule::AtLeast {
            assert!((y.threshold - 10.0 * x.threshold).abs() <= 1e-12 * y.threshold.abs());
        }
        assert_eq!(b.tolerances[&y.id].effective, y.threshold);
    }
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        "frobnicate",
        "analyze-connection",
        "analyze-connection --preset nowhere",
        "analyze-connection --preset trivial --conn x.json",
        "analyze-connection --preset trivial --tol 0",
        "analyze-connection --preset trivial --samples 0",
        "flat-solve --abcd 1,2",
        "holo-residual --preset trivial",
        "levi-scan --base-grid 3",
        "levi-scan --wmax 0.99",
        "analyze-connection --conn /nonexistent/spec.json",
    ] {
        let o = stl(args);
        assert_eq!(o.code, 2, "{args}: {}", o.stderr);
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(stl("--help").code, 0);
}

#[test]
fn connection_files() {
    let dir = std::env::temp_dir().join(format!("stl-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let j = dir.join("flat.json");
    std::fs::write(&j, r#"{"n":1, "kind":"real_coeffs", "a":"0", "b":"-1/(2*x)", "c":"0", "d":"x", "domain":"x > 0", "sample_box":[[0.5,3],[-2,2]]}"#).unwrap();
    let (code, r) = json(&format!("analyze-connection --conn {}", j.display()));
    assert_eq!(code, 0, "{:?}", r.checks);
    assert_eq!(r.input.spec.as_ref().unwrap().kind, "real_coeffs");
    let k = dir.join("sphere.txt");
    std::fs::write(&k, "kind = alpha_beta\nalpha = -2*zb/(1+abs2(z))\nbeta = 0\n").unwrap();
    let (code, r) = json(&format!("twistor-acs --conn {} --samples 20", k.display()));
    assert_eq!(code, 0);
    assert!(check(&r, "cubic").pass);
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"kind":"alpha_beta", "alpha":"0", "beta":"0", "extra":1}"#).unwrap();
    assert_eq!(stl(&format!("analyze-connection --conn {}", bad.display())).code, 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn holomorphy_examples() {
    let (code, r) = json("holo-residual --preset trivial --f w*zb-z");
    assert_eq!(code, 0);
    assert!(check(&r, "holomorphic").max_residual.unwrap() < 1e-12);
    assert_eq!(json("holo-residual --preset trivial --f w").0, 0);
    let (code, r) = json("holo-residual --preset trivial --f z");
    assert_eq!(code, 1);
    assert!(check(&r, "holomorphic").max_residual.unwrap() > 0.5);
    assert_eq!(json("holo-residual --preset trivial --section 0.5*i").0, 0);
}

#[test]
fn twistor_acs_sphere_note() {
    let (code, r) = json("twistor-acs --preset sphere --samples 30");
    assert_eq!(code, 0);
    let c = r.values["sphere_coefficient"][0].as_f64().unwrap();
    assert!((c - 6.0).abs() < 1e-9);
    assert!(r.notes.iter().any(|n| n.contains("reference coefficient is 2")));
    let (_, r) = json("twistor-acs --preset sphere_lc --samples 30");
    assert!((r.values["sphere_coefficient"][0].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn metric_reports() {
    let (code, r) = json("metric-report --preset trivial --samples 10 --t 0.5");
    assert_eq!(code, 0, "{:?}", r.checks);
    assert!(check(&r, "vertical_negative").max_residual.unwrap() < 0.0);
    let (code, r) = json("metric-report --preset sphere --samples 10");
    assert_eq!(code, 0);
    assert_eq!(check(&r, "closed_iff_flat").rule, Rule::Above);
    assert!(r.checks.iter().all(|c| c.id != "kahler"));
}

#[test]
fn levi_scans() {
    let (code, r) = json("levi-scan --base-grid 5x5 --fibre-grid 6");
    assert_eq!(code, 0);
    assert_eq!(r.values["certificate"], serde_json::json!(true));
    let (code, r) = json("levi-scan --base-grid 3x3 --fibre-grid 4 --exhaustion chart --f (xi+xib)/2");
    assert_eq!(code, 1);
    assert_eq!(check(&r, "positive_count").max_residual, Some(0.0));
    let (code, r) = json("levi-scan --preset sphere --base-grid 3x3 --fibre-grid 4");
    assert_eq!(code, 1);
    assert!(check(&r, "scan").error.as_deref().unwrap().contains("chart unavailable"));
    let (_, r) = json("levi-scan --base-grid 3x3 --fibre-grid 4 --section 0.2*z --verbose");
    assert!(r.values.contains_key("certificate_w_ref_0"));
    assert_eq!(r.values["per_point"].as_array().unwrap().len(), r.values["points"].as_u64().unwrap() as usize);
}

#[test]
fn binary_exit_codes_and_table() {
    let bin = env!("CARGO_BIN_EXE_stl");
    let out = Command::new(bin).args(["check-integrability", "--preset", "trivial", "--samples", "10"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("overall: PASS") && text.contains("integrability"));
    let out = Command::new(bin).args(["analyze-connection", "--preset", "sphere", "--json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let r: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!r.pass);
    let out = Command::new(bin).arg("nope").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
