use std::path::PathBuf;
use std::process::Command;

use jetcalc::cli::run;

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name).to_string_lossy().into_owned()
}

fn jetcalc(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("jetcalc").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn schema() -> jsonschema::JSONSchema {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&schema).expect("valid schema")
}

fn json_report(args: &[&str]) -> (i32, serde_json::Value) {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let (code, out, _) = jetcalc(&full);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{args:?}: {e}\n{out}"));
    let compiled = schema();
    if let Err(errors) = compiled.validate(&v) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{args:?} report violates schema: {msgs:?}");
    }
    (code, v)
}

/// (arguments with `@file` standing for a corpus path, expected exit code)
fn corpus_runs() -> Vec<(Vec<String>, i32)> {
    let spec: &[(&[&str], i32)] = &[
        (&["check-variational", "@wave.pde"], 0),
        (&["check-variational", "@heat.pde"], 1),
        (&["check-variational", "@kdv.pde"], 1),
        (&["linearize", "@kdv.pde"], 0),
        (&["adjoint", "@wave.pde", "--operator", "identity"], 0),
        (&["euler", "@gas_1d_lagrangian.pde"], 0),
        (&["euler", "@green_naghdi_lagrangian.pde"], 0),
        (&["symplectic", "@gas_1d_lagrangian.pde", "--operator", "identity"], 0),
        (&["kovalevskaya", "@navier_stokes.pde", "--direction", "z"], 0),
        (&["kovalevskaya", "@heat.pde", "--direction", "x"], 0),
        (&["verify-covering", "@lagrangian_covering_1d.pde"], 0),
        (&["verify-covering", "@lagrangian_covering_2d.pde"], 0),
        (&["verify-covering", "@gas_1d_covering.pde"], 2),
        (&["noether", "@wave.pde", "--operator", "identity", "--symmetry", "time_shift"], 0),
        (&["degeneracy", "@gas_1d_covering.pde", "--operator", "identity", "--fiber-symmetries", "xi_shift"], 1),
        (&["oracle", "@heat.pde", "--lhs", "u_x*u", "--rhs", "u*u_x"], 0),
        (&["oracle", "@heat.pde", "--lhs", "u_x", "--rhs", "u_t"], 1),
        (&["cover", "@kdv.pde", "--type", "potential", "--law", "mass"], 0),
        (&["cover", "@mass_conservation_1d.pde", "--type", "lagrangian", "--density", "rho", "--velocity", "u"], 0),
    ];
    spec.iter()
        .map(|(args, code)| {
            let args = args.iter().map(|a| a.strip_prefix('@').map_or(a.to_string(), corpus)).collect();
            (args, *code)
        })
        .collect()
}

#[test]
fn exit_codes_match_verdicts_on_the_corpus() {
    for (args, expected) in corpus_runs() {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, out, err) = jetcalc(&argv);
        assert_eq!(code, expected, "{argv:?}\nstdout:\n{out}\nstderr:\n{err}");
    }
}

#[test]
fn json_reports_follow_the_schema() {
    for (args, expected) in corpus_runs() {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, v) = json_report(&argv);
        assert_eq!(code, expected, "{argv:?}");
        assert_eq!(v["passed"], serde_json::Value::Bool(expected == 0), "{argv:?}");
        assert_eq!(v["inputs"].as_array().unwrap().len(), 1);
    }
}

#[test]
fn usage_and_parse_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pde");
    std::fs::write(&bad, "independent: t, x\ndependent: u\nequations:\n  u_t = u_q\n").unwrap();
    let bad = bad.to_string_lossy().into_owned();
    let cases: Vec<Vec<&str>> = vec![
        vec!["linearize", &bad],
        vec!["linearize", "/nonexistent/file.pde"],
        vec!["adjoint", "x.pde"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let (code, _, err) = jetcalc(&args);
        assert_eq!(code, 2, "{args:?}");
        assert!(!err.is_empty(), "{args:?} wrote no diagnostic");
    }
    let wave = corpus("wave.pde");
    let (code, _, err) = jetcalc(&["adjoint", &wave, "--operator", "missing"]);
    assert_eq!(code, 2);
    assert!(err.contains("missing"), "{err}");
    let (code, v) = json_report(&["kovalevskaya", &wave, "--direction", "q"]);
    assert_eq!(code, 2);
    assert!(v["error"].as_str().unwrap().contains('q'));
}

#[test]
fn parse_errors_carry_positions() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pde");
    std::fs::write(&bad, "independent: t, x\ndependent: u\nequations:\n  u_t = u_q\n").unwrap();
    let (_, _, err) = jetcalc(&["linearize", &bad.to_string_lossy()]);
    assert!(err.contains(":4:"), "{err}");
}

#[test]
fn probable_verdicts_record_seed_and_trials() {
    let ns = corpus("navier_stokes.pde");
    let (_, v) = json_report(&["--seed", "11", "--trials", "7", "kovalevskaya", &ns, "--direction", "z"]);
    let probable: Vec<&serde_json::Value> =
        v["checks"].as_array().unwrap().iter().filter(|c| c["verdict"] == "ProbablyEqual").collect();
    assert!(!probable.is_empty());
    for c in probable {
        assert_eq!(c["seed"], 11);
        assert_eq!(c["trials"], 7);
    }
    assert_eq!(v["data"]["orders"], serde_json::json!([2, 2, 1, 1]));
}

#[test]
fn same_seed_same_report() {
    let kdv = corpus("kdv.pde");
    let a = json_report(&["--seed", "5", "check-variational", &kdv]).1;
    let b = json_report(&["--seed", "5", "check-variational", &kdv]).1;
    assert_eq!(a["checks"], b["checks"]);
    assert_eq!(a["outputs"], b["outputs"]);
}

#[test]
fn binary_respects_no_color() {
    let out = Command::new(env!("CARGO_BIN_EXE_jetcalc"))
        .args(["check-variational", &corpus("heat.pde")])
        .env("NO_COLOR", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\u{1b}'), "{text}");
    assert!(text.contains("2*D_t"), "{text}");
}

#[test]
fn cover_writes_a_file_that_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("cov.pde");
    let target = target.to_string_lossy().into_owned();
    let base = corpus("mass_conservation_2d.pde");
    let (code, _, err) =
        jetcalc(&["cover", &base, "--type", "lagrangian", "--density", "rho", "--velocity", "u,v", "-o", &target]);
    assert_eq!(code, 0, "{err}");
    let (code, out, _) = jetcalc(&["verify-covering", &target]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn shifted_homotopy_lagrangian_reproduces_the_equation() {
    let dir = tempfile::tempdir().unwrap();
    let src = "independent: t, x\ndependent: u\nequations:\n  -u_xx + 3*u^2 = 0\n";
    let path = dir.path().join("shifted.pde");
    std::fs::write(&path, src).unwrap();
    let path = path.to_string_lossy().into_owned();
    let (code, out, err) = jetcalc(&["check-variational", &path, "--shift", "1"]);
    assert_eq!(code, 0, "{err}");
    let l = out.lines().find_map(|l| l.strip_prefix("lagrangian: ")).expect("a lagrangian");
    std::fs::write(&path, format!("{src}lagrangian: {l}\n")).unwrap();
    let (code, out, _) = jetcalc(&["euler", &path]);
    assert_eq!(code, 0, "{out}");
    let (code, _, err) = jetcalc(&["check-variational", &path, "--shift", "1,2"]);
    assert_eq!(code, 2, "{err}");
}
