use std::path::{Path, PathBuf};

use jetcalc::syslang::{parse, print};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn corpus_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(root().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "pde"))
        .collect();
    files.sort();
    files
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn public_corpus_is_present() {
    let names: Vec<String> = corpus_files().iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    for required in [
        "mass_conservation_3d.pde",
        "navier_stokes.pde",
        "gas_1d_lagrangian.pde",
        "green_naghdi_lagrangian.pde",
        "kdv.pde",
        "wave.pde",
        "heat.pde",
    ] {
        assert!(names.iter().any(|n| n == required), "missing {required}");
    }
}

#[test]
fn every_file_parses_and_normalization_is_idempotent() {
    for path in corpus_files() {
        let file = parse(&read(&path)).unwrap_or_else(|e| panic!("{}:{e}", path.display()));
        let once = print(&file);
        let again = parse(&once).unwrap_or_else(|e| panic!("{} (normalized):{e}\n{once}", path.display()));
        assert_eq!(print(&again), once, "{}", path.display());
        assert_eq!(again.system().equations, file.system().equations, "{}", path.display());
    }
}

#[test]
fn navier_stokes_matches_golden_normalization() {
    let file = parse(&read(&root().join("corpus/navier_stokes.pde"))).unwrap();
    let golden = read(&root().join("tests/data/navier_stokes.normalized.pde"));
    assert_eq!(print(&file), golden);
    assert_eq!(print(&parse(&golden).unwrap()), golden);
}

#[test]
fn green_naghdi_declares_function_chain_and_constants() {
    let file = parse(&read(&root().join("corpus/green_naghdi_lagrangian.pde"))).unwrap();
    let ctx = &file.context;
    let names: Vec<&str> = ctx.constants.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["epsilon", "g"]);
    let h = &ctx.functions[ctx.func_index("H").unwrap()];
    assert_eq!(h.arity, 1);
    assert_eq!(h.chain, ["H'", "H''", "H'''"]);
    let l = file.lagrangian.as_ref().unwrap();
    assert!(l.depends_on(&jetcalc::expr::Atom::Const(ctx.const_index("epsilon").unwrap())));
}

#[test]
fn inline_equation_parses_to_its_residual() {
    let file = parse("independent: t, x\ndependent: u\nequations: u_t + u*u_x = 0\n").unwrap();
    let ctx = &file.context;
    let expected = &ctx.var("u_t").unwrap() + &(&ctx.var("u").unwrap() * &ctx.var("u_x").unwrap());
    assert_eq!(file.system().equations, vec![expected]);
}

#[test]
fn covering_corpus_files_reload_as_coverings() {
    for name in ["lagrangian_covering_1d.pde", "lagrangian_covering_2d.pde"] {
        let file = parse(&read(&root().join("corpus").join(name))).unwrap();
        let cov = file.covering_system().unwrap();
        assert_eq!(jetcalc::coverings::covering_defect(&cov).unwrap(), jetcalc::Expr::zero(), "{name}");
    }
}
