//! Release acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jetcalc::coverings::{build_lagrangian_covering, covering_defect, verify_covering_consistency};
use jetcalc::expr::{Atom, Rational};
use jetcalc::jet::{change_independent_system, total_derivative, total_derivative_multi};
use jetcalc::kovalevskaya::{to_kovalevskaya, validate_kovalevskaya};
use jetcalc::oracle::{Audit, Oracle, OracleConfig, SamplePoint, Value};
use jetcalc::random::{random_operator, random_polynomial, PolySpec};
use jetcalc::syslang::{format_operator, parse, parse_expr, SystemFile};
use jetcalc::variational::{degeneracy_check, euler, homotopy_lagrangian, is_symmetry, is_variational, symplectic_check};
use jetcalc::{equals, Context, Expr, JetCoord, MultiIndex, PdeSystem, Verdict};

type Outcome = Result<String, String>;

fn corpus_path(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name).to_string_lossy().into_owned()
}

fn load(name: &str) -> SystemFile {
    parse(&std::fs::read_to_string(corpus_path(name)).unwrap()).unwrap_or_else(|e| panic!("{name}:{e}"))
}

struct Suite {
    audit: Arc<Audit>,
}

impl Suite {
    fn oracle(&self, ctx: &Context) -> Oracle {
        ctx.oracle(OracleConfig::default()).with_audit(self.audit.clone())
    }

    fn plain_oracle(&self) -> Oracle {
        Oracle::default().with_audit(self.audit.clone())
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn proved(v: &Verdict, what: &str) -> Result<(), String> {
    ensure(*v == Verdict::ProvedEqual, || format!("{what}: {}", v.label()))
}

fn euler_annihilates_divergences(s: &Suite) -> Outcome {
    let ctx = Context::new(&["t", "x", "y"], &["u", "v"]);
    let spec = PolySpec { max_order: 2, terms: 5, max_degree: 5, ..PolySpec::new(3, 2) };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let o = s.plain_oracle();
    let mut count = 0;
    for i in 0..3 {
        for k in 0..20 {
            let g = random_polynomial(&spec, &mut rng);
            for (j, e) in euler(&total_derivative(&g, i), &ctx).iter().enumerate() {
                ensure(e.is_zero(), || format!("direction {i}, density {k}, component {j} is nonzero"))?;
                proved(&equals(e, &Expr::zero(), &o).map_err(|e| e.to_string())?, "zero test")?;
            }
            count += 1;
        }
    }
    Ok(format!("{count} densities over 3 directions, every E(D_i g) is exactly 0"))
}

fn adjoint_algebra(s: &Suite) -> Outcome {
    let spec = PolySpec { max_order: 1, terms: 2, max_degree: 2, ..PolySpec::new(2, 1) };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let o = s.plain_oracle();
    for k in 0..30 {
        let (r, m, c) = (rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=3));
        let order = rng.gen_range(0..=3);
        let a = random_operator(&spec, r, m, order, &mut rng);
        let b = random_operator(&spec, m, c, order, &mut rng);
        let twice = a.adjoint().adjoint();
        proved(&twice.equals(&a, &o).map_err(|e| e.to_string())?, &format!("operator {k}: A** = A"))?;
        let lhs = a.compose(&b).map_err(|e| e.to_string())?.adjoint();
        let rhs = b.adjoint().compose(&a.adjoint()).map_err(|e| e.to_string())?;
        proved(&lhs.equals(&rhs, &o).map_err(|e| e.to_string())?, &format!("operator {k}: (AB)* = B*A*"))?;
    }
    Ok("30 random pairs (order <= 3, up to 3x3): A** = A and (AB)* = B*A* proved exactly".into())
}

fn helmholtz_on_corpus(s: &Suite) -> Outcome {
    let mut notes = Vec::new();
    for (name, expect) in [("wave.pde", true), ("heat.pde", false), ("kdv.pde", false)] {
        let file = load(name);
        let sys = file.system();
        let r = is_variational(&sys, &s.oracle(&file.context)).map_err(|e| e.to_string())?;
        ensure(r.is_variational() == expect, || format!("{name}: verdict {}", r.verdict.label()))?;
        if expect {
            proved(&r.verdict, name)?;
            ensure(r.lagrangian.is_some(), || format!("{name}: no Lagrangian"))?;
            notes.push(format!("{name} variational"));
        } else {
            ensure(matches!(r.verdict, Verdict::ProvedUnequal { .. }), || format!("{name}: not exact"))?;
            ensure(!r.difference.is_zero(), || format!("{name}: empty difference"))?;
            notes.push(format!("{name} not (l - l* = {})", format_operator(&r.difference, &file.context)));
        }
    }
    Ok(notes.join("; "))
}

fn homotopy_round_trip(s: &Suite) -> Outcome {
    let ctx = Context::new(&["t", "x"], &["u", "v"]);
    let spec = PolySpec { max_order: 2, terms: 4, max_degree: 3, ..PolySpec::new(2, 2) };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let o = s.plain_oracle();
    let mut done = 0;
    while done < 10 {
        let l = random_polynomial(&spec, &mut rng);
        let f = euler(&l, &ctx);
        if f.iter().all(Expr::is_zero) {
            continue;
        }
        let back = homotopy_lagrangian(&f, &ctx, None).map_err(|e| e.to_string())?;
        for (a, b) in euler(&back, &ctx).iter().zip(&f) {
            proved(&equals(a, b, &o).map_err(|e| e.to_string())?, &format!("system {done}"))?;
        }
        done += 1;
    }
    Ok("10 random E(L): E(homotopy(E(L))) = E(L) proved".into())
}

fn navier_stokes_kovalevskaya(_: &Suite) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let args = ["jetcalc", "--json", "kovalevskaya", &corpus_path("navier_stokes.pde"), "--direction", "z"];
    let code = jetcalc::cli::run(args, &mut out, &mut err);
    let report: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    ensure(code == 0, || format!("exit code {code}"))?;
    ensure(report["data"]["orders"] == serde_json::json!([2, 2, 1, 1]), || format!("b = {}", report["data"]["orders"]))?;
    let trail: Vec<(u64, String)> = report["data"]["trail"]
        .as_array()
        .ok_or("no trail")?
        .iter()
        .map(|e| (e["equation"].as_u64().unwrap_or(0), e["pivot"].as_str().unwrap_or("").to_string()))
        .collect();
    let expected: Vec<(u64, String)> =
        [(4, "w_z"), (1, "u_zz"), (2, "v_zz"), (3, "p_z")].iter().map(|(k, p)| (*k, p.to_string())).collect();
    ensure(trail == expected, || format!("trail {trail:?}"))?;
    let steps: Vec<String> = trail.iter().map(|(k, p)| format!("{p} from eq {k}")).collect();
    Ok(format!("b = (2,2,1,1); {}", steps.join(", ")))
}

fn covering_consistency(s: &Suite) -> Outcome {
    let mut notes = Vec::new();
    for (name, velocity) in [
        ("mass_conservation_1d.pde", vec!["u"]),
        ("mass_conservation_2d.pde", vec!["u", "v"]),
        ("mass_conservation_3d.pde", vec!["u", "v", "w"]),
    ] {
        let file = load(name);
        let base = file.resolved_system().map_err(|e| e.to_string())?;
        let cov = build_lagrangian_covering(&base, "rho", &velocity).map_err(|e| e.to_string())?;
        let defect = covering_defect(&cov).map_err(|e| e.to_string())?;
        ensure(defect.is_zero(), || format!("{name}: nonzero defect"))?;
        proved(&verify_covering_consistency(&cov, &s.oracle(&cov.system.context)).map_err(|e| e.to_string())?, name)?;
        notes.push(format!("{}D", velocity.len()));
    }
    Ok(format!("defect exactly 0 for {}", notes.join(", ")))
}

fn fiber_symmetries(s: &Suite) -> Outcome {
    let mut notes = Vec::new();
    for name in ["lagrangian_covering_1d.pde", "lagrangian_covering_2d.pde"] {
        let file = load(name);
        let sys = file.resolved_system().map_err(|e| e.to_string())?;
        let o = s.oracle(&file.context);
        let fiber: Vec<_> = file.symmetries.iter().filter(|d| d.fiber).collect();
        ensure(!fiber.is_empty(), || format!("{name}: no fiber symmetries"))?;
        for d in &fiber {
            let v = is_symmetry(&d.components, &sys, &o).map_err(|e| e.to_string())?;
            ensure(v.holds(), || format!("{name}: {} is not a symmetry", d.name))?;
        }
        let names: Vec<&str> = fiber.iter().map(|d| d.name.as_str()).collect();
        notes.push(format!("{name}: {}", names.join(", ")));
    }
    Ok(notes.join("; "))
}

/// `C γ x_m^(−γ−1) x_mm − x_tt` evaluated directly for integer `γ`.
fn gas_equation_by_hand(c: &Rational, gamma: i32, xm: &Rational, xmm: &Rational, xtt: &Rational) -> Rational {
    c * Rational::from_integer(gamma.into()) * xm.pow(-gamma - 1) * xmm - xtt
}

fn gas_dynamics(s: &Suite) -> Outcome {
    let file = load("gas_1d_lagrangian.pde");
    let ctx = &file.context;
    let l = file.lagrangian.as_ref().ok_or("no lagrangian")?;
    let f = euler(l, ctx);
    let by_hand = parse_expr("C*gamma*x_m^(-gamma - 1)*x_mm - x_tt", ctx).map_err(|e| e.to_string())?;
    ensure(f == vec![by_hand.clone()], || "E(L) differs from the hand-derived equation".into())?;
    let o = s.oracle(ctx);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let atom = |name: &str| ctx.resolve_leaf(name).unwrap();
    let small = |rng: &mut ChaCha8Rng| Rational::new(rng.gen_range(-9i64..=9).into(), rng.gen_range(1i64..=5).into());
    for _ in 0..25 {
        let gamma: i32 = rng.gen_range(2..=5);
        let c = Rational::new(rng.gen_range(1i64..=9).into(), rng.gen_range(1i64..=4).into());
        let xm = Rational::new(rng.gen_range(1i64..=9).into(), rng.gen_range(1i64..=4).into());
        let (xmm, xtt) = (small(&mut rng), small(&mut rng));
        let mut p = SamplePoint::default();
        p.set(atom("C"), Value::Exact(c.clone()));
        p.set(atom("gamma"), Value::Exact(Rational::from_integer(gamma.into())));
        p.set(atom("x_m"), Value::Exact(xm.clone()));
        p.set(atom("x_mm"), Value::Exact(xmm.clone()));
        p.set(atom("x_tt"), Value::Exact(xtt.clone()));
        let got = o.evaluate(&f[0], &p).map_err(|e| format!("{e:?}"))?;
        let want = gas_equation_by_hand(&c, gamma, &xm, &xmm, &xtt);
        ensure(got == Value::Exact(want.clone()), || format!("at gamma = {gamma}: {got} vs {want}"))?;
    }
    let sys = PdeSystem::new(ctx.clone(), f.clone()).with_kovalevskaya(file.resolved_system().map_err(|e| e.to_string())?.kovalevskaya.unwrap());
    ensure(is_variational(&sys, &o).map_err(|e| e.to_string())?.is_variational(), || "not variational".into())?;
    let identity = file.operator("identity").map_err(|e| e.to_string())?;
    let v = symplectic_check(identity, &sys, &o).map_err(|e| e.to_string())?;
    ensure(v.holds(), || format!("identity not symplectic: {}", v.label()))?;
    Ok(format!("E(L) = hand equation exactly and at 25 exact points; variational; identity symplectic ({})", v.label()))
}

fn degeneracy(s: &Suite) -> Outcome {
    let file = load("gas_1d_covering.pde");
    let ctx = &file.context;
    let sys = file.resolved_system().map_err(|e| e.to_string())?;
    let o = s.oracle(ctx);
    let phi = file.symmetry("xi_shift").map_err(|e| e.to_string())?;
    let xm = ctx.var("x_m").unwrap();
    ensure(phi.components == vec![xm.clone()], || "xi_shift is not (x_m)".into())?;
    ensure(is_symmetry(&phi.components, &sys, &o).map_err(|e| e.to_string())?.holds(), || "x_m is not a symmetry".into())?;
    let identity = file.operator("identity").map_err(|e| e.to_string())?;
    let r = degeneracy_check(identity, &[(phi.name.clone(), phi.components.clone())], None, &sys, &o)
        .map_err(|e| e.to_string())?;
    ensure(r.not_a_lift(), || "identity reported as a lift".into())?;
    ensure(r.entries[0].image == vec![xm], || "image is not x_m".into())?;
    Ok(format!("x_m is a symmetry; identity: {}, image (x_m)", r.entries[0].describe()))
}

/// `H^(k)(s) = 3^(−k) e^(s/3)`.
fn exponential_bottom(args: &[Value], orders: &[u32]) -> Option<Value> {
    let s = args[0].to_f64();
    Some(Value::Float((s / 3.0).exp() / 3f64.powi(orders[0] as i32)))
}

/// Central difference of `F` along `φ`: every jet `x_α` moves by `ε·D_α φ`.
fn directional_derivative(f: &Expr, phi: &Expr, p: &SamplePoint, o: &Oracle, eps: f64) -> Option<f64> {
    let shifted = |sign: f64| -> Option<f64> {
        let mut q = p.clone();
        for (a, v) in &p.values {
            if let Atom::Jet(j) = a {
                let d = o.evaluate(&total_derivative_multi(phi, &j.alpha), p).ok()?.to_f64();
                q.set(a.clone(), Value::Float(v.to_f64() + sign * eps * d));
            }
        }
        o.evaluate(f, &q).ok().map(|v| v.to_f64())
    };
    Some((shifted(1.0)? - shifted(-1.0)?) / (2.0 * eps))
}

fn green_naghdi(s: &Suite) -> Outcome {
    let file = load("green_naghdi_lagrangian.pde");
    let ctx = &file.context;
    let l = file.lagrangian.as_ref().ok_or("no lagrangian")?;
    let f = euler(l, ctx);
    let sys = PdeSystem::new(ctx.clone(), f.clone());
    let mut o = s.oracle(ctx);
    o.register_callback(ctx.func_index("H").unwrap(), Arc::new(exponential_bottom));
    let r = is_variational(&sys, &o).map_err(|e| e.to_string())?;
    ensure(r.difference.is_zero(), || "l - l* does not expand to zero".into())?;
    proved(&r.verdict, "Helmholtz")?;

    // numeric confirmation: l_F(φ) against a finite difference of F with H = e^(s/3)
    let lin = jetcalc::operators::linearize(&sys);
    let spec = PolySpec { max_order: 1, terms: 2, max_degree: 2, explicit: false, ..PolySpec::new(2, 1) };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut leaves: std::collections::BTreeSet<Atom> =
        MultiIndex::all_up_to(2, 8).into_iter().map(|a| Atom::Jet(JetCoord::new(0, a))).collect();
    leaves.extend((0..ctx.constants.len()).map(Atom::Const));
    leaves.extend((0..2).map(Atom::Indep));
    let mut draws = o.rng();
    let mut agreed = 0;
    while agreed < 5 {
        let phi = random_polynomial(&spec, &mut rng);
        let p = o.draw_point(&leaves, o.positive_atoms(), &mut draws);
        let (Ok(exact), Some(numeric)) = (
            o.evaluate(&lin.apply(&[phi.clone()]).map_err(|e| e.to_string())?[0], &p),
            directional_derivative(&f[0], &phi, &p, &o, 1e-5),
        ) else {
            continue;
        };
        let exact = exact.to_f64();
        ensure((exact - numeric).abs() <= 1e-4 * (1.0 + exact.abs()), || format!("l_F(phi) = {exact} vs {numeric}"))?;
        agreed += 1;
    }

    // stretch: Kovalevskaya form after the rotation (s, r) = (t + m, t - m)
    let one = Rational::one();
    let rot = vec![vec![one.clone(), one.clone()], vec![one.clone(), -one]];
    let names = ["s".to_string(), "r".to_string()];
    let rotated = change_independent_system(&sys, &rot, Some(&names)).map_err(|e| e.to_string())?;
    let stretch = match to_kovalevskaya(&rotated, 0, &[]) {
        Ok(form) => {
            let v = validate_kovalevskaya(&form.data(), &rotated, &s.oracle(&rotated.context)).map_err(|e| e.to_string())?;
            ensure(v.is_valid(), || "rotated form fails validation".into())?;
            format!("rotated form valid, b = {:?}", form.orders)
        }
        Err(e) => format!("known limitation, rotated search failed: {e}"),
    };
    Ok(format!("E(L) computed; l - l* = 0 exactly; l_F confirmed numerically at 5 points; {stretch}"))
}

fn audit_summary(s: &Suite) -> Outcome {
    let contradictions = s.audit.contradictions();
    ensure(s.audit.checked() > 0, || "no kernel decisions were audited".into())?;
    ensure(contradictions.is_empty(), || format!("{} contradictions: {:?}", contradictions.len(), contradictions))?;
    Ok(format!("{} ProvedEqual decisions re-checked by the oracle, 0 contradictions", s.audit.checked()))
}

fn main() {
    let suite = Suite { audit: Arc::new(Audit::default()) };
    let criteria: [(&str, fn(&Suite) -> Outcome); 11] = [
        ("Euler annihilates divergences", euler_annihilates_divergences),
        ("adjoint algebra", adjoint_algebra),
        ("Helmholtz classification", helmholtz_on_corpus),
        ("homotopy round trip", homotopy_round_trip),
        ("Navier-Stokes Kovalevskaya form", navier_stokes_kovalevskaya),
        ("covering consistency", covering_consistency),
        ("fiber symmetries of coverings", fiber_symmetries),
        ("1D gas dynamics", gas_dynamics),
        ("degeneracy of the identity", degeneracy),
        ("Green-Naghdi", green_naghdi),
        ("oracle cross-validation", audit_summary),
    ];
    let mut failed = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| run(&suite))).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {title} [{secs:.1}s]: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {title} [{secs:.1}s]: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
