//! Numeric ground truth for symbolic identities.
//!
//! Expressions are evaluated at random sample points, exactly over the
//! rationals whenever possible. Opaque function symbols are evaluated through
//! registered callbacks; unregistered symbols get a deterministic random
//! polynomial whose derivatives are consistent with it.

mod on_shell;
mod value;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{ratio, Atom, Exponent, Expr, Poly, Rational, Verdict};

pub use on_shell::on_shell_sample;
pub use value::Value;

pub const DEFAULT_SEED: u64 = 0x6a65_7463_616c_63;
pub const DEFAULT_TRIALS: usize = 25;
pub const DEFAULT_TOL: f64 = 1e-9;
const RESAMPLE_CAP: usize = 100;

/// Numeric callback for an opaque function symbol: receives argument values
/// and the derivative orders per argument slot.
pub type Callback = Arc<dyn Fn(&[Value], &[u32]) -> Option<Value> + Send + Sync>;

/// A polynomial `Σ c · Π x_k^{p_k}` used as a consistent test model of a
/// function symbol and all of its derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyModel {
    pub terms: Vec<(Rational, Vec<u32>)>,
}

impl PolyModel {
    /// Unary model from coefficients of `s^0, s^1, …`.
    pub fn unary(coeffs: &[Rational]) -> PolyModel {
        PolyModel {
            terms: coeffs.iter().enumerate().map(|(k, c)| (c.clone(), vec![k as u32])).collect(),
        }
    }

    fn random(arity: usize, rng: &mut ChaCha8Rng) -> PolyModel {
        let mut terms = Vec::new();
        for alpha in crate::jet::MultiIndex::all_up_to(arity, 4) {
            let c: i64 = rng.gen_range(-3..=3);
            if c != 0 {
                terms.push((crate::expr::rat(c), alpha.as_slice().to_vec()));
            }
        }
        PolyModel { terms }
    }

    pub fn eval(&self, args: &[Value], orders: &[u32]) -> Option<Value> {
        let mut acc = Value::zero();
        'terms: for (c, powers) in &self.terms {
            let mut term = Value::Exact(c.clone());
            for (k, (&p, &o)) in powers.iter().zip(orders).enumerate() {
                if o > p {
                    continue 'terms;
                }
                let falling: i64 = (0..o).map(|i| (p - i) as i64).product();
                term = term.mul(&Value::Exact(crate::expr::rat(falling)));
                term = term.mul(&args[k].powi((p - o) as i64)?);
            }
            acc = acc.add(&term);
        }
        Some(acc)
    }
}

#[derive(Clone)]
enum FunctionModel {
    Poly(PolyModel),
    Custom(Callback),
}

/// Records every kernel-level `ProvedEqual` decision that was re-checked
/// numerically, and any contradiction found.
#[derive(Debug, Default)]
pub struct Audit {
    checked: AtomicUsize,
    contradictions: Mutex<Vec<String>>,
}

impl Audit {
    pub fn checked(&self) -> usize {
        self.checked.load(Ordering::Relaxed)
    }

    pub fn contradictions(&self) -> Vec<String> {
        self.contradictions.lock().unwrap().clone()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleConfig {
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { seed: DEFAULT_SEED, trials: DEFAULT_TRIALS, tol: DEFAULT_TOL }
    }
}

/// An assignment of values to leaf atoms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SamplePoint {
    pub values: BTreeMap<Atom, Value>,
}

impl SamplePoint {
    pub fn get(&self, a: &Atom) -> Option<&Value> {
        self.values.get(a)
    }

    pub fn set(&mut self, a: Atom, v: Value) {
        self.values.insert(a, v);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EvalError {
    Uncovered(Atom),
    /// Division by zero or a non-real power; the caller should resample.
    Singular,
}

/// Evidence that two expressions differ.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub point: Vec<(Atom, Value)>,
    pub lhs: Value,
    pub rhs: Value,
}

#[derive(Clone)]
pub struct Oracle {
    pub config: OracleConfig,
    functions: HashMap<usize, FunctionModel>,
    positive: BTreeSet<Atom>,
    audit: Option<Arc<Audit>>,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle::new(OracleConfig::default())
    }
}

impl std::fmt::Debug for Oracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Oracle").field("config", &self.config).field("positive", &self.positive).finish()
    }
}

impl Oracle {
    pub fn new(config: OracleConfig) -> Oracle {
        Oracle { config, functions: HashMap::new(), positive: BTreeSet::new(), audit: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Oracle {
        self.config.seed = seed;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Oracle {
        self.config.trials = trials.max(1);
        self
    }

    /// Every kernel `ProvedEqual` is re-checked numerically and contradictions
    /// are recorded in `audit`.
    pub fn with_audit(mut self, audit: Arc<Audit>) -> Oracle {
        self.audit = Some(audit);
        self
    }

    pub fn audit(&self) -> Option<&Arc<Audit>> {
        self.audit.as_ref()
    }

    pub fn register_polynomial(&mut self, func: usize, model: PolyModel) {
        self.functions.insert(func, FunctionModel::Poly(model));
    }

    pub fn register_callback(&mut self, func: usize, cb: Callback) {
        self.functions.insert(func, FunctionModel::Custom(cb));
    }

    /// Leaves that must be sampled positive.
    pub fn assume_positive(&mut self, a: Atom) {
        self.positive.insert(a);
    }

    pub fn positive_atoms(&self) -> &BTreeSet<Atom> {
        &self.positive
    }

    fn default_model(&self, func: usize, arity: usize) -> PolyModel {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ (0x9e37_79b9 * (func as u64 + 1)));
        PolyModel::random(arity, &mut rng)
    }

    pub fn eval_function(&self, func: usize, args: &[Value], orders: &[u32]) -> Option<Value> {
        match self.functions.get(&func) {
            Some(FunctionModel::Poly(p)) => p.eval(args, orders),
            Some(FunctionModel::Custom(cb)) => cb(args, orders),
            None => self.default_model(func, args.len()).eval(args, orders),
        }
    }

    pub fn evaluate(&self, e: &Expr, p: &SamplePoint) -> std::result::Result<Value, EvalError> {
        let mut acc = self.eval_poly(e.numerator(), p)?;
        for (f, k) in e.denominator() {
            let d = self.eval_poly(f, p)?.powi(*k as i64).ok_or(EvalError::Singular)?;
            acc = acc.div(&d).ok_or(EvalError::Singular)?;
        }
        if !acc.is_finite() {
            return Err(EvalError::Singular);
        }
        Ok(acc)
    }

    fn eval_atom(&self, a: &Atom, p: &SamplePoint) -> std::result::Result<Value, EvalError> {
        match a {
            Atom::Indep(_) | Atom::Const(_) | Atom::Jet(_) => {
                p.get(a).cloned().ok_or_else(|| EvalError::Uncovered(a.clone()))
            }
            Atom::Func(app) => {
                let args = app
                    .args
                    .iter()
                    .map(|x| self.evaluate(x, p))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                self.eval_function(app.func, &args, &app.orders).ok_or(EvalError::Singular)
            }
            Atom::Log(b) => self.evaluate(b, p)?.ln().ok_or(EvalError::Singular),
            Atom::Paren(b) => self.evaluate(b, p),
        }
    }

    fn eval_poly(&self, poly: &Poly, p: &SamplePoint) -> std::result::Result<Value, EvalError> {
        let mut acc = Value::zero();
        for (m, c) in poly.terms() {
            let mut term = Value::Exact(c.clone());
            for (a, e) in m.factors() {
                let base = self.eval_atom(a, p)?;
                let v = match e {
                    Exponent::Int(k) => base.powi(*k),
                    Exponent::Sym(x) => base.pow(&self.evaluate(x, p)?),
                }
                .ok_or(EvalError::Singular)?;
                term = term.mul(&v);
            }
            acc = acc.add(&term);
        }
        Ok(acc)
    }

    /// Leaves of `exprs` that must be drawn positive: declared ones plus the
    /// bases of non-integer powers.
    fn positive_leaves(&self, exprs: &[&Expr]) -> BTreeSet<Atom> {
        let mut out = self.positive.clone();
        for e in exprs {
            collect_power_bases(e, &mut out);
        }
        out
    }

    /// Draws a point covering `leaves`.
    pub fn draw_point(&self, leaves: &BTreeSet<Atom>, positive: &BTreeSet<Atom>, rng: &mut ChaCha8Rng) -> SamplePoint {
        let mut p = SamplePoint::default();
        for a in leaves {
            p.set(a.clone(), draw_value(rng, positive.contains(a)));
        }
        p
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.config.seed)
    }

    /// Compares `a` and `b` at `trials` random points.
    pub fn random_identity_test(&self, a: &Expr, b: &Expr, trials: usize) -> Result<OracleOutcome> {
        let mut leaves: BTreeSet<Atom> = a.atoms_deep().into_iter().filter(Atom::is_leaf).collect();
        leaves.extend(b.atoms_deep().into_iter().filter(Atom::is_leaf));
        let positive = self.positive_leaves(&[a, b]);
        let mut rng = self.rng();
        let mut successes = 0;
        let mut singular = 0;
        while successes < trials.max(1) {
            let p = self.draw_point(&leaves, &positive, &mut rng);
            match (self.evaluate(a, &p), self.evaluate(b, &p)) {
                (Ok(va), Ok(vb)) => {
                    successes += 1;
                    if !self.values_agree(&va, &vb) {
                        return Ok(OracleOutcome::Unequal(Witness {
                            point: p.values.into_iter().collect(),
                            lhs: va,
                            rhs: vb,
                        }));
                    }
                }
                (Err(EvalError::Uncovered(x)), _) | (_, Err(EvalError::Uncovered(x))) => {
                    return Err(Error::UncoveredLeaf(format!("{x:?}")));
                }
                _ => {
                    singular += 1;
                    if singular >= RESAMPLE_CAP {
                        break;
                    }
                }
            }
        }
        if successes == 0 {
            return Err(Error::Undecidable);
        }
        Ok(OracleOutcome::Agree { trials: successes })
    }

    pub fn values_agree(&self, a: &Value, b: &Value) -> bool {
        match (a, b) {
            (Value::Exact(x), Value::Exact(y)) => x == y,
            _ => {
                let (x, y) = (a.to_f64(), b.to_f64());
                (x - y).abs() <= self.config.tol * (1.0 + x.abs().max(y.abs()))
            }
        }
    }

    /// Same as [`Oracle::random_identity_test`], phrased as a verdict.
    pub fn verdict(&self, a: &Expr, b: &Expr) -> Result<Verdict> {
        Ok(match self.random_identity_test(a, b, self.config.trials)? {
            OracleOutcome::Agree { trials } => Verdict::ProbablyEqual { seed: self.config.seed, trials },
            OracleOutcome::Unequal(w) => Verdict::ProvedUnequal { witness: Some(w) },
        })
    }

    pub(crate) fn record_proved_equal(&self, a: &Expr, b: &Expr) {
        let Some(audit) = &self.audit else { return };
        audit.checked.fetch_add(1, Ordering::Relaxed);
        // few points suffice: any single disagreement is a contradiction
        if let Ok(OracleOutcome::Unequal(w)) = self.random_identity_test(a, b, 3) {
            audit
                .contradictions
                .lock()
                .unwrap()
                .push(format!("{a:?} vs {b:?}: {} != {}", w.lhs, w.rhs));
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleOutcome {
    Agree { trials: usize },
    Unequal(Witness),
}

fn draw_value(rng: &mut ChaCha8Rng, positive: bool) -> Value {
    let mut n: i64 = rng.gen_range(-9..=9);
    let d: i64 = rng.gen_range(1..=9);
    if positive {
        n = n.abs();
        if n == 0 {
            n = rng.gen_range(1..=9);
        }
    }
    Value::Exact(ratio(n, d))
}

fn collect_power_bases(e: &Expr, out: &mut BTreeSet<Atom>) {
    let visit = |p: &Poly, out: &mut BTreeSet<Atom>| {
        for (m, _) in p.terms() {
            for (a, x) in m.factors() {
                if let Exponent::Sym(x) = x {
                    if a.is_leaf() {
                        out.insert(a.clone());
                    }
                    collect_power_bases(x, out);
                }
                match a {
                    Atom::Func(app) => app.args.iter().for_each(|y| collect_power_bases(y, out)),
                    Atom::Log(b) => {
                        if let Some((m, c)) = b.as_monomial() {
                            if m.factors().len() == 1 && !c.is_zero() && m.factors()[0].0.is_leaf() {
                                out.insert(m.factors()[0].0.clone());
                            }
                        }
                        collect_power_bases(b, out)
                    }
                    Atom::Paren(b) => collect_power_bases(b, out),
                    _ => {}
                }
            }
        }
    };
    visit(e.numerator(), out);
    for (f, _) in e.denominator() {
        visit(f, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{JetCoord, MultiIndex};

    fn u(alpha: &[u32]) -> Expr {
        Expr::jet(JetCoord::new(0, MultiIndex::from_slice(alpha)))
    }

    #[test]
    fn evaluate_examples() {
        let o = Oracle::default();
        let mut p = SamplePoint::default();
        p.set(Atom::Jet(JetCoord::new(0, MultiIndex::from_slice(&[1, 0]))), Value::Exact(crate::expr::rat(2)));
        assert_eq!(o.evaluate(&(&u(&[1, 0]) + &Expr::one()), &p).unwrap(), Value::Exact(crate::expr::rat(3)));
        assert!(matches!(o.evaluate(&u(&[0, 1]), &p), Err(EvalError::Uncovered(_))));
        assert_eq!(o.evaluate(&(&Expr::one() / &(&u(&[1, 0]) - &Expr::int(2))), &p), Err(EvalError::Singular));
    }

    #[test]
    fn identity_test_examples() {
        let o = Oracle::default();
        let x = u(&[0, 0]);
        let a = (&x + &Expr::one()).pow_int(2).unwrap();
        // assembled independently of the kernel's expansion
        let b = &(&(&x * &x) + &(&x * &Expr::int(2))) + &Expr::one();
        assert!(matches!(o.random_identity_test(&a, &b, 25).unwrap(), OracleOutcome::Agree { trials: 25 }));
        match o.random_identity_test(&u(&[1, 0]), &u(&[0, 1]), 25).unwrap() {
            OracleOutcome::Unequal(w) => assert_ne!(w.lhs, w.rhs),
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let o = Oracle::default().with_seed(7);
        let leaves: BTreeSet<Atom> = u(&[1, 1]).atoms_deep();
        let p1 = o.draw_point(&leaves, &BTreeSet::new(), &mut o.rng());
        let p2 = o.draw_point(&leaves, &BTreeSet::new(), &mut o.rng());
        assert_eq!(p1, p2);
    }

    #[test]
    fn polynomial_model_derivatives() {
        let m = PolyModel::unary(&[crate::expr::rat(0), crate::expr::rat(0), crate::expr::rat(1)]);
        let x = [Value::Exact(crate::expr::rat(3))];
        assert_eq!(m.eval(&x, &[0]).unwrap(), Value::Exact(crate::expr::rat(9)));
        assert_eq!(m.eval(&x, &[1]).unwrap(), Value::Exact(crate::expr::rat(6)));
        assert_eq!(m.eval(&x, &[3]).unwrap(), Value::zero());
    }

    #[test]
    fn fractional_powers_use_positive_bases() {
        let o = Oracle::default();
        let xm = u(&[0, 1]);
        let g = Expr::constant(0);
        let a = &xm.pow(&(&Expr::one() - &g)).unwrap() * &xm.pow(&g).unwrap();
        assert!(matches!(o.random_identity_test(&a, &xm, 25).unwrap(), OracleOutcome::Agree { .. }));
    }
}
