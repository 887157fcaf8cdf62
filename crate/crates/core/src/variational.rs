//! Euler operator, Helmholtz conditions, homotopy Lagrangians, symplectic
//! operators and the Noether map.

use std::collections::HashMap;

use crate::context::Context;
use crate::error::{Error, Result};
use crate::expr::{equals, partial_derivative, rat, Atom, Exponent, Expr, Poly, Verdict};
use crate::jet::{total_derivative_multi, PdeSystem, Reducer};
use crate::operators::{linearize, op_equals_on_shell, TotalDiffOp};
use crate::oracle::Oracle;

/// `E_j(L) = Σ_α (−1)^{|α|} D_α(∂L/∂u^j_α)` for every dependent variable.
pub fn euler(density: &Expr, context: &Context) -> Vec<Expr> {
    let mut out = vec![Expr::zero(); context.m()];
    for j in density.jets() {
        if j.dep >= out.len() {
            continue;
        }
        let d = partial_derivative(density, &Atom::Jet(j.clone()));
        let mut term = total_derivative_multi(&d, &j.alpha);
        if j.alpha.order() % 2 == 1 {
            term = -term;
        }
        out[j.dep] = &out[j.dep] + &term;
    }
    out
}

/// Outcome of the Helmholtz test `l_F = l_F^*`.
#[derive(Clone, Debug)]
pub struct VariationalReport {
    pub verdict: Verdict,
    /// `l_F − l_F^*`.
    pub difference: TotalDiffOp,
    /// First entry of the difference that does not vanish.
    pub violation: Option<(usize, usize)>,
    pub lagrangian: Option<Expr>,
    /// Why no Lagrangian was produced for a variational system.
    pub lagrangian_error: Option<Error>,
}

impl VariationalReport {
    pub fn is_variational(&self) -> bool {
        self.verdict.holds()
    }
}

pub fn is_variational(system: &PdeSystem, oracle: &Oracle) -> Result<VariationalReport> {
    is_variational_with_shift(system, None, oracle)
}

/// Helmholtz check; on success the certificate is the homotopy Lagrangian
/// based at `u = shift` (or `u = 0`).
pub fn is_variational_with_shift(system: &PdeSystem, shift: Option<&[Expr]>, oracle: &Oracle) -> Result<VariationalReport> {
    system.require_square()?;
    let l = linearize(system);
    let difference = l.sub(&l.adjoint())?;
    let mut verdict = Verdict::ProvedEqual;
    let mut violation = None;
    for (i, j, _, c) in difference.coefficients() {
        let v = equals(c, &Expr::zero(), oracle)?;
        if !v.holds() {
            violation = Some((i, j));
            verdict = v;
            break;
        }
        verdict = verdict.and(v);
    }
    let (mut lagrangian, mut lagrangian_error) = (None, None);
    if verdict.holds() {
        match homotopy_lagrangian(&system.equations, &system.context, shift) {
            Ok(l) => lagrangian = Some(l),
            Err(e) => lagrangian_error = Some(e),
        }
    }
    Ok(VariationalReport { verdict, difference, violation, lagrangian, lagrangian_error })
}

/// `L = ∫₀¹ Σ_j (u^j − c^j) F_j(c + λ(u − c)) dλ`. Requires every `F_j` to be
/// polynomial along the ray.
pub fn homotopy_lagrangian(f: &[Expr], context: &Context, shift: Option<&[Expr]>) -> Result<Expr> {
    let m = context.m();
    if f.len() != m {
        return Err(Error::ShapeMismatch(format!("{} expressions for {m} dependent variables", f.len())));
    }
    if let Some(c) = shift {
        if c.len() != m {
            return Err(Error::ShapeMismatch("shift has the wrong length".into()));
        }
        if c.iter().any(|x| !x.jets().is_empty()) {
            return Err(Error::Invalid("homotopy shift must not depend on jet coordinates".into()));
        }
    }
    let zero = vec![Expr::zero(); m];
    let shift = shift.unwrap_or(&zero);
    let lambda_atom = Atom::Const(context.constants.len() + 1000);
    let lambda = Expr::atom(lambda_atom.clone());
    let mut bindings = HashMap::new();
    for fj in f {
        for j in fj.jets() {
            let u = Expr::jet(j.clone());
            let img = if j.alpha.is_zero() {
                &shift[j.dep] + &(&lambda * &(&u - &shift[j.dep]))
            } else {
                &lambda * &u
            };
            bindings.insert(Atom::Jet(j), img);
        }
    }
    let mut integrand = Expr::zero();
    for (j, fj) in f.iter().enumerate() {
        let along = crate::expr::substitute(fj, &bindings)?;
        let u = Expr::jet(crate::jet::JetCoord::base(j, context.n()));
        integrand = &integrand + &(&(&u - &shift[j]) * &along);
    }
    integrate_unit_interval(&integrand, &lambda_atom)
}

/// `∫₀¹ e dλ` for `e` polynomial in `λ`.
fn integrate_unit_interval(e: &Expr, lambda: &Atom) -> Result<Expr> {
    if e.denominator().iter().any(|(p, _)| Expr::from_poly(p.clone()).depends_on(lambda)) {
        return Err(Error::NonPolynomialHomotopy);
    }
    let mut num = Poly::zero();
    for (mono, c) in e.numerator().terms() {
        let k = match mono.exponent_of(lambda) {
            None => 0,
            Some(Exponent::Int(k)) if *k >= 0 => *k,
            _ => return Err(Error::NonPolynomialHomotopy),
        };
        let rest = mono.without(lambda);
        if Expr::from_poly(Poly::monomial(rest.clone(), rat(1))).depends_on(lambda) {
            return Err(Error::NonPolynomialHomotopy);
        }
        num.add_term(rest, c / rat(k + 1));
    }
    let mut out = Expr::from_poly(num);
    for (p, k) in e.denominator() {
        let f = Expr::from_poly(p.clone()).pow_int(*k as i64).unwrap();
        out = out.checked_div(&f).ok_or(Error::DivisionByZero)?;
    }
    Ok(out)
}

fn reduce_all(exprs: &[Expr], system: &PdeSystem) -> Result<Vec<Expr>> {
    let mut r = Reducer::new(system.kovalevskaya_data()?);
    exprs.iter().map(|e| r.reduce(e)).collect()
}

fn all_zero(exprs: &[Expr], oracle: &Oracle) -> Result<Verdict> {
    let mut v = Verdict::ProvedEqual;
    for e in exprs {
        v = v.and(equals(e, &Expr::zero(), oracle)?);
        if !v.holds() {
            break;
        }
    }
    Ok(v)
}

/// `Δ^* ∘ l_F − l_F^* ∘ Δ`.
pub fn symplectic_defect(op: &TotalDiffOp, system: &PdeSystem) -> Result<TotalDiffOp> {
    let m = system.context.m();
    if op.rows() != m || op.cols() != m {
        return Err(Error::ShapeMismatch(format!("candidate must be {m}x{m}")));
    }
    system.require_square()?;
    let l = linearize(system);
    op.adjoint().compose(&l)?.sub(&l.adjoint().compose(op)?)
}

/// Whether `Δ^* ∘ l_E = l_E^* ∘ Δ` holds on-shell for this representative.
pub fn symplectic_check(op: &TotalDiffOp, system: &PdeSystem, oracle: &Oracle) -> Result<Verdict> {
    system.kovalevskaya_data()?;
    let r = symplectic_defect(op, system)?;
    let zero = TotalDiffOp::zero(r.rows(), r.cols(), r.dim());
    op_equals_on_shell(&r, &zero, system, oracle)
}

/// `l_F(φ)` reduced on-shell.
pub fn symmetry_residual(phi: &[Expr], system: &PdeSystem) -> Result<Vec<Expr>> {
    reduce_all(&linearize(system).apply(phi)?, system)
}

/// `l_F^*(ψ)` reduced on-shell.
pub fn cosymmetry_residual(psi: &[Expr], system: &PdeSystem) -> Result<Vec<Expr>> {
    reduce_all(&linearize(system).adjoint().apply(psi)?, system)
}

pub fn is_symmetry(phi: &[Expr], system: &PdeSystem, oracle: &Oracle) -> Result<Verdict> {
    all_zero(&symmetry_residual(phi, system)?, oracle)
}

pub fn is_cosymmetry(psi: &[Expr], system: &PdeSystem, oracle: &Oracle) -> Result<Verdict> {
    all_zero(&cosymmetry_residual(psi, system)?, oracle)
}

#[derive(Clone, Debug)]
pub struct NoetherImage {
    pub cosymmetry: Vec<Expr>,
    pub verdict: Verdict,
}

/// `ψ = Δ(φ)`, checked to be a cosymmetry.
pub fn noether_map(op: &TotalDiffOp, phi: &[Expr], system: &PdeSystem, oracle: &Oracle) -> Result<NoetherImage> {
    if !is_symmetry(phi, system, oracle)?.holds() {
        return Err(Error::NotASymmetry("argument of the Noether map".into()));
    }
    let psi = op.apply(phi)?;
    let verdict = is_cosymmetry(&psi, system, oracle)?;
    if !verdict.holds() {
        return Err(Error::NotSymplecticOnSymmetry);
    }
    Ok(NoetherImage { cosymmetry: psi, verdict })
}

/// Per-symmetry outcome of [`degeneracy_check`].
#[derive(Clone, Debug)]
pub struct DegeneracyEntry {
    pub name: String,
    pub symmetry: Verdict,
    /// `Δ(φ)` reduced on-shell.
    pub image: Vec<Expr>,
    /// Whether the image vanishes.
    pub vanishes: Verdict,
}

impl DegeneracyEntry {
    pub fn degenerate(&self) -> bool {
        self.vanishes.holds()
    }

    pub fn describe(&self) -> &'static str {
        if self.degenerate() {
            "lift-compatible (degenerate on φ)"
        } else {
            "not a lift (nondegenerate on φ)"
        }
    }
}

#[derive(Clone, Debug)]
pub struct DegeneracyReport {
    pub entries: Vec<DegeneracyEntry>,
}

impl DegeneracyReport {
    /// A single nondegenerate fiber symmetry shows the candidate is not
    /// lifted from the base system.
    pub fn not_a_lift(&self) -> bool {
        self.entries.iter().any(|e| !e.degenerate())
    }
}

/// For each fiber symmetry `φ`, decides whether `Δ(φ)` vanishes on-shell.
/// `nonlocal` lists the dependent variables of the fiber; components of `φ`
/// along other dependents must vanish.
pub fn degeneracy_check(
    op: &TotalDiffOp,
    symmetries: &[(String, Vec<Expr>)],
    nonlocal: Option<&[usize]>,
    system: &PdeSystem,
    oracle: &Oracle,
) -> Result<DegeneracyReport> {
    let mut entries = Vec::new();
    for (name, phi) in symmetries {
        if let Some(fiber) = nonlocal {
            if phi.iter().enumerate().any(|(j, p)| !fiber.contains(&j) && !p.is_zero()) {
                return Err(Error::Invalid(format!("symmetry `{name}` acts on base variables")));
            }
        }
        let symmetry = is_symmetry(phi, system, oracle)?;
        if !symmetry.holds() {
            return Err(Error::NotASymmetry(name.clone()));
        }
        let image = reduce_all(&op.apply(phi)?, system)?;
        let vanishes = all_zero(&image, oracle)?;
        entries.push(DegeneracyEntry { name: name.clone(), symmetry, image, vanishes });
    }
    Ok(DegeneracyReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ratio;
    use crate::jet::KovalevskayaData;

    fn ctx() -> Context {
        Context::new(&["t", "x"], &["u"])
    }

    #[test]
    fn euler_examples() {
        let c = ctx();
        let v = |s: &str| c.var(s).unwrap();
        let half = Expr::rational(ratio(1, 2));
        let l = &(&half * &(&v("u_t") * &v("u_t"))) - &(&half * &(&v("u_x") * &v("u_x")));
        assert_eq!(euler(&l, &c), vec![&v("u_xx") - &v("u_tt")]);
        let g = &(&v("u") * &v("u_t")) * &v("x");
        let div = crate::jet::total_derivative(&g, 1);
        assert!(euler(&div, &c)[0].is_zero());
    }

    #[test]
    fn gas_lagrangian_euler() {
        let c = Context::new(&["t", "m"], &["x"]).with_constant("C", true).with_constant("gamma", false);
        let v = |s: &str| c.var(s).unwrap();
        let (cc, g, one) = (v("C"), v("gamma"), Expr::one());
        let l = &(&Expr::rational(ratio(1, 2)) * &(&v("x_t") * &v("x_t")))
            - &(&(&cc * &v("x_m").pow(&(&one - &g)).unwrap()) / &(&g - &one));
        let expected = &(&(&cc * &g) * &(&v("x_m").pow(&(-&g - &one)).unwrap() * &v("x_mm"))) - &v("x_tt");
        assert_eq!(euler(&l, &c), vec![expected]);
    }

    #[test]
    fn helmholtz_examples() {
        let c = ctx();
        let v = |s: &str| c.var(s).unwrap();
        let o = Oracle::default();
        let wave = PdeSystem::new(c.clone(), vec![&v("u_tt") - &v("u_xx")]);
        let r = is_variational(&wave, &o).unwrap();
        assert!(r.is_variational());
        assert_eq!(euler(r.lagrangian.as_ref().unwrap(), &c), wave.equations);
        let heat = PdeSystem::new(c.clone(), vec![&v("u_t") - &v("u_xx")]);
        let r = is_variational(&heat, &o).unwrap();
        assert!(!r.is_variational());
        assert_eq!(r.violation, Some((0, 0)));
    }

    #[test]
    fn homotopy_examples() {
        let c = ctx();
        let v = |s: &str| c.var(s).unwrap();
        let l = homotopy_lagrangian(&[v("u")], &c, None).unwrap();
        assert_eq!(l, &Expr::rational(ratio(1, 2)) * &(&v("u") * &v("u")));
        let f = &(&Expr::int(3) * &(&v("u") * &v("u"))) - &v("u_xx");
        let l = homotopy_lagrangian(&[f.clone()], &c, None).unwrap();
        let hand = &(&v("u") * &(&v("u") * &v("u"))) - &(&Expr::rational(ratio(1, 2)) * &(&v("u") * &v("u_xx")));
        assert_eq!(l, hand);
        assert_eq!(euler(&l, &c), vec![f]);
        let singular = v("u").recip().unwrap();
        assert_eq!(homotopy_lagrangian(&[singular.clone()], &c, None), Err(Error::NonPolynomialHomotopy));
        // shifted base point
        let l = homotopy_lagrangian(&[&v("u") + &Expr::one()], &c, Some(&[Expr::int(-1)])).unwrap();
        assert_eq!(euler(&l, &c), vec![&v("u") + &Expr::one()]);
    }

    fn heat_t() -> PdeSystem {
        let c = ctx();
        let v = |s: &str| c.var(s).unwrap();
        PdeSystem::new(c.clone(), vec![&v("u_t") - &v("u_xx")])
            .with_kovalevskaya(KovalevskayaData::new(0, vec![1], vec![v("u_xx")]))
    }

    fn wave_t() -> PdeSystem {
        let c = ctx();
        let v = |s: &str| c.var(s).unwrap();
        PdeSystem::new(c.clone(), vec![&v("u_tt") - &v("u_xx")])
            .with_kovalevskaya(KovalevskayaData::new(0, vec![2], vec![v("u_xx")]))
    }

    #[test]
    fn symplectic_examples() {
        let o = Oracle::default();
        let id = TotalDiffOp::identity(1, 2);
        assert_eq!(symplectic_check(&id, &wave_t(), &o).unwrap(), Verdict::ProvedEqual);
        assert!(!symplectic_check(&id, &heat_t(), &o).unwrap().holds());
    }

    #[test]
    fn symmetry_examples() {
        let o = Oracle::default();
        let h = heat_t();
        let v = |s: &str| h.context.var(s).unwrap();
        assert!(is_symmetry(&[v("u_x")], &h, &o).unwrap().holds());
        assert!(is_symmetry(&[Expr::one()], &h, &o).unwrap().holds());
        let c = ctx();
        let w = |s: &str| c.var(s).unwrap();
        let kdv_rhs = -(&(&w("u") * &w("u_x")) + &w("u_xxx"));
        let kdv = PdeSystem::new(c.clone(), vec![&w("u_t") - &kdv_rhs])
            .with_kovalevskaya(KovalevskayaData::new(0, vec![1], vec![kdv_rhs]));
        assert!(!is_symmetry(&[w("u")], &kdv, &o).unwrap().holds());
    }

    #[test]
    fn noether_examples() {
        let o = Oracle::default();
        let w = wave_t();
        let v = |s: &str| w.context.var(s).unwrap();
        let id = TotalDiffOp::identity(1, 2);
        assert_eq!(noether_map(&id, &[v("u_t")], &w, &o).unwrap().cosymmetry, vec![v("u_t")]);
        assert_eq!(noether_map(&id, &[v("u_x")], &w, &o).unwrap().cosymmetry, vec![v("u_x")]);
    }

    #[test]
    fn trivial_degeneracy() {
        let o = Oracle::default();
        let w = wave_t();
        let v = |s: &str| w.context.var(s).unwrap();
        let l = linearize(&w);
        let r = degeneracy_check(&l, &[("zero".into(), vec![Expr::zero()]), ("dt".into(), vec![v("u_t")])], None, &w, &o).unwrap();
        assert!(r.entries.iter().all(DegeneracyEntry::degenerate));
        assert!(!r.not_a_lift());
    }
}
