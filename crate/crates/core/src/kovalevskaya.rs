//! Greedy construction and validation of extended Kovalevskaya forms.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::expr::{equals, partial_derivative, substitute, Atom, Expr, Verdict};
use crate::jet::{prolong, JetCoord, KovalevskayaData, PdeSystem, Reducer};
use crate::oracle::{on_shell_sample, Oracle};

/// One step of the search: `equation` was solved for `pivot`.
#[derive(Clone, Debug, PartialEq)]
pub struct Elimination {
    pub equation: usize,
    pub pivot: JetCoord,
    pub coefficient: Expr,
    /// Right side at the time of the step, before later substitutions.
    pub rhs: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KovalevskayaForm {
    pub direction: usize,
    pub orders: Vec<u32>,
    pub rhs: Vec<Expr>,
    pub trail: Vec<Elimination>,
}

impl KovalevskayaForm {
    pub fn data(&self) -> KovalevskayaData {
        KovalevskayaData::new(self.direction, self.orders.clone(), self.rhs.clone())
    }
}

/// Requested pivot for an equation; applied before the greedy phase.
#[derive(Clone, Debug, PartialEq)]
pub struct Hint {
    pub equation: usize,
    pub pivot: JetCoord,
}

struct Search {
    direction: usize,
    orders: Vec<u32>,
    rhs: Vec<Expr>,
    pending: Vec<Option<Expr>>,
    trail: Vec<Elimination>,
}

impl Search {
    fn data(&self) -> KovalevskayaData {
        KovalevskayaData::new(self.direction, self.orders.clone(), self.rhs.clone())
    }

    fn is_pure(&self, j: &JetCoord) -> bool {
        j.alpha.get(self.direction) == j.order() && j.order() > 0
    }

    /// `(coefficient, Φ)` if `f` is linear in `pivot` with a usable
    /// coefficient and a remainder free of the pivot's leading coordinates.
    fn solve_for(&self, f: &Expr, pivot: &JetCoord) -> Option<(Expr, Expr)> {
        if self.orders[pivot.dep] > 0 || !self.is_pure(pivot) {
            return None;
        }
        let atom = Atom::Jet(pivot.clone());
        let a = partial_derivative(f, &atom);
        if a.is_zero() || a.depends_on(&atom) {
            return None;
        }
        let mut zero = HashMap::new();
        zero.insert(atom, Expr::zero());
        let rest = substitute(f, &zero).ok()?;
        if !(&(&a * &Expr::jet(pivot.clone())) + &rest - f).is_zero() {
            return None;
        }
        let k = pivot.order();
        let d = self.direction;
        let blocked = |e: &Expr| e.jets().iter().any(|j| j.dep == pivot.dep && j.alpha.get(d) >= k);
        if blocked(&a) || blocked(&rest) {
            return None;
        }
        let phi = -(rest.checked_div(&a)?);
        Some((a, phi))
    }

    /// Candidates of one equation, lowest order first.
    fn candidates(&self, f: &Expr) -> Vec<JetCoord> {
        let mut c: Vec<JetCoord> = f.jets().into_iter().filter(|j| self.is_pure(j) && self.orders[j.dep] == 0).collect();
        c.sort_by_key(|j| (j.order(), j.dep));
        c
    }

    fn pivot(&mut self, equation: usize, pivot: JetCoord, a: Expr, phi: Expr) -> Result<()> {
        self.orders[pivot.dep] = pivot.order();
        self.rhs[pivot.dep] = phi.clone();
        self.pending[equation] = None;
        self.trail.push(Elimination { equation, pivot, coefficient: a, rhs: phi });
        let data = self.data();
        let mut r = Reducer::new(&data);
        let bound = |_| Error::KovalevskayaSearch("elimination does not terminate".into());
        for k in 0..self.rhs.len() {
            if self.orders[k] > 0 {
                let reduced = r.reduce(&self.rhs[k]).map_err(bound)?;
                self.rhs[k] = reduced;
            }
        }
        for f in self.pending.iter_mut().flatten() {
            *f = r.reduce(f).map_err(bound)?;
        }
        Ok(())
    }
}

/// Solves each equation for a pure `direction` derivative of a distinct
/// dependent variable, substituting every solved equation (and its total
/// derivatives) into the others. Hints are applied first, in order; then
/// the lowest-indexed equation with a solvable pivot of least order wins.
pub fn to_kovalevskaya(system: &PdeSystem, direction: usize, hints: &[Hint]) -> Result<KovalevskayaForm> {
    system.require_square()?;
    let (n, m) = (system.context.n(), system.context.m());
    if direction >= n {
        return Err(Error::Invalid(format!("direction {direction} out of range")));
    }
    let mut s = Search {
        direction,
        orders: vec![0; m],
        rhs: vec![Expr::zero(); m],
        pending: system.equations.iter().cloned().map(Some).collect(),
        trail: Vec::new(),
    };
    for h in hints {
        let f = s
            .pending
            .get(h.equation)
            .cloned()
            .flatten()
            .ok_or_else(|| Error::KovalevskayaSearch(format!("hint for equation {} is not applicable", h.equation + 1)))?;
        let (a, phi) = s.solve_for(&f, &h.pivot).ok_or_else(|| {
            Error::KovalevskayaSearch(format!(
                "equation {} cannot be solved for {}",
                h.equation + 1,
                system.context.jet_name(&h.pivot)
            ))
        })?;
        s.pivot(h.equation, h.pivot.clone(), a, phi)?;
    }
    while s.pending.iter().any(Option::is_some) {
        let mut chosen = None;
        'eqs: for (e, f) in s.pending.iter().enumerate() {
            let Some(f) = f else { continue };
            for c in s.candidates(f) {
                if let Some((a, phi)) = s.solve_for(f, &c) {
                    chosen = Some((e, c, a, phi));
                    break 'eqs;
                }
            }
        }
        let (e, c, a, phi) = chosen.ok_or_else(|| {
            let left: Vec<String> =
                s.pending.iter().enumerate().filter(|(_, f)| f.is_some()).map(|(e, _)| (e + 1).to_string()).collect();
            Error::KovalevskayaSearch(format!("no solvable pivot in equation(s) {}", left.join(", ")))
        })?;
        s.pivot(e, c, a, phi)?;
    }
    Ok(KovalevskayaForm { direction, orders: s.orders, rhs: s.rhs, trail: s.trail })
}

/// Re-runs the recorded eliminations on `system`, returning the right sides.
pub fn replay(system: &PdeSystem, form: &KovalevskayaForm) -> Result<Vec<Expr>> {
    let hints: Vec<Hint> = form.trail.iter().map(|e| Hint { equation: e.equation, pivot: e.pivot.clone() }).collect();
    Ok(to_kovalevskaya(system, form.direction, &hints)?.rhs)
}

#[derive(Clone, Debug)]
pub struct KovalevskayaValidation {
    /// A right side containing a leading coordinate, with that coordinate.
    pub violation: Option<(usize, JetCoord)>,
    /// Every original equation reduces to zero against the form.
    pub originals_vanish: Option<Verdict>,
    /// Originals evaluated at sampled points of the form.
    pub sampled: Option<Verdict>,
}

impl KovalevskayaValidation {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none()
            && self.originals_vanish.as_ref().is_some_and(Verdict::holds)
            && self.sampled.as_ref().is_some_and(Verdict::holds)
    }
}

/// Checks the independence condition and that the originals vanish on the
/// solution jets parameterized by the form.
pub fn validate_kovalevskaya(data: &KovalevskayaData, system: &PdeSystem, oracle: &Oracle) -> Result<KovalevskayaValidation> {
    let m = system.context.m();
    if data.orders.len() != m || data.rhs.len() != m || data.orders.iter().any(|&b| b == 0) {
        return Err(Error::ShapeMismatch("form must solve every dependent variable".into()));
    }
    if let Some(v) = data.independence_violation() {
        return Ok(KovalevskayaValidation { violation: Some(v), originals_vanish: None, sampled: None });
    }
    let mut r = Reducer::new(data);
    let mut vanish = Verdict::ProvedEqual;
    for f in &system.equations {
        vanish = vanish.and(equals(&r.reduce(f)?, &Expr::zero(), oracle)?);
    }
    let with_form = system.clone().with_kovalevskaya(data.clone());
    let order = system.equations.iter().filter_map(Expr::max_order).max().unwrap_or(0) + 1;
    let prolonged = prolong(system, 1);
    let mut rng = oracle.rng();
    let mut sampled = Verdict::ProbablyEqual { seed: oracle.config.seed, trials: oracle.config.trials };
    for _ in 0..oracle.config.trials {
        let p = on_shell_sample(&with_form, order, oracle, &mut rng)?;
        for g in &prolonged {
            match oracle.evaluate(g, &p) {
                Ok(v) if oracle.values_agree(&v, &crate::oracle::Value::zero()) => {}
                Ok(v) => {
                    sampled = Verdict::ProvedUnequal {
                        witness: Some(crate::oracle::Witness {
                            point: p.values.clone().into_iter().collect(),
                            lhs: v,
                            rhs: crate::oracle::Value::zero(),
                        }),
                    };
                }
                Err(_) => {}
            }
        }
        if !sampled.holds() {
            break;
        }
    }
    Ok(KovalevskayaValidation { violation: None, originals_vanish: Some(vanish), sampled: Some(sampled) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::Context;

    fn heat() -> PdeSystem {
        let c = Context::new(&["t", "x"], &["u"]);
        let v = |s: &str| c.var(s).unwrap();
        PdeSystem::new(c.clone(), vec![&v("u_t") - &v("u_xx")])
    }

    #[test]
    fn heat_in_both_directions() {
        let h = heat();
        let v = |s: &str| h.context.var(s).unwrap();
        let f = to_kovalevskaya(&h, 1, &[]).unwrap();
        assert_eq!((f.orders.clone(), f.rhs.clone()), (vec![2], vec![v("u_t")]));
        let f = to_kovalevskaya(&h, 0, &[]).unwrap();
        assert_eq!((f.orders.clone(), f.rhs.clone()), (vec![1], vec![v("u_xx")]));
        assert_eq!(replay(&h, &f).unwrap(), f.rhs);
        let o = Oracle::default();
        assert!(validate_kovalevskaya(&f.data(), &h, &o).unwrap().is_valid());
    }

    #[test]
    fn corrupted_form_names_the_coordinate() {
        let h = heat();
        let v = |s: &str| h.context.var(s).unwrap();
        let bad = KovalevskayaData::new(1, vec![2], vec![&v("u_t") + &v("u_txx")]);
        let r = validate_kovalevskaya(&bad, &h, &Oracle::default()).unwrap();
        assert!(!r.is_valid());
        assert_eq!(r.violation.map(|(_, j)| h.context.jet_name(&j)), Some("u_txx".to_string()));
    }

    #[test]
    fn wrong_form_is_rejected() {
        let h = heat();
        let v = |s: &str| h.context.var(s).unwrap();
        let bad = KovalevskayaData::new(1, vec![2], vec![&v("u_t") + &v("u")]);
        assert!(!validate_kovalevskaya(&bad, &h, &Oracle::default()).unwrap().is_valid());
    }

    #[test]
    fn search_failure_is_reported() {
        let c = Context::new(&["t", "x"], &["u"]);
        let v = |s: &str| c.var(s).unwrap();
        let s = PdeSystem::new(c.clone(), vec![&v("u_t") * &v("u_t")]);
        assert!(matches!(to_kovalevskaya(&s, 0, &[]), Err(Error::KovalevskayaSearch(_))));
    }
}
