use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{Atom, Expr};
use crate::jet::{total_derivative, JetCoord, KovalevskayaData, MultiIndex, PdeSystem};
use crate::oracle::{EvalError, Oracle, SamplePoint};

const RESAMPLE_CAP: usize = 100;

/// Unreduced total derivatives `D_γ Φ^j` of the solved right sides, built
/// incrementally.
struct Derivatives<'a> {
    data: &'a KovalevskayaData,
    cache: BTreeMap<(usize, MultiIndex), Expr>,
}

impl Derivatives<'_> {
    fn get(&mut self, dep: usize, gamma: &MultiIndex) -> Expr {
        if let Some(e) = self.cache.get(&(dep, gamma.clone())) {
            return e.clone();
        }
        let e = match (0..gamma.dim()).find(|&i| gamma.get(i) > 0) {
            None => self.data.rhs[dep].clone(),
            Some(i) => {
                let lower = gamma.decremented(i).expect("positive slot");
                total_derivative(&self.get(dep, &lower), i)
            }
        };
        self.cache.insert((dep, gamma.clone()), e.clone());
        e
    }
}

/// A point on the prolonged system up to `order`: internal coordinates are
/// drawn freely and each leading coordinate `u_{β+γ}` (with `u_β = Φ` the
/// solved form) takes the value of `D_γ Φ`. Leading coordinates inside
/// `D_γ Φ` exceed their own pivot by less than `γ_d`, so evaluating in order
/// of that excess is well founded.
pub fn on_shell_sample(system: &PdeSystem, order: u32, oracle: &Oracle, rng: &mut ChaCha8Rng) -> Result<SamplePoint> {
    let data = system.kovalevskaya_data()?;
    let ctx = &system.context;
    let (n, m) = (ctx.n(), ctx.m());
    let d = data.direction;
    let excess = |j: &JetCoord| j.alpha.get(d) - data.orders[j.dep];
    let mut free: BTreeSet<Atom> = BTreeSet::new();
    let mut pending: Vec<JetCoord> = Vec::new();
    for dep in 0..m {
        for alpha in MultiIndex::all_up_to(n, order) {
            let j = JetCoord::new(dep, alpha);
            if data.is_leading(&j) {
                pending.push(j);
            } else {
                free.insert(Atom::Jet(j));
            }
        }
    }
    free.extend((0..n).map(Atom::Indep));
    free.extend((0..ctx.constants.len()).map(Atom::Const));
    let mut derivs = Derivatives { data, cache: BTreeMap::new() };
    let mut images: BTreeMap<JetCoord, Expr> = BTreeMap::new();
    while let Some(j) = pending.pop() {
        if images.contains_key(&j) {
            continue;
        }
        let pivot = data.pivot(j.dep, n).expect("leading coordinate has a rule");
        let gamma = j.alpha.checked_sub(&pivot.alpha).expect("leading coordinate dominates its pivot");
        let e = derivs.get(j.dep, &gamma);
        for a in e.atoms_deep().into_iter().filter(Atom::is_leaf) {
            match &a {
                Atom::Jet(k) if data.is_leading(k) => {
                    if excess(k) >= excess(&j) {
                        return Err(Error::ReductionBound);
                    }
                    pending.push(k.clone());
                }
                _ => {
                    free.insert(a);
                }
            }
        }
        images.insert(j, e);
    }
    let mut ordered: Vec<(JetCoord, Expr)> = images.into_iter().collect();
    ordered.sort_by_key(|(j, _)| excess(j));
    let positive: BTreeSet<Atom> = oracle.positive_atoms().clone();
    'draw: for _ in 0..RESAMPLE_CAP {
        let mut p = oracle.draw_point(&free, &positive, rng);
        for (j, e) in &ordered {
            match oracle.evaluate(e, &p) {
                Ok(v) => p.set(Atom::Jet(j.clone()), v),
                Err(EvalError::Singular) => continue 'draw,
                Err(EvalError::Uncovered(a)) => return Err(Error::UncoveredLeaf(format!("{a:?}"))),
            }
        }
        let leading_positive = positive.iter().any(|a| match a {
            Atom::Jet(j) => data.is_leading(j) && p.get(a).is_some_and(|v| v.to_f64() <= 0.0),
            _ => false,
        });
        if leading_positive {
            continue;
        }
        return Ok(p);
    }
    Err(Error::Undecidable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::Context;
    use crate::jet::{prolong, KovalevskayaData};
    use crate::oracle::Value;

    #[test]
    fn heat_point_satisfies_prolonged_equations() {
        let c = Context::new(&["t", "x"], &["u"]);
        let v = |s: &str| c.var(s).unwrap();
        let s = PdeSystem::new(c.clone(), vec![&v("u_t") - &v("u_xx")])
            .with_kovalevskaya(KovalevskayaData::new(1, vec![2], vec![v("u_t")]));
        let o = Oracle::default();
        let p = on_shell_sample(&s, 4, &o, &mut o.rng()).unwrap();
        assert_eq!(p.get(&c.resolve_leaf("u_xx").unwrap()), p.get(&c.resolve_leaf("u_t").unwrap()));
        assert_eq!(p.get(&c.resolve_leaf("u_xxx").unwrap()), p.get(&c.resolve_leaf("u_tx").unwrap()));
        for g in prolong(&s, 2) {
            assert_eq!(o.evaluate(&g, &p).unwrap(), Value::zero());
        }
    }

    #[test]
    fn respects_positivity() {
        let mut c = Context::new(&["t", "m"], &["x"]);
        c.positive.push(c.resolve_leaf("x_m").unwrap());
        let v = |s: &str| c.var(s).unwrap();
        let s = PdeSystem::new(c.clone(), vec![&v("x_tt") - &v("x_mm")])
            .with_kovalevskaya(KovalevskayaData::new(0, vec![2], vec![v("x_mm")]));
        let o = c.oracle(Default::default());
        let mut rng = o.rng();
        for _ in 0..20 {
            let p = on_shell_sample(&s, 3, &o, &mut rng).unwrap();
            assert!(p.get(&c.resolve_leaf("x_m").unwrap()).unwrap().to_f64() > 0.0);
        }
    }
}
