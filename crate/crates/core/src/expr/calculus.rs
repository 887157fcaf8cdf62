use std::collections::HashMap;

use num_traits::One;

use super::{Atom, Exponent, Expr, FuncApp, Monomial, Poly, Rational};
use crate::error::{Error, Result};

struct Deriver<'a> {
    leaf: &'a dyn Fn(&Atom) -> Expr,
    cache: HashMap<Atom, Expr>,
}

impl Deriver<'_> {
    fn atom(&mut self, a: &Atom) -> Expr {
        if let Some(d) = self.cache.get(a) {
            return d.clone();
        }
        let d = match a {
            Atom::Indep(_) | Atom::Const(_) | Atom::Jet(_) => (self.leaf)(a),
            Atom::Func(app) => {
                let mut acc = Expr::zero();
                for (k, arg) in app.args.iter().enumerate() {
                    let darg = self.expr(arg);
                    if darg.is_zero() {
                        continue;
                    }
                    let mut orders = app.orders.clone();
                    orders[k] += 1;
                    let outer = Expr::atom(Atom::Func(FuncApp { func: app.func, orders, args: app.args.clone() }));
                    acc = &acc + &(&outer * &darg);
                }
                acc
            }
            Atom::Log(b) => {
                let db = self.expr(b);
                if db.is_zero() {
                    db
                } else {
                    &db / b
                }
            }
            Atom::Paren(b) => self.expr(b),
        };
        self.cache.insert(a.clone(), d.clone());
        d
    }

    fn monomial(&mut self, m: &Monomial, c: &Rational) -> Expr {
        let mut acc = Expr::zero();
        for (a, e) in m.factors() {
            let da = self.atom(a);
            let rest = Expr::from_poly(Poly::monomial(m.without(a), c.clone()));
            if !da.is_zero() {
                let lowered = Expr::from_poly(Poly::monomial(
                    Monomial::atom(a.clone(), e.add(&Exponent::Int(-1))),
                    Rational::one(),
                ));
                acc = &acc + &(&(&rest * &e.to_expr()) * &(&lowered * &da));
            }
            if let Exponent::Sym(x) = e {
                let dx = self.expr(x);
                if !dx.is_zero() {
                    let power = Expr::from_poly(Poly::monomial(Monomial::atom(a.clone(), e.clone()), Rational::one()));
                    let log = Expr::ln(&a.to_expr()).expect("nonzero base");
                    acc = &acc + &(&(&rest * &power) * &(&log * &dx));
                }
            }
        }
        acc
    }

    fn poly(&mut self, p: &Poly) -> Expr {
        let mut acc = Expr::zero();
        for (m, c) in p.terms() {
            acc = &acc + &self.monomial(m, c);
        }
        acc
    }

    fn expr(&mut self, e: &Expr) -> Expr {
        let dn = self.poly(e.numerator());
        if e.denominator().is_empty() {
            return dn;
        }
        let inv_den = Expr::from_parts(Poly::one(), e.denominator().to_vec());
        let num = Expr::from_poly(e.numerator().clone());
        let mut acc = &dn * &inv_den;
        for (f, k) in e.denominator() {
            let df = self.poly(f);
            if df.is_zero() {
                continue;
            }
            let inv_f = Expr::from_parts(Poly::one(), vec![(f.clone(), 1)]);
            let term = &(&num * &df) * &(&inv_den * &inv_f);
            acc = &acc - &term.scale(&super::rat(*k as i64));
        }
        acc
    }
}

/// Extends a derivation given on leaf atoms (independent variables,
/// constants, jet coordinates) to all expressions by the chain rule.
pub fn derive_with(e: &Expr, leaf: &dyn Fn(&Atom) -> Expr) -> Expr {
    Deriver { leaf, cache: HashMap::new() }.expr(e)
}

/// `∂e/∂v`, treating every other leaf as an independent symbol.
pub fn partial_derivative(e: &Expr, v: &Atom) -> Expr {
    derive_with(e, &|a| if a == v { Expr::one() } else { Expr::zero() })
}

struct Substituter<'a> {
    bindings: &'a HashMap<Atom, Expr>,
    cache: HashMap<Atom, Option<Expr>>,
}

impl Substituter<'_> {
    /// `None` when the atom is unaffected.
    fn atom(&mut self, a: &Atom) -> Result<Option<Expr>> {
        if let Some(v) = self.cache.get(a) {
            return Ok(v.clone());
        }
        let out = match a {
            Atom::Indep(_) | Atom::Const(_) | Atom::Jet(_) => self.bindings.get(a).cloned(),
            Atom::Func(app) => {
                let mut changed = false;
                let mut args = Vec::with_capacity(app.args.len());
                for x in &app.args {
                    let y = self.expr(x)?;
                    changed |= y != *x;
                    args.push(y);
                }
                changed.then(|| Expr::func(app.func, app.orders.clone(), args))
            }
            Atom::Log(b) => {
                let y = self.expr(b)?;
                if y != *b {
                    Some(Expr::ln(&y).ok_or(Error::DivisionByZero)?)
                } else {
                    None
                }
            }
            Atom::Paren(b) => {
                let y = self.expr(b)?;
                (y != *b).then_some(y)
            }
        };
        self.cache.insert(a.clone(), out.clone());
        Ok(out)
    }

    fn poly(&mut self, p: &Poly) -> Result<Expr> {
        let mut acc = Expr::zero();
        for (m, c) in p.terms() {
            let mut term = Expr::rational(c.clone());
            let mut untouched = Vec::new();
            for (a, e) in m.factors() {
                let new_exp = match e {
                    Exponent::Sym(x) => {
                        let y = self.expr(x)?;
                        (y != *x).then_some(y)
                    }
                    Exponent::Int(_) => None,
                };
                match (self.atom(a)?, new_exp) {
                    (None, None) => untouched.push((a.clone(), e.clone())),
                    (base, exp) => {
                        let base = base.unwrap_or_else(|| a.to_expr());
                        let exp = exp.unwrap_or_else(|| e.to_expr());
                        term = &term * &base.pow(&exp).ok_or(Error::DivisionByZero)?;
                    }
                }
            }
            if !untouched.is_empty() {
                term = &term * &Expr::from_poly(Poly::monomial(Monomial::from_factors(untouched), Rational::one()));
            }
            acc = &acc + &term;
        }
        Ok(acc)
    }

    fn expr(&mut self, e: &Expr) -> Result<Expr> {
        let mut touched = false;
        e.visit_atoms(&mut |a| touched |= a.is_leaf() && self.bindings.contains_key(a));
        if !touched {
            return Ok(e.clone());
        }
        let mut out = self.poly(e.numerator())?;
        for (f, k) in e.denominator() {
            let g = self.poly(f)?;
            let g = g.pow_int(*k as i64).ok_or(Error::DivisionByZero)?;
            out = out.checked_div(&g).ok_or(Error::DivisionByZero)?;
        }
        Ok(out)
    }
}

/// Simultaneous single-pass replacement of leaf atoms, followed by
/// normalization. Unbound atoms pass through unchanged.
pub fn substitute(e: &Expr, bindings: &HashMap<Atom, Expr>) -> Result<Expr> {
    if bindings.is_empty() {
        return Ok(e.clone());
    }
    Substituter { bindings, cache: HashMap::new() }.expr(e)
}
