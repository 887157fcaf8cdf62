//! Exact symbolic expressions over jet coordinates.
//!
//! Every [`Expr`] is kept in a canonical form: a Laurent polynomial numerator
//! with exact rational coefficients over a set of atomic generators, divided
//! by a product of powers of primitive, content-free polynomial factors.
//! Atoms are independent variables, jet coordinates, constants, applications
//! of opaque function symbols, logarithms and parenthesized bases raised to
//! non-integer powers. Exponents of atoms are either integers or constant
//! symbolic expressions (e.g. `x_m^(1-gamma)`).
//!
//! Zero has the unique normal form "empty numerator, no denominator", so
//! `normalize(a - b) == 0` decides equality inside the rational fragment.

mod calculus;
mod division;
mod equality;
mod poly;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::jet::JetCoord;

pub use calculus::{derive_with, partial_derivative, substitute};
pub use equality::{equals, Verdict, VerdictSummary};
pub use poly::{Monomial, Poly};

pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Application of an opaque function symbol, possibly differentiated
/// `orders[k]` times in its `k`-th argument slot.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FuncApp {
    pub func: usize,
    pub orders: Vec<u32>,
    pub args: Vec<Expr>,
}

/// Generators of the polynomial algebra.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Atom {
    Indep(usize),
    Const(usize),
    Jet(JetCoord),
    Func(FuncApp),
    Log(Expr),
    /// A non-monomial base; only ever carries a non-integer exponent.
    Paren(Expr),
}

impl Atom {
    pub fn is_leaf(&self) -> bool {
        matches!(self, Atom::Indep(_) | Atom::Const(_) | Atom::Jet(_))
    }

    /// The value this atom stands for, as an expression.
    pub fn to_expr(&self) -> Expr {
        match self {
            Atom::Paren(b) => b.clone(),
            a => Expr::atom(a.clone()),
        }
    }
}

/// Exponent of an atom inside a monomial.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Exponent {
    Int(i64),
    /// Never an integer constant.
    Sym(Expr),
}

impl Exponent {
    pub fn from_expr(e: Expr) -> Exponent {
        match e.as_rational() {
            Some(r) if r.is_integer() => match r.to_integer().to_i64() {
                Some(k) => Exponent::Int(k),
                None => Exponent::Sym(e),
            },
            _ => Exponent::Sym(e),
        }
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            Exponent::Int(k) => Expr::int(*k),
            Exponent::Sym(e) => e.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Exponent::Int(0))
    }

    pub fn add(&self, other: &Exponent) -> Exponent {
        match (self, other) {
            (Exponent::Int(a), Exponent::Int(b)) => Exponent::Int(a + b),
            _ => Exponent::from_expr(&self.to_expr() + &other.to_expr()),
        }
    }

    pub fn scale(&self, k: i64) -> Exponent {
        match self {
            Exponent::Int(a) => Exponent::Int(a * k),
            Exponent::Sym(e) => Exponent::from_expr(e * &Expr::int(k)),
        }
    }

    pub fn mul_expr(&self, e: &Expr) -> Exponent {
        Exponent::from_expr(&self.to_expr() * e)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
struct ExprInner {
    num: Poly,
    den: Vec<(Poly, u32)>,
}

/// An immutable, canonical symbolic expression. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(Arc<ExprInner>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.den.is_empty() {
            write!(f, "{:?}", self.0.num)
        } else {
            write!(f, "({:?})/{:?}", self.0.num, self.0.den)
        }
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::from_poly(Poly::zero())
    }

    pub fn one() -> Expr {
        Expr::rational(Rational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::rational(rat(n))
    }

    pub fn rational(r: Rational) -> Expr {
        Expr::from_poly(Poly::constant(r))
    }

    pub fn atom(a: Atom) -> Expr {
        Expr::from_poly(Poly::monomial(Monomial::atom(a, Exponent::Int(1)), Rational::one()))
    }

    pub fn indep(i: usize) -> Expr {
        Expr::atom(Atom::Indep(i))
    }

    pub fn constant(i: usize) -> Expr {
        Expr::atom(Atom::Const(i))
    }

    pub fn jet(j: JetCoord) -> Expr {
        Expr::atom(Atom::Jet(j))
    }

    pub fn func(func: usize, orders: Vec<u32>, args: Vec<Expr>) -> Expr {
        Expr::atom(Atom::Func(FuncApp { func, orders, args }))
    }

    pub fn ln(e: &Expr) -> Option<Expr> {
        if e.is_zero() {
            return None;
        }
        if e.as_rational().is_some_and(|r| r.is_one()) {
            return Some(Expr::zero());
        }
        Some(Expr::atom(Atom::Log(e.clone())))
    }

    /// A polynomial without denominator. Integer powers of parenthesized
    /// bases are expanded.
    pub fn from_poly(num: Poly) -> Expr {
        Expr::from_parts(num, Vec::new())
    }

    /// Builds the canonical form of `num / Π f^e`, where each `f` is already
    /// a normalized denominator factor.
    pub(crate) fn from_parts(num: Poly, den: Vec<(Poly, u32)>) -> Expr {
        if num.has_integer_paren() {
            let expanded = expand_integer_parens(&num);
            return &expanded * &Expr::from_parts(Poly::one(), den);
        }
        if num.is_zero() {
            return Expr(Arc::new(ExprInner { num, den: Vec::new() }));
        }
        let mut num = num;
        let mut den = division::refine_factors(den);
        if num.len() > 1 {
            for (f, e) in den.iter_mut() {
                while *e > 0 {
                    match division::exact_div(&num, f) {
                        Some(q) => {
                            num = q;
                            *e -= 1;
                        }
                        None => break,
                    }
                }
            }
            den.retain(|(_, e)| *e > 0);
        }
        Expr(Arc::new(ExprInner { num, den }))
    }

    /// Re-runs normalization on the stored parts. Canonical values are
    /// fixed points.
    pub fn normalize(&self) -> Expr {
        Expr::from_parts(self.0.num.clone(), self.0.den.clone())
    }

    pub fn numerator(&self) -> &Poly {
        &self.0.num
    }

    pub fn denominator(&self) -> &[(Poly, u32)] {
        &self.0.den
    }

    pub fn is_zero(&self) -> bool {
        self.0.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.0.den.is_empty()
    }

    pub fn as_rational(&self) -> Option<Rational> {
        if self.0.den.is_empty() {
            self.0.num.as_constant()
        } else {
            None
        }
    }

    pub fn as_monomial(&self) -> Option<(&Monomial, &Rational)> {
        if self.0.den.is_empty() && self.0.num.len() == 1 {
            self.0.num.terms().next()
        } else {
            None
        }
    }

    /// `1 / self`, or `None` for zero.
    pub fn recip(&self) -> Option<Expr> {
        if self.is_zero() {
            return None;
        }
        let mut num = Poly::one();
        for (f, e) in &self.0.den {
            num = num.mul(&f.pow(*e));
        }
        let (content, mono, prim) = division::split_content(&self.0.num);
        let scale = Poly::monomial(mono.inverse(), content.recip());
        let num = num.mul(&scale);
        let den = if prim.len() > 1 { vec![(prim, 1)] } else { Vec::new() };
        Some(Expr::from_parts(num, den))
    }

    pub fn checked_div(&self, other: &Expr) -> Option<Expr> {
        other.recip().map(|r| self * &r)
    }

    pub fn pow_int(&self, k: i64) -> Option<Expr> {
        if k < 0 {
            return self.recip().and_then(|r| r.pow_int(-k));
        }
        let k32 = u32::try_from(k).ok()?;
        if let Some((m, c)) = self.as_monomial() {
            let m = m.pow(k);
            return Some(Expr::from_poly(Poly::monomial(m, pow_rational(c, k32))));
        }
        let num = self.0.num.pow(k32);
        let den = self.0.den.iter().map(|(f, e)| (f.clone(), e * k32)).collect();
        Some(Expr::from_parts(num, den))
    }

    /// `self^exponent`. Non-integer powers assume a positive base.
    pub fn pow(&self, exponent: &Expr) -> Option<Expr> {
        match Exponent::from_expr(exponent.clone()) {
            Exponent::Int(k) => self.pow_int(k),
            Exponent::Sym(e) => {
                if self.is_zero() {
                    return if e.as_rational().is_some_and(|r| r.is_positive()) {
                        Some(Expr::zero())
                    } else {
                        None
                    };
                }
                if let Some(r) = self.as_rational() {
                    if r.is_one() {
                        return Some(Expr::one());
                    }
                }
                if let Some((m, c)) = self.as_monomial() {
                    if c.is_one() {
                        let m = m.pow_exponent(&e);
                        return Some(Expr::from_poly(Poly::monomial(m, Rational::one())));
                    }
                }
                let atom = Atom::Paren(self.clone());
                Some(Expr::from_poly(Poly::monomial(
                    Monomial::atom(atom, Exponent::Sym(e)),
                    Rational::one(),
                )))
            }
        }
    }

    pub fn scale(&self, r: &Rational) -> Expr {
        if r.is_zero() {
            return Expr::zero();
        }
        Expr::from_parts(self.0.num.scale(r), self.0.den.clone())
    }

    /// All atoms appearing anywhere in the canonical form (not recursing into
    /// composite atoms).
    pub fn atoms(&self) -> std::collections::BTreeSet<Atom> {
        let mut out = std::collections::BTreeSet::new();
        self.0.num.collect_atoms(&mut out);
        for (f, _) in &self.0.den {
            f.collect_atoms(&mut out);
        }
        out
    }

    /// Every atom, recursing into function arguments, logarithms, paren bases
    /// and symbolic exponents.
    pub fn atoms_deep(&self) -> std::collections::BTreeSet<Atom> {
        let mut out = std::collections::BTreeSet::new();
        self.visit_atoms(&mut |a| {
            out.insert(a.clone());
        });
        out
    }

    pub fn visit_atoms(&self, f: &mut dyn FnMut(&Atom)) {
        let visit_poly = |p: &Poly, f: &mut dyn FnMut(&Atom)| {
            for (m, _) in p.terms() {
                for (a, e) in m.factors() {
                    f(a);
                    match a {
                        Atom::Func(app) => app.args.iter().for_each(|x| x.visit_atoms(f)),
                        Atom::Log(x) | Atom::Paren(x) => x.visit_atoms(f),
                        _ => {}
                    }
                    if let Exponent::Sym(x) = e {
                        x.visit_atoms(f);
                    }
                }
            }
        };
        visit_poly(&self.0.num, f);
        for (p, _) in &self.0.den {
            visit_poly(p, f);
        }
    }

    /// Jet coordinates occurring anywhere in the expression.
    pub fn jets(&self) -> std::collections::BTreeSet<JetCoord> {
        self.atoms_deep()
            .into_iter()
            .filter_map(|a| match a {
                Atom::Jet(j) => Some(j),
                _ => None,
            })
            .collect()
    }

    pub fn depends_on(&self, atom: &Atom) -> bool {
        let mut found = false;
        self.visit_atoms(&mut |a| found |= a == atom);
        found
    }

    /// True iff the expression is a polynomial (or rational function) in its
    /// atoms, with only integer exponents and no opaque functions, logarithms
    /// or parenthesized powers.
    pub fn is_rational_fragment(&self) -> bool {
        let check = |p: &Poly| {
            p.terms().all(|(m, _)| {
                m.factors()
                    .iter()
                    .all(|(a, e)| a.is_leaf() && matches!(e, Exponent::Int(_)))
            })
        };
        check(&self.0.num) && self.0.den.iter().all(|(p, _)| check(p))
    }

    /// Maximum order of a jet coordinate of dependent `dep`, if any occurs.
    pub fn max_order(&self) -> Option<u32> {
        self.jets().iter().map(|j| j.order()).max()
    }

    /// Splits the numerator into per-term expressions (denominator shared).
    pub fn terms(&self) -> Vec<Expr> {
        let den = Expr::from_parts(Poly::one(), self.0.den.clone());
        self.0
            .num
            .terms()
            .map(|(m, c)| &Expr::from_poly(Poly::monomial(m.clone(), c.clone())) * &den)
            .collect()
    }
}

fn pow_rational(r: &Rational, k: u32) -> Rational {
    let mut out = Rational::one();
    for _ in 0..k {
        out *= r;
    }
    out
}

fn expand_integer_parens(p: &Poly) -> Expr {
    let mut acc = Expr::zero();
    for (m, c) in p.terms() {
        let mut term = Expr::rational(c.clone());
        for (a, e) in m.factors() {
            let factor = match (a, e) {
                (Atom::Paren(b), Exponent::Int(k)) => b.pow_int(*k).expect("nonzero paren base"),
                _ => Expr::from_poly(Poly::monomial(Monomial::atom(a.clone(), e.clone()), Rational::one())),
            };
            term = &term * &factor;
        }
        acc = &acc + &term;
    }
    acc
}

impl<'a> Add<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        if self.0.den.is_empty() && rhs.0.den.is_empty() {
            return Expr::from_poly(self.0.num.add(&rhs.0.num));
        }
        let mut lcm: BTreeMap<Poly, u32> = BTreeMap::new();
        for (f, e) in self.0.den.iter().chain(rhs.0.den.iter()) {
            let slot = lcm.entry(f.clone()).or_insert(0);
            *slot = (*slot).max(*e);
        }
        let cofactor = |den: &[(Poly, u32)]| {
            let mut out = Poly::one();
            for (f, e) in &lcm {
                let have = den.iter().find(|(g, _)| g == f).map(|(_, k)| *k).unwrap_or(0);
                out = out.mul(&f.pow(e - have));
            }
            out
        };
        let num = self
            .0
            .num
            .mul(&cofactor(&self.0.den))
            .add(&rhs.0.num.mul(&cofactor(&rhs.0.den)));
        Expr::from_parts(num, lcm.into_iter().collect())
    }
}

impl<'a> Sub<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if let Some(r) = self.as_rational() {
            return rhs.scale(&r);
        }
        if let Some(r) = rhs.as_rational() {
            return self.scale(&r);
        }
        let num = self.0.num.mul(&rhs.0.num);
        let mut den = self.0.den.clone();
        for (f, e) in &rhs.0.den {
            match den.iter_mut().find(|(g, _)| g == f) {
                Some((_, k)) => *k += e,
                None => den.push((f.clone(), *e)),
            }
        }
        Expr::from_parts(num, den)
    }
}

impl<'a> Div<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        self.checked_div(rhs).expect("division by the zero expression")
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr(Arc::new(ExprInner { num: self.0.num.neg(), den: self.0.den.clone() }))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<Expr> for &'a Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| &a + &b)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::MultiIndex;

    fn u(alpha: &[u32]) -> Expr {
        Expr::jet(JetCoord::new(0, MultiIndex::from_slice(alpha)))
    }

    #[test]
    fn zero_is_unique() {
        let a = &u(&[1, 0]) + &u(&[0, 1]);
        let z = &a - &a;
        assert!(z.is_zero());
        assert_eq!(z, Expr::zero());
        let r = &(&u(&[0, 0]) / &(&u(&[0, 0]) + &Expr::one())) - &(&u(&[0, 0]) / &(&Expr::one() + &u(&[0, 0])));
        assert_eq!(r, Expr::zero());
    }

    #[test]
    fn rational_function_cancellation() {
        let x = u(&[0, 0]);
        let one = Expr::one();
        let lhs = &(&(&x * &x) - &one) / &(&x - &one);
        assert_eq!(lhs, &x + &one);
        let back = &(&one / &(&x - &one)) - &(&x / &(&x - &one));
        assert_eq!(back, Expr::int(-1));
    }

    #[test]
    fn laurent_monomials() {
        let x = u(&[1, 0]);
        let a = &(&x * &x) / &x.pow_int(3).unwrap();
        assert_eq!(a, x.recip().unwrap());
        assert_eq!(&a * &x, Expr::one());
    }

    #[test]
    fn symbolic_exponents_combine() {
        let xm = u(&[0, 1]);
        let gamma = Expr::constant(0);
        let p = xm.pow(&(&Expr::one() - &gamma)).unwrap();
        let q = xm.pow(&gamma).unwrap();
        assert_eq!(&p * &q, xm.clone());
        let half = Expr::rational(ratio(1, 2));
        let s = (&xm + &Expr::one()).pow(&half).unwrap();
        assert_eq!(&s * &s, &xm + &Expr::one());
    }

    #[test]
    fn gamma_ratio_cancels() {
        let gamma = Expr::constant(0);
        let one = Expr::one();
        let r = &(&one - &gamma) / &(&gamma - &one);
        assert_eq!(r, Expr::int(-1));
        let xm = u(&[0, 1]);
        let t = &(&(&one - &gamma) * &xm.pow(&-&gamma).unwrap()) / &(&gamma - &one);
        assert_eq!(t, -&xm.pow(&-&gamma).unwrap());
    }
}
