use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};

use super::{Atom, Exponent, Expr, Rational};

/// A product of atoms raised to exponents, sorted by atom, without zero
/// exponents.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(Vec<(Atom, Exponent)>);

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, (a, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            write!(f, "{a:?}^{e:?}")?;
        }
        Ok(())
    }
}

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn atom(a: Atom, e: Exponent) -> Monomial {
        if e.is_zero() {
            Monomial::one()
        } else {
            Monomial(vec![(a, e)])
        }
    }

    pub(crate) fn from_factors(mut v: Vec<(Atom, Exponent)>) -> Monomial {
        v.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Atom, Exponent)> = Vec::with_capacity(v.len());
        for (a, e) in v {
            match out.last_mut() {
                Some((b, f)) if *b == a => *f = f.add(&e),
                _ => out.push((a, e)),
            }
        }
        out.retain(|(_, e)| !e.is_zero());
        Monomial(out)
    }

    pub fn factors(&self) -> &[(Atom, Exponent)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent_of(&self, a: &Atom) -> Option<&Exponent> {
        self.0
            .binary_search_by(|(b, _)| b.cmp(a))
            .ok()
            .map(|k| &self.0[k].1)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = a[i].1.add(&b[j].1);
                    if !e.is_zero() {
                        out.push((a[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    pub fn pow(&self, k: i64) -> Monomial {
        if k == 0 {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|(a, e)| (a.clone(), e.scale(k))).filter(|(_, e)| !e.is_zero()).collect())
    }

    pub fn pow_exponent(&self, e: &Expr) -> Monomial {
        Monomial(
            self.0
                .iter()
                .map(|(a, f)| (a.clone(), f.mul_expr(e)))
                .filter(|(_, e)| !e.is_zero())
                .collect(),
        )
    }

    pub fn inverse(&self) -> Monomial {
        self.pow(-1)
    }

    /// This monomial with the factor `a` removed.
    pub fn without(&self, a: &Atom) -> Monomial {
        Monomial(self.0.iter().filter(|(b, _)| b != a).cloned().collect())
    }

    /// Sum of integer exponents.
    pub fn degree(&self) -> i64 {
        self.0
            .iter()
            .map(|(_, e)| match e {
                Exponent::Int(k) => *k,
                Exponent::Sym(_) => 1,
            })
            .sum()
    }
}

/// A finite sum of monomials with nonzero rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Poly(BTreeMap<Monomial, Rational>);

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{m:?}")?;
        }
        Ok(())
    }
}

impl Poly {
    pub fn zero() -> Poly {
        Poly(BTreeMap::new())
    }

    pub fn one() -> Poly {
        Poly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Poly {
        Poly::monomial(Monomial::one(), c)
    }

    pub fn monomial(m: Monomial, c: Rational) -> Poly {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.0.iter()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.0.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.0.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.0.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    pub fn scale(&self, r: &Rational) -> Poly {
        if r.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c * r)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Rational) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.0 {
            out.add_term(m1.mul(m), c1 * c);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                out = out.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    pub(crate) fn has_integer_paren(&self) -> bool {
        self.0.keys().any(|m| {
            m.factors()
                .iter()
                .any(|(a, e)| matches!((a, e), (Atom::Paren(_), Exponent::Int(_))))
        })
    }

    pub(crate) fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        for m in self.0.keys() {
            for (a, _) in m.factors() {
                out.insert(a.clone());
            }
        }
    }
}
