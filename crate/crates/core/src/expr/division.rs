//! Exact multivariate division and content extraction.
//!
//! Monomials are mapped to Laurent monomials over "keys": a plain atom
//! carries the integer part of its exponent, and a symbolic exponent
//! contributes a separate generator `atom^s` with exponent one. The map back
//! is a ring homomorphism, so any quotient found in key space is a valid
//! quotient of the original polynomials.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Atom, Exponent, Expr, Monomial, Poly, Rational};

type Key = (Atom, Option<Expr>);
type KMono = Vec<(Key, i64)>;
type KPoly = BTreeMap<KMono, Rational>;

const MAX_DIVISION_STEPS: usize = 200_000;

fn split_exponent(e: &Exponent) -> (Option<Expr>, i64) {
    match e {
        Exponent::Int(k) => (None, *k),
        Exponent::Sym(x) => {
            if x.is_polynomial() {
                let c = x
                    .numerator()
                    .terms()
                    .find(|(m, _)| m.is_one())
                    .map(|(_, c)| c.clone())
                    .unwrap_or_else(Rational::zero);
                if let Some(k) = c.floor().to_integer().to_i64() {
                    if k != 0 {
                        let s = x - &Expr::int(k);
                        return (Some(s), k);
                    }
                }
            }
            (Some(x.clone()), 0)
        }
    }
}

fn to_kmono(m: &Monomial) -> KMono {
    let mut out: KMono = Vec::with_capacity(m.factors().len());
    for (a, e) in m.factors() {
        let (sym, k) = split_exponent(e);
        if let Some(s) = sym {
            out.push(((a.clone(), Some(s)), 1));
        }
        if k != 0 {
            out.push(((a.clone(), None), k));
        }
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}

fn from_kmono(k: &KMono) -> Monomial {
    let factors = k
        .iter()
        .map(|((a, sym), n)| match sym {
            None => (a.clone(), Exponent::Int(*n)),
            Some(s) => (a.clone(), Exponent::from_expr(s * &Expr::int(*n))),
        })
        .collect();
    Monomial::from_factors(factors)
}

fn to_kpoly(p: &Poly) -> KPoly {
    let mut out = KPoly::new();
    for (m, c) in p.terms() {
        add_kterm(&mut out, to_kmono(m), c.clone());
    }
    out
}

fn from_kpoly(p: &KPoly) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in p {
        out.add_term(from_kmono(m), c.clone());
    }
    out
}

fn add_kterm(p: &mut KPoly, m: KMono, c: Rational) {
    if c.is_zero() {
        return;
    }
    match p.entry(m) {
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

fn kmono_mul(a: &KMono, b: &KMono) -> KMono {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            Ordering::Equal => {
                let e = a[i].1 + b[j].1;
                if e != 0 {
                    out.push((a[i].0.clone(), e));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn kmono_inv(a: &KMono) -> KMono {
    a.iter().map(|(k, e)| (k.clone(), -e)).collect()
}

/// Lexicographic comparison of exponent vectors; earlier keys are more
/// significant. Compatible with multiplication.
fn lex_cmp(a: &KMono, b: &KMono) -> Ordering {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some((_, ea)), None) => return ea.cmp(&0),
            (None, Some((_, eb))) => return 0.cmp(eb),
            (Some((ka, ea)), Some((kb, eb))) => match ka.cmp(kb) {
                Ordering::Less => return ea.cmp(&0),
                Ordering::Greater => return 0.cmp(eb),
                Ordering::Equal => {
                    if ea != eb {
                        return ea.cmp(eb);
                    }
                    i += 1;
                    j += 1;
                }
            },
        }
    }
}

fn leading(p: &KPoly) -> Option<(&KMono, &Rational)> {
    p.iter().max_by(|x, y| lex_cmp(x.0, y.0))
}

/// Monomial `m` with `min_k` exponent per key over all terms (absent keys
/// count as zero).
fn min_monomial(p: &KPoly) -> KMono {
    let mut mins: BTreeMap<Key, i64> = BTreeMap::new();
    let mut first = true;
    for m in p.keys() {
        if first {
            for (k, e) in m {
                mins.insert(k.clone(), *e);
            }
            first = false;
            continue;
        }
        for (k, v) in mins.iter_mut() {
            let e = m.iter().find(|(k2, _)| k2 == k).map(|(_, e)| *e).unwrap_or(0);
            *v = (*v).min(e);
        }
        for (k, e) in m {
            if !mins.contains_key(k) {
                mins.insert(k.clone(), (*e).min(0));
            }
        }
    }
    mins.into_iter().filter(|(_, e)| *e != 0).collect()
}

fn kpoly_mul_mono(p: &KPoly, m: &KMono, c: &Rational) -> KPoly {
    let mut out = KPoly::new();
    for (m1, c1) in p {
        add_kterm(&mut out, kmono_mul(m1, m), c1 * c);
    }
    out
}

fn nonneg_shift(p: &KPoly) -> KMono {
    min_monomial(p)
        .into_iter()
        .filter(|(_, e)| *e < 0)
        .map(|(k, e)| (k, -e))
        .collect()
}

/// `p / f` if `f` divides `p` exactly (as found by lexicographic division).
pub(crate) fn exact_div(p: &Poly, f: &Poly) -> Option<Poly> {
    if f.is_zero() {
        return None;
    }
    if p.is_zero() {
        return Some(Poly::zero());
    }
    let kp = to_kpoly(p);
    let kf = to_kpoly(f);
    if kf.len() == 1 {
        let (m, c) = kf.iter().next().unwrap();
        return Some(from_kpoly(&kpoly_mul_mono(&kp, &kmono_inv(m), &c.recip())));
    }
    // monomials are units of the Laurent ring
    if kp.len() < 2 {
        return None;
    }
    let sf = nonneg_shift(&kf);
    let kf = kpoly_mul_mono(&kf, &sf, &Rational::one());
    let kp = kpoly_mul_mono(&kp, &sf, &Rational::one());
    let sp = nonneg_shift(&kp);
    let mut rem = kpoly_mul_mono(&kp, &sp, &Rational::one());
    let (lf, lc) = leading(&kf).map(|(m, c)| (m.clone(), c.clone()))?;
    let lf_inv = kmono_inv(&lf);
    let mut q = KPoly::new();
    let mut steps = 0;
    while let Some((lp, cp)) = leading(&rem).map(|(m, c)| (m.clone(), c.clone())) {
        steps += 1;
        if steps > MAX_DIVISION_STEPS {
            return None;
        }
        let qt = kmono_mul(&lp, &lf_inv);
        if qt.iter().any(|(_, e)| *e < 0) {
            return None;
        }
        let qc = &cp / &lc;
        let sub = kpoly_mul_mono(&kf, &qt, &-&qc);
        for (m, c) in sub {
            add_kterm(&mut rem, m, c);
        }
        add_kterm(&mut q, qt, qc);
    }
    Some(from_kpoly(&kpoly_mul_mono(&q, &kmono_inv(&sp), &Rational::one())))
}

/// Splits `p = c · m · P` with `c` rational, `m` a (Laurent) monomial and `P`
/// a primitive polynomial without monomial content whose leading coefficient
/// is positive.
pub(crate) fn split_content(p: &Poly) -> (Rational, Monomial, Poly) {
    if p.is_zero() {
        return (Rational::zero(), Monomial::one(), Poly::zero());
    }
    let kp = to_kpoly(p);
    let content_mono = min_monomial(&kp);
    let prim = kpoly_mul_mono(&kp, &kmono_inv(&content_mono), &Rational::one());
    let mut num_gcd = num_bigint::BigInt::zero();
    let mut den_lcm = num_bigint::BigInt::one();
    for c in prim.values() {
        num_gcd = num_gcd.gcd(c.numer());
        den_lcm = den_lcm.lcm(c.denom());
    }
    let mut content = Rational::new(num_gcd, den_lcm);
    if leading(&prim).map(|(_, c)| c.is_negative()).unwrap_or(false) {
        content = -content;
    }
    let prim: KPoly = prim.into_iter().map(|(m, c)| (m, c / &content)).collect();
    (content, from_kmono(&content_mono), from_kpoly(&prim))
}

/// Merges equal factors and splits a factor that is exactly divisible by
/// another one.
pub(crate) fn refine_factors(den: Vec<(Poly, u32)>) -> Vec<(Poly, u32)> {
    let mut list: BTreeMap<Poly, u32> = BTreeMap::new();
    for (f, e) in den {
        if e > 0 {
            *list.entry(f).or_insert(0) += e;
        }
    }
    'outer: loop {
        let keys: Vec<Poly> = list.keys().cloned().collect();
        for a in &keys {
            for b in &keys {
                if a == b || a.len() < b.len() {
                    continue;
                }
                if let Some(q) = exact_div(a, b) {
                    let (c, m, prim) = split_content(&q);
                    if !c.is_one() || !m.is_one() || prim.len() < 2 {
                        continue;
                    }
                    let e = list.remove(a).unwrap();
                    *list.entry(b.clone()).or_insert(0) += e;
                    *list.entry(prim).or_insert(0) += e;
                    continue 'outer;
                }
            }
        }
        break;
    }
    list.into_iter().collect()
}
