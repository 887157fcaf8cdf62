//! Canonical text for expressions and operators. The output parses back to
//! the identical canonical form.

use num_traits::{One, Signed};

use crate::context::Context;
use crate::expr::{Atom, Exponent, Expr, Monomial, Poly, Rational};
use crate::jet::MultiIndex;
use crate::operators::{OpEntry, TotalDiffOp};

fn atom(a: &Atom, ctx: &Context) -> String {
    match a {
        Atom::Indep(_) | Atom::Const(_) | Atom::Jet(_) => ctx.leaf_name(a),
        Atom::Func(app) => {
            let name = ctx.functions.get(app.func).map(|f| f.name.clone()).unwrap_or_else(|| format!("f{}", app.func));
            let args: Vec<String> = app.args.iter().map(|x| format_expr(x, ctx)).collect();
            let head = if app.orders.iter().all(|&k| k == 0) {
                name
            } else if app.orders.len() == 1 {
                format!("{name}{}", "'".repeat(app.orders[0] as usize))
            } else {
                let o: Vec<String> = app.orders.iter().map(u32::to_string).collect();
                format!("{name}'[{}]", o.join(","))
            };
            format!("{head}({})", args.join(", "))
        }
        Atom::Log(b) => format!("ln({})", format_expr(b, ctx)),
        Atom::Paren(b) => format!("({})", format_expr(b, ctx)),
    }
}

fn factor(a: &Atom, e: &Exponent, ctx: &Context) -> String {
    let base = atom(a, ctx);
    match e {
        Exponent::Int(1) => base,
        Exponent::Int(k) => format!("{base}^{k}"),
        Exponent::Sym(x) => format!("{base}^({})", format_expr(x, ctx)),
    }
}

fn rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Unsigned text of `|c| · m`.
fn term_body(m: &Monomial, c: &Rational, ctx: &Context) -> String {
    let c = c.abs();
    let factors: Vec<String> = m.factors().iter().map(|(a, e)| factor(a, e, ctx)).collect();
    if factors.is_empty() {
        return rational(&c);
    }
    let body = factors.join("*");
    if c.is_one() {
        body
    } else {
        format!("{}*{body}", rational(&c))
    }
}

fn sorted_terms(p: &Poly) -> Vec<(&Monomial, &Rational)> {
    let mut terms: Vec<_> = p.terms().collect();
    terms.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()));
    terms
}

fn format_poly(p: &Poly, ctx: &Context) -> String {
    let mut s = String::new();
    for (k, (m, c)) in sorted_terms(p).into_iter().enumerate() {
        let body = term_body(m, c, ctx);
        match (k, c.is_negative()) {
            (0, false) => s.push_str(&body),
            (0, true) => {
                s.push('-');
                s.push_str(&body);
            }
            (_, false) => {
                s.push_str(" + ");
                s.push_str(&body);
            }
            (_, true) => {
                s.push_str(" - ");
                s.push_str(&body);
            }
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

/// Canonical infix text of `e`.
pub fn format_expr(e: &Expr, ctx: &Context) -> String {
    let num = format_poly(e.numerator(), ctx);
    if e.denominator().is_empty() {
        return num;
    }
    let num = if e.numerator().len() > 1 { format!("({num})") } else { num };
    let den = e.denominator();
    let parts: Vec<String> = den
        .iter()
        .map(|(f, k)| {
            let f = format!("({})", format_poly(f, ctx));
            if *k == 1 {
                f
            } else {
                format!("{f}^{k}")
            }
        })
        .collect();
    if parts.len() == 1 && den[0].1 == 1 {
        format!("{num}/{}", parts[0])
    } else {
        format!("{num}/({})", parts.join("*"))
    }
}

/// `D_tx`-style name of a total derivative.
pub fn derivative_name(alpha: &MultiIndex, ctx: &Context) -> String {
    let mut s = String::from("D_");
    for (i, &k) in alpha.as_slice().iter().enumerate() {
        for _ in 0..k {
            s.push_str(ctx.independents.get(i).map(String::as_str).unwrap_or("?"));
        }
    }
    s
}

fn is_single_term(e: &Expr) -> bool {
    e.is_polynomial() && e.numerator().len() == 1
}

/// Text of one operator entry `Σ c_α D_α`.
pub fn format_entry(entry: &OpEntry, ctx: &Context) -> String {
    if entry.is_empty() {
        return "0".to_string();
    }
    let only = entry.len() == 1;
    let mut s = String::new();
    for (k, (alpha, c)) in entry.iter().enumerate() {
        let (negative, c) = match c.as_monomial() {
            Some((_, r)) if r.is_negative() => (true, -c),
            _ => (false, c.clone()),
        };
        let body = if alpha.is_zero() {
            if only || is_single_term(&c) {
                format_expr(&c, ctx)
            } else {
                format!("({})", format_expr(&c, ctx))
            }
        } else {
            let d = derivative_name(alpha, ctx);
            if c.as_rational().is_some_and(|r| r.is_one()) {
                d
            } else if is_single_term(&c) {
                format!("{}*{d}", format_expr(&c, ctx))
            } else {
                format!("({})*{d}", format_expr(&c, ctx))
            }
        };
        match (k, negative) {
            (0, false) => s.push_str(&body),
            (0, true) => s.push_str(&format!("-{body}")),
            (_, false) => s.push_str(&format!(" + {body}")),
            (_, true) => s.push_str(&format!(" - {body}")),
        }
    }
    s
}

/// `identity`, a single entry, or a bracketed matrix `[a, b; c, d]`.
pub fn format_operator(op: &TotalDiffOp, ctx: &Context) -> String {
    if op.rows() == ctx.m() && op.cols() == ctx.m() && op.rows() > 0 && *op == TotalDiffOp::identity(op.rows(), op.dim()) {
        return "identity".to_string();
    }
    if op.rows() == 1 && op.cols() == 1 {
        return format_entry(op.entry(0, 0), ctx);
    }
    let rows: Vec<String> = (0..op.rows())
        .map(|i| (0..op.cols()).map(|j| format_entry(op.entry(i, j), ctx)).collect::<Vec<_>>().join(", "))
        .collect();
    format!("[{}]", rows.join("; "))
}
