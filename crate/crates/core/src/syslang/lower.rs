//! Name resolution: parsed expressions to canonical [`Expr`]s and operators.

use num_traits::{Signed, ToPrimitive};

use super::ast::{Ast, Node};
use super::ParseError;
use crate::context::Context;
use crate::expr::{Atom, Expr, Rational};
use crate::jet::MultiIndex;
use crate::operators::OpEntry;
use crate::oracle::{Oracle, SamplePoint, Value};

/// Largest integer exponent accepted in source text.
pub const MAX_EXPONENT: i64 = 64;

fn err(a: &Ast, msg: impl Into<String>) -> ParseError {
    ParseError::new(a.span.line, a.span.column, msg)
}

fn is_derivative_symbol(name: &str) -> bool {
    name == "D" || name.starts_with("D_")
}

pub struct Lowerer<'a> {
    pub ctx: &'a Context,
}

impl<'a> Lowerer<'a> {
    pub fn new(ctx: &'a Context) -> Self {
        Lowerer { ctx }
    }

    pub fn expr(&self, a: &Ast) -> Result<Expr, ParseError> {
        match &a.node {
            Node::Num(k) => Ok(Expr::rational(Rational::from_integer(k.clone()))),
            Node::Name { name, primes } => self.name(a, name, *primes),
            Node::Call { name, primes, orders, args } => self.call(a, name, *primes, orders.as_deref(), args),
            Node::Neg(x) => Ok(-self.expr(x)?),
            Node::Add(..) | Node::Sub(..) => {
                let mut acc = Expr::zero();
                for (neg, t) in spine(a, true) {
                    let v = self.expr(t)?;
                    acc = if neg { &acc - &v } else { &acc + &v };
                }
                Ok(acc)
            }
            Node::Mul(..) | Node::Div(..) => {
                let mut acc = Expr::one();
                for (div, t) in spine(a, false) {
                    let v = if div { self.reciprocal(t)? } else { self.expr(t)? };
                    acc = &acc * &v;
                }
                Ok(acc)
            }
            Node::Pow(b, e) => {
                let exp = self.expr(e)?;
                if let Some(k) = self.integer_exponent(e, &exp)? {
                    return if k < 0 {
                        self.reciprocal(b)?.pow_int(-k).ok_or_else(|| err(a, "invalid power"))
                    } else {
                        self.expr(b)?.pow_int(k).ok_or_else(|| err(a, "invalid power"))
                    };
                }
                self.expr(b)?.pow(&exp).ok_or_else(|| err(a, "power of zero with a non-positive exponent"))
            }
        }
    }

    fn integer_exponent(&self, e: &Ast, exp: &Expr) -> Result<Option<i64>, ParseError> {
        match exp.as_rational() {
            Some(r) if r.is_integer() => match r.to_integer().to_i64() {
                Some(k) if k.abs() <= MAX_EXPONENT => Ok(Some(k)),
                _ => Err(err(e, format!("exponent exceeds {MAX_EXPONENT} in magnitude"))),
            },
            _ => Ok(None),
        }
    }

    /// `1 / a`, distributed over products and integer powers so that a
    /// printed denominator `(f)^2*(g)` lowers to the same factor list.
    fn reciprocal(&self, a: &Ast) -> Result<Expr, ParseError> {
        match &a.node {
            Node::Mul(x, y) => Ok(&self.reciprocal(x)? * &self.reciprocal(y)?),
            Node::Div(x, y) => Ok(&self.expr(y)? * &self.reciprocal(x)?),
            Node::Neg(x) => Ok(-self.reciprocal(x)?),
            Node::Pow(b, e) => {
                let exp = self.expr(e)?;
                match self.integer_exponent(e, &exp)? {
                    Some(k) if k > 0 => self.reciprocal(b)?.pow_int(k).ok_or_else(|| err(a, "division by zero")),
                    _ => self.expr(a)?.recip().ok_or_else(|| err(a, "division by zero")),
                }
            }
            _ => self.expr(a)?.recip().ok_or_else(|| err(a, "division by zero")),
        }
    }

    fn name(&self, a: &Ast, name: &str, primes: u32) -> Result<Expr, ParseError> {
        if primes > 0 || self.ctx.func_index(name).is_some() || name == "ln" {
            return Err(err(a, format!("function `{name}` needs arguments")));
        }
        if is_derivative_symbol(name) {
            return Err(err(a, format!("`{name}` is only allowed in operator entries")));
        }
        self.ctx.var(name).map_err(|_| {
            if let Some((base, suffix)) = name.split_once('_') {
                if self.ctx.dep_index(base).is_some() {
                    return match suffix.chars().find(|ch| self.ctx.indep_index(&ch.to_string()).is_none()) {
                        Some(ch) => err(a, format!("jet suffix of `{name}` uses undeclared variable `{ch}`")),
                        None => err(a, format!("malformed jet coordinate `{name}`")),
                    };
                }
            }
            err(a, format!("undeclared identifier `{name}`"))
        })
    }

    fn call(&self, a: &Ast, name: &str, primes: u32, orders: Option<&[u32]>, args: &[Ast]) -> Result<Expr, ParseError> {
        let vals = args.iter().map(|x| self.expr(x)).collect::<Result<Vec<_>, _>>()?;
        if name == "ln" {
            if primes > 0 || orders.is_some() || vals.len() != 1 {
                return Err(err(a, "`ln` takes exactly one argument"));
            }
            return Expr::ln(&vals[0]).ok_or_else(|| err(a, "logarithm of zero"));
        }
        let f = self.ctx.func_index(name).ok_or_else(|| err(a, format!("undeclared function `{name}`")))?;
        let arity = self.ctx.functions[f].arity;
        if vals.len() != arity {
            return Err(err(a, format!("`{name}` expects {arity} argument(s), got {}", vals.len())));
        }
        let orders = match orders {
            Some(o) => {
                if primes != 1 || o.len() != arity {
                    return Err(err(a, format!("derivative orders of `{name}` must be written `{name}'[k1, …, k{arity}]`")));
                }
                o.to_vec()
            }
            None if primes == 0 => vec![0; arity],
            None if arity == 1 => vec![primes],
            None => return Err(err(a, format!("`{name}` has {arity} arguments; write derivatives as `{name}'[…]`"))),
        };
        Ok(Expr::func(f, orders, vals))
    }

    /// Lowers an operator entry: a polynomial in total derivative symbols
    /// `D_x`, `D_tx`, `D_x^2` with coefficients in the commuting notation
    /// `c*D_α`.
    pub fn op_entry(&self, a: &Ast) -> Result<OpEntry, ParseError> {
        let n = self.ctx.n();
        let mut out = OpEntry::new();
        match &a.node {
            Node::Name { name, primes: 0 } if is_derivative_symbol(name) && self.ctx.var(name).is_err() => {
                let alpha = self.derivative_index(a, name)?;
                out.insert(alpha, Expr::one());
            }
            Node::Neg(x) => {
                for (k, v) in self.op_entry(x)? {
                    out.insert(k, -v);
                }
            }
            Node::Add(x, y) | Node::Sub(x, y) => {
                let neg = matches!(a.node, Node::Sub(..));
                out = self.op_entry(x)?;
                for (k, v) in self.op_entry(y)? {
                    let v = if neg { -v } else { v };
                    add_entry(&mut out, k, v);
                }
            }
            Node::Mul(x, y) => {
                let (l, r) = (self.op_entry(x)?, self.op_entry(y)?);
                for (ka, va) in &l {
                    for (kb, vb) in &r {
                        add_entry(&mut out, ka.add(kb), va * vb);
                    }
                }
            }
            Node::Div(x, y) => {
                if self.mentions_derivative(y) {
                    return Err(err(y, "cannot divide by a total derivative"));
                }
                let r = self.reciprocal(y)?;
                for (k, v) in self.op_entry(x)? {
                    add_entry(&mut out, k, &v * &r);
                }
            }
            Node::Pow(b, e) if self.mentions_derivative(b) => {
                let exp = self.expr(e)?;
                let k = match self.integer_exponent(e, &exp)? {
                    Some(k) if k >= 0 => k,
                    _ => return Err(err(e, "total derivatives take non-negative integer powers")),
                };
                let base = self.op_entry(b)?;
                out.insert(MultiIndex::zero(n), Expr::one());
                for _ in 0..k {
                    let mut next = OpEntry::new();
                    for (ka, va) in &out {
                        for (kb, vb) in &base {
                            add_entry(&mut next, ka.add(kb), va * vb);
                        }
                    }
                    out = next;
                }
            }
            _ => {
                if self.mentions_derivative(a) {
                    return Err(err(a, "total derivatives cannot appear inside this expression"));
                }
                add_entry(&mut out, MultiIndex::zero(n), self.expr(a)?);
            }
        }
        Ok(out)
    }

    fn derivative_index(&self, a: &Ast, name: &str) -> Result<MultiIndex, ParseError> {
        let mut alpha = vec![0u32; self.ctx.n()];
        let suffix = name.strip_prefix("D_").unwrap_or("");
        if suffix.is_empty() {
            return Err(err(a, "total derivative symbol needs a suffix, e.g. `D_x`"));
        }
        for ch in suffix.chars() {
            let i = self
                .ctx
                .indep_index(&ch.to_string())
                .ok_or_else(|| err(a, format!("`{name}` uses undeclared variable `{ch}`")))?;
            alpha[i] += 1;
        }
        Ok(MultiIndex::from_slice(&alpha))
    }

    fn mentions_derivative(&self, a: &Ast) -> bool {
        match &a.node {
            Node::Num(_) => false,
            Node::Name { name, .. } => is_derivative_symbol(name) && self.ctx.var(name).is_err(),
            Node::Call { args, .. } => args.iter().any(|x| self.mentions_derivative(x)),
            Node::Neg(x) => self.mentions_derivative(x),
            Node::Add(x, y) | Node::Sub(x, y) | Node::Mul(x, y) | Node::Div(x, y) | Node::Pow(x, y) => {
                self.mentions_derivative(x) || self.mentions_derivative(y)
            }
        }
    }
}

/// Operands of a left-associated chain of `+`/`-` (or `*`/`/`), flagged
/// when subtracted (or divided), in source order.
fn spine(a: &Ast, additive: bool) -> Vec<(bool, &Ast)> {
    let mut out = Vec::new();
    let mut cur = a;
    loop {
        match (&cur.node, additive) {
            (Node::Add(x, y), true) | (Node::Mul(x, y), false) => {
                out.push((false, &**y));
                cur = x;
            }
            (Node::Sub(x, y), true) | (Node::Div(x, y), false) => {
                out.push((true, &**y));
                cur = x;
            }
            _ => {
                out.push((false, cur));
                break;
            }
        }
    }
    out.reverse();
    out
}

fn add_entry(e: &mut OpEntry, k: MultiIndex, v: Expr) {
    let sum = match e.remove(&k) {
        Some(old) => &old + &v,
        None => v,
    };
    if !sum.is_zero() {
        e.insert(k, sum);
    }
}

/// Evaluates a parsed expression directly from its tree, bypassing
/// normalization. `None` if a value is undefined at the point.
pub fn evaluate_ast(a: &Ast, ctx: &Context, oracle: &Oracle, point: &SamplePoint) -> Option<Value> {
    let ev = |x: &Ast| evaluate_ast(x, ctx, oracle, point);
    match &a.node {
        Node::Num(k) => Some(Value::Exact(Rational::from_integer(k.clone()))),
        Node::Name { name, .. } => point.get(&ctx.resolve_leaf(name).ok()?).cloned(),
        Node::Call { name, primes, orders, args } => {
            let vals = args.iter().map(ev).collect::<Option<Vec<_>>>()?;
            if name == "ln" {
                return vals.first()?.ln();
            }
            let f = ctx.func_index(name)?;
            let orders = orders.clone().unwrap_or_else(|| if *primes == 0 { vec![0; vals.len()] } else { vec![*primes] });
            oracle.eval_function(f, &vals, &orders)
        }
        Node::Neg(x) => Some(ev(x)?.neg()),
        Node::Add(x, y) => Some(ev(x)?.add(&ev(y)?)),
        Node::Sub(x, y) => Some(ev(x)?.sub(&ev(y)?)),
        Node::Mul(x, y) => Some(ev(x)?.mul(&ev(y)?)),
        Node::Div(x, y) => ev(x)?.div(&ev(y)?),
        Node::Pow(b, e) => {
            let (b, e) = (ev(b)?, ev(e)?);
            if let Value::Exact(r) = &e {
                if r.is_integer() && r.abs() <= Rational::from_integer(MAX_EXPONENT.into()) {
                    return b.powi(r.to_integer().to_i64()?);
                }
            }
            if b.is_zero() && e.to_f64() > 0.0 {
                return Some(Value::zero());
            }
            b.pow(&e)
        }
    }
}

/// Leaves mentioned by a parsed expression.
pub fn ast_leaves(a: &Ast, ctx: &Context, out: &mut std::collections::BTreeSet<Atom>) {
    match &a.node {
        Node::Num(_) => {}
        Node::Name { name, .. } => {
            if let Ok(atom) = ctx.resolve_leaf(name) {
                out.insert(atom);
            }
        }
        Node::Call { args, .. } => args.iter().for_each(|x| ast_leaves(x, ctx, out)),
        Node::Neg(x) => ast_leaves(x, ctx, out),
        Node::Add(x, y) | Node::Sub(x, y) | Node::Mul(x, y) | Node::Div(x, y) | Node::Pow(x, y) => {
            ast_leaves(x, ctx, out);
            ast_leaves(y, ctx, out);
        }
    }
}
