//! Section layout of `.pde` files and the validated [`SystemFile`].

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::ast::Ast;
use super::lexer::{tokenize, Piece, Span, Tok, Token};
use super::lower::Lowerer;
use super::parser::Parser;
use super::printer::{format_expr, format_operator};
use super::ParseError;
use crate::context::{ConstantDecl, Context, FunctionDecl};
use crate::coverings::{ConservationLaw, CoveringKind, CoveringSystem, LagrangianRoles};
use crate::error::{Error, Result};
use crate::expr::{Atom, Expr, Rational};
use crate::jet::{JetCoord, KovalevskayaData, PdeSystem};
use crate::kovalevskaya::{to_kovalevskaya, Hint};
use crate::operators::TotalDiffOp;

const RESERVED: &[&str] = &["D", "ln", "identity", "positive", "chain", "model", "fiber"];

/// `lhs = rhs`, standing for `lhs - rhs = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Equation {
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Equation {
    pub fn residual(&self) -> Expr {
        &self.lhs - &self.rhs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorDecl {
    pub name: String,
    pub op: TotalDiffOp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LawDecl {
    pub name: String,
    pub law: ConservationLaw,
}

/// A characteristic. `fiber` marks symmetries that act only on the
/// nonlocal variables of a covering.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryDecl {
    pub name: String,
    pub fiber: bool,
    pub components: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KovalevskayaBlock {
    pub direction: usize,
    pub hints: Vec<Hint>,
    pub solved: Option<KovalevskayaData>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CoveringRoles {
    Lagrangian { density: usize, velocity: Vec<usize> },
    Potential { law: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoveringBlock {
    pub roles: CoveringRoles,
    /// Number of trailing dependents that are nonlocal.
    pub nonlocal: usize,
    pub base_equations: usize,
}

/// One parsed and validated `.pde` file.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SystemFile {
    pub context: Context,
    pub equations: Vec<Equation>,
    pub lagrangian: Option<Expr>,
    pub operators: Vec<OperatorDecl>,
    pub laws: Vec<LawDecl>,
    pub symmetries: Vec<SymmetryDecl>,
    pub kovalevskaya: Option<KovalevskayaBlock>,
    pub covering: Option<CoveringBlock>,
}

impl SystemFile {
    /// A file holding just the declarations and equations of `system`.
    pub fn from_system(system: &PdeSystem) -> SystemFile {
        SystemFile {
            context: system.context.clone(),
            equations: system.equations.iter().map(|f| Equation { lhs: f.clone(), rhs: Expr::zero() }).collect(),
            kovalevskaya: system
                .kovalevskaya
                .as_ref()
                .map(|d| KovalevskayaBlock { direction: d.direction, hints: Vec::new(), solved: Some(d.clone()) }),
            ..SystemFile::default()
        }
    }

    /// A file for a covering, including its roles.
    pub fn from_covering(cov: &CoveringSystem, law_name: &str) -> SystemFile {
        let mut f = SystemFile::from_system(&cov.system);
        let roles = match &cov.kind {
            CoveringKind::Lagrangian(r) => CoveringRoles::Lagrangian { density: r.density, velocity: r.velocity.clone() },
            CoveringKind::Potential(law) => {
                f.laws.push(LawDecl { name: law_name.to_string(), law: law.clone() });
                CoveringRoles::Potential { law: law_name.to_string() }
            }
        };
        f.covering = Some(CoveringBlock {
            roles,
            nonlocal: cov.system.context.m() - cov.base_dependents,
            base_equations: cov.base_equations,
        });
        f
    }

    /// Equations with the Kovalevskaya data written in the file, if any.
    pub fn system(&self) -> PdeSystem {
        let mut s = PdeSystem::new(self.context.clone(), self.equations.iter().map(Equation::residual).collect());
        s.kovalevskaya = self.kovalevskaya.as_ref().and_then(|k| k.solved.clone());
        s
    }

    /// Like [`system`](Self::system), but runs the Kovalevskaya search when
    /// the file gives a direction without a solved form.
    pub fn resolved_system(&self) -> Result<PdeSystem> {
        let mut s = self.system();
        if s.kovalevskaya.is_none() {
            if let Some(k) = &self.kovalevskaya {
                s.kovalevskaya = Some(to_kovalevskaya(&s, k.direction, &k.hints)?.data());
            }
        }
        Ok(s)
    }

    pub fn operator(&self, name: &str) -> Result<&TotalDiffOp> {
        self.operators
            .iter()
            .find(|o| o.name == name)
            .map(|o| &o.op)
            .ok_or_else(|| Error::UnknownName { kind: "operator", name: name.to_string() })
    }

    pub fn law(&self, name: &str) -> Result<&ConservationLaw> {
        self.laws
            .iter()
            .find(|l| l.name == name)
            .map(|l| &l.law)
            .ok_or_else(|| Error::UnknownName { kind: "conservation law", name: name.to_string() })
    }

    pub fn symmetry(&self, name: &str) -> Result<&SymmetryDecl> {
        self.symmetries
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::UnknownName { kind: "symmetry", name: name.to_string() })
    }

    /// The covering described by the `covering` block.
    pub fn covering_system(&self) -> Result<CoveringSystem> {
        let c = self.covering.as_ref().ok_or_else(|| Error::Invalid("file has no covering block".into()))?;
        let kind = match &c.roles {
            CoveringRoles::Lagrangian { density, velocity } => {
                CoveringKind::Lagrangian(LagrangianRoles { density: *density, velocity: velocity.clone() })
            }
            CoveringRoles::Potential { law } => CoveringKind::Potential(self.law(law)?.clone()),
        };
        Ok(CoveringSystem {
            system: self.resolved_system()?,
            base_dependents: self.context.m() - c.nonlocal,
            base_equations: c.base_equations,
            kind,
        })
    }
}

struct Section<'a> {
    keyword: String,
    args: Vec<(String, Span)>,
    span: Span,
    body: Vec<Piece<'a>>,
}

fn err_at(span: Span, msg: impl Into<String>) -> ParseError {
    ParseError::new(span.line, span.column, msg)
}

const KEYWORDS: &[&str] = &[
    "independent",
    "dependent",
    "constants",
    "functions",
    "assume",
    "equations",
    "lagrangian",
    "operator",
    "conservation_law",
    "symmetry",
    "kovalevskaya",
    "covering",
];

/// A piece for `text`, a substring of a line starting at 1-based `column`,
/// with surrounding whitespace dropped. `None` when blank.
fn piece(line: usize, column: usize, text: &str) -> Option<Piece<'_>> {
    let trimmed = text.trim_start();
    let skipped = text[..text.len() - trimmed.len()].chars().count();
    let trimmed = trimmed.trim_end();
    (!trimmed.is_empty()).then_some(Piece { line, column: column + skipped, text: trimmed })
}

fn scan(text: &str) -> Result<Vec<Section<'_>>, ParseError> {
    let mut sections: Vec<Section<'_>> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        if content.trim().is_empty() {
            continue;
        }
        if content.starts_with(|c: char| c.is_whitespace()) {
            let sec = sections.last_mut().ok_or_else(|| err_at(Span { line, column: 1 }, "indented line outside a section"))?;
            sec.body.extend(piece(line, 1, content));
            continue;
        }
        let colon = content
            .find(':')
            .ok_or_else(|| err_at(Span { line, column: 1 }, "expected a section header `name:`"))?;
        let head = &content[..colon];
        let mut words = Vec::new();
        let mut col = 1;
        for w in head.split(' ') {
            if !w.is_empty() {
                words.push((w.to_string(), Span { line, column: col }));
            }
            col += w.chars().count() + 1;
        }
        let (keyword, kspan) = words.first().cloned().unwrap_or_default();
        if !KEYWORDS.contains(&keyword.as_str()) {
            return Err(err_at(Span { line, column: 1 }, format!("unknown section `{}`", head.trim())));
        }
        for (w, s) in &words[1..] {
            if !w.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') || !w.starts_with(|c: char| c.is_ascii_alphabetic()) {
                return Err(err_at(*s, format!("invalid name `{w}`")));
            }
        }
        let rest_col = content[..colon + 1].chars().count() + 1;
        let body = piece(line, rest_col, &content[colon + 1..]).into_iter().collect();
        sections.push(Section { keyword, args: words[1..].to_vec(), span: kspan, body });
    }
    Ok(sections)
}

fn end_span(tokens: &[Token], fallback: Span) -> Span {
    tokens
        .last()
        .map(|t| Span { line: t.span.line, column: t.span.column + 1 })
        .unwrap_or(fallback)
}

/// Splits a token stream into newline-separated items. A line continues
/// when brackets are open, when it ends with an operator or comma, or when
/// the next line starts with one (other than `-`).
fn split_items(tokens: &[Token]) -> Vec<&[Token]> {
    let cont_end = |t: &Tok| matches!(t, Tok::Sym('+' | '-' | '*' | '/' | '^' | '=' | ',' | '(' | '[' | ';' | ':'));
    let cont_start = |t: &Tok| matches!(t, Tok::Sym('+' | '*' | '/' | '^' | '=' | ')' | ']' | ',' | ';'));
    let mut out = Vec::new();
    let mut depth: i64 = 0;
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        match &t.tok {
            Tok::Sym('(' | '[') => depth += 1,
            Tok::Sym(')' | ']') => depth -= 1,
            Tok::Newline => {
                let prev = i.checked_sub(1).map(|j| &tokens[j].tok);
                let next = tokens.get(i + 1).map(|t| &t.tok);
                let joined = depth > 0 || prev.is_some_and(cont_end) || next.is_some_and(cont_start);
                if !joined {
                    if i > start {
                        out.push(&tokens[start..i]);
                    }
                    start = i + 1;
                }
            }
            _ => {}
        }
    }
    if tokens.len() > start {
        out.push(&tokens[start..]);
    }
    out
}

fn names_list(p: &mut Parser<'_>) -> Result<Vec<(String, Span)>, ParseError> {
    let mut out = Vec::new();
    if p.at_end() {
        return Ok(out);
    }
    loop {
        let (name, primes, span) = p.ident()?;
        if primes > 0 {
            return Err(err_at(span, "unexpected `'` in a name"));
        }
        out.push((name, span));
        if !p.eat(',') {
            break;
        }
    }
    p.expect_end()?;
    Ok(out)
}

fn rational_literal(p: &mut Parser<'_>) -> Result<Rational, ParseError> {
    let num: BigInt = p.integer()?;
    if p.eat('/') {
        let span = p.span();
        let den: BigInt = p.integer()?;
        if den == BigInt::from(0) {
            return Err(err_at(span, "zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }
    Ok(Rational::from_integer(num))
}

struct Builder<'a> {
    file: SystemFile,
    sections: Vec<Section<'a>>,
}

/// Parses and validates a `.pde` file.
pub fn parse(text: &str) -> std::result::Result<SystemFile, ParseError> {
    let sections = scan(text)?;
    let mut b = Builder { file: SystemFile::default(), sections };
    b.declarations()?;
    b.semantic()?;
    Ok(b.file)
}

impl<'a> Builder<'a> {
    fn unique(&self, keyword: &str) -> Result<Option<&Section<'a>>, ParseError> {
        let mut found = self.sections.iter().filter(|s| s.keyword == keyword);
        let first = found.next();
        if let Some(dup) = found.next() {
            return Err(err_at(dup.span, format!("duplicate `{keyword}` section")));
        }
        Ok(first)
    }

    fn tokens(sec: &Section<'_>) -> Result<Vec<Token>, ParseError> {
        tokenize(&sec.body)
    }

    fn no_args(sec: &Section<'_>) -> Result<(), ParseError> {
        match sec.args.first() {
            Some((w, s)) => Err(err_at(*s, format!("unexpected `{w}` in `{}` header", sec.keyword))),
            None => Ok(()),
        }
    }

    fn declarations(&mut self) -> Result<(), ParseError> {
        let mut ctx = Context::default();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let declare = |name: &str, span: Span, seen: &mut BTreeSet<String>| -> Result<(), ParseError> {
            if RESERVED.contains(&name) || KEYWORDS.contains(&name) {
                return Err(err_at(span, format!("`{name}` is reserved")));
            }
            if name.contains('_') {
                return Err(err_at(span, format!("declared name `{name}` may not contain `_`")));
            }
            if !seen.insert(name.to_string()) {
                return Err(err_at(span, format!("`{name}` declared twice")));
            }
            Ok(())
        };
        for (kw, required) in [("independent", true), ("dependent", true)] {
            let sec = self.unique(kw)?;
            let Some(sec) = sec else {
                if required {
                    return Err(ParseError::new(1, 1, format!("missing `{kw}` section")));
                }
                continue;
            };
            Self::no_args(sec)?;
            let toks = Self::tokens(sec)?;
            let mut p = Parser::new(&toks, end_span(&toks, sec.span));
            let names = names_list(&mut p)?;
            if names.is_empty() {
                return Err(err_at(sec.span, format!("`{kw}` needs at least one name")));
            }
            for (n, s) in names {
                declare(&n, s, &mut seen)?;
                if kw == "independent" {
                    if n.chars().count() != 1 {
                        return Err(err_at(s, format!("independent variable `{n}` must be a single letter")));
                    }
                    ctx.independents.push(n);
                } else {
                    ctx.dependents.push(n);
                }
            }
        }
        if let Some(sec) = self.unique("constants")? {
            Self::no_args(sec)?;
            let toks = Self::tokens(sec)?;
            let mut p = Parser::new(&toks, end_span(&toks, sec.span));
            while !p.at_end() {
                let (name, primes, span) = p.ident()?;
                if primes > 0 {
                    return Err(err_at(span, "unexpected `'` in a name"));
                }
                declare(&name, span, &mut seen)?;
                let mut positive = false;
                if matches!(p.peek(), Some(Tok::Ident(w, 0)) if w == "positive") {
                    p.ident()?;
                    positive = true;
                }
                ctx.constants.push(ConstantDecl { name, positive });
                if !p.eat(',') {
                    p.expect_end()?;
                }
            }
        }
        if let Some(sec) = self.unique("functions")? {
            Self::no_args(sec)?;
            let toks = Self::tokens(sec)?;
            for item in split_items(&toks) {
                let mut p = Parser::new(item, end_span(item, sec.span));
                let (name, primes, span) = p.ident()?;
                if primes > 0 {
                    return Err(err_at(span, "function name may not carry primes"));
                }
                declare(&name, span, &mut seen)?;
                p.expect('/')?;
                let aspan = p.span();
                let arity = p.integer()?.to_usize().filter(|&a| (1..=8).contains(&a)).ok_or_else(|| err_at(aspan, "arity must be between 1 and 8"))?;
                let mut chain = Vec::new();
                let mut model = None;
                while !p.at_end() {
                    let (kw, _, kspan) = p.ident()?;
                    match kw.as_str() {
                        "chain" => loop {
                            let (d, k, s) = p.ident()?;
                            if d != name || k as usize != chain.len() + 1 || arity != 1 {
                                return Err(err_at(s, format!("chain of `{name}` must list `{name}'`, `{name}''`, … in order")));
                            }
                            chain.push(format!("{d}{}", "'".repeat(k as usize)));
                            if !p.eat(',') {
                                break;
                            }
                        },
                        "model" => {
                            if arity != 1 {
                                return Err(err_at(kspan, "polynomial models are only supported for unary functions"));
                            }
                            let mut coeffs = vec![rational_literal(&mut p)?];
                            while p.eat(',') {
                                coeffs.push(rational_literal(&mut p)?);
                            }
                            model = Some(coeffs);
                        }
                        _ => return Err(err_at(kspan, format!("expected `chain` or `model`, found `{kw}`"))),
                    }
                }
                ctx.functions.push(FunctionDecl { name, arity, chain, model });
            }
        }
        if let Some(sec) = self.unique("assume")? {
            Self::no_args(sec)?;
            let toks = Self::tokens(sec)?;
            let mut p = Parser::new(&toks, end_span(&toks, sec.span));
            while !p.at_end() {
                let (name, _, span) = p.ident()?;
                let atom = ctx.resolve_leaf(&name).map_err(|_| err_at(span, format!("undeclared identifier `{name}`")))?;
                p.expect('>')?;
                let zspan = p.span();
                if p.integer()? != BigInt::from(0) {
                    return Err(err_at(zspan, "only assumptions of the form `name > 0` are supported"));
                }
                if matches!(atom, Atom::Indep(_)) {
                    return Err(err_at(span, "positivity of an independent variable is not supported"));
                }
                if !ctx.positive.contains(&atom) {
                    ctx.positive.push(atom);
                }
                if !p.eat(',') {
                    p.expect_end()?;
                }
            }
        }
        self.file.context = ctx;
        Ok(())
    }

    fn semantic(&mut self) -> Result<(), ParseError> {
        let ctx = self.file.context.clone();
        let low = Lowerer::new(&ctx);
        let (n, m) = (ctx.n(), ctx.m());
        let mut names: BTreeSet<(String, String)> = BTreeSet::new();
        for sec in &self.sections {
            let toks = Self::tokens(sec)?;
            let end = end_span(&toks, sec.span);
            match sec.keyword.as_str() {
                "equations" => {
                    Self::no_args(sec)?;
                    if !self.file.equations.is_empty() {
                        return Err(err_at(sec.span, "duplicate `equations` section"));
                    }
                    for item in split_items(&toks) {
                        let mut p = Parser::new(item, end_span(item, end));
                        let lhs = p.expr()?;
                        p.expect('=')?;
                        let rhs = p.expr()?;
                        p.expect_end()?;
                        self.file.equations.push(Equation { lhs: low.expr(&lhs)?, rhs: low.expr(&rhs)? });
                    }
                }
                "lagrangian" => {
                    Self::no_args(sec)?;
                    if self.file.lagrangian.is_some() {
                        return Err(err_at(sec.span, "duplicate `lagrangian` section"));
                    }
                    let mut p = Parser::new(&toks, end);
                    let e = p.expr()?;
                    p.expect_end()?;
                    self.file.lagrangian = Some(low.expr(&e)?);
                }
                "operator" | "conservation_law" | "symmetry" => {
                    let (name, nspan) = sec
                        .args
                        .first()
                        .cloned()
                        .ok_or_else(|| err_at(sec.span, format!("`{}` needs a name", sec.keyword)))?;
                    if !names.insert((sec.keyword.clone(), name.clone())) {
                        return Err(err_at(nspan, format!("duplicate {} `{name}`", sec.keyword)));
                    }
                    let mut fiber = false;
                    for (w, s) in &sec.args[1..] {
                        if sec.keyword == "symmetry" && w == "fiber" && !fiber {
                            fiber = true;
                        } else {
                            return Err(err_at(*s, format!("unexpected `{w}` in header")));
                        }
                    }
                    let mut p = Parser::new(&toks, end);
                    match sec.keyword.as_str() {
                        "operator" => {
                            let op = operator_body(&mut p, &low, m, n)?;
                            self.file.operators.push(OperatorDecl { name, op });
                        }
                        kw => {
                            let want = if kw == "symmetry" { m } else { n };
                            let span = p.span();
                            let comps = tuple(&mut p, &low)?;
                            if comps.len() != want {
                                return Err(err_at(span, format!("expected {want} component(s), found {}", comps.len())));
                            }
                            if kw == "symmetry" {
                                self.file.symmetries.push(SymmetryDecl { name, fiber, components: comps });
                            } else {
                                self.file.laws.push(LawDecl { name, law: ConservationLaw::new(comps) });
                            }
                        }
                    }
                    p.expect_end()?;
                }
                "kovalevskaya" => {
                    Self::no_args(sec)?;
                    if self.file.kovalevskaya.is_some() {
                        return Err(err_at(sec.span, "duplicate `kovalevskaya` section"));
                    }
                    self.file.kovalevskaya = Some(kovalevskaya_block(sec, &low)?);
                }
                "covering" => {
                    Self::no_args(sec)?;
                    if self.file.covering.is_some() {
                        return Err(err_at(sec.span, "duplicate `covering` section"));
                    }
                    self.file.covering = Some(covering_block(sec, &ctx)?);
                }
                _ => {}
            }
        }
        if let Some(c) = &self.file.covering {
            let sec = self.sections.iter().find(|s| s.keyword == "covering").expect("covering section");
            if c.base_equations > self.file.equations.len() {
                return Err(err_at(sec.span, "`base_equations` exceeds the number of equations"));
            }
            if let CoveringRoles::Potential { law } = &c.roles {
                if self.file.law(law).is_err() {
                    return Err(err_at(sec.span, format!("no conservation law named `{law}`")));
                }
            }
        }
        Ok(())
    }
}

fn tuple(p: &mut Parser<'_>, low: &Lowerer<'_>) -> Result<Vec<Expr>, ParseError> {
    p.expect('(')?;
    let mut out = vec![low.expr(&p.expr()?)?];
    while p.eat(',') {
        out.push(low.expr(&p.expr()?)?);
    }
    p.expect(')')?;
    Ok(out)
}

pub(super) fn operator_body(p: &mut Parser<'_>, low: &Lowerer<'_>, m: usize, n: usize) -> Result<TotalDiffOp, ParseError> {
    if matches!(p.peek(), Some(Tok::Ident(w, 0)) if w == "identity") {
        p.ident()?;
        return Ok(TotalDiffOp::identity(m, n));
    }
    let span = p.span();
    let mut rows: Vec<Vec<Ast>> = Vec::new();
    if p.eat('[') {
        let mut row = vec![p.expr()?];
        loop {
            if p.eat(',') {
                row.push(p.expr()?);
            } else if p.eat(';') {
                rows.push(std::mem::take(&mut row));
                row.push(p.expr()?);
            } else {
                p.expect(']')?;
                rows.push(row);
                break;
            }
        }
    } else {
        rows.push(vec![p.expr()?]);
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(err_at(span, "operator rows have different lengths"));
    }
    let mut op = TotalDiffOp::zero(rows.len(), cols, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, a) in row.iter().enumerate() {
            for (alpha, c) in low.op_entry(a)? {
                op.add_term(i, j, alpha, c);
            }
        }
    }
    Ok(op)
}

const KOVALEVSKAYA_KEYS: &[&str] = &["direction", "hints", "solved"];
const COVERING_KEYS: &[&str] = &["kind", "nonlocal", "base_equations", "density", "velocity", "law"];

/// Splits a block body into `key: value` entries; lines without a key
/// continue the previous entry.
fn subkeys<'a>(sec: &Section<'a>, keys: &[&str]) -> Result<Vec<(String, Span, Vec<Piece<'a>>)>, ParseError> {
    let mut out: Vec<(String, Span, Vec<Piece<'a>>)> = Vec::new();
    for pc in &sec.body {
        let key = pc.text.split_once(':').map(|(k, _)| k.trim()).filter(|k| keys.contains(k));
        match key {
            Some(k) => {
                let span = Span { line: pc.line, column: pc.column };
                if out.iter().any(|(o, _, _)| o == k) {
                    return Err(err_at(span, format!("duplicate `{k}`")));
                }
                let colon = pc.text.find(':').expect("colon");
                let col = pc.column + pc.text[..colon + 1].chars().count();
                out.push((k.to_string(), span, piece(pc.line, col, &pc.text[colon + 1..]).into_iter().collect()));
            }
            None => match out.last_mut() {
                Some((_, _, body)) => body.push(pc.clone()),
                None => {
                    return Err(err_at(
                        Span { line: pc.line, column: pc.column },
                        format!("expected one of {}", keys.iter().map(|k| format!("`{k}:`")).collect::<Vec<_>>().join(", ")),
                    ))
                }
            },
        }
    }
    Ok(out)
}

fn kovalevskaya_block(sec: &Section<'_>, low: &Lowerer<'_>) -> Result<KovalevskayaBlock, ParseError> {
    let ctx = low.ctx;
    let entries = subkeys(sec, KOVALEVSKAYA_KEYS)?;
    let mut direction = None;
    let mut hints = Vec::new();
    let mut solved_items = None;
    for (key, span, body) in &entries {
        let toks = tokenize(body)?;
        let mut p = Parser::new(&toks, end_span(&toks, *span));
        match key.as_str() {
            "direction" => {
                let (v, _, s) = p.ident()?;
                direction = Some(ctx.indep_index(&v).ok_or_else(|| err_at(s, format!("`{v}` is not an independent variable")))?);
                p.expect_end()?;
            }
            "hints" => {
                while !p.at_end() {
                    let s = p.span();
                    let k = p.integer()?.to_usize().filter(|&k| k >= 1);
                    let k = k.ok_or_else(|| err_at(s, "equation numbers start at 1"))?;
                    p.expect(':')?;
                    let (name, _, js) = p.ident()?;
                    let pivot = match ctx.resolve_leaf(&name) {
                        Ok(Atom::Jet(j)) => j,
                        _ => return Err(err_at(js, format!("`{name}` is not a jet coordinate"))),
                    };
                    hints.push(Hint { equation: k - 1, pivot });
                    if !p.eat(',') {
                        p.expect_end()?;
                    }
                }
            }
            _ => solved_items = Some((toks.clone(), *span)),
        }
    }
    let direction = direction.ok_or_else(|| err_at(sec.span, "`kovalevskaya` needs a `direction:`"))?;
    let solved = match solved_items {
        None => None,
        Some((toks, span)) => {
            let mut orders = vec![0; ctx.m()];
            let mut rhs = vec![Expr::zero(); ctx.m()];
            for item in split_items(&toks) {
                let mut p = Parser::new(item, end_span(item, span));
                let (name, _, js) = p.ident()?;
                let pivot: JetCoord = match ctx.resolve_leaf(&name) {
                    Ok(Atom::Jet(j)) => j,
                    _ => return Err(err_at(js, format!("`{name}` is not a jet coordinate"))),
                };
                if pivot.order() == 0 || pivot.alpha.get(direction) != pivot.order() {
                    return Err(err_at(js, format!("`{name}` is not a pure derivative in the direction")));
                }
                if orders[pivot.dep] > 0 {
                    return Err(err_at(js, format!("`{}` already has a solved form", ctx.dependents[pivot.dep])));
                }
                p.expect('=')?;
                let e = p.expr()?;
                p.expect_end()?;
                orders[pivot.dep] = pivot.order();
                rhs[pivot.dep] = low.expr(&e)?;
            }
            Some(KovalevskayaData::new(direction, orders, rhs))
        }
    };
    Ok(KovalevskayaBlock { direction, hints, solved })
}

fn covering_block(sec: &Section<'_>, ctx: &Context) -> Result<CoveringBlock, ParseError> {
    let entries = subkeys(sec, COVERING_KEYS)?;
    let get = |k: &str| entries.iter().find(|(key, _, _)| key == k);
    let single = |k: &str| -> Result<Option<(String, Span)>, ParseError> {
        let Some((_, span, body)) = get(k) else { return Ok(None) };
        let toks = tokenize(body)?;
        let mut p = Parser::new(&toks, end_span(&toks, *span));
        let (v, _, s) = p.ident()?;
        p.expect_end()?;
        Ok(Some((v, s)))
    };
    let dep = |(v, s): (String, Span)| ctx.dep_index(&v).ok_or_else(|| err_at(s, format!("`{v}` is not a dependent variable")));
    let deps = |k: &str| -> Result<Vec<usize>, ParseError> {
        let Some((_, span, body)) = get(k) else { return Ok(Vec::new()) };
        let toks = tokenize(body)?;
        let mut p = Parser::new(&toks, end_span(&toks, *span));
        names_list(&mut p)?.into_iter().map(dep).collect()
    };
    let (kind, kspan) = single("kind")?.ok_or_else(|| err_at(sec.span, "`covering` needs a `kind:`"))?;
    let nonlocal = deps("nonlocal")?;
    let m = ctx.m();
    if nonlocal.is_empty() || nonlocal.iter().enumerate().any(|(i, &d)| d != m - nonlocal.len() + i) {
        return Err(err_at(sec.span, "`nonlocal:` must list the trailing dependent variables in order"));
    }
    let base_equations = match get("base_equations") {
        Some((_, span, body)) => {
            let toks = tokenize(body)?;
            let mut p = Parser::new(&toks, end_span(&toks, *span));
            let k = p.integer()?.to_usize().ok_or_else(|| err_at(*span, "invalid equation count"))?;
            p.expect_end()?;
            k
        }
        None => return Err(err_at(sec.span, "`covering` needs `base_equations:`")),
    };
    let roles = match kind.as_str() {
        "lagrangian" => {
            let density = dep(single("density")?.ok_or_else(|| err_at(sec.span, "missing `density:`"))?)?;
            let velocity = deps("velocity")?;
            if velocity.len() + 1 != ctx.n() {
                return Err(err_at(sec.span, "`velocity:` needs one component per spatial variable"));
            }
            CoveringRoles::Lagrangian { density, velocity }
        }
        "potential" => {
            let (law, _) = single("law")?.ok_or_else(|| err_at(sec.span, "missing `law:`"))?;
            CoveringRoles::Potential { law }
        }
        other => return Err(err_at(kspan, format!("unknown covering kind `{other}`"))),
    };
    Ok(CoveringBlock { roles, nonlocal: nonlocal.len(), base_equations })
}

/// Canonical text of a file: declarations first, then equations in input
/// order, then the remaining blocks.
pub fn print(file: &SystemFile) -> String {
    let ctx = &file.context;
    let fx = |e: &Expr| format_expr(e, ctx);
    let mut s = String::new();
    s.push_str(&format!("independent: {}\n", ctx.independents.join(", ")));
    s.push_str(&format!("dependent: {}\n", ctx.dependents.join(", ")));
    if !ctx.constants.is_empty() {
        let c: Vec<String> =
            ctx.constants.iter().map(|c| if c.positive { format!("{} positive", c.name) } else { c.name.clone() }).collect();
        s.push_str(&format!("constants: {}\n", c.join(", ")));
    }
    if !ctx.functions.is_empty() {
        s.push_str("functions:\n");
        for f in &ctx.functions {
            let mut line = format!("  {}/{}", f.name, f.arity);
            if !f.chain.is_empty() {
                line.push_str(&format!(" chain {}", f.chain.join(", ")));
            }
            if let Some(model) = &f.model {
                let c: Vec<String> = model
                    .iter()
                    .map(|r| if r.is_integer() { r.numer().to_string() } else { format!("{}/{}", r.numer(), r.denom()) })
                    .collect();
                line.push_str(&format!(" model {}", c.join(", ")));
            }
            s.push_str(&line);
            s.push('\n');
        }
    }
    if !ctx.positive.is_empty() {
        let a: Vec<String> = ctx.positive.iter().map(|a| format!("{} > 0", ctx.leaf_name(a))).collect();
        s.push_str(&format!("assume: {}\n", a.join(", ")));
    }
    if !file.equations.is_empty() {
        s.push_str("\nequations:\n");
        for e in &file.equations {
            s.push_str(&format!("  {} = {}\n", fx(&e.lhs), fx(&e.rhs)));
        }
    }
    if let Some(l) = &file.lagrangian {
        s.push_str(&format!("\nlagrangian:\n  {}\n", fx(l)));
    }
    for o in &file.operators {
        s.push_str(&format!("\noperator {}:\n  {}\n", o.name, format_operator(&o.op, ctx)));
    }
    for l in &file.laws {
        let c: Vec<String> = l.law.components.iter().map(fx).collect();
        s.push_str(&format!("\nconservation_law {}:\n  ({})\n", l.name, c.join(", ")));
    }
    for y in &file.symmetries {
        let c: Vec<String> = y.components.iter().map(fx).collect();
        let tag = if y.fiber { " fiber" } else { "" };
        s.push_str(&format!("\nsymmetry {}{tag}:\n  ({})\n", y.name, c.join(", ")));
    }
    if let Some(k) = &file.kovalevskaya {
        s.push_str(&format!("\nkovalevskaya:\n  direction: {}\n", ctx.independents[k.direction]));
        if !k.hints.is_empty() {
            let h: Vec<String> = k.hints.iter().map(|h| format!("{}:{}", h.equation + 1, ctx.jet_name(&h.pivot))).collect();
            s.push_str(&format!("  hints: {}\n", h.join(", ")));
        }
        if let Some(d) = &k.solved {
            s.push_str("  solved:\n");
            for (dep, rhs) in d.rhs.iter().enumerate() {
                if let Some(p) = d.pivot(dep, ctx.n()) {
                    s.push_str(&format!("    {} = {}\n", ctx.jet_name(&p), fx(rhs)));
                }
            }
        }
    }
    if let Some(c) = &file.covering {
        s.push_str("\ncovering:\n");
        let names = |ix: &[usize]| ix.iter().map(|&d| ctx.dependents[d].clone()).collect::<Vec<_>>().join(", ");
        let nonlocal: Vec<usize> = (ctx.m() - c.nonlocal..ctx.m()).collect();
        match &c.roles {
            CoveringRoles::Lagrangian { density, velocity } => {
                s.push_str("  kind: lagrangian\n");
                s.push_str(&format!("  nonlocal: {}\n", names(&nonlocal)));
                s.push_str(&format!("  base_equations: {}\n", c.base_equations));
                s.push_str(&format!("  density: {}\n", ctx.dependents[*density]));
                s.push_str(&format!("  velocity: {}\n", names(velocity)));
            }
            CoveringRoles::Potential { law } => {
                s.push_str("  kind: potential\n");
                s.push_str(&format!("  nonlocal: {}\n", names(&nonlocal)));
                s.push_str(&format!("  base_equations: {}\n", c.base_equations));
                s.push_str(&format!("  law: {law}\n"));
            }
        }
    }
    s
}
