//! The `.pde` text format: line-oriented sections holding declarations,
//! equations, Lagrangians, operators, conservation laws, symmetries,
//! Kovalevskaya data and coverings. See `docs/syslang.md` for the grammar.

mod ast;
mod error;
mod file;
mod lexer;
mod lower;
mod parser;
mod printer;

pub use ast::{Ast, Node};
pub use error::ParseError;
pub use file::{
    parse, print, CoveringBlock, CoveringRoles, Equation, KovalevskayaBlock, LawDecl, OperatorDecl, SymmetryDecl,
    SystemFile,
};
pub use lexer::Span;
pub use lower::{ast_leaves, evaluate_ast, MAX_EXPONENT};
pub use printer::{derivative_name, format_entry, format_expr, format_operator};

use crate::context::Context;
use crate::expr::Expr;
use crate::operators::TotalDiffOp;

fn single_line(text: &str) -> Result<Vec<lexer::Token>, ParseError> {
    lexer::tokenize(&[lexer::Piece { line: 1, column: 1, text }])
}

/// Parses one expression without resolving names.
pub fn parse_ast(text: &str) -> Result<Ast, ParseError> {
    let toks = single_line(text)?;
    let mut p = parser::Parser::new(&toks, Span { line: 1, column: text.chars().count() + 1 });
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

/// Parses one expression in the given declaration context.
pub fn parse_expr(text: &str, ctx: &Context) -> Result<Expr, ParseError> {
    lower::Lowerer::new(ctx).expr(&parse_ast(text)?)
}

/// Parses an operator: `identity`, an entry such as `u*D_x + D_xxx`, or a
/// matrix `[a, b; c, d]`.
pub fn parse_operator(text: &str, ctx: &Context) -> Result<TotalDiffOp, ParseError> {
    let toks = single_line(text)?;
    let mut p = parser::Parser::new(&toks, Span { line: 1, column: text.chars().count() + 1 });
    let low = lower::Lowerer::new(ctx);
    let op = file::operator_body(&mut p, &low, ctx.m(), ctx.n())?;
    p.expect_end()?;
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::oracle::Oracle;

    fn ctx() -> Context {
        Context::new(&["t", "x"], &["u", "v"]).with_constant("c", true).with_function("H", 1)
    }

    #[test]
    fn inline_equation() {
        let f = parse("independent: t, x\ndependent: u\nequations: u_t + u*u_x = 0\n").unwrap();
        let c = &f.context;
        let want = &c.jet("u_t").unwrap() + &(&c.var("u").unwrap() * &c.jet("u_x").unwrap());
        assert_eq!(f.system().equations, vec![want]);
    }

    #[test]
    fn diagnostics_carry_positions() {
        let cases = [
            ("independent: t, x\ndependent: u\nequations:\n  u_t = w\n", (4, 9), "undeclared"),
            ("independent: t, x\ndependent: u\nequations:\n  u_y = 0\n", (4, 3), "`y`"),
            ("independent: t, x\ndependent: u\nfunctions: H/1\nequations:\n  H(u, u) = 0\n", (5, 3), "expects 1"),
            ("independent: t, x\ndependent: u\nequations:\n  u_t = u_x +\n", (4, 14), "end of input"),
            ("independent: t, x\ndependent: u\nbogus: 1\n", (3, 1), "unknown section"),
            ("independent: t, x\ndependent: u\nequations:\n  u_t = 1/(u - u)\n", (4, 14), "division by zero"),
        ];
        for (src, pos, msg) in cases {
            let e = parse(src).unwrap_err();
            assert_eq!((e.line, e.column), pos, "{src}: {e}");
            assert!(e.message.contains(msg), "{e}");
        }
    }

    #[test]
    fn expressions_print_and_reparse() {
        let c = ctx();
        for src in [
            "u_t^2/2 - c*u_x^(1 - c)/(c - 1)",
            "(u + v)^2/((u - v)^3*(u + 1))",
            "H''(u)*ln(u_x) - H(u^2 + 1)^-2",
            "(u + 1)^(1/2) + 3/4*u*v^-3",
            "-u/(u_x + v)",
        ] {
            let e = parse_expr(src, &c).unwrap();
            let printed = format_expr(&e, &c);
            let again = parse_expr(&printed, &c).unwrap();
            assert_eq!(again, e, "{src} -> {printed}");
            assert_eq!(format_expr(&again, &c), printed);
        }
    }

    #[test]
    fn lowering_agrees_with_tree_evaluation() {
        let c = ctx();
        let oracle = Oracle::default();
        let src = "(u_t + c*v)^2/(u - v) - H'(u)*u_x^3 + (c + u^2)^(1/3)";
        let ast = parse_ast(src).unwrap();
        let e = parse_expr(src, &c).unwrap();
        let mut leaves = std::collections::BTreeSet::new();
        ast_leaves(&ast, &c, &mut leaves);
        let mut rng = oracle.rng();
        let mut checked = 0;
        for _ in 0..20 {
            let p = oracle.draw_point(&leaves, &[crate::expr::Atom::Const(0)].into_iter().collect(), &mut rng);
            let (Some(a), Ok(b)) = (evaluate_ast(&ast, &c, &oracle, &p), oracle.evaluate(&e, &p)) else { continue };
            assert!((a.to_f64() - b.to_f64()).abs() <= 1e-9 * (1.0 + a.to_f64().abs()));
            checked += 1;
        }
        assert!(checked > 10);
    }

    #[test]
    fn operators_parse_in_commuting_notation() {
        let c = Context::new(&["t", "x"], &["u"]);
        let op = parse_operator("u*D_x + D_x^2*3 - D_tx", &c).unwrap();
        assert_eq!(format_operator(&op, &c), "u*D_x - D_tx + 3*D_xx");
        assert_eq!(parse_operator(&format_operator(&op, &c), &c).unwrap(), op);
        assert!(parse_operator("1/D_x", &c).is_err());
        assert!(parse_operator("H(D_x)", &c).is_err());
        assert!(parse_expr("D_x", &c).is_err());
        let m = parse_operator("[1, D_x; 0, u]", &Context::new(&["t", "x"], &["u", "v"])).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        assert_eq!(parse_operator("identity", &c).unwrap(), TotalDiffOp::identity(1, 2));
        let _ = Expr::zero();
    }
}
