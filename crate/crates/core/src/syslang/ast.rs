use num_bigint::BigInt;

use super::lexer::Span;

/// Parsed expression, before name resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Ast {
    pub node: Node,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(BigInt),
    /// A name, possibly primed: variable, constant, jet coordinate or `D_…`.
    Name { name: String, primes: u32 },
    /// `f(args)`, `H''(x)` or `F'[1,0](x, y)`.
    Call { name: String, primes: u32, orders: Option<Vec<u32>>, args: Vec<Ast> },
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, Box<Ast>),
}

impl Ast {
    pub fn new(node: Node, span: Span) -> Ast {
        Ast { node, span }
    }
}
