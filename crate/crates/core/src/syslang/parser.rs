use super::ast::{Ast, Node};
use super::lexer::{Span, Tok, Token};
use super::ParseError;

const MAX_DEPTH: usize = 64;

/// Recursive-descent parser over one item's tokens. Newlines are
/// insignificant inside an item.
pub struct Parser<'a> {
    toks: Vec<&'a Token>,
    pos: usize,
    end: Span,
    depth: usize,
}

impl<'a> Parser<'a> {
    pub fn new(toks: &'a [Token], end: Span) -> Self {
        Parser { toks: toks.iter().filter(|t| t.tok != Tok::Newline).collect(), pos: 0, end, depth: 0 }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn span(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.span).unwrap_or(self.end)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos).copied();
        self.pos += 1;
        t
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        let s = self.span();
        ParseError::new(s.line, s.column, msg)
    }

    pub fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    pub fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }

    pub fn ident(&mut self) -> Result<(String, u32, Span), ParseError> {
        let span = self.span();
        match self.bump() {
            Some(Token { tok: Tok::Ident(n, p), .. }) => Ok((n.clone(), *p, span)),
            _ => {
                self.pos -= 1;
                Err(self.error("expected a name"))
            }
        }
    }

    pub fn integer(&mut self) -> Result<num_bigint::BigInt, ParseError> {
        let neg = self.eat('-');
        match self.bump() {
            Some(Token { tok: Tok::Int(k), .. }) => Ok(if neg { -k.clone() } else { k.clone() }),
            _ => {
                self.pos -= 1;
                Err(self.error("expected an integer"))
            }
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("expression nested too deeply"));
        }
        Ok(())
    }

    /// expr := term (('+' | '-') term)*
    pub fn expr(&mut self) -> Result<Ast, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let span = self.span();
            if self.eat('+') {
                let rhs = self.term()?;
                lhs = Ast::new(Node::Add(Box::new(lhs), Box::new(rhs)), span);
            } else if self.eat('-') {
                let rhs = self.term()?;
                lhs = Ast::new(Node::Sub(Box::new(lhs), Box::new(rhs)), span);
            } else {
                break;
            }
        }
        self.depth -= 1;
        Ok(lhs)
    }

    /// term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let span = self.span();
            if self.eat('*') {
                let rhs = self.unary()?;
                lhs = Ast::new(Node::Mul(Box::new(lhs), Box::new(rhs)), span);
            } else if self.eat('/') {
                let rhs = self.unary()?;
                lhs = Ast::new(Node::Div(Box::new(lhs), Box::new(rhs)), span);
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    /// unary := '-' unary | power
    fn unary(&mut self) -> Result<Ast, ParseError> {
        let span = self.span();
        if self.eat('-') {
            self.enter()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Ast::new(Node::Neg(Box::new(inner)), span));
        }
        self.power()
    }

    /// power := primary ('^' ('-')? power)?
    fn power(&mut self) -> Result<Ast, ParseError> {
        let base = self.primary()?;
        let span = self.span();
        if self.eat('^') {
            self.enter()?;
            let neg_span = self.span();
            let exp = if self.eat('-') {
                Ast::new(Node::Neg(Box::new(self.power()?)), neg_span)
            } else {
                self.power()?
            };
            self.depth -= 1;
            return Ok(Ast::new(Node::Pow(Box::new(base), Box::new(exp)), span));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Ast, ParseError> {
        let span = self.span();
        match self.peek().cloned() {
            Some(Tok::Int(k)) => {
                self.pos += 1;
                Ok(Ast::new(Node::Num(k), span))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(Tok::Ident(name, primes)) => {
                self.pos += 1;
                let mut orders = None;
                if self.peek() == Some(&Tok::Sym('[')) {
                    let save = self.pos;
                    self.pos += 1;
                    let mut v = Vec::new();
                    loop {
                        match self.bump() {
                            Some(Token { tok: Tok::Int(k), .. }) => {
                                v.push(u32::try_from(k).map_err(|_| ParseError::new(span.line, span.column, "derivative order too large"))?)
                            }
                            _ => {
                                self.pos = save;
                                return Err(self.error("expected derivative orders"));
                            }
                        }
                        if self.eat(']') {
                            break;
                        }
                        self.expect(',')?;
                    }
                    orders = Some(v);
                    if self.peek() != Some(&Tok::Sym('(')) {
                        return Err(self.error("expected `(` after derivative orders"));
                    }
                }
                if self.eat('(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    return Ok(Ast::new(Node::Call { name, primes, orders, args }, span));
                }
                Ok(Ast::new(Node::Name { name, primes }, span))
            }
            Some(_) => Err(self.error("expected an expression")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::lexer::{tokenize, Piece};
    use super::*;

    fn parse(s: &str) -> Result<Ast, ParseError> {
        let toks = tokenize(&[Piece { line: 1, column: 1, text: s }])?;
        let mut p = Parser::new(&toks, Span { line: 1, column: s.len() + 1 });
        let e = p.expr()?;
        p.expect_end()?;
        Ok(e)
    }

    #[test]
    fn precedence() {
        let e = parse("-x^2").unwrap();
        assert!(matches!(e.node, Node::Neg(ref b) if matches!(b.node, Node::Pow(..))));
        let e = parse("3/2*u").unwrap();
        assert!(matches!(e.node, Node::Mul(ref a, _) if matches!(a.node, Node::Div(..))));
        let e = parse("x^-3").unwrap();
        assert!(matches!(e.node, Node::Pow(_, ref b) if matches!(b.node, Node::Neg(..))));
    }

    #[test]
    fn errors_have_positions() {
        let e = parse("u + * v").unwrap_err();
        assert_eq!((e.line, e.column), (1, 5));
        let e = parse("(u + v").unwrap_err();
        assert_eq!((e.line, e.column), (1, 7));
        assert!(parse(&"(".repeat(500)).is_err());
    }
}
