use num_bigint::BigInt;

use super::ParseError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String, u32),
    Int(BigInt),
    Sym(char),
    Newline,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// A piece of source text with the position of its first character.
#[derive(Clone, Debug)]
pub struct Piece<'a> {
    pub line: usize,
    pub column: usize,
    pub text: &'a str,
}

const SYMBOLS: &str = "+-*/^()[],;=:>";

/// Tokenizes the pieces, separating them by newline tokens.
pub fn tokenize(pieces: &[Piece<'_>]) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (k, piece) in pieces.iter().enumerate() {
        if k > 0 {
            out.push(Token { tok: Tok::Newline, span: Span { line: piece.line, column: piece.column } });
        }
        let chars: Vec<char> = piece.text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let span = Span { line: piece.line, column: piece.column + i };
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                let mut primes = 0;
                while i < chars.len() && chars[i] == '\'' {
                    primes += 1;
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(name, primes), span });
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '.') {
                    return Err(ParseError::new(span.line, span.column + (i - start), "malformed number"));
                }
                out.push(Token { tok: Tok::Int(digits.parse().expect("digits")), span });
            } else if SYMBOLS.contains(c) {
                out.push(Token { tok: Tok::Sym(c), span });
                i += 1;
            } else {
                return Err(ParseError::new(span.line, span.column, format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_carry_positions() {
        let t = tokenize(&[Piece { line: 3, column: 5, text: "u_tx + H''(x)^2" }]).unwrap();
        assert_eq!(t[0], Token { tok: Tok::Ident("u_tx".into(), 0), span: Span { line: 3, column: 5 } });
        assert_eq!(t[2].tok, Tok::Ident("H".into(), 2));
        assert_eq!(t[2].span.column, 12);
        let e = tokenize(&[Piece { line: 1, column: 1, text: "u $ 2" }]).unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
    }
}
