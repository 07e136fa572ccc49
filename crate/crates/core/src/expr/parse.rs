//! Recursive-descent parser for the ASCII expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | factor
//! factor := base ('^' exponent)?
//! exponent := '-'? number ('/' number)? | '(' '-'? number ('/' number)? ')'
//!           | base                      (symbolic: u^e reads as exp(e*ln(u)))
//! base   := number | 'x' "'"{0,3} | 't' | ident '(' 't' ')' "'"*
//!         | func '(' expr ')' | '(' expr ')' | ident
//! func   := exp | ln | sin | cos | abs
//! ```
//!
//! A bare identifier is a named constant.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Builtin, Expr, Jet, Node, Number};
use crate::error::{Error, Result};

/// Parses and canonicalises an expression.
pub fn parse(text: &str) -> Result<Expr> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, i: 0, len: text.len() };
    let e = p.expr()?;
    if let Some(tok) = p.peek() {
        return Err(Error::Syntax {
            pos: tok.pos,
            msg: format!("unexpected {}", tok.kind.describe()),
        });
    }
    Ok(e.canonical())
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(BigRational),
    Ident(String),
    Prime,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl Kind {
    fn describe(&self) -> String {
        match self {
            Kind::Num(n) => format!("number {n}"),
            Kind::Ident(s) => format!("identifier `{s}`"),
            Kind::Prime => "`'`".into(),
            Kind::Plus => "`+`".into(),
            Kind::Minus => "`-`".into(),
            Kind::Star => "`*`".into(),
            Kind::Slash => "`/`".into(),
            Kind::Caret => "`^`".into(),
            Kind::LParen => "`(`".into(),
            Kind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let pos = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Kind::Plus,
            b'-' => Kind::Minus,
            b'*' => Kind::Star,
            b'/' => Kind::Slash,
            b'^' => Kind::Caret,
            b'(' => Kind::LParen,
            b')' => Kind::RParen,
            b'\'' => Kind::Prime,
            b'0'..=b'9' | b'.' => {
                let (n, end) = lex_number(text, i)?;
                out.push(Token { kind: Kind::Num(n), pos });
                i = end;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = i + 1;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                    end += 1;
                }
                out.push(Token {
                    kind: Kind::Ident(text[i..end].to_string()),
                    pos,
                });
                i = end;
                continue;
            }
            _ => {
                return Err(Error::Syntax {
                    pos,
                    msg: format!("unexpected character `{}`", text[i..].chars().next().unwrap()),
                })
            }
        };
        out.push(Token { kind, pos });
        i += 1;
    }
    Ok(out)
}

fn lex_number(text: &str, start: usize) -> Result<(BigRational, usize)> {
    let bytes = text.as_bytes();
    let mut i = start;
    let mut mantissa = String::new();
    let mut frac_digits = 0i64;
    let mut seen_dot = false;
    while i < bytes.len() {
        match bytes[i] {
            b'0'..=b'9' => {
                mantissa.push(bytes[i] as char);
                if seen_dot {
                    frac_digits += 1;
                }
            }
            b'.' if !seen_dot => seen_dot = true,
            _ => break,
        }
        i += 1;
    }
    if mantissa.is_empty() {
        return Err(Error::Syntax {
            pos: start,
            msg: "malformed number".into(),
        });
    }
    let mut exp10 = 0i64;
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        let mut sign = 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            if bytes[j] == b'-' {
                sign = -1;
            }
            j += 1;
        }
        let ds = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > ds {
            exp10 = sign * text[ds..j].parse::<i64>().map_err(|_| Error::Syntax {
                pos: i,
                msg: "exponent out of range".into(),
            })?;
            i = j;
        }
    }
    let m: BigInt = mantissa.parse().unwrap();
    let shift = exp10 - frac_digits;
    let ten = BigInt::from(10);
    let value = if shift >= 0 {
        BigRational::from_integer(m * num_traits::pow(ten, shift as usize))
    } else {
        BigRational::new(m, num_traits::pow(ten, (-shift) as usize))
    };
    Ok((value, i))
}

struct Parser {
    tokens: Vec<Token>,
    i: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.i)
    }

    fn peek_kind(&self) -> Option<&Kind> {
        self.peek().map(|t| &t.kind)
    }

    fn pos(&self) -> usize {
        self.peek().map(|t| t.pos).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.i).cloned();
        if t.is_some() {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, k: Kind) -> Result<()> {
        match self.bump() {
            Some(t) if t.kind == k => Ok(()),
            Some(t) => Err(Error::Syntax {
                pos: t.pos,
                msg: format!("expected {}, found {}", k.describe(), t.kind.describe()),
            }),
            None => Err(Error::Syntax {
                pos: self.len,
                msg: format!("expected {}, found end of input", k.describe()),
            }),
        }
    }

    fn count_primes(&mut self) -> (usize, usize) {
        let pos = self.pos();
        let mut n = 0;
        while self.peek_kind() == Some(&Kind::Prime) {
            self.i += 1;
            n += 1;
        }
        (n, pos)
    }

    fn no_primes(&mut self, what: &str) -> Result<()> {
        let (n, pos) = self.count_primes();
        if n > 0 {
            return Err(Error::MalformedDerivative {
                pos,
                msg: format!("derivative marker not allowed after {what}"),
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek_kind() {
                Some(Kind::Plus) => {
                    self.i += 1;
                    terms.push(self.term()?);
                }
                Some(Kind::Minus) => {
                    self.i += 1;
                    let t = self.term()?;
                    terms.push(negate(t));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::from_node(Node::Sum(terms))
        })
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek_kind() {
                Some(Kind::Star) => {
                    self.i += 1;
                    let rhs = self.unary()?;
                    acc = Expr::from_node(Node::Product(vec![acc, rhs]));
                }
                Some(Kind::Slash) => {
                    self.i += 1;
                    let rhs = self.unary()?;
                    acc = Expr::from_node(Node::Quotient(acc, rhs));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_kind() == Some(&Kind::Minus) {
            self.i += 1;
            let inner = self.unary()?;
            return Ok(negate(inner));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.peek_kind() == Some(&Kind::Caret) {
            self.i += 1;
            let at = self.i;
            match self.exponent() {
                Ok(p) => return Ok(Expr::from_node(Node::Power(base, p))),
                // symbolic exponent: u^e is read as exp(e*ln(u))
                Err(e) if matches!(self.tokens.get(at).map(|t| &t.kind), Some(Kind::LParen | Kind::Ident(_))) => {
                    self.i = at;
                    let p = self.base().map_err(|_| e)?;
                    let lnb = Expr::apply(Builtin::Ln, &base);
                    return Ok(Expr::apply(Builtin::Exp, &Expr::from_node(Node::Product(vec![p, lnb]))));
                }
                Err(e) => return Err(e),
            }
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<BigRational> {
        let paren = self.peek_kind() == Some(&Kind::LParen);
        if paren {
            self.i += 1;
        }
        let mut neg = false;
        if self.peek_kind() == Some(&Kind::Minus) {
            self.i += 1;
            neg = true;
        }
        let mut r = self.number("exponent")?;
        // Inside parentheses `a/b` is unambiguous; outside, only when the
        // exponent is written as a rational literal directly (`x^1/2` means
        // (x^1)/2, so we do not consume the slash there).
        if paren && self.peek_kind() == Some(&Kind::Slash) {
            self.i += 1;
            let d = self.number("exponent denominator")?;
            if d.is_zero() {
                return Err(Error::Syntax {
                    pos: self.pos(),
                    msg: "zero exponent denominator".into(),
                });
            }
            r /= d;
        }
        if paren {
            self.expect(Kind::RParen)?;
        }
        Ok(if neg { -r } else { r })
    }

    fn number(&mut self, what: &str) -> Result<BigRational> {
        match self.bump() {
            Some(Token { kind: Kind::Num(n), .. }) => Ok(n),
            Some(t) => Err(Error::Syntax {
                pos: t.pos,
                msg: format!("expected rational {what}, found {}", t.kind.describe()),
            }),
            None => Err(Error::Syntax {
                pos: self.len,
                msg: format!("expected rational {what}"),
            }),
        }
    }

    fn base(&mut self) -> Result<Expr> {
        let tok = self.bump().ok_or(Error::Syntax {
            pos: self.len,
            msg: "unexpected end of input".into(),
        })?;
        match tok.kind {
            Kind::Num(n) => {
                self.no_primes("a number")?;
                Ok(Expr::num(Number::Rational(n)))
            }
            Kind::LParen => {
                let e = self.expr()?;
                self.expect(Kind::RParen)?;
                self.no_primes("a parenthesised expression")?;
                Ok(e)
            }
            Kind::Ident(name) => self.ident(name, tok.pos),
            other => Err(Error::Syntax {
                pos: tok.pos,
                msg: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn ident(&mut self, name: String, pos: usize) -> Result<Expr> {
        match name.as_str() {
            "x" => {
                let (k, ppos) = self.count_primes();
                if k > Jet::MAX_ORDER as usize {
                    return Err(Error::MalformedDerivative {
                        pos: ppos,
                        msg: format!("x supports at most {} primes", Jet::MAX_ORDER),
                    });
                }
                Ok(Expr::jet(Jet::X(k as u8)))
            }
            "t" => {
                self.no_primes("t")?;
                Ok(Expr::t())
            }
            _ => {
                if let Some(f) = Builtin::from_name(&name) {
                    self.expect(Kind::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Kind::RParen)?;
                    self.no_primes("a builtin function")?;
                    return Ok(Expr::from_node(Node::Apply(f, arg)));
                }
                if self.peek_kind() == Some(&Kind::LParen) {
                    let is_time_call = matches!(
                        (self.tokens.get(self.i + 1), self.tokens.get(self.i + 2)),
                        (
                            Some(Token { kind: Kind::Ident(a), .. }),
                            Some(Token { kind: Kind::RParen, .. })
                        ) if a == "t"
                    );
                    if !is_time_call {
                        return Err(Error::UnknownFunction { name, pos });
                    }
                    self.i += 3;
                    let (k, _) = self.count_primes();
                    return Ok(Expr::func(&name, k as u32));
                }
                self.no_primes("a named constant")?;
                Ok(Expr::param(&name))
            }
        }
    }
}

fn negate(e: Expr) -> Expr {
    Expr::from_node(Node::Product(vec![
        Expr::num(Number::Rational(-BigRational::one())),
        e,
    ]))
}
