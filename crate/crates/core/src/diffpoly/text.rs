//! Plain-text form of expressions.
//!
//! ```text
//! expr    = [ "+" | "-" ] term { ( "+" | "-" ) term } ;
//! term    = power { "*" power } ;
//! power   = primary [ "^" integer ] ;
//! primary = number | jet | pairing | "Dxi" "(" expr ")" | "(" expr ")" ;
//! number  = integer [ "/" integer ] ;
//! jet     = family [ "[" integer "]" ] [ "'" integer ] ;
//! pairing = "<" vec "," vec ">" ;
//! vec     = family [ "'" integer ] ;
//! family  = "u" | "P" | "Q" | "h" ;
//! ```
//!
//! `u[2]'3` is the third derivative of the second component; a bare `u'3`
//! means component 1. `<u,u'1>` expands to `u[1]*u[1]'1 + ... + u[n-1]*u[n-1]'1`.
//! Printing never uses sugar, and `parse(print(e)) == e`.

use num::{BigInt, One, Signed, Zero};

use super::calculus::dxi;
use super::expr::{Expression, Family, Jet, Monomial, Rational};
use crate::error::{Error, Result};

pub fn print(e: &Expression) -> String {
    if e.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in e.terms().enumerate() {
        let neg = c.is_negative();
        let abs = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let body = print_monomial(m);
        if body.is_empty() {
            out.push_str(&print_rational(&abs));
        } else if abs.is_one() {
            out.push_str(&body);
        } else {
            out.push_str(&print_rational(&abs));
            out.push('*');
            out.push_str(&body);
        }
    }
    out
}

fn print_rational(c: &Rational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn print_monomial(m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (j, e) in m.jets() {
        parts.push(with_power(j.to_string(), *e));
    }
    for (a, e) in m.atoms() {
        parts.push(with_power(format!("Dxi({})", print(a.argument())), *e));
    }
    parts.join("*")
}

fn with_power(s: String, e: u32) -> String {
    if e == 1 {
        s
    } else {
        format!("{s}^{e}")
    }
}

/// Parse an expression for ambient dimension `n` (vectors have `n - 1`
/// components).
pub fn parse(text: &str, n: usize) -> Result<Expression> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("ambient dimension {n} < 2")));
    }
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        n,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expression> {
        let mut neg = false;
        if self.eat(b'-') {
            neg = true;
        } else {
            self.eat(b'+');
        }
        let mut acc = self.term()?;
        if neg {
            acc = -acc;
        }
        loop {
            if self.eat(b'+') {
                acc += self.term()?;
            } else if self.eat(b'-') {
                acc -= &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expression> {
        let mut acc = self.power()?;
        while self.eat(b'*') {
            acc = &acc * &self.power()?;
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Expression> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let k = self.integer()?;
            let k = u32::try_from(k).map_err(|_| self.err("exponent too large"))?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Parse {
                pos: start,
                msg: "integer overflow".into(),
            })
    }

    fn big_integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .unwrap())
    }

    fn primary(&mut self) -> Result<Expression> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let num = self.big_integer()?;
                let den = if self.eat(b'/') {
                    let d = self.big_integer()?;
                    if d.is_zero() {
                        return Err(self.err("zero denominator"));
                    }
                    d
                } else {
                    BigInt::one()
                };
                Ok(Expression::constant(Rational::new(num, den)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'<') => {
                self.pos += 1;
                let (fa, oa) = self.vec_ref()?;
                self.expect(b',')?;
                let (fb, ob) = self.vec_ref()?;
                self.expect(b'>')?;
                let mut s = Expression::zero();
                for k in 1..self.n {
                    s += &(&Expression::field(fa, k, oa) * &Expression::field(fb, k, ob));
                }
                Ok(s)
            }
            Some(b'D') => {
                if !self.src[self.pos..].starts_with(b"Dxi") {
                    return Err(self.err("unknown identifier"));
                }
                self.pos += 3;
                self.expect(b'(')?;
                let pos = self.pos;
                let arg = self.expr()?;
                self.expect(b')')?;
                if arg.is_zero() {
                    return Ok(Expression::zero());
                }
                dxi(&arg).map_err(|e| Error::Parse {
                    pos,
                    msg: e.to_string(),
                })
            }
            Some(c) if Family::from_symbol(c as char).is_some() => {
                let family = Family::from_symbol(c as char).unwrap();
                self.pos += 1;
                let comp = if self.src.get(self.pos) == Some(&b'[') {
                    self.pos += 1;
                    let k = self.integer()? as usize;
                    self.expect(b']')?;
                    k
                } else {
                    1
                };
                if comp == 0 || comp >= self.n {
                    return Err(self.err(&format!(
                        "component {comp} outside 1..{} for n = {}",
                        self.n - 1,
                        self.n
                    )));
                }
                let order = self.order()?;
                Ok(Expression::jet(Jet::new(family, comp, order)))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn order(&mut self) -> Result<usize> {
        if self.src.get(self.pos) == Some(&b'\'') {
            self.pos += 1;
            let o = self.integer()?;
            if o > 255 {
                return Err(self.err("derivative order too large"));
            }
            Ok(o as usize)
        } else {
            Ok(0)
        }
    }

    fn vec_ref(&mut self) -> Result<(Family, usize)> {
        let c = self.peek().ok_or_else(|| self.err("expected field"))?;
        let family = Family::from_symbol(c as char).ok_or_else(|| self.err("expected field"))?;
        self.pos += 1;
        Ok((family, self.order()?))
    }
}
