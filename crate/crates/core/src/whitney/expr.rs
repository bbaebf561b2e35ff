//! A small language for smooth forms on the unit torus, e.g.
//! `cos(2pi x)*sin(2pi y) dx - sin(2pi x)*cos(2pi y) dy`, `sin(2pi x) dy`,
//! `1` or `dx^dy`.
//!
//! Factors (numbers, `pi`, `cos(..)`, `sin(..)`, parenthesized sums and the
//! differentials `dx`, `dy`, `dz`) are combined by `*`, `^` or juxtaposition,
//! all meaning the wedge product. Trig arguments must be integer multiples of
//! `2pi` times the coordinates so that the result is periodic.

use std::f64::consts::PI;

use super::analytic::{AnalyticForm, Trig, TrigPoly};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent, only when followed by digits
            if i + 1 < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse().map_err(|_| Error::FormSyntax(format!("bad number '{text}'")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphabetic() {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::FormSyntax(format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
}

fn axis_of(name: &str, dim: usize) -> Option<usize> {
    let a = match name {
        "x" => 0,
        "y" => 1,
        "z" => 2,
        _ => return None,
    };
    (a < dim).then_some(a)
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: char) -> Result<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(Error::FormSyntax(format!("expected '{op}' at token {}", self.pos)))
        }
    }

    fn sum(&mut self) -> Result<AnalyticForm> {
        let mut sign = 1.0;
        if self.eat_op('-') {
            sign = -1.0;
        } else {
            self.eat_op('+');
        }
        let mut acc = self.term()?.scale(sign);
        loop {
            let s = if self.eat_op('+') {
                1.0
            } else if self.eat_op('-') {
                -1.0
            } else {
                break;
            };
            let t = self.term()?;
            if t.degree() != acc.degree() {
                return Err(Error::FormSyntax(format!(
                    "cannot add forms of degree {} and {}",
                    acc.degree(),
                    t.degree()
                )));
            }
            acc = acc.add(&t.scale(s))?;
        }
        Ok(acc)
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek(), Some(Token::Num(_)) | Some(Token::Ident(_)) | Some(Token::Op('(')))
    }

    fn term(&mut self) -> Result<AnalyticForm> {
        let mut acc = self.factor()?;
        loop {
            if self.eat_op('*') || self.eat_op('^') || self.starts_factor() {
                let f = self.factor()?;
                acc = acc.wedge(&f)?;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<AnalyticForm> {
        let dim = self.dim;
        let tok = self.peek().cloned().ok_or_else(|| Error::FormSyntax("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(AnalyticForm::function(TrigPoly::constant(dim, v))),
            Token::Op('(') => {
                let inner = self.sum()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            Token::Op('-') => Ok(self.factor()?.scale(-1.0)),
            Token::Ident(name) => match name.as_str() {
                "pi" => Ok(AnalyticForm::function(TrigPoly::constant(dim, PI))),
                "cos" | "sin" => {
                    self.expect_op('(')?;
                    let k = self.wave_vector()?;
                    self.expect_op(')')?;
                    let f = if name == "cos" { TrigPoly::cos_of(dim, &k) } else { TrigPoly::sin_of(dim, &k) };
                    Ok(AnalyticForm::function(f))
                }
                _ => {
                    if let Some(axis) = name.strip_prefix('d').and_then(|v| axis_of(v, dim)) {
                        AnalyticForm::monomial(TrigPoly::constant(dim, 1.0), &[axis])
                    } else {
                        Err(Error::FormSyntax(format!("unknown name '{name}'")))
                    }
                }
            },
            Token::Op(c) => Err(Error::FormSyntax(format!("unexpected '{c}'"))),
        }
    }

    /// Parses `Σ c_a x_a` and returns the integer wave vector `c / 2π`.
    fn wave_vector(&mut self) -> Result<Vec<i64>> {
        let mut coefs = vec![0.0; self.dim];
        let mut first = true;
        loop {
            let sign = if self.eat_op('-') {
                -1.0
            } else if self.eat_op('+') || first {
                1.0
            } else {
                break;
            };
            first = false;
            let mut c = sign;
            let mut axis = None;
            loop {
                match self.peek().cloned() {
                    Some(Token::Num(v)) => c *= v,
                    Some(Token::Ident(name)) if name == "pi" => c *= PI,
                    Some(Token::Ident(name)) => match axis_of(&name, self.dim) {
                        Some(a) if axis.is_none() => axis = Some(a),
                        _ => return Err(Error::FormSyntax(format!("bad trig argument near '{name}'"))),
                    },
                    Some(Token::Op('*')) => {}
                    _ => break,
                }
                self.pos += 1;
            }
            let a = axis.ok_or_else(|| Error::FormSyntax("constant phase in trig argument".into()))?;
            coefs[a] += c;
        }
        coefs
            .iter()
            .map(|&c| {
                let k = (c / (2.0 * PI)).round();
                if (c - 2.0 * PI * k).abs() > 1e-9 * c.abs().max(1.0) {
                    Err(Error::FormSyntax("trig frequency is not an integer multiple of 2pi".into()))
                } else {
                    Ok(k as i64)
                }
            })
            .collect()
    }
}

/// The Taylor–Green form `cos(2πx) sin(2πy) dx − sin(2πx) cos(2πy) dy`.
pub fn taylor_green() -> AnalyticForm {
    let x = TrigPoly::factor(2, 0, Trig::Cos(1)).mul(&TrigPoly::factor(2, 1, Trig::Sin(1)));
    let y = TrigPoly::factor(2, 0, Trig::Sin(1)).mul(&TrigPoly::factor(2, 1, Trig::Cos(1))).scale(-1.0);
    AnalyticForm::new(2, 1, vec![x, y]).expect("two components")
}

/// Parses a form on the `dim`-torus. The name `taylor-green` is accepted as a
/// preset on the 2-torus.
pub fn parse_form(src: &str, dim: usize) -> Result<AnalyticForm> {
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if src.trim() == "taylor-green" {
        if dim != 2 {
            return Err(Error::FormSyntax("taylor-green is defined on the 2-torus".into()));
        }
        return Ok(taylor_green());
    }
    let mut p = Parser { tokens: tokenize(src)?, pos: 0, dim };
    if p.tokens.is_empty() {
        return Err(Error::FormSyntax("empty expression".into()));
    }
    let form = p.sum()?;
    if p.pos != p.tokens.len() {
        return Err(Error::FormSyntax(format!("trailing input at token {}", p.pos)));
    }
    Ok(form)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_taylor_green_spelled_out() {
        let f = parse_form("cos(2pi x)*sin(2pi y) dx - sin(2pi x)*cos(2pi y) dy", 2).unwrap();
        assert_eq!(f, taylor_green());
    }

    #[test]
    fn parses_simple_forms() {
        let f = parse_form("sin(2pi x) dy", 2).unwrap();
        assert_eq!(f.degree(), 1);
        assert!((f.eval(&[0.25, 0.0])[1] - 1.0).abs() < 1e-15);
        let one = parse_form("1", 2).unwrap();
        assert_eq!(one.degree(), 0);
        let area = parse_form("dx^dy", 2).unwrap();
        assert_eq!(area.degree(), 2);
        assert_eq!(parse_form("dy^dx", 2).unwrap(), area.scale(-1.0));
        let g = parse_form("0.5 * cos(4*pi*x + 2 pi y)", 2).unwrap();
        let x = [0.1, 0.3];
        assert!((g.eval(&x)[0] - 0.5 * (2.0 * PI * (2.0 * x[0] + x[1])).cos()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_form("sin(pi x) dx", 2).is_err());
        assert!(parse_form("dx + 1", 2).is_err());
        assert!(parse_form("dz", 2).is_err());
        assert!(parse_form("cos(2pi x", 2).is_err());
        assert!(parse_form("", 2).is_err());
        assert!(parse_form("dx dy dx", 2).is_err());
        assert!(parse_form("dx dx", 2).unwrap().is_zero(0.0));
    }
}
