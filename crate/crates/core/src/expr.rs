//! Tiny expression grammar for user-defined densities.
//!
//! Grammar: numbers, `pi`, variables `x1..x3`, `y1..y3`, `r` (= |y - x|),
//! operators `+ - * / ^`, parentheses, unary minus, and the functions
//! `abs, exp, ln, sqrt, min, max, step` (step(t) = 1 for t > 0, else 0).
//! Half-space and ball indicators are expressible through `step`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geom;
use crate::kernel::{DensityFn, JumpKernel, LevyMeasureField};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || chars[i] == 'e'
                        || chars[i] == 'E'
                        || ((chars[i] == '+' || chars[i] == '-')
                            && i > start
                            && (chars[i - 1] == 'e' || chars[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let v = text
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number `{text}`")))?;
                out.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(Error::Parse(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Ast {
    Num(f64),
    Var(Var),
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Call(Func, Vec<Ast>),
}

#[derive(Debug, Clone, Copy)]
enum Var {
    X(usize),
    Y(usize),
    R,
}

#[derive(Debug, Clone, Copy)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Abs,
    Exp,
    Ln,
    Sqrt,
    Min,
    Max,
    Step,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            other => Err(Error::Parse(format!("expected {tok:?}, found {other:?}"))),
        }
    }

    // Precedence-climbing expression parser.
    fn expr(&mut self, min_prec: u8) -> Result<Ast> {
        let mut lhs = self.atom()?;
        loop {
            let (op, prec, right_assoc) = match self.peek() {
                Some(Token::Plus) => (BinOp::Add, 1, false),
                Some(Token::Minus) => (BinOp::Sub, 1, false),
                Some(Token::Star) => (BinOp::Mul, 2, false),
                Some(Token::Slash) => (BinOp::Div, 2, false),
                Some(Token::Caret) => (BinOp::Pow, 3, true),
                _ => break,
            };
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let next_min = if right_assoc { prec } else { prec + 1 };
            let rhs = self.expr(next_min)?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Ast> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Ast::Num(v)),
            // Unary minus binds looser than `^`: -2^2 is -(2^2).
            Some(Token::Minus) => Ok(Ast::Neg(Box::new(self.expr(3)?))),
            Some(Token::LParen) => {
                let inner = self.expr(0)?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                if self.peek() == Some(&Token::LParen) {
                    let func = match name.as_str() {
                        "abs" => Func::Abs,
                        "exp" => Func::Exp,
                        "ln" => Func::Ln,
                        "sqrt" => Func::Sqrt,
                        "min" => Func::Min,
                        "max" => Func::Max,
                        "step" => Func::Step,
                        other => return Err(Error::Parse(format!("unknown function `{other}`"))),
                    };
                    self.pos += 1;
                    let mut args = vec![self.expr(0)?];
                    while self.peek() == Some(&Token::Comma) {
                        self.pos += 1;
                        args.push(self.expr(0)?);
                    }
                    self.expect(Token::RParen)?;
                    let want = match func {
                        Func::Min | Func::Max => 2,
                        _ => 1,
                    };
                    if args.len() != want {
                        return Err(Error::Parse(format!(
                            "function `{name}` takes {want} argument(s)"
                        )));
                    }
                    Ok(Ast::Call(func, args))
                } else {
                    match name.as_str() {
                        "pi" => Ok(Ast::Num(std::f64::consts::PI)),
                        "r" => Ok(Ast::Var(Var::R)),
                        _ => {
                            let (head, idx) = name.split_at(1);
                            let i: usize = idx
                                .parse()
                                .map_err(|_| Error::Parse(format!("unknown name `{name}`")))?;
                            if i < 1 || i > self.dim {
                                return Err(Error::Parse(format!(
                                    "coordinate index out of range in `{name}`"
                                )));
                            }
                            match head {
                                "x" => Ok(Ast::Var(Var::X(i - 1))),
                                "y" => Ok(Ast::Var(Var::Y(i - 1))),
                                _ => Err(Error::Parse(format!("unknown name `{name}`"))),
                            }
                        }
                    }
                }
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

fn eval(ast: &Ast, x: &[f64], y: &[f64]) -> f64 {
    match ast {
        Ast::Num(v) => *v,
        Ast::Var(Var::X(i)) => x[*i],
        Ast::Var(Var::Y(i)) => y[*i],
        Ast::Var(Var::R) => geom::dist(x, y),
        Ast::Neg(a) => -eval(a, x, y),
        Ast::Bin(op, a, b) => {
            let (va, vb) = (eval(a, x, y), eval(b, x, y));
            match op {
                BinOp::Add => va + vb,
                BinOp::Sub => va - vb,
                BinOp::Mul => va * vb,
                BinOp::Div => va / vb,
                BinOp::Pow => va.powf(vb),
            }
        }
        Ast::Call(f, args) => {
            let v = eval(&args[0], x, y);
            match f {
                Func::Abs => v.abs(),
                Func::Exp => v.exp(),
                Func::Ln => v.ln(),
                Func::Sqrt => v.sqrt(),
                Func::Min => v.min(eval(&args[1], x, y)),
                Func::Max => v.max(eval(&args[1], x, y)),
                Func::Step => {
                    if v > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        }
    }
}

/// Compiled expression over (x, y) in R^d x R^d.
#[derive(Clone)]
pub struct Expression {
    ast: Arc<Ast>,
    pub dim: usize,
}

impl Expression {
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::invalid("dim", "expressions support d in 1..=3"));
        }
        let tokens = tokenize(src)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            dim,
        };
        let ast = parser.expr(0)?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Parse("trailing input after expression".into()));
        }
        Ok(Expression {
            ast: Arc::new(ast),
            dim,
        })
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        eval(&self.ast, x, y)
    }
}

/// Jump kernel backed by a parsed expression in (x, y).
pub fn expr_kernel(src: &str, dim: usize, symmetric: bool) -> Result<JumpKernel> {
    let expr = Expression::parse(src, dim)?;
    let density: DensityFn = Arc::new(move |x: &[f64], y: &[f64]| expr.eval(x, y).max(0.0));
    Ok(JumpKernel::new(dim, density, symmetric))
}

/// Measure field whose density in (x, y) is a parsed expression; `y1..` refer
/// to the jump vector, so the density is evaluated at (x, x + y).
pub fn expr_field(src: &str, dim: usize, symmetric: bool) -> Result<LevyMeasureField> {
    let expr = Expression::parse(src, dim)?;
    let density: DensityFn = Arc::new(move |x: &[f64], y: &[f64]| expr.eval(x, y).max(0.0));
    Ok(LevyMeasureField::new(dim, density, symmetric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_arithmetic_and_precedence() {
        let e = Expression::parse("1 + 2 * 3 ^ 2", 1).unwrap();
        assert_relative_eq!(e.eval(&[0.0], &[1.0]), 19.0);
        let f = Expression::parse("-2 ^ 2", 1).unwrap();
        assert_relative_eq!(f.eval(&[0.0], &[1.0]), -4.0);
    }

    #[test]
    fn variables_and_radius() {
        let e = Expression::parse("r ^ -2 / pi", 1).unwrap();
        assert_relative_eq!(
            e.eval(&[0.0], &[2.0]),
            1.0 / (4.0 * std::f64::consts::PI),
            max_relative = 1e-14
        );
        let g = Expression::parse("x1 * y2", 2).unwrap();
        assert_relative_eq!(g.eval(&[3.0, 0.0], &[0.0, 5.0]), 15.0);
    }

    #[test]
    fn step_builds_half_space_indicator() {
        let e = Expression::parse("step(y1 - x1)", 1).unwrap();
        assert_eq!(e.eval(&[0.0], &[1.0]), 1.0);
        assert_eq!(e.eval(&[0.0], &[-1.0]), 0.0);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(Expression::parse("x4", 2).is_err());
        assert!(Expression::parse("foo(1)", 1).is_err());
        assert!(Expression::parse("1 +", 1).is_err());
        assert!(Expression::parse("min(1)", 1).is_err());
    }
}
