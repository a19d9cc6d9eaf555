//! Arithmetic expressions over the coordinates and named scene parameters.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
}

impl Function {
    pub const ALL: [Function; 9] = [
        Function::Sin,
        Function::Cos,
        Function::Tan,
        Function::Exp,
        Function::Log,
        Function::Sqrt,
        Function::Sinh,
        Function::Cosh,
        Function::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Tan => "tan",
            Function::Exp => "exp",
            Function::Log => "log",
            Function::Sqrt => "sqrt",
            Function::Sinh => "sinh",
            Function::Cosh => "cosh",
            Function::Tanh => "tanh",
        }
    }

    fn lookup(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Function::Sin => x.sin(),
            Function::Cos => x.cos(),
            Function::Tan => x.tan(),
            Function::Exp => x.exp(),
            Function::Log => x.ln(),
            Function::Sqrt => x.sqrt(),
            Function::Sinh => x.sinh(),
            Function::Cosh => x.cosh(),
            Function::Tanh => x.tanh(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expression {
    Number(f64),
    /// Coordinate `t` (index 0) or `x_k`.
    Coordinate(usize),
    /// Scene parameter with its slot in the parameter vector.
    Parameter { name: String, index: usize },
    Pi,
    E,
    Neg(Box<Expression>),
    Binary(BinaryOp, Box<Expression>, Box<Expression>),
    Call(Function, Box<Expression>),
}

/// Identifiers an expression may reference.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    /// Number of coordinates; `None` accepts any `x_k`.
    pub dimension: Option<usize>,
    pub parameters: Vec<String>,
}

impl Scope {
    pub fn new(dimension: usize, parameters: Vec<String>) -> Self {
        Self {
            dimension: Some(dimension),
            parameters,
        }
    }

    /// Parameters only, no coordinates.
    pub fn constants(parameters: Vec<String>) -> Self {
        Self::new(0, parameters)
    }
}

/// Parses with coordinates of any dimension and no parameters.
pub fn parse_expression(source: &str) -> Result<Expression> {
    parse_in(source, &Scope::default())
}

pub fn parse_in(source: &str, scope: &Scope) -> Result<Expression> {
    let tokens = lex(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        scope,
        end: source.len(),
    };
    if p.tokens.is_empty() {
        return Err(parse_error(0, "empty expression"));
    }
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(t) if t.kind == Tok::RParen => Err(parse_error(t.offset, "unbalanced ')'")),
        Some(t) => Err(parse_error(t.offset, "unexpected token")),
    }
}

fn parse_error(offset: usize, message: &str) -> Error {
    Error::Parse {
        offset,
        message: message.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

#[derive(Clone, Debug)]
struct Token {
    kind: Tok,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| parse_error(start, &format!("malformed number '{text}'")))?;
            out.push(Token {
                kind: Tok::Num(v),
                offset: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: Tok::Ident(src[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        let kind = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(parse_error(start, &format!("unexpected character '{ch}'")));
            }
        };
        out.push(Token {
            kind,
            offset: start,
        });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    scope: &'a Scope,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map(|t| t.offset).unwrap_or(self.end)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: Tok::Op(c), ..
            }) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expression> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let op = if c == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            let rhs = self.term()?;
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expression> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let op = if c == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            let rhs = self.unary()?;
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expression> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Expression::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Expression::Binary(BinaryOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expression> {
        let offset = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return Err(parse_error(offset, "unexpected end of expression"));
        };
        self.pos += 1;
        match tok.kind {
            Tok::Num(v) => Ok(Expression::Number(v)),
            Tok::LParen => {
                let e = self.expr()?;
                match self.peek() {
                    Some(Token {
                        kind: Tok::RParen, ..
                    }) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    _ => Err(parse_error(offset, "unbalanced '('")),
                }
            }
            Tok::RParen => Err(parse_error(offset, "unbalanced ')'")),
            Tok::Op(c) => Err(parse_error(offset, &format!("unexpected operator '{c}'"))),
            Tok::Ident(name) => self.identifier(&name, offset),
        }
    }

    fn identifier(&mut self, name: &str, offset: usize) -> Result<Expression> {
        if let Some(f) = Function::lookup(name) {
            if !matches!(self.peek().map(|t| &t.kind), Some(Tok::LParen)) {
                return Err(parse_error(offset, &format!("function '{name}' needs '('")));
            }
            let arg = self.primary()?;
            return Ok(Expression::Call(f, Box::new(arg)));
        }
        if matches!(self.peek().map(|t| &t.kind), Some(Tok::LParen)) {
            return Err(parse_error(offset, &format!("unknown function '{name}'")));
        }
        if let Some(index) = self.scope.parameters.iter().position(|p| p == name) {
            return Ok(Expression::Parameter {
                name: name.to_string(),
                index,
            });
        }
        let coord = match name {
            "t" => Some(0),
            _ => name
                .strip_prefix('x')
                .filter(|d| !d.is_empty() && !d.starts_with('0'))
                .and_then(|d| d.parse::<usize>().ok()),
        };
        if let Some(k) = coord {
            if self.scope.dimension.is_none_or(|m| k < m) {
                return Ok(Expression::Coordinate(k));
            }
        }
        match name {
            "pi" => Ok(Expression::Pi),
            "e" => Ok(Expression::E),
            _ => Err(parse_error(offset, &format!("unknown identifier '{name}'"))),
        }
    }
}

impl Expression {
    /// Value at `coords` with parameter values `params`; non-finite results
    /// are errors.
    pub fn eval(&self, coords: &[f64], params: &[f64]) -> Result<f64> {
        let v = self.eval_raw(coords, params);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation {
                point: coords.to_vec(),
                message: format!("'{self}' is not finite"),
            })
        }
    }

    fn eval_raw(&self, x: &[f64], p: &[f64]) -> f64 {
        match self {
            Expression::Number(v) => *v,
            Expression::Coordinate(k) => x.get(*k).copied().unwrap_or(f64::NAN),
            Expression::Parameter { index, .. } => p.get(*index).copied().unwrap_or(f64::NAN),
            Expression::Pi => std::f64::consts::PI,
            Expression::E => std::f64::consts::E,
            Expression::Neg(a) => -a.eval_raw(x, p),
            Expression::Binary(op, a, b) => {
                let (a, b) = (a.eval_raw(x, p), b.eval_raw(x, p));
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => a / b,
                    BinaryOp::Pow => a.powf(b),
                }
            }
            Expression::Call(f, a) => f.apply(a.eval_raw(x, p)),
        }
    }

    /// Largest coordinate index referenced.
    pub fn max_coordinate(&self) -> Option<usize> {
        match self {
            Expression::Coordinate(k) => Some(*k),
            Expression::Neg(a) | Expression::Call(_, a) => a.max_coordinate(),
            Expression::Binary(_, a, b) => match (a.max_coordinate(), b.max_coordinate()) {
                (Some(i), Some(j)) => Some(i.max(j)),
                (i, j) => i.or(j),
            },
            _ => None,
        }
    }

    fn is_atom(&self) -> bool {
        matches!(
            self,
            Expression::Number(_)
                | Expression::Coordinate(_)
                | Expression::Parameter { .. }
                | Expression::Pi
                | Expression::E
                | Expression::Call(..)
        )
    }

    fn is_additive(&self) -> bool {
        matches!(self, Expression::Binary(BinaryOp::Add | BinaryOp::Sub, ..))
    }

    fn is_multiplicative(&self) -> bool {
        matches!(self, Expression::Binary(BinaryOp::Mul | BinaryOp::Div, ..))
    }
}

fn paren(f: &mut fmt::Formatter<'_>, e: &Expression, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Number(v) if *v < 0.0 || v.is_sign_negative() => write!(f, "({v:?})"),
            Expression::Number(v) => write!(f, "{v:?}"),
            Expression::Coordinate(0) => write!(f, "t"),
            Expression::Coordinate(k) => write!(f, "x{k}"),
            Expression::Parameter { name, .. } => write!(f, "{name}"),
            Expression::Pi => write!(f, "pi"),
            Expression::E => write!(f, "e"),
            Expression::Neg(a) => {
                write!(f, "-")?;
                paren(f, a, a.is_additive() || a.is_multiplicative())
            }
            Expression::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expression::Binary(op, a, b) => {
                let (wa, wb) = match op {
                    BinaryOp::Add => (false, false),
                    BinaryOp::Sub => (false, b.is_additive()),
                    BinaryOp::Mul | BinaryOp::Div => {
                        (a.is_additive(), b.is_additive() || b.is_multiplicative())
                    }
                    BinaryOp::Pow => (!a.is_atom(), b.is_additive() || b.is_multiplicative()),
                };
                paren(f, a, wa)?;
                write!(f, " {} ", op.symbol())?;
                // A right operand of + or - that is itself + or - is always
                // wrapped to keep the tree shape.
                paren(f, b, wb || (*op == BinaryOp::Add && b.is_additive()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: &[f64]) -> f64 {
        parse_expression(s).unwrap().eval(x, &[]).unwrap()
    }

    #[test]
    fn precedence_and_functions() {
        assert_eq!(ev("1+2*3", &[0.0]), 7.0);
        assert!((ev("2*sin(t)^2", &[std::f64::consts::FRAC_PI_2]) - 2.0).abs() < 1e-15);
        assert_eq!(ev("exp(-(x1^2))", &[0.0, 0.0]), 1.0);
        assert_eq!(ev("2^3^2", &[]), 512.0);
        assert_eq!(ev("-2^2", &[]), -4.0);
        assert_eq!(ev("2^-1", &[]), 0.5);
        assert_eq!(ev("8/4/2", &[]), 1.0);
        assert_eq!(ev("1.5e2 - 5E-1", &[]), 149.5);
    }

    #[test]
    fn errors_carry_offsets() {
        let off = |s: &str| match parse_expression(s) {
            Err(Error::Parse { offset, .. }) => offset,
            other => panic!("{other:?}"),
        };
        assert_eq!(off(""), 0);
        assert_eq!(off("  "), 0);
        assert_eq!(off("(1+2"), 0);
        assert_eq!(off("1+2)"), 3);
        assert_eq!(off("1 + foo"), 4);
        assert_eq!(off("bar(2)"), 0);
        assert_eq!(off("2 * $"), 4);
        assert_eq!(off("sin 2"), 0);
        assert_eq!(off("1 +"), 3);
    }

    #[test]
    fn scope_limits_identifiers() {
        let scope = Scope::new(2, vec!["k".into()]);
        assert!(parse_in("k*x1 + t", &scope).is_ok());
        assert!(parse_in("x2", &scope).is_err());
        assert!(parse_in("x01", &scope).is_err());
        let e = parse_in("k", &scope).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0], &[3.0]).unwrap(), 3.0);
    }

    #[test]
    fn non_finite_is_an_error() {
        let e = parse_expression("log(x1)").unwrap();
        assert!(matches!(e.eval(&[0.0, -1.0], &[]), Err(Error::Evaluation { .. })));
    }

    #[test]
    fn printing_round_trips() {
        for s in [
            "1 - (2 - 3)",
            "(1 - 2) - 3",
            "-(a)".replace('a', "t").as_str(),
            "2 ^ (3 ^ 2)",
            "(2 ^ 3) ^ 2",
            "-x1 ^ 2",
            "(-x1) ^ 2",
            "a / (b * c)".replace(['a', 'b', 'c'], "t").as_str(),
            "sin(t) * cos(x1 + 1e-7)",
            "1 + (2 + 3)",
            "2 * -3",
            "--t",
        ] {
            let a = parse_expression(s).unwrap();
            let b = parse_expression(&a.to_string()).unwrap();
            assert_eq!(a, b, "{s} -> {a}");
        }
    }
}
