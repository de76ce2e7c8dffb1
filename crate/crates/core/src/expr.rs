//! Small arithmetic expressions over `x`, `y`, `t` used for scenario data.
//!
//! Supported: `+ - * / ^`, unary minus, parentheses, `sin`, `cos`, `exp`,
//! the constants `pi` and `e`, and decimal literals with optional exponent.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    T,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Exp(Box<Node>),
    // only produced by differentiation
    Ln(Box<Node>),
}

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at column {}", self.message, self.position + 1)
    }
}

impl std::error::Error for ExprError {}

/// A parsed expression. Equality compares the source text.
#[derive(Debug, Clone)]
pub struct Expr {
    source: String,
    root: Node,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, len: src.len() };
        let root = p.expr()?;
        if let Some(tok) = p.tokens.get(p.pos) {
            return Err(ExprError {
                position: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(Expr {
            source: src.trim().to_string(),
            root,
        })
    }

    pub fn constant(value: f64) -> Self {
        Expr {
            source: format!("{value}"),
            root: Node::Const(value),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// True when the expression is the literal constant zero.
    pub fn is_zero(&self) -> bool {
        matches!(self.root, Node::Const(c) if c == 0.0)
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        eval(&self.root, x, y, t)
    }

    /// Exact symbolic derivative with respect to `t`.
    pub fn derivative_t(&self) -> Expr {
        let root = simplify(diff(&self.root, Var::T));
        Expr {
            source: format!("d/dt({})", self.source),
            root,
        }
    }
}

fn eval(n: &Node, x: f64, y: f64, t: f64) -> f64 {
    match n {
        Node::Const(c) => *c,
        Node::Var(Var::X) => x,
        Node::Var(Var::Y) => y,
        Node::Var(Var::T) => t,
        Node::Neg(a) => -eval(a, x, y, t),
        Node::Add(a, b) => eval(a, x, y, t) + eval(b, x, y, t),
        Node::Sub(a, b) => eval(a, x, y, t) - eval(b, x, y, t),
        Node::Mul(a, b) => eval(a, x, y, t) * eval(b, x, y, t),
        Node::Div(a, b) => eval(a, x, y, t) / eval(b, x, y, t),
        Node::Pow(a, b) => {
            let base = eval(a, x, y, t);
            match **b {
                Node::Const(c) if c.fract() == 0.0 && c.abs() < 64.0 => base.powi(c as i32),
                _ => base.powf(eval(b, x, y, t)),
            }
        }
        Node::Sin(a) => eval(a, x, y, t).sin(),
        Node::Cos(a) => eval(a, x, y, t).cos(),
        Node::Exp(a) => eval(a, x, y, t).exp(),
        Node::Ln(a) => eval(a, x, y, t).ln(),
    }
}

fn depends_on(n: &Node, v: Var) -> bool {
    match n {
        Node::Const(_) => false,
        Node::Var(w) => *w == v,
        Node::Neg(a) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) | Node::Ln(a) => depends_on(a, v),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            depends_on(a, v) || depends_on(b, v)
        }
    }
}

fn bx(n: Node) -> Box<Node> {
    Box::new(n)
}

fn diff(n: &Node, v: Var) -> Node {
    use Node::*;
    if !depends_on(n, v) {
        return Const(0.0);
    }
    match n {
        Const(_) => Const(0.0),
        Var(w) => Const(if *w == v { 1.0 } else { 0.0 }),
        Neg(a) => Neg(bx(diff(a, v))),
        Add(a, b) => Add(bx(diff(a, v)), bx(diff(b, v))),
        Sub(a, b) => Sub(bx(diff(a, v)), bx(diff(b, v))),
        Mul(a, b) => Add(
            bx(Mul(bx(diff(a, v)), b.clone())),
            bx(Mul(a.clone(), bx(diff(b, v)))),
        ),
        Div(a, b) => Div(
            bx(Sub(
                bx(Mul(bx(diff(a, v)), b.clone())),
                bx(Mul(a.clone(), bx(diff(b, v)))),
            )),
            bx(Pow(b.clone(), bx(Const(2.0)))),
        ),
        Pow(a, b) => {
            if !depends_on(b, v) {
                // b a^(b-1) a'
                Mul(
                    bx(Mul(b.clone(), bx(Pow(a.clone(), bx(Sub(b.clone(), bx(Const(1.0)))))))),
                    bx(diff(a, v)),
                )
            } else {
                // a^b (b' ln a + b a'/a)
                Mul(
                    bx(n.clone()),
                    bx(Add(
                        bx(Mul(bx(diff(b, v)), bx(Ln(a.clone())))),
                        bx(Div(bx(Mul(b.clone(), bx(diff(a, v)))), a.clone())),
                    )),
                )
            }
        }
        Sin(a) => Mul(bx(Cos(a.clone())), bx(diff(a, v))),
        Cos(a) => Neg(bx(Mul(bx(Sin(a.clone())), bx(diff(a, v))))),
        Exp(a) => Mul(bx(n.clone()), bx(diff(a, v))),
        Ln(a) => Div(bx(diff(a, v)), a.clone()),
    }
}

fn simplify(n: Node) -> Node {
    use Node::*;
    match n {
        Neg(a) => match simplify(*a) {
            Const(c) => Const(-c),
            s => Neg(bx(s)),
        },
        Add(a, b) => match (simplify(*a), simplify(*b)) {
            (Const(x), Const(y)) => Const(x + y),
            (Const(z), s) | (s, Const(z)) if z == 0.0 => s,
            (p, q) => Add(bx(p), bx(q)),
        },
        Sub(a, b) => match (simplify(*a), simplify(*b)) {
            (Const(x), Const(y)) => Const(x - y),
            (s, Const(z)) if z == 0.0 => s,
            (Const(z), s) if z == 0.0 => Neg(bx(s)),
            (p, q) => Sub(bx(p), bx(q)),
        },
        Mul(a, b) => match (simplify(*a), simplify(*b)) {
            (Const(x), Const(y)) => Const(x * y),
            (Const(z), _) | (_, Const(z)) if z == 0.0 => Const(0.0),
            (Const(o), s) | (s, Const(o)) if o == 1.0 => s,
            (p, q) => Mul(bx(p), bx(q)),
        },
        Div(a, b) => match (simplify(*a), simplify(*b)) {
            (Const(z), _) if z == 0.0 => Const(0.0),
            (s, Const(o)) if o == 1.0 => s,
            (p, q) => Div(bx(p), bx(q)),
        },
        Pow(a, b) => Pow(bx(simplify(*a)), bx(simplify(*b))),
        Sin(a) => Sin(bx(simplify(*a))),
        Cos(a) => Cos(bx(simplify(*a))),
        Exp(a) => Exp(bx(simplify(*a))),
        Ln(a) => Ln(bx(simplify(*a))),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("number {v}"),
            TokKind::Ident(s) => format!("identifier '{s}'"),
            TokKind::Op(c) => format!("operator '{c}'"),
            TokKind::LParen => "'('".into(),
            TokKind::RParen => "')'".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                // exponent only if followed by digit or sign+digit
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let value = text.parse::<f64>().map_err(|_| ExprError {
                position: start,
                message: format!("malformed number '{text}'"),
            })?;
            out.push(Token { kind: TokKind::Num(value), offset: start });
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokKind::Ident(src[start..i].to_string()),
                offset: start,
            });
        } else {
            let kind = match c {
                '+' | '-' | '*' | '/' | '^' => TokKind::Op(c),
                '(' => TokKind::LParen,
                ')' => TokKind::RParen,
                _ => {
                    return Err(ExprError {
                        position: start,
                        message: format!("unexpected character '{c}'"),
                    })
                }
            };
            out.push(Token { kind, offset: start });
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&TokKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len, |t| t.offset)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(TokKind::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Node::Add(bx(lhs), bx(rhs))
            } else {
                Node::Sub(bx(lhs), bx(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(TokKind::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Node::Mul(bx(lhs), bx(rhs))
            } else {
                Node::Div(bx(lhs), bx(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Some(TokKind::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(bx(self.unary()?)))
            }
            Some(TokKind::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if let Some(TokKind::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Pow(bx(base), bx(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let Some(kind) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        match kind {
            TokKind::Num(v) => {
                self.pos += 1;
                Ok(Node::Const(v))
            }
            TokKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            TokKind::Ident(name) => {
                let at = self.offset();
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(Node::Var(Var::X)),
                    "y" => Ok(Node::Var(Var::Y)),
                    "t" => Ok(Node::Var(Var::T)),
                    "pi" => Ok(Node::Const(std::f64::consts::PI)),
                    "e" => Ok(Node::Const(std::f64::consts::E)),
                    "sin" | "cos" | "exp" => {
                        if self.peek() != Some(&TokKind::LParen) {
                            return self.err(format!("expected '(' after {name}"));
                        }
                        self.pos += 1;
                        let arg = bx(self.expr()?);
                        self.expect_rparen()?;
                        Ok(match name.as_str() {
                            "sin" => Node::Sin(arg),
                            "cos" => Node::Cos(arg),
                            _ => Node::Exp(arg),
                        })
                    }
                    _ => Err(ExprError {
                        position: at,
                        message: format!("unknown identifier '{name}'"),
                    }),
                }
            }
            other => self.err(format!("unexpected {}", other.describe())),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if self.peek() == Some(&TokKind::RParen) {
            self.pos += 1;
            Ok(())
        } else {
            self.err("expected ')'")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_pi_x_times_t() {
        let e = Expr::parse("sin(pi*x)*t").unwrap();
        assert!((e.eval(0.5, 0.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = Expr::parse("-2^2 + 3*4/2 - (1-4)").unwrap();
        assert_eq!(e.eval(0.0, 0.0, 0.0), -4.0 + 6.0 + 3.0);
        let e = Expr::parse("2^-1").unwrap();
        assert_eq!(e.eval(0.0, 0.0, 0.0), 0.5);
        let e = Expr::parse("1.5e-3*x").unwrap();
        assert_eq!(e.eval(2.0, 0.0, 0.0), 3e-3);
    }

    #[test]
    fn errors_carry_position() {
        let err = Expr::parse("sin(x + )").unwrap_err();
        assert_eq!(err.position, 8);
        let err = Expr::parse("x $ 2").unwrap_err();
        assert_eq!(err.position, 2);
        let err = Expr::parse("foo(x)").unwrap_err();
        assert_eq!(err.position, 0);
        assert!(Expr::parse("(x").is_err());
        assert!(Expr::parse("").is_err());
    }

    #[test]
    fn derivative_matches_central_difference() {
        for src in ["t^3*x", "sin(2*t)*cos(t*y)", "exp(-t)/(1+t^2)", "2^t", "t*0.5 + 3"] {
            let e = Expr::parse(src).unwrap();
            let d = e.derivative_t();
            for &t in &[0.3, 1.1] {
                let h = 1e-6;
                let fd = (e.eval(0.7, 0.2, t + h) - e.eval(0.7, 0.2, t - h)) / (2.0 * h);
                assert!((d.eval(0.7, 0.2, t) - fd).abs() < 1e-7, "{src}");
            }
        }
        assert!(Expr::parse("x*y").unwrap().derivative_t().is_zero());
    }
}
