//! A small scalar expression language for potentials and Lagrangian terms.
//!
//! Grammar (whitespace-insensitive):
//! `^` (right-associative) binds tighter than unary minus, which binds
//! tighter than `*` `/`, which bind tighter than `+` `-`. Functions:
//! `sin cos exp log sqrt`. No conditionals, no user functions — scenario
//! potentials are polynomial/trigonometric and this keeps faults explicit.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression tree. Immutable after construction; cheap to clone and safe to
/// share across workers.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

// ---- tokenizer ----

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

struct Tokenizer<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Tokenizer<'a> {
    fn new(input: &'a str) -> Self {
        Tokenizer { input, pos: 0 }
    }

    fn next_token(&mut self) -> Result<(Token, usize)> {
        let bytes = self.input.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= bytes.len() {
            return Ok((Token::Eof, start));
        }
        let c = bytes[self.pos];
        let tok = match c {
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'^' => Token::Caret,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                    end += 1;
                }
                // exponent part: e or E, optional sign, digits
                if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                    let mut e = end + 1;
                    if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                        e += 1;
                    }
                    if e < bytes.len() && bytes[e].is_ascii_digit() {
                        end = e;
                        while end < bytes.len() && bytes[end].is_ascii_digit() {
                            end += 1;
                        }
                    }
                }
                let text = &self.input[self.pos..end];
                let value: f64 = text.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                self.pos = end;
                return Ok((Token::Number(value), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while end < bytes.len()
                    && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_')
                {
                    end += 1;
                }
                let name = self.input[self.pos..end].to_string();
                self.pos = end;
                return Ok((Token::Ident(name), start));
            }
            other => {
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", other as char),
                })
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }
}

// ---- parser ----

struct Parser<'a> {
    tokens: Tokenizer<'a>,
    current: Token,
    offset: usize,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Result<Self> {
        let mut tokens = Tokenizer::new(input);
        let (current, offset) = tokens.next_token()?;
        Ok(Parser { tokens, current, offset })
    }

    fn advance(&mut self) -> Result<()> {
        let (tok, off) = self.tokens.next_token()?;
        self.current = tok;
        self.offset = off;
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.current {
                Token::Plus => BinaryOp::Add,
                Token::Minus => BinaryOp::Sub,
                _ => break,
            };
            self.advance()?;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.current {
                Token::Star => BinaryOp::Mul,
                Token::Slash => BinaryOp::Div,
                _ => break,
            };
            self.advance()?;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // unary minus sits below `^`: -x^2 parses as -(x^2)
    fn factor(&mut self) -> Result<Expr> {
        if self.current == Token::Minus {
            self.advance()?;
            let inner = self.factor()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.current == Token::Caret {
            self.advance()?;
            // right-associative; exponent may carry its own unary minus
            let expo = self.factor()?;
            return Ok(Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(expo)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.current.clone() {
            Token::Number(v) => {
                self.advance()?;
                Ok(Expr::Const(v))
            }
            Token::Ident(name) => {
                let name_offset = self.offset;
                self.advance()?;
                if self.current == Token::LParen {
                    let func = match name.as_str() {
                        "sin" => UnaryOp::Sin,
                        "cos" => UnaryOp::Cos,
                        "exp" => UnaryOp::Exp,
                        "log" => UnaryOp::Log,
                        "sqrt" => UnaryOp::Sqrt,
                        other => {
                            return Err(Error::Syntax {
                                offset: name_offset,
                                message: format!("unknown function `{other}`"),
                            })
                        }
                    };
                    self.advance()?;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Unary(func, Box::new(arg)));
                }
                Ok(Expr::Var(name))
            }
            Token::LParen => {
                self.advance()?;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Token::Eof => Err(Error::Syntax {
                offset: self.offset,
                message: "unexpected end of input, expected an operand".into(),
            }),
            other => Err(Error::Syntax {
                offset: self.offset,
                message: format!("unexpected token {other:?}"),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if self.current == Token::RParen {
            self.advance()
        } else {
            Err(Error::Syntax {
                offset: self.offset,
                message: "expected `)`".into(),
            })
        }
    }
}

impl Expr {
    /// Parse expression text. Errors carry byte offsets into `text`.
    pub fn parse(text: &str) -> Result<Expr> {
        if text.trim().is_empty() {
            return Err(Error::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let mut p = Parser::new(text)?;
        let e = p.expr()?;
        if p.current != Token::Eof {
            return Err(Error::Syntax {
                offset: p.offset,
                message: format!("trailing input {:?}", p.current),
            });
        }
        Ok(e)
    }

    /// Evaluate with a name→value table. Every free variable must be bound;
    /// domain faults surface as errors carrying the offending subexpression.
    pub fn eval(&self, bindings: &HashMap<String, f64>) -> Result<f64> {
        self.eval_with(&|name| bindings.get(name).copied())
    }

    /// Evaluate an expression of a single variable without building a table.
    pub fn eval_single(&self, var: &str, value: f64) -> Result<f64> {
        self.eval_with(&|name| (name == var).then_some(value))
    }

    fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        match self {
            Expr::Const(v) => Ok(*v),
            Expr::Var(name) => lookup(name).ok_or_else(|| Error::Unbound(name.clone())),
            Expr::Unary(op, inner) => {
                let v = inner.eval_with(lookup)?;
                let fault = |detail: String| Error::EvalDomain {
                    expr: self.to_string(),
                    detail,
                };
                match op {
                    UnaryOp::Neg => Ok(-v),
                    UnaryOp::Sin => Ok(v.sin()),
                    UnaryOp::Cos => Ok(v.cos()),
                    UnaryOp::Exp => Ok(v.exp()),
                    UnaryOp::Log => {
                        if v <= 0.0 {
                            Err(fault(format!("log of non-positive value {v}")))
                        } else {
                            Ok(v.ln())
                        }
                    }
                    UnaryOp::Sqrt => {
                        if v < 0.0 {
                            Err(fault(format!("sqrt of negative value {v}")))
                        } else {
                            Ok(v.sqrt())
                        }
                    }
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval_with(lookup)?;
                let b = rhs.eval_with(lookup)?;
                let fault = |detail: String| Error::EvalDomain {
                    expr: self.to_string(),
                    detail,
                };
                match op {
                    BinaryOp::Add => Ok(a + b),
                    BinaryOp::Sub => Ok(a - b),
                    BinaryOp::Mul => Ok(a * b),
                    BinaryOp::Div => {
                        if b == 0.0 {
                            Err(fault("division by zero".into()))
                        } else {
                            Ok(a / b)
                        }
                    }
                    BinaryOp::Pow => {
                        let is_int = b.fract() == 0.0 && b.abs() <= i32::MAX as f64;
                        if a < 0.0 && !is_int {
                            return Err(fault(format!(
                                "negative base {a} with non-integer exponent {b}"
                            )));
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(fault("zero base with negative exponent".into()));
                        }
                        Ok(if is_int { a.powi(b as i32) } else { a.powf(b) })
                    }
                }
            }
        }
    }

    /// Exact symbolic derivative with constant folding and 0/1 elimination.
    pub fn diff(&self, var: &str) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(name) => Expr::Const(if name == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, inner) => {
                let du = inner.diff(var);
                let u = (**inner).clone();
                match op {
                    UnaryOp::Neg => neg(du),
                    UnaryOp::Sin => mul(Expr::Unary(UnaryOp::Cos, Box::new(u)), du),
                    UnaryOp::Cos => neg(mul(Expr::Unary(UnaryOp::Sin, Box::new(u)), du)),
                    UnaryOp::Exp => mul(Expr::Unary(UnaryOp::Exp, Box::new(u)), du),
                    UnaryOp::Log => div(du, u),
                    UnaryOp::Sqrt => div(
                        du,
                        mul(Expr::Const(2.0), Expr::Unary(UnaryOp::Sqrt, Box::new(u))),
                    ),
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let (a, b) = ((**lhs).clone(), (**rhs).clone());
                let (da, db) = (lhs.diff(var), rhs.diff(var));
                match op {
                    BinaryOp::Add => add(da, db),
                    BinaryOp::Sub => sub(da, db),
                    BinaryOp::Mul => add(mul(da, b), mul(a, db)),
                    BinaryOp::Div => div(sub(mul(da, b.clone()), mul(a, db)), pow(b, Expr::Const(2.0))),
                    BinaryOp::Pow => {
                        if let Expr::Const(n) = b {
                            // d(a^n) = n a^(n-1) da
                            mul(
                                mul(Expr::Const(n), pow(a, Expr::Const(n - 1.0))),
                                da,
                            )
                        } else {
                            // d(a^b) = a^b (db log a + b da / a)
                            mul(
                                pow(a.clone(), b.clone()),
                                add(
                                    mul(db, Expr::Unary(UnaryOp::Log, Box::new(a.clone()))),
                                    div(mul(b, da), a),
                                ),
                            )
                        }
                    }
                }
            }
        }
    }

    /// Free variables, sorted.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut set = BTreeSet::new();
        self.collect_vars(&mut set);
        set
    }

    fn collect_vars(&self, set: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(name) => {
                set.insert(name.clone());
            }
            Expr::Unary(_, inner) => inner.collect_vars(set),
            Expr::Binary(_, lhs, rhs) => {
                lhs.collect_vars(set);
                rhs.collect_vars(set);
            }
        }
    }
}

// Smart constructors used by diff: fold constants when the result stays
// finite, drop additive zeros and multiplicative ones.

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if (x + y).is_finite() => Expr::Const(x + y),
        (Expr::Const(z), _) if *z == 0.0 => b,
        (_, Expr::Const(z)) if *z == 0.0 => a,
        _ => Expr::Binary(BinaryOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if (x - y).is_finite() => Expr::Const(x - y),
        (_, Expr::Const(z)) if *z == 0.0 => a,
        (Expr::Const(z), _) if *z == 0.0 => neg(b),
        _ => Expr::Binary(BinaryOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if (x * y).is_finite() => Expr::Const(x * y),
        (Expr::Const(z), _) | (_, Expr::Const(z)) if *z == 0.0 => Expr::Const(0.0),
        (Expr::Const(o), _) if *o == 1.0 => b,
        (_, Expr::Const(o)) if *o == 1.0 => a,
        _ => Expr::Binary(BinaryOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(z), _) if *z == 0.0 => Expr::Const(0.0),
        (_, Expr::Const(o)) if *o == 1.0 => a,
        (Expr::Const(x), Expr::Const(y)) if *y != 0.0 && (x / y).is_finite() => Expr::Const(x / y),
        _ => Expr::Binary(BinaryOp::Div, Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Const(z)) if *z == 0.0 => Expr::Const(1.0),
        (_, Expr::Const(o)) if *o == 1.0 => a,
        _ => Expr::Binary(BinaryOp::Pow, Box::new(a), Box::new(b)),
    }
}

fn neg(e: Expr) -> Expr {
    match e {
        Expr::Const(v) => Expr::Const(-v),
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        other => Expr::Unary(UnaryOp::Neg, Box::new(other)),
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesised rendering; `parse(to_string())` reproduces the
    /// tree node-for-node.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // negative literals go in parens: `a^-2` would otherwise reparse
            // with the minus outside the power
            Expr::Const(v) if *v < 0.0 => write!(f, "({v:?})"),
            Expr::Const(v) => write!(f, "{v:?}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Unary(UnaryOp::Neg, inner) => write!(f, "(-{inner})"),
            Expr::Unary(op, inner) => {
                let name = match op {
                    UnaryOp::Sin => "sin",
                    UnaryOp::Cos => "cos",
                    UnaryOp::Exp => "exp",
                    UnaryOp::Log => "log",
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}({inner})")
            }
            Expr::Binary(op, lhs, rhs) => {
                let sym = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                    BinaryOp::Pow => "^",
                };
                write!(f, "({lhs}{sym}{rhs})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ev(text: &str, var: &str, x: f64) -> f64 {
        Expr::parse(text).unwrap().eval_single(var, x).unwrap()
    }

    #[test]
    fn parses_harmonic_potential() {
        let e = Expr::parse("0.5*k*x^2").unwrap();
        let mut b = HashMap::new();
        b.insert("k".to_string(), 2.0);
        b.insert("x".to_string(), 3.0);
        assert_relative_eq!(e.eval(&b).unwrap(), 9.0, epsilon = 1e-15);
        assert_eq!(
            e.free_vars().into_iter().collect::<Vec<_>>(),
            vec!["k".to_string(), "x".to_string()]
        );
    }

    #[test]
    fn basic_eval_examples() {
        assert_relative_eq!(ev("sin(x)+2", "x", 0.0), 2.0, epsilon = 1e-15);
        assert_relative_eq!(ev("x^2", "x", 3.0), 9.0, epsilon = 1e-15);
        assert_relative_eq!(ev("exp(0)", "x", 0.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_relative_eq!(ev("2+3*4", "x", 0.0), 14.0, epsilon = 1e-15);
        // ^ right-associative: 2^3^2 = 2^9
        assert_relative_eq!(ev("2^3^2", "x", 0.0), 512.0, epsilon = 1e-15);
        // unary minus below ^: -3^2 = -(3^2)
        assert_relative_eq!(ev("-3^2", "x", 0.0), -9.0, epsilon = 1e-15);
        assert_relative_eq!(ev("2^-1", "x", 0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(ev("(2+3)*4", "x", 0.0), 20.0, epsilon = 1e-15);
        assert_relative_eq!(ev("2 - 3 - 4", "x", 0.0), -5.0, epsilon = 1e-15);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match Expr::parse("x^") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match Expr::parse("1 + foo(2)") {
            Err(Error::Syntax { offset, message }) => {
                assert_eq!(offset, 4);
                assert!(message.contains("foo"));
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
        match Expr::parse("2 $ 3") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(Expr::parse("").is_err());
    }

    #[test]
    fn eval_faults_are_explicit() {
        let e = Expr::parse("log(x)").unwrap();
        assert!(matches!(e.eval_single("x", -1.0), Err(Error::EvalDomain { .. })));
        let e = Expr::parse("sqrt(x)").unwrap();
        assert!(matches!(e.eval_single("x", -4.0), Err(Error::EvalDomain { .. })));
        let e = Expr::parse("1/x").unwrap();
        assert!(matches!(e.eval_single("x", 0.0), Err(Error::EvalDomain { .. })));
        let e = Expr::parse("x^0.5").unwrap();
        assert!(matches!(e.eval_single("x", -2.0), Err(Error::EvalDomain { .. })));
        let e = Expr::parse("y + 1").unwrap();
        assert!(matches!(e.eval_single("x", 0.0), Err(Error::Unbound(name)) if name == "y"));
    }

    #[test]
    fn diff_textbook_cases() {
        let d = Expr::parse("x^2").unwrap().diff("x");
        assert_relative_eq!(d.eval_single("x", 5.0).unwrap(), 10.0, epsilon = 1e-15);
        let d = Expr::parse("sin(x)").unwrap().diff("x");
        assert_relative_eq!(d.eval_single("x", 1.1).unwrap(), 1.1f64.cos(), epsilon = 1e-15);
        // derivative in a different variable vanishes after folding
        let d = Expr::parse("0.5*k*x^2").unwrap().diff("t");
        assert_eq!(d, Expr::Const(0.0));
    }

    #[test]
    fn diff_matches_central_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let corpus = [
            "x^3 - 2*x + 1",
            "sin(x)*cos(x)",
            "exp(-x^2)",
            "log(x+3)/x",
            "sqrt(x+2)*x",
            "x^x",
            "(x+1)^2.5",
            "1/(1+x^2)",
        ];
        let h = 1e-5;
        for text in corpus {
            let e = Expr::parse(text).unwrap();
            let d = e.diff("x");
            for _ in 0..25 {
                let x = rng.gen_range(0.2..2.0);
                let sym = d.eval_single("x", x).unwrap();
                let num = (e.eval_single("x", x + h).unwrap() - e.eval_single("x", x - h).unwrap())
                    / (2.0 * h);
                assert_relative_eq!(sym, num, max_relative = 1e-6, epsilon = 1e-8);
            }
        }
    }

    // Random tree generator for the round-trip property.
    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-4.0f64..4.0).prop_map(Expr::Const),
            prop_oneof![Just("x"), Just("t"), Just("k")].prop_map(|s| Expr::Var(s.to_string())),
        ];
        leaf.prop_recursive(5, 64, 4, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(
                    BinaryOp::Add,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(
                    BinaryOp::Sub,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(
                    BinaryOp::Mul,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(
                    BinaryOp::Div,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), (1.0f64..3.0)).prop_map(|(a, n)| Expr::Binary(
                    BinaryOp::Pow,
                    Box::new(a),
                    Box::new(Expr::Const(n))
                )),
                inner.clone().prop_map(|a| Expr::Unary(UnaryOp::Neg, Box::new(a))),
                inner.clone().prop_map(|a| Expr::Unary(UnaryOp::Sin, Box::new(a))),
                inner.clone().prop_map(|a| Expr::Unary(UnaryOp::Cos, Box::new(a))),
                inner.prop_map(|a| Expr::Unary(UnaryOp::Exp, Box::new(a))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn print_parse_round_trip_preserves_eval(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = Expr::parse(&printed).unwrap();
            let mut b = HashMap::new();
            b.insert("x".to_string(), 0.7);
            b.insert("t".to_string(), 1.3);
            b.insert("k".to_string(), 2.0);
            match (e.eval(&b), reparsed.eval(&b)) {
                (Ok(v1), Ok(v2)) => prop_assert!(
                    v1 == v2 || (v1.is_nan() && v2.is_nan()),
                    "{printed}: {v1} != {v2}"
                ),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{printed}: eval mismatch {a:?} vs {b:?}"),
            }
        }
    }
}
