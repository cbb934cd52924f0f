//! Test functions `R -> R`: exact solutions plus controlled perturbations.
//!
//! Expressions are built from `mono(c,k)` (`c x^k`), `sine(a,b)`
//! (`a sin(b x)`), `envnoise(a,p[,seed])` (`a |x|^p u(x)` with `u` a seeded odd
//! oscillation in `[-1, 1]`), sums and scalar multiples:
//!
//! ```
//! use modstab_core::FunctionHandle;
//!
//! let phi: FunctionHandle = "mono(1,3) + 0.1*sine(1,1)".parse().unwrap();
//! assert_eq!(phi.eval(0.0), 0.0);
//! ```

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ParseError;

const MAX_SOURCE_LEN: usize = 8192;
const MAX_DEPTH: usize = 64;
const MAX_DEGREE: u32 = 64;
const NOISE_COMPONENTS: usize = 3;

/// A real function of one real variable.
pub trait RealFn {
    fn eval(&self, x: f64) -> f64;
}

impl<F: Fn(f64) -> f64> RealFn for F {
    fn eval(&self, x: f64) -> f64 {
        self(x)
    }
}

/// Deterministic odd oscillation `u(x) = sum_m w_m sin(omega_m x)`, `sum_m w_m = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvNoise {
    pub amplitude: f64,
    pub exponent: f64,
    pub seed: u64,
    components: [(f64, f64); NOISE_COMPONENTS],
}

impl EnvNoise {
    pub fn new(amplitude: f64, exponent: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut components = [(0.0, 0.0); NOISE_COMPONENTS];
        for c in &mut components {
            *c = (rng.gen_range(0.2..1.0), rng.gen_range(0.5..4.0));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        for c in &mut components {
            c.0 /= total;
        }
        EnvNoise {
            amplitude,
            exponent,
            seed,
            components,
        }
    }

    /// The oscillation `u(x)`, bounded by 1 in magnitude.
    pub fn oscillation(&self, x: f64) -> f64 {
        self.components.iter().map(|(w, omega)| w * (omega * x).sin()).sum()
    }

    fn eval(&self, x: f64) -> f64 {
        self.amplitude * x.abs().powf(self.exponent) * self.oscillation(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// `c x^k`
    Mono { c: f64, k: u32 },
    /// `a sin(b x)`
    Sine { a: f64, b: f64 },
    EnvNoise(EnvNoise),
    Sum(Box<Expr>, Box<Expr>),
    Scale(f64, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Mono { c, k } => c * x.powi(*k as i32),
            Expr::Sine { a, b } => a * (b * x).sin(),
            Expr::EnvNoise(noise) => noise.eval(x),
            Expr::Sum(l, r) => l.eval(x) + r.eval(x),
            Expr::Scale(c, e) => c * e.eval(x),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Mono { c, k } => write!(f, "mono({c},{k})"),
            Expr::Sine { a, b } => write!(f, "sine({a},{b})"),
            Expr::EnvNoise(n) => write!(f, "envnoise({},{},{})", n.amplitude, n.exponent, n.seed),
            Expr::Sum(l, r) => write!(f, "({l} + {r})"),
            Expr::Scale(c, e) => write!(f, "{c}*({e})"),
        }
    }
}

/// An evaluable map from the reals to the value space.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionHandle {
    expr: Expr,
    seed: u64,
    description: String,
}

impl FunctionHandle {
    pub fn new(expr: Expr) -> Self {
        let description = expr.to_string();
        FunctionHandle {
            expr,
            seed: 0,
            description,
        }
    }

    /// Parses an expression; `envnoise(a,p)` without an explicit seed uses `seed`.
    pub fn parse(source: &str, seed: u64) -> Result<Self, ParseError> {
        let expr = Parser::new(source, seed)?.parse()?;
        Ok(FunctionHandle {
            description: expr.to_string(),
            expr,
            seed,
        })
    }

    pub fn mono(c: f64, k: u32) -> Self {
        Self::new(Expr::Mono { c, k })
    }

    pub fn sine(a: f64, b: f64) -> Self {
        Self::new(Expr::Sine { a, b })
    }

    pub fn envnoise(a: f64, p: f64, seed: u64) -> Self {
        let mut h = Self::new(Expr::EnvNoise(EnvNoise::new(a, p, seed)));
        h.seed = seed;
        h
    }

    pub fn plus(self, other: FunctionHandle) -> Self {
        let seed = self.seed;
        let mut h = Self::new(Expr::Sum(Box::new(self.expr), Box::new(other.expr)));
        h.seed = seed;
        h
    }

    pub fn scaled(self, c: f64) -> Self {
        let seed = self.seed;
        let mut h = Self::new(Expr::Scale(c, Box::new(self.expr)));
        h.seed = seed;
        h
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.expr.eval(x)
    }
}

impl RealFn for FunctionHandle {
    fn eval(&self, x: f64) -> f64 {
        self.expr.eval(x)
    }
}

impl fmt::Display for FunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.description)
    }
}

impl FromStr for FunctionHandle {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        FunctionHandle::parse(s, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Num(&'a str),
    Ident(&'a str),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok<'_>, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        let tok = match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'0'..=b'9' | b'.' => {
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
                out.push((Tok::Num(&src[start..i]), start));
                continue;
            }
            b if b.is_ascii_alphabetic() || b == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(&src[start..i]), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::new(start, format!("unexpected character {ch:?}")));
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

enum Node {
    Number(f64),
    Func(Expr),
}

impl Node {
    fn into_expr(self) -> Expr {
        match self {
            Node::Number(c) => Expr::Mono { c, k: 0 },
            Node::Func(e) => e,
        }
    }
}

struct Parser<'a> {
    toks: Vec<(Tok<'a>, usize)>,
    pos: usize,
    depth: usize,
    default_seed: u64,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, default_seed: u64) -> Result<Self, ParseError> {
        if src.len() > MAX_SOURCE_LEN {
            return Err(ParseError::new(MAX_SOURCE_LEN, "expression too long"));
        }
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            depth: 0,
            default_seed,
        })
    }

    fn parse(mut self) -> Result<Expr, ParseError> {
        if self.peek() == Tok::End {
            return Err(ParseError::new(0, "empty expression"));
        }
        let node = self.expr()?;
        match self.peek() {
            Tok::End => Ok(node.into_expr()),
            _ => Err(self.error("trailing input")),
        }
    }

    fn peek(&self) -> Tok<'a> {
        self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok<'a> {
        let t = self.peek();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.offset(), msg)
    }

    fn expect(&mut self, want: Tok<'static>, what: &str) -> Result<(), ParseError> {
        if self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn descend(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(self.error("expression nested too deeply"))
        } else {
            Ok(())
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        self.descend()?;
        let mut acc = self.term()?;
        loop {
            let negate = match self.peek() {
                Tok::Plus => false,
                Tok::Minus => true,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            let rhs = if negate { negate_node(rhs) } else { rhs };
            acc = match (acc, rhs) {
                (Node::Number(a), Node::Number(b)) => Node::Number(finite(a + b, self.offset())?),
                (a, b) => Node::Func(Expr::Sum(Box::new(a.into_expr()), Box::new(b.into_expr()))),
            };
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut acc = self.unary()?;
        while self.peek() == Tok::Star {
            let at = self.offset();
            self.bump();
            let rhs = self.unary()?;
            acc = match (acc, rhs) {
                (Node::Number(a), Node::Number(b)) => Node::Number(finite(a * b, at)?),
                (Node::Number(c), Node::Func(e)) | (Node::Func(e), Node::Number(c)) => {
                    Node::Func(Expr::Scale(c, Box::new(e)))
                }
                (Node::Func(_), Node::Func(_)) => {
                    return Err(ParseError::new(at, "only scalar multiples of functions are supported"))
                }
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek() == Tok::Minus {
            self.bump();
            self.descend()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(negate_node(inner));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(text) => Ok(Node::Number(parse_number(text, at)?)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => self.call(name, at).map(Node::Func),
            Tok::End => Err(ParseError::new(at, "unexpected end of expression")),
            _ => Err(ParseError::new(at, "expected a number, function or '('")),
        }
    }

    fn call(&mut self, name: &str, at: usize) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen, "'(' after function name")?;
        let mut args: Vec<(&'a str, bool, usize)> = Vec::new();
        if self.peek() != Tok::RParen {
            loop {
                let arg_at = self.offset();
                let negative = if self.peek() == Tok::Minus {
                    self.bump();
                    true
                } else {
                    false
                };
                match self.bump() {
                    Tok::Num(text) => args.push((text, negative, arg_at)),
                    _ => return Err(ParseError::new(arg_at, "function arguments must be numeric literals")),
                }
                match self.bump() {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    _ => return Err(ParseError::new(self.toks[self.pos - 1].1, "expected ',' or ')'")),
                }
            }
        } else {
            self.bump();
        }

        let real = |i: usize| -> Result<f64, ParseError> {
            let (text, neg, off) = args[i];
            let v = parse_number(text, off)?;
            Ok(if neg { -v } else { v })
        };
        let arity = |want: &[usize]| -> Result<(), ParseError> {
            if want.contains(&args.len()) {
                Ok(())
            } else {
                Err(ParseError::new(at, format!("{name} takes {want:?} arguments, got {}", args.len())))
            }
        };

        match name {
            "mono" => {
                arity(&[2])?;
                let c = real(0)?;
                let (text, neg, off) = args[1];
                let k: u32 = text
                    .parse()
                    .ok()
                    .filter(|k| !neg && *k <= MAX_DEGREE)
                    .ok_or_else(|| ParseError::new(off, format!("degree must be an integer in 0..={MAX_DEGREE}")))?;
                Ok(Expr::Mono { c, k })
            }
            "sine" => {
                arity(&[2])?;
                Ok(Expr::Sine { a: real(0)?, b: real(1)? })
            }
            "envnoise" => {
                arity(&[2, 3])?;
                let a = real(0)?;
                let p = real(1)?;
                if p < 0.0 {
                    return Err(ParseError::new(args[1].2, "envelope exponent must be nonnegative"));
                }
                let seed = match args.get(2) {
                    Some(&(text, neg, off)) => text
                        .parse::<u64>()
                        .ok()
                        .filter(|_| !neg)
                        .ok_or_else(|| ParseError::new(off, "seed must be an unsigned integer"))?,
                    None => self.default_seed,
                };
                Ok(Expr::EnvNoise(EnvNoise::new(a, p, seed)))
            }
            other => Err(ParseError::new(at, format!("unknown function {other:?}"))),
        }
    }
}

fn negate_node(node: Node) -> Node {
    match node {
        Node::Number(c) => Node::Number(-c),
        Node::Func(e) => Node::Func(Expr::Scale(-1.0, Box::new(e))),
    }
}

fn parse_number(text: &str, at: usize) -> Result<f64, ParseError> {
    let v: f64 = text
        .parse()
        .map_err(|_| ParseError::new(at, format!("invalid number {text:?}")))?;
    finite(v, at)
}

fn finite(v: f64, at: usize) -> Result<f64, ParseError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParseError::new(at, "numeric literal out of range"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_the_usual_perturbations() {
        let phi: FunctionHandle = "mono(1,3) + 0.1*sine(1,1)".parse().unwrap();
        let x = 1.3f64;
        assert_eq!(phi.eval(x), x.powi(3) + 0.1 * x.sin());

        let phi: FunctionHandle = "mono(1,3)+mono(0.004,6)".parse().unwrap();
        assert_eq!(phi.eval(2.0), 8.0 + 0.004 * 64.0);

        let phi: FunctionHandle = "mono(1,3) + 7".parse().unwrap();
        assert_eq!(phi.eval(2.0), 15.0);

        let phi: FunctionHandle = "-mono(2,3) - 0.5*(sine(1,2) + mono(1,1))*2".parse().unwrap();
        let x = 0.7f64;
        let expected = -2.0 * x.powi(3) - (1.0 * (2.0 * x).sin() + x);
        assert!((phi.eval(x) - expected).abs() < 1e-15);
    }

    #[test]
    fn negative_and_exponent_literals() {
        let phi: FunctionHandle = "mono(-1.5e-1,2)".parse().unwrap();
        assert_eq!(phi.eval(2.0), -0.6);
        let phi: FunctionHandle = "2e1".parse().unwrap();
        assert_eq!(phi.eval(123.0), 20.0);
    }

    #[test]
    fn envnoise_is_bounded_odd_and_seeded() {
        let a = FunctionHandle::parse("envnoise(1,0)", 7).unwrap();
        let b: FunctionHandle = "envnoise(1,0,7)".parse().unwrap();
        let c: FunctionHandle = "envnoise(1,0,8)".parse().unwrap();
        let mut differs = false;
        for i in -400..=400 {
            let x = f64::from(i) * 0.05;
            let va = a.eval(x);
            assert_eq!(va.to_bits(), b.eval(x).to_bits());
            assert!(va.abs() <= 1.0);
            assert_eq!(a.eval(-x), -va);
            differs |= va != c.eval(x);
        }
        assert!(differs);
        assert_eq!(a.eval(0.0), 0.0);
    }

    #[test]
    fn envelope_scales_with_power() {
        let n = FunctionHandle::envnoise(0.004, 6.0, 3);
        let Expr::EnvNoise(inner) = n.expr() else { unreachable!() };
        let x = 1.7f64;
        let expected = 0.004 * x.powf(6.0) * inner.oscillation(x);
        assert_eq!(n.eval(x), expected);
    }

    #[test]
    fn builder_matches_parser() {
        let built = FunctionHandle::mono(1.0, 3).plus(FunctionHandle::sine(1.0, 1.0).scaled(0.1));
        let parsed: FunctionHandle = "mono(1,3) + 0.1*sine(1,1)".parse().unwrap();
        for x in [-3.0, -0.5, 0.0, 2.5] {
            assert_eq!(built.eval(x).to_bits(), parsed.eval(x).to_bits());
        }
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "",
            "mono(1)",
            "mono(1,2,3)",
            "mono(1,-2)",
            "mono(1,2.5)",
            "mono(1,65)",
            "sine(1,1) * sine(1,1)",
            "cos(1,1)",
            "mono(1,3) +",
            "mono(1,3))",
            "(mono(1,3)",
            "envnoise(1,-1,3)",
            "envnoise(1,1,-3)",
            "envnoise(1,1,2.5)",
            "1e999",
            "mono(x,3)",
            "mono(1,3) $",
        ] {
            assert!(bad.parse::<FunctionHandle>().is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn depth_is_limited() {
        let deep = format!("{}mono(1,1){}", "(".repeat(200), ")".repeat(200));
        assert!(deep.parse::<FunctionHandle>().is_err());
        let negs = format!("{}1", "-".repeat(200));
        assert!(negs.parse::<FunctionHandle>().is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-5.0f64..5.0, 0u32..8).prop_map(|(c, k)| Expr::Mono { c, k }),
            (-2.0f64..2.0, -3.0f64..3.0).prop_map(|(a, b)| Expr::Sine { a, b }),
            (-1.0f64..1.0, 0.0f64..4.0, any::<u64>()).prop_map(|(a, p, s)| Expr::EnvNoise(EnvNoise::new(a, p, s))),
        ];
        leaf.prop_recursive(4, 16, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::Sum(Box::new(l), Box::new(r))),
                (-3.0f64..3.0, inner).prop_map(|(c, e)| Expr::Scale(c, Box::new(e))),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_reparses_to_same_values(expr in arb_expr(), x in -10.0f64..10.0) {
            let text = expr.to_string();
            let back: FunctionHandle = text.parse().unwrap();
            prop_assert_eq!(back.eval(x).to_bits(), expr.eval(x).to_bits());
        }

        #[test]
        fn parser_never_panics(src in "\\PC{0,64}") {
            let _ = src.parse::<FunctionHandle>();
        }

        #[test]
        fn parser_never_panics_on_grammar_soup(src in "[a-z0-9(),+*. e-]{0,80}") {
            let _ = src.parse::<FunctionHandle>();
        }
    }
}
