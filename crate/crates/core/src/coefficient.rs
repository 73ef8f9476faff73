//! Diffusion coefficients: the named test presets and user expressions.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// The named coefficients of the benchmark tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `1`
    A1,
    /// `e^x`, or `e^(x+y)` in 2D
    A2,
    /// `e^x + 1`, or `e^(x+y) + 2` in 2D
    A3,
    /// `e^x + 10^k`, or `e^(x+y) + 10^k` in 2D
    A2k(i32),
    /// `e^(x + |y - 1/2|^(3/2))`, 2D only
    A4,
    /// `e^(x + |y - 1/2|)`, 2D only
    A5,
    /// `1` on `x, y < 1/2`, `delta` elsewhere (a6, a7, a8 for 10, 100, 1000), 2D only
    Step(f64),
}

impl Preset {
    pub const HELP: &'static str = "a1 (1), a2 (e^x | e^(x+y)), a3 (e^x+1 | e^(x+y)+2), \
        a2k(k) (e^x+10^k), a4 (e^(x+|y-1/2|^1.5)), a5 (e^(x+|y-1/2|)), \
        a6/a7/a8 (1 if x,y<1/2 else 10/100/1000)";

    pub fn parse(name: &str) -> Result<Self> {
        let s = name.trim().to_ascii_lowercase();
        let preset = match s.as_str() {
            "a1" => Preset::A1,
            "a2" => Preset::A2,
            "a3" => Preset::A3,
            "a4" => Preset::A4,
            "a5" => Preset::A5,
            "a6" => Preset::Step(10.0),
            "a7" => Preset::Step(100.0),
            "a8" => Preset::Step(1000.0),
            _ => {
                let k = s
                    .strip_prefix("a2k(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|k| k.trim().parse::<i32>().ok())
                    .ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
                Preset::A2k(k)
            }
        };
        Ok(preset)
    }

    pub fn name(&self) -> String {
        match *self {
            Preset::A1 => "a1".into(),
            Preset::A2 => "a2".into(),
            Preset::A3 => "a3".into(),
            Preset::A2k(k) => format!("a2k({k})"),
            Preset::A4 => "a4".into(),
            Preset::A5 => "a5".into(),
            Preset::Step(10.0) => "a6".into(),
            Preset::Step(100.0) => "a7".into(),
            Preset::Step(1000.0) => "a8".into(),
            Preset::Step(d) => format!("step({d})"),
        }
    }

    fn supports(&self, dim: usize) -> bool {
        match self {
            Preset::A1 | Preset::A2 | Preset::A3 | Preset::A2k(_) => true,
            Preset::A4 | Preset::A5 | Preset::Step(_) => dim == 2,
        }
    }

    fn lower_bound(&self, dim: usize) -> f64 {
        match *self {
            Preset::A1 | Preset::A2 | Preset::A4 | Preset::A5 | Preset::Step(_) => 1.0,
            Preset::A3 => {
                if dim == 1 {
                    2.0
                } else {
                    3.0
                }
            }
            Preset::A2k(k) => 1.0 + 10f64.powi(k),
        }
    }

    fn eval(&self, p: &[f64]) -> f64 {
        let s: f64 = p.iter().sum();
        match *self {
            Preset::A1 => 1.0,
            Preset::A2 => s.exp(),
            Preset::A3 => s.exp() + if p.len() == 1 { 1.0 } else { 2.0 },
            Preset::A2k(k) => s.exp() + 10f64.powi(k),
            Preset::A4 => (p[0] + (p[1] - 0.5).abs().powf(1.5)).exp(),
            Preset::A5 => (p[0] + (p[1] - 0.5).abs()).exp(),
            Preset::Step(delta) => {
                if p[0] < 0.5 && p[1] < 0.5 {
                    1.0
                } else {
                    delta
                }
            }
        }
    }
}

type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Preset(Preset),
    Function(PointFn),
}

/// A point-evaluable diffusion coefficient on `(0,1)^d` with a declared
/// lower bound `a_0 > 0`.
#[derive(Clone)]
pub struct DiffusionCoefficient {
    kind: Kind,
    name: String,
    dim: usize,
    lower_bound: f64,
}

impl fmt::Debug for DiffusionCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionCoefficient")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lower_bound", &self.lower_bound)
            .finish()
    }
}

impl DiffusionCoefficient {
    pub fn preset(preset: Preset, dim: usize) -> Result<Self> {
        if !preset.supports(dim) {
            return Err(Error::PresetDimension {
                name: preset.name(),
                dim,
            });
        }
        Ok(Self {
            kind: Kind::Preset(preset),
            name: preset.name(),
            dim,
            lower_bound: preset.lower_bound(dim),
        })
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        Self::function(format!("{value}"), dim, value, move |_| value)
    }

    pub fn function(
        name: impl Into<String>,
        dim: usize,
        lower_bound: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: Kind::Function(Arc::new(f)),
            name: name.into(),
            dim,
            lower_bound,
        }
    }

    /// Parses a preset name, or otherwise an arithmetic expression in `x`
    /// (and `y` in 2D), e.g. `exp(x+y) + 2`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        match Preset::parse(spec) {
            Ok(p) => Self::preset(p, dim),
            Err(Error::UnknownPreset(_)) if !looks_like_preset(spec) => {
                let expr = expr::Expr::parse(spec)?;
                if dim == 1 && expr.uses_y() {
                    return Err(Error::Expression("`y` used in a 1D coefficient".into()));
                }
                Ok(Self::function(spec.trim(), dim, f64::MIN_POSITIVE, move |p| {
                    expr.eval(p[0], p.get(1).copied().unwrap_or(0.0))
                }))
            }
            Err(e) => Err(e),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        match &self.kind {
            Kind::Preset(p) => p.eval(point),
            Kind::Function(f) => f(point),
        }
    }

    /// Evaluates and checks `a(point) >= a_0 > 0`.
    pub fn sample(&self, point: &[f64]) -> Result<f64> {
        let value = self.eval(point);
        // tolerance for presets whose bound is attained only in the limit
        if !(value > 0.0 && value >= self.lower_bound * (1.0 - 1e-12)) {
            return Err(Error::CoefficientNotPositive {
                value,
                point: point.to_vec(),
                lower_bound: self.lower_bound,
            });
        }
        Ok(value)
    }
}

fn looks_like_preset(s: &str) -> bool {
    let s = s.trim().to_ascii_lowercase();
    s.starts_with('a') && s[1..].chars().next().is_some_and(|c| c.is_ascii_digit())
}

mod expr {
    //! Recursive-descent evaluator for small coefficient expressions.
    use crate::error::{Error, Result};

    #[derive(Debug, Clone)]
    pub enum Expr {
        Num(f64),
        X,
        Y,
        Neg(Box<Expr>),
        Bin(char, Box<Expr>, Box<Expr>),
        Call(fn(f64) -> f64, Box<Expr>),
    }

    struct Parser<'a> {
        src: &'a [u8],
        pos: usize,
    }

    impl Expr {
        pub fn parse(s: &str) -> Result<Self> {
            let mut p = Parser {
                src: s.as_bytes(),
                pos: 0,
            };
            let e = p.sum()?;
            p.skip_ws();
            if p.pos != p.src.len() {
                return Err(p.error("unexpected trailing input"));
            }
            Ok(e)
        }

        pub fn uses_y(&self) -> bool {
            match self {
                Expr::Y => true,
                Expr::Num(_) | Expr::X => false,
                Expr::Neg(a) | Expr::Call(_, a) => a.uses_y(),
                Expr::Bin(_, a, b) => a.uses_y() || b.uses_y(),
            }
        }

        pub fn eval(&self, x: f64, y: f64) -> f64 {
            match self {
                Expr::Num(v) => *v,
                Expr::X => x,
                Expr::Y => y,
                Expr::Neg(a) => -a.eval(x, y),
                Expr::Call(f, a) => f(a.eval(x, y)),
                Expr::Bin(op, a, b) => {
                    let (a, b) = (a.eval(x, y), b.eval(x, y));
                    match op {
                        '+' => a + b,
                        '-' => a - b,
                        '*' => a * b,
                        '/' => a / b,
                        _ => a.powf(b),
                    }
                }
            }
        }
    }

    impl Parser<'_> {
        fn error(&self, msg: &str) -> Error {
            Error::Expression(format!("{msg} at byte {}", self.pos))
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

        fn sum(&mut self) -> Result<Expr> {
            let mut lhs = self.product()?;
            while let Some(c @ (b'+' | b'-')) = self.peek() {
                self.pos += 1;
                let rhs = self.product()?;
                lhs = Expr::Bin(c as char, Box::new(lhs), Box::new(rhs));
            }
            Ok(lhs)
        }

        fn product(&mut self) -> Result<Expr> {
            let mut lhs = self.unary()?;
            while let Some(c @ (b'*' | b'/')) = self.peek() {
                self.pos += 1;
                let rhs = self.unary()?;
                lhs = Expr::Bin(c as char, Box::new(lhs), Box::new(rhs));
            }
            Ok(lhs)
        }

        fn unary(&mut self) -> Result<Expr> {
            match self.peek() {
                Some(b'-') => {
                    self.pos += 1;
                    Ok(Expr::Neg(Box::new(self.unary()?)))
                }
                Some(b'+') => {
                    self.pos += 1;
                    self.unary()
                }
                _ => self.power(),
            }
        }

        fn power(&mut self) -> Result<Expr> {
            let base = self.atom()?;
            if self.peek() == Some(b'^') {
                self.pos += 1;
                // right associative, binds tighter than unary minus on the left
                let exp = self.unary()?;
                return Ok(Expr::Bin('^', Box::new(base), Box::new(exp)));
            }
            Ok(base)
        }

        fn atom(&mut self) -> Result<Expr> {
            match self.peek() {
                Some(b'(') => {
                    self.pos += 1;
                    let e = self.sum()?;
                    if self.peek() != Some(b')') {
                        return Err(self.error("expected `)`"));
                    }
                    self.pos += 1;
                    Ok(e)
                }
                Some(c) if c.is_ascii_digit() || c == b'.' => {
                    let start = self.pos;
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_digit()
                            || self.src[self.pos] == b'.'
                            || ((self.src[self.pos] == b'e' || self.src[self.pos] == b'E')
                                && self.src.get(self.pos + 1).is_some_and(|d| d.is_ascii_digit() || *d == b'-')))
                    {
                        if matches!(self.src[self.pos], b'e' | b'E') {
                            self.pos += 1;
                        }
                        self.pos += 1;
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                    text.parse()
                        .map(Expr::Num)
                        .map_err(|_| self.error("bad number"))
                }
                Some(c) if c.is_ascii_alphabetic() => {
                    let start = self.pos;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                        self.pos += 1;
                    }
                    let ident = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                    let func: fn(f64) -> f64 = match ident {
                        "x" | "x1" => return Ok(Expr::X),
                        "y" | "x2" => return Ok(Expr::Y),
                        "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
                        "e" => return Ok(Expr::Num(std::f64::consts::E)),
                        "exp" => f64::exp,
                        "abs" => f64::abs,
                        "sqrt" => f64::sqrt,
                        "ln" | "log" => f64::ln,
                        "sin" => f64::sin,
                        "cos" => f64::cos,
                        "tanh" => f64::tanh,
                        _ => return Err(self.error(&format!("unknown identifier `{ident}`"))),
                    };
                    if self.peek() != Some(b'(') {
                        return Err(self.error("expected `(` after function name"));
                    }
                    let arg = self.atom()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                }
                _ => Err(self.error("expected a number, variable or `(`")),
            }
        }
    }
}
