//! Symbol expressions: `z` (or `z1..zn`), real literals, `i`, `+ - * /`, integer
//! powers `^k`, and the unary functions `exp conj abs re im phase`.

use std::fmt;
use std::sync::Arc;

use fock_core::operator::SymbolShape;
use fock_core::{SymbolFunction, C64};

type LimitFn = Arc<dyn Fn(&[C64]) -> Option<C64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn prec(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Conj,
    Abs,
    Re,
    Im,
    Phase,
}

impl Func {
    const ALL: [Func; 6] = [
        Func::Exp,
        Func::Conj,
        Func::Abs,
        Func::Re,
        Func::Im,
        Func::Phase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Conj => "conj",
            Func::Abs => "abs",
            Func::Re => "re",
            Func::Im => "im",
            Func::Phase => "phase",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    fn apply(self, v: C64) -> C64 {
        match self {
            Func::Exp => v.exp(),
            Func::Conj => v.conj(),
            Func::Abs => C64::new(v.norm(), 0.0),
            Func::Re => C64::new(v.re, 0.0),
            Func::Im => C64::new(v.im, 0.0),
            Func::Phase => unit(v),
        }
    }
}

/// `v / |v|`, and 0 at 0.
pub fn unit(v: C64) -> C64 {
    let r = v.norm();
    if r == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        v / r
    }
}

/// Expression node; `pos` is the byte offset of the node in the source. Equality
/// ignores positions.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: usize,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    I,
    /// Zero-based coordinate index.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    UnknownIdentifier {
        offset: usize,
        name: String,
    },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax {
                offset,
                expected,
                found,
            } => {
                write!(
                    f,
                    "syntax error at byte {offset}: expected one of {}, found {found}",
                    expected.join(", ")
                )
            }
            ParseError::UnknownIdentifier { offset, name } => {
                write!(f, "unknown identifier `{name}` at byte {offset}")
            }
        }
    }
}

impl std::error::Error for ParseError {}

const EXPECT_OPERAND: [&str; 6] = ["number", "`i`", "variable", "function", "`(`", "`-`"];

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    n: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(c) => format!("`{c}`"),
            None => "end of input".into(),
        }
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            expected: expected.to_vec(),
            found: self.found(),
        }
    }

    fn expr(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some('+') => BinOp::Add,
                Some('-') => BinOp::Sub,
                Some('*') => BinOp::Mul,
                Some('/') => BinOp::Div,
                _ => break,
            };
            if op.prec() < min_prec {
                break;
            }
            let pos = self.pos;
            self.pos += 1;
            let rhs = self.expr(op.prec() + 1)?;
            lhs = Expr {
                kind: ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        if self.peek() == Some('-') {
            let pos = self.pos;
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(inner)),
                pos,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.peek() != Some('^') {
            return Ok(base);
        }
        let pos = self.pos;
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        let negative = self.peek() == Some('-');
        if negative {
            self.pos += 1;
        }
        let digits = self.src[self.pos..]
            .bytes()
            .take_while(u8::is_ascii_digit)
            .count();
        if digits == 0 {
            return Err(self.error(&["integer exponent"]));
        }
        let text = &self.src[start..self.pos + digits];
        let k: i32 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            expected: vec!["integer exponent"],
            found: format!("`{text}`"),
        })?;
        self.pos += digits;
        if matches!(self.peek(), Some('.') | Some('e') | Some('E')) {
            return Err(self.error(&["integer exponent"]));
        }
        Ok(Expr {
            kind: ExprKind::Pow(Box::new(base), k),
            pos,
        })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr(1)?;
                self.skip_ws();
                if self.peek() != Some(')') {
                    return Err(self.error(&["`)`", "operator"]));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.ident(),
            _ => Err(self.error(&EXPECT_OPERAND)),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = self.pos;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[pos..end];
        let value: f64 = text
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| ParseError::Syntax {
                offset: pos,
                expected: vec!["finite number"],
                found: format!("`{text}`"),
            })?;
        self.pos = end;
        Ok(Expr {
            kind: ExprKind::Num(value),
            pos,
        })
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos;
        let len = self.src[pos..]
            .bytes()
            .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_')
            .count();
        let name = &self.src[pos..pos + len];
        self.pos += len;
        if name == "i" {
            return Ok(Expr {
                kind: ExprKind::I,
                pos,
            });
        }
        if let Some(var) = self.variable(name) {
            return Ok(Expr {
                kind: ExprKind::Var(var),
                pos,
            });
        }
        if let Some(func) = Func::from_name(name) {
            self.skip_ws();
            if self.peek() != Some('(') {
                return Err(self.error(&["`(`"]));
            }
            self.pos += 1;
            let arg = self.expr(1)?;
            self.skip_ws();
            if self.peek() != Some(')') {
                return Err(self.error(&["`)`", "operator"]));
            }
            self.pos += 1;
            return Ok(Expr {
                kind: ExprKind::Call(func, Box::new(arg)),
                pos,
            });
        }
        Err(ParseError::UnknownIdentifier {
            offset: pos,
            name: name.to_string(),
        })
    }

    fn variable(&self, name: &str) -> Option<usize> {
        if name == "z" && self.n == 1 {
            return Some(0);
        }
        let j: usize = name.strip_prefix('z')?.parse().ok()?;
        if j >= 1 && j <= self.n && !name[1..].starts_with('0') {
            Some(j - 1)
        } else {
            None
        }
    }
}

/// Parses `src` for symbols on `C^n`. `z` is accepted for `n = 1`, `z1..zn` always.
pub fn parse(src: &str, n: usize) -> Result<Expr, ParseError> {
    let mut p = Parser { src, pos: 0, n };
    let e = p.expr(1)?;
    p.skip_ws();
    if p.pos != src.len() {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

impl Expr {
    fn prec(&self) -> u8 {
        match &self.kind {
            ExprKind::Bin(op, ..) => op.prec(),
            ExprKind::Neg(_) => 3,
            ExprKind::Pow(..) => 4,
            _ => 5,
        }
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        match &self.kind {
            ExprKind::Num(x) => C64::new(*x, 0.0),
            ExprKind::I => C64::new(0.0, 1.0),
            ExprKind::Var(j) => z[*j],
            ExprKind::Neg(e) => -e.eval(z),
            ExprKind::Bin(op, l, r) => {
                let (a, b) = (l.eval(z), r.eval(z));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            ExprKind::Pow(e, k) => e.eval(z).powi(*k),
            ExprKind::Call(f, e) => f.apply(e.eval(z)),
        }
    }

    pub fn has_variables(&self) -> bool {
        match &self.kind {
            ExprKind::Num(_) | ExprKind::I => false,
            ExprKind::Var(_) => true,
            ExprKind::Neg(e) | ExprKind::Pow(e, _) | ExprKind::Call(_, e) => e.has_variables(),
            ExprKind::Bin(_, l, r) => l.has_variables() || r.has_variables(),
        }
    }

    /// Radial limit of `r -> f(r x)` as `r -> infinity` for a unit vector `x`, when it
    /// can be read off the expression: constants, `phase`, Gaussian-type decay
    /// `exp(q)` with `q` a negative definite combination of `abs(zj)^2`, and
    /// arithmetic of these (a product of a decaying factor and a factor with a
    /// limit tends to 0). `None` when undetermined.
    pub fn radial_limit(&self, x: &[C64]) -> Option<C64> {
        if !self.has_variables() {
            return Some(self.eval(x));
        }
        match &self.kind {
            ExprKind::Var(j) => (x[*j] == C64::new(0.0, 0.0)).then(|| C64::new(0.0, 0.0)),
            ExprKind::Neg(e) => e.radial_limit(x).map(|v| -v),
            ExprKind::Bin(op, l, r) => {
                let (a, b) = (l.radial_limit(x), r.radial_limit(x));
                match op {
                    BinOp::Add => Some(a? + b?),
                    BinOp::Sub => Some(a? - b?),
                    BinOp::Mul => Some(a? * b?),
                    BinOp::Div => {
                        let d = b?;
                        (d != C64::new(0.0, 0.0)).then(|| a.map(|a| a / d))?
                    }
                }
            }
            ExprKind::Pow(e, k) => {
                let v = e.radial_limit(x)?;
                (*k >= 0 || v != C64::new(0.0, 0.0)).then(|| v.powi(*k))
            }
            ExprKind::Call(Func::Phase, e) => match &e.kind {
                ExprKind::Var(j) => Some(unit(x[*j])),
                _ => e
                    .radial_limit(x)
                    .filter(|v| *v != C64::new(0.0, 0.0))
                    .map(unit),
            },
            ExprKind::Call(Func::Exp, e) => {
                let q = e.quadratic(x.len())?;
                let growth: C64 = q
                    .coeffs
                    .iter()
                    .zip(x)
                    .map(|(c, xj)| c * xj.norm_sqr())
                    .sum();
                if growth.re < 0.0 {
                    Some(C64::new(0.0, 0.0))
                } else if growth == C64::new(0.0, 0.0) {
                    Some(q.constant.exp())
                } else {
                    None
                }
            }
            ExprKind::Call(f, e) => e.radial_limit(x).map(|v| f.apply(v)),
            ExprKind::Num(_) | ExprKind::I => unreachable!("constant handled above"),
        }
    }

    /// `Some(q)` when the expression equals `c0 + sum_j c_j |z_j|^2`.
    fn quadratic(&self, n: usize) -> Option<Quadratic> {
        if !self.has_variables() {
            return Some(Quadratic {
                constant: self.eval(&vec![C64::new(0.0, 0.0); n]),
                coeffs: vec![C64::new(0.0, 0.0); n],
            });
        }
        match &self.kind {
            ExprKind::Pow(e, 2) => match (&e.kind, n) {
                (ExprKind::Call(Func::Abs, v), _) => match v.kind {
                    ExprKind::Var(j) => {
                        let mut coeffs = vec![C64::new(0.0, 0.0); n];
                        coeffs[j] = C64::new(1.0, 0.0);
                        Some(Quadratic {
                            constant: C64::new(0.0, 0.0),
                            coeffs,
                        })
                    }
                    _ => None,
                },
                _ => None,
            },
            ExprKind::Neg(e) => e.quadratic(n).map(|q| q.scale(C64::new(-1.0, 0.0))),
            ExprKind::Bin(op, l, r) => {
                let (a, b) = (l.quadratic(n)?, r.quadratic(n)?);
                match op {
                    BinOp::Add => Some(a.add(&b, 1.0)),
                    BinOp::Sub => Some(a.add(&b, -1.0)),
                    BinOp::Mul if a.is_constant() => Some(b.scale(a.constant)),
                    BinOp::Mul if b.is_constant() => Some(a.scale(b.constant)),
                    BinOp::Div if b.is_constant() && b.constant != C64::new(0.0, 0.0) => {
                        Some(a.scale(b.constant.inv()))
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Recognizes `a exp(-r (|z_1|^2 + ... + |z_n|^2))` with `r > 0` real, and
    /// returns `(a, r)`.
    pub fn gaussian_shape(&self, n: usize) -> Option<(C64, f64)> {
        match &self.kind {
            ExprKind::Call(Func::Exp, e) => {
                let q = e.quadratic(n)?;
                let r = -q.coeffs[0].re;
                let radial = q.coeffs.iter().all(|c| c.im == 0.0 && -c.re == r);
                (radial && r > 0.0).then(|| (q.constant.exp(), r))
            }
            ExprKind::Neg(e) => e.gaussian_shape(n).map(|(a, r)| (-a, r)),
            ExprKind::Bin(BinOp::Mul, l, r) if !l.has_variables() => {
                r.gaussian_shape(n).map(|(a, rate)| (l.eval(&[]) * a, rate))
            }
            ExprKind::Bin(BinOp::Mul, l, r) if !r.has_variables() => {
                l.gaussian_shape(n).map(|(a, rate)| (a * r.eval(&[]), rate))
            }
            ExprKind::Bin(BinOp::Div, l, r) if !r.has_variables() => {
                let d = r.eval(&[]);
                (d != C64::new(0.0, 0.0))
                    .then(|| l.gaussian_shape(n).map(|(a, rate)| (a / d, rate)))?
            }
            _ => None,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.prec() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

struct Quadratic {
    constant: C64,
    coeffs: Vec<C64>,
}

impl Quadratic {
    fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    fn scale(mut self, s: C64) -> Self {
        self.constant *= s;
        self.coeffs.iter_mut().for_each(|c| *c *= s);
        self
    }

    fn add(mut self, other: &Self, sign: f64) -> Self {
        self.constant += other.constant * sign;
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += o * sign;
        }
        self
    }
}

impl fmt::Display for Expr {
    /// Prints with the fewest parentheses that reparse to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Num(x) => write!(f, "{x:?}"),
            ExprKind::I => f.write_str("i"),
            ExprKind::Var(j) => write!(f, "z{}", j + 1),
            ExprKind::Neg(e) => {
                f.write_str("-")?;
                e.fmt_child(f, 3)
            }
            ExprKind::Bin(op, l, r) => {
                l.fmt_child(f, op.prec())?;
                write!(f, " {} ", op.symbol())?;
                r.fmt_child(f, op.prec() + 1)
            }
            ExprKind::Pow(e, k) => {
                e.fmt_child(f, 5)?;
                write!(f, "^{k}")
            }
            ExprKind::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

/// A parsed symbol with its source and dimension.
#[derive(Debug, Clone)]
pub struct SymbolExpression {
    source: String,
    n: usize,
    ast: Arc<Expr>,
}

impl SymbolExpression {
    pub fn parse(source: &str, n: usize) -> Result<Self, ParseError> {
        Ok(Self {
            source: source.to_string(),
            n,
            ast: Arc::new(parse(source, n)?),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.ast.eval(z)
    }

    /// Shape for closed-form kernels: constants and radial Gaussians.
    pub fn shape(&self) -> SymbolShape {
        if !self.ast.has_variables() {
            return SymbolShape::Constant(self.ast.eval(&vec![C64::new(0.0, 0.0); self.n]));
        }
        match self.ast.gaussian_shape(self.n) {
            Some((amplitude, rate)) => SymbolShape::Gaussian { amplitude, rate },
            None => SymbolShape::General,
        }
    }

    /// Converts to a core symbol. `sup_bound` is the sampled maximum of `|f|` on a
    /// polar grid of radius `12 sqrt(t)`, floored by the directional limits. Limits
    /// come from `limits` when given, else from the expression where derivable.
    pub fn to_symbol(&self, t: f64, limits: Option<&SymbolExpression>) -> SymbolFunction {
        let ast = self.ast.clone();
        let grid =
            fock_core::PointGrid::polar(self.n, 12.0 * t.sqrt(), 96, 64).expect("valid grid");
        let mut sup = grid
            .points()
            .map(|z| ast.eval(z).norm())
            .fold(0.0, f64::max);
        let dirs = fock_core::PointGrid::directions(self.n, 64).expect("valid grid");
        let limit_fn: Option<LimitFn> = match limits {
            Some(l) => {
                let l = l.ast.clone();
                Some(Arc::new(move |x: &[C64]| Some(l.eval(x))))
            }
            None => {
                let a = ast.clone();
                let all = dirs.points().all(|x| a.radial_limit(x).is_some());
                all.then(|| Arc::new(move |x: &[C64]| a.radial_limit(x)) as LimitFn)
            }
        };
        if let Some(l) = &limit_fn {
            sup = dirs
                .points()
                .filter_map(|x| l(x))
                .map(|v| v.norm())
                .fold(sup, f64::max);
        }
        let eval_ast = ast.clone();
        let mut f = SymbolFunction::new(move |z| eval_ast.eval(z), sup).with_shape(self.shape());
        if let Some(l) = limit_fn {
            f = f.with_limits(move |x| l(x).unwrap_or(C64::new(f64::NAN, f64::NAN)));
        }
        f
    }
}

impl fmt::Display for SymbolExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ast)
    }
}
