//! Concrete operators on `F_t^2`: Toeplitz and Weyl operators as finite sections
//! in the monomial basis, integral kernels `k(w, z) = <A K_w, K_z>`, their
//! composition and involution, and the bivariate Berezin transform.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::DMatrix;

use crate::error::{invalid, FockError};
use crate::fock::BasisSpec;
use crate::quadrature::{integrate_mu, FockParam, QuadratureRule};
use crate::{dot_conj, norm_sqr, C64};

pub type PointFn = Arc<dyn Fn(&[C64]) -> C64 + Send + Sync>;
pub type KernelFn = Arc<dyn Fn(&[C64], &[C64]) -> C64 + Send + Sync>;

/// Column `l^2` norms of Weyl sections below this trigger a [`TruncationLeak`].
pub const LEAK_THRESHOLD: f64 = 1e-3;

/// Recognized closed forms, used for exact Toeplitz kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolShape {
    Constant(C64),
    /// `amplitude * exp(-rate |z|^2)`, `rate > 0`.
    Gaussian {
        amplitude: C64,
        rate: f64,
    },
    General,
}

/// A bounded symbol `f: C^n -> C`.
#[derive(Clone)]
pub struct SymbolFunction {
    eval: PointFn,
    sup_bound: f64,
    directional_limits: Option<PointFn>,
    shape: SymbolShape,
}

impl fmt::Debug for SymbolFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolFunction")
            .field("sup_bound", &self.sup_bound)
            .field("directional_limits", &self.directional_limits.is_some())
            .field("shape", &self.shape)
            .finish()
    }
}

impl SymbolFunction {
    pub fn new<F>(eval: F, sup_bound: f64) -> Self
    where
        F: Fn(&[C64]) -> C64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            sup_bound,
            directional_limits: None,
            shape: SymbolShape::General,
        }
    }

    /// Declares a closed form. The caller guarantees that `eval` agrees with it.
    pub fn with_shape(mut self, shape: SymbolShape) -> Self {
        self.shape = shape;
        self
    }

    pub fn shape(&self) -> SymbolShape {
        self.shape
    }

    /// Attaches the radial limits `x -> lim_{r -> inf} f(r x + w)` (taken uniformly for
    /// `w` in compact sets), as a function of the unit direction `x`.
    pub fn with_limits<L>(mut self, limits: L) -> Self
    where
        L: Fn(&[C64]) -> C64 + Send + Sync + 'static,
    {
        self.directional_limits = Some(Arc::new(limits));
        self
    }

    pub fn constant(c: C64) -> Self {
        Self::new(move |_| c, c.norm())
            .with_limits(move |_| c)
            .with_shape(SymbolShape::Constant(c))
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        (self.eval)(z)
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn has_limits(&self) -> bool {
        self.directional_limits.is_some()
    }

    pub fn limit_along(&self, direction: &[C64]) -> Option<C64> {
        self.directional_limits.as_ref().map(|l| l(direction))
    }

    /// `z -> f(z + v)`. Directional limits are translation invariant.
    pub fn translated(&self, v: &[C64]) -> Self {
        let eval = self.eval.clone();
        let v = v.to_vec();
        let shifted = move |z: &[C64]| {
            let p: Vec<C64> = z.iter().zip(&v).map(|(a, b)| a + b).collect();
            eval(&p)
        };
        let shape = match self.shape {
            SymbolShape::Constant(c) => SymbolShape::Constant(c),
            _ => SymbolShape::General,
        };
        Self {
            eval: Arc::new(shifted),
            sup_bound: self.sup_bound,
            directional_limits: self.directional_limits.clone(),
            shape,
        }
    }

    /// `c f`, with scaled limits.
    pub fn scaled(&self, c: C64) -> Self {
        let g = self.clone();
        let shape = match self.shape {
            SymbolShape::Constant(k) => SymbolShape::Constant(k * c),
            SymbolShape::Gaussian { amplitude, rate } => SymbolShape::Gaussian {
                amplitude: amplitude * c,
                rate,
            },
            SymbolShape::General => SymbolShape::General,
        };
        let out = Self::new(move |z| g.eval(z) * c, self.sup_bound * c.norm()).with_shape(shape);
        match self.directional_limits.clone() {
            Some(l) => out.with_limits(move |x| l(x) * c),
            None => out,
        }
    }

    /// `f + g`; limits are kept only when both summands carry them.
    pub fn plus(&self, other: &Self) -> Self {
        let (f, g) = (self.clone(), other.clone());
        let shape = match (self.shape, other.shape) {
            (SymbolShape::Constant(a), SymbolShape::Constant(b)) => SymbolShape::Constant(a + b),
            _ => SymbolShape::General,
        };
        let out = Self::new(
            move |z| f.eval(z) + g.eval(z),
            self.sup_bound + other.sup_bound,
        )
        .with_shape(shape);
        match (
            self.directional_limits.clone(),
            other.directional_limits.clone(),
        ) {
            (Some(a), Some(b)) => out.with_limits(move |x| a(x) + b(x)),
            _ => out,
        }
    }

    /// Checks `|f| <= sup_bound (1 + 1e-9)` on the given points.
    pub fn respects_sup_bound<'a>(&self, points: impl Iterator<Item = &'a [C64]>) -> bool {
        points
            .into_iter()
            .all(|z| self.eval(z).norm() <= self.sup_bound * (1.0 + 1e-9))
    }
}

/// Matrix `entries[(m, l)] = <A e_l, e_m>` of an operator on the span of the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    basis: BasisSpec,
    matrix: DMatrix<C64>,
}

impl TruncatedOperator {
    pub fn new(basis: BasisSpec, matrix: DMatrix<C64>) -> Result<Self, FockError> {
        let dim = basis.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(invalid("matrix dimension does not match the basis"));
        }
        if matrix
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(invalid("operator matrix has non-finite entries"));
        }
        Ok(Self { basis, matrix })
    }

    pub fn identity(basis: BasisSpec) -> Self {
        let d = basis.len();
        Self {
            basis,
            matrix: DMatrix::identity(d, d),
        }
    }

    pub fn zeros(basis: BasisSpec) -> Self {
        let d = basis.len();
        Self {
            basis,
            matrix: DMatrix::zeros(d, d),
        }
    }

    pub fn from_diagonal(basis: BasisSpec, diag: impl Fn(usize) -> C64) -> Self {
        let d = basis.len();
        Self {
            basis,
            matrix: DMatrix::from_fn(
                d,
                d,
                |i, j| if i == j { diag(i) } else { C64::new(0.0, 0.0) },
            ),
        }
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, m: usize, l: usize) -> C64 {
        self.matrix[(m, l)]
    }

    fn same_basis(&self, other: &Self) -> Result<(), FockError> {
        if self.basis != other.basis {
            return Err(invalid("operators live on different bases"));
        }
        Ok(())
    }

    /// Matrix product `self * other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Result<Self, FockError> {
        self.same_basis(other)?;
        Ok(Self {
            basis: self.basis.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, FockError> {
        self.same_basis(other)?;
        Ok(Self {
            basis: self.basis.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            basis: self.basis.clone(),
            matrix: self.matrix.map(|x| x * c),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            basis: self.basis.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    /// Leading block on the basis functions of degree `<= degree`.
    pub fn truncated(&self, degree: usize) -> Self {
        let basis = self.basis.truncated(degree);
        let d = basis.len();
        Self {
            basis,
            matrix: self.matrix.view((0, 0), (d, d)).into_owned(),
        }
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let svd = nalgebra::SVD::new(self.matrix.clone(), false, false);
        svd.singular_values.iter().copied().fold(0.0, f64::max)
    }

    /// `sqrt(sum_m |<A e_l, e_m>|^2)` per column `l`.
    pub fn column_norms(&self) -> Vec<f64> {
        self.matrix.column_iter().map(|c| c.norm()).collect()
    }

    /// Maximum modulus of the entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Column of a Weyl section whose norm fell below `1 - LEAK_THRESHOLD`:
/// part of `W_z e_l` lies beyond the truncation degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationLeak {
    pub column: usize,
    pub column_norm: f64,
}

pub fn leak_report(op: &TruncatedOperator) -> Vec<TruncationLeak> {
    op.column_norms()
        .into_iter()
        .enumerate()
        .filter(|(_, n)| *n < 1.0 - LEAK_THRESHOLD)
        .map(|(column, column_norm)| TruncationLeak {
            column,
            column_norm,
        })
        .collect()
}

/// Values of every basis function at every node (row = node).
fn basis_at_nodes(basis: &BasisSpec, rule: &QuadratureRule) -> DMatrix<C64> {
    let k = rule.len();
    let d = basis.len();
    let mut values = DMatrix::zeros(k, d);
    for (i, z) in rule.nodes().enumerate() {
        for (j, v) in basis.eval_all(z).into_iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    values
}

fn check_rule(basis: &BasisSpec, rule: &QuadratureRule) -> Result<(), FockError> {
    if basis.param() != rule.param() {
        return Err(invalid(
            "basis and quadrature rule use different parameters",
        ));
    }
    if rule.exact_degree() < 2 * basis.max_degree() {
        return Err(invalid(alloc::format!(
            "quadrature exact to degree {} but the basis needs {}",
            rule.exact_degree(),
            2 * basis.max_degree()
        )));
    }
    Ok(())
}

/// `entries[(m, l)] = sum_i w_i g(x_i) e_l(x_i) conj(e_m(x_i))`.
fn sandwich(
    basis: &BasisSpec,
    rule: &QuadratureRule,
    g: impl Fn(&[C64]) -> C64,
    right: impl Fn(&[C64]) -> Vec<C64>,
) -> Result<DMatrix<C64>, FockError> {
    let e = basis_at_nodes(basis, rule);
    let k = rule.len();
    let d = basis.len();
    let mut weighted = DMatrix::zeros(k, d);
    for (i, (z, w)) in rule.nodes().zip(rule.weights()).enumerate() {
        let row = right(z);
        for (l, v) in row.into_iter().enumerate() {
            let val = g(z) * v * *w;
            if !(val.re.is_finite() && val.im.is_finite()) {
                return Err(FockError::NonFinite { node: z.to_vec() });
            }
            weighted[(i, l)] = val;
        }
    }
    Ok(e.adjoint() * weighted)
}

/// Finite section of `T_f = P_t M_f`: `entries[(m, l)] = int f e_l conj(e_m) d mu_t`.
pub fn toeplitz_matrix(
    f: &SymbolFunction,
    basis: &BasisSpec,
    rule: &QuadratureRule,
) -> Result<TruncatedOperator, FockError> {
    check_rule(basis, rule)?;
    let matrix = sandwich(basis, rule, |z| f.eval(z), |z| basis.eval_all(z))?;
    TruncatedOperator::new(basis.clone(), matrix)
}

/// `W_z g(w) = k_z(w) g(w - z)`.
pub fn weyl_apply<G>(z: &[C64], g: G, w: &[C64], param: FockParam) -> C64
where
    G: Fn(&[C64]) -> C64,
{
    let shifted: Vec<C64> = w.iter().zip(z).map(|(a, b)| a - b).collect();
    crate::fock::kernel_k_normalized(z, w, param) * g(&shifted)
}

/// Finite section of `W_z` by quadrature of `<W_z e_l, e_m>`, together with the
/// columns that leak past the truncation.
pub fn weyl_matrix(
    z: &[C64],
    basis: &BasisSpec,
    rule: &QuadratureRule,
) -> Result<(TruncatedOperator, Vec<TruncationLeak>), FockError> {
    check_rule(basis, rule)?;
    let param = basis.param();
    let matrix = sandwich(
        basis,
        rule,
        |w| crate::fock::kernel_k_normalized(z, w, param),
        |w| {
            let shifted: Vec<C64> = w.iter().zip(z).map(|(a, b)| a - b).collect();
            basis.eval_all(&shifted)
        },
    )?;
    let op = TruncatedOperator::new(basis.clone(), matrix)?;
    let leaks = leak_report(&op);
    Ok((op, leaks))
}

/// Closed-form finite section of `W_z`. Per coordinate `W_z` acts as the
/// displacement `D(beta)`, `beta = conj(z) / sqrt(t)`, whose matrix elements are
/// associated Laguerre polynomials in `|beta|^2`.
pub fn weyl_matrix_exact(z: &[C64], basis: &BasisSpec) -> TruncatedOperator {
    let param = basis.param();
    let sqrt_t = param.t().sqrt();
    let deg = basis.max_degree();
    let tables: Vec<DMatrix<C64>> = z
        .iter()
        .map(|zj| displacement_table(zj.conj() / sqrt_t, deg))
        .collect();
    let d = basis.len();
    let idx = basis.indices();
    let matrix = DMatrix::from_fn(d, d, |m, l| {
        idx[m]
            .entries()
            .iter()
            .zip(idx[l].entries())
            .zip(&tables)
            .fold(C64::new(1.0, 0.0), |acc, ((&mm, &ll), tab)| {
                acc * tab[(mm as usize, ll as usize)]
            })
    });
    TruncatedOperator {
        basis: basis.clone(),
        matrix,
    }
}

/// `<m| D(beta) |l>` for `m, l <= deg`.
fn displacement_table(beta: C64, deg: usize) -> DMatrix<C64> {
    let x = beta.norm_sqr();
    let damp = (-x / 2.0).exp();
    DMatrix::from_fn(deg + 1, deg + 1, |m, l| {
        let (lo, hi) = if m >= l { (l, m) } else { (m, l) };
        let k = hi - lo;
        // sqrt(lo! / hi!)
        let ratio: f64 = ((lo + 1)..=hi).map(|j| 1.0 / (j as f64).sqrt()).product();
        let lag = laguerre(lo, k as f64, x);
        let pow = if m >= l {
            beta.powu(k as u32)
        } else {
            (-beta.conj()).powu(k as u32)
        };
        pow * (ratio * damp * lag)
    })
}

/// Associated Laguerre polynomial `L_n^{(alpha)}(x)`.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut p0 = 1.0;
    if n == 0 {
        return p0;
    }
    let mut p1 = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0 + alpha - x) * p1 - (kf + alpha) * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// How a kernel is represented.
#[derive(Debug, Clone)]
pub enum Provenance {
    /// Evaluated from a formula or an integral representation.
    ClosedForm,
    /// `k(w, z) = sum_{m,l} A_{ml} e_m(z) conj(e_l(w))` for a finite section `A`.
    BasisExpansion(Arc<TruncatedOperator>),
}

/// Integral kernel `k(w, z)` of `A_k f(z) = int f(w) k(w, z) d mu_t(w)`, holomorphic
/// in `z` and anti-holomorphic in `w`. Also carries the damped evaluator
/// `exp(-(|w|^2 + |z|^2) / 2t) k(w, z)`, which stays finite where `k` overflows.
#[derive(Clone)]
pub struct KernelFunction {
    eval: KernelFn,
    damped: KernelFn,
    param: FockParam,
    provenance: Provenance,
    symbol: Option<SymbolFunction>,
}

impl fmt::Debug for KernelFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelFunction")
            .field("param", &self.param)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl KernelFunction {
    /// Closed-form kernel from its undamped evaluator.
    pub fn closed_form<F>(eval: F, param: FockParam) -> Self
    where
        F: Fn(&[C64], &[C64]) -> C64 + Send + Sync + 'static,
    {
        let eval: KernelFn = Arc::new(eval);
        let inner = eval.clone();
        let t = param.t();
        let damped: KernelFn = Arc::new(move |w: &[C64], z: &[C64]| {
            inner(w, z) * (-(norm_sqr(w) + norm_sqr(z)) / (2.0 * t)).exp()
        });
        Self {
            eval,
            damped,
            param,
            provenance: Provenance::ClosedForm,
            symbol: None,
        }
    }

    /// Closed-form kernel given through its damped evaluator (the Berezin transform).
    pub fn from_damped<F>(damped: F, param: FockParam) -> Self
    where
        F: Fn(&[C64], &[C64]) -> C64 + Send + Sync + 'static,
    {
        let damped: KernelFn = Arc::new(damped);
        let inner = damped.clone();
        let t = param.t();
        let eval: KernelFn = Arc::new(move |w: &[C64], z: &[C64]| {
            inner(w, z) * ((norm_sqr(w) + norm_sqr(z)) / (2.0 * t)).exp()
        });
        Self {
            eval,
            damped,
            param,
            provenance: Provenance::ClosedForm,
            symbol: None,
        }
    }

    /// Kernel `exp(z . conj(w) / t)` of the identity.
    pub fn identity(param: FockParam) -> Self {
        let t = param.t();
        let mut k = Self::from_damped(
            move |w, z| (dot_conj(z, w) / t - (norm_sqr(w) + norm_sqr(z)) / (2.0 * t)).exp(),
            param,
        );
        k.symbol = Some(SymbolFunction::constant(C64::new(1.0, 0.0)));
        k
    }

    pub fn zero(param: FockParam) -> Self {
        Self::from_damped(|_, _| C64::new(0.0, 0.0), param)
    }

    pub fn eval(&self, w: &[C64], z: &[C64]) -> C64 {
        (self.eval)(w, z)
    }

    /// `exp(-(|w|^2 + |z|^2) / 2t) k(w, z)`.
    pub fn eval_damped(&self, w: &[C64], z: &[C64]) -> C64 {
        (self.damped)(w, z)
    }

    pub fn param(&self) -> FockParam {
        self.param
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// The symbol `f` when this is the kernel of the Toeplitz operator `T_f`.
    pub fn toeplitz_symbol(&self) -> Option<&SymbolFunction> {
        self.symbol.as_ref()
    }

    pub fn matrix(&self) -> Option<&TruncatedOperator> {
        match &self.provenance {
            Provenance::BasisExpansion(a) => Some(a),
            Provenance::ClosedForm => None,
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        if let Some(a) = self.matrix() {
            return kernel_from_matrix(&a.scale(c));
        }
        let d = self.damped.clone();
        let mut out = Self::from_damped(move |w, z| d(w, z) * c, self.param);
        out.symbol = self.symbol.as_ref().map(|f| f.scaled(c));
        out
    }

    pub fn sum(&self, other: &Self) -> Result<Self, FockError> {
        if self.param != other.param {
            return Err(invalid("kernels use different parameters"));
        }
        if let (Some(a), Some(b)) = (self.matrix(), other.matrix()) {
            if a.basis() == b.basis() {
                return Ok(kernel_from_matrix(&a.add(b)?));
            }
        }
        let (d1, d2) = (self.damped.clone(), other.damped.clone());
        let mut out = Self::from_damped(move |w, z| d1(w, z) + d2(w, z), self.param);
        if let (Some(f), Some(g)) = (&self.symbol, &other.symbol) {
            out.symbol = Some(f.plus(g));
        }
        Ok(out)
    }
}

/// `k(w, z) = sum_{m,l} A_{ml} e_m(z) conj(e_l(w))`.
pub fn kernel_from_matrix(a: &TruncatedOperator) -> KernelFunction {
    let shared = Arc::new(a.clone());
    let (s1, s2) = (shared.clone(), shared.clone());
    let bilinear = |op: &TruncatedOperator, ew: Vec<C64>, ez: Vec<C64>| {
        let m = op.matrix();
        let mut acc = C64::new(0.0, 0.0);
        for (l, ewl) in ew.iter().enumerate() {
            let cw = ewl.conj();
            if cw == C64::new(0.0, 0.0) {
                continue;
            }
            let mut col = C64::new(0.0, 0.0);
            for (mi, ezm) in ez.iter().enumerate() {
                col += m[(mi, l)] * ezm;
            }
            acc += col * cw;
        }
        acc
    };
    let eval: KernelFn = Arc::new(move |w: &[C64], z: &[C64]| {
        let b = s1.basis();
        bilinear(&s1, b.eval_all(w), b.eval_all(z))
    });
    let damped: KernelFn = Arc::new(move |w: &[C64], z: &[C64]| {
        let b = s2.basis();
        bilinear(&s2, b.eval_all_damped(w), b.eval_all_damped(z))
    });
    KernelFunction {
        eval,
        damped,
        param: a.basis().param(),
        provenance: Provenance::BasisExpansion(shared),
        symbol: None,
    }
}

/// Exact Toeplitz kernels for constant and Gaussian symbols:
/// `T_{a exp(-r|.|^2)}` has kernel `a (1 + r t)^{-n} exp(z . conj(w) / (t (1 + r t)))`.
fn toeplitz_kernel_closed_form(f: &SymbolFunction, param: FockParam) -> Option<KernelFunction> {
    let t = param.t();
    match f.shape() {
        SymbolShape::Constant(c) => Some(KernelFunction::identity(param).scaled(c)),
        SymbolShape::Gaussian { amplitude, rate } if rate > 0.0 => {
            let s = 1.0 + rate * t;
            let pre = amplitude * s.powi(-(param.n() as i32));
            Some(KernelFunction::from_damped(
                move |w, z| {
                    pre * (dot_conj(z, w) / (t * s) - (norm_sqr(w) + norm_sqr(z)) / (2.0 * t)).exp()
                },
                param,
            ))
        }
        _ => None,
    }
}

/// Midpoint radius (in units of `sqrt t`) beyond which [`toeplitz_kernel`]
/// recentres its rule.
pub const RECENTER_RADIUS: f64 = 4.0;

/// Kernel `<T_f K_w, K_z> = int f(u) K_w(u) conj(K_z(u)) d mu_t(u)` of the full
/// (untruncated) Toeplitz operator, evaluated in damped form. In `u` the damped
/// integrand is `f` times a Gaussian bump centred at `c = (w + z) / 2`. For
/// `|c| <= RECENTER_RADIUS sqrt(t)` the rule is used as is, which keeps symbols that
/// are rough only at the origin (such as the phase) exactly resolved in angle.
/// Farther out the rule is recentred at `c`, where the integrand has modulus
/// `|f| exp(-|w - z|^2 / 4t)` and phase `Im(u . conj(w - z)) / t`.
pub fn toeplitz_kernel(f: &SymbolFunction, rule: &QuadratureRule) -> KernelFunction {
    let param = rule.param();
    let t = param.t();
    if let Some(mut k) = toeplitz_kernel_closed_form(f, param) {
        k.symbol = Some(f.clone());
        return k;
    }
    let rule = Arc::new(rule.clone());
    let symbol = f.clone();
    let f = f.clone();
    let weighted: Vec<C64> = rule
        .nodes()
        .zip(rule.weights())
        .map(|(u, w)| f.eval(u) * *w)
        .collect();
    let mut k = KernelFunction::from_damped(
        move |w, z| {
            let n = w.len();
            let center: Vec<C64> = w.iter().zip(z).map(|(a, b)| (a + b) * 0.5).collect();
            let diff: Vec<C64> = w.iter().zip(z).map(|(a, b)| a - b).collect();
            if norm_sqr(&center) <= RECENTER_RADIUS * RECENTER_RADIUS * t {
                let shift = (norm_sqr(w) + norm_sqr(z)) / (2.0 * t);
                let mut acc = crate::sum::CompensatedC64::new();
                for (u, fw) in rule.nodes().zip(&weighted) {
                    if *fw == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let e = ((dot_conj(u, w) + dot_conj(z, u)) / t - shift).exp();
                    acc.add(fw * e);
                }
                return acc.value();
            }
            let envelope = (-norm_sqr(&diff) / (4.0 * t)).exp();
            if envelope == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let mut u = alloc::vec![C64::new(0.0, 0.0); n];
            let mut acc = crate::sum::CompensatedC64::new();
            for (x, wt) in rule.nodes().zip(rule.weights()) {
                for j in 0..n {
                    u[j] = center[j] + x[j];
                }
                let phase = dot_conj(&u, &diff).im / t;
                acc.add(f.eval(&u) * C64::from_polar(*wt, phase));
            }
            acc.value() * envelope
        },
        param,
    );
    k.symbol = Some(symbol);
    k
}

/// `A_k f(z) = int f(w) k(w, z) d mu_t(w)`.
pub fn apply_operator<F>(
    k: &KernelFunction,
    f: F,
    z: &[C64],
    rule: &QuadratureRule,
) -> Result<C64, FockError>
where
    F: Fn(&[C64]) -> C64,
{
    if let Some(a) = k.matrix() {
        // Coefficients <f, e_l> by quadrature, then the finite-section action.
        let basis = a.basis();
        let mut coeffs = alloc::vec![crate::sum::CompensatedC64::new(); basis.len()];
        for (w, wt) in rule.nodes().zip(rule.weights()) {
            let fw = f(w);
            if !(fw.re.is_finite() && fw.im.is_finite()) {
                return Err(FockError::NonFinite { node: w.to_vec() });
            }
            for (c, e) in coeffs.iter_mut().zip(basis.eval_all(w)) {
                c.add(fw * e.conj() * *wt);
            }
        }
        let ez = basis.eval_all(z);
        let m = a.matrix();
        let mut acc = C64::new(0.0, 0.0);
        for (l, c) in coeffs.iter().enumerate() {
            let cl = c.value();
            for (mi, e) in ez.iter().enumerate() {
                acc += m[(mi, l)] * cl * e;
            }
        }
        return Ok(acc);
    }
    integrate_mu(|w| f(w) * k.eval(w, z), rule)
}

/// Kernel of the product `A_{k1} A_{k2}` (apply `A_{k2}` first):
/// `(w, z) -> int k2(w, xi) k1(xi, z) d mu_t(xi)`.
///
/// With this ordering `kernel_from_matrix(A * B) = compose_kernels(k_A, k_B)`. Two
/// basis expansions on the same basis compose by a matrix product.
pub fn compose_kernels(
    k1: &KernelFunction,
    k2: &KernelFunction,
    rule: &QuadratureRule,
) -> Result<KernelFunction, FockError> {
    if k1.param() != k2.param() || k1.param() != rule.param() {
        return Err(invalid("kernels and rule must share the parameter"));
    }
    if let (Some(a), Some(b)) = (k1.matrix(), k2.matrix()) {
        if a.basis() == b.basis() {
            return Ok(kernel_from_matrix(&a.compose(b)?));
        }
    }
    let (k1, k2) = (k1.clone(), k2.clone());
    let param = rule.param();
    let rule = Arc::new(rule.clone());
    let t = param.t();
    // Damped integrand: exp(-(|w|^2+|z|^2)/2t) k2(w,xi) k1(xi,z)
    //   = k2~(w,xi) k1~(xi,z) exp(|xi|^2 / t).
    Ok(KernelFunction::from_damped(
        move |w, z| {
            let mut acc = crate::sum::CompensatedC64::new();
            for (xi, wt) in rule.nodes().zip(rule.weights()) {
                let g = (norm_sqr(xi) / t).exp();
                acc.add(k2.eval_damped(w, xi) * k1.eval_damped(xi, z) * (*wt * g));
            }
            acc.value()
        },
        param,
    ))
}

/// `k*(w, z) = conj(k(z, w))`, the kernel of the adjoint.
pub fn involute_kernel(k: &KernelFunction) -> KernelFunction {
    if let Some(a) = k.matrix() {
        return kernel_from_matrix(&a.adjoint());
    }
    let inner = k.damped.clone();
    let mut out = KernelFunction::from_damped(move |w, z| inner(z, w).conj(), k.param());
    out.symbol = k.symbol.as_ref().map(|f| {
        let g = f.clone();
        let lim = f.clone();
        let s = SymbolFunction::new(move |z| g.eval(z).conj(), f.sup_bound());
        if f.has_limits() {
            s.with_limits(move |x| lim.limit_along(x).unwrap_or_default().conj())
        } else {
            s
        }
    });
    out
}

/// `exp(-(|w|^2 + |z|^2) / 2t) k(w, z) = <A k_w, k_z>`.
pub fn berezin_bivariate(k: &KernelFunction, w: &[C64], z: &[C64]) -> C64 {
    k.eval_damped(w, z)
}

/// `<A_k k_w, k_z>` by quadrature on the plain rule, independently of the damped
/// evaluator. Toeplitz kernels integrate `f k_w conj(k_z)`; basis expansions go
/// through the coefficients `<k_w, e_l>`; other kernels use the nested double sum
/// `int int k_w(u) k(u, v) conj(k_z(v)) d mu(u) d mu(v)`, quadratic in the rule size.
pub fn berezin_by_quadrature(
    k: &KernelFunction,
    w: &[C64],
    z: &[C64],
    rule: &QuadratureRule,
) -> Result<C64, FockError> {
    let param = k.param();
    let kw = |u: &[C64]| crate::fock::kernel_k_normalized(w, u, param);
    let kz = |v: &[C64]| crate::fock::kernel_k_normalized(z, v, param);
    if let Some(f) = k.toeplitz_symbol() {
        // <T_f k_w, k_z> = <f k_w, k_z> in L^2(mu_t).
        return integrate_mu(|u| f.eval(u) * kw(u) * kz(u).conj(), rule);
    }
    if let Some(a) = k.matrix() {
        let basis = a.basis();
        let coeffs = |g: &dyn Fn(&[C64]) -> C64| {
            let mut c = alloc::vec![crate::sum::CompensatedC64::new(); basis.len()];
            for (u, wt) in rule.nodes().zip(rule.weights()) {
                let gu = g(u);
                for (ci, e) in c.iter_mut().zip(basis.eval_all(u)) {
                    ci.add(gu * e.conj() * *wt);
                }
            }
            c.into_iter().map(|x| x.value()).collect::<Vec<_>>()
        };
        let cw = coeffs(&kw);
        let cz = coeffs(&kz);
        let m = a.matrix();
        let mut acc = C64::new(0.0, 0.0);
        for (l, cl) in cw.iter().enumerate() {
            for (mi, cm) in cz.iter().enumerate() {
                acc += m[(mi, l)] * cl * cm.conj();
            }
        }
        return Ok(acc);
    }
    let outer = |v: &[C64]| {
        let inner = integrate_mu(|u| kw(u) * k.eval(u, v), rule).unwrap_or(C64::new(f64::NAN, 0.0));
        inner * kz(v).conj()
    };
    integrate_mu(outer, rule)
}

/// Re-projects a kernel onto `basis`:
/// `A_{ml} = int int e_l(w) k(w, z) conj(e_m(z)) d mu(w) d mu(z)`.
pub fn project_kernel(
    k: &KernelFunction,
    basis: &BasisSpec,
    rule: &QuadratureRule,
) -> Result<TruncatedOperator, FockError> {
    check_rule(basis, rule)?;
    let e = basis_at_nodes(basis, rule);
    let count = rule.len();
    let nodes: Vec<&[C64]> = rule.nodes().collect();
    let wts = rule.weights();
    // kz[(j, i)] = w_j w_i k(x_i, x_j)
    let mut kz = DMatrix::zeros(count, count);
    for j in 0..count {
        for i in 0..count {
            let v = k.eval(nodes[i], nodes[j]);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(FockError::NonFinite {
                    node: nodes[i].to_vec(),
                });
            }
            kz[(j, i)] = v * (wts[i] * wts[j]);
        }
    }
    let matrix = e.adjoint() * kz * &e;
    TruncatedOperator::new(basis.clone(), matrix)
}

/// Largest discrete Cauchy–Riemann residual of `k` (holomorphic in `z`,
/// anti-holomorphic in `w`) over the sample pairs, relative to `|k|`.
/// Uses central differences with step `h` in every coordinate.
pub fn holomorphy_residual<'a>(
    k: &KernelFunction,
    samples: impl IntoIterator<Item = (&'a [C64], &'a [C64])>,
    h: f64,
) -> f64 {
    let i = C64::new(0.0, 1.0);
    let mut worst = 0.0f64;
    for (w, z) in samples {
        let scale = k.eval_damped(w, z).norm().max(1e-300);
        let g = |w: &[C64], z: &[C64]| k.eval_damped(w, z);
        for j in 0..z.len() {
            // d/d conj(z_j) of the undamped kernel, through the damped one:
            // k = g exp((|w|^2+|z|^2)/2t)  =>  dk/dzbar_j = (dg/dzbar_j + g z_j/2t) e^{..}.
            let t = k.param().t();
            let step = |v: &[C64], j: usize, d: C64| {
                let mut p = v.to_vec();
                p[j] += d;
                p
            };
            let dx = (g(w, &step(z, j, C64::new(h, 0.0))) - g(w, &step(z, j, C64::new(-h, 0.0))))
                / (2.0 * h);
            let dy = (g(w, &step(z, j, i * h)) - g(w, &step(z, j, -i * h))) / (2.0 * h);
            let dzbar = 0.5 * (dx + i * dy) + g(w, z) * z[j] / (2.0 * t);
            worst = worst.max(dzbar.norm() / scale);

            let dx = (g(&step(w, j, C64::new(h, 0.0)), z) - g(&step(w, j, C64::new(-h, 0.0)), z))
                / (2.0 * h);
            let dy = (g(&step(w, j, i * h), z) - g(&step(w, j, -i * h), z)) / (2.0 * h);
            let dw = 0.5 * (dx - i * dy) + g(w, z) * w[j].conj() / (2.0 * t);
            worst = worst.max(dw.norm() / scale);
        }
    }
    worst
}
