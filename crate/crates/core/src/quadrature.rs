//! Integration against the Gaussian probability measures
//! `d mu_t(z) = (pi t)^{-n} exp(-|z|^2 / t) dz` on `C^n`, and against Lebesgue
//! measure through reweighted nodes.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, FockError};
use crate::gauss::radial_gauss;
use crate::sum::CompensatedC64;
use crate::{norm_sqr, C64};

pub const DEFAULT_RADIAL_ORDER: usize = 40;
pub const DEFAULT_ANGULAR_ORDER: usize = 81;

/// Gaussian weight parameter `t` and complex dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockParam {
    t: f64,
    n: usize,
}

impl FockParam {
    pub fn new(t: f64, n: usize) -> Result<Self, FockError> {
        if !(t.is_finite() && t > 0.0) {
            return Err(invalid("t must be a positive finite number"));
        }
        if n == 0 {
            return Err(invalid("dimension n must be at least 1"));
        }
        Ok(Self { t, n })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Density normalizer `(pi t)^{-n}`.
    pub fn normalizer(&self) -> f64 {
        (PI * self.t).powi(-(self.n as i32))
    }

    /// Same dimension, different weight parameter.
    pub fn with_t(&self, t: f64) -> Result<Self, FockError> {
        Self::new(t, self.n)
    }
}

/// A positive-weight cubature rule in `C^n`; nodes are stored flat,
/// `n` coordinates per node.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    param: FockParam,
    nodes: Vec<C64>,
    weights: Vec<f64>,
    exact_degree: usize,
    radial_order: usize,
    angular_order: usize,
}

impl QuadratureRule {
    pub fn param(&self) -> FockParam {
        self.param
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[C64] {
        let n = self.param.n;
        &self.nodes[i * n..(i + 1) * n]
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &[C64]> {
        self.nodes.chunks_exact(self.param.n)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest `d` such that `w^a conj(w)^b` is integrated exactly (up to rounding)
    /// whenever `|a_j| + |b_j| <= d` in every coordinate.
    pub fn exact_degree(&self) -> usize {
        self.exact_degree
    }

    pub fn radial_order(&self) -> usize {
        self.radial_order
    }

    pub fn angular_order(&self) -> usize {
        self.angular_order
    }

    /// The same rule transported to `mu_s`: nodes scale by `sqrt(s / t)`.
    pub fn rescaled(&self, s: f64) -> Result<Self, FockError> {
        let param = self.param.with_t(s)?;
        let scale = (s / self.param.t).sqrt();
        Ok(Self {
            param,
            nodes: self.nodes.iter().map(|z| z * scale).collect(),
            weights: self.weights.clone(),
            ..*self
        })
    }

    /// Weights for Lebesgue measure on the same nodes:
    /// `w_i (pi t)^n exp(|node_i|^2 / t)`.
    pub fn lebesgue_weights(&self) -> Vec<f64> {
        let scale = 1.0 / self.param.normalizer();
        self.nodes()
            .zip(&self.weights)
            .map(|(z, w)| w * scale * (norm_sqr(z) / self.param.t).exp())
            .collect()
    }
}

/// Polar tensor rule for `mu_t`: per coordinate, the radial Gauss rule for
/// `2 rho exp(-rho^2)` with `|w| = sqrt(t) rho`, times the `angular_order`-point
/// trapezoid rule in the angle; tensorized over the `n` coordinates.
pub fn build_polar_rule(
    param: FockParam,
    radial_order: usize,
    angular_order: usize,
) -> Result<QuadratureRule, FockError> {
    if radial_order < 1 {
        return Err(invalid("radial_order must be at least 1"));
    }
    if angular_order < 3 {
        return Err(invalid("angular_order must be at least 3"));
    }
    let (rho, rw) = radial_gauss(radial_order)?;
    let sqrt_t = param.t.sqrt();
    let mut coord_nodes = Vec::with_capacity(radial_order * angular_order);
    let mut coord_weights = Vec::with_capacity(radial_order * angular_order);
    for (r, w) in rho.iter().zip(&rw) {
        for j in 0..angular_order {
            let theta = 2.0 * PI * j as f64 / angular_order as f64;
            coord_nodes.push(C64::from_polar(sqrt_t * r, theta));
            coord_weights.push(w / angular_order as f64);
        }
    }

    let n = param.n;
    let per = coord_nodes.len();
    let total = per.pow(n as u32);
    let mut nodes = Vec::with_capacity(total * n);
    let mut weights = Vec::with_capacity(total);
    let mut idx = alloc::vec![0usize; n];
    for _ in 0..total {
        let mut w = 1.0;
        for &k in &idx {
            nodes.push(coord_nodes[k]);
            w *= coord_weights[k];
        }
        weights.push(w);
        // odometer, last coordinate fastest
        for d in (0..n).rev() {
            idx[d] += 1;
            if idx[d] < per {
                break;
            }
            idx[d] = 0;
        }
    }

    Ok(QuadratureRule {
        param,
        nodes,
        weights,
        exact_degree: (2 * radial_order - 1).min(angular_order - 1),
        radial_order,
        angular_order,
    })
}

pub fn default_rule(param: FockParam) -> Result<QuadratureRule, FockError> {
    build_polar_rule(param, DEFAULT_RADIAL_ORDER, DEFAULT_ANGULAR_ORDER)
}

/// `sum_i w_i g(node_i)` with compensated summation in node order.
pub fn integrate_mu<F>(g: F, rule: &QuadratureRule) -> Result<C64, FockError>
where
    F: Fn(&[C64]) -> C64,
{
    integrate_weighted(g, rule.nodes(), &rule.weights)
}

pub(crate) fn integrate_weighted<'a, F>(
    g: F,
    nodes: impl Iterator<Item = &'a [C64]>,
    weights: &[f64],
) -> Result<C64, FockError>
where
    F: Fn(&[C64]) -> C64,
{
    let mut acc = CompensatedC64::new();
    for (z, w) in nodes.zip(weights) {
        let v = g(z);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(FockError::NonFinite { node: z.to_vec() });
        }
        acc.add(v * *w);
    }
    Ok(acc.value())
}

/// Closed-form moment `int w^a conj(w)^b d mu_t = delta_{ab} a! t^{|a|}`.
pub fn monomial_moment(a: &[u32], b: &[u32], param: FockParam) -> f64 {
    if a != b {
        return 0.0;
    }
    a.iter()
        .map(|&k| (1..=k).map(|j| j as f64 * param.t).product::<f64>())
        .product()
}
