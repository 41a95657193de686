//! The Wiener class of kernels: sampled dominating profiles
//! `G(u) = sup_z |k(z + u, z)| exp(-(|z + u|^2 + |z|^2) / 2t)`, the norm bound
//! `(pi t)^{-n} int G`, Schur-test bounds with interpolation in `p`, and the
//! convolution bound for products.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, FockError};
use crate::grid::{lattice_coords, GridKind, PointGrid};
use crate::operator::KernelFunction;
use crate::quadrature::{build_polar_rule, FockParam, QuadratureRule};
use crate::sum::Compensated;
use crate::C64;

/// Base grid for the fiber sup: polar, radius `6 sqrt(t)`, 24 radii x 32 angles.
pub fn default_base_grid(param: FockParam) -> PointGrid {
    PointGrid::polar(param.n(), 6.0 * param.t().sqrt(), 24, 32).expect("valid grid")
}

/// Offset lattice: spacing `sqrt(t) / 2`, `|Re u_j|, |Im u_j| <= 8 sqrt(t)`.
pub fn default_offset_grid(param: FockParam) -> PointGrid {
    PointGrid::lattice(param.n(), 0.5 * param.t().sqrt(), 16).expect("valid grid")
}

/// Rule used for Lebesgue integrals in the Schur test: the `mu_{2t}` polar rule,
/// reweighted by [`QuadratureRule::lebesgue_weights`].
pub fn default_lebesgue_rule(param: FockParam) -> Result<QuadratureRule, FockError> {
    build_polar_rule(param.with_t(2.0 * param.t())?, 20, 41)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileWarning {
    /// The sup over the base grid was attained on its outer circle, so the
    /// sampled value may underestimate the true fiber sup.
    BaseRim { offset: usize, value: f64 },
    /// Contribution beyond the offset grid, bounded by a Gaussian envelope.
    OffsetTail { bound: f64 },
}

/// Sampled majorant `G >= 0` on an offset grid with integration weights.
#[derive(Debug, Clone)]
pub struct DominatingProfile {
    param: FockParam,
    offsets: PointGrid,
    values: Vec<f64>,
    l1_estimate: f64,
    upper_estimate: f64,
    warnings: Vec<ProfileWarning>,
}

impl DominatingProfile {
    /// Profile from given samples; the upper estimate adds the Gaussian tail
    /// `S exp(-|u|^2 / 4t)` beyond the grid, with `S` fitted on its outer ring.
    pub fn from_values(
        param: FockParam,
        offsets: PointGrid,
        values: Vec<f64>,
    ) -> Result<Self, FockError> {
        if offsets.n() != param.n() {
            return Err(invalid("offset grid dimension differs from n"));
        }
        let Some(weights) = offsets.weights() else {
            return Err(invalid("offset grid must carry integration weights"));
        };
        if values.len() != offsets.len() {
            return Err(invalid("one profile value per offset is required"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("profile values must be finite and non-negative"));
        }
        let mut acc = Compensated::new();
        for (v, w) in values.iter().zip(weights) {
            acc.add(v * w);
        }
        let l1_estimate = param.normalizer() * acc.value();

        let t = param.t();
        let rim = offsets.radius();
        let ring = 0.75 * rim;
        let envelope = offsets
            .points()
            .zip(&values)
            .filter(|(u, _)| crate::norm_sqr(u).sqrt() >= ring)
            .map(|(u, v)| v * (crate::norm_sqr(u) / (4.0 * t)).exp())
            .fold(0.0, f64::max);
        let inner = inscribed_radius(&offsets);
        let tail = gaussian_tail(param, envelope, inner);
        let mut warnings = Vec::new();
        if tail > 0.0 {
            warnings.push(ProfileWarning::OffsetTail { bound: tail });
        }
        Ok(Self {
            param,
            offsets,
            values,
            l1_estimate,
            upper_estimate: l1_estimate + tail,
            warnings,
        })
    }

    pub fn param(&self) -> FockParam {
        self.param
    }

    pub fn offsets(&self) -> &PointGrid {
        &self.offsets
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(pi t)^{-n} sum_u w_u G(u)`.
    pub fn l1_estimate(&self) -> f64 {
        self.l1_estimate
    }

    /// `l1_estimate` plus the Gaussian tail bound beyond the offset grid.
    pub fn upper_estimate(&self) -> f64 {
        self.upper_estimate
    }

    pub fn warnings(&self) -> &[ProfileWarning] {
        &self.warnings
    }

    /// Value at integer lattice coordinates (`2n` of them), if on the grid.
    pub fn value_at_lattice(&self, coords: &[i64]) -> Option<f64> {
        self.offsets.lattice_index(coords).map(|i| self.values[i])
    }

    pub fn scaled(&self, c: f64) -> Result<Self, FockError> {
        Self::from_values(
            self.param,
            self.offsets.clone(),
            self.values.iter().map(|v| v * c.abs()).collect(),
        )
    }
}

/// Largest `r` such that the ball of radius `r` lies inside the grid's support.
fn inscribed_radius(grid: &PointGrid) -> f64 {
    match grid.kind() {
        GridKind::Lattice {
            spacing,
            half_steps,
        } => spacing * (half_steps as f64 + 0.5),
        GridKind::PolarQuadrature { radius, .. } => radius / (grid.n() as f64).sqrt(),
        _ => grid.radius(),
    }
}

/// `(pi t)^{-n} int_{|u| > r} S exp(-|u|^2 / 4t) du = 4^n S P(Gamma(n) > r^2 / 4t)`.
fn gaussian_tail(param: FockParam, s: f64, r: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let x = r * r / (4.0 * param.t());
    let mut term = 1.0;
    let mut series = 1.0;
    for k in 1..param.n() {
        term *= x / k as f64;
        series += term;
    }
    4f64.powi(param.n() as i32) * s * (-x).exp() * series
}

/// Fiber sup of the damped kernel over `base` for every offset in `offsets`.
pub fn dominating_profile(
    k: &KernelFunction,
    base: &PointGrid,
    offsets: &PointGrid,
) -> Result<DominatingProfile, FockError> {
    let param = k.param();
    if base.n() != param.n() {
        return Err(invalid("base grid dimension differs from n"));
    }
    let n = param.n();
    let rim = base.radius();
    let mut values = Vec::with_capacity(offsets.len());
    let mut rim_hits = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); n];
    for (idx, u) in offsets.points().enumerate() {
        let mut interior = 0.0f64;
        let mut on_rim = 0.0f64;
        for z in base.points() {
            for j in 0..n {
                w[j] = z[j] + u[j];
            }
            let v = k.eval_damped(&w, z).norm();
            if !v.is_finite() {
                return Err(FockError::NonFinite { node: w.clone() });
            }
            if crate::norm_sqr(z).sqrt() >= rim * (1.0 - 1e-12) {
                on_rim = on_rim.max(v);
            } else {
                interior = interior.max(v);
            }
        }
        // Warn only when the sup is attained on the rim and not matched inside.
        if on_rim > interior * (1.0 + 1e-9) {
            rim_hits.push(ProfileWarning::BaseRim {
                offset: idx,
                value: on_rim,
            });
        }
        values.push(interior.max(on_rim));
    }
    let mut profile = DominatingProfile::from_values(param, offsets.clone(), values)?;
    profile.warnings.extend(rim_hits);
    Ok(profile)
}

/// `(pi t)^{-n} int G`: an upper bound for the operator norm on every `F_t^p`
/// (up to the sampling of the sup).
pub fn wiener_norm_bound(profile: &DominatingProfile) -> f64 {
    profile.l1_estimate()
}

/// Schur integrals `A1 = sup_w int |k~(w, z)| dz` and `Ainf = sup_z int |k~(w, z)| dw`
/// of the damped kernel `k~`; sups over `base`, integrals on `rule` with its
/// Lebesgue weights.
pub fn schur_bounds(
    k: &KernelFunction,
    base: &PointGrid,
    rule: &QuadratureRule,
) -> Result<(f64, f64), FockError> {
    if base.n() != k.param().n() || rule.param().n() != k.param().n() {
        return Err(invalid("grid dimensions differ from n"));
    }
    let lw = rule.lebesgue_weights();
    let mut a1 = 0.0f64;
    let mut ainf = 0.0f64;
    for p in base.points() {
        let mut row = Compensated::new();
        let mut col = Compensated::new();
        for (x, w) in rule.nodes().zip(&lw) {
            let r = k.eval_damped(p, x).norm();
            let c = k.eval_damped(x, p).norm();
            if !(r.is_finite() && c.is_finite()) {
                return Err(FockError::NonFinite { node: x.to_vec() });
            }
            row.add(r * w);
            col.add(c * w);
        }
        a1 = a1.max(row.value());
        ainf = ainf.max(col.value());
    }
    Ok((a1, ainf))
}

/// `(pi t)^{-n} A1^{1 - theta} Ainf^theta` with `theta = 1 - 1/p`; `p` may be infinite.
pub fn operator_norm_bound_p(
    a1: f64,
    ainf: f64,
    p: f64,
    param: FockParam,
) -> Result<f64, FockError> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid("p must lie in [1, inf]"));
    }
    if !(a1 >= 0.0 && ainf >= 0.0) {
        return Err(invalid("Schur integrals must be non-negative"));
    }
    let theta = if p.is_infinite() { 1.0 } else { 1.0 - 1.0 / p };
    let value = if theta == 0.0 {
        a1
    } else if theta == 1.0 {
        ainf
    } else {
        a1.powf(1.0 - theta) * ainf.powf(theta)
    };
    Ok(param.normalizer() * value)
}

/// Profile `(pi t)^{-n} (G1 * G2)` dominating the product kernel, on the lattice
/// with twice the half-width. Its estimate equals the product of the inputs'.
pub fn convolution_bound(
    p1: &DominatingProfile,
    p2: &DominatingProfile,
) -> Result<DominatingProfile, FockError> {
    if p1.param != p2.param {
        return Err(invalid("profiles use different parameters"));
    }
    let (
        GridKind::Lattice {
            spacing: h1,
            half_steps: m1,
        },
        GridKind::Lattice {
            spacing: h2,
            half_steps: m2,
        },
    ) = (p1.offsets.kind(), p2.offsets.kind())
    else {
        return Err(FockError::GridMismatch(
            "convolution needs lattice offset grids".into(),
        ));
    };
    if h1 != h2 || m1 != m2 {
        return Err(FockError::GridMismatch(
            "profiles live on different lattices".into(),
        ));
    }
    let n = p1.param.n();
    let out_grid = PointGrid::lattice(n, h1, 2 * m1)?;
    let cell = h1.powi(2 * n as i32);
    let scale = p1.param.normalizer() * cell;
    let mut values = vec![0.0; out_grid.len()];
    let mut acc = vec![Compensated::new(); out_grid.len()];
    let mut target = vec![0i64; 2 * n];
    for (i, g1) in p1.values.iter().enumerate() {
        if *g1 == 0.0 {
            continue;
        }
        let a = lattice_coords(i, n, m1);
        for (j, g2) in p2.values.iter().enumerate() {
            if *g2 == 0.0 {
                continue;
            }
            let b = lattice_coords(j, n, m1);
            for d in 0..2 * n {
                target[d] = a[d] + b[d];
            }
            let k = out_grid
                .lattice_index(&target)
                .expect("sum of two lattice points lies on the doubled lattice");
            acc[k].add(g1 * g2);
        }
    }
    for (v, a) in values.iter_mut().zip(&acc) {
        *v = a.value() * scale;
    }
    DominatingProfile::from_values(p1.param, out_grid, values)
}

/// Heuristic evidence that a sampled profile is integrable: a least-squares fit
/// `log G(u) ~ c - a |u|^2` over the outer half of the grid and the share of the
/// estimate carried by that outer half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipDiagnostic {
    pub decay_rate: f64,
    pub fit_residual: f64,
    pub outer_share: f64,
    /// In `[0, 1]`; high when the fitted decay is Gaussian and the outer share small.
    pub confidence: f64,
}

pub fn membership_diagnostic(profile: &DominatingProfile) -> MembershipDiagnostic {
    let t = profile.param.t();
    let rim = profile.offsets.radius();
    let weights = profile.offsets.weights().unwrap_or(&[]);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut outer = Compensated::new();
    let mut total = Compensated::new();
    for ((u, v), w) in profile.offsets.points().zip(&profile.values).zip(weights) {
        let r = crate::norm_sqr(u).sqrt();
        total.add(v * w);
        if r >= 0.5 * rim {
            outer.add(v * w);
            if *v > 1e-300 {
                xs.push(r * r / t);
                ys.push(v.ln());
            }
        }
    }
    let outer_share = if total.value() > 0.0 {
        outer.value() / total.value()
    } else {
        0.0
    };
    let (decay_rate, fit_residual) = if xs.len() >= 2 {
        let m = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / m;
        let my = ys.iter().sum::<f64>() / m;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let res: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let e = y - (my + slope * (x - mx));
                e * e
            })
            .sum::<f64>()
            / m;
        (-slope, res.sqrt())
    } else {
        (f64::INFINITY, 0.0)
    };
    let decay_score = if decay_rate > 0.0 {
        1.0 - (-decay_rate * 10.0).exp()
    } else {
        0.0
    };
    let confidence = (decay_score * (1.0 - outer_share.min(1.0))).clamp(0.0, 1.0);
    MembershipDiagnostic {
        decay_rate,
        fit_residual,
        outer_share,
        confidence,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn tail_matches_closed_form_in_one_dimension() {
        let p = FockParam::new(1.0, 1).unwrap();
        assert!((gaussian_tail(p, 1.0, 0.0) - 4.0).abs() < 1e-15);
        assert!((gaussian_tail(p, 1.0, 2.0) - 4.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn interpolation_endpoints() {
        let p = FockParam::new(1.0, 1).unwrap();
        assert!((operator_norm_bound_p(2.0, 8.0, 1.0, p).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert!(
            (operator_norm_bound_p(2.0, 8.0, f64::INFINITY, p).unwrap() - 8.0 / PI).abs() < 1e-15
        );
        assert!((operator_norm_bound_p(2.0, 8.0, 2.0, p).unwrap() - 4.0 / PI).abs() < 1e-15);
        assert!(operator_norm_bound_p(2.0, 8.0, 0.5, p).is_err());
    }
}
