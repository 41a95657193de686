//! Reproducing kernels, the monomial orthonormal basis, `F_t^p` norms and the
//! orthogonal projection `P_t`.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, FockError};
use crate::grid::PointGrid;
use crate::quadrature::{integrate_mu, FockParam, QuadratureRule};
use crate::{dot_conj, norm_sqr, C64};

/// Exponents of a monomial `z^m = z_1^{m_1} ... z_n^{m_n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// Orthonormal monomials `e_m(z) = z^m / sqrt(m! t^{|m|})` of `F_t^2` with
/// `|m| <= max_degree`, in graded-lexicographic order: by total degree, then
/// lexicographically descending in the exponents (so `(1,0)` precedes `(0,1)`).
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    param: FockParam,
    max_degree: usize,
    indices: Vec<MultiIndex>,
    /// `offsets[d]` = number of indices with degree `< d`.
    offsets: Vec<usize>,
}

impl BasisSpec {
    pub fn new(param: FockParam, max_degree: usize) -> Self {
        let n = param.n();
        let mut indices = Vec::new();
        let mut offsets = Vec::with_capacity(max_degree + 2);
        for d in 0..=max_degree {
            offsets.push(indices.len());
            let mut current = vec![0u32; n];
            push_compositions(d as u32, 0, &mut current, &mut indices);
        }
        offsets.push(indices.len());
        Self {
            param,
            max_degree,
            indices,
            offsets,
        }
    }

    pub fn param(&self) -> FockParam {
        self.param
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Number of basis functions of total degree `<= degree` (a prefix of the order).
    pub fn prefix_len(&self, degree: usize) -> usize {
        self.offsets[(degree + 1).min(self.offsets.len() - 1)]
    }

    /// Same ordering restricted to `|m| <= degree`.
    pub fn truncated(&self, degree: usize) -> Self {
        let degree = degree.min(self.max_degree);
        let len = self.prefix_len(degree);
        Self {
            param: self.param,
            max_degree: degree,
            indices: self.indices[..len].to_vec(),
            offsets: self.offsets[..degree + 2].to_vec(),
        }
    }

    pub fn position(&self, m: &MultiIndex) -> Option<usize> {
        let d = m.degree() as usize;
        if d > self.max_degree {
            return None;
        }
        self.indices[self.offsets[d]..self.offsets[d + 1]]
            .iter()
            .position(|x| x == m)
            .map(|p| p + self.offsets[d])
    }

    /// All `e_m(z)` in basis order.
    pub fn eval_all(&self, z: &[C64]) -> Vec<C64> {
        self.eval_all_scaled(z, 1.0)
    }

    /// All `e_m(z) exp(-|z|^2 / 2t)`; bounded by 1 in modulus, safe for large `|z|`.
    pub fn eval_all_damped(&self, z: &[C64]) -> Vec<C64> {
        self.eval_all_scaled(z, (-norm_sqr(z) / (2.0 * self.param.t())).exp())
    }

    fn eval_all_scaled(&self, z: &[C64], scale: f64) -> Vec<C64> {
        let n = self.param.n();
        let t = self.param.t();
        let tables: Vec<Vec<C64>> = (0..n)
            .map(|j| {
                let mut col = Vec::with_capacity(self.max_degree + 1);
                let mut v = C64::new(1.0, 0.0);
                col.push(v);
                for k in 1..=self.max_degree {
                    v *= z[j] / (k as f64 * t).sqrt();
                    col.push(v);
                }
                col
            })
            .collect();
        self.indices
            .iter()
            .map(|m| {
                m.0.iter()
                    .enumerate()
                    .fold(C64::new(scale, 0.0), |acc, (j, &k)| {
                        acc * tables[j][k as usize]
                    })
            })
            .collect()
    }
}

fn push_compositions(
    remaining: u32,
    pos: usize,
    current: &mut Vec<u32>,
    out: &mut Vec<MultiIndex>,
) {
    let n = current.len();
    if pos == n - 1 {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        push_compositions(remaining - k, pos + 1, current, out);
    }
}

/// `K_z(w) = exp(w . conj(z) / t)`.
pub fn kernel_k(z: &[C64], w: &[C64], param: FockParam) -> C64 {
    (dot_conj(w, z) / param.t()).exp()
}

/// Normalized kernel `k_z(w) = exp(w . conj(z) / t - |z|^2 / 2t)`, unit norm in every `F_t^p`.
pub fn kernel_k_normalized(z: &[C64], w: &[C64], param: FockParam) -> C64 {
    let t = param.t();
    (dot_conj(w, z) / t - norm_sqr(z) / (2.0 * t)).exp()
}

pub fn basis_eval(m: &MultiIndex, z: &[C64], param: FockParam) -> C64 {
    let t = param.t();
    m.0.iter().zip(z).fold(C64::new(1.0, 0.0), |acc, (&k, zj)| {
        let norm: f64 = (1..=k).map(|j| j as f64 * t).product::<f64>().sqrt();
        acc * zj.powu(k) / norm
    })
}

/// `||f||_{F_t^p} = (int |f|^p d mu_{2t/p})^{1/p}`, evaluated with `rule` transported
/// to `mu_{2t/p}`.
pub fn fock_norm_p<F>(
    f: F,
    p: f64,
    param: FockParam,
    rule: &QuadratureRule,
) -> Result<f64, FockError>
where
    F: Fn(&[C64]) -> C64,
{
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid("p must lie in [1, inf) for fock_norm_p"));
    }
    let scaled = rule.rescaled(2.0 * param.t() / p)?;
    let v = integrate_mu(|z| C64::from(f(z).norm().powf(p)), &scaled)?;
    Ok(v.re.powf(1.0 / p))
}

/// Default `F_t^infty` search grid: polar, radius `6 sqrt(t)`, 200 radii x 128 angles.
pub fn default_search_grid(param: FockParam) -> PointGrid {
    PointGrid::polar(param.n(), 6.0 * param.t().sqrt(), 200, 128)
        .expect("default grid parameters are valid")
}

/// `sup_z |f(z)| exp(-|z|^2 / 2t)`: maximum over `grid`, then refined by compass
/// search around the best grid point.
pub fn fock_norm_infty<F>(f: F, param: FockParam, grid: &PointGrid) -> f64
where
    F: Fn(&[C64]) -> C64,
{
    let t = param.t();
    let g = |z: &[C64]| f(z).norm() * (-norm_sqr(z) / (2.0 * t)).exp();
    let mut best = f64::NEG_INFINITY;
    let mut best_z: Vec<C64> = vec![C64::new(0.0, 0.0); param.n()];
    for z in grid.points() {
        let v = g(z);
        if v > best {
            best = v;
            best_z.copy_from_slice(z);
        }
    }
    let mut step = match grid.kind() {
        crate::grid::GridKind::PolarSearch { radius, radial, .. } => radius / radial as f64,
        _ => 0.1 * t.sqrt(),
    };
    let mut trial = best_z.clone();
    while step > 1e-9 * t.sqrt() {
        let mut improved = false;
        for j in 0..param.n() {
            for dir in [
                C64::new(1.0, 0.0),
                C64::new(-1.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, -1.0),
            ] {
                trial.copy_from_slice(&best_z);
                trial[j] += dir * step;
                let v = g(&trial);
                if v > best {
                    best = v;
                    best_z.copy_from_slice(&trial);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// `P_t f(z) = <f, K_z> = int f(w) exp(z . conj(w) / t) d mu_t(w)`.
pub fn bergman_project<F>(
    f: F,
    z: &[C64],
    param: FockParam,
    rule: &QuadratureRule,
) -> Result<C64, FockError>
where
    F: Fn(&[C64]) -> C64,
{
    let t = param.t();
    integrate_mu(|w| f(w) * (dot_conj(z, w) / t).exp(), rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::default_rule;

    fn p(t: f64) -> FockParam {
        FockParam::new(t, 1).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn basis_order_and_size() {
        let b = BasisSpec::new(FockParam::new(1.0, 2).unwrap(), 3);
        assert_eq!(b.len(), 10); // C(5, 2)
        let order: Vec<&[u32]> = b.indices().iter().map(|m| m.entries()).collect();
        assert_eq!(
            order[..6],
            [&[0, 0][..], &[1, 0], &[0, 1], &[2, 0], &[1, 1], &[0, 2]]
        );
        assert_eq!(b.prefix_len(1), 3);
        assert_eq!(b.position(&MultiIndex::new(vec![1, 2])), Some(8));
        let b3 = BasisSpec::new(FockParam::new(1.0, 3).unwrap(), 4);
        assert_eq!(b3.len(), 35); // C(7, 3)
    }

    #[test]
    fn kernel_examples() {
        let one = p(1.0);
        assert_eq!(kernel_k(&[c(0.0, 0.0)], &[c(1.3, -2.0)], one), c(1.0, 0.0));
        let z = [c(0.7, 0.4)];
        let v = kernel_k(&z, &z, p(2.0));
        assert!((v - c((0.65f64 / 2.0).exp(), 0.0)).norm() < 1e-15);
        let v = kernel_k(&[c(2.0, 0.0)], &[c(1.0, 0.0)], one);
        assert!((v.re - 2f64.exp()).abs() < 1e-14);
        assert_eq!(
            kernel_k_normalized(&[c(0.0, 0.0)], &[c(3.0, 1.0)], one),
            c(1.0, 0.0)
        );
        let v = kernel_k_normalized(&[c(1.0, 0.0)], &[c(1.0, 0.0)], one);
        assert!((v.re - 0.5f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn basis_eval_examples() {
        let m0 = MultiIndex::new(vec![0]);
        assert_eq!(basis_eval(&m0, &[c(5.0, 1.0)], p(1.0)), c(1.0, 0.0));
        let v = basis_eval(&MultiIndex::new(vec![1]), &[c(0.0, 1.0)], p(1.0));
        assert!((v - c(0.0, 1.0)).norm() < 1e-15);
        let v = basis_eval(&MultiIndex::new(vec![2]), &[c(1.0, 0.0)], p(2.0));
        assert!((v.re - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        let b = BasisSpec::new(p(0.7), 6);
        let z = [c(0.3, -1.1)];
        for (m, v) in b.indices().iter().zip(b.eval_all(&z)) {
            assert!((basis_eval(m, &z, p(0.7)) - v).norm() < 1e-14);
        }
    }

    #[test]
    fn gram_matrix_is_identity() {
        for param in [p(1.0), FockParam::new(0.5, 2).unwrap()] {
            let degree = if param.n() == 1 { 30 } else { 6 };
            let basis = BasisSpec::new(param, degree);
            let rule = if param.n() == 1 {
                default_rule(param).unwrap()
            } else {
                crate::quadrature::build_polar_rule(param, 8, 15).unwrap()
            };
            let values: Vec<Vec<C64>> = rule.nodes().map(|z| basis.eval_all(z)).collect();
            for a in 0..basis.len() {
                for b in 0..basis.len() {
                    let g: C64 = values
                        .iter()
                        .zip(rule.weights())
                        .map(|(v, w)| v[a] * v[b].conj() * *w)
                        .sum();
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!((g - expected).norm() < 1e-10, "({a},{b}) -> {g}");
                }
            }
        }
    }

    #[test]
    fn normalized_kernel_has_unit_norms() {
        let param = p(1.0);
        let rule = default_rule(param).unwrap();
        let grid = default_search_grid(param);
        for z in [
            c(0.0, 0.0),
            c(1.0, 0.5),
            c(-2.0, 1.5),
            c(0.0, -3.0),
            c(2.1, 2.1),
        ] {
            let kz = |w: &[C64]| kernel_k_normalized(&[z], w, param);
            for pp in [1.0, 2.0, 3.0, 4.0] {
                let v = fock_norm_p(kz, pp, param, &rule).unwrap();
                assert!((v - 1.0).abs() < 1e-8, "p={pp} z={z}: {v}");
            }
            let v = fock_norm_infty(kz, param, &grid);
            assert!((v - 1.0).abs() < 1e-8, "inf z={z}: {v}");
        }
    }

    #[test]
    fn norm_examples() {
        let param = p(1.0);
        let rule = default_rule(param).unwrap();
        for pp in [1.0, 2.5, 7.0] {
            let v = fock_norm_p(|_| c(1.0, 0.0), pp, param, &rule).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
        let e1 = |w: &[C64]| w[0];
        assert!((fock_norm_p(e1, 2.0, param, &rule).unwrap() - 1.0).abs() < 1e-12);
        assert!(fock_norm_p(e1, 0.5, param, &rule).is_err());

        let grid = default_search_grid(param);
        assert!((fock_norm_infty(|_| c(1.0, 0.0), param, &grid) - 1.0).abs() < 1e-15);
        let z = [c(1.5, -0.5)];
        let v = fock_norm_infty(|w| kernel_k(&z, w, param), param, &grid);
        let expected = (norm_sqr(&z) / 2.0).exp();
        assert!((v - expected).abs() < 1e-8 * expected);
    }

    #[test]
    fn projection_examples() {
        let param = p(1.0);
        let rule = default_rule(param).unwrap();
        for z in [c(0.0, 0.0), c(1.0, -2.0), c(2.5, 0.3)] {
            let v = bergman_project(|_| c(1.0, 0.0), &[z], param, &rule).unwrap();
            assert!((v - 1.0).norm() < 1e-10);
            let v = bergman_project(|w| w[0].conj(), &[z], param, &rule).unwrap();
            assert!(v.norm() < 1e-10);
            let v = bergman_project(|w| C64::from(w[0].norm_sqr()), &[z], param, &rule).unwrap();
            assert!((v - 1.0).norm() < 1e-10, "{v}");
        }
    }

    #[test]
    fn kernel_self_consistency() {
        let param = p(1.0);
        let rule = default_rule(param).unwrap();
        for (w, z) in [(c(0.5, 0.5), c(-1.0, 0.2)), (c(2.0, -1.0), c(1.0, 1.0))] {
            let ip = crate::quadrature::integrate_mu(
                |u| kernel_k(&[w], u, param) * kernel_k(&[z], u, param).conj(),
                &rule,
            )
            .unwrap();
            let expected = kernel_k(&[w], &[z], param);
            assert!((ip - expected).norm() < 1e-10 * expected.norm().max(1.0));
        }
    }
}
