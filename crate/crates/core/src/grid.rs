//! Sample grids in `C^n`: polar search grids, polar integration grids, square
//! lattices (needed for discrete convolution), and direction grids on the sphere.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, FockError};
use crate::gauss::gauss_legendre;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    /// Origin plus `radial x angular` points on equispaced circles up to `radius`.
    PolarSearch {
        radius: f64,
        radial: usize,
        angular: usize,
    },
    /// Gauss–Legendre in the radius, trapezoid in the angle; carries weights.
    PolarQuadrature {
        radius: f64,
        radial: usize,
        angular: usize,
    },
    /// `(2 half_steps + 1)^{2n}` points with the given spacing; carries weights.
    Lattice { spacing: f64, half_steps: usize },
    /// Unit vectors.
    Directions { count: usize },
}

#[derive(Debug, Clone)]
pub struct PointGrid {
    n: usize,
    points: Vec<C64>,
    weights: Option<Vec<f64>>,
    kind: GridKind,
}

impl PointGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[C64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[C64]> {
        self.points.chunks_exact(self.n)
    }

    /// Lebesgue integration weights, present for quadrature-capable grids.
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Largest `|point|` on the grid.
    pub fn radius(&self) -> f64 {
        self.points()
            .map(|z| crate::norm_sqr(z).sqrt())
            .fold(0.0, f64::max)
    }

    /// Search grid; for `n > 1` the per-coordinate circles of radius
    /// `radius / sqrt(n)` are tensorized.
    pub fn polar(n: usize, radius: f64, radial: usize, angular: usize) -> Result<Self, FockError> {
        check(n, radius, radial, angular)?;
        let r1 = radius / (n as f64).sqrt();
        let mut coord = vec![C64::new(0.0, 0.0)];
        for k in 1..=radial {
            let r = r1 * k as f64 / radial as f64;
            for j in 0..angular {
                coord.push(C64::from_polar(r, 2.0 * PI * j as f64 / angular as f64));
            }
        }
        let (points, _) = tensorize(n, &coord, None);
        Ok(Self {
            n,
            points,
            weights: None,
            kind: GridKind::PolarSearch {
                radius,
                radial,
                angular,
            },
        })
    }

    /// Integration grid over the ball of radius `radius` (per coordinate for `n > 1`).
    pub fn polar_quadrature(
        n: usize,
        radius: f64,
        radial: usize,
        angular: usize,
    ) -> Result<Self, FockError> {
        check(n, radius, radial, angular)?;
        let (x, w) = gauss_legendre(radial);
        let mut coord = Vec::with_capacity(radial * angular);
        let mut cw = Vec::with_capacity(radial * angular);
        for (xi, wi) in x.iter().zip(&w) {
            let r = 0.5 * radius * (xi + 1.0);
            for j in 0..angular {
                coord.push(C64::from_polar(r, 2.0 * PI * j as f64 / angular as f64));
                cw.push(0.5 * radius * wi * r * 2.0 * PI / angular as f64);
            }
        }
        let (points, weights) = tensorize(n, &coord, Some(&cw));
        Ok(Self {
            n,
            points,
            weights,
            kind: GridKind::PolarQuadrature {
                radius,
                radial,
                angular,
            },
        })
    }

    /// Square lattice `spacing * Z^{2n}` truncated to `|x_k| <= half_steps * spacing`
    /// per real coordinate; cell volume `spacing^{2n}` as weight.
    pub fn lattice(n: usize, spacing: f64, half_steps: usize) -> Result<Self, FockError> {
        if n == 0 || !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid("lattice needs n >= 1 and positive spacing"));
        }
        let side = 2 * half_steps + 1;
        let count = side.pow(2 * n as u32);
        let mut points = Vec::with_capacity(count * n);
        for idx in 0..count {
            let coords = lattice_coords(idx, n, half_steps);
            for j in 0..n {
                points.push(C64::new(
                    coords[2 * j] as f64 * spacing,
                    coords[2 * j + 1] as f64 * spacing,
                ));
            }
        }
        Ok(Self {
            n,
            points,
            weights: Some(vec![spacing.powi(2 * n as i32); count]),
            kind: GridKind::Lattice {
                spacing,
                half_steps,
            },
        })
    }

    /// Direction grid on the unit sphere of `C^n`. For `n = 1`, `count` equispaced
    /// angles. For `n >= 2`, a `k x k` Fubini-type sampling (`k = round(sqrt(count))`)
    /// of `(cos a e^{i phi}, sin a, 0, ...)`.
    pub fn directions(n: usize, count: usize) -> Result<Self, FockError> {
        if n == 0 || count == 0 {
            return Err(invalid("direction grid needs n >= 1 and count >= 1"));
        }
        let mut points = Vec::new();
        if n == 1 {
            for j in 0..count {
                points.push(C64::from_polar(1.0, 2.0 * PI * j as f64 / count as f64));
            }
        } else {
            let k = ((count as f64).sqrt().round() as usize).max(1);
            for a in 0..k {
                let alpha = 0.5 * PI * (a as f64 + 0.5) / k as f64;
                for p in 0..k {
                    let phi = 2.0 * PI * p as f64 / k as f64;
                    points.push(C64::from_polar(alpha.cos(), phi));
                    points.push(C64::new(alpha.sin(), 0.0));
                    for _ in 2..n {
                        points.push(C64::new(0.0, 0.0));
                    }
                }
            }
        }
        let count = points.len() / n;
        Ok(Self {
            n,
            points,
            weights: None,
            kind: GridKind::Directions { count },
        })
    }

    /// Index of the lattice point with the given integer coordinates, if on the grid.
    pub(crate) fn lattice_index(&self, coords: &[i64]) -> Option<usize> {
        let GridKind::Lattice { half_steps, .. } = self.kind else {
            return None;
        };
        let side = (2 * half_steps + 1) as i64;
        let mut idx = 0i64;
        for &c in coords {
            let shifted = c + half_steps as i64;
            if !(0..side).contains(&shifted) {
                return None;
            }
            idx = idx * side + shifted;
        }
        Some(idx as usize)
    }
}

pub(crate) fn lattice_coords(mut idx: usize, n: usize, half_steps: usize) -> Vec<i64> {
    let side = 2 * half_steps + 1;
    let mut coords = vec![0i64; 2 * n];
    for d in (0..2 * n).rev() {
        coords[d] = (idx % side) as i64 - half_steps as i64;
        idx /= side;
    }
    coords
}

fn check(n: usize, radius: f64, radial: usize, angular: usize) -> Result<(), FockError> {
    if n == 0 || !(radius > 0.0 && radius.is_finite()) || radial == 0 || angular == 0 {
        return Err(invalid(
            "polar grid needs n >= 1, radius > 0 and non-zero counts",
        ));
    }
    Ok(())
}

fn tensorize(n: usize, coord: &[C64], weights: Option<&[f64]>) -> (Vec<C64>, Option<Vec<f64>>) {
    let per = coord.len();
    let total = per.pow(n as u32);
    let mut points = Vec::with_capacity(total * n);
    let mut out_w = weights.map(|_| Vec::with_capacity(total));
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let mut w = 1.0;
        for &k in &idx {
            points.push(coord[k]);
            if let Some(cw) = weights {
                w *= cw[k];
            }
        }
        if let Some(ow) = out_w.as_mut() {
            ow.push(w);
        }
        for d in (0..n).rev() {
            idx[d] += 1;
            if idx[d] < per {
                break;
            }
            idx[d] = 0;
        }
    }
    (points, out_w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_search_contains_origin_and_rim() {
        let g = PointGrid::polar(1, 6.0, 10, 8).unwrap();
        assert_eq!(g.len(), 81);
        assert_eq!(g.point(0)[0], C64::new(0.0, 0.0));
        assert!((g.radius() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn polar_quadrature_integrates_gaussian() {
        let g = PointGrid::polar_quadrature(1, 10.0, 40, 16).unwrap();
        let w = g.weights().unwrap();
        let v: f64 = g
            .points()
            .zip(w)
            .map(|(z, w)| w * (-z[0].norm_sqr()).exp())
            .sum();
        assert!((v - PI).abs() < 1e-12);
    }

    #[test]
    fn lattice_indexing_round_trips() {
        let g = PointGrid::lattice(1, 0.5, 3).unwrap();
        assert_eq!(g.len(), 49);
        for i in 0..g.len() {
            let c = lattice_coords(i, 1, 3);
            assert_eq!(g.lattice_index(&c), Some(i));
            assert_eq!(
                g.point(i)[0],
                C64::new(c[0] as f64 * 0.5, c[1] as f64 * 0.5)
            );
        }
        assert_eq!(g.lattice_index(&[4, 0]), None);
    }

    #[test]
    fn directions_are_unit_vectors() {
        for n in [1, 2, 3] {
            let g = PointGrid::directions(n, 64).unwrap();
            assert_eq!(g.len(), 64);
            for d in g.points() {
                assert!((crate::norm_sqr(d) - 1.0).abs() < 1e-14);
            }
        }
    }
}
