//! Numerics for integral operators on the Gaussian-weighted Fock spaces `F_t^p(C^n)`.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure computation:
//! quadrature against the Gaussian probability measures, reproducing kernels and
//! the monomial basis, Toeplitz/Weyl/integral operators and their finite sections,
//! Wiener-class dominating profiles with Schur-test bounds, and a spectral engine
//! (truncated spectra, Berezin compactness test, limit operators, Fredholm index).
//!
//! IO, argument parsing and file formats live in the `fock-cli` crate.
#![no_std]

extern crate alloc;

pub mod error;
pub mod fock;
pub mod gauss;
pub mod grid;
pub mod operator;
pub mod quadrature;
pub mod spectral;
pub mod sum;
pub mod symbols;
pub mod wiener;

pub use error::FockError;
pub use fock::{BasisSpec, MultiIndex};
pub use grid::PointGrid;

pub use operator::{KernelFunction, Provenance, SymbolFunction, TruncatedOperator};
pub use quadrature::{FockParam, QuadratureRule};
pub use spectral::{LimitDirection, SpectralReport};
pub use wiener::DominatingProfile;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Squared Euclidean norm of a point in `C^n`.
#[inline]
pub fn norm_sqr(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

/// Hermitian product `z . conj(w)`.
#[inline]
pub fn dot_conj(z: &[C64], w: &[C64]) -> C64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}
