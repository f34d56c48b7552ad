//! Small dense linear-algebra helpers shared across modules.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;
pub type RVec = DVector<f64>;
pub type CVec = DVector<C64>;

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

pub fn cmax_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.norm()))
}

pub fn vmax_abs(v: &RVec) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

pub fn complexify(m: &RMat) -> CMat {
    m.map(|v| C64::new(v, 0.0))
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|v| v.re)
}

pub fn imag_part(m: &CMat) -> RMat {
    m.map(|v| v.im)
}

pub fn commutator(a: &RMat, b: &RMat) -> RMat {
    a * b - b * a
}

/// Ascending eigenvalues of the symmetric part of `m`.
pub fn sym_eigenvalues(m: &RMat) -> Vec<f64> {
    let s = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn herm_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn solve(a: &RMat, b: &RVec) -> Result<RVec> {
    a.clone().lu().solve(b).ok_or_else(|| Error::Singular("linear system".into()))
}

pub fn inverse(a: &RMat) -> Result<RMat> {
    a.clone().try_inverse().ok_or_else(|| Error::Singular("matrix inverse".into()))
}

pub fn cinverse(a: &CMat) -> Result<CMat> {
    a.clone().try_inverse().ok_or_else(|| Error::Singular("complex matrix inverse".into()))
}

/// Least-squares solution of `a x = b` through the SVD.
pub fn lstsq(a: &RMat, b: &RVec) -> Result<RVec> {
    a.clone().svd(true, true).solve(b, 1e-13).map_err(|e| Error::Singular(alloc::string::ToString::to_string(e)))
}
