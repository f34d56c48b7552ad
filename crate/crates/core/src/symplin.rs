//! Pointwise symplectic linear algebra: ω₀, compatible complex structures,
//! Siegel coordinates and the vertical space m_j.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{cinverse, complexify, herm_eigenvalues, max_abs, real_part, sym_eigenvalues, CMat, RMat, RVec};

const I: C64 = C64::new(0.0, 1.0);

/// The standard form `ω₀ = Σ dxᵢ ∧ dyᵢ` on ℝ²ⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SympForm {
    n: usize,
}

impl SympForm {
    pub fn new(n: usize) -> Self {
        SympForm { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> RMat {
        omega(self.n)
    }

    pub fn eval(&self, u: &RVec, v: &RVec) -> f64 {
        omega_pair(u, v)
    }
}

/// The matrix Ω with `ω(u, v) = uᵀ Ω v`.
pub fn omega(n: usize) -> RMat {
    let mut m = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(2 * i, 2 * i + 1)] = 1.0;
        m[(2 * i + 1, 2 * i)] = -1.0;
    }
    m
}

pub fn omega_pair(u: &RVec, v: &RVec) -> f64 {
    let mut s = 0.0;
    for i in 0..u.len() / 2 {
        s += u[2 * i] * v[2 * i + 1] - u[2 * i + 1] * v[2 * i];
    }
    s
}

/// The standard complex structure `J₀` (`J₀∂x = ∂y`).
pub fn j0(n: usize) -> RMat {
    let mut m = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(2 * i + 1, 2 * i)] = 1.0;
        m[(2 * i, 2 * i + 1)] = -1.0;
    }
    m
}

/// A compatible complex structure of the positive (Siegel) component.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatJ {
    j: RMat,
    siegel: CMat,
}

/// Result of the Siegel-domain test `1 − WW* > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub inside: bool,
    pub margin: f64,
}

/// Tests `1 − WW* > 0`; margin is its smallest eigenvalue.
pub fn siegel_membership(w: &CMat) -> Result<Membership> {
    if !w.is_square() {
        return Err(Error::Dimension("Siegel coordinate must be square".into()));
    }
    let asym = (w - w.transpose()).iter().fold(0.0f64, |a, v| a.max(v.norm()));
    if asym > 1e-12 {
        return Err(Error::NotSymmetric(asym));
    }
    let n = w.nrows();
    let h = CMat::identity(n, n) - w * w.adjoint();
    let margin = herm_eigenvalues(&h).first().copied().unwrap_or(1.0);
    Ok(Membership { inside: margin > 0.0, margin })
}

fn real_basis_vectors(n: usize, k: usize) -> (nalgebra::DVector<C64>, nalgebra::DVector<C64>) {
    // (∂z_k, ∂z̄_k) in real coordinates
    let mut dz = nalgebra::DVector::from_element(2 * n, C64::new(0.0, 0.0));
    let mut dzb = dz.clone();
    dz[2 * k] = C64::new(0.5, 0.0);
    dz[2 * k + 1] = C64::new(0.0, -0.5);
    dzb[2 * k] = C64::new(0.5, 0.0);
    dzb[2 * k + 1] = C64::new(0.0, 0.5);
    (dz, dzb)
}

/// Columns `v_k = ∂z̄_k + Σ_l w_kl ∂z_l` followed by their conjugates.
pub(crate) fn eigenframe(w: &CMat) -> CMat {
    let n = w.nrows();
    let mut m = CMat::zeros(2 * n, 2 * n);
    for k in 0..n {
        let (_, dzb) = real_basis_vectors(n, k);
        let mut v = dzb;
        for l in 0..n {
            let (dz, _) = real_basis_vectors(n, l);
            v += dz * w[(k, l)];
        }
        for r in 0..2 * n {
            m[(r, k)] = v[r];
            m[(r, n + k)] = v[r].conj();
        }
    }
    m
}

/// The real j whose −i eigenspace is spanned by the `v_k`.
pub fn fibre_to_matrix(w: &CMat) -> Result<CompatJ> {
    let mem = siegel_membership(w)?;
    if !mem.inside {
        return Err(Error::OutsideSiegel(mem.margin));
    }
    let n = w.nrows();
    let m = eigenframe(w);
    let mut d = CMat::zeros(2 * n, 2 * n);
    for k in 0..n {
        d[(k, k)] = -I;
        d[(n + k, n + k)] = I;
    }
    let j = real_part(&(&m * d * cinverse(&m)?));
    Ok(CompatJ { j, siegel: w.clone() })
}

/// Scalar (n = 1) form of [`fibre_to_matrix`].
pub fn fibre_to_matrix_scalar(w: C64) -> Result<CompatJ> {
    fibre_to_matrix(&CMat::from_element(1, 1, w))
}

fn compat_defects(j: &RMat) -> Result<(f64, f64, f64)> {
    let dim = j.nrows();
    if !j.is_square() || dim % 2 != 0 {
        return Err(Error::Dimension(format!("complex structure must be 2n×2n, got {}×{}", j.nrows(), j.ncols())));
    }
    let om = omega(dim / 2);
    let sq = max_abs(&(j * j + RMat::identity(dim, dim)));
    let sy = max_abs(&(j.transpose() * &om * j - &om));
    let min = sym_eigenvalues(&(&om * j)).first().copied().unwrap_or(0.0);
    Ok((sq, sy, min))
}

/// Siegel coordinate of a compatible j.
pub fn matrix_to_fibre(j: &RMat) -> Result<CMat> {
    let (sq, sy, min) = compat_defects(j)?;
    let scale = max_abs(j).max(1.0);
    let tol = 1e-10 * scale * scale;
    if sq > tol {
        return Err(Error::NotCompatible(format!("j² + 1 residual {sq:e}")));
    }
    if sy > tol {
        return Err(Error::NotCompatible(format!("jᵀΩj − Ω residual {sy:e}")));
    }
    if min <= 1e-10 {
        return Err(Error::Signature(format!("ω(·, j·) is not positive definite (smallest eigenvalue {min:e})")));
    }
    let n = j.nrows() / 2;
    let jm = (CMat::identity(2 * n, 2 * n) + complexify(j) * I) * C64::new(0.5, 0.0);
    let mut a = CMat::zeros(n, n);
    let mut b = CMat::zeros(n, n);
    for k in 0..n {
        let (_, dzb) = real_basis_vectors(n, k);
        let u = &jm * dzb;
        for l in 0..n {
            a[(l, k)] = u[2 * l] + I * u[2 * l + 1];
            b[(l, k)] = u[2 * l] - I * u[2 * l + 1];
        }
    }
    let w = (a * cinverse(&b).map_err(|_| Error::Signature("(0,1) space is not a graph over ∂z̄".into()))?).transpose();
    Ok((&w + w.transpose()) * C64::new(0.5, 0.0))
}

impl CompatJ {
    /// Validates `j` and computes its Siegel coordinate.
    pub fn new(j: RMat) -> Result<Self> {
        let siegel = matrix_to_fibre(&j)?;
        Ok(CompatJ { j, siegel })
    }

    pub fn standard(n: usize) -> Self {
        CompatJ { j: j0(n), siegel: CMat::zeros(n, n) }
    }

    pub fn n(&self) -> usize {
        self.siegel.nrows()
    }

    pub fn matrix(&self) -> &RMat {
        &self.j
    }

    pub fn siegel(&self) -> &CMat {
        &self.siegel
    }

    /// The scalar Siegel coordinate for n = 1.
    pub fn w(&self) -> C64 {
        self.siegel[(0, 0)]
    }

    /// `(‖j²+1‖, ‖jᵀΩj−Ω‖, λ_min(Ωj))`.
    pub fn defects(&self) -> (f64, f64, f64) {
        compat_defects(&self.j).unwrap_or((f64::INFINITY, f64::INFINITY, 0.0))
    }
}

/// `(j⁺, j⁻) = (½(1 − ij), ½(1 + ij))`.
pub fn type_projections(j: &CompatJ) -> (CMat, CMat) {
    let dim = j.j.nrows();
    let id = CMat::identity(dim, dim);
    let cj = complexify(&j.j) * I;
    ((&id - &cj) * C64::new(0.5, 0.0), (&id + &cj) * C64::new(0.5, 0.0))
}

/// `½(A + jAj)`, the part anticommuting with j.
pub fn m_part(a: &RMat, j: &RMat) -> RMat {
    (a + j * a * j) * 0.5
}

/// `½(A − jAj)`, the part commuting with j.
pub fn u_part(a: &RMat, j: &RMat) -> RMat {
    (a - j * a * j) * 0.5
}

/// `½(A + ΩAᵀΩ)`, the projection onto sp.
pub fn sp_part(a: &RMat) -> RMat {
    let om = omega(a.nrows() / 2);
    (a + &om * a.transpose() * &om) * 0.5
}

pub fn sp_residual(a: &RMat) -> f64 {
    let om = omega(a.nrows() / 2);
    max_abs(&(a.transpose() * &om + &om * a))
}

/// `⟨A, B⟩ = ½ Tr(AB)`.
pub fn pair(a: &RMat, b: &RMat) -> f64 {
    0.5 * (a * b).trace()
}

/// An element of m_j.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalMatrix(RMat);

impl VerticalMatrix {
    pub fn new(a: RMat, j: &CompatJ) -> Result<Self> {
        let scale = max_abs(&a).max(1.0) * max_abs(&j.j).max(1.0);
        let sp = sp_residual(&a);
        let ac = max_abs(&(&a * &j.j + &j.j * &a));
        if sp > 1e-10 * scale || ac > 1e-10 * scale {
            return Err(Error::Invalid(format!("not in m_j (sp residual {sp:e}, anticommutator {ac:e})")));
        }
        Ok(VerticalMatrix(a))
    }

    pub fn matrix(&self) -> &RMat {
        &self.0
    }

    pub fn into_matrix(self) -> RMat {
        self.0
    }
}

/// An orthonormal basis of m_j for `½Tr(AB)`, of size n(n+1).
pub fn vertical_basis(j: &CompatJ) -> Vec<VerticalMatrix> {
    let dim = j.j.nrows();
    let om = omega(dim / 2);
    let mut basis: Vec<RMat> = Vec::new();
    for a in 0..dim {
        for b in a..dim {
            let mut s = RMat::zeros(dim, dim);
            s[(a, b)] = 1.0;
            s[(b, a)] = 1.0;
            // sp = {Ω S : S symmetric}
            let mut cand = m_part(&(&om * s), &j.j);
            for e in &basis {
                let c = pair(&cand, e);
                cand -= e * c;
            }
            let nrm = pair(&cand, &cand);
            if nrm > 1e-10 {
                basis.push(cand / nrm.sqrt());
            }
        }
    }
    basis.into_iter().map(VerticalMatrix).collect()
}
