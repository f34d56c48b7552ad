//! Flat connections: parallel frames `g`, the equation `g∘σ = Jac σ`, the
//! Schwarz condition, and translation-invariant flat connections.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64 as C64;

use crate::connection::{real_coeff_matrices, SymplecticConnection};
use crate::error::{Error, Result};
use crate::exprfield::{Expr, Jet};
use crate::linalg::{commutator, inverse, max_abs, RMat, RVec};
use crate::symplin::{omega, sp_residual};

/// A matrix-valued map `g: U → GL(2n, ℝ)`.
#[derive(Debug, Clone)]
pub enum FrameMap {
    /// Entries as expressions, row-major.
    Entries { dim: usize, entries: Vec<Expr> },
    /// `g(x) = exp(−A(x))` for a constant one-form.
    ExpNeg(ConstantOneForm),
}

impl FrameMap {
    pub fn from_entries(dim: usize, entries: Vec<Expr>) -> Result<Self> {
        if entries.len() != dim * dim || entries.iter().any(|e| e.nvars() != dim) {
            return Err(Error::Dimension(format!("frame map needs {} entries over ℝ^{dim}", dim * dim)));
        }
        Ok(FrameMap::Entries { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let entries = (0..dim * dim).map(|k| Expr::real_const(if k / dim == k % dim { 1.0 } else { 0.0 }, dim)).collect();
        FrameMap::Entries { dim, entries }
    }

    pub fn dim(&self) -> usize {
        match self {
            FrameMap::Entries { dim, .. } => *dim,
            FrameMap::ExpNeg(a) => a.dim(),
        }
    }

    /// `g(x)` and `∂_i g(x)`.
    pub fn eval_with_partials(&self, x: &[f64]) -> Result<(RMat, Vec<RMat>)> {
        let d = self.dim();
        match self {
            FrameMap::Entries { entries, .. } => {
                let seed = Jet::seed(x, 1);
                let jets: Vec<Jet> = entries.iter().map(|e| e.eval_scalar(&seed)).collect::<Result<_>>()?;
                let g = RMat::from_fn(d, d, |r, c| jets[r * d + c].value().re);
                let dg = (0..d).map(|i| RMat::from_fn(d, d, |r, c| jets[r * d + c].d1(i).re)).collect();
                Ok((g, dg))
            }
            FrameMap::ExpNeg(a) => {
                let b = a.assemble(&RVec::from_column_slice(x));
                let g = expm(&(-&b));
                let dg = (0..d)
                    .map(|i| {
                        // Fréchet derivative through the block exponential
                        let mut big = RMat::zeros(2 * d, 2 * d);
                        big.view_mut((0, 0), (d, d)).copy_from(&(-&b));
                        big.view_mut((d, d), (d, d)).copy_from(&(-&b));
                        big.view_mut((0, d), (d, d)).copy_from(&(-&a.a[i]));
                        expm(&big).view((0, d), (d, d)).into_owned()
                    })
                    .collect();
                Ok((g, dg))
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<RMat> {
        match self {
            FrameMap::Entries { dim, entries } => {
                let vals: Vec<C64> = entries.iter().map(|e| e.eval(x)).collect::<Result<_>>()?;
                Ok(RMat::from_fn(*dim, *dim, |r, c| vals[r * dim + c].re))
            }
            FrameMap::ExpNeg(a) => Ok(expm(&(-a.assemble(&RVec::from_column_slice(x))))),
        }
    }
}

/// Matrix exponential by scaling and squaring; `1 + B` when `B² ≈ 0`.
pub fn expm(b: &RMat) -> RMat {
    let d = b.nrows();
    let id = RMat::identity(d, d);
    let b2 = b * b;
    if max_abs(&b2) < 1e-14 {
        return id + b;
    }
    let norm = b.iter().fold(0.0f64, |m, v| m.max(v.abs())) * d as f64;
    let mut s = 0u32;
    while norm / (1u64 << s) as f64 > 0.5 && s < 60 {
        s += 1;
    }
    let scaled = b / (1u64 << s) as f64;
    let mut term = id.clone();
    let mut sum = id;
    for k in 1..=18 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// `max_i ‖A_x(∂_i) − (g dg⁻¹)(∂_i)‖` with `g dg⁻¹ = −dg·g⁻¹`.
pub fn frame_flat_residual(conn: &SymplecticConnection, g: &FrameMap, x: &[f64]) -> Result<f64> {
    let a = conn.christoffel(x)?;
    let (gv, dg) = g.eval_with_partials(x)?;
    let ginv = inverse(&gv).map_err(|_| Error::Singular(format!("g({x:?})")))?;
    let mut m: f64 = 0.0;
    for (ai, dgi) in a.iter().zip(&dg) {
        m = m.max(max_abs(&(ai + dgi * &ginv)));
    }
    Ok(m)
}

/// `‖g(σ(x)) − Jac σ(x)‖` in max norm.
pub fn jacobian_equation_residual(sigma: &[Expr], g: &FrameMap, x: &[f64]) -> Result<f64> {
    let d = sigma.len();
    let seed = Jet::seed(x, 1);
    let js: Vec<Jet> = sigma.iter().map(|e| e.eval_scalar(&seed)).collect::<Result<_>>()?;
    let y: Vec<f64> = js.iter().map(|j| j.value().re).collect();
    let jac = RMat::from_fn(d, d, |r, c| js[r].d1(c).re);
    Ok(max_abs(&(g.eval(&y)? - jac)))
}

/// Components `S_{jαβ} = Σ_i ∂_i g_{jα} g_{iβ} − Σ_k ∂_k g_{jβ} g_{kα}`.
pub fn schwarz_components(g: &FrameMap, x: &[f64]) -> Result<Vec<f64>> {
    let (gv, dg) = g.eval_with_partials(x)?;
    let d = gv.nrows();
    let mut out = vec![0.0; d * d * d];
    for j in 0..d {
        for al in 0..d {
            for be in 0..d {
                let mut s = 0.0;
                for i in 0..d {
                    s += dg[i][(j, al)] * gv[(i, be)] - dg[i][(j, be)] * gv[(i, al)];
                }
                out[(j * d + al) * d + be] = s;
            }
        }
    }
    Ok(out)
}

pub fn schwarz_residual(g: &FrameMap, x: &[f64]) -> Result<f64> {
    Ok(schwarz_components(g, x)?.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// A constant `sp(2n)`-valued one-form, `A(x) = Σ xᵢ Aᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantOneForm {
    a: Vec<RMat>,
}

impl ConstantOneForm {
    pub fn new(a: Vec<RMat>) -> Result<Self> {
        let dim = a.len();
        if dim == 0 || dim % 2 != 0 || a.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::Dimension("need 2n matrices of size 2n×2n".into()));
        }
        let scale = a.iter().map(max_abs).fold(1.0, f64::max);
        for (i, m) in a.iter().enumerate() {
            let r = sp_residual(m);
            if r > 1e-12 * scale {
                return Err(Error::NotSymplectic(format!("A(∂{}) ∉ sp (residual {r:e})", i + 1)));
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    if (a[i][(k, j)] - a[j][(k, i)]).abs() > 1e-12 * scale {
                        return Err(Error::Torsion(format!("A(∂{})∂{} ≠ A(∂{})∂{}", i + 1, j + 1, j + 1, i + 1)));
                    }
                }
            }
        }
        Ok(ConstantOneForm { a })
    }

    /// n = 1 form from real coefficients.
    pub fn from_abcd(a: f64, b: f64, c: f64, d: f64) -> Self {
        ConstantOneForm { a: real_coeff_matrices(a, b, c, d).to_vec() }
    }

    /// `ω(A(eᵢ)eⱼ, e_k) = s[i][j][k]` for a totally symmetric `s`.
    pub fn from_symmetric_cubic(n: usize, s: &[f64]) -> Result<Self> {
        let d = 2 * n;
        if s.len() != d * d * d {
            return Err(Error::Dimension("cubic tensor size".into()));
        }
        let om = omega(n);
        let a = (0..d)
            .map(|i| {
                RMat::from_fn(d, d, |k, j| (0..d).map(|m| om[(k, m)] * s[(i * d + j) * d + m]).sum())
            })
            .collect();
        ConstantOneForm::new(a)
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn matrices(&self) -> &[RMat] {
        &self.a
    }

    /// `B = A(x) = Σ xᵢ Aᵢ`.
    pub fn assemble(&self, x: &RVec) -> RMat {
        crate::connection::contract(&self.a, x)
    }

    pub fn connection(&self) -> Result<SymplecticConnection> {
        SymplecticConnection::constant(self.a.clone())
    }

    /// `max ‖[Aᵢ, Aⱼ]‖`, the curvature of `∇⁰ + A`.
    pub fn curvature_norm(&self) -> f64 {
        let mut m: f64 = 0.0;
        for x in &self.a {
            for y in &self.a {
                m = m.max(max_abs(&commutator(x, y)));
            }
        }
        m
    }

    /// `max ‖Aᵢ Aⱼ‖`.
    pub fn product_norm(&self) -> f64 {
        let mut m: f64 = 0.0;
        for x in &self.a {
            for y in &self.a {
                m = m.max(max_abs(&(x * y)));
            }
        }
        m
    }
}

/// Position of `[a:b:c:d]` relative to `{bc − ad = 0, b² − ac = 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurveClass {
    /// Both quadrics vanish.
    pub on_curve: bool,
    /// Proportional to `[0:0:1:0]`.
    pub excluded_point: bool,
    /// Also `c² − bd = 0`: the twisted cubic, i.e. the connection is flat.
    pub flat: bool,
}

pub fn ti_flat_classify(a: f64, b: f64, c: f64, d: f64) -> Result<CurveClass> {
    let nrm = (a * a + b * b + c * c + d * d).sqrt();
    if nrm == 0.0 || !nrm.is_finite() {
        return Err(Error::Invalid("(a, b, c, d) must be a nonzero finite vector".into()));
    }
    let (a, b, c, d) = (a / nrm, b / nrm, c / nrm, d / nrm);
    let tol = 1e-12;
    let on_curve = (b * c - a * d).abs() < tol && (b * b - a * c).abs() < tol;
    let excluded_point = a.abs() < tol && b.abs() < tol && d.abs() < tol;
    let flat = on_curve && (c * c - b * d).abs() < tol;
    Ok(CurveClass { on_curve, excluded_point, flat })
}

/// The map `σ(x) = x − ½A(x)x`, stored as `σ_k(x) = x_k + xᵀ Q_k x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticMap {
    q: Vec<RMat>,
}

impl QuadraticMap {
    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn eval(&self, x: &RVec) -> RVec {
        RVec::from_fn(self.q.len(), |k, _| x[k] + (x.transpose() * &self.q[k] * x)[(0, 0)])
    }

    pub fn jacobian(&self, x: &RVec) -> RMat {
        let d = self.q.len();
        let mut j = RMat::identity(d, d);
        for k in 0..d {
            let row = (&self.q[k] + self.q[k].transpose()) * x;
            for c in 0..d {
                j[(k, c)] += row[c];
            }
        }
        j
    }

    fn exprs_with_sign(&self, sign: f64) -> Vec<Expr> {
        let d = self.q.len();
        (0..d)
            .map(|k| {
                let mut e = Expr::var(k, d);
                for i in 0..d {
                    for j in i..d {
                        let coef = if i == j { self.q[k][(i, i)] } else { self.q[k][(i, j)] + self.q[k][(j, i)] };
                        if coef != 0.0 {
                            e = e + Expr::real_const(sign * coef, d) * Expr::var(i, d) * Expr::var(j, d);
                        }
                    }
                }
                e
            })
            .collect()
    }

    pub fn to_exprs(&self) -> Vec<Expr> {
        self.exprs_with_sign(1.0)
    }

    /// `σ⁻¹(y) = y + ½A(y)y`.
    pub fn inverse_exprs(&self) -> Vec<Expr> {
        self.exprs_with_sign(-1.0)
    }
}

impl fmt::Display for QuadraticMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.q.len();
        for k in 0..d {
            let mut s = format!("x{}", k + 1);
            for i in 0..d {
                for j in i..d {
                    let coef = if i == j { self.q[k][(i, i)] } else { self.q[k][(i, j)] + self.q[k][(j, i)] };
                    if coef == 0.0 {
                        continue;
                    }
                    let mono = if i == j { format!("x{}^2", i + 1) } else { format!("x{}*x{}", i + 1, j + 1) };
                    let sign = if coef < 0.0 { '-' } else { '+' };
                    s.push_str(&format!(" {sign} {}*{mono}", fmt_coef(coef.abs())));
                }
            }
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "sigma{} = {s}", k + 1)?;
        }
        Ok(())
    }
}

fn fmt_coef(v: f64) -> String {
    format!("{v:?}")
}

/// `σ(x) = x − ½A(x)x`, refused unless `A(X)A(Y) = 0` for all basis pairs.
pub fn ti_flat_sigma(a: &ConstantOneForm) -> Result<QuadraticMap> {
    let scale = a.a.iter().map(max_abs).fold(1.0, f64::max);
    for (i, x) in a.a.iter().enumerate() {
        for (j, y) in a.a.iter().enumerate() {
            if max_abs(&commutator(x, y)) > 1e-12 * scale * scale {
                return Err(Error::NotFlat(format!("[A(∂{}), A(∂{})] ≠ 0", i + 1, j + 1)));
            }
            if max_abs(&(x * y)) > 1e-12 * scale * scale {
                return Err(Error::NotFlat(format!("A(X)A(Y) ≠ 0 for (X, Y) = (∂{}, ∂{})", i + 1, j + 1)));
            }
        }
    }
    let d = a.dim();
    // σ_k = x_k − ½ Σ_{i,j} (A_i)_{kj} x_i x_j
    let q = (0..d).map(|k| RMat::from_fn(d, d, |i, j| -0.5 * a.a[i][(k, j)])).collect();
    Ok(QuadraticMap { q })
}
