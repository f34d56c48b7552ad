//! Connections `∇ = ∇⁰ + A` on ℝ²ⁿ and their curvature.
//!
//! `A(∂_i)` is stored as the matrix with `A(∂_i)[k][j] = Γ^k_{ij}`, so that
//! `∇_{∂_i} ∂_j = Σ_k Γ^k_{ij} ∂_k`.

mod jmat;
pub mod presets;

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64 as C64;

pub use jmat::JMat;

use crate::error::{Error, Result};
use crate::exprfield::{Expr, Jet, Predicate};
use crate::linalg::{commutator, max_abs, RMat, RVec};
use crate::symplin::{omega, sp_residual};

/// Where the coefficients of a connection come from.
#[derive(Debug, Clone)]
pub enum CoefficientSource {
    /// Complex coefficients `α, β` (n = 1).
    AlphaBeta { alpha: Expr, beta: Expr },
    /// Real coefficients `a, b, c, d` (n = 1).
    RealCoeffs { a: Expr, b: Expr, c: Expr, d: Expr },
    /// Constant matrices `A(∂_i)`.
    ConstantA(Vec<RMat>),
    /// Christoffel symbols `gamma[k][i][j] = Γ^k_{ij}`, checked to be symplectic.
    GeneralGamma(Vec<Vec<Vec<Expr>>>),
    /// Christoffel symbols of an arbitrary linear connection, unchecked.
    LinearGamma(Vec<Vec<Vec<Expr>>>),
    /// `σ·∇` for a diffeomorphism σ with inverse `sigma_inv`.
    Pushforward { sigma: Vec<Expr>, sigma_inv: Vec<Expr>, base: Box<SymplecticConnection> },
}

/// A linear connection on ℝ²ⁿ written as `∇⁰ + A`.
#[derive(Debug, Clone)]
pub struct SymplecticConnection {
    n: usize,
    source: CoefficientSource,
    domain: Option<Predicate>,
    sample_box: Vec<(f64, f64)>,
    label: Option<String>,
}

/// `A`, `∂A` and `∂²A` at one point.
#[derive(Debug, Clone)]
pub struct ConnectionJet {
    /// `a[i] = A(∂_i)`.
    pub a: Vec<RMat>,
    /// `da[l][i] = ∂_l A(∂_i)`.
    pub da: Vec<Vec<RMat>>,
    /// `dda[l][m][i] = ∂_l ∂_m A(∂_i)`.
    pub dda: Vec<Vec<Vec<RMat>>>,
}

/// Dense 4-tensor on ℝ^dim.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Self {
        Tensor4 { dim, data: vec![0.0; dim * dim * dim * dim] }
    }

    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.dim + b) * self.dim + c) * self.dim + d
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let i = self.idx(a, b, c, d);
        self.data[i] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, o: &Tensor4) -> Tensor4 {
        Tensor4 { dim: self.dim, data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() }
    }

    /// Evaluates on four vectors.
    pub fn eval(&self, x: &RVec, y: &RVec, z: &RVec, t: &RVec) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for a in 0..d {
            for b in 0..d {
                let xy = x[a] * y[b];
                if xy == 0.0 {
                    continue;
                }
                for c in 0..d {
                    for e in 0..d {
                        s += xy * z[c] * t[e] * self.get(a, b, c, e);
                    }
                }
            }
        }
        s
    }

    /// The Ricci-type contraction `Σ_{k,t} T(X, e_k, Y, e_t) (Ω⁻¹)_{tk}`.
    pub fn ricci_trace(&self) -> RMat {
        let d = self.dim;
        let om_inv = -omega(d / 2);
        RMat::from_fn(d, d, |x, y| {
            let mut s = 0.0;
            for k in 0..d {
                for t in 0..d {
                    s += self.get(x, k, y, t) * om_inv[(t, k)];
                }
            }
            s
        })
    }
}

/// Curvature data at a point.
#[derive(Debug, Clone)]
pub struct CurvatureValue {
    /// `r[i][j] = R(∂_i, ∂_j)`.
    pub r: Vec<Vec<RMat>>,
    /// `R̲(X,Y,Z,T) = ω(R(X,Y)Z, T)`.
    pub lowered: Tensor4,
    pub ricci: RMat,
    pub e: Tensor4,
    pub w: Tensor4,
}

/// Complex coefficients from real ones:
/// `α = −(b+d)/4 − i(a+c)/4`, `β = (3b−d)/4 − i(3c−a)/4`.
pub fn real_to_complex(a: &Expr, b: &Expr, c: &Expr, d: &Expr) -> (Expr, Expr) {
    let nv = a.nvars();
    let k = |v: f64| Expr::real_const(v, nv);
    let ki = |v: f64| Expr::constant(C64::new(0.0, v), nv);
    let alpha = k(-0.25) * (b.clone() + d.clone()) + ki(-0.25) * (a.clone() + c.clone());
    let beta = k(0.25) * (k(3.0) * b.clone() - d.clone()) + ki(-0.25) * (k(3.0) * c.clone() - a.clone());
    (alpha, beta)
}

/// Inverse of [`real_to_complex`].
pub fn complex_to_real(alpha: &Expr, beta: &Expr) -> [Expr; 4] {
    let nv = alpha.nvars();
    let k = |v: f64| Expr::real_const(v, nv);
    let (ar, ai, br, bi) = (alpha.re(), alpha.im(), beta.re(), beta.im());
    [
        k(-3.0) * ai.clone() + bi.clone(),
        br.clone() - ar.clone(),
        -ai - bi,
        k(-3.0) * ar - br,
    ]
}

/// Numeric form of [`real_to_complex`].
pub fn real_to_complex_values(a: f64, b: f64, c: f64, d: f64) -> (C64, C64) {
    (C64::new(-(b + d) / 4.0, -(a + c) / 4.0), C64::new((3.0 * b - d) / 4.0, -(3.0 * c - a) / 4.0))
}

/// Numeric form of [`complex_to_real`].
pub fn complex_to_real_values(alpha: C64, beta: C64) -> [f64; 4] {
    [-3.0 * alpha.im + beta.im, beta.re - alpha.re, -alpha.im - beta.im, -3.0 * alpha.re - beta.re]
}

/// `A(∂x)`, `A(∂y)` for real coefficients.
pub fn real_coeff_matrices(a: f64, b: f64, c: f64, d: f64) -> [RMat; 2] {
    [RMat::from_row_slice(2, 2, &[b, c, -a, -b]), RMat::from_row_slice(2, 2, &[c, d, -b, -c])]
}

fn real_coeff_jets(a: &Jet, b: &Jet, c: &Jet, d: &Jet) -> Vec<JMat> {
    let ax = JMat { dim: 2, e: vec![b.clone(), c.clone(), -a, -b] };
    let ay = JMat { dim: 2, e: vec![c.clone(), d.clone(), -b, -c] };
    vec![ax, ay]
}

fn halton(i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut k = i;
    while k > 0 {
        f /= base as f64;
        r += f * (k % base) as f64;
        k /= base;
    }
    r
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

impl SymplecticConnection {
    fn raw(n: usize, source: CoefficientSource) -> Self {
        SymplecticConnection { n, source, domain: None, sample_box: vec![(-1.0, 1.0); 2 * n], label: None }
    }

    pub fn trivial(n: usize) -> Self {
        Self::raw(n, CoefficientSource::ConstantA(vec![RMat::zeros(2 * n, 2 * n); 2 * n]))
    }

    /// `∇∂z∂z = α∂z + β∂z̄`.
    pub fn from_alpha_beta(alpha: Expr, beta: Expr) -> Result<Self> {
        if alpha.nvars() != 2 || beta.nvars() != 2 {
            return Err(Error::Dimension("α, β must be fields on ℝ²".into()));
        }
        Ok(Self::raw(1, CoefficientSource::AlphaBeta { alpha, beta }))
    }

    pub fn from_real_coeffs(a: Expr, b: Expr, c: Expr, d: Expr) -> Result<Self> {
        if [&a, &b, &c, &d].iter().any(|e| e.nvars() != 2) {
            return Err(Error::Dimension("a, b, c, d must be fields on ℝ²".into()));
        }
        Ok(Self::raw(1, CoefficientSource::RealCoeffs { a, b, c, d }))
    }

    /// Constant `A(∂_i)`; rejected unless torsion-free and symplectic.
    pub fn constant(a: Vec<RMat>) -> Result<Self> {
        let dim = a.len();
        if dim % 2 != 0 || a.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::Dimension("need 2n matrices of size 2n×2n".into()));
        }
        let conn = Self::raw(dim / 2, CoefficientSource::ConstantA(a));
        conn.validate_at(&RVec::zeros(dim))?;
        Ok(conn)
    }

    /// General Christoffel symbols, validated at probe points.
    pub fn from_gamma(gamma: Vec<Vec<Vec<Expr>>>) -> Result<Self> {
        let conn = Self::raw(Self::gamma_dim(&gamma)? / 2, CoefficientSource::GeneralGamma(gamma));
        conn.validate()?;
        Ok(conn)
    }

    /// Christoffel symbols of any linear connection; no validation.
    pub fn linear(gamma: Vec<Vec<Vec<Expr>>>) -> Result<Self> {
        Ok(Self::raw(Self::gamma_dim(&gamma)? / 2, CoefficientSource::LinearGamma(gamma)))
    }

    fn gamma_dim(gamma: &[Vec<Vec<Expr>>]) -> Result<usize> {
        let dim = gamma.len();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::Dimension("Γ must be indexed over an even dimension".into()));
        }
        for row in gamma {
            if row.len() != dim || row.iter().any(|r| r.len() != dim || r.iter().any(|e| e.nvars() != dim)) {
                return Err(Error::Dimension(format!("Γ must be {dim}×{dim}×{dim} fields over ℝ^{dim}")));
            }
        }
        Ok(dim)
    }

    pub fn with_domain(mut self, domain: Predicate) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_sample_box(mut self, bx: Vec<(f64, f64)>) -> Self {
        self.sample_box = bx;
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn source(&self) -> &CoefficientSource {
        &self.source
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn domain(&self) -> Option<&Predicate> {
        self.domain.as_ref()
    }

    pub fn sample_box(&self) -> &[(f64, f64)] {
        &self.sample_box
    }

    /// True when the coefficients are constant.
    pub fn is_constant(&self) -> bool {
        matches!(self.source, CoefficientSource::ConstantA(_))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if let Some(d) = &self.domain {
            if !d.contains(x) {
                return false;
            }
        }
        if let CoefficientSource::Pushforward { sigma_inv, base, .. } = &self.source {
            let pre: Option<Vec<f64>> = sigma_inv.iter().map(|e| e.eval(x).ok().map(|v| v.re)).collect();
            return match pre {
                Some(p) => base.contains(&p),
                None => false,
            };
        }
        true
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!("point has {} coordinates, expected {}", x.len(), self.dim())));
        }
        if !self.contains(x) {
            let what = self.domain.as_ref().map(|d| d.text()).unwrap_or("image of the pushforward");
            return Err(Error::OutsideDomain(format!("{x:?} violates `{what}`")));
        }
        Ok(())
    }

    /// Deterministic quasi-random points of the sample box inside the domain.
    pub fn probe_points(&self, count: usize) -> Vec<RVec> {
        let mut out = Vec::new();
        let mut i = 1;
        while out.len() < count && i < 50 * count + 100 {
            let p: Vec<f64> = self
                .sample_box
                .iter()
                .enumerate()
                .map(|(k, (lo, hi))| lo + (hi - lo) * halton(i, PRIMES[k % PRIMES.len()]))
                .collect();
            if self.contains(&p) {
                out.push(RVec::from_vec(p));
            }
            i += 1;
        }
        out
    }

    /// Torsion and symplecticity checks at probe points.
    pub fn validate(&self) -> Result<()> {
        for p in self.probe_points(8) {
            self.validate_at(&p)?;
        }
        Ok(())
    }

    fn validate_at(&self, x: &RVec) -> Result<()> {
        let t = self.torsion_residual(x.as_slice())?;
        if t > 1e-9 {
            return Err(Error::Torsion(format!("residual {t:e} at {:?}", x.as_slice())));
        }
        let s = self.symplectic_residual(x.as_slice())?;
        if s > 1e-9 {
            return Err(Error::NotSymplectic(format!("residual {s:e} at {:?}", x.as_slice())));
        }
        Ok(())
    }

    /// `A(∂_i)` as jets in the given inputs (chain rule through the inputs).
    pub fn a_composed(&self, inputs: &[Jet]) -> Result<Vec<JMat>> {
        let layout = inputs
            .first()
            .map(|j| j.layout().clone())
            .ok_or_else(|| Error::Dimension("no inputs".into()))?;
        match &self.source {
            CoefficientSource::AlphaBeta { alpha, beta } => {
                let al = alpha.eval_scalar(inputs)?;
                let be = beta.eval_scalar(inputs)?;
                let (ar, ai, br, bi) = (al.re(), al.im(), be.re(), be.im());
                let a = &ai.scale(C64::new(-3.0, 0.0)) + &bi;
                let b = &br - &ar;
                let c = -(&ai + &bi);
                let d = &ar.scale(C64::new(-3.0, 0.0)) - &br;
                Ok(real_coeff_jets(&a, &b, &c, &d))
            }
            CoefficientSource::RealCoeffs { a, b, c, d } => {
                let ev = |e: &Expr| e.eval_scalar(inputs).map(|j| j.re());
                Ok(real_coeff_jets(&ev(a)?, &ev(b)?, &ev(c)?, &ev(d)?))
            }
            CoefficientSource::ConstantA(ms) => Ok(ms.iter().map(|m| JMat::from_real(&layout, m)).collect()),
            CoefficientSource::GeneralGamma(g) | CoefficientSource::LinearGamma(g) => {
                let dim = g.len();
                let mut out = Vec::with_capacity(dim);
                for i in 0..dim {
                    let mut m = JMat::zeros(&layout, dim);
                    for (k, gk) in g.iter().enumerate() {
                        for j in 0..dim {
                            m.set(k, j, gk[i][j].eval_scalar(inputs)?.re());
                        }
                    }
                    out.push(m);
                }
                Ok(out)
            }
            CoefficientSource::Pushforward { .. } => {
                Err(Error::Invalid("a pushforward connection cannot be composed with further maps".into()))
            }
        }
    }

    /// `A(∂_i)` as jets of the given order at `x`.
    pub fn a_jets(&self, x: &[f64], order: usize) -> Result<Vec<JMat>> {
        self.check_point(x)?;
        match &self.source {
            CoefficientSource::Pushforward { sigma_inv, base, .. } => {
                let y = Jet::seed(x, order + 2);
                let xs: Vec<Jet> = sigma_inv.iter().map(|e| e.eval_scalar(&y).map(|j| j.re())).collect::<Result<_>>()?;
                let dim = self.dim();
                let layout = y[0].layout().clone();
                // K = Jac σ⁻¹ (order+1), ∂_i K (order)
                let mut k = JMat::zeros(&layout, dim);
                for a in 0..dim {
                    for i in 0..dim {
                        k.set(a, i, xs[a].deriv(i));
                    }
                }
                let kinv = k.inverse()?;
                let base_a = base.a_composed(&xs)?;
                let mut out = Vec::with_capacity(dim);
                for i in 0..dim {
                    let mut s = JMat::zeros(&layout, dim);
                    for (a, ba) in base_a.iter().enumerate() {
                        s = s.add(&ba.scale_by(k.at(a, i)));
                    }
                    let dk = k.map(|e| e.deriv(i));
                    let m = kinv.mul(&s.mul(&k)).add(&kinv.mul(&dk));
                    out.push(m.map(|e| e.truncate(order)));
                }
                Ok(out)
            }
            _ => self.a_composed(&Jet::seed(x, order)),
        }
    }

    /// `A`, `∂A`, `∂²A` at `x`.
    pub fn jet(&self, x: &[f64], order: usize) -> Result<ConnectionJet> {
        let js = self.a_jets(x, order)?;
        let dim = self.dim();
        let a = js.iter().map(JMat::value).collect();
        let da = if order >= 1 { (0..dim).map(|l| js.iter().map(|m| m.d1(l)).collect()).collect() } else { Vec::new() };
        let dda = if order >= 2 {
            (0..dim).map(|l| (0..dim).map(|m| js.iter().map(|j| j.d2(l, m)).collect()).collect()).collect()
        } else {
            Vec::new()
        };
        Ok(ConnectionJet { a, da, dda })
    }

    /// `A_x(∂_i)` for every coordinate direction.
    pub fn christoffel(&self, x: &[f64]) -> Result<Vec<RMat>> {
        Ok(self.jet(x, 0)?.a)
    }

    /// `A_x(X) = Σ X_i A_x(∂_i)`.
    pub fn a_of(&self, x: &[f64], v: &RVec) -> Result<RMat> {
        Ok(contract(&self.christoffel(x)?, v))
    }

    /// `max |A(∂_i)∂_j − A(∂_j)∂_i|`.
    pub fn torsion_residual(&self, x: &[f64]) -> Result<f64> {
        let a = self.christoffel(x)?;
        let d = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    m = m.max((a[i][(k, j)] - a[j][(k, i)]).abs());
                }
            }
        }
        Ok(m)
    }

    /// Deviation of `ω(A(X)Y, Z)` from total symmetry.
    pub fn symplectic_residual(&self, x: &[f64]) -> Result<f64> {
        let a = self.christoffel(x)?;
        let s = lowered_a(&a);
        let d = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let v = s[(i * d + j) * d + k];
                    m = m.max((v - s[(j * d + i) * d + k]).abs());
                    m = m.max((v - s[(i * d + k) * d + j]).abs());
                }
            }
        }
        Ok(m)
    }

    /// `max_i ‖A(∂_i)ᵀΩ + ΩA(∂_i)‖`.
    pub fn sp_residual(&self, x: &[f64]) -> Result<f64> {
        Ok(self.christoffel(x)?.iter().map(sp_residual).fold(0.0, f64::max))
    }

    /// `R(∂_i, ∂_j) = ∂_i A_j − ∂_j A_i + [A_i, A_j]` for all pairs.
    pub fn curvature_matrices(&self, x: &[f64]) -> Result<Vec<Vec<RMat>>> {
        let cj = self.jet(x, 1)?;
        Ok(curvature_from_jet(&cj))
    }

    /// `R(X, Y)` for arbitrary base vectors.
    pub fn curvature_endo(&self, x: &[f64], u: &RVec, v: &RVec) -> Result<RMat> {
        Ok(bilinear(&self.curvature_matrices(x)?, u, v))
    }

    /// Full curvature data including the Ricci decomposition.
    pub fn curvature(&self, x: &[f64]) -> Result<CurvatureValue> {
        let r = self.curvature_matrices(x)?;
        Ok(decompose(r, self.n))
    }

    /// `(r, E, W)`.
    pub fn ricci_decomposition(&self, x: &[f64]) -> Result<(RMat, Tensor4, Tensor4)> {
        let c = self.curvature(x)?;
        Ok((c.ricci, c.e, c.w))
    }

    /// `max |𝔖_{X,Y,Z} (∇_X r)(Y,Z)|` over coordinate triples.
    pub fn field_eq_residual(&self, x: &[f64]) -> Result<f64> {
        let cj = self.jet(x, 2)?;
        let d = self.dim();
        let r = curvature_from_jet(&cj);
        let ric = ricci_of(&r);
        // ∂_l R_ij
        let mut dric = Vec::with_capacity(d);
        for l in 0..d {
            let mut dr = vec![vec![RMat::zeros(d, d); d]; d];
            for i in 0..d {
                for j in 0..d {
                    dr[i][j] = &cj.dda[l][i][j] - &cj.dda[l][j][i]
                        + commutator(&cj.da[l][i], &cj.a[j])
                        + commutator(&cj.a[i], &cj.da[l][j]);
                }
            }
            dric.push(ricci_of(&dr));
        }
        let nabla_r = |i: usize, j: usize, k: usize| {
            let mut v = dric[i][(j, k)];
            for l in 0..d {
                v -= cj.a[i][(l, j)] * ric[(l, k)] + cj.a[i][(l, k)] * ric[(j, l)];
            }
            v
        };
        let mut m: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    m = m.max((nabla_r(i, j, k) + nabla_r(j, k, i) + nabla_r(k, i, j)).abs());
                }
            }
        }
        Ok(m)
    }

    /// Reads back `(α, β)` from `A` (n = 1, symplectic connections).
    pub fn alpha_beta_at(&self, x: &[f64]) -> Result<(C64, C64)> {
        if self.n != 1 {
            return Err(Error::Dimension("α, β are defined for n = 1".into()));
        }
        let a = self.christoffel(x)?;
        Ok(real_to_complex_values(-a[0][(1, 0)], a[0][(0, 0)], a[0][(0, 1)], a[1][(0, 1)]))
    }
}

/// `σ·∇`: the connection `(σ·∇)_X Y = σ·(∇_{σ⁻¹·X} σ⁻¹·Y)` on the image of σ.
pub fn pullback(sigma: Vec<Expr>, sigma_inv: Vec<Expr>, conn: &SymplecticConnection) -> Result<SymplecticConnection> {
    let dim = conn.dim();
    if sigma.len() != dim || sigma_inv.len() != dim {
        return Err(Error::Invalid(format!("σ and σ⁻¹ need {dim} components each")));
    }
    if sigma.iter().chain(&sigma_inv).any(|e| e.nvars() != dim) {
        return Err(Error::Dimension("σ components must be fields over the base".into()));
    }
    if matches!(conn.source, CoefficientSource::Pushforward { .. }) {
        return Err(Error::Invalid("nested pushforwards are not supported".into()));
    }
    let mut out = SymplecticConnection::raw(conn.n, CoefficientSource::Pushforward { sigma, sigma_inv, base: Box::new(conn.clone()) });
    out.sample_box = conn.sample_box.clone();
    Ok(out)
}

/// `Σ v_i m_i`.
pub fn contract(ms: &[RMat], v: &RVec) -> RMat {
    let d = ms[0].nrows();
    let mut out = RMat::zeros(d, d);
    for (m, c) in ms.iter().zip(v.iter()) {
        if *c != 0.0 {
            out += m * *c;
        }
    }
    out
}

/// `Σ u_i v_j r[i][j]`.
pub fn bilinear(r: &[Vec<RMat>], u: &RVec, v: &RVec) -> RMat {
    let d = r.len();
    let mut out = RMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let c = u[i] * v[j];
            if c != 0.0 {
                out += &r[i][j] * c;
            }
        }
    }
    out
}

fn lowered_a(a: &[RMat]) -> Vec<f64> {
    let d = a.len();
    let om = omega(d / 2);
    let mut s = vec![0.0; d * d * d];
    for i in 0..d {
        let m = om.transpose() * &a[i];
        // (A_i e_j)ᵀ Ω e_k = (Ωᵀ A_i)[k][j]
        for j in 0..d {
            for k in 0..d {
                s[(i * d + j) * d + k] = m[(k, j)];
            }
        }
    }
    s
}

pub(crate) fn curvature_from_jet(cj: &ConnectionJet) -> Vec<Vec<RMat>> {
    let d = cj.a.len();
    let mut r = vec![vec![RMat::zeros(d, d); d]; d];
    for i in 0..d {
        for j in 0..d {
            r[i][j] = &cj.da[i][j] - &cj.da[j][i] + commutator(&cj.a[i], &cj.a[j]);
        }
    }
    r
}

fn ricci_of(r: &[Vec<RMat>]) -> RMat {
    let d = r.len();
    RMat::from_fn(d, d, |a, b| (0..d).map(|k| r[a][k][(k, b)]).sum())
}

/// Lowered curvature, Ricci tensor and the `E + W` splitting.
pub fn decompose(r: Vec<Vec<RMat>>, n: usize) -> CurvatureValue {
    let d = 2 * n;
    let om = omega(n);
    let mut lowered = Tensor4::zeros(d);
    for x in 0..d {
        for y in 0..d {
            let m = om.transpose() * &r[x][y];
            for z in 0..d {
                for t in 0..d {
                    lowered.set(x, y, z, t, m[(t, z)]);
                }
            }
        }
    }
    let ricci = ricci_of(&r);
    let w_ = |a: usize, b: usize| om[(a, b)];
    let f = -1.0 / (2.0 * (n as f64 + 1.0));
    let mut e = Tensor4::zeros(d);
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                for t in 0..d {
                    let v = 2.0 * w_(x, y) * ricci[(z, t)] + w_(x, z) * ricci[(y, t)] + w_(x, t) * ricci[(y, z)]
                        - w_(y, z) * ricci[(x, t)]
                        - w_(y, t) * ricci[(x, z)];
                    e.set(x, y, z, t, f * v);
                }
            }
        }
    }
    let w = lowered.sub(&e);
    CurvatureValue { r, lowered, ricci, e, w }
}

/// Maximum entry of all curvature matrices.
pub fn curvature_norm(r: &[Vec<RMat>]) -> f64 {
    r.iter().flat_map(|row| row.iter()).map(max_abs).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests;
