//! Exhaustion functions and Levi forms on Z⁰ over ℝ² with the flat connection,
//! in the global holomorphic chart `(ξ, w) = (wz̄ − z, w)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use num_complex::Complex64 as C64;

use crate::connection::SymplecticConnection;
use crate::error::{Error, Result};
use crate::exprfield::{eval_jet, Expr, FieldValue, VarScheme};
use crate::linalg::{herm_eigenvalues, CMat};

/// Eigenvalues above this (after scaling to unit max entry) count as positive.
pub const POSITIVITY_THRESHOLD: f64 = 1e-9;

/// Oka's function `−log(ε² − ‖x‖²)` on the ball of radius `ε`.
pub fn oka_phi(eps: f64, x: &[f64]) -> Result<f64> {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let gap = eps * eps - r2;
    if !(gap > 0.0) {
        return Err(Error::OutsideDomain(format!("‖x‖² = {r2} is not below ε² = {}", eps * eps)));
    }
    Ok(-gap.ln())
}

/// Oka's function as a base expression in `x, y`.
pub fn oka_expr(eps: f64) -> Result<Expr> {
    Expr::parse_with(&format!("-log({:?} - x^2 - y^2)", eps * eps), &VarScheme::base(1))
}

fn disk_check(w: C64) -> Result<()> {
    if !(w.norm_sqr() < 1.0) {
        return Err(Error::OutsideSiegel(w.norm()));
    }
    Ok(())
}

fn mobius(w: C64, w_ref: C64) -> C64 {
    (w - w_ref) / (C64::new(1.0, 0.0) - w_ref.conj() * w)
}

/// Squared Poincaré distance `artanh²(|w − w₀| / |1 − w̄₀w|)`.
pub fn fibre_distance_sq(w: C64, w_ref: C64) -> Result<f64> {
    disk_check(w)?;
    disk_check(w_ref)?;
    Ok(mobius(w, w_ref).norm().atanh().powi(2))
}

/// `4∂²h/∂w∂w̄` for `h = artanh²|w|`.
fn fibre_levi_at_origin_chart(u: C64) -> f64 {
    let r = u.norm();
    let a = r.atanh();
    let a_over_r = if r < 1e-4 { 1.0 + r * r / 3.0 } else { a / r };
    let s = 1.0 - r * r;
    (2.0 + 4.0 * a * r) / (s * s) + 2.0 * a_over_r / s
}

/// `4∂²h/∂w∂w̄` for `h = fibre_distance_sq(·, w_ref)`.
pub fn fibre_levi(w: C64, w_ref: C64) -> Result<f64> {
    disk_check(w)?;
    disk_check(w_ref)?;
    let d = C64::new(1.0, 0.0) - w_ref.conj() * w;
    let dm = (1.0 - w_ref.norm_sqr()) / d.norm_sqr();
    Ok(fibre_levi_at_origin_chart(mobius(w, w_ref)) * dm * dm)
}

/// `artanh²(√s)` with its first and second derivatives in `s`.
fn atanh_sq_derivs(s: f64) -> [f64; 3] {
    // q = artanh(√s)/√s
    let (q, dq) = if s < 1e-4 {
        (1.0 + s / 3.0 + s * s / 5.0 + s * s * s / 7.0, 1.0 / 3.0 + 2.0 * s / 5.0 + 3.0 * s * s / 7.0)
    } else {
        let q = s.sqrt().atanh() / s.sqrt();
        (q, (1.0 / (1.0 - s) - q) / (2.0 * s))
    };
    let u = 1.0 / (1.0 - s);
    [s * q * q, q * u, dq * u + q * u * u]
}

/// `ξ = wz̄ − z`.
pub fn xi_of(z: C64, w: C64) -> C64 {
    w * z.conj() - z
}

/// `z = −(ξ + wξ̄)/(1 − |w|²)`.
pub fn z_of(xi: C64, w: C64) -> Result<C64> {
    disk_check(w)?;
    Ok(-(xi + w * xi.conj()) / (1.0 - w.norm_sqr()))
}

/// `ψ = c·h + φ∘π + f`, with `h` the squared fibre distance to a reference
/// section (constant `w_ref`, or `section(z)` when set), `φ` a base function in
/// `x, y` and `f` a function of `ξ, w`.
#[derive(Debug, Clone)]
pub struct ExhaustionSpec {
    pub base: Option<Expr>,
    pub chart: Option<Expr>,
    pub fibre_weight: f64,
    pub w_ref: C64,
    pub section: Option<Expr>,
    pub label: String,
}

impl ExhaustionSpec {
    /// `h` alone, reference section `w ≡ 0`.
    pub fn fibre_only() -> Self {
        ExhaustionSpec { base: None, chart: None, fibre_weight: 1.0, w_ref: C64::new(0.0, 0.0), section: None, label: "h".into() }
    }

    /// `h + φ∘π`.
    pub fn with_base(phi: Expr) -> Result<Self> {
        if phi.nvars() != 2 {
            return Err(Error::Dimension(format!("base function must be on ℝ², got {} variables", phi.nvars())));
        }
        Ok(ExhaustionSpec { base: Some(phi), label: "h + phi o pi".into(), ..Self::fibre_only() })
    }

    /// `h + Oka_ε∘π`.
    pub fn oka(eps: f64) -> Result<Self> {
        let mut s = Self::with_base(oka_expr(eps)?)?;
        s.label = format!("h + oka({eps}) o pi");
        Ok(s)
    }

    /// A function of `ξ, w` only, without `h`.
    pub fn chart_function(f: Expr) -> Result<Self> {
        if f.nvars() != 4 {
            return Err(Error::Dimension(format!("chart function needs 4 real variables, got {}", f.nvars())));
        }
        Ok(ExhaustionSpec { base: None, chart: Some(f), fibre_weight: 0.0, w_ref: C64::new(0.0, 0.0), section: None, label: "f(xi, w)".into() })
    }

    /// `|ξ|² + h`.
    pub fn stein() -> Result<Self> {
        let f = Expr::parse_with("xi*xib", &VarScheme::levi())?;
        Ok(ExhaustionSpec { base: None, chart: Some(f), fibre_weight: 1.0, w_ref: C64::new(0.0, 0.0), section: None, label: "|xi|^2 + h".into() })
    }

    pub fn with_reference(mut self, w_ref: C64) -> Result<Self> {
        disk_check(w_ref)?;
        self.w_ref = w_ref;
        Ok(self)
    }

    /// Reference section `z ↦ w(z)` given as a base expression in `x, y`.
    pub fn with_section(mut self, section: Expr) -> Result<Self> {
        if section.nvars() != 2 {
            return Err(Error::Dimension(format!("section must be on ℝ², got {} variables", section.nvars())));
        }
        self.section = Some(section);
        Ok(self)
    }

    fn reference_at(&self, z: C64) -> Result<C64> {
        match &self.section {
            Some(e) => {
                let r = e.eval(&[z.re, z.im])?;
                disk_check(r)?;
                Ok(r)
            }
            None => Ok(self.w_ref),
        }
    }

    /// `|m|²` for the Möbius ratio `m = (w − w₀(z))/(1 − w̄₀(z)w)` in the `(ξ, w)` chart.
    fn section_ratio(&self) -> Result<Option<Expr>> {
        let Some(sec) = &self.section else { return Ok(None) };
        let sch = VarScheme::levi();
        let z = Expr::parse_with("-(xi + w*xib)/(1 - w*wb)", &sch)?;
        let r = sec.substitute(&[z.re(), z.im()])?;
        let w = Expr::parse_with("w", &sch)?;
        let one = Expr::real_const(1.0, 4);
        let m = (w.clone() - r.clone()) / (one - r.conj() * w);
        Ok(Some(m.clone() * m.conj()))
    }

    /// All expression terms of `ψ` as one function of `(Re ξ, Im ξ, Re w, Im w)`.
    fn chart_terms(&self) -> Result<Option<Expr>> {
        let mut acc: Option<Expr> = self.chart.clone();
        if let Some(phi) = &self.base {
            let z = Expr::parse_with("-(xi + w*xib)/(1 - w*wb)", &VarScheme::levi())?;
            let pulled = phi.substitute(&[z.re(), z.im()])?;
            acc = Some(match acc {
                Some(a) => a + pulled,
                None => pulled,
            });
        }
        Ok(acc)
    }

    /// `ψ` at `(z, w)`.
    pub fn value(&self, z: C64, w: C64) -> Result<f64> {
        let mut v = 0.0;
        if self.fibre_weight != 0.0 {
            v += self.fibre_weight * fibre_distance_sq(w, self.reference_at(z)?)?;
        }
        if let Some(phi) = &self.base {
            v += phi.eval(&[z.re, z.im])?.re;
        }
        if let Some(f) = &self.chart {
            let xi = xi_of(z, w);
            v += f.eval(&[xi.re, xi.im, w.re, w.im])?.re;
        }
        Ok(v)
    }
}

/// The Levi form at one chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct LeviValue {
    pub matrix: CMat,
    pub eigenvalues: Vec<f64>,
    pub positive: usize,
}

impl LeviValue {
    pub fn from_matrix(matrix: CMat) -> Self {
        let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let mut eigenvalues = herm_eigenvalues(&matrix);
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
        let positive = if scale == 0.0 { 0 } else { eigenvalues.iter().filter(|&&e| e / scale > POSITIVITY_THRESHOLD).count() };
        LeviValue { matrix, eigenvalues, positive }
    }

    /// `max |L_ij − conj(L_ji)|`.
    pub fn hermitian_residual(&self) -> f64 {
        let m = &self.matrix;
        let mut r: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        r
    }
}

/// `4∂²f/∂ζ_i∂ζ̄_j` for `f` in the `(ξ, w)` chart at `ζ = (ξ, w)`.
pub fn levi_form(f: &Expr, xi: C64, w: C64) -> Result<LeviValue> {
    disk_check(w)?;
    Ok(LeviValue::from_matrix(levi_matrix(f, xi, w)?))
}

fn levi_matrix(f: &Expr, xi: C64, w: C64) -> Result<CMat> {
    if f.nvars() != 4 {
        return Err(Error::Dimension(format!("chart function needs 4 real variables, got {}", f.nvars())));
    }
    let fv = eval_jet(f, &[xi.re, xi.im, w.re, w.im], 2)?;
    Ok(CMat::from_fn(2, 2, |i, j| fv.d_z_d_zb(i, j) * 4.0))
}

/// Levi form of `ψ` at the point of Z⁰ with coordinates `(z, w)`.
pub fn exhaustion_levi(spec: &ExhaustionSpec, z: C64, w: C64) -> Result<LeviValue> {
    levi_with_terms(spec, spec.chart_terms()?.as_ref(), spec.section_ratio()?.as_ref(), z, w)
}

fn levi_with_terms(spec: &ExhaustionSpec, terms: Option<&Expr>, ratio: Option<&Expr>, z: C64, w: C64) -> Result<LeviValue> {
    disk_check(w)?;
    let xi = xi_of(z, w);
    let mut m = CMat::zeros(2, 2);
    if let Some(phi) = &spec.base {
        let v = phi.eval(&[z.re, z.im])?;
        if !v.re.is_finite() || v.im.abs() > 1e-9 * (1.0 + v.re.abs()) {
            return Err(Error::OutsideDomain(format!("base function is not real at z = {z}")));
        }
    }
    if let Some(f) = terms {
        m += levi_matrix(f, xi, w)?;
    }
    if spec.fibre_weight != 0.0 {
        match ratio {
            Some(s) => m += section_levi(s, xi, w, spec.reference_at(z)?)? * C64::new(spec.fibre_weight, 0.0),
            None => m[(1, 1)] += C64::new(spec.fibre_weight * fibre_levi(w, spec.w_ref)?, 0.0),
        }
    }
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::OutsideDomain(format!("Levi form undefined at z = {z}, w = {w}")));
    }
    Ok(LeviValue::from_matrix(m))
}

fn section_levi(ratio: &Expr, xi: C64, w: C64, w0: C64) -> Result<CMat> {
    disk_check(w0)?;
    let sj = ratio.jet(&[xi.re, xi.im, w.re, w.im], 2)?;
    let s0 = sj.value().re;
    if !(s0 < 1.0) {
        return Err(Error::OutsideSiegel(s0));
    }
    let g = atanh_sq_derivs(s0.max(0.0));
    let hj = sj.compose(&[C64::new(g[0], 0.0), C64::new(g[1], 0.0), C64::new(g[2] / 2.0, 0.0)]);
    let fv = FieldValue {
        value: hj.value(),
        grad: Some((0..4).map(|v| hj.d1(v)).collect()),
        hess: Some((0..4).map(|a| (0..4).map(|b| hj.d2(a, b)).collect()).collect()),
    };
    Ok(CMat::from_fn(2, 2, |i, j| fv.d_z_d_zb(i, j) * 4.0))
}

/// `|v*L(ψ)v − L(ψ|fibre)|` with `v = (z̄, 1)` the fibre direction in `(ξ, w)`.
pub fn fibre_restriction_residual(spec: &ExhaustionSpec, z: C64, w: C64) -> Result<f64> {
    let full = exhaustion_levi(spec, z, w)?.matrix;
    let v = [z.conj(), C64::new(1.0, 0.0)];
    let mut restricted = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            restricted += v[i] * full[(i, j)] * v[j].conj();
        }
    }
    let mut intrinsic = 0.0;
    if let Some(f) = spec.chart_terms()? {
        let scheme = VarScheme::real(2);
        let xi = Expr::parse_with(&format!("({:?} + {:?}*i)*(x1 + i*x2) - ({:?} + {:?}*i)", z.re, -z.im, z.re, z.im), &scheme)?;
        let wv = Expr::parse_with("x1 + i*x2", &scheme)?;
        let g = f.substitute(&[xi.re(), xi.im(), wv.re(), wv.im()])?;
        intrinsic += 4.0 * eval_jet(&g, &[w.re, w.im], 2)?.d_z_d_zb(0, 0).re;
    }
    if spec.fibre_weight != 0.0 {
        intrinsic += spec.fibre_weight * fibre_levi(w, spec.reference_at(z)?)?;
    }
    Ok((restricted - intrinsic).norm())
}

/// Grid for [`completeness_scan`]: a base box sampled `nx × ny`, and an
/// `nw × nw` square grid on `[−wmax, wmax]²` kept where `|w| ≤ wmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub base_box: [(f64, f64); 2],
    pub nx: usize,
    pub ny: usize,
    pub nw: usize,
    pub wmax: f64,
}

impl ScanGrid {
    pub fn new(base_box: [(f64, f64); 2], nx: usize, ny: usize, nw: usize, wmax: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || nw == 0 {
            return Err(Error::Invalid("grid sizes must be positive".into()));
        }
        if !(wmax > 0.0 && wmax <= 0.95) {
            return Err(Error::Invalid(format!("wmax must lie in (0, 0.95], got {wmax}")));
        }
        Ok(ScanGrid { base_box, nx, ny, nw, wmax })
    }

    fn axis(lo: f64, hi: f64, k: usize) -> Vec<f64> {
        if k == 1 {
            return alloc::vec![0.5 * (lo + hi)];
        }
        (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
    }

    pub fn points(&self) -> Vec<(C64, C64)> {
        let xs = Self::axis(self.base_box[0].0, self.base_box[0].1, self.nx);
        let ys = Self::axis(self.base_box[1].0, self.base_box[1].1, self.ny);
        let ws = Self::axis(-self.wmax, self.wmax, self.nw);
        let mut fib = Vec::new();
        for &a in &ws {
            for &b in &ws {
                let w = C64::new(a, b);
                if w.norm() <= self.wmax + 1e-12 {
                    fib.push(w);
                }
            }
        }
        let mut out = Vec::with_capacity(xs.len() * ys.len() * fib.len());
        for &x in &xs {
            for &y in &ys {
                for &w in &fib {
                    out.push((C64::new(x, y), w));
                }
            }
        }
        out
    }
}

/// Summary of a grid scan of positive Levi eigenvalue counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletenessReport {
    pub label: String,
    pub points: usize,
    pub min_positive: usize,
    pub max_positive: usize,
    pub min_eigenvalue: f64,
    pub max_hermitian_residual: f64,
    /// Positive eigenvalues needed everywhere, `n(n+1)/2`.
    pub required: usize,
    pub certificate: bool,
    pub stein: bool,
}

fn check_chart(conn: &SymplecticConnection) -> Result<()> {
    if conn.n() != 1 {
        return Err(Error::ChartUnavailable(format!("no holomorphic chart for n = {}", conn.n())));
    }
    for x in conn.probe_points(8) {
        let a = conn.christoffel(x.as_slice())?;
        if a.iter().any(|m| m.amax() != 0.0) {
            return Err(Error::ChartUnavailable("the (ξ, w) chart is the global chart of the flat connection ∇⁰".into()));
        }
    }
    Ok(())
}

/// Scans the Levi form of `ψ` over `grid` and certifies `n+1`-completeness
/// (at least `n(n+1)/2` positive eigenvalues everywhere).
pub fn completeness_scan(conn: &SymplecticConnection, spec: &ExhaustionSpec, grid: &ScanGrid) -> Result<CompletenessReport> {
    check_chart(conn)?;
    let n = conn.n();
    let m = n + n * (n + 1) / 2;
    let required = n * (n + 1) / 2;
    let mut rep = CompletenessReport {
        label: spec.label.clone(),
        points: 0,
        min_positive: usize::MAX,
        max_positive: 0,
        min_eigenvalue: f64::INFINITY,
        max_hermitian_residual: 0.0,
        required,
        certificate: false,
        stein: false,
    };
    let terms = spec.chart_terms()?;
    let ratio = spec.section_ratio()?;
    for (z, w) in grid.points() {
        if !conn.contains(&[z.re, z.im]) {
            return Err(Error::OutsideDomain(format!("grid point z = {z} outside the connection domain")));
        }
        let lv = levi_with_terms(spec, terms.as_ref(), ratio.as_ref(), z, w)?;
        rep.points += 1;
        rep.min_positive = rep.min_positive.min(lv.positive);
        rep.max_positive = rep.max_positive.max(lv.positive);
        rep.min_eigenvalue = rep.min_eigenvalue.min(*lv.eigenvalues.last().unwrap_or(&0.0));
        rep.max_hermitian_residual = rep.max_hermitian_residual.max(lv.hermitian_residual());
    }
    if rep.points == 0 {
        return Err(Error::Invalid("empty grid".into()));
    }
    rep.certificate = rep.min_positive >= required;
    rep.stein = rep.min_positive >= m;
    Ok(rep)
}

#[cfg(test)]
mod tests;
