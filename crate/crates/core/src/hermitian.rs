//! The metric `⟨U,V⟩ = tω(X_U, jX_V) + ½Tr(PU·PV)` on Z⁰, the 2-form
//! `Ω = tπ*ω − τ`, the connection `D = π*∇ − P` and the Levi-Civita
//! connection of the metric.
//!
//! Fields on the chart are chart-velocity valued maps; derivatives along
//! tangent vectors use five-point central differences.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::connection::SymplecticConnection;
use crate::error::{Error, Result};
use crate::exprfield::Expr;
use crate::linalg::{commutator, inverse, max_abs, solve, sym_eigenvalues, RMat, RVec};
use crate::symplin::{m_part, omega, pair, VerticalMatrix};
use crate::twistor::{a_at, a_m, acs_apply, curvature_at, projection, random_point, random_tangent, TwistorPoint, TwistorTangent};

/// Default step for chart differences.
pub const FD_STEP: f64 = 1e-3;

/// The scale `t > 0` of `Ω = tπ*ω − τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    t: f64,
}

impl MetricParams {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Invalid(format!("t must be positive, got {t}")));
        }
        Ok(MetricParams { t })
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams { t: 1.0 }
    }
}

/// `τ(U,V)`, `Ω(U,V)` and `⟨U,V⟩` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistorMetricValue {
    pub tau: f64,
    pub omega: f64,
    pub inner: f64,
}

/// A chart-velocity valued field on the twistor chart.
pub trait ChartField {
    fn eval(&self, q: &[f64]) -> Result<Vec<f64>>;
}

impl<F: Fn(&[f64]) -> Result<Vec<f64>>> ChartField for F {
    fn eval(&self, q: &[f64]) -> Result<Vec<f64>> {
        self(q)
    }
}

/// A field with constant chart components.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantField(pub Vec<f64>);

impl ChartField for ConstantField {
    fn eval(&self, _q: &[f64]) -> Result<Vec<f64>> {
        Ok(self.0.clone())
    }
}

/// A field whose chart components are expressions in the chart coordinates.
#[derive(Debug, Clone)]
pub struct ExprField(pub Vec<Expr>);

impl ChartField for ExprField {
    fn eval(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.0.iter().map(|e| e.eval(q).map(|v| v.re)).collect()
    }
}

/// `J^∇ W` as a field.
pub struct AcsField<'a> {
    pub conn: &'a SymplecticConnection,
    pub inner: &'a dyn ChartField,
}

impl ChartField for AcsField<'_> {
    fn eval(&self, q: &[f64]) -> Result<Vec<f64>> {
        let p = TwistorPoint::from_chart(self.conn.n(), q)?;
        let u = TwistorTangent::from_chart_velocity(&p, &self.inner.eval(q)?)?;
        Ok(acs_apply(self.conn, &p, &u)?.chart_velocity(&p))
    }
}

/// Five-point derivative of `f` at `q` along `dir`.
pub fn directional<F: Fn(&[f64]) -> Result<Vec<f64>>>(f: F, q: &[f64], dir: &[f64], h: f64) -> Result<Vec<f64>> {
    let at = |s: f64| -> Result<Vec<f64>> {
        let pt: Vec<f64> = q.iter().zip(dir).map(|(a, d)| a + s * h * d).collect();
        f(&pt)
    };
    let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
    Ok((0..m2.len()).map(|k| (m2[k] - p2[k] + 8.0 * (p1[k] - m1[k])) / (12.0 * h)).collect())
}

fn directional_scalar<F: Fn(&[f64]) -> Result<f64>>(f: F, q: &[f64], dir: &[f64], h: f64) -> Result<f64> {
    Ok(directional(|x| f(x).map(|v| vec![v]), q, dir, h)?[0])
}

/// `P(U)` as an element of `m_j`.
pub fn vertical_projection(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent) -> Result<VerticalMatrix> {
    VerticalMatrix::new(projection(conn, p, u)?, p.j())
}

/// `τ(U,V) = ½Tr(PU·j·PV)`.
pub fn tau(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent) -> Result<f64> {
    let pu = projection(conn, p, u)?;
    let pv = projection(conn, p, v)?;
    Ok(0.5 * (pu * p.jm() * pv).trace())
}

fn omega_base(x: &RVec, y: &RVec) -> f64 {
    let n = x.len() / 2;
    (x.transpose() * omega(n) * y)[(0, 0)]
}

/// Horizontal metric `tω(X, jY)`.
pub fn horizontal_inner(params: &MetricParams, p: &TwistorPoint, x: &RVec, y: &RVec) -> f64 {
    params.t * omega_base(x, &(p.jm() * y))
}

pub fn metric(conn: &SymplecticConnection, params: &MetricParams, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent) -> Result<TwistorMetricValue> {
    let pu = projection(conn, p, u)?;
    let pv = projection(conn, p, v)?;
    let tau = 0.5 * (&pu * p.jm() * &pv).trace();
    let omega = params.t * omega_base(&u.base, &v.base) - tau;
    let inner = horizontal_inner(params, p, &u.base, &v.base) + pair(&pu, &pv);
    Ok(TwistorMetricValue { tau, omega, inner })
}

fn inner(conn: &SymplecticConnection, params: &MetricParams, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent) -> Result<f64> {
    Ok(metric(conn, params, p, u, v)?.inner)
}

/// Gram matrix of the metric on the chart basis.
pub fn gram_matrix(conn: &SymplecticConnection, params: &MetricParams, q: &[f64]) -> Result<RMat> {
    let p = TwistorPoint::from_chart(conn.n(), q)?;
    let m = p.chart_dim();
    let basis: Vec<TwistorTangent> = (0..m)
        .map(|a| {
            let mut e = vec![0.0; m];
            e[a] = 1.0;
            TwistorTangent::from_chart_velocity(&p, &e)
        })
        .collect::<Result<_>>()?;
    let mut g = RMat::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let v = inner(conn, params, &p, &basis[a], &basis[b])?;
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    Ok(g)
}

/// Gram matrix of `Ω` on the chart basis.
pub fn omega_matrix(conn: &SymplecticConnection, params: &MetricParams, q: &[f64]) -> Result<RMat> {
    let p = TwistorPoint::from_chart(conn.n(), q)?;
    let m = p.chart_dim();
    let basis: Vec<TwistorTangent> = (0..m)
        .map(|a| {
            let mut e = vec![0.0; m];
            e[a] = 1.0;
            TwistorTangent::from_chart_velocity(&p, &e)
        })
        .collect::<Result<_>>()?;
    let mut o = RMat::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            o[(a, b)] = metric(conn, params, &p, &basis[a], &basis[b])?.omega;
        }
    }
    Ok(o)
}

/// Smallest eigenvalue of the Gram matrix.
pub fn min_gram_eigenvalue(conn: &SymplecticConnection, params: &MetricParams, q: &[f64]) -> Result<f64> {
    Ok(sym_eigenvalues(&gram_matrix(conn, params, q)?)[0])
}

fn tangent_at(conn: &SymplecticConnection, q: &[f64], w: &dyn ChartField) -> Result<(TwistorPoint, TwistorTangent)> {
    let p = TwistorPoint::from_chart(conn.n(), q)?;
    let t = TwistorTangent::from_chart_velocity(&p, &w.eval(q)?)?;
    Ok((p, t))
}

/// `(X_W, P(W))` at `q`, flattened.
fn split_field(conn: &SymplecticConnection, q: &[f64], w: &dyn ChartField) -> Result<Vec<f64>> {
    let (p, t) = tangent_at(conn, q, w)?;
    let mut out: Vec<f64> = t.base.iter().copied().collect();
    out.extend(projection(conn, &p, &t)?.iter().copied());
    Ok(out)
}

fn unsplit(d: usize, v: &[f64]) -> (RVec, RMat) {
    (RVec::from_column_slice(&v[..d]), RMat::from_column_slice(d, d, &v[d..]))
}

/// Tangent with base `x` and `P = b`.
fn assemble(conn: &SymplecticConnection, p: &TwistorPoint, x: RVec, b: RMat) -> Result<TwistorTangent> {
    let gen = b - a_m(conn, p, &x)?;
    Ok(TwistorTangent { base: x, gen, horizontal: false })
}

/// `D_U W` with `D = π*∇ − P`, preserving the splitting.
#[allow(non_snake_case)]
pub fn D_derivative(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent, w: &dyn ChartField) -> Result<TwistorTangent> {
    D_derivative_with_step(conn, p, u, w, FD_STEP)
}

#[allow(non_snake_case)]
pub fn D_derivative_with_step(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent, w: &dyn ChartField, h: f64) -> Result<TwistorTangent> {
    let d = 2 * p.n();
    let q = p.chart();
    let uq = u.chart_velocity(p);
    let here = split_field(conn, &q, w)?;
    let der = directional(|x| split_field(conn, x, w), &q, &uq, h)?;
    let (xw, bw) = unsplit(d, &here);
    let (dx, db) = unsplit(d, &der);
    let au = a_at(conn, p, &u.base)?;
    let pu = projection(conn, p, u)?;
    let base = dx + &au * &xw - &pu * &xw;
    let b = db + commutator(&(&au - &pu), &bw);
    assemble(conn, p, base, b)
}

/// `‖(π*∇)_U Φ − [P(U), Φ]‖`, the defect of `DΦ = 0`.
pub fn d_phi_residual(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent) -> Result<f64> {
    let dj = u.fibre_velocity(p) + commutator(&a_at(conn, p, &u.base)?, p.jm());
    let pu = projection(conn, p, u)?;
    Ok(max_abs(&(dj - commutator(&pu, p.jm()))))
}

/// `(D_U τ)(V, W)` for fields `V`, `W`.
pub fn d_tau_parallel_residual(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent, v: &dyn ChartField, w: &dyn ChartField) -> Result<f64> {
    let q = p.chart();
    let uq = u.chart_velocity(p);
    let tau_at = |x: &[f64]| -> Result<f64> {
        let (px, vt) = tangent_at(conn, x, v)?;
        let wt = TwistorTangent::from_chart_velocity(&px, &w.eval(x)?)?;
        tau(conn, &px, &vt, &wt)
    };
    let lhs = directional_scalar(tau_at, &q, &uq, FD_STEP)?;
    let (_, vt) = tangent_at(conn, &q, v)?;
    let (_, wt) = tangent_at(conn, &q, w)?;
    let dv = D_derivative(conn, p, u, v)?;
    let dw = D_derivative(conn, p, u, w)?;
    Ok((lhs - tau(conn, p, &dv, &wt)? - tau(conn, p, &vt, &dw)?).abs())
}

/// Torsion `T^D(U, V)` of `D` on constant chart extensions.
pub fn d_torsion(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent) -> Result<TwistorTangent> {
    let uf = ConstantField(u.chart_velocity(p));
    let vf = ConstantField(v.chart_velocity(p));
    Ok(D_derivative(conn, p, u, &vf)?.sub(&D_derivative(conn, p, v, &uf)?))
}

/// `max(‖P T^D(U,V) − R_m(X_U,X_V)‖, ‖π_*T^D(U,V) + PU·X_V − PV·X_U‖)`.
pub fn d_torsion_residual(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent) -> Result<(f64, f64)> {
    let t = d_torsion(conn, p, u, v)?;
    let r = curvature_at(conn, p, &u.base, &v.base)?;
    let vert = max_abs(&(projection(conn, p, &t)? - m_part(&r, p.jm())));
    let pu = projection(conn, p, u)?;
    let pv = projection(conn, p, v)?;
    let hor = (&t.base + &pu * &v.base - &pv * &u.base).amax();
    Ok((vert, hor))
}

/// `|dτ(U,V,W) − RHS|` with the trace formula
/// `RHS = −¼Tr(R_{U,V}∘(π*∇)_WΦ + cyclic)`, `(π*∇)_WΦ = [PW, j]`.
pub fn dtau_residual(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent, w: &TwistorTangent) -> Result<f64> {
    let (lhs, rhs) = dtau_sides(conn, p, u, v, w)?;
    Ok((lhs - rhs).abs())
}

/// `(dτ(U,V,W), RHS)`.
pub fn dtau_sides(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent, w: &TwistorTangent) -> Result<(f64, f64)> {
    let lhs = exterior_derivative(conn, p, [u, v, w], |px, a, b| tau(conn, px, a, b))?;
    let term = |a: &TwistorTangent, b: &TwistorTangent, c: &TwistorTangent| -> Result<f64> {
        let r = curvature_at(conn, p, &a.base, &b.base)?;
        let dphi = commutator(&projection(conn, p, c)?, p.jm());
        Ok(-0.25 * (r * dphi).trace())
    };
    let rhs = term(u, v, w)? + term(v, w, u)? + term(w, u, v)?;
    Ok((lhs, rhs))
}

/// `dβ(U,V,W)` of a 2-form on constant chart extensions.
fn exterior_derivative<F>(conn: &SymplecticConnection, p: &TwistorPoint, t: [&TwistorTangent; 3], form: F) -> Result<f64>
where
    F: Fn(&TwistorPoint, &TwistorTangent, &TwistorTangent) -> Result<f64>,
{
    let q = p.chart();
    let c: Vec<Vec<f64>> = t.iter().map(|x| x.chart_velocity(p)).collect();
    let eval_pair = |x: &[f64], a: &[f64], b: &[f64]| -> Result<f64> {
        let px = TwistorPoint::from_chart(conn.n(), x)?;
        let ta = TwistorTangent::from_chart_velocity(&px, a)?;
        let tb = TwistorTangent::from_chart_velocity(&px, b)?;
        form(&px, &ta, &tb)
    };
    let d = |dir: &[f64], a: &[f64], b: &[f64]| directional_scalar(|x| eval_pair(x, a, b), &q, dir, FD_STEP);
    Ok(d(&c[0], &c[1], &c[2])? - d(&c[1], &c[0], &c[2])? + d(&c[2], &c[0], &c[1])?)
}

/// `dΩ(U,V,W)`.
pub fn d_omega(conn: &SymplecticConnection, params: &MetricParams, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent, w: &TwistorTangent) -> Result<f64> {
    exterior_derivative(conn, p, [u, v, w], |px, a, b| Ok(metric(conn, params, px, a, b)?.omega))
}

fn check_horizontal(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent) -> Result<()> {
    let pu = projection(conn, p, u)?;
    let r = max_abs(&pu);
    if !u.horizontal && r > 1e-12 * (1.0 + max_abs(&u.gen)) {
        return Err(Error::NotHorizontal(format!("vertical part of size {r:e}")));
    }
    Ok(())
}

/// `S^v_j(X,Y) = −(t/2){ω(X,·)jY + ω(jY,·)X + ω(jX,·)Y + ω(Y,·)jX}`.
#[allow(non_snake_case)]
pub fn S_v(conn: &SymplecticConnection, params: &MetricParams, p: &TwistorPoint, x: &TwistorTangent, y: &TwistorTangent) -> Result<VerticalMatrix> {
    check_horizontal(conn, p, x)?;
    check_horizontal(conn, p, y)?;
    VerticalMatrix::new(s_v_matrix(params, p, &x.base, &y.base), p.j())
}

pub(crate) fn s_v_matrix(params: &MetricParams, p: &TwistorPoint, x: &RVec, y: &RVec) -> RMat {
    let om = omega(p.n());
    let j = p.jm();
    let (jx, jy) = (j * x, j * y);
    let co = |a: &RVec| a.transpose() * &om;
    let half = |a: &RVec, jb: &RVec| jb * co(a) + a * co(jb);
    (half(x, &jy) + half(y, &jx)) * (-0.5 * params.t)
}

/// `S^h(X, B)`: the horizontal vector with `⟨S^h(X,B), Y⟩ = ½⟨R_m(X,Y), B⟩`.
pub(crate) fn s_h(conn: &SymplecticConnection, params: &MetricParams, p: &TwistorPoint, x: &RVec, b: &RMat) -> Result<RVec> {
    let d = 2 * p.n();
    let mut c = RVec::zeros(d);
    for i in 0..d {
        let e = RVec::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 });
        let r = curvature_at(conn, p, x, &e)?;
        c[i] = 0.5 * pair(&m_part(&r, p.jm()), b);
    }
    // ⟨Z, Y⟩ = t Zᵀ Ω j Y
    let g = (omega(p.n()) * p.jm()) * params.t;
    solve(&g.transpose(), &c)
}

/// `S(U, V)` assembled from `S^v` and `S^h`.
fn s_full(conn: &SymplecticConnection, params: &MetricParams, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent) -> Result<TwistorTangent> {
    let pu = projection(conn, p, u)?;
    let pv = projection(conn, p, v)?;
    let sv = s_v_matrix(params, p, &u.base, &v.base);
    let sh = s_h(conn, params, p, &u.base, &pv)? + s_h(conn, params, p, &v.base, &pu)?;
    assemble(conn, p, sh, sv)
}

/// `D̂_U W = D_U W − PW(π_*U) − ½π*R^v_{U,W} + S(U,W)`.
pub fn levi_civita(conn: &SymplecticConnection, params: &MetricParams, p: &TwistorPoint, u: &TwistorTangent, w: &dyn ChartField) -> Result<TwistorTangent> {
    let dw = D_derivative(conn, p, u, w)?;
    let q = p.chart();
    let wt = TwistorTangent::from_chart_velocity(p, &w.eval(&q)?)?;
    let pw = projection(conn, p, &wt)?;
    let r = curvature_at(conn, p, &u.base, &wt.base)?;
    let shift = assemble(conn, p, &pw * &u.base, m_part(&r, p.jm()) * 0.5)?;
    Ok(dw.sub(&shift).add(&s_full(conn, params, p, u, &wt)?))
}

/// `‖D̂_U V − D̂_V U‖` on constant chart extensions.
pub fn lc_torsion_residual(conn: &SymplecticConnection, params: &MetricParams, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent) -> Result<f64> {
    let uf = ConstantField(u.chart_velocity(p));
    let vf = ConstantField(v.chart_velocity(p));
    let t = levi_civita(conn, params, p, u, &vf)?.sub(&levi_civita(conn, params, p, v, &uf)?);
    Ok(chart_norm(p, &t))
}

fn chart_norm(p: &TwistorPoint, t: &TwistorTangent) -> f64 {
    t.chart_velocity(p).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `|U⟨V,W⟩ − ⟨D̂_U V, W⟩ − ⟨V, D̂_U W⟩|` on constant chart extensions.
pub fn lc_metric_residual(conn: &SymplecticConnection, params: &MetricParams, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent, w: &TwistorTangent) -> Result<f64> {
    let q = p.chart();
    let (uq, vq, wq) = (u.chart_velocity(p), v.chart_velocity(p), w.chart_velocity(p));
    let g = |x: &[f64]| -> Result<f64> {
        let px = TwistorPoint::from_chart(conn.n(), x)?;
        inner(conn, params, &px, &TwistorTangent::from_chart_velocity(&px, &vq)?, &TwistorTangent::from_chart_velocity(&px, &wq)?)
    };
    let lhs = directional_scalar(g, &q, &uq, FD_STEP)?;
    let dv = levi_civita(conn, params, p, u, &ConstantField(vq.clone()))?;
    let dw = levi_civita(conn, params, p, u, &ConstantField(wq.clone()))?;
    Ok((lhs - inner(conn, params, p, &dv, w)? - inner(conn, params, p, v, &dw)?).abs())
}

/// `‖(D̂_U J)W‖ = ‖D̂_U(JW) − J D̂_U W‖` for a field `W`.
pub fn lc_acs_residual(conn: &SymplecticConnection, params: &MetricParams, p: &TwistorPoint, u: &TwistorTangent, w: &dyn ChartField) -> Result<f64> {
    let jw = AcsField { conn, inner: w };
    let a = levi_civita(conn, params, p, u, &jw)?;
    let b = acs_apply(conn, p, &levi_civita(conn, params, p, u, w)?)?;
    Ok(chart_norm(p, &a.sub(&b)))
}

/// Christoffel symbols `Γ^c_{ab}` of the metric in the chart, by differences of the Gram matrix.
pub fn chart_christoffel(conn: &SymplecticConnection, params: &MetricParams, q: &[f64], h: f64) -> Result<Vec<RMat>> {
    let m = q.len();
    let g = gram_matrix(conn, params, q)?;
    let ginv = inverse(&g)?;
    let dg: Vec<RMat> = (0..m)
        .map(|a| {
            let mut e = vec![0.0; m];
            e[a] = 1.0;
            directional(|x| gram_matrix(conn, params, x).map(|g| g.as_slice().to_vec()), q, &e, h).map(|v| RMat::from_column_slice(m, m, &v))
        })
        .collect::<Result<_>>()?;
    // gamma[c][(a, b)]
    let mut gamma = vec![RMat::zeros(m, m); m];
    for a in 0..m {
        for b in 0..m {
            let low = RVec::from_fn(m, |d, _| 0.5 * (dg[a][(b, d)] + dg[b][(a, d)] - dg[d][(a, b)]));
            let up = &ginv * low;
            for c in 0..m {
                gamma[c][(a, b)] = up[c];
            }
        }
    }
    Ok(gamma)
}

/// Sectional curvature of span{U, V} from differences of the Gram matrix.
pub fn sectional_curvature_fd(conn: &SymplecticConnection, params: &MetricParams, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent, h: f64) -> Result<f64> {
    let q = p.chart();
    let m = q.len();
    let flat = |x: &[f64]| -> Result<Vec<f64>> {
        Ok(chart_christoffel(conn, params, x, h)?.iter().flat_map(|g| g.iter().copied().collect::<Vec<_>>()).collect())
    };
    let gam = chart_christoffel(conn, params, &q, h)?;
    let dgam: Vec<Vec<f64>> = (0..m)
        .map(|e| {
            let mut dir = vec![0.0; m];
            dir[e] = 1.0;
            directional(flat, &q, &dir, h)
        })
        .collect::<Result<_>>()?;
    let dg = |e: usize, c: usize, a: usize, b: usize| dgam[e][c * m * m + b * m + a];
    let (uq, vq) = (u.chart_velocity(p), v.chart_velocity(p));
    // R(U,V)V = Σ R^a_{bcd} V^b U^c V^d
    let mut rvv = vec![0.0; m];
    for a in 0..m {
        let mut s = 0.0;
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let coef = vq[b] * uq[c] * vq[d];
                    if coef == 0.0 {
                        continue;
                    }
                    let mut r = dg(c, a, d, b) - dg(d, a, c, b);
                    for e in 0..m {
                        r += gam[a][(c, e)] * gam[e][(d, b)] - gam[a][(d, e)] * gam[e][(c, b)];
                    }
                    s += r * coef;
                }
            }
        }
        rvv[a] = s;
    }
    let g = gram_matrix(conn, params, &q)?;
    let (ur, vr, rr) = (RVec::from_vec(uq), RVec::from_vec(vq), RVec::from_vec(rvv));
    let gg = |a: &RVec, b: &RVec| (a.transpose() * &g * b)[(0, 0)];
    Ok(gg(&rr, &ur) / (gg(&ur, &ur) * gg(&vr, &vr) - gg(&ur, &vr).powi(2)))
}

/// Closed-form sectional curvature of the plane spanned by `X + A`, `Y + B`
/// (flat connection, orthonormal pair):
/// `½(‖X‖²‖Y‖² + 3t²ω(X,Y)² − ⟨X,Y⟩²) − ‖BX − AY‖² + 2⟨[A,B]X,Y⟩ − ‖[A,B]‖²`.
///
/// The mixed term enters with a minus sign; this is the sign the difference
/// oracle [`sectional_curvature_fd`] reproduces.
pub fn sectional_curvature(params: &MetricParams, p: &TwistorPoint, x: &RVec, y: &RVec, a: &RMat, b: &RMat) -> Result<f64> {
    let hi = |u: &RVec, v: &RVec| horizontal_inner(params, p, u, v);
    let nu = hi(x, x) + pair(a, a);
    let nv = hi(y, y) + pair(b, b);
    let uv = hi(x, y) + pair(a, b);
    let dev = (nu - 1.0).abs().max((nv - 1.0).abs()).max(uv.abs());
    if dev > 1e-9 {
        return Err(Error::NotOrthonormal(dev));
    }
    let t = params.t;
    let om = omega_base(x, y);
    let c = commutator(a, b);
    let bxay = b * x - a * y;
    let k = 0.5 * (hi(x, x) * hi(y, y) + 3.0 * t * t * om * om - hi(x, y).powi(2)) - hi(&bxay, &bxay) + 2.0 * hi(&(&c * x), y)
        - (-0.5 * (&c * &c).trace());
    Ok(k)
}

/// The (0,2) part of `R^D(U,V) = R(X_U,X_V) − R_m(X_U,X_V) − [PU, PV]`.
pub fn rd_type_residual(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent) -> Result<f64> {
    let rd = |a: &TwistorTangent, b: &TwistorTangent| -> Result<RMat> {
        let r = curvature_at(conn, p, &a.base, &b.base)?;
        let rm = m_part(&r, p.jm());
        Ok(r - rm - commutator(&projection(conn, p, a)?, &projection(conn, p, b)?))
    };
    let ju = acs_apply(conn, p, u)?;
    let jv = acs_apply(conn, p, v)?;
    let re = rd(u, v)? - rd(&ju, &jv)?;
    let im = rd(u, &jv)? + rd(&ju, v)?;
    Ok(max_abs(&re).max(max_abs(&im)) * 0.25)
}

/// `‖D_X Y + J^∇D_{J^∇X}Y − 2(PY)π_*X‖`, which vanishes along `X` when the field `Y` is holomorphic.
pub fn holomorphic_field_residual(conn: &SymplecticConnection, p: &TwistorPoint, x: &TwistorTangent, y: &dyn ChartField) -> Result<f64> {
    let jx = acs_apply(conn, p, x)?;
    let a = D_derivative(conn, p, x, y)?;
    let b = acs_apply(conn, p, &D_derivative(conn, p, &jx, y)?)?;
    let yt = TwistorTangent::from_chart_velocity(p, &y.eval(&p.chart())?)?;
    let py = projection(conn, p, &yt)?;
    let c = assemble(conn, p, &py * &x.base * 2.0, RMat::zeros(x.gen.nrows(), x.gen.ncols()))?;
    Ok(chart_norm(p, &a.add(&b).sub(&c)))
}

/// Result of sampling `dΩ` against the curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosednessReport {
    pub samples: usize,
    pub max_d_omega: f64,
    pub max_curvature: f64,
    pub pass: bool,
}

/// Samples `|dΩ|` and `‖R‖`; passes when both vanish or both are bounded away from 0.
pub fn closedness_check<R: Rng + ?Sized>(conn: &SymplecticConnection, params: &MetricParams, budget: usize, wmax: f64, rng: &mut R) -> Result<ClosednessReport> {
    let mut md: f64 = 0.0;
    let mut mr: f64 = 0.0;
    for _ in 0..budget {
        let p = random_point(conn, wmax, rng)?;
        let t: Vec<TwistorTangent> = (0..3).map(|_| random_tangent(&p, rng)).collect();
        md = md.max(d_omega(conn, params, &p, &t[0], &t[1], &t[2])?.abs());
        mr = mr.max(crate::connection::curvature_norm(&conn.curvature_matrices(p.base())?));
    }
    let flat = md < 1e-6 && mr < 1e-9;
    let curved = md > 1e-3 && mr > 1e-6;
    Ok(ClosednessReport { samples: budget, max_d_omega: md, max_curvature: mr, pass: flat || curved })
}

/// `J^∇` applied to a field.
pub fn acs_field<'a>(conn: &'a SymplecticConnection, inner: &'a dyn ChartField) -> Box<dyn ChartField + 'a> {
    Box::new(AcsField { conn, inner })
}
