//! The twistor bundle Z⁰ over ℝ²ⁿ in chart coordinates `(x, W)`.
//!
//! A tangent vector is stored as a base vector `X` and a generator
//! `G ∈ m_j`; the fibre velocity is `δj = [G, j] = 2Gj`.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::connection::{bilinear, contract, SymplecticConnection};
use crate::error::{Error, Result};
use crate::exprfield::{eval_jet, Expr, Jet};
use crate::linalg::{cinverse, cmax_abs, complexify, inverse, max_abs, real_part, CMat, CVec, RMat, RVec};
use crate::sampling;
use crate::symplin::{fibre_to_matrix, m_part, siegel_membership, type_projections, vertical_basis, CompatJ, VerticalMatrix};

const I: C64 = C64::new(0.0, 1.0);

/// Real dimension of a fibre, `n(n+1)`.
pub fn fibre_dim(n: usize) -> usize {
    n * (n + 1)
}

/// `(Re w_kl, Im w_kl)` for `k ≤ l`.
pub fn w_to_params(w: &CMat) -> Vec<f64> {
    let n = w.nrows();
    let mut out = Vec::with_capacity(fibre_dim(n));
    for k in 0..n {
        for l in k..n {
            out.push(w[(k, l)].re);
            out.push(w[(k, l)].im);
        }
    }
    out
}

pub fn params_to_w(n: usize, p: &[f64]) -> CMat {
    let mut w = CMat::zeros(n, n);
    let mut idx = 0;
    for k in 0..n {
        for l in k..n {
            let v = C64::new(p[idx], p[idx + 1]);
            w[(k, l)] = v;
            w[(l, k)] = v;
            idx += 2;
        }
    }
    w
}

/// A point of Z⁰: a base point and a compatible complex structure.
#[derive(Debug, Clone)]
pub struct TwistorPoint {
    x: RVec,
    j: CompatJ,
    dj: Vec<RMat>,
    gram_inv: RMat,
}

impl TwistorPoint {
    pub fn new(x: &[f64], j: CompatJ) -> Result<Self> {
        let n = j.n();
        if x.len() != 2 * n {
            return Err(Error::Dimension(format!("base point has {} coordinates, fibre is over ℝ^{}", x.len(), 2 * n)));
        }
        let dj = fibre_differential(&j)?;
        let m = dj.len();
        let gram = RMat::from_fn(m, m, |a, b| dj[a].dot(&dj[b]));
        let gram_inv = inverse(&gram)?;
        Ok(TwistorPoint { x: RVec::from_column_slice(x), j, dj, gram_inv })
    }

    /// n = 1 point `(z, w)` with `z = x + iy`.
    pub fn from_w(x: &[f64], w: C64) -> Result<Self> {
        TwistorPoint::new(x, fibre_to_matrix(&CMat::from_element(1, 1, w))?)
    }

    /// Point with chart coordinates `(x, Re/Im w_kl)`.
    pub fn from_chart(n: usize, q: &[f64]) -> Result<Self> {
        if q.len() != 2 * n + fibre_dim(n) {
            return Err(Error::Dimension(format!("chart point needs {} coordinates", 2 * n + fibre_dim(n))));
        }
        TwistorPoint::new(&q[..2 * n], fibre_to_matrix(&params_to_w(n, &q[2 * n..]))?)
    }

    pub fn chart(&self) -> Vec<f64> {
        let mut q: Vec<f64> = self.x.iter().copied().collect();
        q.extend(w_to_params(self.j.siegel()));
        q
    }

    pub fn n(&self) -> usize {
        self.j.n()
    }

    pub fn chart_dim(&self) -> usize {
        2 * self.n() + fibre_dim(self.n())
    }

    pub fn x(&self) -> &RVec {
        &self.x
    }

    pub fn base(&self) -> &[f64] {
        self.x.as_slice()
    }

    pub fn j(&self) -> &CompatJ {
        &self.j
    }

    pub fn jm(&self) -> &RMat {
        self.j.matrix()
    }

    /// The scalar fibre coordinate (n = 1).
    pub fn w(&self) -> C64 {
        self.j.w()
    }

    pub fn z(&self) -> C64 {
        C64::new(self.x[0], self.x[1])
    }

    /// `∂j/∂q_a` for the real fibre coordinates.
    pub fn fibre_frame(&self) -> &[RMat] {
        &self.dj
    }

    /// Fibre coordinate velocities of a fibre velocity `δj`.
    pub fn fibre_coords_of(&self, dj: &RMat) -> Vec<f64> {
        let rhs = RVec::from_iterator(self.dj.len(), self.dj.iter().map(|d| d.dot(dj)));
        (&self.gram_inv * rhs).iter().copied().collect()
    }
}

/// `∂j/∂q_a`, from `j = M D M⁻¹` with `M` the eigenframe of `W`.
fn fibre_differential(j: &CompatJ) -> Result<Vec<RMat>> {
    let n = j.n();
    let w = j.siegel();
    let dim = 2 * n;
    let dz = |l: usize| {
        let mut v = nalgebra::DVector::from_element(dim, C64::new(0.0, 0.0));
        v[2 * l] = C64::new(0.5, 0.0);
        v[2 * l + 1] = C64::new(0.0, -0.5);
        v
    };
    let dzb = |l: usize| dz(l).map(|c| c.conj());
    let mut m = CMat::zeros(dim, dim);
    for k in 0..n {
        let mut v = dzb(k);
        for l in 0..n {
            v += dz(l) * w[(k, l)];
        }
        m.set_column(k, &v);
        m.set_column(n + k, &v.map(|c| c.conj()));
    }
    let minv = cinverse(&m)?;
    let mut d = CMat::zeros(dim, dim);
    for k in 0..n {
        d[(k, k)] = -I;
        d[(n + k, n + k)] = I;
    }
    let jc = complexify(j.matrix());
    let mut out = Vec::with_capacity(fibre_dim(n));
    for a in 0..fibre_dim(n) {
        let mut p = alloc::vec![0.0; fibre_dim(n)];
        p[a] = 1.0;
        let dw = params_to_w(n, &p);
        let mut dm = CMat::zeros(dim, dim);
        for k in 0..n {
            let mut v = nalgebra::DVector::from_element(dim, C64::new(0.0, 0.0));
            for l in 0..n {
                v += dz(l) * dw[(k, l)];
            }
            dm.set_column(k, &v);
            dm.set_column(n + k, &v.map(|c| c.conj()));
        }
        out.push(real_part(&((&dm * &d - &jc * &dm) * &minv)));
    }
    Ok(out)
}

/// A tangent vector of Z⁰: base part and vertical generator in m_j.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistorTangent {
    pub base: RVec,
    pub gen: RMat,
    pub horizontal: bool,
}

impl TwistorTangent {
    pub fn new(base: RVec, gen: VerticalMatrix) -> Self {
        TwistorTangent { base, gen: gen.into_matrix(), horizontal: false }
    }

    pub fn vertical(p: &TwistorPoint, gen: VerticalMatrix) -> Self {
        TwistorTangent { base: RVec::zeros(2 * p.n()), gen: gen.into_matrix(), horizontal: false }
    }

    pub fn zero(p: &TwistorPoint) -> Self {
        let d = 2 * p.n();
        TwistorTangent { base: RVec::zeros(d), gen: RMat::zeros(d, d), horizontal: false }
    }

    /// The fibre velocity `δj = 2Gj`.
    pub fn fibre_velocity(&self, p: &TwistorPoint) -> RMat {
        &self.gen * p.jm() * 2.0
    }

    pub fn from_chart_velocity(p: &TwistorPoint, dq: &[f64]) -> Result<Self> {
        let d = 2 * p.n();
        if dq.len() != p.chart_dim() {
            return Err(Error::Dimension(format!("chart velocity needs {} components", p.chart_dim())));
        }
        let mut dj = RMat::zeros(d, d);
        for (c, m) in dq[d..].iter().zip(&p.dj) {
            dj += m * *c;
        }
        Ok(TwistorTangent { base: RVec::from_column_slice(&dq[..d]), gen: -(dj * p.jm()) * 0.5, horizontal: false })
    }

    pub fn chart_velocity(&self, p: &TwistorPoint) -> Vec<f64> {
        let mut out: Vec<f64> = self.base.iter().copied().collect();
        out.extend(p.fibre_coords_of(&self.fibre_velocity(p)));
        out
    }

    pub fn add(&self, o: &TwistorTangent) -> TwistorTangent {
        TwistorTangent { base: &self.base + &o.base, gen: &self.gen + &o.gen, horizontal: self.horizontal && o.horizontal }
    }

    pub fn sub(&self, o: &TwistorTangent) -> TwistorTangent {
        TwistorTangent { base: &self.base - &o.base, gen: &self.gen - &o.gen, horizontal: self.horizontal && o.horizontal }
    }

    pub fn scale(&self, s: f64) -> TwistorTangent {
        TwistorTangent { base: &self.base * s, gen: &self.gen * s, horizontal: self.horizontal }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.gen).max(self.base.amax())
    }
}

/// `A_m(X) = ½(A(X) + jA(X)j)`.
pub fn a_m(conn: &SymplecticConnection, p: &TwistorPoint, x: &RVec) -> Result<RMat> {
    Ok(m_part(&conn.a_of(p.base(), x)?, p.jm()))
}

/// Horizontal lift: generator `−A_m(X)`, i.e. fibre velocity `−[A(X), j]`.
pub fn horizontal_lift(conn: &SymplecticConnection, p: &TwistorPoint, x: &RVec) -> Result<TwistorTangent> {
    check_dims(conn, p)?;
    Ok(TwistorTangent { base: x.clone(), gen: -a_m(conn, p, x)?, horizontal: true })
}

/// `P(U) = G + A_m(X)`, the vertical part relative to the horizontal lift.
pub fn projection(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent) -> Result<RMat> {
    Ok(&u.gen + a_m(conn, p, &u.base)?)
}

fn check_dims(conn: &SymplecticConnection, p: &TwistorPoint) -> Result<()> {
    if conn.n() != p.n() {
        return Err(Error::Dimension(format!("connection on ℝ^{} but twistor point over ℝ^{}", conn.dim(), 2 * p.n())));
    }
    Ok(())
}

fn acs_general(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent, sign: f64) -> Result<TwistorTangent> {
    check_dims(conn, p)?;
    let jx = p.jm() * &u.base;
    let pu = projection(conn, p, u)?;
    let gen = -a_m(conn, p, &jx)? + p.jm() * pu * sign;
    Ok(TwistorTangent { base: jx, gen, horizontal: u.horizontal })
}

/// `J^∇ = (J^h, J^v)`: `j` on the base part, left multiplication by `j` on `P(U)`.
pub fn acs_apply(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent) -> Result<TwistorTangent> {
    acs_general(conn, p, u, 1.0)
}

/// The companion structure `(J^h, −J^v)`.
pub fn acs_apply_companion(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent) -> Result<TwistorTangent> {
    acs_general(conn, p, u, -1.0)
}

/// Matrix of `J^∇` (or its companion) in chart coordinates at `q`.
pub fn acs_chart_matrix(conn: &SymplecticConnection, q: &[f64], companion: bool) -> Result<RMat> {
    let p = TwistorPoint::from_chart(conn.n(), q)?;
    let m = p.chart_dim();
    let mut out = RMat::zeros(m, m);
    for a in 0..m {
        let mut e = alloc::vec![0.0; m];
        e[a] = 1.0;
        let u = TwistorTangent::from_chart_velocity(&p, &e)?;
        let ju = if companion { acs_apply_companion(conn, &p, &u)? } else { acs_apply(conn, &p, &u)? };
        let v = ju.chart_velocity(&p);
        for (r, val) in v.iter().enumerate() {
            out[(r, a)] = *val;
        }
    }
    Ok(out)
}

fn disk_check(w: C64) -> Result<()> {
    let m = siegel_membership(&CMat::from_element(1, 1, w))?;
    if !m.inside {
        return Err(Error::OutsideSiegel(m.margin));
    }
    Ok(())
}

/// `𝒫 = −β̄ + 3ᾱw − 3αw² + βw³` with the connection's `(α, β)` at `z`.
#[allow(non_snake_case)]
pub fn cubic_P(conn: &SymplecticConnection, z: C64, w: C64) -> Result<C64> {
    disk_check(w)?;
    let (al, be) = conn.alpha_beta_at(&[z.re, z.im])?;
    Ok(-be.conj() + al.conj() * w * 3.0 - al * w * w * 3.0 + be * w * w * w)
}

/// `(dw, dw̄)` of the horizontal lift of the (0,1) vector `∂z̄ + w∂z`.
///
/// The first component is the chart value of `𝒫`, the second the fibre drift `𝒬`.
pub fn lift_coefficients(conn: &SymplecticConnection, z: C64, w: C64) -> Result<(C64, C64)> {
    if conn.n() != 1 {
        return Err(Error::Dimension("the (z, w) chart needs n = 1".into()));
    }
    disk_check(w)?;
    let p = TwistorPoint::from_w(&[z.re, z.im], w)?;
    // ∂z̄ + w∂z in real coordinates
    let v = [C64::new(0.5, 0.0) + w * 0.5, I * 0.5 - w * I * 0.5];
    let re = RVec::from_vec(alloc::vec![v[0].re, v[1].re]);
    let im = RVec::from_vec(alloc::vec![v[0].im, v[1].im]);
    let dre = horizontal_lift(conn, &p, &re)?.chart_velocity(&p);
    let dim = horizontal_lift(conn, &p, &im)?.chart_velocity(&p);
    let du = C64::new(dre[2], dim[2]);
    let dv = C64::new(dre[3], dim[3]);
    Ok((du + I * dv, du - I * dv))
}

/// `max(‖j⁺T(j⁻X, j⁻Y)‖, ‖j⁺R(j⁻X, j⁻Y)j⁻‖)`.
pub fn integrability_residual(conn: &SymplecticConnection, p: &TwistorPoint, x: &RVec, y: &RVec) -> Result<f64> {
    check_dims(conn, p)?;
    let (jp, jm) = type_projections(p.j());
    let xm = &jm * x.map(|v| C64::new(v, 0.0));
    let ym = &jm * y.map(|v| C64::new(v, 0.0));
    let a: Vec<CMat> = conn.christoffel(p.base())?.iter().map(complexify).collect();
    let cc = |ms: &[CMat], v: &CVec| {
        let mut out = CMat::zeros(ms[0].nrows(), ms[0].ncols());
        for (m, c) in ms.iter().zip(v.iter()) {
            out += m * *c;
        }
        out
    };
    let t = cc(&a, &xm) * &ym - cc(&a, &ym) * &xm;
    let r = conn.curvature_matrices(p.base())?;
    let d = conn.dim();
    let mut rc = CMat::zeros(d, d);
    for i in 0..d {
        for k in 0..d {
            rc += complexify(&r[i][k]) * (xm[i] * ym[k]);
        }
    }
    let tt = (&jp * t).iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let rr = cmax_abs(&(&jp * rc * &jm));
    Ok(tt.max(rr))
}

/// Nijenhuis tensor of `J^∇` on constant chart fields, by five-point differences.
pub fn nijenhuis_residual(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent, h: f64) -> Result<f64> {
    nijenhuis_general(conn, p, u, v, h, false)
}

/// The same for the companion structure `(J^h, −J^v)`.
pub fn nijenhuis_residual_companion(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent, h: f64) -> Result<f64> {
    nijenhuis_general(conn, p, u, v, h, true)
}

fn nijenhuis_general(conn: &SymplecticConnection, p: &TwistorPoint, u: &TwistorTangent, v: &TwistorTangent, h: f64, companion: bool) -> Result<f64> {
    check_dims(conn, p)?;
    let q = RVec::from_vec(p.chart());
    let uq = RVec::from_vec(u.chart_velocity(p));
    let vq = RVec::from_vec(v.chart_velocity(p));
    let j0 = acs_chart_matrix(conn, q.as_slice(), companion)?;
    let ju = &j0 * &uq;
    let jv = &j0 * &vq;
    let dj = |dir: &RVec| -> Result<RMat> {
        let qp = &q + dir * (2.0 * h);
        let qm = &q - dir * (2.0 * h);
        for s in [&qp, &qm] {
            let n = p.n();
            let m = siegel_membership(&params_to_w(n, &s.as_slice()[2 * n..]))?;
            if !m.inside {
                return Err(Error::OutsideSiegel(m.margin));
            }
        }
        let at = |s: f64| acs_chart_matrix(conn, (&q + dir * (s * h)).as_slice(), companion);
        Ok((at(-2.0)? - at(2.0)? + (at(1.0)? - at(-1.0)?) * 8.0) / (12.0 * h))
    };
    let n = dj(&ju)? * &vq - dj(&jv)? * &uq + &j0 * (dj(&vq)? * &uq) - &j0 * (dj(&uq)? * &vq);
    Ok(n.amax())
}

/// Holomorphy residual in the (z, w) chart: `max(|∂f/∂w̄|, |∂f/∂z̄ + w∂f/∂z + 𝒫∂f/∂w|)`.
pub fn holo_function_residual(conn: &SymplecticConnection, f: &Expr, q: &[f64]) -> Result<f64> {
    if f.nvars() != 4 || q.len() != 4 {
        return Err(Error::Dimension("f must be a field over the (z, w) chart".into()));
    }
    let w = C64::new(q[2], q[3]);
    let (pp, _) = lift_coefficients(conn, C64::new(q[0], q[1]), w)?;
    let fv = eval_jet(f, q, 1)?;
    let r1 = fv.d_zb(1).norm();
    let r2 = (fv.d_zb(0) + w * fv.d_z(0) + pp * fv.d_z(1)).norm();
    Ok(r1.max(r2))
}

/// `|∂w/∂z̄ + w∂w/∂z − 𝒫(z, w(z))|` for the section `z ↦ (z, w(z))`.
pub fn holo_section_residual(conn: &SymplecticConnection, w_of_z: &Expr, z: &[f64]) -> Result<f64> {
    if w_of_z.nvars() != 2 || z.len() != 2 {
        return Err(Error::Dimension("w(z) must be a field over ℝ²".into()));
    }
    let fv = eval_jet(w_of_z, z, 1)?;
    let w = fv.value;
    let (pp, _) = lift_coefficients(conn, C64::new(z[0], z[1]), w)?;
    Ok((fv.d_zb(0) + w * fv.d_z(0) - pp).norm())
}

/// `Σ(x, j) = (σ(x), dσ j dσ⁻¹)`.
pub fn sigma_lift(sigma: &[Expr], p: &TwistorPoint) -> Result<TwistorPoint> {
    let d = 2 * p.n();
    if sigma.len() != d || sigma.iter().any(|e| e.nvars() != d) {
        return Err(Error::Dimension(format!("σ needs {d} components over ℝ^{d}")));
    }
    let seed = Jet::seed(p.base(), 1);
    let js: Vec<Jet> = sigma.iter().map(|e| e.eval_scalar(&seed)).collect::<Result<_>>()?;
    let y: Vec<f64> = js.iter().map(|j| j.value().re).collect();
    let k = RMat::from_fn(d, d, |r, c| js[r].d1(c).re);
    let kinv = inverse(&k).map_err(|_| Error::Singular(format!("Jacobian of σ at {:?}", p.base())))?;
    let j1 = &k * p.jm() * kinv;
    TwistorPoint::new(&y, CompatJ::new(j1)?)
}

/// A point and tangent where two structures differ.
#[derive(Debug, Clone)]
pub struct InjectivityWitness {
    pub point: TwistorPoint,
    pub tangent: TwistorTangent,
    pub difference: f64,
    pub samples: usize,
}

/// Searches for `(p, U)` with `‖J^{∇¹}U − J^{∇²}U‖ > 1e-8`.
pub fn acs_injectivity_witness<R: Rng + ?Sized>(
    c1: &SymplecticConnection,
    c2: &SymplecticConnection,
    budget: usize,
    wmax: f64,
    rng: &mut R,
) -> Result<Option<InjectivityWitness>> {
    if c1.n() != c2.n() {
        return Err(Error::Dimension("connections live on different spaces".into()));
    }
    let n = c1.n();
    let mut tried = 0;
    let mut draws = 0;
    while tried < budget && draws < 20 * budget + 100 {
        draws += 1;
        let x = sampling::in_box(rng, c1.sample_box());
        if !c1.contains(x.as_slice()) || !c2.contains(x.as_slice()) {
            continue;
        }
        tried += 1;
        let p = TwistorPoint::new(x.as_slice(), fibre_to_matrix(&sampling::in_siegel(rng, n, wmax))?)?;
        let u = random_tangent(&p, rng);
        let diff = acs_apply(c1, &p, &u)?.sub(&acs_apply(c2, &p, &u)?).max_abs();
        if diff > 1e-8 {
            return Ok(Some(InjectivityWitness { point: p, tangent: u, difference: diff, samples: tried }));
        }
    }
    Ok(None)
}

/// Tangent with normal base part and normal coefficients on the vertical basis.
pub fn random_tangent<R: Rng + ?Sized>(p: &TwistorPoint, rng: &mut R) -> TwistorTangent {
    let d = 2 * p.n();
    let mut gen = RMat::zeros(d, d);
    for b in vertical_basis(p.j()) {
        gen += b.matrix() * sampling::normal(rng);
    }
    TwistorTangent { base: sampling::normal_vec(rng, d), gen, horizontal: false }
}

/// Random twistor point over the connection's sample box.
pub fn random_point<R: Rng + ?Sized>(conn: &SymplecticConnection, wmax: f64, rng: &mut R) -> Result<TwistorPoint> {
    for _ in 0..10_000 {
        let x = sampling::in_box(rng, conn.sample_box());
        if conn.contains(x.as_slice()) {
            let w = sampling::in_siegel(rng, conn.n(), wmax);
            return TwistorPoint::new(x.as_slice(), fibre_to_matrix(&w)?);
        }
    }
    Err(Error::OutsideDomain("no sample point of the box lies in the domain".into()))
}

pub(crate) fn curvature_at(conn: &SymplecticConnection, p: &TwistorPoint, u: &RVec, v: &RVec) -> Result<RMat> {
    Ok(bilinear(&conn.curvature_matrices(p.base())?, u, v))
}

pub(crate) fn a_at(conn: &SymplecticConnection, p: &TwistorPoint, u: &RVec) -> Result<RMat> {
    Ok(contract(&conn.christoffel(p.base())?, u))
}
