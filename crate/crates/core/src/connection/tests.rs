use super::presets;
use super::*;
use crate::exprfield::{parse_expr, VarScheme};
use crate::linalg::complexify;
use alloc::string::ToString;
use nalgebra::DVector;

fn e(s: &str) -> Expr {
    parse_expr(s, 1).unwrap()
}

fn grid(lo: (f64, f64), hi: (f64, f64), k: usize) -> Vec<[f64; 2]> {
    let mut v = Vec::new();
    for a in 0..k {
        for b in 0..k {
            let t = a as f64 / (k - 1) as f64;
            let s = b as f64 / (k - 1) as f64;
            v.push([lo.0 + t * (hi.0 - lo.0), lo.1 + s * (hi.1 - lo.1)]);
        }
    }
    v
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

// complex coefficients (of ∂z, ∂z̄) of a complexified real vector
fn split(u: &DVector<C64>) -> (C64, C64) {
    let i = c(0.0, 1.0);
    (u[0] + i * u[1], u[0] - i * u[1])
}

#[test]
fn alpha_beta_structure_equations() {
    let (al, be) = (c(0.3, -0.7), c(-1.1, 0.4));
    let conn = SymplecticConnection::from_alpha_beta(
        Expr::constant(al, 2),
        Expr::constant(be, 2),
    )
    .unwrap();
    let a = conn.christoffel(&[0.2, 0.1]).unwrap();
    let dz = DVector::from_vec(vec![c(0.5, 0.0), c(0.0, -0.5)]);
    let dzb = DVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.5)]);
    let a_of = |u: &DVector<C64>| complexify(&a[0]) * u[0] + complexify(&a[1]) * u[1];
    let (p, q) = split(&(a_of(&dz) * &dz));
    assert!((p - al).norm() < 1e-14 && (q - be).norm() < 1e-14);
    let (p, q) = split(&(a_of(&dz) * &dzb));
    assert!((p + al.conj()).norm() < 1e-14 && (q + al).norm() < 1e-14);
    let (p, q) = split(&(a_of(&dzb) * &dzb));
    assert!((p - be.conj()).norm() < 1e-14 && (q - al.conj()).norm() < 1e-14);
    assert!(conn.torsion_residual(&[0.2, 0.1]).unwrap() < 1e-15);
    assert!(conn.symplectic_residual(&[0.2, 0.1]).unwrap() < 1e-15);
}

#[test]
fn coefficient_conversion_examples() {
    let (a, b) = real_to_complex_values(0.0, 1.0, 0.0, 0.0);
    assert!((a - c(-0.25, 0.0)).norm() < 1e-15 && (b - c(0.75, 0.0)).norm() < 1e-15);
    let (a, b) = real_to_complex_values(0.0, 0.0, 0.0, 0.0);
    assert_eq!((a, b), (c(0.0, 0.0), c(0.0, 0.0)));
    let r = complex_to_real_values(c(0.1, 0.2), c(-0.3, 0.4));
    let (a, b) = real_to_complex_values(r[0], r[1], r[2], r[3]);
    assert!((a - c(0.1, 0.2)).norm() < 1e-15 && (b - c(-0.3, 0.4)).norm() < 1e-15);
}

#[test]
fn symbolic_conversion_gives_same_connection() {
    let (a, b, cc, d) = (e("x*y"), e("1+y^2"), e("sin(x)"), e("x-2*y"));
    let real = SymplecticConnection::from_real_coeffs(a.clone(), b.clone(), cc.clone(), d.clone()).unwrap();
    let (al, be) = real_to_complex(&a, &b, &cc, &d);
    let cx = SymplecticConnection::from_alpha_beta(al.clone(), be.clone()).unwrap();
    let back = complex_to_real(&al, &be);
    for p in grid((-1.0, -1.0), (1.0, 1.0), 5) {
        let ra = real.christoffel(&p).unwrap();
        let ca = cx.christoffel(&p).unwrap();
        for (x, y) in ra.iter().zip(&ca) {
            assert!(max_abs(&(x - y)) < 1e-12);
        }
        for (orig, rt) in [&a, &b, &cc, &d].iter().zip(back.iter()) {
            assert!((orig.eval(&p).unwrap() - rt.eval(&p).unwrap()).norm() < 1e-12);
        }
    }
}

#[test]
fn trivial_connection_is_flat_in_every_dimension() {
    for n in 1..=2 {
        let conn = SymplecticConnection::trivial(n);
        let x = vec![0.3; 2 * n];
        let cv = conn.curvature(&x).unwrap();
        assert_eq!(curvature_norm(&cv.r), 0.0);
        assert_eq!(max_abs(&cv.ricci), 0.0);
        assert_eq!(cv.e.max_abs(), 0.0);
        assert_eq!(cv.w.max_abs(), 0.0);
        assert_eq!(conn.field_eq_residual(&x).unwrap(), 0.0);
    }
}

#[test]
fn constant_connection_is_translation_invariant() {
    let conn = SymplecticConnection::from_alpha_beta(e("1"), e("0")).unwrap();
    let a0 = conn.christoffel(&[0.0, 0.0]).unwrap();
    let a1 = conn.christoffel(&[3.0, -2.0]).unwrap();
    for (x, y) in a0.iter().zip(&a1) {
        assert_eq!(x, y);
        assert!(crate::symplin::sp_residual(x) < 1e-15);
    }
}

#[test]
fn sphere_connection_is_symplectic_and_vanishes_at_origin() {
    let conn = presets::sphere();
    let a = conn.christoffel(&[0.0, 0.0]).unwrap();
    assert!(a.iter().all(|m| max_abs(m) == 0.0));
    for p in grid((-2.0, -2.0), (2.0, 2.0), 9) {
        assert!(conn.symplectic_residual(&p).unwrap() < 1e-9);
        assert!(conn.torsion_residual(&p).unwrap() < 1e-9);
        assert!(conn.sp_residual(&p).unwrap() < 1e-12);
    }
    let r = conn.curvature_endo(&[0.4, -0.2], &DVector::from_vec(vec![1.0, 0.0]), &DVector::from_vec(vec![0.0, 1.0])).unwrap();
    assert!(max_abs(&r) > 1e-2);
}

#[test]
fn log_example_is_flat() {
    let conn = presets::log_example();
    for p in grid((0.5, -2.0), (3.0, 2.0), 8) {
        let r = conn.curvature_matrices(&p).unwrap();
        assert!(curvature_norm(&r) < 1e-8, "{p:?}");
    }
    assert!(matches!(conn.christoffel(&[-1.0, 0.0]), Err(Error::OutsideDomain(_))));
}

// Symmetric cubic S(x) = S0 + x-linear part, turned into Γ^k_{ij} = (Ω S_{ij·})_k.
fn polynomial_connection(n: usize, seed: u64) -> SymplecticConnection {
    let d = 2 * n;
    let mut s = seed;
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let mut sym: Vec<String> = vec![String::new(); d * d * d];
    let mut idx = vec![];
    for i in 0..d {
        for j in i..d {
            for k in j..d {
                idx.push((i, j, k));
            }
        }
    }
    for &(i, j, k) in &idx {
        let mut t = alloc::format!("{:.3}", next());
        for l in 0..d {
            t.push_str(&alloc::format!(" + {:.3}*x{}", next(), l + 1));
        }
        t.push_str(&alloc::format!(" + {:.3}*x1*x{}", next(), d));
        for p in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
            sym[(p.0 * d + p.1) * d + p.2] = t.clone();
        }
    }
    let om = omega(n);
    let scheme = VarScheme::base(n);
    let mut gamma = vec![vec![vec![Expr::real_const(0.0, d); d]; d]; d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let mut text = String::from("0");
                for m in 0..d {
                    if om[(k, m)] != 0.0 {
                        text.push_str(&alloc::format!(" + ({})*({})", om[(k, m)], sym[(i * d + j) * d + m]));
                    }
                }
                gamma[k][i][j] = Expr::parse_with(&text, &scheme).unwrap();
            }
        }
    }
    SymplecticConnection::from_gamma(gamma).unwrap()
}

#[test]
fn curvature_symmetries_and_decomposition() {
    for (n, seed) in [(1, 1u64), (2, 2), (2, 3)] {
        let conn = polynomial_connection(n, seed);
        let d = 2 * n;
        let x: Vec<f64> = (0..d).map(|i| 0.1 * (i as f64 + 1.0) - 0.2).collect();
        let cv = conn.curvature(&x).unwrap();
        let scale = cv.lowered.max_abs().max(1.0);
        for a in 0..d {
            for b in 0..d {
                for cc in 0..d {
                    for t in 0..d {
                        let v = cv.lowered.get(a, b, cc, t);
                        assert!((v + cv.lowered.get(b, a, cc, t)).abs() < 1e-10 * scale);
                        assert!((v - cv.lowered.get(a, b, t, cc)).abs() < 1e-10 * scale);
                    }
                }
                // first Bianchi identity
                for cc in 0..d {
                    let s = &cv.r[a][b].column(cc) + &cv.r[b][cc].column(a) + &cv.r[cc][a].column(b);
                    assert!(s.amax() < 1e-8 * scale);
                }
            }
        }
        assert!(max_abs(&(&cv.ricci - cv.ricci.transpose())) < 1e-10 * scale);
        assert!(max_abs(&cv.w.ricci_trace()) < 1e-8 * scale);
        assert!(max_abs(&(cv.lowered.ricci_trace() - &cv.ricci)) < 1e-10 * scale);
        if n == 1 {
            assert!(cv.w.max_abs() < 1e-8 * scale);
        } else {
            assert!(cv.w.max_abs() > 1e-3, "generic ℝ⁴ connection should have W ≠ 0");
            assert!(conn.field_eq_residual(&x).unwrap() > 0.0);
        }
    }
}

#[test]
fn weyl_vanishes_for_random_plane_connections() {
    for seed in 0..10 {
        let conn = polynomial_connection(1, 100 + seed);
        for p in conn.probe_points(5) {
            let cv = conn.curvature(p.as_slice()).unwrap();
            assert!(cv.w.max_abs() < 1e-8 * cv.lowered.max_abs().max(1.0));
        }
    }
}

#[test]
fn curvature_agrees_with_finite_differences() {
    let conn = presets::sphere();
    let x = [0.3, -0.45];
    let r = conn.curvature_matrices(&x).unwrap();
    let h = 1e-4;
    let a = |p: [f64; 2]| conn.christoffel(&p).unwrap();
    let a0 = a(x);
    let mut da = vec![];
    for l in 0..2 {
        let mut p = x;
        let mut m = x;
        p[l] += h;
        m[l] -= h;
        let (ap, am) = (a(p), a(m));
        da.push(vec![(&ap[0] - &am[0]) / (2.0 * h), (&ap[1] - &am[1]) / (2.0 * h)]);
    }
    let fd = &da[0][1] - &da[1][0] + commutator(&a0[0], &a0[1]);
    assert!(max_abs(&(&fd - &r[0][1])) < 1e-4 * max_abs(&r[0][1]));
}

#[test]
fn sphere_ricci_and_field_equation_match_symbolic_oracle() {
    // independent symbolic computation of r and of 𝔖(∇r) for the sphere preset
    let conn = presets::sphere();
    for p in [[0.3, -0.45], [1.2, 0.7], [-0.5, 0.1]] {
        let (x, y) = (p[0], p[1]);
        let q = 1.0 + x * x + y * y;
        let want = RMat::from_row_slice(
            2,
            2,
            &[4.0 * (x * x - 5.0 * y * y - 2.0), 24.0 * x * y, 24.0 * x * y, 4.0 * (-5.0 * x * x + y * y - 2.0)],
        ) / (q * q);
        let cv = conn.curvature(&p).unwrap();
        assert!(max_abs(&(&cv.ricci - &want)) < 1e-12, "{p:?}");
        let f000 = 72.0 * x * (-x * x - 5.0 * y * y + 3.0) / (q * q * q);
        assert!(conn.field_eq_residual(&p).unwrap() >= f000.abs() - 1e-12);
    }
}

fn inversion() -> (Vec<Expr>, Vec<Expr>) {
    let s = vec![e("x/(x^2+y^2)"), e("-y/(x^2+y^2)")];
    (s.clone(), s)
}

#[test]
fn pushforward_by_affine_maps_preserves_trivial_connection() {
    let t = pullback(vec![e("x+2"), e("y-1")], vec![e("x-2"), e("y+1")], &presets::trivial()).unwrap();
    let lin = pullback(vec![e("2*x+y"), e("x+y")], vec![e("x-y"), e("-x+2*y")], &presets::trivial()).unwrap();
    for p in grid((-1.0, -1.0), (1.0, 1.0), 4) {
        assert!(t.christoffel(&p).unwrap().iter().all(|m| max_abs(m) < 1e-14));
        assert!(lin.christoffel(&p).unwrap().iter().all(|m| max_abs(m) < 1e-13));
    }
}

#[test]
fn round_sphere_connection_is_inversion_invariant() {
    let conn = presets::sphere_lc();
    let (s, si) = inversion();
    let pb = pullback(s, si, &conn).unwrap();
    for p in [[0.5, 0.2], [-1.3, 0.7], [0.1, -1.9]] {
        let a = conn.christoffel(&p).unwrap();
        let b = pb.christoffel(&p).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(max_abs(&(x - y)) < 1e-10);
        }
    }
}

#[test]
fn alpha_beta_sphere_preset_is_not_inversion_invariant() {
    let (s, si) = inversion();
    let conn = presets::sphere();
    let pb = pullback(s, si, &conn).unwrap();
    let p = [0.5, 0.2];
    let diff = conn.christoffel(&p).unwrap()[0].clone() - pb.christoffel(&p).unwrap()[0].clone();
    assert!(max_abs(&diff) > 1e-2);
}

#[test]
fn pushforward_curvature_naturality() {
    let (s, si) = inversion();
    let conn = presets::sphere();
    let pb = pullback(s.clone(), si, &conn).unwrap();
    for p in [[0.5, 0.2], [-1.3, 0.7], [0.9, -0.4]] {
        let jac = {
            let jx = s[0].jet(&p, 1).unwrap();
            let jy = s[1].jet(&p, 1).unwrap();
            RMat::from_row_slice(2, 2, &[jx.d1(0).re, jx.d1(1).re, jy.d1(0).re, jy.d1(1).re])
        };
        let y = [s[0].eval(&p).unwrap().re, s[1].eval(&p).unwrap().re];
        let (ex, ey) = (DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, 1.0]));
        let r = conn.curvature_endo(&p, &ex, &ey).unwrap();
        let r2 = pb.curvature_endo(&y, &(&jac * &ex), &(&jac * &ey)).unwrap();
        // R'(σX, σY) σ = σ R(X, Y)
        let lhs = &r2 * &jac;
        let rhs = &jac * &r;
        assert!(max_abs(&(&lhs - &rhs)) < 1e-6 * max_abs(&rhs).max(1.0));
    }
}

#[test]
fn general_gamma_validation_rejects_non_symplectic_input() {
    let z = || e("0");
    let mut g = vec![vec![vec![z(), z()], vec![z(), z()]], vec![vec![z(), z()], vec![z(), z()]]];
    g[0][0][1] = e("1");
    assert!(matches!(SymplecticConnection::from_gamma(g.clone()), Err(Error::Torsion(_))));
    g[0][1][0] = e("1");
    assert!(matches!(SymplecticConnection::from_gamma(g.clone()), Err(Error::NotSymplectic(_))));
    assert!(SymplecticConnection::linear(g).is_ok());
    assert!(SymplecticConnection::constant(vec![RMat::identity(2, 2), RMat::zeros(2, 2)]).is_err());
}

#[test]
fn preset_lookup() {
    for name in presets::NAMES {
        let conn = presets::by_name(name).unwrap();
        assert_eq!(conn.label(), Some(name));
    }
    assert!(presets::by_name("nope").unwrap_err().to_string().contains("unknown preset"));
}

#[test]
fn alpha_beta_read_back() {
    let conn = presets::sphere();
    let p = [0.4, 0.3];
    let (al, be) = conn.alpha_beta_at(&p).unwrap();
    let want = e("-2*zb/(1+abs2(z))").eval(&p).unwrap();
    assert!((al - want).norm() < 1e-14 && be.norm() < 1e-14);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn poly(c: &[f64]) -> String {
        let monos = ["1", "z", "zb", "z*zb", "z^2"];
        let mut t = String::from("0");
        for (k, m) in monos.iter().enumerate() {
            t.push_str(&format!(" + ({:?} + {:?}*i)*{m}", c[2 * k], c[2 * k + 1]));
        }
        t
    }

    proptest! {
        #[test]
        fn random_plane_connections_are_symplectic(
            ca in proptest::collection::vec(-1.0f64..1.0, 10),
            cb in proptest::collection::vec(-1.0f64..1.0, 10),
            x in -1.0f64..1.0,
            y in -1.0f64..1.0,
        ) {
            let conn = SymplecticConnection::from_alpha_beta(e(&poly(&ca)), e(&poly(&cb))).unwrap();
            prop_assert!(conn.torsion_residual(&[x, y]).unwrap() < 1e-9);
            prop_assert!(conn.symplectic_residual(&[x, y]).unwrap() < 1e-9);
            let (_, _, w) = conn.ricci_decomposition(&[x, y]).unwrap();
            prop_assert!(max_abs(&w.ricci_trace()) < 1e-8);
        }

        #[test]
        fn real_and_complex_coefficients_round_trip(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0) {
            let (al, be) = real_to_complex_values(a, b, c, d);
            let back = complex_to_real_values(al, be);
            for (u, v) in back.iter().zip([a, b, c, d]) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }
    }
}
