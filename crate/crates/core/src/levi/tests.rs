use super::*;
use crate::connection::presets;
use crate::sampling;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn levi_expr(s: &str) -> Expr {
    Expr::parse_with(s, &VarScheme::levi()).unwrap()
}

fn laplacian_fd<F: Fn(C64) -> f64>(f: F, w: C64) -> f64 {
    let h = 1e-4;
    let s = f(w + h) + f(w - h) + f(w + c(0.0, h)) + f(w - c(0.0, h)) - 4.0 * f(w);
    s / (h * h)
}

#[test]
fn oka_examples() {
    assert_eq!(oka_phi(1.0, &[0.0, 0.0]).unwrap(), 0.0);
    let r = (1.0 - (-1.0f64).exp()).sqrt();
    assert!((oka_phi(1.0, &[r, 0.0]).unwrap() - 1.0).abs() < 1e-12);
    assert!(matches!(oka_phi(1.0, &[1.0, 0.0]), Err(Error::OutsideDomain(_))));
    assert!(oka_phi(1.0, &[0.0, 0.999999]).unwrap() > 13.0);
    let e = oka_expr(2.0).unwrap();
    assert!((e.eval(&[0.5, 1.0]).unwrap().re - oka_phi(2.0, &[0.5, 1.0]).unwrap()).abs() < 1e-14);
}

#[test]
fn fibre_distance_examples() {
    assert_eq!(fibre_distance_sq(c(0.3, -0.2), c(0.3, -0.2)).unwrap(), 0.0);
    assert!((fibre_distance_sq(c(0.5, 0.0), c(0.0, 0.0)).unwrap() - 0.301_737_240_203).abs() < 1e-11);
    assert!(fibre_distance_sq(c(0.0, 0.999_999_9), c(0.0, 0.0)).unwrap() > 50.0);
    assert!(matches!(fibre_distance_sq(c(1.0, 0.0), c(0.0, 0.0)), Err(Error::OutsideSiegel(_))));
}

#[test]
fn fibre_distance_mobius_invariant() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let (w, w0, a) = (sampling::in_disk(&mut r, 0.9), sampling::in_disk(&mut r, 0.9), sampling::in_disk(&mut r, 0.9));
        let rot = C64::from_polar(1.0, sampling::uniform(&mut r, 0.0, 6.0));
        let g = |u: C64| rot * (u - a) / (c(1.0, 0.0) - a.conj() * u);
        let d0 = fibre_distance_sq(w, w0).unwrap();
        let d1 = fibre_distance_sq(g(w), g(w0)).unwrap();
        assert!((d0 - d1).abs() < 1e-10 * (1.0 + d0));
        assert!((d0 - fibre_distance_sq(w0, w).unwrap()).abs() < 1e-10 * (1.0 + d0));
    }
}

#[test]
fn fibre_levi_matches_laplacian() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    for k in 0..30 {
        let w0 = if k < 10 { c(0.0, 0.0) } else { sampling::in_disk(&mut r, 0.6) };
        let w = if k == 0 { c(0.0, 0.0) } else { sampling::in_disk(&mut r, 0.8) };
        let fd = laplacian_fd(|u| fibre_distance_sq(u, w0).unwrap(), w);
        let exact = fibre_levi(w, w0).unwrap();
        assert!((fd - exact).abs() < 1e-4 * (1.0 + exact), "{fd} {exact}");
    }
    assert!((fibre_levi(c(0.0, 0.0), c(0.0, 0.0)).unwrap() - 4.0).abs() < 1e-12);
}

#[test]
fn chart_round_trip() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let z = c(sampling::normal(&mut r), sampling::normal(&mut r));
        let w = sampling::in_disk(&mut r, 0.95);
        assert!((z_of(xi_of(z, w), w).unwrap() - z).norm() < 1e-9 * (1.0 + z.norm()));
    }
}

#[test]
fn levi_form_examples() {
    let l = levi_form(&levi_expr("xi*xib"), c(0.3, 0.1), c(0.2, -0.4)).unwrap();
    assert!((l.matrix[(0, 0)] - 4.0).norm() < 1e-12);
    assert!(l.matrix[(0, 1)].norm() + l.matrix[(1, 0)].norm() + l.matrix[(1, 1)].norm() < 1e-12);
    assert_eq!(l.positive, 1);
    assert_eq!(l.eigenvalues.len(), 2);
    assert!(l.eigenvalues[0] >= l.eigenvalues[1]);
    let re = levi_form(&levi_expr("(xi + xib)/2"), c(0.3, 0.1), c(0.2, -0.4)).unwrap();
    assert_eq!(re.positive, 0);
    assert!(re.matrix.iter().all(|v| v.norm() < 1e-12));
    // off-diagonal: |ξ + w|² has rank one Levi form 4[[1,1],[1,1]]
    let m = levi_form(&levi_expr("(xi + w)*(xib + wb)"), c(0.1, 0.2), c(0.3, 0.0)).unwrap();
    assert!(m.matrix.iter().all(|v| (v - 4.0).norm() < 1e-12));
    assert_eq!(m.positive, 1);
}

#[test]
fn fibre_function_positive_in_w_direction() {
    let spec = ExhaustionSpec::fibre_only();
    let grid = ScanGrid::new([(-1.0, 1.0), (-1.0, 1.0)], 3, 3, 15, 0.95).unwrap();
    for (z, w) in grid.points() {
        let l = exhaustion_levi(&spec, z, w).unwrap();
        assert_eq!(l.positive, 1);
        assert!(l.matrix[(1, 1)].re > 0.0 && l.matrix[(0, 0)].norm() == 0.0);
    }
}

#[test]
fn scans() {
    let conn = presets::trivial();
    let grid = ScanGrid::new([(-0.7, 0.7), (-0.7, 0.7)], 15, 15, 12, 0.95).unwrap();
    let oka = completeness_scan(&conn, &ExhaustionSpec::oka(1.0).unwrap(), &grid).unwrap();
    assert!(oka.certificate && oka.min_positive >= 1, "{oka:?}");
    assert!(oka.max_hermitian_residual < 1e-10);
    let stein = completeness_scan(&conn, &ExhaustionSpec::stein().unwrap(), &grid).unwrap();
    assert_eq!(stein.min_positive, 2);
    assert!(stein.stein && stein.certificate);
    let neg = completeness_scan(&conn, &ExhaustionSpec::chart_function(levi_expr("(xi + xib)/2")).unwrap(), &grid).unwrap();
    assert_eq!(neg.max_positive, 0);
    assert!(!neg.certificate);
}

#[test]
fn scan_errors() {
    let grid = ScanGrid::new([(-0.9, 0.9), (-0.9, 0.9)], 3, 3, 3, 0.5).unwrap();
    assert!(matches!(
        completeness_scan(&presets::sphere(), &ExhaustionSpec::stein().unwrap(), &grid),
        Err(Error::ChartUnavailable(_))
    ));
    let wide = ScanGrid::new([(-1.0, 1.0), (-1.0, 1.0)], 3, 3, 3, 0.5).unwrap();
    assert!(matches!(
        completeness_scan(&presets::trivial(), &ExhaustionSpec::oka(1.0).unwrap(), &wide),
        Err(Error::OutsideDomain(_))
    ));
    assert!(ScanGrid::new([(0.0, 1.0), (0.0, 1.0)], 2, 2, 2, 0.99).is_err());
}

#[test]
fn fibre_restriction_matches_intrinsic() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    for spec in [ExhaustionSpec::oka(1.0).unwrap(), ExhaustionSpec::stein().unwrap(), ExhaustionSpec::fibre_only().with_reference(c(0.2, 0.1)).unwrap()] {
        for _ in 0..20 {
            let z = sampling::in_disk(&mut r, 0.6);
            let w = sampling::in_disk(&mut r, 0.9);
            assert!(fibre_restriction_residual(&spec, z, w).unwrap() < 1e-8);
        }
    }
}

#[test]
fn exhaustion_value_and_levels() {
    let spec = ExhaustionSpec::oka(1.0).unwrap();
    let v = spec.value(c(0.0, 0.0), c(0.5, 0.0)).unwrap();
    assert!((v - 0.5f64.atanh().powi(2)).abs() < 1e-12);
    // {ψ ≤ c} stays inside |w| ≤ tanh(√c)
    let cap = 2.0;
    let grid = ScanGrid::new([(-0.7, 0.7), (-0.7, 0.7)], 5, 5, 11, 0.95).unwrap();
    for (z, w) in grid.points() {
        if spec.value(z, w).unwrap() <= cap {
            assert!(w.norm() <= cap.sqrt().tanh() + 1e-12);
        }
    }
}

#[test]
fn constant_section_matches_closed_form() {
    let w0 = c(0.2, 0.1);
    let sec = Expr::parse_with("0.2 + 0.1*i", &VarScheme::base(1)).unwrap();
    let a = ExhaustionSpec::oka(1.0).unwrap().with_reference(w0).unwrap();
    let b = ExhaustionSpec::oka(1.0).unwrap().with_section(sec).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(5);
    for k in 0..30 {
        let z = sampling::in_disk(&mut r, 0.6);
        let w = if k == 0 { w0 } else { sampling::in_disk(&mut r, 0.9) };
        let (la, lb) = (exhaustion_levi(&a, z, w).unwrap(), exhaustion_levi(&b, z, w).unwrap());
        assert!((la.matrix.clone() - lb.matrix).iter().all(|v| v.norm() < 1e-8 * (1.0 + la.matrix[(1, 1)].norm())));
        assert!((a.value(z, w).unwrap() - b.value(z, w).unwrap()).abs() < 1e-14);
    }
}

#[test]
fn varying_section_matches_finite_differences() {
    let sec = Expr::parse_with("0.3*x - 0.2*i*y*y + 0.1", &VarScheme::base(1)).unwrap();
    let spec = ExhaustionSpec::fibre_only().with_section(sec).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-4;
    for _ in 0..20 {
        let z = sampling::in_disk(&mut r, 0.8);
        let w = sampling::in_disk(&mut r, 0.8);
        let (xi, l) = (xi_of(z, w), exhaustion_levi(&spec, z, w).unwrap());
        let f = |x: C64, u: C64| spec.value(z_of(x, u).unwrap(), u).unwrap();
        // 4∂²/∂ζ_i∂ζ̄_j by central differences along ζ_i, iζ_i
        let e = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        let at = |d: C64, ei: usize| f(xi + e[ei][0] * d, w + e[ei][1] * d);
        for i in 0..2 {
            let lap = (at(c(h, 0.0), i) + at(c(-h, 0.0), i) + at(c(0.0, h), i) + at(c(0.0, -h), i) - 4.0 * f(xi, w)) / (h * h);
            assert!((lap - l.matrix[(i, i)].re).abs() < 1e-4 * (1.0 + lap.abs()), "{lap} {}", l.matrix[(i, i)]);
        }
        // off-diagonal from the polarised second difference
        let g = |a: C64, b: C64| f(xi + a, w + b);
        let d2 = |p: C64, q: C64| (g(p * h, q * h) - g(p * h, -q * h) - g(-p * h, q * h) + g(-p * h, -q * h)) / (4.0 * h * h);
        // ∂²/∂x_ξ∂x_w etc. assembled into 4∂²/∂ξ∂w̄
        let (xx, xy, yx, yy) = (d2(c(1.0, 0.0), c(1.0, 0.0)), d2(c(1.0, 0.0), c(0.0, 1.0)), d2(c(0.0, 1.0), c(1.0, 0.0)), d2(c(0.0, 1.0), c(0.0, 1.0)));
        let off = c(xx + yy, xy - yx);
        assert!((off - l.matrix[(0, 1)]).norm() < 1e-4 * (1.0 + off.norm()), "{off} {}", l.matrix[(0, 1)]);
        assert!(l.hermitian_residual() < 1e-10);
        assert!(fibre_restriction_residual(&spec, z, w).unwrap() < 1e-8);
    }
}

proptest! {
    #[test]
    fn levi_matrices_are_hermitian(zr in -0.6f64..0.6, zi in -0.6f64..0.6, wr in -0.6f64..0.6, wi in -0.6f64..0.6) {
        let (z, w) = (c(zr, zi), c(wr, wi));
        for spec in [ExhaustionSpec::oka(1.0).unwrap(), ExhaustionSpec::stein().unwrap()] {
            let l = exhaustion_levi(&spec, z, w).unwrap();
            prop_assert!(l.hermitian_residual() < 1e-10);
            prop_assert!(l.positive >= 1);
        }
    }

    #[test]
    fn fibre_distance_nonnegative_zero_on_diagonal(wr in -0.7f64..0.7, wi in -0.7f64..0.7, ar in -0.7f64..0.7, ai in -0.7f64..0.7) {
        let (w, a) = (c(wr, wi), c(ar, ai));
        let d = fibre_distance_sq(w, a).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(fibre_distance_sq(a, a).unwrap(), 0.0);
        prop_assert!(d > 0.0 || w == a);
    }
}
