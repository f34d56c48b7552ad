//! Random sampling helpers driven by a caller-supplied generator.

#[allow(unused_imports)]
use num_traits::Float;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::linalg::{CMat, RVec};

pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Standard normal deviate (Box–Muller).
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

pub fn normal_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> RVec {
    RVec::from_fn(len, |_, _| normal(rng))
}

pub fn in_box<R: Rng + ?Sized>(rng: &mut R, bx: &[(f64, f64)]) -> RVec {
    RVec::from_iterator(bx.len(), bx.iter().map(|&(lo, hi)| uniform(rng, lo, hi)))
}

/// Uniform point of the disk `|w| ≤ rmax`.
pub fn in_disk<R: Rng + ?Sized>(rng: &mut R, rmax: f64) -> C64 {
    let r = rmax * rng.random::<f64>().sqrt();
    C64::from_polar(r, uniform(rng, 0.0, core::f64::consts::TAU))
}

/// Complex symmetric `W` with operator norm at most `wmax`.
pub fn in_siegel<R: Rng + ?Sized>(rng: &mut R, n: usize, wmax: f64) -> CMat {
    if n == 1 {
        return CMat::from_element(1, 1, in_disk(rng, wmax));
    }
    let mut w = CMat::zeros(n, n);
    for k in 0..n {
        for l in k..n {
            let v = C64::new(normal(rng), normal(rng));
            w[(k, l)] = v;
            w[(l, k)] = v;
        }
    }
    let norm = w.clone().svd(false, false).singular_values.max();
    let target = wmax * rng.random::<f64>().powf(1.0 / (n * (n + 1)) as f64);
    w * C64::new(target / norm, 0.0)
}
