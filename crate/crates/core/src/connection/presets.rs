//! Named example connections.

use alloc::vec;
use alloc::vec::Vec;

use super::{real_coeff_matrices, SymplecticConnection};
use crate::error::{Error, Result};
use crate::exprfield::{parse_expr, Expr, Predicate, VarScheme};

pub const NAMES: [&str; 5] = ["trivial", "sphere", "log_example", "sphere_lc", "flat_ti"];

fn e(s: &str) -> Expr {
    parse_expr(s, 1).expect("preset expression")
}

/// `α = β = 0`.
pub fn trivial() -> SymplecticConnection {
    SymplecticConnection::trivial(1).with_label("trivial")
}

/// `α = −2z̄/(1+|z|²)`, `β = 0`.
pub fn sphere() -> SymplecticConnection {
    SymplecticConnection::from_alpha_beta(e("-2*zb/(1+abs2(z))"), e("0"))
        .expect("preset")
        .with_label("sphere")
}

/// `a = c = 0`, `d = x`, `b = −1/(2x)` on `x > 0`.
pub fn log_example() -> SymplecticConnection {
    SymplecticConnection::from_real_coeffs(e("0"), e("-1/(2*x)"), e("0"), e("x"))
        .expect("preset")
        .with_domain(Predicate::parse_with("x > 0", &VarScheme::base(1)).expect("preset"))
        .with_sample_box(vec![(0.5, 3.0), (-2.0, 2.0)])
        .with_label("log_example")
}

/// Levi-Civita connection of the round metric `4|dz|²/(1+|z|²)²`:
/// `∇∂z∂z = Γ∂z` with `Γ = −2z̄/(1+|z|²)`, mixed terms zero.
pub fn sphere_lc() -> SymplecticConnection {
    let re = "(-2*x/(1+x^2+y^2))";
    let im = "(2*y/(1+x^2+y^2))";
    let neg = |s: &str| e(&alloc::format!("-{s}"));
    let gx: Vec<Vec<Expr>> = vec![vec![e(re), neg(im)], vec![neg(im), neg(re)]];
    let gy: Vec<Vec<Expr>> = vec![vec![e(im), e(re)], vec![e(re), neg(im)]];
    SymplecticConnection::linear(vec![gx, gy]).expect("preset").with_label("sphere_lc")
}

/// Translation-invariant flat connection `(a,b,c,d) = (1,0,0,0)`.
pub fn flat_ti() -> SymplecticConnection {
    SymplecticConnection::constant(real_coeff_matrices(1.0, 0.0, 0.0, 0.0).to_vec())
        .expect("preset")
        .with_label("flat_ti")
}

pub fn by_name(name: &str) -> Result<SymplecticConnection> {
    Ok(match name {
        "trivial" => trivial(),
        "sphere" => sphere(),
        "log_example" => log_example(),
        "sphere_lc" => sphere_lc(),
        "flat_ti" => flat_ti(),
        _ => return Err(Error::Invalid(alloc::format!("unknown preset `{name}` (known: {})", NAMES.join(", ")))),
    })
}
