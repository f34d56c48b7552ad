//! Truncated multivariate Taylor series with complex coefficients.
//!
//! The coefficient stored for monomial `x^α` is `∂^α f / α!`, so first
//! partials are read off directly and second partials pick up a factor 2 on
//! the diagonal.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};
use num_complex::Complex64 as C64;

/// Monomial bookkeeping shared by all jets of one (variables, order) pair.
#[derive(Debug)]
pub struct JetLayout {
    nvars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    degree: Vec<usize>,
    // number of monomials with degree <= d
    upto: Vec<usize>,
    index: BTreeMap<Vec<u8>, usize>,
    // (i, j, k): monomial i times monomial j equals monomial k; sorted by deg(k)
    mul: Vec<(u32, u32, u32)>,
    mul_upto: Vec<usize>,
    // per variable: (source, target, factor)
    deriv: Vec<Vec<(u32, u32, f64)>>,
}

impl JetLayout {
    pub fn new(nvars: usize, order: usize) -> Arc<Self> {
        let mut exps: Vec<Vec<u8>> = Vec::new();
        let mut degree = Vec::new();
        let mut upto = Vec::new();
        for d in 0..=order {
            let mut cur = vec![0u8; nvars];
            push_degree(&mut exps, &mut cur, 0, d);
            while degree.len() < exps.len() {
                degree.push(d);
            }
            upto.push(exps.len());
        }
        let mut index = BTreeMap::new();
        for (i, e) in exps.iter().enumerate() {
            index.insert(e.clone(), i);
        }
        let mut mul = Vec::new();
        for i in 0..exps.len() {
            for j in 0..exps.len() {
                if degree[i] + degree[j] > order {
                    continue;
                }
                let sum: Vec<u8> = exps[i].iter().zip(&exps[j]).map(|(a, b)| a + b).collect();
                let k = index[&sum];
                mul.push((i as u32, j as u32, k as u32));
            }
        }
        mul.sort_by_key(|&(_, _, k)| degree[k as usize]);
        let mut mul_upto = vec![0; order + 1];
        for (d, slot) in mul_upto.iter_mut().enumerate() {
            *slot = mul.iter().take_while(|m| degree[m.2 as usize] <= d).count();
        }
        let mut deriv = Vec::new();
        for v in 0..nvars {
            let mut list = Vec::new();
            for (i, e) in exps.iter().enumerate() {
                if e[v] == 0 {
                    continue;
                }
                let mut lower = e.clone();
                lower[v] -= 1;
                list.push((i as u32, index[&lower] as u32, e[v] as f64));
            }
            deriv.push(list);
        }
        Arc::new(JetLayout { nvars, order, exps, degree, upto, index, mul, mul_upto, deriv })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, pos: usize, left: usize) {
    if pos + 1 == cur.len() {
        cur[pos] = left as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    if cur.is_empty() {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k as u8;
        push_degree(out, cur, pos + 1, left - k);
    }
    cur[pos] = 0;
}

/// A truncated Taylor expansion around a point.
#[derive(Clone, Debug)]
pub struct Jet {
    layout: Arc<JetLayout>,
    order: usize,
    c: Vec<C64>,
}

impl Jet {
    pub fn constant(layout: &Arc<JetLayout>, v: C64) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); layout.len()];
        c[0] = v;
        Jet { layout: layout.clone(), order: layout.order, c }
    }

    /// The coordinate function `x_var` expanded around `value`.
    pub fn variable(layout: &Arc<JetLayout>, var: usize, value: f64) -> Self {
        let mut j = Jet::constant(layout, C64::new(value, 0.0));
        if layout.order >= 1 {
            let mut e = vec![0u8; layout.nvars];
            e[var] = 1;
            let idx = layout.index[&e];
            j.c[idx] = C64::new(1.0, 0.0);
        }
        j
    }

    /// Identity jets for every variable at the point `p`.
    pub fn seed(p: &[f64], order: usize) -> Vec<Jet> {
        let layout = JetLayout::new(p.len(), order);
        p.iter().enumerate().map(|(i, &v)| Jet::variable(&layout, i, v)).collect()
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.c
    }

    /// Taylor coefficient of the monomial with the given exponents.
    pub fn coeff(&self, exps: &[u8]) -> C64 {
        let deg: usize = exps.iter().map(|&e| e as usize).sum();
        if deg > self.order {
            return C64::new(0.0, 0.0);
        }
        self.layout.index.get(exps).map(|&i| self.c[i]).unwrap_or(C64::new(0.0, 0.0))
    }

    /// First partial derivative in variable `v`.
    pub fn d1(&self, v: usize) -> C64 {
        let mut e = vec![0u8; self.layout.nvars];
        e[v] = 1;
        self.coeff(&e)
    }

    /// Second partial derivative in variables `v`, `w`.
    pub fn d2(&self, v: usize, w: usize) -> C64 {
        let mut e = vec![0u8; self.layout.nvars];
        e[v] += 1;
        e[w] += 1;
        let c = self.coeff(&e);
        if v == w {
            c * 2.0
        } else {
            c
        }
    }

    /// The derivative jet `∂f/∂x_v`, one order lower.
    pub fn deriv(&self, v: usize) -> Jet {
        let mut c = vec![C64::new(0.0, 0.0); self.layout.len()];
        if self.order == 0 {
            return Jet { layout: self.layout.clone(), order: 0, c };
        }
        for &(src, dst, f) in &self.layout.deriv[v] {
            if self.layout.degree[src as usize] <= self.order {
                c[dst as usize] = self.c[src as usize] * f;
            }
        }
        Jet { layout: self.layout.clone(), order: self.order - 1, c }
    }

    /// Drops terms above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        let mut c = self.c.clone();
        for v in c.iter_mut().skip(self.layout.upto[order]) {
            *v = C64::new(0.0, 0.0);
        }
        Jet { layout: self.layout.clone(), order, c }
    }

    pub fn scale(&self, s: C64) -> Jet {
        Jet { layout: self.layout.clone(), order: self.order, c: self.c.iter().map(|v| v * s).collect() }
    }

    pub fn add_const(&self, s: C64) -> Jet {
        let mut r = self.clone();
        r.c[0] += s;
        r
    }

    pub fn conj(&self) -> Jet {
        Jet { layout: self.layout.clone(), order: self.order, c: self.c.iter().map(|v| v.conj()).collect() }
    }

    pub fn re(&self) -> Jet {
        Jet { layout: self.layout.clone(), order: self.order, c: self.c.iter().map(|v| C64::new(v.re, 0.0)).collect() }
    }

    pub fn im(&self) -> Jet {
        Jet { layout: self.layout.clone(), order: self.order, c: self.c.iter().map(|v| C64::new(v.im, 0.0)).collect() }
    }

    /// `Σ_k coef[k] (self − self(0))^k`, the composition with a univariate
    /// series given by its Taylor coefficients at the base value.
    pub fn compose(&self, coef: &[C64]) -> Jet {
        let d = self.order.min(coef.len().saturating_sub(1));
        let mut delta = self.clone();
        delta.c[0] = C64::new(0.0, 0.0);
        let mut r = Jet::constant(&self.layout, coef[d]);
        r.order = self.order;
        for k in (0..d).rev() {
            r = &r * &delta;
            r.c[0] += coef[k];
        }
        r
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let inv = a.inv();
        let mut coef = Vec::with_capacity(self.order + 1);
        let mut p = inv;
        for k in 0..=self.order {
            coef.push(if k % 2 == 0 { p } else { -p });
            p *= inv;
        }
        self.compose(&coef)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut coef = Vec::new();
        let mut f = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                f *= k as f64;
            }
            coef.push(e / f);
        }
        self.compose(&coef)
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let inv = a.inv();
        let mut coef = vec![a.ln()];
        let mut p = inv;
        for k in 1..=self.order {
            let s = if k % 2 == 1 { 1.0 } else { -1.0 };
            coef.push(p * (s / k as f64));
            p *= inv;
        }
        self.compose(&coef)
    }

    pub fn sqrt(&self) -> Jet {
        let a = self.value();
        let s = a.sqrt();
        let inv = a.inv();
        let mut coef = Vec::new();
        let mut binom = 1.0;
        let mut p = s;
        for k in 0..=self.order {
            if k > 0 {
                binom *= (0.5 - (k as f64 - 1.0)) / k as f64;
                p *= inv;
            }
            coef.push(p * binom);
        }
        self.compose(&coef)
    }

    pub fn sin(&self) -> Jet {
        self.trig(false)
    }

    pub fn cos(&self) -> Jet {
        self.trig(true)
    }

    fn trig(&self, cosine: bool) -> Jet {
        let a = self.value();
        let (s, c) = (a.sin(), a.cos());
        let cycle = if cosine { [c, -s, -c, s] } else { [s, c, -s, -c] };
        let mut coef = Vec::new();
        let mut f = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                f *= k as f64;
            }
            coef.push(cycle[k % 4] / f);
        }
        self.compose(&coef)
    }

    pub fn powi(&self, n: i32) -> Jet {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut result = Jet::constant(&self.layout, C64::new(1.0, 0.0));
        result.order = self.order;
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    fn zip(&self, o: &Jet, f: impl Fn(C64, C64) -> C64) -> Jet {
        let order = self.order.min(o.order);
        let mut c: Vec<C64> = self.c.iter().zip(&o.c).map(|(a, b)| f(*a, *b)).collect();
        for v in c.iter_mut().skip(self.layout.upto[order]) {
            *v = C64::new(0.0, 0.0);
        }
        Jet { layout: self.layout.clone(), order, c }
    }
}

impl<'a> Add for &'a Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a + b)
    }
}

impl<'a> Sub for &'a Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a - b)
    }
}

impl<'a> Mul for &'a Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let order = self.order.min(o.order);
        let mut c = vec![C64::new(0.0, 0.0); self.layout.len()];
        for &(i, j, k) in &self.layout.mul[..self.layout.mul_upto[order]] {
            c[k as usize] += self.c[i as usize] * o.c[j as usize];
        }
        Jet { layout: self.layout.clone(), order, c }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        &self + &o
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        &self - &o
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        &self * &o
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn layout_counts() {
        let l = JetLayout::new(4, 2);
        assert_eq!(l.len(), 15);
        let l = JetLayout::new(2, 3);
        assert_eq!(l.len(), 10);
        let l = JetLayout::new(0, 2);
        assert_eq!(l.len(), 1);
    }

    #[test]
    fn product_rule() {
        let v = Jet::seed(&[0.3, -0.7], 2);
        let f = &(&v[0] * &v[0]) * &v[1];
        assert!((f.value() - c(0.09 * -0.7)).norm() < 1e-15);
        assert!((f.d1(0) - c(2.0 * 0.3 * -0.7)).norm() < 1e-15);
        assert!((f.d1(1) - c(0.09)).norm() < 1e-15);
        assert!((f.d2(0, 0) - c(2.0 * -0.7)).norm() < 1e-15);
        assert!((f.d2(0, 1) - c(0.6)).norm() < 1e-15);
    }

    #[test]
    fn elementary_functions_second_order() {
        let v = Jet::seed(&[0.4], 3);
        let x = 0.4f64;
        let cases: [(Jet, [f64; 4]); 5] = [
            (v[0].exp(), [x.exp(), x.exp(), x.exp(), x.exp()]),
            (v[0].sin(), [x.sin(), x.cos(), -x.sin(), -x.cos()]),
            (v[0].ln(), [x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)]),
            (v[0].sqrt(), [x.sqrt(), 0.5 / x.sqrt(), -0.25 * x.powf(-1.5), 0.375 * x.powf(-2.5)]),
            (v[0].recip(), [1.0 / x, -1.0 / (x * x), 2.0 / x.powi(3), -6.0 / x.powi(4)]),
        ];
        for (jet, want) in cases.iter() {
            let mut fact = 1.0;
            for (k, w) in want.iter().enumerate() {
                if k > 0 {
                    fact *= k as f64;
                }
                let got = jet.coeff(&[k as u8]) * fact;
                assert!((got - c(*w)).norm() < 1e-12, "k={k} got {got} want {w}");
            }
        }
    }

    #[test]
    fn derivative_lowers_order() {
        let v = Jet::seed(&[1.0, 2.0], 2);
        let f = &v[0] * &v[1];
        let fx = f.deriv(0);
        assert_eq!(fx.order(), 1);
        assert!((fx.value() - c(2.0)).norm() < 1e-15);
        assert!((fx.d1(1) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn powi_negative_matches_recip() {
        let v = Jet::seed(&[1.3, 0.2], 2);
        let s = &v[0] + &v[1];
        let a = s.powi(-2);
        let b = &s.recip() * &s.recip();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((x - y).norm() < 1e-14);
        }
    }
}
