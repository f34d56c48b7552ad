//! Square matrices of jets.

use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::exprfield::{Jet, JetLayout};
use crate::linalg::RMat;
use alloc::sync::Arc;

#[derive(Debug, Clone)]
pub struct JMat {
    pub dim: usize,
    pub e: Vec<Jet>,
}

impl JMat {
    pub fn zeros(layout: &Arc<JetLayout>, dim: usize) -> JMat {
        let z = Jet::constant(layout, C64::new(0.0, 0.0));
        JMat { dim, e: alloc::vec![z; dim * dim] }
    }

    pub fn from_real(layout: &Arc<JetLayout>, m: &RMat) -> JMat {
        let dim = m.nrows();
        let mut e = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                e.push(Jet::constant(layout, C64::new(m[(r, c)], 0.0)));
            }
        }
        JMat { dim, e }
    }

    pub fn at(&self, r: usize, c: usize) -> &Jet {
        &self.e[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Jet) {
        self.e[r * self.dim + c] = v;
    }

    pub fn add(&self, o: &JMat) -> JMat {
        JMat { dim: self.dim, e: self.e.iter().zip(&o.e).map(|(a, b)| a + b).collect() }
    }

    pub fn scale_by(&self, s: &Jet) -> JMat {
        JMat { dim: self.dim, e: self.e.iter().map(|a| a * s).collect() }
    }

    pub fn mul(&self, o: &JMat) -> JMat {
        let d = self.dim;
        let mut e = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                let mut acc = self.at(r, 0) * o.at(0, c);
                for k in 1..d {
                    acc = &acc + &(self.at(r, k) * o.at(k, c));
                }
                e.push(acc);
            }
        }
        JMat { dim: d, e }
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> JMat {
        JMat { dim: self.dim, e: self.e.iter().map(f).collect() }
    }

    /// Gauss–Jordan inverse with partial pivoting on base values.
    pub fn inverse(&self) -> Result<JMat> {
        let d = self.dim;
        let layout = self.e[0].layout().clone();
        let mut a = self.clone();
        let mut inv = JMat::zeros(&layout, d);
        let one = Jet::constant(&layout, C64::new(1.0, 0.0));
        for i in 0..d {
            inv.set(i, i, one.clone());
        }
        for col in 0..d {
            let piv = (col..d)
                .max_by(|&x, &y| a.at(x, col).value().norm().total_cmp(&a.at(y, col).value().norm()))
                .unwrap_or(col);
            if a.at(piv, col).value().norm() < 1e-300 {
                return Err(Error::Singular("Jacobian".into()));
            }
            if piv != col {
                for c in 0..d {
                    a.e.swap(piv * d + c, col * d + c);
                    inv.e.swap(piv * d + c, col * d + c);
                }
            }
            let p = a.at(col, col).recip();
            for c in 0..d {
                let v = a.at(col, c) * &p;
                a.set(col, c, v);
                let v = inv.at(col, c) * &p;
                inv.set(col, c, v);
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let f = a.at(r, col).clone();
                for c in 0..d {
                    let v = a.at(r, c) - &(&f * a.at(col, c));
                    a.set(r, c, v);
                    let v = inv.at(r, c) - &(&f * inv.at(col, c));
                    inv.set(r, c, v);
                }
            }
        }
        Ok(inv)
    }

    /// Real parts of the base values.
    pub fn value(&self) -> RMat {
        RMat::from_fn(self.dim, self.dim, |r, c| self.at(r, c).value().re)
    }

    /// Real parts of `∂_v` of each entry.
    pub fn d1(&self, v: usize) -> RMat {
        RMat::from_fn(self.dim, self.dim, |r, c| self.at(r, c).d1(v).re)
    }

    pub fn d2(&self, v: usize, w: usize) -> RMat {
        RMat::from_fn(self.dim, self.dim, |r, c| self.at(r, c).d2(v, w).re)
    }
}
