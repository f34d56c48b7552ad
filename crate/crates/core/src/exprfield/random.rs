//! Random well-conditioned expressions and AD/FD comparison.

use alloc::boxed::Box;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use num_complex::Complex64 as C64;
use rand::Rng;

use super::{eval_jet, Expr, Func, Node};
use crate::error::Result;

fn leaf<R: Rng + ?Sized>(rng: &mut R, nvars: usize) -> Node {
    let u = rng.random::<f64>();
    let var = Node::Var(rng.random_range(0..nvars));
    if u < 0.5 {
        var
    } else if u < 0.65 {
        Node::Mul(Box::new(Node::Const(C64::new(0.0, 0.5))), Box::new(var))
    } else {
        Node::Const(C64::new(rng.random_range(-4..=4) as f64 * 0.5 + 0.25, 0.0))
    }
}

fn positive(n: Node) -> Node {
    // 1.5 + |n|² stays away from 0
    let c = Node::Const(C64::new(1.5, 0.0));
    Node::Add(Box::new(c), Box::new(Node::Call(Func::Abs2, Box::new(n))))
}

fn build<R: Rng + ?Sized>(rng: &mut R, nvars: usize, depth: usize) -> Node {
    if depth == 0 {
        return leaf(rng, nvars);
    }
    let sub = |rng: &mut R| Box::new(build(rng, nvars, depth - 1));
    let kind = rng.random_range(0..11);
    match kind {
        0 => Node::Add(sub(rng), sub(rng)),
        1 => Node::Sub(sub(rng), sub(rng)),
        2 | 3 => Node::Mul(sub(rng), sub(rng)),
        4 => {
            let a = sub(rng);
            Node::Div(a, Box::new(positive(build(rng, nvars, depth - 1))))
        }
        5 => Node::Pow(Box::new(leaf(rng, nvars)), rng.random_range(2..4)),
        6 => Node::Call(Func::Sin, sub(rng)),
        7 => Node::Call(Func::Cos, sub(rng)),
        8 => {
            // exp of a bounded argument
            Node::Call(Func::Exp, Box::new(Node::Call(Func::Sin, sub(rng))))
        }
        9 => {
            let b = build(rng, nvars, depth - 1);
            Node::Call(if rng.random::<bool>() { Func::Log } else { Func::Sqrt }, Box::new(positive(b)))
        }
        _ => Node::Call(Func::Conj, sub(rng)),
    }
}

/// A random expression over `nvars` real variables, smooth on all of ℝ^nvars.
pub fn random_expr<R: Rng + ?Sized>(rng: &mut R, nvars: usize, depth: usize) -> Expr {
    Expr::from_node(build(rng, nvars.max(1), depth), nvars.max(1))
}

/// Largest AD-vs-central-difference discrepancies at `p`, each divided by
/// its allowed tolerance (`max(1e-7, 1e-6·|value|)` for first partials,
/// `1e-4` relative for second partials). Values ≤ 1 pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdFdCheck {
    pub first: f64,
    pub second: f64,
}

impl AdFdCheck {
    pub fn passes(&self) -> bool {
        self.first <= 1.0 && self.second <= 1.0
    }
}

pub fn ad_fd_check(e: &Expr, p: &[f64]) -> Result<AdFdCheck> {
    let fv = eval_jet(e, p, 2)?;
    let grad = fv.grad.unwrap_or_default();
    let hess = fv.hess.unwrap_or_default();
    let m = p.len();
    let shifted = |k: usize, s: f64| -> Vec<f64> {
        let mut q = p.to_vec();
        q[k] += s;
        q
    };
    let h1 = 1e-5;
    let mut first: f64 = 0.0;
    for k in 0..m {
        let fd = (e.eval(&shifted(k, h1))? - e.eval(&shifted(k, -h1))?) / (2.0 * h1);
        let tol = 1e-7f64.max(1e-6 * fv.value.norm());
        first = first.max((fd - grad[k]).norm() / tol);
    }
    let h2 = 1e-4;
    let mut second: f64 = 0.0;
    for k in 0..m {
        for l in 0..m {
            let dk = |q: &[f64]| -> Result<C64> {
                let mut a = q.to_vec();
                let mut b = q.to_vec();
                a[k] += h2;
                b[k] -= h2;
                Ok((e.eval(&a)? - e.eval(&b)?) / (2.0 * h2))
            };
            let fd = (dk(&shifted(l, h2))? - dk(&shifted(l, -h2))?) / (2.0 * h2);
            let scale = 1.0f64.max(hess[k][l].norm());
            second = second.max((fd - hess[k][l]).norm() / (1e-4 * scale));
        }
    }
    Ok(AdFdCheck { first, second })
}
