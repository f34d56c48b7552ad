//! Coefficient-field DSL: parsing, printing and forward-mode differentiation.
//!
//! Expressions live over real coordinates `x1..x_m`. Complex names such as
//! `z`/`zb` are expanded at parse time into `x1 ± i·x2`.

mod jet;
mod parse;
mod random;

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64 as C64;

pub use jet::{Jet, JetLayout};
pub use random::{ad_fd_check, random_expr, AdFdCheck};

use crate::error::{Error, Result};

/// Unary functions available in the DSL.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Conj,
    Abs2,
}

impl Func {
    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "conj" => Func::Conj,
            "abs2" => Func::Abs2,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Conj => "conj",
            Func::Abs2 => "abs2",
        }
    }
}

/// Expression tree node over real coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(C64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

/// Identifier table: which names map to which real coordinates.
#[derive(Debug, Clone)]
pub struct VarScheme {
    nvars: usize,
    aliases: Vec<(String, usize)>,
    complex: Vec<(String, String, usize)>,
}

impl VarScheme {
    /// Base coordinates of ℝ²ⁿ. For n = 1 also `x`, `y`, `z`, `zb`.
    pub fn base(n: usize) -> Self {
        let mut s = VarScheme { nvars: 2 * n, aliases: Vec::new(), complex: Vec::new() };
        if n == 1 {
            s.aliases.push(("x".into(), 0));
            s.aliases.push(("y".into(), 1));
            s.complex.push(("z".into(), "zb".into(), 0));
        }
        s
    }

    /// Twistor chart of Z⁰ over ℝ²: `z, zb, w, wb` on `x1..x4`.
    pub fn twistor() -> Self {
        VarScheme {
            nvars: 4,
            aliases: vec![("x".into(), 0), ("y".into(), 1)],
            complex: vec![("z".into(), "zb".into(), 0), ("w".into(), "wb".into(), 2)],
        }
    }

    /// Holomorphic chart `(ξ, w)`: `xi, xib, w, wb` on `x1..x4`.
    pub fn levi() -> Self {
        VarScheme { nvars: 4, aliases: Vec::new(), complex: vec![("xi".into(), "xib".into(), 0), ("w".into(), "wb".into(), 2)] }
    }

    /// Plain real coordinates `x1..x_m`.
    pub fn real(m: usize) -> Self {
        VarScheme { nvars: m, aliases: Vec::new(), complex: Vec::new() }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    fn resolve(&self, name: &str) -> Option<Node> {
        if let Some(rest) = name.strip_prefix('x') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) && !rest.starts_with('0') {
                let k: usize = rest.parse().ok()?;
                if k >= 1 && k <= self.nvars {
                    return Some(Node::Var(k - 1));
                }
                return None;
            }
        }
        if let Some((_, i)) = self.aliases.iter().find(|(a, _)| a == name) {
            return Some(Node::Var(*i));
        }
        for (h, a, i) in &self.complex {
            let im = Node::Mul(Box::new(Node::Const(C64::new(0.0, 1.0))), Box::new(Node::Var(i + 1)));
            let re = Box::new(Node::Var(*i));
            if name == h {
                return Some(Node::Add(re, Box::new(im)));
            } else if name == a {
                return Some(Node::Sub(re, Box::new(im)));
            }
        }
        None
    }
}

/// A parsed coefficient field.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    node: Node,
    nvars: usize,
}

/// Parses DSL text over the base coordinates of ℝ²ⁿ.
pub fn parse_expr(text: &str, n: usize) -> Result<Expr> {
    Expr::parse_with(text, &VarScheme::base(n))
}

impl Expr {
    pub fn parse_with(text: &str, scheme: &VarScheme) -> Result<Expr> {
        let mut p = parse::Parser::new(text, scheme)?;
        let node = p.expr()?;
        p.finish()?;
        Ok(Expr { node, nvars: scheme.nvars })
    }

    pub fn from_node(node: Node, nvars: usize) -> Expr {
        Expr { node, nvars }
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn constant(c: C64, nvars: usize) -> Expr {
        Expr { node: Node::Const(c), nvars }
    }

    pub fn real_const(c: f64, nvars: usize) -> Expr {
        Expr::constant(C64::new(c, 0.0), nvars)
    }

    pub fn var(i: usize, nvars: usize) -> Expr {
        Expr { node: Node::Var(i), nvars }
    }

    pub fn conj(&self) -> Expr {
        Expr { node: Node::Call(Func::Conj, Box::new(self.node.clone())), nvars: self.nvars }
    }

    /// `(e + conj e)/2`.
    pub fn re(&self) -> Expr {
        (self.clone() + self.conj()) * Expr::real_const(0.5, self.nvars)
    }

    /// `(e − conj e)/(2i)`.
    pub fn im(&self) -> Expr {
        (self.clone() - self.conj()) * Expr::constant(C64::new(0.0, -0.5), self.nvars)
    }

    pub fn powi(&self, k: i32) -> Expr {
        Expr { node: Node::Pow(Box::new(self.node.clone()), k), nvars: self.nvars }
    }

    pub fn call(&self, f: Func) -> Expr {
        Expr { node: Node::Call(f, Box::new(self.node.clone())), nvars: self.nvars }
    }

    /// Replaces every real coordinate `x_k` by `subs[k]`.
    pub fn substitute(&self, subs: &[Expr]) -> Result<Expr> {
        if subs.len() != self.nvars {
            return Err(Error::Dimension(alloc::format!("substitution needs {} expressions, got {}", self.nvars, subs.len())));
        }
        let nvars = subs.first().map(|e| e.nvars).unwrap_or(0);
        fn go(n: &Node, subs: &[Expr]) -> Node {
            let b = |x: &Node| Box::new(go(x, subs));
            match n {
                Node::Const(c) => Node::Const(*c),
                Node::Var(i) => subs[*i].node.clone(),
                Node::Neg(a) => Node::Neg(b(a)),
                Node::Add(x, y) => Node::Add(b(x), b(y)),
                Node::Sub(x, y) => Node::Sub(b(x), b(y)),
                Node::Mul(x, y) => Node::Mul(b(x), b(y)),
                Node::Div(x, y) => Node::Div(b(x), b(y)),
                Node::Pow(x, k) => Node::Pow(b(x), *k),
                Node::Call(f, x) => Node::Call(*f, b(x)),
            }
        }
        Ok(Expr { node: go(&self.node, subs), nvars })
    }

    /// Complex value at a real point.
    pub fn eval(&self, p: &[f64]) -> Result<C64> {
        self.check_len(p.len())?;
        let inputs: Vec<C64> = p.iter().map(|&v| C64::new(v, 0.0)).collect();
        eval_node(&self.node, &inputs, &C64::new(0.0, 0.0))
    }

    /// Evaluates with arbitrary scalar inputs (for example jets, which makes
    /// the result a composition).
    pub fn eval_scalar<S: Scalar>(&self, inputs: &[S]) -> Result<S> {
        self.check_len(inputs.len())?;
        let proto = inputs.first().map(|s| s.lift(C64::new(0.0, 0.0)));
        match proto {
            Some(p) => eval_node(&self.node, inputs, &p),
            None => Err(Error::Dimension("no inputs given".into())),
        }
    }

    /// Taylor expansion of the expression at `p` to the given order.
    pub fn jet(&self, p: &[f64], order: usize) -> Result<Jet> {
        self.check_len(p.len())?;
        let seed = Jet::seed(p, order);
        if seed.is_empty() {
            let layout = JetLayout::new(0, order);
            return eval_node(&self.node, &seed, &Jet::constant(&layout, C64::new(0.0, 0.0)));
        }
        self.eval_scalar(&seed)
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.nvars {
            return Err(Error::Dimension(alloc::format!("expression over {} variables evaluated with {}", self.nvars, got)));
        }
        Ok(())
    }
}

macro_rules! expr_binop {
    ($tr:ident, $m:ident, $variant:ident) => {
        impl core::ops::$tr for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                Expr { node: Node::$variant(Box::new(self.node), Box::new(o.node)), nvars: self.nvars.max(o.nvars) }
            }
        }
    };
}
expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);
expr_binop!(Div, div, Div);

impl core::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr { node: Node::Neg(Box::new(self.node)), nvars: self.nvars }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => {
                let re = Real(c.re);
                if c.im == 0.0 {
                    write!(f, "{re}")
                } else if c.re == 0.0 && c.im == 1.0 {
                    write!(f, "i")
                } else {
                    write!(f, "({re}+{}*i)", Real(c.im))
                }
            }
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a}+{b})"),
            Node::Sub(a, b) => write!(f, "({a}-{b})"),
            Node::Mul(a, b) => write!(f, "({a}*{b})"),
            Node::Div(a, b) => write!(f, "({a}/{b})"),
            Node::Pow(a, k) => write!(f, "({a}^{k})"),
            Node::Call(g, a) => write!(f, "{}({a})", g.name()),
        }
    }
}

struct Real(f64);

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 < 0.0 || (self.0 == 0.0 && self.0.is_sign_negative()) {
            write!(f, "(-{:?})", -self.0)
        } else {
            write!(f, "{:?}", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.node.fmt(f)
    }
}

/// Numeric types the evaluator can run on.
pub trait Scalar: Clone {
    /// A constant of the same kind as `self`.
    fn lift(&self, c: C64) -> Self;
    fn value(&self) -> C64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn recip(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn conj(&self) -> Self;
    fn powi(&self, k: i32) -> Self;
    /// Whether the value carries derivative information.
    fn has_derivatives(&self) -> bool;
    fn all_finite(&self) -> bool;
}

impl Scalar for C64 {
    fn lift(&self, c: C64) -> Self {
        c
    }
    fn value(&self) -> C64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn recip(&self) -> Self {
        self.inv()
    }
    fn exp(&self) -> Self {
        C64::exp(*self)
    }
    fn ln(&self) -> Self {
        C64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        C64::sqrt(*self)
    }
    fn sin(&self) -> Self {
        C64::sin(*self)
    }
    fn cos(&self) -> Self {
        C64::cos(*self)
    }
    fn conj(&self) -> Self {
        C64::conj(self)
    }
    fn powi(&self, k: i32) -> Self {
        C64::powi(self, k)
    }
    fn has_derivatives(&self) -> bool {
        false
    }
    fn all_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Scalar for Jet {
    fn lift(&self, c: C64) -> Self {
        let mut j = Jet::constant(self.layout(), c);
        j = j.truncate(self.layout().order());
        j
    }
    fn value(&self) -> C64 {
        Jet::value(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn recip(&self) -> Self {
        Jet::recip(self)
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn ln(&self) -> Self {
        Jet::ln(self)
    }
    fn sqrt(&self) -> Self {
        Jet::sqrt(self)
    }
    fn sin(&self) -> Self {
        Jet::sin(self)
    }
    fn cos(&self) -> Self {
        Jet::cos(self)
    }
    fn conj(&self) -> Self {
        Jet::conj(self)
    }
    fn powi(&self, k: i32) -> Self {
        Jet::powi(self, k)
    }
    fn has_derivatives(&self) -> bool {
        self.order() > 0
    }
    fn all_finite(&self) -> bool {
        self.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

fn domain(n: &Node, reason: &str) -> Error {
    Error::Domain { subexpr: n.to_string(), reason: reason.to_string() }
}

fn eval_node<S: Scalar>(n: &Node, inputs: &[S], proto: &S) -> Result<S> {
    let r = match n {
        Node::Const(c) => proto.lift(*c),
        Node::Var(i) => inputs
            .get(*i)
            .cloned()
            .ok_or_else(|| Error::Dimension(alloc::format!("variable x{} out of range", i + 1)))?,
        Node::Neg(a) => eval_node(a, inputs, proto)?.neg(),
        Node::Add(a, b) => eval_node(a, inputs, proto)?.add(&eval_node(b, inputs, proto)?),
        Node::Sub(a, b) => eval_node(a, inputs, proto)?.sub(&eval_node(b, inputs, proto)?),
        Node::Mul(a, b) => eval_node(a, inputs, proto)?.mul(&eval_node(b, inputs, proto)?),
        Node::Div(a, b) => {
            let num = eval_node(a, inputs, proto)?;
            let den = eval_node(b, inputs, proto)?;
            if den.value() == C64::new(0.0, 0.0) {
                return Err(domain(n, "division by zero"));
            }
            num.mul(&den.recip())
        }
        Node::Pow(a, k) => {
            let base = eval_node(a, inputs, proto)?;
            if *k < 0 && base.value() == C64::new(0.0, 0.0) {
                return Err(domain(n, "division by zero"));
            }
            base.powi(*k)
        }
        Node::Call(f, a) => {
            let x = eval_node(a, inputs, proto)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Conj => x.conj(),
                Func::Abs2 => x.mul(&x.conj()),
                Func::Log => {
                    if x.value() == C64::new(0.0, 0.0) {
                        return Err(domain(n, "log of zero"));
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if x.value() == C64::new(0.0, 0.0) && x.has_derivatives() {
                        return Err(domain(n, "sqrt is not differentiable at zero"));
                    }
                    x.sqrt()
                }
            }
        }
    };
    if !r.all_finite() {
        return Err(domain(n, "non-finite value"));
    }
    Ok(r)
}

/// Value of a field with optional first and second real partials.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldValue {
    pub value: C64,
    pub grad: Option<Vec<C64>>,
    pub hess: Option<Vec<Vec<C64>>>,
}

/// Evaluates `e` and its partial derivatives up to `order` (0, 1 or 2) at `p`.
pub fn eval_jet(e: &Expr, p: &[f64], order: usize) -> Result<FieldValue> {
    if order > 2 {
        return Err(Error::Invalid("order must be 0, 1 or 2".into()));
    }
    let j = e.jet(p, order)?;
    let m = p.len();
    let grad = (order >= 1).then(|| (0..m).map(|v| j.d1(v)).collect());
    let hess = (order >= 2).then(|| (0..m).map(|a| (0..m).map(|b| j.d2(a, b)).collect()).collect());
    Ok(FieldValue { value: j.value(), grad, hess })
}

const HALF_I: C64 = C64::new(0.0, 0.5);

impl FieldValue {
    fn g(&self, i: usize) -> C64 {
        self.grad.as_ref().expect("first partials not requested")[i]
    }

    fn h(&self, a: usize, b: usize) -> C64 {
        self.hess.as_ref().expect("second partials not requested")[a][b]
    }

    /// `∂/∂z_k` with `z_k = x_{2k} + i·x_{2k+1}` (0-based `k`).
    pub fn d_z(&self, k: usize) -> C64 {
        self.g(2 * k) * 0.5 - HALF_I * self.g(2 * k + 1)
    }

    pub fn d_zb(&self, k: usize) -> C64 {
        self.g(2 * k) * 0.5 + HALF_I * self.g(2 * k + 1)
    }

    /// `∂²/∂z_k∂z̄_l`.
    pub fn d_z_d_zb(&self, k: usize, l: usize) -> C64 {
        self.wirtinger2(k, -1.0, l, 1.0)
    }

    pub fn d_z_d_z(&self, k: usize, l: usize) -> C64 {
        self.wirtinger2(k, -1.0, l, -1.0)
    }

    pub fn d_zb_d_zb(&self, k: usize, l: usize) -> C64 {
        self.wirtinger2(k, 1.0, l, 1.0)
    }

    pub fn d_zb_d_z(&self, k: usize, l: usize) -> C64 {
        self.wirtinger2(k, 1.0, l, -1.0)
    }

    // ¼(∂x_k + s·i∂y_k)(∂x_l + t·i∂y_l)
    fn wirtinger2(&self, k: usize, s: f64, l: usize, t: f64) -> C64 {
        let (xk, yk, xl, yl) = (2 * k, 2 * k + 1, 2 * l, 2 * l + 1);
        let i = C64::new(0.0, 1.0);
        (self.h(xk, xl) + i * t * self.h(xk, yl) + i * s * self.h(yk, xl) - self.h(yk, yl) * (s * t)) * 0.25
    }
}

/// Comparison operator in a domain predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

/// Conjunction of real comparisons, e.g. `x > 0 && abs2(z) < 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    clauses: Vec<(Expr, Cmp, Expr)>,
    text: String,
}

impl Predicate {
    pub fn parse_with(text: &str, scheme: &VarScheme) -> Result<Predicate> {
        let mut p = parse::Parser::new(text, scheme)?;
        let mut clauses = Vec::new();
        loop {
            let lhs = Expr { node: p.expr()?, nvars: scheme.nvars };
            let op = match p.comparison()? {
                "<" => Cmp::Lt,
                "<=" => Cmp::Le,
                ">" => Cmp::Gt,
                _ => Cmp::Ge,
            };
            let rhs = Expr { node: p.expr()?, nvars: scheme.nvars };
            clauses.push((lhs, op, rhs));
            if !p.eat_and() {
                break;
            }
        }
        p.finish()?;
        debug_assert!(p.at_end());
        Ok(Predicate { clauses, text: text.to_string() })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Evaluates real parts of both sides; evaluation failures count as outside.
    pub fn contains(&self, p: &[f64]) -> bool {
        self.clauses.iter().all(|(l, op, r)| match (l.eval(p), r.eval(p)) {
            (Ok(a), Ok(b)) => match op {
                Cmp::Lt => a.re < b.re,
                Cmp::Le => a.re <= b.re,
                Cmp::Gt => a.re > b.re,
                Cmp::Ge => a.re >= b.re,
            },
            _ => false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn modulus_squared_identity() {
        let e = parse_expr("z*conj(z)", 1).unwrap();
        for p in [[0.3, -1.2], [2.0, 0.5], [0.0, 0.0]] {
            let v = e.eval(&p).unwrap();
            assert!(close(v, C64::new(p[0] * p[0] + p[1] * p[1], 0.0), 1e-14));
        }
    }

    #[test]
    fn sphere_coefficient_field() {
        let e = parse_expr("2*zb/(1+abs2(z))", 1).unwrap();
        let v = e.eval(&[1.0, 1.0]).unwrap();
        assert!(close(v, C64::new(2.0, -2.0) / 3.0, 1e-15));
    }

    #[test]
    fn syntax_error_offset() {
        match parse_expr("x1 + (", 1) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_are_labelled() {
        assert!(matches!(parse_expr("q + 1", 1), Err(Error::UnknownIdentifier { offset: 1, .. })));
        assert!(matches!(parse_expr("x3", 1), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(parse_expr("sin(x, y)", 1), Err(Error::Arity { got: 2, .. })));
        assert!(matches!(parse_expr("x^1.5", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("x $ y", 1), Err(Error::Syntax { offset: 3, .. })));
        assert!(parse_expr("x3 + x4", 2).is_ok());
    }

    #[test]
    fn holomorphic_coordinate_jet() {
        let fv = eval_jet(&parse_expr("z", 1).unwrap(), &[1.0, 1.0], 1).unwrap();
        assert!(close(fv.value, C64::new(1.0, 1.0), 1e-15));
        assert!(close(fv.d_z(0), C64::new(1.0, 0.0), 1e-15));
        assert!(close(fv.d_zb(0), C64::new(0.0, 0.0), 1e-15));
    }

    #[test]
    fn modulus_laplacian() {
        let e = parse_expr("abs2(z)", 1).unwrap();
        for p in [[0.1, 0.2], [-3.0, 1.0]] {
            let fv = eval_jet(&e, &p, 2).unwrap();
            assert!(close(fv.d_z_d_zb(0, 0), C64::new(1.0, 0.0), 1e-14));
            assert!(close(fv.d_zb_d_z(0, 0), C64::new(1.0, 0.0), 1e-14));
        }
    }

    #[test]
    fn sphere_field_matches_central_differences() {
        let e = parse_expr("2*zb/(1+abs2(z))", 1).unwrap();
        let p = [1.0, 0.0];
        let fv = eval_jet(&e, &p, 1).unwrap();
        let h = 1e-5;
        for v in 0..2 {
            let mut a = p;
            let mut b = p;
            a[v] += h;
            b[v] -= h;
            let fd = (e.eval(&a).unwrap() - e.eval(&b).unwrap()) / (2.0 * h);
            let ad = fv.grad.as_ref().unwrap()[v];
            assert!((fd - ad).norm() <= 1e-8 * ad.norm().max(1.0));
        }
    }

    #[test]
    fn domain_errors_name_subtree() {
        let e = parse_expr("1/(x-1)", 1).unwrap();
        match e.eval(&[1.0, 0.0]) {
            Err(Error::Domain { subexpr, reason }) => {
                assert!(subexpr.contains("x1"));
                assert_eq!(reason, "division by zero");
            }
            other => panic!("unexpected {other:?}"),
        }
        let e = parse_expr("log(x*y)", 1).unwrap();
        assert!(matches!(e.eval(&[0.0, 2.0]), Err(Error::Domain { .. })));
        let e = parse_expr("sqrt(x)", 1).unwrap();
        assert!(e.eval(&[0.0, 0.0]).is_ok());
        assert!(eval_jet(&e, &[0.0, 0.0], 1).is_err());
    }

    #[test]
    fn print_round_trip() {
        let src = ["-2*zb/(1+abs2(z))", "x^-2 + 3.5e-3*sin(y)*i", "exp(-x)*cos(x*y) - sqrt(1+x^2)", "-(0.1) - -x"];
        for s in src {
            let e = parse_expr(s, 1).unwrap();
            let back = parse_expr(&e.to_string(), 1).unwrap();
            assert_eq!(e, back, "{s}");
        }
    }

    #[test]
    fn substitution_composes() {
        let tw = VarScheme::twistor();
        let f = Expr::parse_with("w*zb - z", &tw).unwrap();
        let subs = [
            Expr::parse_with("(1/z + conj(1/z))/2", &tw).unwrap(),
            Expr::parse_with("(1/z - conj(1/z))/(2*i)", &tw).unwrap(),
            Expr::parse_with("x3", &tw).unwrap(),
            Expr::parse_with("x4", &tw).unwrap(),
        ];
        let g = f.substitute(&subs).unwrap();
        let p = [0.7, -0.4, 0.2, 0.1];
        let z = C64::new(0.7, -0.4);
        let w = C64::new(0.2, 0.1);
        let want = w * (1.0 / z).conj() - 1.0 / z;
        assert!(close(g.eval(&p).unwrap(), want, 1e-14));
    }

    #[test]
    fn predicate_clauses() {
        let d = Predicate::parse_with("x > 0 && abs2(z) < 4", &VarScheme::base(1)).unwrap();
        assert!(d.contains(&[1.0, 1.0]));
        assert!(!d.contains(&[-1.0, 0.0]));
        assert!(!d.contains(&[1.9, 1.0]));
        assert!(Predicate::parse_with("x >", &VarScheme::base(1)).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        proptest! {
            #[test]
            fn ad_agrees_with_differences(seed in any::<u64>(), p in proptest::collection::vec(-1.0f64..1.0, 2)) {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                let e = random_expr(&mut r, 2, 3);
                let chk = ad_fd_check(&e, &p).unwrap();
                prop_assert!(chk.passes(), "{} at {:?}: {:?}", e, p, chk);
            }

            #[test]
            fn jets_are_linear(seed in any::<u64>(), a in -3.0f64..3.0, p in proptest::collection::vec(-1.0f64..1.0, 2)) {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                let (e1, e2) = (random_expr(&mut r, 2, 2), random_expr(&mut r, 2, 2));
                let comb = Expr::real_const(a, 2) * e1.clone() + e2.clone();
                let (j, j1, j2) = (eval_jet(&comb, &p, 2).unwrap(), eval_jet(&e1, &p, 2).unwrap(), eval_jet(&e2, &p, 2).unwrap());
                let (h, h1, h2) = (j.hess.unwrap(), j1.hess.unwrap(), j2.hess.unwrap());
                for k in 0..2 {
                    for l in 0..2 {
                        let want = h1[k][l] * a + h2[k][l];
                        prop_assert!((h[k][l] - want).norm() <= 1e-12 * (1.0 + want.norm() + h1[k][l].norm() * a.abs()));
                    }
                }
            }

            #[test]
            fn conjugation_swaps_wirtinger(seed in any::<u64>(), p in proptest::collection::vec(-1.0f64..1.0, 2)) {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                let e = random_expr(&mut r, 2, 3);
                let a = eval_jet(&e.conj(), &p, 1).unwrap();
                let b = eval_jet(&e, &p, 1).unwrap();
                prop_assert!((a.d_zb(0) - b.d_z(0).conj()).norm() <= 1e-12 * (1.0 + b.d_z(0).norm()));
            }
        }
    }
}
