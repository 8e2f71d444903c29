//! Symbolic expressions in the radial variables `r_1, ..., r_n`.
//!
//! Expressions are immutable trees with shared subtrees. They support exact
//! partial differentiation, pointwise evaluation, interval enclosure over a
//! box and compilation into a flat evaluation tape. Only constant folding and
//! zero/one elimination are performed; there is no general simplifier.

mod interval;
mod sexpr;
mod tape;

use std::fmt;
use std::sync::Arc;

pub use interval::{Interval, RadialBox};
pub use tape::Tape;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("log of non-positive value {value} at node `{node}`")]
    LogDomain { node: String, value: f64 },
    #[error("division by zero at node `{node}`")]
    DivisionByZero { node: String },
    #[error("variable r{index} is outside the point of dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("denominator of `{node}` may vanish on the domain (enclosure {lo}..{hi})")]
    DenominatorMayVanish { node: String, lo: f64, hi: f64 },
    #[error("argument of `{node}` may be non-positive on the domain (enclosure {lo}..{hi})")]
    LogMayBeNonPositive { node: String, lo: f64, hi: f64 },
    #[error(
        "expression too large: {nodes} nodes, depth {depth} (limits {max_nodes}, {max_depth})"
    )]
    TooLarge {
        nodes: usize,
        depth: usize,
        max_nodes: usize,
        max_depth: usize,
    },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Size limits enforced by [`Expr::validate`].
#[derive(Debug, Clone, Copy)]
pub struct ExprLimits {
    pub max_nodes: usize,
    pub max_depth: usize,
}

impl Default for ExprLimits {
    fn default() -> Self {
        Self {
            max_nodes: 1 << 20,
            max_depth: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Radial variable `r_j`, zero-based.
    Var(usize),
    /// `sum_j r_j^2` over all coordinates of the point.
    R2Sum,
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Log(Expr),
    Exp(Expr),
    Powi(Expr, i32),
}

#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    fn new(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Node::Const(c))
    }

    pub fn var(j: usize) -> Self {
        Self::new(Node::Var(j))
    }

    pub fn r2sum() -> Self {
        Self::new(Node::R2Sum)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn add(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x + y),
            (Some(x), _) if x == 0.0 => b.clone(),
            (_, Some(y)) if y == 0.0 => a.clone(),
            _ => Self::new(Node::Add(a.clone(), b.clone())),
        }
    }

    pub fn sub(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a.clone(),
            _ => Self::new(Node::Sub(a.clone(), b.clone())),
        }
    }

    pub fn mul(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x * y),
            (Some(x), _) if x == 0.0 => Expr::constant(0.0),
            (_, Some(y)) if y == 0.0 => Expr::constant(0.0),
            (Some(x), _) if x == 1.0 => b.clone(),
            (_, Some(y)) if y == 1.0 => a.clone(),
            _ => Self::new(Node::Mul(a.clone(), b.clone())),
        }
    }

    /// Unchecked quotient. Use [`Expr::checked_div`] when a domain is known.
    pub fn div(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::constant(x / y),
            (Some(x), _) if x == 0.0 => Expr::constant(0.0),
            (_, Some(y)) if y == 1.0 => a.clone(),
            _ => Self::new(Node::Div(a.clone(), b.clone())),
        }
    }

    /// Quotient whose denominator is verified to be bounded away from zero on
    /// `domain` by interval evaluation.
    pub fn checked_div(a: &Expr, b: &Expr, domain: &RadialBox) -> Result<Expr, ExprError> {
        let enc = b.enclose(domain)?;
        if enc.contains_zero() {
            return Err(ExprError::DenominatorMayVanish {
                node: b.to_string(),
                lo: enc.lo,
                hi: enc.hi,
            });
        }
        Ok(Expr::div(a, b))
    }

    pub fn neg(a: &Expr) -> Expr {
        match a.node() {
            Node::Const(x) => Expr::constant(-x),
            Node::Neg(inner) => inner.clone(),
            _ => Self::new(Node::Neg(a.clone())),
        }
    }

    pub fn log(a: &Expr) -> Expr {
        match a.as_const() {
            Some(x) if x > 0.0 => Expr::constant(x.ln()),
            _ => Self::new(Node::Log(a.clone())),
        }
    }

    pub fn exp(a: &Expr) -> Expr {
        match a.as_const() {
            Some(x) => Expr::constant(x.exp()),
            _ => Self::new(Node::Exp(a.clone())),
        }
    }

    pub fn powi(a: &Expr, k: i32) -> Expr {
        match (a.as_const(), k) {
            (_, 0) => Expr::constant(1.0),
            (_, 1) => a.clone(),
            (Some(x), _) if x != 0.0 || k > 0 => Expr::constant(x.powi(k)),
            _ => Self::new(Node::Powi(a.clone(), k)),
        }
    }

    /// `a^p` for real `p`: integer powers stay exact, otherwise `exp(p log a)`.
    pub fn powf(a: &Expr, p: f64) -> Expr {
        if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
            Expr::powi(a, p as i32)
        } else {
            Expr::exp(&Expr::mul(&Expr::constant(p), &Expr::log(a)))
        }
    }

    pub fn scale(c: f64, a: &Expr) -> Expr {
        Expr::mul(&Expr::constant(c), a)
    }

    /// Number of distinct nodes (shared subtrees counted once) and depth.
    pub fn size(&self) -> (usize, usize) {
        let mut seen = std::collections::HashMap::new();
        let depth = self.depth_memo(&mut seen);
        (seen.len(), depth)
    }

    fn depth_memo(&self, seen: &mut std::collections::HashMap<*const Node, usize>) -> usize {
        if let Some(d) = seen.get(&self.ptr()) {
            return *d;
        }
        let d = 1 + self
            .children()
            .iter()
            .map(|c| c.depth_memo(seen))
            .max()
            .unwrap_or(0);
        seen.insert(self.ptr(), d);
        d
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self.node() {
            Node::Const(_) | Node::Var(_) | Node::R2Sum => vec![],
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => vec![a, b],
            Node::Neg(a) | Node::Log(a) | Node::Exp(a) | Node::Powi(a, _) => vec![a],
        }
    }

    /// Checks size limits and that every denominator and log argument is
    /// bounded away from zero on `domain`.
    pub fn validate(&self, domain: &RadialBox, limits: ExprLimits) -> Result<(), ExprError> {
        let (nodes, depth) = self.size();
        if nodes > limits.max_nodes || depth > limits.max_depth {
            return Err(ExprError::TooLarge {
                nodes,
                depth,
                max_nodes: limits.max_nodes,
                max_depth: limits.max_depth,
            });
        }
        self.enclose(domain).map(|_| ())
    }

    /// Interval enclosure over `domain`. Fails if a denominator may vanish or a
    /// log argument may be non-positive.
    pub fn enclose(&self, domain: &RadialBox) -> Result<Interval, ExprError> {
        let mut memo = std::collections::HashMap::new();
        self.enclose_memo(domain, &mut memo)
    }

    fn enclose_memo(
        &self,
        domain: &RadialBox,
        memo: &mut std::collections::HashMap<*const Node, Interval>,
    ) -> Result<Interval, ExprError> {
        if let Some(v) = memo.get(&self.ptr()) {
            return Ok(*v);
        }
        let v = match self.node() {
            Node::Const(c) => Interval::point(*c),
            Node::Var(j) => domain.get(*j).ok_or(ExprError::VariableOutOfRange {
                index: j + 1,
                dim: domain.dim(),
            })?,
            Node::R2Sum => domain.r2sum(),
            Node::Add(a, b) => a.enclose_memo(domain, memo)? + b.enclose_memo(domain, memo)?,
            Node::Sub(a, b) => a.enclose_memo(domain, memo)? - b.enclose_memo(domain, memo)?,
            Node::Mul(a, b) => a.enclose_memo(domain, memo)? * b.enclose_memo(domain, memo)?,
            Node::Div(a, b) => {
                let den = b.enclose_memo(domain, memo)?;
                if den.contains_zero() {
                    return Err(ExprError::DenominatorMayVanish {
                        node: self.to_string(),
                        lo: den.lo,
                        hi: den.hi,
                    });
                }
                a.enclose_memo(domain, memo)? / den
            }
            Node::Neg(a) => -a.enclose_memo(domain, memo)?,
            Node::Log(a) => {
                let arg = a.enclose_memo(domain, memo)?;
                if arg.lo <= 0.0 {
                    return Err(ExprError::LogMayBeNonPositive {
                        node: self.to_string(),
                        lo: arg.lo,
                        hi: arg.hi,
                    });
                }
                arg.ln()
            }
            Node::Exp(a) => a.enclose_memo(domain, memo)?.exp(),
            Node::Powi(a, k) => {
                let base = a.enclose_memo(domain, memo)?;
                if *k < 0 && base.contains_zero() {
                    return Err(ExprError::DenominatorMayVanish {
                        node: self.to_string(),
                        lo: base.lo,
                        hi: base.hi,
                    });
                }
                base.powi(*k)
            }
        };
        memo.insert(self.ptr(), v);
        Ok(v)
    }

    /// Evaluates at a radial point, reporting domain violations.
    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        let r2: f64 = point.iter().map(|r| r * r).sum();
        self.eval_inner(point, r2)
    }

    fn eval_inner(&self, point: &[f64], r2: f64) -> Result<f64, ExprError> {
        Ok(match self.node() {
            Node::Const(c) => *c,
            Node::Var(j) => *point.get(*j).ok_or(ExprError::VariableOutOfRange {
                index: j + 1,
                dim: point.len(),
            })?,
            Node::R2Sum => r2,
            Node::Add(a, b) => a.eval_inner(point, r2)? + b.eval_inner(point, r2)?,
            Node::Sub(a, b) => a.eval_inner(point, r2)? - b.eval_inner(point, r2)?,
            Node::Mul(a, b) => a.eval_inner(point, r2)? * b.eval_inner(point, r2)?,
            Node::Div(a, b) => {
                let den = b.eval_inner(point, r2)?;
                if den == 0.0 {
                    return Err(ExprError::DivisionByZero {
                        node: self.to_string(),
                    });
                }
                a.eval_inner(point, r2)? / den
            }
            Node::Neg(a) => -a.eval_inner(point, r2)?,
            Node::Log(a) => {
                let v = a.eval_inner(point, r2)?;
                if v <= 0.0 {
                    return Err(ExprError::LogDomain {
                        node: self.to_string(),
                        value: v,
                    });
                }
                v.ln()
            }
            Node::Exp(a) => a.eval_inner(point, r2)?.exp(),
            Node::Powi(a, k) => {
                let v = a.eval_inner(point, r2)?;
                if v == 0.0 && *k < 0 {
                    return Err(ExprError::DivisionByZero {
                        node: self.to_string(),
                    });
                }
                v.powi(*k)
            }
        })
    }

    /// Exact partial derivative with respect to `r_var` (zero-based).
    pub fn diff(&self, var: usize) -> Expr {
        let mut memo = std::collections::HashMap::new();
        self.diff_memo(var, &mut memo)
    }

    fn diff_memo(
        &self,
        var: usize,
        memo: &mut std::collections::HashMap<*const Node, Expr>,
    ) -> Expr {
        if let Some(d) = memo.get(&self.ptr()) {
            return d.clone();
        }
        let d = match self.node() {
            Node::Const(_) => Expr::constant(0.0),
            Node::Var(j) => Expr::constant(if *j == var { 1.0 } else { 0.0 }),
            Node::R2Sum => Expr::scale(2.0, &Expr::var(var)),
            Node::Add(a, b) => Expr::add(&a.diff_memo(var, memo), &b.diff_memo(var, memo)),
            Node::Sub(a, b) => Expr::sub(&a.diff_memo(var, memo), &b.diff_memo(var, memo)),
            Node::Mul(a, b) => {
                let da = a.diff_memo(var, memo);
                let db = b.diff_memo(var, memo);
                Expr::add(&Expr::mul(&da, b), &Expr::mul(a, &db))
            }
            Node::Div(a, b) => {
                // (a/b)' = a'/b - a b' / b^2
                let da = a.diff_memo(var, memo);
                let db = b.diff_memo(var, memo);
                let first = Expr::div(&da, b);
                let second = Expr::div(&Expr::mul(a, &db), &Expr::powi(b, 2));
                Expr::sub(&first, &second)
            }
            Node::Neg(a) => Expr::neg(&a.diff_memo(var, memo)),
            Node::Log(a) => Expr::div(&a.diff_memo(var, memo), a),
            Node::Exp(a) => Expr::mul(self, &a.diff_memo(var, memo)),
            Node::Powi(a, k) => {
                let da = a.diff_memo(var, memo);
                Expr::mul(&Expr::scale(*k as f64, &Expr::powi(a, k - 1)), &da)
            }
        };
        memo.insert(self.ptr(), d.clone());
        d
    }

    /// Compiles into a flat tape for repeated evaluation.
    pub fn compile(&self) -> Tape {
        Tape::compile(self)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha(sigma: f64) -> Expr {
        // -sigma log(1 + |r|^2) - 1
        let s = Expr::log(&Expr::add(&Expr::constant(1.0), &Expr::r2sum()));
        Expr::sub(&Expr::neg(&Expr::scale(sigma, &s)), &Expr::constant(1.0))
    }

    #[test]
    fn eval_examples() {
        assert_eq!(alpha(2.0).eval(&[0.0, 0.0, 0.0]).unwrap(), -1.0);
        let logr2 = Expr::log(&Expr::powi(&Expr::var(0), 2));
        let v = logr2.eval(&[0.5f64.exp()]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let e = Expr::powi(&Expr::add(&Expr::constant(1.0), &Expr::r2sum()), -3);
        assert!((e.eval(&[1.0, 1.0]).unwrap() - 1.0 / 27.0).abs() < 1e-16);
    }

    #[test]
    fn eval_domain_errors_name_the_node() {
        let e = Expr::log(&Expr::var(0));
        match e.eval(&[0.0]) {
            Err(ExprError::LogDomain { node, .. }) => assert_eq!(node, "(log r1)"),
            other => panic!("unexpected {other:?}"),
        }
        let q = Expr::div(&Expr::constant(1.0), &Expr::var(0));
        assert!(matches!(
            q.eval(&[0.0]),
            Err(ExprError::DivisionByZero { .. })
        ));
    }

    #[test]
    fn diff_examples() {
        let logr2 = Expr::log(&Expr::powi(&Expr::var(0), 2));
        assert!((logr2.diff(0).eval(&[2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(Expr::constant(3.5).diff(2).as_const(), Some(0.0));
    }

    #[test]
    fn quotient_with_vanishing_denominator_is_rejected() {
        // 1 + (r1/2) d(alpha)/dr1 with alpha = -2 log(1+|r|^2) vanishes at r = (1,0,0).
        let a = alpha(2.0);
        let den = Expr::add(
            &Expr::constant(1.0),
            &Expr::mul(&Expr::scale(0.5, &Expr::var(0)), &a.diff(0)),
        );
        assert!(den.eval(&[1.0, 0.0, 0.0]).unwrap().abs() < 1e-15);
        let domain = RadialBox::new(vec![Interval::new(0.0, 1.0); 3]);
        let err = Expr::checked_div(&Expr::constant(1.0), &den, &domain).unwrap_err();
        assert!(matches!(err, ExprError::DenominatorMayVanish { .. }));
        let small = RadialBox::new(vec![
            Interval::new(0.0, 0.4),
            Interval::new(0.0, 1.0),
            Interval::new(0.0, 1.0),
        ]);
        assert!(Expr::checked_div(&Expr::constant(1.0), &den, &small).is_ok());
    }

    #[test]
    fn size_limits() {
        let mut e = Expr::var(0);
        for _ in 0..10 {
            e = Expr::mul(&e, &Expr::add(&e, &Expr::constant(1.0)));
        }
        let domain = RadialBox::new(vec![Interval::new(0.0, 1.0)]);
        let tight = ExprLimits {
            max_nodes: 8,
            max_depth: 100,
        };
        assert!(matches!(
            e.validate(&domain, tight),
            Err(ExprError::TooLarge { .. })
        ));
        assert!(e.validate(&domain, ExprLimits::default()).is_ok());
    }
}
