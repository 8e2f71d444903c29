//! Flat evaluation tape. Shared subtrees are evaluated once.

use std::collections::HashMap;

use super::{Expr, Node};

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var(usize),
    R2Sum,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Log(usize),
    Exp(usize),
    Powi(usize, i32),
}

/// A compiled expression. Evaluation performs no domain checks: a log of a
/// non-positive number yields NaN or -inf, exactly as `f64` does.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
}

impl Tape {
    pub(super) fn compile(e: &Expr) -> Tape {
        let mut ops = Vec::new();
        let mut slots: HashMap<*const Node, usize> = HashMap::new();
        emit(e, &mut ops, &mut slots);
        Tape { ops }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Evaluates using `scratch` as working storage (resized as needed).
    pub fn eval_with(&self, point: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.reserve(self.ops.len());
        let r2: f64 = point.iter().map(|r| r * r).sum();
        for op in &self.ops {
            let v = match *op {
                Op::Const(c) => c,
                Op::Var(j) => point[j],
                Op::R2Sum => r2,
                Op::Add(a, b) => scratch[a] + scratch[b],
                Op::Sub(a, b) => scratch[a] - scratch[b],
                Op::Mul(a, b) => scratch[a] * scratch[b],
                Op::Div(a, b) => scratch[a] / scratch[b],
                Op::Neg(a) => -scratch[a],
                Op::Log(a) => scratch[a].ln(),
                Op::Exp(a) => scratch[a].exp(),
                Op::Powi(a, k) => scratch[a].powi(k),
            };
            scratch.push(v);
        }
        *scratch.last().unwrap_or(&0.0)
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut scratch = Vec::new();
        self.eval_with(point, &mut scratch)
    }
}

fn emit(e: &Expr, ops: &mut Vec<Op>, slots: &mut HashMap<*const Node, usize>) -> usize {
    if let Some(&s) = slots.get(&e.ptr()) {
        return s;
    }
    let op = match e.node() {
        Node::Const(c) => Op::Const(*c),
        Node::Var(j) => Op::Var(*j),
        Node::R2Sum => Op::R2Sum,
        Node::Add(a, b) => Op::Add(emit(a, ops, slots), emit(b, ops, slots)),
        Node::Sub(a, b) => Op::Sub(emit(a, ops, slots), emit(b, ops, slots)),
        Node::Mul(a, b) => Op::Mul(emit(a, ops, slots), emit(b, ops, slots)),
        Node::Div(a, b) => Op::Div(emit(a, ops, slots), emit(b, ops, slots)),
        Node::Neg(a) => Op::Neg(emit(a, ops, slots)),
        Node::Log(a) => Op::Log(emit(a, ops, slots)),
        Node::Exp(a) => Op::Exp(emit(a, ops, slots)),
        Node::Powi(a, k) => Op::Powi(emit(a, ops, slots), *k),
    };
    ops.push(op);
    let s = ops.len() - 1;
    slots.insert(e.ptr(), s);
    s
}
