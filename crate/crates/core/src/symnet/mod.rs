//! Grammar-relaxed symbolic networks.
//!
//! Each layer evaluates six linear forms `l_1..l_6` of the previous
//! (augmented) state and combines them through the four operator
//! productions:
//!
//! ```text
//! h = [sin(l_1), exp(l_2), l_3 + l_4, l_5 * l_6, <active inputs>]
//! ```
//!
//! The first layer's forms read `[inputs, 1]`; later layers read
//! `[h, 1]`. The output is one more linear form over `[h, 1]`. The trailing
//! `1` is stored as the last weight of each block.

mod expr;

pub use expr::{expression_render, extract_expression, extract_from, render_named, ExprNode, Term};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Eval, Jet, JetAlgebra, ParamLayout, ParamVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymnetError {
    #[error("symbolic network depth must be at least 1")]
    ZeroDepth,
    #[error("grammar needs at least one active terminal")]
    NoTerminals,
    #[error("grammar terminals must be distinct and ordered x, y, t; got {0:?}")]
    TerminalOrder(Vec<Var>),
    #[error("point has {got} coordinates, grammar expects {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("parameter vector has {got} entries, network expects {expected}")]
    ParamLength { expected: usize, got: usize },
}

/// Input variable terminals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    X,
    Y,
    T,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
        }
    }
}

/// Operator productions in weight order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operator {
    Sin,
    Exp,
    Add,
    Multiply,
}

pub const OPERATORS: [Operator; 4] = [Operator::Sin, Operator::Exp, Operator::Add, Operator::Multiply];

/// Linear forms per layer: sin and exp take one each, add and multiply two.
pub const BLOCKS: usize = 6;

/// The production set: fixed operators plus the active input terminals.
///
/// Weight order within a hidden block is `[sin, exp, add, multiply,
/// <active inputs in x, y, t order>, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grammar {
    active: Vec<Var>,
}

impl Grammar {
    pub fn new(active: &[Var]) -> Result<Grammar, SymnetError> {
        if active.is_empty() {
            return Err(SymnetError::NoTerminals);
        }
        if active.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SymnetError::TerminalOrder(active.to_vec()));
        }
        Ok(Grammar { active: active.to_vec() })
    }

    pub fn active(&self) -> &[Var] {
        &self.active
    }

    pub fn n_inputs(&self) -> usize {
        self.active.len()
    }

    pub fn position(&self, var: Var) -> Option<usize> {
        self.active.iter().position(|&v| v == var)
    }

    /// Width of the augmented input `[inputs, 1]`.
    pub fn input_width(&self) -> usize {
        self.n_inputs() + 1
    }

    /// Width of the augmented hidden state `[ops, inputs, 1]`.
    pub fn hidden_width(&self) -> usize {
        OPERATORS.len() + self.n_inputs() + 1
    }
}

/// Shape of one symbolic network and where its weights live in a larger
/// parameter array.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicNet {
    grammar: Grammar,
    depth: usize,
    offset: usize,
}

impl SymbolicNet {
    pub fn new(grammar: Grammar, depth: usize, offset: usize) -> Result<SymbolicNet, SymnetError> {
        if depth == 0 {
            return Err(SymnetError::ZeroDepth);
        }
        Ok(SymbolicNet { grammar, depth, offset })
    }

    /// `6(n+1) + 6(d-1)(n+5) + (n+5)` for `n` inputs and depth `d`.
    pub fn param_count_for(depth: usize, n_inputs: usize) -> usize {
        let first = n_inputs + 1;
        let hidden = OPERATORS.len() + n_inputs + 1;
        BLOCKS * first + BLOCKS * (depth - 1) * hidden + hidden
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn param_count(&self) -> usize {
        Self::param_count_for(self.depth, self.grammar.n_inputs())
    }

    pub fn param_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.param_count()
    }

    fn block_len(&self, layer: usize) -> usize {
        if layer == 0 {
            self.grammar.input_width()
        } else {
            self.grammar.hidden_width()
        }
    }

    /// Absolute offset of block `k` (0-based) in `layer` (0-based).
    pub fn block_offset(&self, layer: usize, k: usize) -> usize {
        debug_assert!(layer < self.depth && k < BLOCKS);
        let first = BLOCKS * self.grammar.input_width();
        let base = if layer == 0 {
            0
        } else {
            first + (layer - 1) * BLOCKS * self.grammar.hidden_width()
        };
        self.offset + base + k * self.block_len(layer)
    }

    pub fn output_offset(&self) -> usize {
        self.offset + self.param_count() - self.grammar.hidden_width()
    }

    /// Segment layout relative to this network, names prefixed by `prefix`.
    pub fn layout(&self, prefix: &str) -> ParamLayout {
        let mut layout = ParamLayout::new();
        for layer in 0..self.depth {
            for k in 0..BLOCKS {
                layout.push(format!("{prefix}sym.l{layer}.k{}", k + 1), self.block_len(layer));
            }
        }
        layout.push(format!("{prefix}sym.out"), self.grammar.hidden_width());
        layout
    }

    /// Network output with all input derivatives.
    ///
    /// `inputs` are the active variables in grammar order.
    pub fn forward<A: JetAlgebra>(&self, alg: &mut A, params: &[f64], inputs: &[A::Value]) -> A::Value {
        debug_assert_eq!(inputs.len(), self.grammar.n_inputs());
        let n = inputs.len();
        let mut state: Vec<A::Value> = inputs.to_vec();
        let mut next: Vec<A::Value> = Vec::with_capacity(OPERATORS.len() + n);
        for layer in 0..self.depth {
            let blen = self.block_len(layer);
            let mut l = [None; BLOCKS];
            for (k, slot) in l.iter_mut().enumerate() {
                let w = self.block_offset(layer, k);
                *slot = Some(alg.dot(params, w, &state, Some(w + blen - 1)));
            }
            let l = l.map(|v| v.expect("block evaluated"));
            next.clear();
            next.push(alg.sin(l[0]));
            next.push(alg.exp(l[1]));
            next.push(alg.add(l[2], l[3]));
            next.push(alg.mul(l[4], l[5]));
            next.extend_from_slice(inputs);
            std::mem::swap(&mut state, &mut next);
        }
        let w = self.output_offset();
        alg.dot(params, w, &state, Some(w + self.grammar.hidden_width() - 1))
    }

    /// Uniform `[-0.5, 0.5]` draws for every weight of this network.
    pub fn init_values<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.param_count()).map(|_| rng.gen_range(-0.5..=0.5)).collect()
    }
}

/// A standalone symbolic network with its own weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicNetParams {
    pub net: SymbolicNet,
    pub values: ParamVector,
}

impl SymbolicNetParams {
    pub fn zeros(grammar: Grammar, depth: usize) -> Result<SymbolicNetParams, SymnetError> {
        let net = SymbolicNet::new(grammar, depth, 0)?;
        let values = ParamVector::zeros(net.layout(""));
        Ok(SymbolicNetParams { net, values })
    }

    pub fn from_values(grammar: Grammar, depth: usize, values: Vec<f64>) -> Result<SymbolicNetParams, SymnetError> {
        let net = SymbolicNet::new(grammar, depth, 0)?;
        let expected = net.param_count();
        if values.len() != expected {
            return Err(SymnetError::ParamLength { expected, got: values.len() });
        }
        let values = ParamVector::from_values(net.layout(""), values).expect("length checked");
        Ok(SymbolicNetParams { net, values })
    }

    pub fn depth(&self) -> usize {
        self.net.depth()
    }

    pub fn grammar(&self) -> &Grammar {
        self.net.grammar()
    }

    /// Mutable view of block `k` (0-based) in `layer`.
    pub fn block_mut(&mut self, layer: usize, k: usize) -> &mut [f64] {
        let start = self.net.block_offset(layer, k);
        let len = self.net.block_len(layer);
        &mut self.values.values[start..start + len]
    }

    pub fn output_mut(&mut self) -> &mut [f64] {
        let start = self.net.output_offset();
        let len = self.net.grammar().hidden_width();
        &mut self.values.values[start..start + len]
    }
}

/// Draws a fresh network; identical seeds give bitwise-identical weights.
pub fn symnet_init(depth: usize, grammar: Grammar, seed: u64) -> Result<SymbolicNetParams, SymnetError> {
    let net = SymbolicNet::new(grammar, depth, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = ParamVector::from_values(net.layout(""), net.init_values(&mut rng))
        .expect("init matches layout");
    Ok(SymbolicNetParams { net, values })
}

/// Output jet at `point` (one coordinate per active terminal).
pub fn symnet_forward(params: &SymbolicNetParams, point: &[f64]) -> Result<Jet, SymnetError> {
    let expected = params.grammar().n_inputs();
    if point.len() != expected {
        return Err(SymnetError::PointDimension { expected, got: point.len() });
    }
    let inputs = Jet::seed(point);
    Ok(params.net.forward(&mut Eval, &params.values.values, &inputs))
}

/// Weights realising `u = x + t` exactly: the last layer's add production
/// reads the `x` and `t` terminals and the output selects that channel.
pub fn sum_of_inputs_witness(grammar: Grammar, depth: usize, a: Var, b: Var) -> Result<SymbolicNetParams, SymnetError> {
    let ia = grammar.position(a).ok_or(SymnetError::NoTerminals)?;
    let ib = grammar.position(b).ok_or(SymnetError::NoTerminals)?;
    let mut p = SymbolicNetParams::zeros(grammar, depth)?;
    let last = depth - 1;
    let term = if last == 0 { 0 } else { OPERATORS.len() };
    p.block_mut(last, 2)[term + ia] = 1.0;
    p.block_mut(last, 3)[term + ib] = 1.0;
    p.output_mut()[2] = 1.0;
    Ok(p)
}
