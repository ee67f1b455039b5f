use super::algebra::JetAlgebra;
use super::jet::{Jet, Slot, JET_LEN, MAX_VARS, PAIRS};
use super::AutodiffError;

const FIRST: usize = 1;
const SECOND: usize = 1 + MAX_VARS;

/// Handle to an entry of a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Node(u32);

impl Node {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryFn {
    Sin,
    Exp,
    Tanh,
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Leaf,
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Affine(u32, f64),
    // first three derivatives of the scalar function at the argument value
    Unary { arg: u32, fun: UnaryFn, d: [f64; 3] },
    Dot { args: u32, len: u32, weights: u32, bias: Option<u32> },
    Slot(u32, u8),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "input",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "multiply",
            Op::Affine(..) => "affine",
            Op::Unary { fun: UnaryFn::Sin, .. } => "sin",
            Op::Unary { fun: UnaryFn::Exp, .. } => "exp",
            Op::Unary { fun: UnaryFn::Tanh, .. } => "tanh",
            Op::Dot { .. } => "dot",
            Op::Slot(..) => "slot",
        }
    }
}

/// Ordered record of jet operations, replayable in reverse.
///
/// Parameters are not entries: a `dot` reads them by offset and the reverse
/// sweep accumulates their adjoints straight into a gradient slice. Clearing
/// keeps the allocations, so one tape can be reused across points.
#[derive(Debug, Default)]
pub struct Tape {
    ops: Vec<Op>,
    vals: Vec<Jet>,
    args: Vec<u32>,
    adj: Vec<Jet>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn clear(&mut self) {
        self.ops.clear();
        self.vals.clear();
        self.args.clear();
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, node: Node) -> Jet {
        self.vals[node.index()]
    }

    /// Adjoint of `node` from the most recent [`Tape::backward`].
    pub fn adjoint(&self, node: Node) -> Jet {
        self.adj[node.index()]
    }

    #[inline]
    fn push(&mut self, op: Op, val: Jet) -> Node {
        let id = self.ops.len();
        debug_assert!(id < u32::MAX as usize);
        self.ops.push(op);
        self.vals.push(val);
        Node(id as u32)
    }

    /// Checks that every operand refers to an earlier entry.
    pub fn is_topologically_ordered(&self) -> bool {
        self.ops.iter().enumerate().all(|(i, op)| {
            let i = i as u32;
            match *op {
                Op::Leaf => true,
                Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => a < i && b < i,
                Op::Affine(a, _) | Op::Unary { arg: a, .. } | Op::Slot(a, _) => a < i,
                Op::Dot { args, len, .. } => self.args[args as usize..(args + len) as usize]
                    .iter()
                    .all(|&a| a < i),
            }
        })
    }

    /// Reverse sweep.
    ///
    /// `seeds` set the adjoint of each node's value component; parameter
    /// adjoints are added into `grad`, which is indexed like `params`.
    /// Returns the number of entries visited.
    pub fn backward(
        &mut self,
        params: &[f64],
        seeds: &[(Node, f64)],
        grad: &mut [f64],
    ) -> Result<usize, AutodiffError> {
        self.backward_window(params, seeds, grad, 0)
    }

    /// Like [`Tape::backward`], but `grad[k]` holds the adjoint of
    /// `params[base + k]`. Lets a caller accumulate into a buffer that only
    /// covers the parameters this tape can reach.
    pub fn backward_window(
        &mut self,
        params: &[f64],
        seeds: &[(Node, f64)],
        grad: &mut [f64],
        base: usize,
    ) -> Result<usize, AutodiffError> {
        let n = self.ops.len();
        self.adj.clear();
        self.adj.resize(n, Jet::ZERO);
        for &(node, s) in seeds {
            self.adj[node.index()].components_mut()[0] += s;
        }
        let mut visited = 0;
        for i in (0..n).rev() {
            visited += 1;
            let g = self.adj[i];
            if !g.is_finite() || !self.vals[i].is_finite() {
                return Err(AutodiffError::NonFinite {
                    entry: i,
                    op: self.ops[i].name(),
                });
            }
            if g == Jet::ZERO {
                continue;
            }
            match self.ops[i] {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    self.adj[a as usize] += g;
                    self.adj[b as usize] += g;
                }
                Op::Sub(a, b) => {
                    self.adj[a as usize] += g;
                    self.adj[b as usize].axpy(-1.0, &g);
                }
                Op::Affine(a, s) => self.adj[a as usize].axpy(s, &g),
                Op::Mul(a, b) => {
                    let va = self.vals[a as usize];
                    let vb = self.vals[b as usize];
                    let da = mul_adjoint(&g, &vb);
                    let db = mul_adjoint(&g, &va);
                    self.adj[a as usize] += da;
                    self.adj[b as usize] += db;
                }
                Op::Unary { arg, d, .. } => {
                    let va = self.vals[arg as usize];
                    self.adj[arg as usize] += unary_adjoint(&g, &va, d);
                }
                Op::Slot(a, idx) => {
                    self.adj[a as usize].components_mut()[idx as usize] += g.value();
                }
                Op::Dot { args, len, weights, bias } => {
                    let w0 = weights as usize;
                    for k in 0..len as usize {
                        let h = self.args[args as usize + k] as usize;
                        let w = params[w0 + k];
                        grad[w0 + k - base] += g.contract(&self.vals[h]);
                        self.adj[h].axpy(w, &g);
                    }
                    if let Some(b) = bias {
                        grad[b as usize - base] += g.value();
                    }
                }
            }
        }
        Ok(visited)
    }
}

/// Adjoint contribution to `a` from `c = a * b`.
#[inline]
fn mul_adjoint(g: &Jet, b: &Jet) -> Jet {
    let g = g.components();
    let b = b.components();
    let mut d = [0.0; JET_LEN];
    d[0] = g.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
    for i in 0..MAX_VARS {
        d[FIRST + i] = g[FIRST + i] * b[0];
    }
    for (k, &(p, q)) in PAIRS.iter().enumerate() {
        let gk = g[SECOND + k];
        d[FIRST + p] += gk * b[FIRST + q];
        d[FIRST + q] += gk * b[FIRST + p];
        d[SECOND + k] = gk * b[0];
    }
    Jet::from_components(d)
}

/// Adjoint contribution to `a` from `c = f(a)`, given `f'`, `f''`, `f'''`.
#[inline]
fn unary_adjoint(g: &Jet, a: &Jet, [f1, f2, f3]: [f64; 3]) -> Jet {
    let g = g.components();
    let a = a.components();
    let mut d = [0.0; JET_LEN];
    let mut d0 = g[0] * f1;
    for i in 0..MAX_VARS {
        d0 += g[FIRST + i] * f2 * a[FIRST + i];
        d[FIRST + i] = g[FIRST + i] * f1;
    }
    for (k, &(p, q)) in PAIRS.iter().enumerate() {
        let gk = g[SECOND + k];
        d0 += gk * (f2 * a[SECOND + k] + f3 * a[FIRST + p] * a[FIRST + q]);
        d[FIRST + p] += gk * f2 * a[FIRST + q];
        d[FIRST + q] += gk * f2 * a[FIRST + p];
        d[SECOND + k] = gk * f1;
    }
    d[0] = d0;
    Jet::from_components(d)
}

impl JetAlgebra for Tape {
    type Value = Node;

    fn lift(&mut self, jet: Jet) -> Node {
        self.push(Op::Leaf, jet)
    }

    fn add(&mut self, a: Node, b: Node) -> Node {
        let v = self.value(a) + self.value(b);
        self.push(Op::Add(a.0, b.0), v)
    }

    fn sub(&mut self, a: Node, b: Node) -> Node {
        let v = self.value(a) - self.value(b);
        self.push(Op::Sub(a.0, b.0), v)
    }

    fn mul(&mut self, a: Node, b: Node) -> Node {
        let v = self.value(a) * self.value(b);
        self.push(Op::Mul(a.0, b.0), v)
    }

    fn affine(&mut self, a: Node, scale: f64, shift: f64) -> Node {
        let v = self.value(a).scale(scale) + shift;
        self.push(Op::Affine(a.0, scale), v)
    }

    fn sin(&mut self, a: Node) -> Node {
        let x = self.value(a);
        let (s, c) = x.value().sin_cos();
        let d = [c, -s, -c];
        self.push(Op::Unary { arg: a.0, fun: UnaryFn::Sin, d }, x.chain(s, d[0], d[1]))
    }

    fn exp(&mut self, a: Node) -> Node {
        let x = self.value(a);
        let e = x.value().exp();
        let d = [e, e, e];
        self.push(Op::Unary { arg: a.0, fun: UnaryFn::Exp, d }, x.chain(e, e, e))
    }

    fn tanh(&mut self, a: Node) -> Node {
        let x = self.value(a);
        let t = x.value().tanh();
        let s = 1.0 - t * t;
        let d = [s, -2.0 * t * s, s * (6.0 * t * t - 2.0)];
        self.push(Op::Unary { arg: a.0, fun: UnaryFn::Tanh, d }, x.chain(t, d[0], d[1]))
    }

    fn dot(&mut self, params: &[f64], weights: usize, inputs: &[Node], bias: Option<usize>) -> Node {
        let mut acc = Jet::constant(bias.map_or(0.0, |b| params[b]));
        let start = self.args.len() as u32;
        for (w, h) in params[weights..weights + inputs.len()].iter().zip(inputs) {
            acc.axpy(*w, &self.vals[h.index()]);
            self.args.push(h.0);
        }
        let op = Op::Dot {
            args: start,
            len: inputs.len() as u32,
            weights: weights as u32,
            bias: bias.map(|b| b as u32),
        };
        self.push(op, acc)
    }

    fn slot(&mut self, a: Node, slot: Slot) -> Node {
        debug_assert!(slot.is_valid());
        let v = Jet::constant(self.value(a).get(slot));
        self.push(Op::Slot(a.0, slot.index() as u8), v)
    }

    fn jet(&self, a: Node) -> Jet {
        self.value(a)
    }
}
