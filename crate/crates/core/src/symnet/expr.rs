//! Closed-form expressions read off trained symbolic-network weights.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{SymbolicNet, SymbolicNetParams, Var, BLOCKS, OPERATORS};
use crate::autodiff::{Eval, Jet, JetAlgebra};

/// One `coef * expr` summand of a linear combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub expr: Arc<ExprNode>,
}

/// Expression tree over `{sin, exp, +, *, x, y, t, constant}`.
///
/// `Named` marks an intermediate line (`l_3`, `h_12`, ...). Named subtrees
/// are shared between parents, so a tree mirrors the network layer by layer
/// without copying.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExprNode {
    Constant { value: f64 },
    Variable { var: Var },
    Sin { arg: Arc<ExprNode> },
    Exp { arg: Arc<ExprNode> },
    Sum { lhs: Arc<ExprNode>, rhs: Arc<ExprNode> },
    Product { lhs: Arc<ExprNode>, rhs: Arc<ExprNode> },
    Linear { terms: Vec<Term>, constant: f64 },
    Named { name: String, body: Arc<ExprNode> },
}

impl ExprNode {
    /// Evaluates through `alg`, with `env` binding each variable.
    ///
    /// # Panics
    /// If the tree references a variable missing from `env`.
    pub fn eval<A: JetAlgebra>(&self, alg: &mut A, env: &[(Var, A::Value)]) -> A::Value {
        let mut memo = HashMap::new();
        self.eval_memo(alg, env, &mut memo)
    }

    fn eval_memo<A: JetAlgebra>(
        &self,
        alg: &mut A,
        env: &[(Var, A::Value)],
        memo: &mut HashMap<usize, A::Value>,
    ) -> A::Value {
        match self {
            ExprNode::Constant { value } => alg.constant(*value),
            ExprNode::Variable { var } => {
                env.iter()
                    .find(|(v, _)| v == var)
                    .unwrap_or_else(|| panic!("variable {} unbound", var.name()))
                    .1
            }
            ExprNode::Sin { arg } => {
                let a = arg.eval_memo(alg, env, memo);
                alg.sin(a)
            }
            ExprNode::Exp { arg } => {
                let a = arg.eval_memo(alg, env, memo);
                alg.exp(a)
            }
            ExprNode::Sum { lhs, rhs } => {
                let a = lhs.eval_memo(alg, env, memo);
                let b = rhs.eval_memo(alg, env, memo);
                alg.add(a, b)
            }
            ExprNode::Product { lhs, rhs } => {
                let a = lhs.eval_memo(alg, env, memo);
                let b = rhs.eval_memo(alg, env, memo);
                alg.mul(a, b)
            }
            ExprNode::Linear { terms, constant } => {
                let mut acc = alg.constant(*constant);
                for t in terms {
                    let v = t.expr.eval_memo(alg, env, memo);
                    let scaled = alg.scale(v, t.coef);
                    acc = alg.add(acc, scaled);
                }
                acc
            }
            ExprNode::Named { body, .. } => {
                let key = self as *const ExprNode as usize;
                if let Some(&v) = memo.get(&key) {
                    return v;
                }
                let v = body.eval_memo(alg, env, memo);
                memo.insert(key, v);
                v
            }
        }
    }

    /// Value and derivatives at `point`, whose coordinates bind `vars`.
    pub fn eval_at(&self, vars: &[Var], point: &[f64]) -> Jet {
        let env: Vec<(Var, Jet)> = vars
            .iter()
            .zip(Jet::seed(point))
            .map(|(&v, j)| (v, j))
            .collect();
        self.eval(&mut Eval, &env)
    }

    /// Leaves are constants or variables; `Linear` with no terms is a constant.
    pub fn is_leaf(&self) -> bool {
        matches!(self, ExprNode::Constant { .. } | ExprNode::Variable { .. })
    }

    /// Number of distinct nodes (shared subtrees counted once).
    pub fn node_count(&self) -> usize {
        fn walk(n: &ExprNode, seen: &mut std::collections::HashSet<usize>) -> usize {
            if !seen.insert(n as *const ExprNode as usize) {
                return 0;
            }
            1 + match n {
                ExprNode::Constant { .. } | ExprNode::Variable { .. } => 0,
                ExprNode::Sin { arg } | ExprNode::Exp { arg } => walk(arg, seen),
                ExprNode::Sum { lhs, rhs } | ExprNode::Product { lhs, rhs } => walk(lhs, seen) + walk(rhs, seen),
                ExprNode::Linear { terms, .. } => terms.iter().map(|t| walk(&t.expr, seen)).sum(),
                ExprNode::Named { body, .. } => walk(body, seen),
            }
        }
        walk(self, &mut std::collections::HashSet::new())
    }
}

fn keep(w: f64, threshold: f64) -> bool {
    w != 0.0 && w.abs() >= threshold
}

/// Linear form over `(expr, weight)` pairs plus a constant, pruned.
fn linear(atoms: &[Arc<ExprNode>], weights: &[f64], bias: f64, threshold: f64) -> ExprNode {
    let terms = atoms
        .iter()
        .zip(weights)
        .filter(|(_, &w)| keep(w, threshold))
        .map(|(a, &w)| Term { coef: w, expr: Arc::clone(a) })
        .collect();
    let constant = if keep(bias, threshold) { bias } else { 0.0 };
    ExprNode::Linear { terms, constant }
}

/// Expression for a network whose weights sit in `values` at the
/// network's offset.
///
/// Coefficients with `|w| < threshold` (and exact zeros) are dropped; no
/// other simplification is performed. With `threshold == 0` the tree
/// evaluates to the same function as the network.
pub fn extract_from(net: &SymbolicNet, values: &[f64], threshold: f64) -> ExprNode {
    let grammar = net.grammar();
    let n = grammar.n_inputs();
    let vars: Vec<Arc<ExprNode>> = grammar
        .active()
        .iter()
        .map(|&var| Arc::new(ExprNode::Variable { var }))
        .collect();

    // Atoms of the current layer's input, in storage order, without the 1.
    let mut atoms: Vec<Arc<ExprNode>> = vars.clone();
    for layer in 0..net.depth() {
        let blen = atoms.len() + 1;
        let mut forms: Vec<Arc<ExprNode>> = Vec::with_capacity(BLOCKS);
        for k in 0..BLOCKS {
            let w = &values[net.block_offset(layer, k)..][..blen];
            // Variables first, then operator channels (the layered text order).
            let (order_atoms, order_w) = display_order(&atoms, &w[..blen - 1], n);
            let body = linear(&order_atoms, &order_w, w[blen - 1], threshold);
            let name = if layer == 0 {
                format!("l_{}", k + 1)
            } else {
                format!("h_{}{}", layer, k + 1)
            };
            forms.push(Arc::new(ExprNode::Named { name, body: Arc::new(body) }));
        }
        let mut next = Vec::with_capacity(OPERATORS.len() + n);
        next.push(Arc::new(ExprNode::Sin { arg: Arc::clone(&forms[0]) }));
        next.push(Arc::new(ExprNode::Exp { arg: Arc::clone(&forms[1]) }));
        next.push(Arc::new(ExprNode::Sum { lhs: Arc::clone(&forms[2]), rhs: Arc::clone(&forms[3]) }));
        next.push(Arc::new(ExprNode::Product { lhs: Arc::clone(&forms[4]), rhs: Arc::clone(&forms[5]) }));
        next.extend(vars.iter().cloned());
        atoms = next;
    }
    let width = atoms.len() + 1;
    let w = &values[net.output_offset()..][..width];
    let (order_atoms, order_w) = display_order(&atoms, &w[..width - 1], n);
    linear(&order_atoms, &order_w, w[width - 1], threshold)
}

/// Reorders `[ops..., vars...]` to `[vars..., ops...]`; first-layer atoms
/// (vars only) pass through.
fn display_order(atoms: &[Arc<ExprNode>], w: &[f64], n_vars: usize) -> (Vec<Arc<ExprNode>>, Vec<f64>) {
    if atoms.len() == n_vars {
        return (atoms.to_vec(), w.to_vec());
    }
    let ops = atoms.len() - n_vars;
    let a = atoms[ops..].iter().chain(&atoms[..ops]).cloned().collect();
    let ws = w[ops..].iter().chain(&w[..ops]).copied().collect();
    (a, ws)
}

/// Expression of a standalone network.
pub fn extract_expression(params: &SymbolicNetParams, threshold: f64) -> ExprNode {
    extract_from(&params.net, &params.values.values, threshold)
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum,
    Product,
    Atom,
}

struct Renderer {
    precision: usize,
    lines: Vec<String>,
    defined: HashMap<usize, String>,
}

impl Renderer {
    fn coef(&self, c: f64) -> String {
        format_number(c, self.precision)
    }

    /// Named lines whose body is a bare variable, a constant, or a single
    /// unit-coefficient term are written inline.
    fn inline_body(body: &ExprNode) -> bool {
        match body {
            ExprNode::Constant { .. } | ExprNode::Variable { .. } => true,
            ExprNode::Linear { terms, constant } => {
                terms.is_empty() || (terms.len() == 1 && *constant == 0.0 && terms[0].coef == 1.0 && terms[0].expr.is_leaf())
            }
            _ => false,
        }
    }

    fn render(&mut self, node: &ExprNode) -> (String, Prec) {
        match node {
            ExprNode::Constant { value } => {
                let s = self.coef(*value);
                let p = if s.starts_with('-') { Prec::Sum } else { Prec::Atom };
                (s, p)
            }
            ExprNode::Variable { var } => (var.name().to_string(), Prec::Atom),
            ExprNode::Sin { arg } => (format!("sin({})", self.render(arg).0), Prec::Atom),
            ExprNode::Exp { arg } => (format!("exp({})", self.render(arg).0), Prec::Atom),
            ExprNode::Sum { lhs, rhs } => {
                let a = self.render(lhs).0;
                let b = self.render(rhs).0;
                (join_terms(&[a, b]), Prec::Sum)
            }
            ExprNode::Product { lhs, rhs } => {
                let a = self.render(lhs);
                let b = self.render(rhs);
                (format!("{}*{}", wrap(a, Prec::Product), wrap(b, Prec::Product)), Prec::Product)
            }
            ExprNode::Linear { terms, constant } => {
                let mut parts = Vec::with_capacity(terms.len() + 1);
                let mut prec = Prec::Sum;
                for t in terms {
                    let (text, p) = self.render(&t.expr);
                    let c = self.coef(t.coef);
                    let part = match c.as_str() {
                        "1" => {
                            prec = p;
                            text
                        }
                        "-1" => {
                            prec = Prec::Sum;
                            format!("-{}", wrap((text, p), Prec::Product))
                        }
                        _ => {
                            prec = Prec::Product;
                            let body = wrap((text, p), Prec::Product);
                            if body.starts_with(|ch: char| ch.is_ascii_digit() || ch == '.') {
                                format!("{c}*{body}")
                            } else {
                                format!("{c}{body}")
                            }
                        }
                    };
                    parts.push(part);
                }
                if *constant != 0.0 || parts.is_empty() {
                    parts.push(self.coef(*constant));
                }
                if parts.len() > 1 || (terms.is_empty() && parts[0].starts_with('-')) {
                    prec = Prec::Sum;
                } else if terms.is_empty() {
                    prec = Prec::Atom;
                }
                (join_terms(&parts), prec)
            }
            ExprNode::Named { name, body } => {
                if Self::inline_body(body) {
                    return self.render(body);
                }
                let key = node as *const ExprNode as usize;
                if !self.defined.contains_key(&key) {
                    let (text, _) = self.render(body);
                    self.lines.push(format!("{name} = {text}"));
                    self.defined.insert(key, name.clone());
                }
                (name.clone(), Prec::Atom)
            }
        }
    }
}

fn wrap((text, prec): (String, Prec), min: Prec) -> String {
    if prec < min {
        format!("({text})")
    } else {
        text
    }
}

fn join_terms(parts: &[String]) -> String {
    let mut out = String::new();
    for (i, p) in parts.iter().enumerate() {
        if i == 0 {
            out.push_str(p);
        } else if let Some(rest) = p.strip_prefix('-') {
            out.push_str(" - ");
            out.push_str(rest);
        } else {
            out.push_str(" + ");
            out.push_str(p);
        }
    }
    out
}

/// Fixed-point with trailing zeros trimmed; values that would round to zero
/// switch to short scientific form (`3e-4`).
fn format_number(c: f64, precision: usize) -> String {
    let fixed = trim_zeros(format!("{c:.precision$}"));
    if (fixed == "0" || fixed == "-0") && c != 0.0 {
        let sci = format!("{c:.precision$e}");
        let (mantissa, exp) = sci.split_once('e').expect("scientific format");
        return format!("{}e{}", trim_zeros(mantissa.to_string()), exp);
    }
    if fixed == "-0" {
        return "0".to_string();
    }
    fixed
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Layered text: one line per intermediate form, then `u = ...`.
///
/// An expression without intermediate lines renders as the bare
/// right-hand side (`x + t`, `0`).
pub fn expression_render(expr: &ExprNode, precision: usize) -> String {
    render_named(expr, "u", precision)
}

/// Like [`expression_render`] with a custom output name.
pub fn render_named(expr: &ExprNode, output: &str, precision: usize) -> String {
    let mut r = Renderer {
        precision,
        lines: Vec::new(),
        defined: HashMap::new(),
    };
    let (text, _) = r.render(expr);
    if r.lines.is_empty() {
        return text;
    }
    r.lines.push(format!("{output} = {text}"));
    r.lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::super::{sum_of_inputs_witness, symnet_init, Grammar, SymbolicNetParams};
    use super::*;

    fn var(v: Var) -> Arc<ExprNode> {
        Arc::new(ExprNode::Variable { var: v })
    }

    #[test]
    fn zero_network_renders_zero() {
        let g = Grammar::new(&[Var::X, Var::T]).unwrap();
        let p = SymbolicNetParams::zeros(g, 2).unwrap();
        assert_eq!(expression_render(&extract_expression(&p, 0.0), 3), "0");
        assert_eq!(expression_render(&ExprNode::Constant { value: 0.0 }, 3), "0");
    }

    #[test]
    fn unit_coefficients_elided() {
        let e = ExprNode::Linear {
            terms: vec![Term { coef: 1.0, expr: var(Var::X) }, Term { coef: 1.0, expr: var(Var::T) }],
            constant: 0.0,
        };
        assert_eq!(expression_render(&e, 3), "x + t");
    }

    #[test]
    fn witness_extracts_to_sum() {
        let g = Grammar::new(&[Var::X, Var::T]).unwrap();
        for depth in 1..=3 {
            let p = sum_of_inputs_witness(g.clone(), depth, Var::X, Var::T).unwrap();
            let e = extract_expression(&p, 1e-6);
            assert_eq!(expression_render(&e, 3), "x + t", "depth {depth}");
        }
    }

    #[test]
    fn first_line_shape() {
        let g = Grammar::new(&[Var::X, Var::Y]).unwrap();
        let mut p = SymbolicNetParams::zeros(g, 2).unwrap();
        p.block_mut(0, 0).copy_from_slice(&[0.006, -2.985, -0.066]);
        p.block_mut(1, 0)[0] = 0.047;
        p.output_mut()[0] = 1.113;
        let text = expression_render(&extract_expression(&p, 1e-9), 3);
        let first = text.lines().next().unwrap();
        assert_eq!(first, "l_1 = 0.006x - 2.985y - 0.066");
        assert!(text.ends_with("u = 1.113sin(h_11)"), "{text}");
    }

    #[test]
    fn tiny_coefficients_use_scientific_form() {
        assert_eq!(format_number(3e-4, 3), "3e-4");
        assert_eq!(format_number(-0.1825, 3), "-0.182");
        assert_eq!(format_number(0.22, 3), "0.22");
        assert_eq!(format_number(-0.0, 3), "0");
    }

    #[test]
    fn json_round_trip() {
        let p = symnet_init(2, Grammar::new(&[Var::X, Var::T]).unwrap(), 3).unwrap();
        let e = extract_expression(&p, 0.0);
        let s = serde_json::to_string(&e).unwrap();
        let back: ExprNode = serde_json::from_str(&s).unwrap();
        let a = e.eval_at(&[Var::X, Var::T], &[0.2, 0.4]);
        let b = back.eval_at(&[Var::X, Var::T], &[0.2, 0.4]);
        assert_eq!(a, b);
        assert!(serde_json::from_str::<ExprNode>(r#"{"kind":"log","arg":{"kind":"constant","value":1}}"#).is_err());
    }
}
