//! Main networks evaluated by the physics loss: PINN, PISN and PINSN.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Eval, Jet, JetAlgebra, ParamLayout};
use crate::mlp::{Mlp, MlpError};
use crate::symnet::{extract_from, ExprNode, Grammar, SymbolicNet};

/// Which family of main network to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchKind {
    /// Plain MLP, one output per PDE unknown.
    Pinn,
    /// One symbolic network per PDE unknown.
    Pisn,
    /// Symbolic networks plus an MLP residual.
    Pinsn,
}

impl ArchKind {
    pub fn name(self) -> &'static str {
        match self {
            ArchKind::Pinn => "pinn",
            ArchKind::Pisn => "pisn",
            ArchKind::Pinsn => "pinsn",
        }
    }
}

/// Architecture hyperparameters shared by every construction site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub kind: ArchKind,
    /// Hidden layers of each symbolic network.
    pub depth: usize,
    /// Hidden layer widths of the MLP (PINN body or PINSN residual).
    pub hidden: Vec<usize>,
    /// Output factor of the PINSN residual MLP.
    pub residual_scale: f64,
}

impl NetworkSpec {
    pub fn pisn(depth: usize) -> NetworkSpec {
        NetworkSpec { kind: ArchKind::Pisn, depth, hidden: vec![20; 6], residual_scale: 1.0 }
    }

    pub fn pinn(hidden: Vec<usize>) -> NetworkSpec {
        NetworkSpec { kind: ArchKind::Pinn, depth: 2, hidden, residual_scale: 1.0 }
    }

    pub fn pinsn(depth: usize, hidden: Vec<usize>) -> NetworkSpec {
        NetworkSpec { kind: ArchKind::Pinsn, depth, hidden, residual_scale: 1.0 }
    }

    pub fn with_residual_scale(mut self, scale: f64) -> NetworkSpec {
        self.residual_scale = scale;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Network {
    Pinn(Mlp),
    Pisn(Vec<SymbolicNet>),
    Pinsn { symbolic: Vec<SymbolicNet>, residual: Mlp },
}

fn mlp_sizes(inputs: usize, hidden: &[usize], outputs: usize) -> Vec<usize> {
    let mut s = vec![inputs];
    s.extend_from_slice(hidden);
    s.push(outputs);
    s
}

impl Network {
    /// Builds a network whose weights start at `offset` and returns it with
    /// its local layout (segment names prefixed by `prefix` and the output
    /// names).
    pub fn build(
        spec: &NetworkSpec,
        grammar: &Grammar,
        outputs: &[&str],
        offset: usize,
        prefix: &str,
    ) -> Result<(Network, ParamLayout), MlpError> {
        let n_in = grammar.n_inputs();
        let mut layout = ParamLayout::new();
        let symbolic_nets = |layout: &mut ParamLayout| -> Result<Vec<SymbolicNet>, MlpError> {
            let mut nets = Vec::with_capacity(outputs.len());
            for name in outputs {
                let net = SymbolicNet::new(grammar.clone(), spec.depth, offset + layout.len())?;
                layout.extend(&net.layout(&format!("{prefix}{name}.")));
                nets.push(net);
            }
            Ok(nets)
        };
        let net = match spec.kind {
            ArchKind::Pinn => {
                let mlp = Mlp::new(&mlp_sizes(n_in, &spec.hidden, outputs.len()), offset)?;
                layout.extend(&mlp.layout(&format!("{prefix}pinn.")));
                Network::Pinn(mlp)
            }
            ArchKind::Pisn => Network::Pisn(symbolic_nets(&mut layout)?),
            ArchKind::Pinsn => {
                let symbolic = symbolic_nets(&mut layout)?;
                let residual = Mlp::new(&mlp_sizes(n_in, &spec.hidden, outputs.len()), offset + layout.len())?
                    .with_output_scale(spec.residual_scale);
                layout.extend(&residual.layout(&format!("{prefix}res.")));
                Network::Pinsn { symbolic, residual }
            }
        };
        Ok((net, layout))
    }

    pub fn kind(&self) -> ArchKind {
        match self {
            Network::Pinn(_) => ArchKind::Pinn,
            Network::Pisn(_) => ArchKind::Pisn,
            Network::Pinsn { .. } => ArchKind::Pinsn,
        }
    }

    pub fn n_inputs(&self) -> usize {
        match self {
            Network::Pinn(m) => m.n_inputs(),
            Network::Pisn(s) | Network::Pinsn { symbolic: s, .. } => s[0].grammar().n_inputs(),
        }
    }

    pub fn n_outputs(&self) -> usize {
        match self {
            Network::Pinn(m) => m.n_outputs(),
            Network::Pisn(s) | Network::Pinsn { symbolic: s, .. } => s.len(),
        }
    }

    pub fn param_count(&self) -> usize {
        let r = self.param_range();
        r.end - r.start
    }

    pub fn param_range(&self) -> Range<usize> {
        match self {
            Network::Pinn(m) => m.param_range(),
            Network::Pisn(s) => s[0].offset()..s[s.len() - 1].param_range().end,
            Network::Pinsn { symbolic, residual } => symbolic[0].offset()..residual.param_range().end,
        }
    }

    /// Weights of the symbolic part (empty for a PINN).
    pub fn symbolic_range(&self) -> Range<usize> {
        match self {
            Network::Pinn(m) => m.offset()..m.offset(),
            Network::Pisn(s) | Network::Pinsn { symbolic: s, .. } => s[0].offset()..s[s.len() - 1].param_range().end,
        }
    }

    /// Weights of the MLP part (the whole network for a PINN).
    pub fn mlp_range(&self) -> Range<usize> {
        match self {
            Network::Pinn(m) | Network::Pinsn { residual: m, .. } => m.param_range(),
            Network::Pisn(s) => {
                let end = s[s.len() - 1].param_range().end;
                end..end
            }
        }
    }

    pub fn symbolic(&self) -> &[SymbolicNet] {
        match self {
            Network::Pinn(_) => &[],
            Network::Pisn(s) | Network::Pinsn { symbolic: s, .. } => s,
        }
    }

    /// One output value per PDE unknown.
    pub fn forward<A: JetAlgebra>(&self, alg: &mut A, params: &[f64], inputs: &[A::Value]) -> Vec<A::Value> {
        match self {
            Network::Pinn(m) => m.forward(alg, params, inputs),
            Network::Pisn(s) => s.iter().map(|n| n.forward(alg, params, inputs)).collect(),
            Network::Pinsn { symbolic, residual } => {
                let r = residual.forward(alg, params, inputs);
                symbolic
                    .iter()
                    .zip(r)
                    .map(|(n, r)| {
                        let s = n.forward(alg, params, inputs);
                        alg.add(s, r)
                    })
                    .collect()
            }
        }
    }

    /// Forward pass with the symbolic part replaced by precomputed jets
    /// (its weights are frozen). Only meaningful for PINSN.
    pub fn forward_frozen<A: JetAlgebra>(
        &self,
        alg: &mut A,
        params: &[f64],
        inputs: &[A::Value],
        symbolic_out: &[Jet],
    ) -> Vec<A::Value> {
        match self {
            Network::Pinsn { residual, .. } => {
                let r = residual.forward(alg, params, inputs);
                symbolic_out
                    .iter()
                    .zip(r)
                    .map(|(s, r)| {
                        let s = alg.lift(*s);
                        alg.add(s, r)
                    })
                    .collect()
            }
            _ => self.forward(alg, params, inputs),
        }
    }

    /// Symbolic-part outputs only.
    pub fn symbolic_forward<A: JetAlgebra>(&self, alg: &mut A, params: &[f64], inputs: &[A::Value]) -> Vec<A::Value> {
        self.symbolic().iter().map(|n| n.forward(alg, params, inputs)).collect()
    }

    pub fn eval_point(&self, params: &[f64], point: &[f64]) -> Vec<Jet> {
        let inputs = Jet::seed(point);
        self.forward(&mut Eval, params, &inputs)
    }

    pub fn eval_values(&self, params: &[f64], point: &[f64]) -> Vec<f64> {
        self.eval_point(params, point).iter().map(Jet::value).collect()
    }

    /// Initial weights for this network's range.
    ///
    /// Symbolic weights are uniform in `[-0.5, 0.5]`, MLP weights uniform in
    /// `±1/sqrt(fan_in)`. A PINSN residual starts with a zero output layer so
    /// the composite initially equals its symbolic part.
    pub fn init_values<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for s in self.symbolic() {
            out.extend(s.init_values(rng));
        }
        match self {
            Network::Pinn(m) => out.extend(m.init_values(rng)),
            Network::Pisn(_) => {}
            Network::Pinsn { residual, .. } => {
                let mut r = residual.init_values(rng);
                let (w, _) = residual.layer_offsets(residual.n_layers() - 1);
                let start = w - residual.offset();
                r[start..].iter_mut().for_each(|v| *v = 0.0);
                out.extend(r);
            }
        }
        out
    }

    /// Expression per output for the symbolic part.
    pub fn expressions(&self, params: &[f64], threshold: f64) -> Vec<ExprNode> {
        self.symbolic()
            .iter()
            .map(|n| extract_from(n, params, threshold))
            .collect()
    }
}
