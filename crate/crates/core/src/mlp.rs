//! Fully connected tanh networks.
//!
//! Used as the PINN baseline, as the residual operator added to a symbolic
//! network, and as the hypernetwork body. Layer `l` stores its weight
//! matrix row-major (`out x in`) followed by its bias vector.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Eval, Jet, JetAlgebra, ParamLayout, ParamVector};
use crate::symnet::{SymbolicNetParams, SymnetError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlpError {
    #[error("an MLP needs at least an input and an output layer, got sizes {0:?}")]
    TooFewLayers(Vec<usize>),
    #[error("layer sizes must be positive, got {0:?}")]
    EmptyLayer(Vec<usize>),
    #[error("point has {got} coordinates, network expects {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("symbolic and residual networks disagree on inputs ({symbolic} vs {residual})")]
    InputMismatch { symbolic: usize, residual: usize },
    #[error(transparent)]
    Symbolic(#[from] SymnetError),
}

/// Shape of a tanh MLP and the offset of its weights in a parameter array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    offset: usize,
    /// Fixed factor applied to the linear output layer.
    #[serde(default = "unit_scale")]
    output_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl Mlp {
    pub fn new(sizes: &[usize], offset: usize) -> Result<Mlp, MlpError> {
        if sizes.len() < 2 {
            return Err(MlpError::TooFewLayers(sizes.to_vec()));
        }
        if sizes.contains(&0) {
            return Err(MlpError::EmptyLayer(sizes.to_vec()));
        }
        Ok(Mlp { sizes: sizes.to_vec(), offset, output_scale: 1.0 })
    }

    /// Same network with every output multiplied by `scale`. A small scale
    /// keeps Adam's step-size noise small relative to a small target, which
    /// is what a residual correction is.
    pub fn with_output_scale(mut self, scale: f64) -> Mlp {
        self.output_scale = scale;
        self
    }

    pub fn output_scale(&self) -> f64 {
        self.output_scale
    }

    /// `inputs -> [width; depth] -> outputs`.
    pub fn uniform(inputs: usize, width: usize, depth: usize, outputs: usize, offset: usize) -> Result<Mlp, MlpError> {
        let mut sizes = vec![inputs];
        sizes.extend(std::iter::repeat_n(width, depth));
        sizes.push(outputs);
        Mlp::new(&sizes, offset)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn param_range(&self) -> Range<usize> {
        self.offset..self.offset + self.param_count()
    }

    /// Absolute offsets of the weight matrix and bias vector of `layer`.
    pub fn layer_offsets(&self, layer: usize) -> (usize, usize) {
        let mut off = self.offset;
        for w in self.sizes.windows(2).take(layer) {
            off += w[0] * w[1] + w[1];
        }
        let (fan_in, fan_out) = (self.sizes[layer], self.sizes[layer + 1]);
        (off, off + fan_in * fan_out)
    }

    pub fn layout(&self, prefix: &str) -> ParamLayout {
        let mut layout = ParamLayout::new();
        for (l, w) in self.sizes.windows(2).enumerate() {
            layout.push(format!("{prefix}mlp.w{l}"), w[0] * w[1]);
            layout.push(format!("{prefix}mlp.b{l}"), w[1]);
        }
        layout
    }

    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases.
    pub fn init_values<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for w in self.sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            out.extend((0..w[0] * w[1] + w[1]).map(|_| rng.gen_range(-bound..=bound)));
        }
        out
    }

    /// Output jets; hidden layers use tanh, the last layer is linear.
    pub fn forward<A: JetAlgebra>(&self, alg: &mut A, params: &[f64], inputs: &[A::Value]) -> Vec<A::Value> {
        debug_assert_eq!(inputs.len(), self.n_inputs());
        let mut state = inputs.to_vec();
        let last = self.n_layers() - 1;
        for layer in 0..self.n_layers() {
            let (w, b) = self.layer_offsets(layer);
            let (fan_in, fan_out) = (self.sizes[layer], self.sizes[layer + 1]);
            let next: Vec<A::Value> = (0..fan_out)
                .map(|o| {
                    let z = alg.dot(params, w + o * fan_in, &state, Some(b + o));
                    if layer == last {
                        if self.output_scale == 1.0 {
                            z
                        } else {
                            alg.scale(z, self.output_scale)
                        }
                    } else {
                        alg.tanh(z)
                    }
                })
                .collect();
            state = next;
        }
        state
    }

    /// Plain-value forward pass that keeps every layer's activations for
    /// [`Mlp::backward_values`].
    pub fn forward_values(&self, params: &[f64], input: &[f64]) -> Activations {
        let mut layers = Vec::with_capacity(self.sizes.len());
        layers.push(input.to_vec());
        let last = self.n_layers() - 1;
        for layer in 0..self.n_layers() {
            let (w, b) = self.layer_offsets(layer);
            let (fan_in, fan_out) = (self.sizes[layer], self.sizes[layer + 1]);
            let prev = &layers[layer];
            let weights = &params[w..w + fan_in * fan_out];
            let mut next = params[b..b + fan_out].to_vec();
            for (o, z) in next.iter_mut().enumerate() {
                let row = &weights[o * fan_in..(o + 1) * fan_in];
                *z += row.iter().zip(prev).map(|(a, x)| a * x).sum::<f64>();
                if layer != last {
                    *z = z.tanh();
                } else {
                    *z *= self.output_scale;
                }
            }
            layers.push(next);
        }
        Activations { layers }
    }

    /// Vector-Jacobian product of [`Mlp::forward_values`]: given the adjoint
    /// of the outputs, adds parameter adjoints into `grad` (indexed like
    /// `params`) and returns the input adjoint.
    pub fn backward_values(&self, params: &[f64], acts: &Activations, out_adj: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let mut adj: Vec<f64> = out_adj.iter().map(|a| a * self.output_scale).collect();
        let last = self.n_layers() - 1;
        for layer in (0..self.n_layers()).rev() {
            let (w, b) = self.layer_offsets(layer);
            let fan_in = self.sizes[layer];
            let out = &acts.layers[layer + 1];
            if layer != last {
                for (a, y) in adj.iter_mut().zip(out) {
                    *a *= 1.0 - y * y;
                }
            }
            let prev = &acts.layers[layer];
            let mut prev_adj = vec![0.0; fan_in];
            for (o, &g) in adj.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                grad[b + o] += g;
                let row = w + o * fan_in;
                let wrow = &params[row..row + fan_in];
                let grow = &mut grad[row..row + fan_in];
                for i in 0..fan_in {
                    grow[i] += g * prev[i];
                    prev_adj[i] += g * wrow[i];
                }
            }
            adj = prev_adj;
        }
        adj
    }
}

/// Per-layer activations from [`Mlp::forward_values`]; the last entry is
/// the output.
#[derive(Clone, Debug)]
pub struct Activations {
    layers: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.layers.last().expect("non-empty")
    }
}

/// An MLP together with its own weights.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub net: Mlp,
    pub values: ParamVector,
}

impl MlpParams {
    pub fn zeros(sizes: &[usize]) -> Result<MlpParams, MlpError> {
        let net = Mlp::new(sizes, 0)?;
        let values = ParamVector::zeros(net.layout(""));
        Ok(MlpParams { net, values })
    }

    pub fn init<R: Rng>(sizes: &[usize], rng: &mut R) -> Result<MlpParams, MlpError> {
        let net = Mlp::new(sizes, 0)?;
        let values = ParamVector::from_values(net.layout(""), net.init_values(rng)).expect("init matches layout");
        Ok(MlpParams { net, values })
    }
}

/// Output jets of `params` at `point`.
pub fn mlp_forward(params: &MlpParams, point: &[f64]) -> Result<Vec<Jet>, MlpError> {
    let expected = params.net.n_inputs();
    if point.len() != expected {
        return Err(MlpError::PointDimension { expected, got: point.len() });
    }
    let inputs = Jet::seed(point);
    Ok(params.net.forward(&mut Eval, &params.values.values, &inputs))
}

/// Symbolic network plus residual MLP (first MLP output), slot by slot.
pub fn pinsn_forward(sym: &SymbolicNetParams, res: &MlpParams, point: &[f64]) -> Result<Jet, MlpError> {
    let (symbolic, residual) = (sym.grammar().n_inputs(), res.net.n_inputs());
    if symbolic != residual {
        return Err(MlpError::InputMismatch { symbolic, residual });
    }
    let s = crate::symnet::symnet_forward(sym, point)?;
    let r = mlp_forward(res, point)?;
    Ok(s + r[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_is_zero() {
        let p = MlpParams::zeros(&[2, 5, 5, 1]).unwrap();
        assert_eq!(mlp_forward(&p, &[0.4, -0.3]).unwrap()[0], Jet::ZERO);
    }

    #[test]
    fn single_linear_layer() {
        let mut p = MlpParams::zeros(&[1, 1]).unwrap();
        p.values.values.copy_from_slice(&[2.0, 1.0]);
        let out = mlp_forward(&p, &[3.0]).unwrap()[0];
        assert_eq!(out.value(), 7.0);
        assert_eq!(out.first(0), 2.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Mlp::new(&[3], 0).is_err());
        assert!(Mlp::new(&[3, 0, 1], 0).is_err());
        let p = MlpParams::zeros(&[2, 1]).unwrap();
        assert!(mlp_forward(&p, &[1.0]).is_err());
    }

    #[test]
    fn layout_matches_count() {
        let net = Mlp::uniform(2, 20, 6, 1, 0).unwrap();
        let layout = net.layout("");
        layout.validate().unwrap();
        assert_eq!(layout.len(), net.param_count());
        assert_eq!(net.param_count(), 2 * 20 + 20 + 5 * (20 * 20 + 20) + 21);
    }

    #[test]
    fn dense_path_matches_jet_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = MlpParams::init(&[2, 7, 7, 3], &mut rng).unwrap();
        let jets = mlp_forward(&p, &[0.3, -0.8]).unwrap();
        let acts = p.net.forward_values(&p.values.values, &[0.3, -0.8]);
        for (j, v) in jets.iter().zip(acts.output()) {
            assert!((j.value() - v).abs() < 1e-14);
        }
    }

    #[test]
    fn dense_backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = MlpParams::init(&[1, 6, 6, 2], &mut rng).unwrap();
        let x = [0.37];
        let f = |vals: &[f64]| {
            let out = p.net.forward_values(vals, &x);
            out.output()[0] - 2.0 * out.output()[1]
        };
        let acts = p.net.forward_values(&p.values.values, &x);
        let mut grad = vec![0.0; p.values.len()];
        p.net.backward_values(&p.values.values, &acts, &[1.0, -2.0], &mut grad);
        let h = 1e-6;
        for i in (0..grad.len()).step_by(5) {
            let mut plus = p.values.values.clone();
            let mut minus = p.values.values.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-8, "param {i}: {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn output_scale_multiplies_outputs_and_adjoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = MlpParams::init(&[2, 5, 2], &mut rng).unwrap();
        let scaled = p.net.clone().with_output_scale(0.01);
        let x = [0.2, 0.9];
        let inputs = Jet::seed(&x);
        let a = p.net.forward(&mut Eval, &p.values.values, &inputs);
        let b = scaled.forward(&mut Eval, &p.values.values, &inputs);
        for (a, b) in a.iter().zip(&b) {
            assert!((a.value() * 0.01 - b.value()).abs() < 1e-16);
            assert!((a.second(0, 1) * 0.01 - b.second(0, 1)).abs() < 1e-16);
        }
        let acts = scaled.forward_values(&p.values.values, &x);
        assert!((acts.output()[1] - b[1].value()).abs() < 1e-16);
        let (mut g1, mut g2) = (vec![0.0; p.values.len()], vec![0.0; p.values.len()]);
        p.net.backward_values(&p.values.values, &p.net.forward_values(&p.values.values, &x), &[1.0, 0.0], &mut g1);
        scaled.backward_values(&p.values.values, &acts, &[1.0, 0.0], &mut g2);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a * 0.01 - b).abs() < 1e-16);
        }
    }
}
