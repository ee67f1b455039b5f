//! Domain-decomposed training on the unit square: one network per box,
//! coupled through interface penalties.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Eval, Jet, JetAlgebra, ParamLayout, Slot, Tape};
use crate::harness::trace::{optimize, LossTrace, Stage};
use crate::harness::{HarnessError, InterfaceWeights, TrainConfig};
use crate::network::{ArchKind, Network, NetworkSpec};
use crate::pdelib::{evaluate_errors_with, linspace, ErrorReport, PdeProblem};
use crate::physics::{CollocationCounts, CollocationSet, PhysicsLoss, TERMS};
use crate::symnet::Grammar;

const CHUNK: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompError {
    #[error("point ({0}, {1}) is outside the unit square")]
    Outside(f64, f64),
}

/// One box of the decomposition with its network shape and point budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubdomainSpec {
    /// 1-based.
    pub index: usize,
    pub x: (f64, f64),
    pub y: (f64, f64),
    /// Hidden layers of the box MLP.
    pub layers: usize,
    pub neurons: usize,
    /// Residual (interior) points.
    pub points: usize,
}

pub const X_SPLITS: [f64; 4] = [0.0, 0.4, 0.8, 1.0];
pub const Y_SPLITS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// `(layers, neurons, points)` of boxes 1 to 12.
const TABLE: [(usize, usize, usize); 12] = [
    (6, 20, 1000),
    (4, 20, 600),
    (2, 20, 400),
    (6, 20, 1000),
    (6, 20, 1000),
    (2, 20, 600),
    (4, 20, 400),
    (6, 20, 1000),
    (4, 20, 600),
    (2, 20, 400),
    (6, 20, 1000),
    (6, 20, 1000),
];

/// The 12 boxes: three columns split at x = 0.4, 0.8 and four rows split
/// at y = 0.25, 0.5, 0.75, numbered row by row from the origin.
pub fn standard_subdomains() -> Vec<SubdomainSpec> {
    (0..12)
        .map(|k| {
            let (col, row) = (k % 3, k / 3);
            let (layers, neurons, points) = TABLE[k];
            SubdomainSpec {
                index: k + 1,
                x: (X_SPLITS[col], X_SPLITS[col + 1]),
                y: (Y_SPLITS[row], Y_SPLITS[row + 1]),
                layers,
                neurons,
                points,
            }
        })
        .collect()
}

/// Box of the standard decomposition holding `(x, y)`, 1-based.
///
/// Boxes are half-open `[lo, hi)` except the last one along each axis,
/// which is closed.
pub fn locate_subdomain(x: f64, y: f64) -> Result<usize, DecompError> {
    let col = axis_cell(&X_SPLITS, x).ok_or(DecompError::Outside(x, y))?;
    let row = axis_cell(&Y_SPLITS, y).ok_or(DecompError::Outside(x, y))?;
    Ok(row * 3 + col + 1)
}

fn axis_cell(splits: &[f64], v: f64) -> Option<usize> {
    let n = splits.len() - 1;
    if !(v >= splits[0] && v <= splits[n]) {
        return None;
    }
    Some((0..n).find(|&k| v < splits[k + 1]).unwrap_or(n - 1))
}

/// Position in `specs` of the box holding `(x, y)`, same tie rule.
pub fn locate_in(specs: &[SubdomainSpec], x: f64, y: f64) -> Option<usize> {
    let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && (v < hi || (hi == 1.0 && v == 1.0));
    specs.iter().position(|s| inside(x, s.x) && inside(y, s.y))
}

/// A face shared by two boxes.
#[derive(Clone, Debug, PartialEq)]
pub struct Interface {
    /// Positions in the subdomain list; `low` is on the smaller-coordinate side.
    pub low: usize,
    pub high: usize,
    /// Input index of the face normal (0 for x, 1 for y).
    pub normal: usize,
    pub at: f64,
    /// Extent along the other spatial axis.
    pub span: (f64, f64),
}

/// Every face shared by two boxes of `specs`.
pub fn interfaces(specs: &[SubdomainSpec]) -> Vec<Interface> {
    let mut out = Vec::new();
    for (i, a) in specs.iter().enumerate() {
        for (j, b) in specs.iter().enumerate() {
            if a.x.1 == b.x.0 && a.y == b.y {
                out.push(Interface { low: i, high: j, normal: 0, at: a.x.1, span: a.y });
            }
            if a.y.1 == b.y.0 && a.x == b.x {
                out.push(Interface { low: i, high: j, normal: 1, at: a.y.1, span: a.x });
            }
        }
    }
    out
}

/// Points on one face.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfacePoints {
    pub face: Interface,
    pub points: Vec<Vec<f64>>,
}

/// `n` equispaced points per face (endpoints excluded) for each time
/// slice of the problem.
pub fn interface_points(problem: &PdeProblem, specs: &[SubdomainSpec], n: usize) -> Vec<InterfacePoints> {
    let times: Vec<f64> = problem.time_slices.clone().unwrap_or_else(|| vec![0.0]);
    interfaces(specs)
        .into_iter()
        .map(|face| {
            let (lo, hi) = face.span;
            let along: Vec<f64> = linspace(lo, hi, n + 2)[1..=n].to_vec();
            let mut points = Vec::with_capacity(n * times.len());
            for &t in &times {
                for &s in &along {
                    let (x, y) = if face.normal == 0 { (face.at, s) } else { (s, face.at) };
                    points.push(if problem.n_inputs() == 3 { vec![x, y, t] } else { vec![x, y] });
                }
            }
            InterfacePoints { face, points }
        })
        .collect()
}

/// Coupling penalty at one interface point from the two sides' output
/// jets: value mismatch, normal-derivative mismatch and residual mismatch,
/// each squared and weighted.
pub fn interface_point<A: JetAlgebra>(
    alg: &mut A,
    problem: &PdeProblem,
    a: &[A::Value],
    b: &[A::Value],
    normal: usize,
    point: &[f64],
    w: InterfaceWeights,
) -> A::Value {
    let mut parts = Vec::new();
    for (&ua, &ub) in a.iter().zip(b) {
        for (slot, weight) in [(Slot::Value, w.value), (Slot::First(normal), w.flux)] {
            if weight == 0.0 {
                continue;
            }
            let va = alg.slot(ua, slot);
            let vb = alg.slot(ub, slot);
            let d = alg.sub(va, vb);
            let sq = alg.square(d);
            parts.push(alg.scale(sq, weight));
        }
    }
    if w.residual != 0.0 {
        let ra = problem.residual(alg, a, point);
        let rb = problem.residual(alg, b, point);
        for (x, y) in ra.into_iter().zip(rb) {
            let d = alg.sub(x, y);
            let sq = alg.square(d);
            parts.push(alg.scale(sq, w.residual));
        }
    }
    alg.sum(&parts)
}

/// Interface loss for arbitrary per-box evaluators (`eval(box, point)`
/// returns the output jets of that box's model).
pub fn interface_loss_with<F>(problem: &PdeProblem, set: &[InterfacePoints], eval: F, w: InterfaceWeights) -> f64
where
    F: Fn(usize, &[f64]) -> Vec<Jet>,
{
    let mut total = 0.0;
    for f in set {
        for p in &f.points {
            let a = eval(f.face.low, p);
            let b = eval(f.face.high, p);
            total += interface_point(&mut Eval, problem, &a, &b, f.face.normal, p, w).value();
        }
    }
    total
}

/// Interface loss of trained networks (one per box).
pub fn interface_loss(problem: &PdeProblem, nets: &[Network], params: &[f64], set: &[InterfacePoints], w: InterfaceWeights) -> f64 {
    interface_loss_with(problem, set, |k, p| nets[k].eval_point(params, p), w)
}

/// Interface loss with its gradient added into `grad`.
fn interface_loss_grad(
    problem: &PdeProblem,
    nets: &[Network],
    params: &[f64],
    set: &[InterfacePoints],
    w: InterfaceWeights,
    grad: &mut [f64],
) -> Result<f64, String> {
    let mut total = 0.0;
    for f in set {
        let (na, nb) = (&nets[f.face.low], &nets[f.face.high]);
        let (ra, rb) = (na.param_range(), nb.param_range());
        let window = ra.start.min(rb.start)..ra.end.max(rb.end);
        let parts: Vec<Result<(f64, Vec<f64>), String>> = f
            .points
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut tape = Tape::new();
                let mut g = vec![0.0; window.len()];
                let mut sum = 0.0;
                for p in chunk {
                    tape.clear();
                    let inputs: Vec<_> = Jet::seed(p).into_iter().map(|j| tape.lift(j)).collect();
                    let a = na.forward(&mut tape, params, &inputs);
                    let b = nb.forward(&mut tape, params, &inputs);
                    let node = interface_point(&mut tape, problem, &a, &b, f.face.normal, p, w);
                    let v = tape.value(node).value();
                    if !v.is_finite() {
                        return Err(format!("non-finite interface loss between boxes {} and {}", f.face.low + 1, f.face.high + 1));
                    }
                    sum += v;
                    tape.backward_window(params, &[(node, 1.0)], &mut g, window.start).map_err(|e| e.to_string())?;
                }
                Ok((sum, g))
            })
            .collect();
        for part in parts {
            let (s, g) = part?;
            total += s;
            for (d, v) in grad[window.clone()].iter_mut().zip(&g) {
                *d += v;
            }
        }
    }
    Ok(total)
}

/// Networks for every box, laid out one after another.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompModel {
    pub specs: Vec<SubdomainSpec>,
    pub nets: Vec<Network>,
    pub layout: ParamLayout,
}

/// Symbolic depth used for a box whose MLP has `layers` hidden layers.
pub fn symbolic_depth(layers: usize) -> usize {
    (layers / 2).max(1)
}

impl DecompModel {
    /// `residual_scale` only matters for PINSN boxes.
    pub fn build(problem: &PdeProblem, kind: ArchKind, residual_scale: f64, specs: Vec<SubdomainSpec>) -> Result<DecompModel, HarnessError> {
        let grammar = Grammar::new(&problem.vars).map_err(|e| HarnessError::Config(e.to_string()))?;
        let mut layout = ParamLayout::new();
        let mut nets = Vec::with_capacity(specs.len());
        for s in &specs {
            let hidden = vec![s.neurons; s.layers];
            let spec = NetworkSpec { kind, depth: symbolic_depth(s.layers), hidden, residual_scale };
            let (net, l) = Network::build(&spec, &grammar, &problem.outputs, layout.len(), &format!("d{}.", s.index))
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            layout.extend(&l);
            nets.push(net);
        }
        Ok(DecompModel { specs, nets, layout })
    }

    pub fn param_count(&self) -> usize {
        self.layout.len()
    }

    pub fn init_values(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.nets.iter().flat_map(|n| n.init_values(&mut rng)).collect()
    }

    /// Box position holding `point`.
    pub fn locate(&self, point: &[f64]) -> Option<usize> {
        locate_in(&self.specs, point[0], point[1])
    }

    pub fn predict(&self, params: &[f64], point: &[f64]) -> Vec<f64> {
        let k = self.locate(point).expect("point inside the unit square");
        self.nets[k].eval_values(params, point)
    }

    /// Error report of each box over the grid points it owns.
    pub fn domain_reports(&self, problem: &PdeProblem, params: &[f64], grid: &[Vec<f64>], label: &str) -> Vec<ErrorReport> {
        let mut owned: Vec<Vec<Vec<f64>>> = vec![Vec::new(); self.specs.len()];
        for p in grid {
            if let Some(k) = self.locate(p) {
                owned[k].push(p.clone());
            }
        }
        owned
            .iter()
            .enumerate()
            .map(|(k, pts)| evaluate_errors_with(problem, label, pts, |p| self.nets[k].eval_values(params, p)))
            .collect()
    }
}

pub const DOMAIN_CSV_HEADER: &str = "domain,output,mean_err,max_err";

/// Per-box error table, one row per box and output.
pub fn domain_csv(specs: &[SubdomainSpec], reports: &[ErrorReport]) -> String {
    let mut s = format!("{DOMAIN_CSV_HEADER}\n");
    for out in 0..reports.first().map_or(0, |r| r.outputs.len()) {
        for (spec, r) in specs.iter().zip(reports) {
            let o = &r.outputs[out];
            s.push_str(&format!("{},{},{:e},{:e}\n", spec.index, o.output, o.mean, o.max));
        }
    }
    s
}

/// Result of decomposed training.
#[derive(Clone, Debug)]
pub struct DecompRun {
    pub model: DecompModel,
    pub values: Vec<f64>,
    pub trace: LossTrace,
    pub domain_reports: Vec<ErrorReport>,
    pub report: ErrorReport,
    /// Collocation sets, one per box.
    pub colloc: Vec<CollocationSet>,
}

/// Trains one network per box jointly on the sum of the box losses and
/// the interface loss. A PINSN decomposition trains the symbolic parts
/// first and then the residual MLPs with the symbolic weights frozen.
pub fn decomp_train(problem: &PdeProblem, specs: Vec<SubdomainSpec>, config: &TrainConfig) -> Result<DecompRun, HarnessError> {
    let dc = config.decomp.clone().unwrap_or_default();
    let kind = config.architecture.kind();
    let model = DecompModel::build(problem, kind, config.residual_scale, specs)?;
    let mut values = model.init_values(config.seed);
    let colloc: Vec<CollocationSet> = model
        .specs
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let region = [s.x, s.y, (0.0, 1.0)];
            let counts = CollocationCounts {
                interior: ((s.points as f64) * dc.budget_scale).round() as usize,
                ..config.collocation
            };
            CollocationSet::sample_region(problem, &region[..problem.n_inputs()], counts, config.sampling, config.seed.wrapping_add(1 + k as u64))
        })
        .collect();
    let iface = interface_points(problem, &model.specs, dc.interface_points);
    let mut columns = vec!["total"];
    columns.extend(TERMS.iter().map(|t| t.name()));
    columns.push("interface");
    let mut trace = LossTrace::new(&columns);

    let mut losses: Vec<PhysicsLoss> = model
        .nets
        .iter()
        .zip(&colloc)
        .map(|(n, c)| PhysicsLoss::new(problem, n, c, config.weights))
        .collect::<Result<_, _>>()?;

    let mut stages: Vec<(u8, usize, crate::harness::StepDecay, Vec<Range<usize>>)> = Vec::new();
    match kind {
        ArchKind::Pinsn => {
            let s2 = config.stage2.clone().ok_or_else(|| HarnessError::Config("pinsn runs need a [stage2] section".into()))?;
            stages.push((1, config.epochs, config.schedule.clone(), model.nets.iter().map(|n| n.symbolic_range()).collect()));
            stages.push((2, s2.epochs, s2.schedule, model.nets.iter().map(|n| n.mlp_range()).collect()));
        }
        _ => stages.push((1, config.epochs, config.schedule.clone(), vec![0..model.param_count()])),
    }
    for (id, epochs, schedule, trainable) in stages {
        if id == 2 {
            log::info!("stage 2: residual networks, symbolic weights frozen");
            for l in &mut losses {
                l.freeze_symbolic(&values)?;
            }
        }
        let stage = Stage { id, epochs, schedule: &schedule, trainable, log_every: epochs.div_ceil(10) };
        let objective = |p: &[f64], grad: &mut [f64]| -> Result<Vec<f64>, String> {
            let mut out = vec![0.0; 2 + TERMS.len()];
            let mut total = 0.0;
            for (k, l) in losses.iter().enumerate() {
                let b = l.evaluate_with_grad(p, grad).map_err(|e| format!("subdomain {}: {e}", model.specs[k].index))?;
                total += b.total();
                for (t, term) in TERMS.iter().enumerate() {
                    out[1 + t] += b.get(*term);
                }
            }
            let i = if iface.is_empty() { 0.0 } else { interface_loss_grad(problem, &model.nets, p, &iface, dc.interface, grad)? };
            out[0] = total + i;
            out[1 + TERMS.len()] = i;
            Ok(out)
        };
        let (best, _) = optimize(&mut values, &stage, &mut trace, objective).map_err(|s| HarnessError::Diverged {
            stage: id,
            epoch: s.epoch,
            detail: s.detail,
            last_finite: Vec::new(),
        })
        .map_err(|e| match e {
            HarnessError::Diverged { stage, epoch, detail, .. } => HarnessError::Diverged { stage, epoch, detail, last_finite: values.clone() },
            other => other,
        })?;
        values = best;
    }
    let grid = problem.grid(config.eval_grid);
    let label = config.architecture.name();
    let domain_reports = model.domain_reports(problem, &values, &grid, label);
    let report = evaluate_errors_with(problem, label, &grid, |p| model.predict(&values, p));
    Ok(DecompRun { model, values, trace, domain_reports, report, colloc })
}
