//! Physics-informed loss: squared PDE residuals at collocation points plus
//! squared initial and boundary mismatches.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Eval, Jet, JetAlgebra, Slot, Tape};
use crate::network::Network;
use crate::pdelib::{linspace, Condition, PdeProblem};

/// Points per work unit. Fixed so the reduction order does not depend on
/// the number of threads.
const CHUNK: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("network has {got} inputs but {problem} has {want}")]
    Inputs { problem: &'static str, want: usize, got: usize },
    #[error("network has {got} outputs but {problem} has {want}")]
    Outputs { problem: &'static str, want: usize, got: usize },
    #[error("non-finite {term} loss at point {index}")]
    NonFinite { term: Term, index: usize },
    #[error("{term} point {index} {reason}")]
    BadPoint { term: Term, index: usize, reason: String },
    #[error("invalid loss weights: {0}")]
    Weights(String),
    #[error("symbolic freeze requested on a network without a residual part")]
    NotPinsn,
}

/// The four loss terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Physics,
    Idc,
    Inc,
    Bc,
}

pub const TERMS: [Term; 4] = [Term::Physics, Term::Idc, Term::Inc, Term::Bc];

impl Term {
    pub fn name(self) -> &'static str {
        match self {
            Term::Physics => "physics",
            Term::Idc => "idc",
            Term::Inc => "inc",
            Term::Bc => "bc",
        }
    }

    fn condition(self) -> Option<Condition> {
        match self {
            Term::Physics => None,
            Term::Idc => Some(Condition::InitialValue),
            Term::Inc => Some(Condition::InitialRate),
            Term::Bc => Some(Condition::Boundary),
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A condition point and its target (one value per output).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub point: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Equispaced grids.
    Grid,
    /// Uniform random, seed controlled.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollocationCounts {
    pub interior: usize,
    /// Points for each initial condition (value and rate).
    pub initial: usize,
    /// Boundary points over all faces of the full domain.
    pub boundary: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CollocationSet {
    pub interior: Vec<Vec<f64>>,
    pub idc: Vec<Target>,
    pub inc: Vec<Target>,
    pub bc: Vec<Target>,
}

impl CollocationSet {
    /// Samples points over the whole problem domain.
    pub fn sample(problem: &PdeProblem, counts: CollocationCounts, sampling: Sampling, seed: u64) -> CollocationSet {
        Self::sample_region(problem, &problem.domain, counts, sampling, seed)
    }

    /// Samples points inside `region`, a sub-box of the problem domain.
    ///
    /// Condition points are only placed where the region touches the
    /// initial surface or a boundary face of the full domain; each touched
    /// face gets `counts.boundary / faces` points.
    pub fn sample_region(
        problem: &PdeProblem,
        region: &[(f64, f64)],
        counts: CollocationCounts,
        sampling: Sampling,
        seed: u64,
    ) -> CollocationSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ti = problem.time_index();
        let mut set = CollocationSet {
            interior: sample_box(problem, region, counts.interior, sampling, &mut rng),
            ..CollocationSet::default()
        };
        if let Some(ti) = ti {
            let t0 = problem.domain[ti].0;
            if region[ti].0 == t0 {
                let mut face = region.to_vec();
                face[ti] = (t0, t0);
                let n = counts.initial;
                if problem.has_condition(Condition::InitialValue) {
                    let pts = sample_box(problem, &face, n, sampling, &mut rng);
                    set.idc = targets(problem, Condition::InitialValue, pts);
                }
                if problem.has_condition(Condition::InitialRate) {
                    let pts = sample_box(problem, &face, n, sampling, &mut rng);
                    set.inc = targets(problem, Condition::InitialRate, pts);
                }
            }
        }
        let faces = problem.boundary_faces();
        if !faces.is_empty() {
            let per_face = counts.boundary / faces.len();
            for f in faces {
                let (lo, hi) = problem.domain[f.var];
                let at = if f.high { hi } else { lo };
                let (rlo, rhi) = region[f.var];
                if (f.high && rhi != at) || (!f.high && rlo != at) {
                    continue;
                }
                let mut face = region.to_vec();
                face[f.var] = (at, at);
                let pts = sample_box(problem, &face, per_face, sampling, &mut rng);
                set.bc.extend(targets(problem, Condition::Boundary, pts));
            }
        }
        set
    }

    pub fn len(&self) -> usize {
        self.interior.len() + self.idc.len() + self.inc.len() + self.bc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn term_len(&self, term: Term) -> usize {
        match term {
            Term::Physics => self.interior.len(),
            Term::Idc => self.idc.len(),
            Term::Inc => self.inc.len(),
            Term::Bc => self.bc.len(),
        }
    }

    /// Checks every point against the problem geometry.
    pub fn validate(&self, problem: &PdeProblem) -> Result<(), PhysicsError> {
        let bad = |term, index, reason: &str| PhysicsError::BadPoint { term, index, reason: reason.to_string() };
        for (i, p) in self.interior.iter().enumerate() {
            if !problem.contains(p) {
                return Err(bad(Term::Physics, i, "lies outside the domain"));
            }
        }
        for term in [Term::Idc, Term::Inc, Term::Bc] {
            let set = self.targets(term);
            let cond = term.condition().expect("condition term");
            if !set.is_empty() && !problem.has_condition(cond) {
                return Err(bad(term, 0, "belongs to a condition the problem does not declare"));
            }
            for (i, t) in set.iter().enumerate() {
                if !problem.contains(&t.point) {
                    return Err(bad(term, i, "lies outside the domain"));
                }
                if t.values.len() != problem.n_outputs() {
                    return Err(bad(term, i, "has the wrong number of targets"));
                }
                let on_surface = match term {
                    Term::Bc => problem
                        .boundary_faces()
                        .iter()
                        .any(|f| t.point[f.var] == if f.high { problem.domain[f.var].1 } else { problem.domain[f.var].0 }),
                    _ => problem.time_index().is_some_and(|ti| t.point[ti] == problem.domain[ti].0),
                };
                if !on_surface {
                    return Err(bad(term, i, "is not on its condition surface"));
                }
            }
        }
        Ok(())
    }

    fn targets(&self, term: Term) -> &[Target] {
        match term {
            Term::Physics => &[],
            Term::Idc => &self.idc,
            Term::Inc => &self.inc,
            Term::Bc => &self.bc,
        }
    }
}

fn targets(problem: &PdeProblem, cond: Condition, pts: Vec<Vec<f64>>) -> Vec<Target> {
    pts.into_iter()
        .map(|point| Target { values: problem.condition_target(cond, &point), point })
        .collect()
}

/// `n` points in a (possibly degenerate) box. Time coordinates snap to the
/// problem's time slices when it has them.
fn sample_box(problem: &PdeProblem, region: &[(f64, f64)], n: usize, sampling: Sampling, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let ti = problem.time_index();
    let slices: Option<Vec<f64>> = problem.time_slices.as_ref().map(|ts| {
        let (lo, hi) = region[ti.expect("time slices need a time variable")];
        ts.iter().copied().filter(|&t| t >= lo && t <= hi).collect()
    });
    let free: Vec<usize> = (0..region.len())
        .filter(|&i| region[i].0 != region[i].1 && !(Some(i) == ti && slices.is_some()))
        .collect();
    let fill = |i: usize, rng: &mut ChaCha8Rng| -> f64 {
        let (lo, hi) = region[i];
        if lo == hi {
            lo
        } else if let (Some(ts), true) = (&slices, Some(i) == ti) {
            ts[rng.gen_range(0..ts.len())]
        } else {
            rng.gen_range(lo..=hi)
        }
    };
    match sampling {
        Sampling::Random => (0..n).map(|_| (0..region.len()).map(|i| fill(i, rng)).collect()).collect(),
        Sampling::Grid => {
            if n == 0 {
                return Vec::new();
            }
            let sliced = slices.as_ref().filter(|_| ti.is_some_and(|t| region[t].0 != region[t].1));
            let n_slices = sliced.map_or(1, |s| s.len().max(1));
            let per = (n / n_slices).max(1);
            let k = if free.is_empty() { 1 } else { ((per as f64).powf(1.0 / free.len() as f64)).round().max(1.0) as usize };
            let axes: Vec<Vec<f64>> = (0..region.len())
                .map(|i| {
                    let (lo, hi) = region[i];
                    if lo == hi {
                        vec![lo]
                    } else if let (Some(ts), true) = (sliced, Some(i) == ti) {
                        ts.clone()
                    } else {
                        linspace(lo, hi, k)
                    }
                })
                .collect();
            crate::pdelib::cartesian(&axes)
        }
    }
}

/// Nonnegative coefficients of the four loss terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub physics: f64,
    pub idc: f64,
    pub inc: f64,
    pub bc: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { physics: 1.0, idc: 1.0, inc: 1.0, bc: 1.0 }
    }
}

impl LossWeights {
    pub fn get(&self, term: Term) -> f64 {
        match term {
            Term::Physics => self.physics,
            Term::Idc => self.idc,
            Term::Inc => self.inc,
            Term::Bc => self.bc,
        }
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        for t in TERMS {
            let w = self.get(t);
            if !w.is_finite() || w < 0.0 {
                return Err(PhysicsError::Weights(format!("{t} weight {w} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Weighted contribution of each term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub terms: [f64; 4],
}

impl LossBreakdown {
    pub fn get(&self, term: Term) -> f64 {
        self.terms[term.index()]
    }

    pub fn total(&self) -> f64 {
        self.terms.iter().sum()
    }

    fn add(&mut self, other: &LossBreakdown) {
        for (a, b) in self.terms.iter_mut().zip(other.terms) {
            *a += b;
        }
    }
}

/// Governing-equation residuals for given output jets.
pub fn physics_residual(problem: &PdeProblem, outputs: &[Jet], point: &[f64]) -> Result<Vec<f64>, PhysicsError> {
    if outputs.len() != problem.n_outputs() {
        return Err(PhysicsError::Outputs { problem: problem.name(), want: problem.n_outputs(), got: outputs.len() });
    }
    if point.len() != problem.n_inputs() {
        return Err(PhysicsError::Inputs { problem: problem.name(), want: problem.n_inputs(), got: point.len() });
    }
    Ok(problem.residual(&mut Eval, outputs, point).iter().map(Jet::value).collect())
}

/// Unweighted squared mismatch of one point for one term.
pub fn point_loss<A: JetAlgebra>(
    alg: &mut A,
    problem: &PdeProblem,
    outs: &[A::Value],
    term: Term,
    point: &[f64],
    target: &[f64],
) -> A::Value {
    let mut parts = Vec::with_capacity(outs.len().max(problem.n_equations()));
    match term {
        Term::Physics => {
            for r in problem.residual(alg, outs, point) {
                parts.push(alg.square(r));
            }
        }
        _ => {
            let slot = match term {
                Term::Inc => Slot::First(problem.time_index().expect("rate condition needs time")),
                _ => Slot::Value,
            };
            for (&u, &f) in outs.iter().zip(target) {
                let v = alg.slot(u, slot);
                let e = alg.affine(v, 1.0, -f);
                parts.push(alg.square(e));
            }
        }
    }
    alg.sum(&parts)
}

#[derive(Clone, Copy)]
struct Item<'a> {
    term: Term,
    index: usize,
    point: &'a [f64],
    target: &'a [f64],
}

/// The loss of one network on one collocation set.
#[derive(Clone, Debug)]
pub struct PhysicsLoss<'a> {
    problem: &'a PdeProblem,
    net: &'a Network,
    colloc: &'a CollocationSet,
    weights: LossWeights,
    /// Cached symbolic-part outputs per item when the symbolic weights are
    /// frozen.
    frozen: Option<Vec<Vec<Jet>>>,
}

impl<'a> PhysicsLoss<'a> {
    pub fn new(
        problem: &'a PdeProblem,
        net: &'a Network,
        colloc: &'a CollocationSet,
        weights: LossWeights,
    ) -> Result<PhysicsLoss<'a>, PhysicsError> {
        if net.n_inputs() != problem.n_inputs() {
            return Err(PhysicsError::Inputs { problem: problem.name(), want: problem.n_inputs(), got: net.n_inputs() });
        }
        if net.n_outputs() != problem.n_outputs() {
            return Err(PhysicsError::Outputs { problem: problem.name(), want: problem.n_outputs(), got: net.n_outputs() });
        }
        weights.validate()?;
        colloc.validate(problem)?;
        Ok(PhysicsLoss { problem, net, colloc, weights, frozen: None })
    }

    pub fn problem(&self) -> &PdeProblem {
        self.problem
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    pub fn weights(&self) -> LossWeights {
        self.weights
    }

    /// Caches the symbolic outputs at every point so later evaluations only
    /// differentiate the residual MLP. Gradients of the symbolic weights
    /// are then zero by construction.
    pub fn freeze_symbolic(&mut self, params: &[f64]) -> Result<(), PhysicsError> {
        if !matches!(self.net, Network::Pinsn { .. }) {
            return Err(PhysicsError::NotPinsn);
        }
        let cache = self
            .items()
            .iter()
            .map(|it| {
                let inputs = Jet::seed(it.point);
                self.net.symbolic_forward(&mut Eval, params, &inputs)
            })
            .collect();
        self.frozen = Some(cache);
        Ok(())
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen.is_some()
    }

    fn items(&self) -> Vec<Item<'a>> {
        let c = self.colloc;
        let mut items = Vec::with_capacity(c.len());
        items.extend(c.interior.iter().enumerate().map(|(index, p)| Item { term: Term::Physics, index, point: p, target: &[] }));
        for (term, set) in [(Term::Idc, &c.idc), (Term::Inc, &c.inc), (Term::Bc, &c.bc)] {
            items.extend(set.iter().enumerate().map(|(index, t)| Item { term, index, point: &t.point, target: &t.values }));
        }
        items
    }

    fn record<A: JetAlgebra>(&self, alg: &mut A, params: &[f64], flat: usize, it: &Item) -> A::Value {
        let inputs: Vec<A::Value> = Jet::seed(it.point).into_iter().map(|j| alg.lift(j)).collect();
        let outs = match &self.frozen {
            Some(cache) => self.net.forward_frozen(alg, params, &inputs, &cache[flat]),
            None => self.net.forward(alg, params, &inputs),
        };
        point_loss(alg, self.problem, &outs, it.term, it.point, it.target)
    }

    /// Weighted loss terms.
    pub fn evaluate(&self, params: &[f64]) -> Result<LossBreakdown, PhysicsError> {
        let items = self.items();
        let parts: Vec<Result<LossBreakdown, PhysicsError>> = items
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let mut out = LossBreakdown::default();
                for (k, it) in chunk.iter().enumerate() {
                    let v = self.record(&mut Eval, params, c * CHUNK + k, it).value();
                    if !v.is_finite() {
                        return Err(PhysicsError::NonFinite { term: it.term, index: it.index });
                    }
                    out.terms[it.term.index()] += self.weights.get(it.term) * v;
                }
                Ok(out)
            })
            .collect();
        let mut total = LossBreakdown::default();
        for p in parts {
            total.add(&p?);
        }
        Ok(total)
    }

    /// Weighted loss terms, adding the parameter gradient into `grad`
    /// (indexed like `params`).
    pub fn evaluate_with_grad(&self, params: &[f64], grad: &mut [f64]) -> Result<LossBreakdown, PhysicsError> {
        let items = self.items();
        let window = match self.frozen {
            Some(_) => self.net.mlp_range(),
            None => self.net.param_range(),
        };
        let parts: Vec<Result<(LossBreakdown, Vec<f64>), PhysicsError>> = items
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let mut tape = Tape::new();
                let mut g = vec![0.0; window.len()];
                let mut out = LossBreakdown::default();
                for (k, it) in chunk.iter().enumerate() {
                    tape.clear();
                    let node = self.record(&mut tape, params, c * CHUNK + k, it);
                    let v = tape.value(node).value();
                    let nonfinite = PhysicsError::NonFinite { term: it.term, index: it.index };
                    if !v.is_finite() {
                        return Err(nonfinite);
                    }
                    let w = self.weights.get(it.term);
                    out.terms[it.term.index()] += w * v;
                    if w != 0.0 {
                        tape.backward_window(params, &[(node, w)], &mut g, window.start)
                            .map_err(|e: AutodiffError| match e {
                                AutodiffError::NonFinite { .. } => nonfinite,
                                other => PhysicsError::BadPoint { term: it.term, index: it.index, reason: other.to_string() },
                            })?;
                    }
                }
                Ok((out, g))
            })
            .collect();
        let mut total = LossBreakdown::default();
        let dst = &mut grad[window];
        for p in parts {
            let (b, g) = p?;
            total.add(&b);
            for (d, s) in dst.iter_mut().zip(&g) {
                *d += s;
            }
        }
        Ok(total)
    }

    /// One weighted term on its own.
    pub fn term(&self, term: Term, params: &[f64]) -> Result<f64, PhysicsError> {
        let mut sum = 0.0;
        for (flat, it) in self.items().iter().enumerate().filter(|(_, it)| it.term == term) {
            let v = self.record(&mut Eval, params, flat, it).value();
            if !v.is_finite() {
                return Err(PhysicsError::NonFinite { term, index: it.index });
            }
            sum += v;
        }
        Ok(self.weights.get(term) * sum)
    }
}

/// Weighted physics-informed loss of `net` with weights `params`.
pub fn total_loss(
    problem: &PdeProblem,
    net: &Network,
    params: &[f64],
    colloc: &CollocationSet,
    weights: LossWeights,
) -> Result<f64, PhysicsError> {
    Ok(PhysicsLoss::new(problem, net, colloc, weights)?.evaluate(params)?.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkSpec;
    use crate::pdelib::catalog_get;
    use crate::symnet::Grammar;

    fn counts(i: usize, c: usize, b: usize) -> CollocationCounts {
        CollocationCounts { interior: i, initial: c, boundary: b }
    }

    #[test]
    fn kovasznay_default_counts() {
        let p = catalog_get("kovasznay", Some(475.0)).unwrap();
        let set = CollocationSet::sample(&p, counts(2601, 0, 320), Sampling::Grid, 0);
        assert_eq!(set.interior.len(), 2601);
        assert_eq!(set.bc.len(), 320);
        assert!(set.idc.is_empty() && set.inc.is_empty());
        set.validate(&p).unwrap();
        let r = CollocationSet::sample(&p, counts(100, 0, 320), Sampling::Random, 3);
        r.validate(&p).unwrap();
        assert_eq!(r.bc.len(), 320);
    }

    #[test]
    fn telegraph_counts_and_surfaces() {
        let p = catalog_get("telegraph1", Some(1.0)).unwrap();
        let set = CollocationSet::sample(&p, counts(2601, 40, 40), Sampling::Random, 1);
        assert_eq!((set.interior.len(), set.idc.len(), set.inc.len(), set.bc.len()), (2601, 40, 40, 40));
        set.validate(&p).unwrap();
        assert!(set.idc.iter().all(|t| t.point[1] == 0.0));
    }

    #[test]
    fn burgers_times_are_slices() {
        let p = catalog_get("burgers2d-coupled", Some(5e-3)).unwrap();
        let set = CollocationSet::sample(&p, counts(200, 50, 80), Sampling::Random, 2);
        set.validate(&p).unwrap();
        for pt in &set.interior {
            assert!(((pt[2] * 10.0).round() - pt[2] * 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn undeclared_condition_rejected() {
        let p = catalog_get("fp1", None).unwrap();
        let mut set = CollocationSet::sample(&p, counts(10, 10, 10), Sampling::Random, 0);
        assert!(set.bc.is_empty() && set.inc.is_empty());
        set.bc.push(Target { point: vec![0.0, 0.5], values: vec![0.5] });
        assert!(matches!(set.validate(&p), Err(PhysicsError::BadPoint { term: Term::Bc, .. })));
    }

    #[test]
    fn single_point_residual_squared_and_weight_linearity() {
        let p = catalog_get("fp1", None).unwrap();
        let g = Grammar::new(&p.vars).unwrap();
        let (net, _) = Network::build(&NetworkSpec::pisn(2), &g, &p.outputs, 0, "").unwrap();
        let params: Vec<f64> = (0..net.param_count()).map(|k| 0.01 * ((k * 7 % 13) as f64 - 6.0)).collect();
        let pt = vec![0.3, 0.6];
        let set = CollocationSet { interior: vec![pt.clone()], ..Default::default() };
        let jets = net.eval_point(&params, &pt);
        let r = physics_residual(&p, &jets, &pt).unwrap()[0];
        let l = total_loss(&p, &net, &params, &set, LossWeights::default()).unwrap();
        assert!((l - r * r).abs() <= 1e-15 * (1.0 + l));
        let w2 = LossWeights { physics: 2.0, ..Default::default() };
        assert_eq!(total_loss(&p, &net, &params, &set, w2).unwrap(), 2.0 * l);
    }

    #[test]
    fn input_mismatch_rejected() {
        let p = catalog_get("kovasznay", Some(200.0)).unwrap();
        let g = Grammar::new(&[crate::symnet::Var::X, crate::symnet::Var::Y, crate::symnet::Var::T]).unwrap();
        let (net, _) = Network::build(&NetworkSpec::pisn(1), &g, &p.outputs, 0, "").unwrap();
        let set = CollocationSet::default();
        assert!(matches!(PhysicsLoss::new(&p, &net, &set, LossWeights::default()), Err(PhysicsError::Inputs { .. })));
    }

    #[test]
    fn nan_names_term_and_point() {
        let p = catalog_get("heat", None).unwrap();
        let g = Grammar::new(&p.vars).unwrap();
        let (net, _) = Network::build(&NetworkSpec::pisn(1), &g, &p.outputs, 0, "").unwrap();
        let set = CollocationSet::sample(&p, counts(5, 3, 4), Sampling::Random, 0);
        let mut params = vec![0.0; net.param_count()];
        params[0] = f64::NAN;
        let loss = PhysicsLoss::new(&p, &net, &set, LossWeights::default()).unwrap();
        assert_eq!(loss.evaluate(&params), Err(PhysicsError::NonFinite { term: Term::Physics, index: 0 }));
        let mut grad = vec![0.0; params.len()];
        assert!(matches!(loss.evaluate_with_grad(&params, &mut grad), Err(PhysicsError::NonFinite { .. })));
    }

    #[test]
    fn breakdown_matches_separate_terms_and_grad_path() {
        let p = catalog_get("telegraph2", Some(1.0)).unwrap();
        let g = Grammar::new(&p.vars).unwrap();
        let (net, _) = Network::build(&NetworkSpec::pinsn(2, vec![5, 5]), &g, &p.outputs, 0, "").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = net.init_values(&mut rng);
        let set = CollocationSet::sample(&p, counts(70, 10, 10), Sampling::Random, 4);
        let loss = PhysicsLoss::new(&p, &net, &set, LossWeights::default()).unwrap();
        let b = loss.evaluate(&params).unwrap();
        let sep: f64 = TERMS.iter().map(|&t| loss.term(t, &params).unwrap()).sum();
        assert!((b.total() - sep).abs() <= 1e-12 * b.total().max(1.0));
        let mut grad = vec![0.0; params.len()];
        let bg = loss.evaluate_with_grad(&params, &mut grad).unwrap();
        assert!((bg.total() - b.total()).abs() <= 1e-12 * b.total().max(1.0));
    }

    #[test]
    fn frozen_pinsn_has_no_symbolic_gradient() {
        let p = catalog_get("heat", None).unwrap();
        let g = Grammar::new(&p.vars).unwrap();
        let (net, _) = Network::build(&NetworkSpec::pinsn(1, vec![4]), &g, &p.outputs, 0, "").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut params = net.init_values(&mut rng);
        for v in &mut params[net.mlp_range()] {
            *v += 0.1;
        }
        let set = CollocationSet::sample(&p, counts(20, 5, 6), Sampling::Random, 4);
        let mut loss = PhysicsLoss::new(&p, &net, &set, LossWeights::default()).unwrap();
        let mut full = vec![0.0; params.len()];
        let lf = loss.evaluate_with_grad(&params, &mut full).unwrap().total();
        loss.freeze_symbolic(&params).unwrap();
        let mut frozen = vec![0.0; params.len()];
        let lz = loss.evaluate_with_grad(&params, &mut frozen).unwrap().total();
        assert!((lf - lz).abs() <= 1e-12 * lf.max(1.0));
        assert!(frozen[net.symbolic_range()].iter().all(|&v| v == 0.0));
        for k in net.mlp_range() {
            assert!((frozen[k] - full[k]).abs() <= 1e-10 * (1.0 + full[k].abs()));
        }
    }
}
