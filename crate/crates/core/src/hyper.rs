//! Hypernetworks: an MLP maps a scalar task parameter to the full weight
//! vector of a main network.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autodiff::{ParamLayout, ParamVector};
use crate::harness::trace::{optimize_monitored, LossTrace, Stage};
use crate::harness::{HarnessError, TrainConfig};
use crate::mlp::{Activations, Mlp, MlpError};
use crate::network::{ArchKind, Network, NetworkSpec};
use crate::pdelib::{normalize, PdeProblem};
use crate::physics::{CollocationSet, PhysicsLoss, TERMS};
use crate::symnet::Grammar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperError {
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error("task parameter {0} is not finite")]
    Lambda(f64),
    #[error("hypernetwork expects {want} weights, got {got}")]
    Layout { want: usize, got: usize },
}

/// One generator: an MLP from the normalized task parameter to a
/// contiguous slice of the main network's weights.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperHead {
    pub name: String,
    pub mlp: Mlp,
    /// Main-network weights this head produces.
    pub target: Range<usize>,
}

/// Hypernetwork(s) for one main network. A PINSN target gets two heads,
/// one for the symbolic part and one for the residual MLP, so they can be
/// trained in separate stages.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperNet {
    pub target: Network,
    pub target_layout: ParamLayout,
    pub heads: Vec<HyperHead>,
    /// Task range mapped onto `[-1, 1]`.
    pub task_range: (f64, f64),
}

impl HyperNet {
    pub fn new(target: Network, target_layout: ParamLayout, hidden: &[usize], task_range: (f64, f64)) -> Result<HyperNet, HyperError> {
        if target_layout.len() != target.param_count() {
            return Err(HyperError::Layout { want: target.param_count(), got: target_layout.len() });
        }
        let parts: Vec<(&str, Range<usize>)> = match target.kind() {
            ArchKind::Pinsn => vec![("pisn", target.symbolic_range()), ("res", target.mlp_range())],
            ArchKind::Pisn => vec![("pisn", target.param_range())],
            ArchKind::Pinn => vec![("pinn", target.param_range())],
        };
        let mut heads = Vec::new();
        let mut offset = 0;
        for (name, target) in parts {
            let mut sizes = vec![1];
            sizes.extend_from_slice(hidden);
            sizes.push(target.len());
            let mlp = Mlp::new(&sizes, offset)?;
            offset += mlp.param_count();
            heads.push(HyperHead { name: name.to_string(), mlp, target });
        }
        Ok(HyperNet { target, target_layout, heads, task_range })
    }

    pub fn param_count(&self) -> usize {
        self.heads.iter().map(|h| h.mlp.param_count()).sum()
    }

    pub fn head(&self, name: &str) -> Option<&HyperHead> {
        self.heads.iter().find(|h| h.name == name)
    }

    pub fn layout(&self) -> ParamLayout {
        let mut layout = ParamLayout::new();
        for h in &self.heads {
            layout.extend(&h.mlp.layout(&format!("hyper.{}.", h.name)));
        }
        layout
    }

    /// Hypernetwork weights for a fresh run.
    ///
    /// Hidden layers use the usual MLP initialization. The output layer is
    /// scaled by `output_scale`, and for heads that produce MLP weights its
    /// bias is set to a freshly initialized main network (with a zero last
    /// layer for a PINSN residual), so every generated MLP starts from a
    /// non-degenerate initialization.
    pub fn init_values<R: Rng>(&self, rng: &mut R, output_scale: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        let main = self.target.init_values(rng);
        for h in &self.heads {
            let mut v = h.mlp.init_values(rng);
            let (w, b) = h.mlp.layer_offsets(h.mlp.n_layers() - 1);
            let (w, b) = (w - h.mlp.offset(), b - h.mlp.offset());
            v[w..].iter_mut().for_each(|x| *x *= output_scale);
            if h.name != "pisn" {
                let base = self.target.param_range().start;
                let range = h.target.start - base..h.target.end - base;
                v[b..].copy_from_slice(&main[range]);
            }
            out.extend(v);
        }
        out
    }

    fn input(&self, lambda: f64) -> [f64; 1] {
        [normalize(lambda, self.task_range.0, self.task_range.1)]
    }

    /// Main-network weights for task parameter `lambda`.
    pub fn generate(&self, params: &[f64], lambda: f64) -> Vec<f64> {
        self.generate_with(params, lambda).0
    }

    /// Like [`HyperNet::generate`], keeping activations for
    /// [`HyperNet::backward`].
    pub fn generate_with(&self, params: &[f64], lambda: f64) -> (Vec<f64>, Vec<Activations>) {
        let x = self.input(lambda);
        let base = self.target.param_range().start;
        let mut theta = vec![0.0; self.target.param_count()];
        let mut acts = Vec::with_capacity(self.heads.len());
        for h in &self.heads {
            let a = h.mlp.forward_values(params, &x);
            theta[h.target.start - base..h.target.end - base].copy_from_slice(a.output());
            acts.push(a);
        }
        (theta, acts)
    }

    /// Pulls a main-network gradient back onto the weights of the heads
    /// named in `heads`, adding into `grad`.
    pub fn backward(&self, params: &[f64], acts: &[Activations], main_grad: &[f64], heads: &[&str], grad: &mut [f64]) {
        let base = self.target.param_range().start;
        for (h, a) in self.heads.iter().zip(acts) {
            if heads.contains(&h.name.as_str()) {
                let g = &main_grad[h.target.start - base..h.target.end - base];
                h.mlp.backward_values(params, a, g, grad);
            }
        }
    }

    /// Weight range of the named heads (they are stored in order).
    pub fn head_range(&self, names: &[&str]) -> Range<usize> {
        let sel: Vec<Range<usize>> = self.heads.iter().filter(|h| names.contains(&h.name.as_str())).map(|h| h.mlp.param_range()).collect();
        match (sel.first(), sel.last()) {
            (Some(a), Some(b)) => a.start..b.end,
            _ => 0..0,
        }
    }
}

/// A hypernetwork with its weights.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperNetParams {
    pub net: HyperNet,
    pub values: Vec<f64>,
}

/// Main-network weights for `lambda`, laid out like the target network.
pub fn hyper_forward(hyper: &HyperNetParams, lambda: f64) -> Result<ParamVector, HyperError> {
    if !lambda.is_finite() {
        return Err(HyperError::Lambda(lambda));
    }
    if hyper.values.len() != hyper.net.param_count() {
        return Err(HyperError::Layout { want: hyper.net.param_count(), got: hyper.values.len() });
    }
    let theta = hyper.net.generate(&hyper.values, lambda);
    ParamVector::from_values(hyper.net.target_layout.clone(), theta)
        .map_err(|_| HyperError::Layout { want: hyper.net.target_layout.len(), got: hyper.net.target.param_count() })
}

/// Result of hypernetwork training.
#[derive(Clone, Debug)]
pub struct HyperRun {
    pub hyper: HyperNet,
    pub values: Vec<f64>,
    pub trace: LossTrace,
    /// Weights after the first stage (before any residual training).
    pub stage1_values: Vec<f64>,
}

struct TaskData {
    lambda: f64,
    problem: PdeProblem,
    colloc: CollocationSet,
}

fn tasks(config: &TrainConfig, lambdas: &[f64], seed: u64) -> Result<Vec<TaskData>, HarnessError> {
    lambdas
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let problem = config.problem_at(Some(lambda))?;
            let colloc = CollocationSet::sample(&problem, config.collocation, config.sampling, seed.wrapping_add(k as u64));
            Ok(TaskData { lambda, problem, colloc })
        })
        .collect()
}

/// Builds the hypernetwork described by `config` (weights not included).
pub fn build(config: &TrainConfig) -> Result<HyperNet, HarnessError> {
    let h = config.hyper.as_ref().ok_or_else(|| HarnessError::Config("missing [hyper] section".into()))?;
    let problem = config.problem_at(Some(h.train_tasks[0]))?;
    let grammar = Grammar::new(&problem.vars).map_err(|e| HarnessError::Config(e.to_string()))?;
    let (target, layout) = Network::build(&config.network_spec(), &grammar, &problem.outputs, 0, "")
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let range = problem.kind.task_range().map(|(_, lo, hi)| (lo, hi)).expect("validated");
    HyperNet::new(target, layout, &h.hidden, range).map_err(|e| HarnessError::Config(e.to_string()))
}

/// Trains a hypernetwork over the configured train tasks.
///
/// Each epoch visits every train task and minimizes the mean physics
/// loss. The returned weights are the snapshot with the lowest mean loss
/// on the validation tasks (or the train tasks when none are given). For
/// a PINSN target the symbolic head is trained first, then frozen while
/// the residual head is trained.
pub fn hyper_train(config: &TrainConfig) -> Result<HyperRun, HarnessError> {
    config.validate()?;
    let hc = config.hyper.clone().expect("validated");
    let hyper = build(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut values = hyper.init_values(&mut rng, hc.output_scale);
    let train = tasks(config, &hc.train_tasks, config.seed.wrapping_add(1))?;
    let val = tasks(config, &hc.val_tasks, config.seed.wrapping_add(1_000))?;
    let mut columns = vec!["total"];
    columns.extend(TERMS.iter().map(|t| t.name()));
    let mut trace = LossTrace::new(&columns);

    let pinsn = hyper.target.kind() == ArchKind::Pinsn;
    // stage 1 trains against the symbolic part alone (a PISN with the same
    // weight positions)
    let stage1_target = if pinsn {
        let problem = &train[0].problem;
        let grammar = Grammar::new(&problem.vars).expect("validated");
        Network::build(&NetworkSpec::pisn(config.depth), &grammar, &problem.outputs, 0, "").expect("valid").0
    } else {
        hyper.target.clone()
    };
    let first_heads: Vec<&str> = if pinsn { vec!["pisn"] } else { vec![hyper.heads[0].name.as_str()] };
    run_stage(config, &hyper, &stage1_target, &train, &val, &first_heads, 1, config.epochs, &config.schedule, false, &mut values, &mut trace)?;
    let stage1_values = values.clone();

    if pinsn {
        let s2 = config.stage2.clone().expect("validated");
        log::info!("stage 2: residual hypernetwork, symbolic hypernetwork frozen");
        run_stage(config, &hyper, &hyper.target, &train, &val, &["res"], 2, s2.epochs, &s2.schedule, true, &mut values, &mut trace)?;
    }
    Ok(HyperRun { hyper, values, trace, stage1_values })
}

/// Trains a HyperPINSN: symbolic hypernetwork first, then the residual
/// hypernetwork with the symbolic one frozen.
pub fn hyperpinsn_train(config: &TrainConfig) -> Result<HyperRun, HarnessError> {
    if config.architecture != crate::harness::Architecture::HyperPinsn {
        return Err(HarnessError::Config("hyperpinsn_train needs architecture = \"hyper-pinsn\"".into()));
    }
    hyper_train(config)
}

#[allow(clippy::too_many_arguments)]
fn run_stage<'a>(
    config: &TrainConfig,
    hyper: &HyperNet,
    target: &'a Network,
    train: &'a [TaskData],
    val: &'a [TaskData],
    heads: &[&str],
    stage_id: u8,
    epochs: usize,
    schedule: &crate::harness::StepDecay,
    freeze_symbolic: bool,
    values: &mut [f64],
    trace: &mut LossTrace,
) -> Result<(), HarnessError> {
    let losses = |set: &'a [TaskData], values: &[f64]| -> Result<Vec<PhysicsLoss<'a>>, HarnessError> {
        set.iter()
            .map(|t| {
                let mut l = PhysicsLoss::new(&t.problem, target, &t.colloc, config.weights)?;
                if freeze_symbolic {
                    l.freeze_symbolic(&hyper.generate(values, t.lambda))?;
                }
                Ok(l)
            })
            .collect()
    };
    let train_losses = losses(train, values)?;
    let val_losses = losses(val, values)?;
    let n = train.len() as f64;
    let width = target.param_count();
    let objective = |p: &[f64], grad: &mut [f64]| -> Result<Vec<f64>, String> {
        let mut out = vec![0.0; 1 + TERMS.len()];
        let mut main_grad = vec![0.0; width];
        for (t, loss) in train.iter().zip(&train_losses) {
            let (theta, acts) = hyper.generate_with(p, t.lambda);
            main_grad.iter_mut().for_each(|g| *g = 0.0);
            let b = loss
                .evaluate_with_grad(&theta, &mut main_grad)
                .map_err(|e| format!("task {} = {}: {e}", t.problem.task.map_or("", |p| p.name), t.lambda))?;
            main_grad.iter_mut().for_each(|g| *g /= n);
            hyper.backward(p, &acts, &main_grad, heads, grad);
            out[0] += b.total() / n;
            for (k, term) in TERMS.iter().enumerate() {
                out[1 + k] += b.get(*term) / n;
            }
        }
        Ok(out)
    };
    let select = |p: &[f64]| -> f64 {
        let set = if val_losses.is_empty() { &train_losses } else { &val_losses };
        let tasks = if val.is_empty() { train } else { val };
        let sum: f64 = set
            .iter()
            .zip(tasks)
            .map(|(l, t)| l.evaluate(&hyper.generate(p, t.lambda)).map_or(f64::INFINITY, |b| b.total()))
            .sum();
        sum / set.len() as f64
    };
    let stage = Stage { id: stage_id, epochs, schedule, trainable: vec![hyper.head_range(heads)], log_every: epochs.div_ceil(10) };
    let every = config.hyper.as_ref().map_or(100, |h| h.val_every.max(1));
    let (best, _) = optimize_monitored(values, &stage, trace, objective, Some((every, select))).map_err(|s| HarnessError::Diverged {
        stage: stage_id,
        epoch: s.epoch,
        detail: s.detail,
        last_finite: values.to_vec(),
    })?;
    values.copy_from_slice(&best);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdelib::catalog_get;

    fn small(kind: NetworkSpec) -> HyperNet {
        let p = catalog_get("kovasznay", Some(300.0)).unwrap();
        let g = Grammar::new(&p.vars).unwrap();
        let (net, layout) = Network::build(&kind, &g, &p.outputs, 0, "").unwrap();
        HyperNet::new(net, layout, &[8, 8], (100.0, 1000.0)).unwrap()
    }

    #[test]
    fn output_length_matches_target() {
        for spec in [NetworkSpec::pisn(2), NetworkSpec::pinn(vec![5, 5]), NetworkSpec::pinsn(2, vec![5])] {
            let h = small(spec);
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let hp = HyperNetParams { values: h.init_values(&mut rng, 1e-2), net: h.clone() };
            let theta = hyper_forward(&hp, 475.0).unwrap();
            assert_eq!(theta.len(), h.target.param_count());
            theta.layout().validate().unwrap();
            assert_eq!(h.layout().len(), h.param_count());
        }
    }

    #[test]
    fn zero_hypernetwork_gives_zero_network() {
        let h = small(NetworkSpec::pisn(2));
        let hp = HyperNetParams { values: vec![0.0; h.param_count()], net: h.clone() };
        let theta = hyper_forward(&hp, 300.0).unwrap();
        assert!(theta.values.iter().all(|&v| v == 0.0));
        assert_eq!(h.target.eval_values(&theta.values, &[0.1, 0.2]), vec![0.0; 3]);
    }

    #[test]
    fn continuous_in_lambda() {
        let h = small(NetworkSpec::pisn(1));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = h.init_values(&mut rng, 1.0);
        let base = h.generate(&v, 500.0);
        let mut prev = f64::INFINITY;
        for k in 2..=6 {
            let eps = 10f64.powi(-k);
            let d: f64 = h.generate(&v, 500.0 + eps).iter().zip(&base).map(|(a, b)| (a - b).abs()).sum();
            assert!(d < prev, "eps {eps}: {d} >= {prev}");
            prev = d;
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let h = small(NetworkSpec::pinsn(1, vec![3]));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = h.init_values(&mut rng, 1.0);
        let w: Vec<f64> = (0..h.target.param_count()).map(|k| ((k * 37 % 11) as f64 - 5.0) / 5.0).collect();
        let f = |p: &[f64]| h.generate(p, 640.0).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let (_, acts) = h.generate_with(&v, 640.0);
        let mut g = vec![0.0; v.len()];
        h.backward(&v, &acts, &w, &["pisn", "res"], &mut g);
        for k in [0, 5, 40, v.len() / 2, v.len() - 1] {
            let mut a = v.clone();
            let mut b = v.clone();
            a[k] += 1e-6;
            b[k] -= 1e-6;
            let fd = (f(&a) - f(&b)) / 2e-6;
            assert!((fd - g[k]).abs() <= 1e-6 * (1.0 + fd.abs()), "{k}: {fd} vs {}", g[k]);
        }
    }
}
