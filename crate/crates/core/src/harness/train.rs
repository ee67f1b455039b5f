//! Experiment dispatch: builds the model a config describes, trains it and
//! collects error reports and expressions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::trace::{optimize, LossTrace, Stage};
use super::{Architecture, Checkpoint, HarnessError, TrainConfig};
use crate::autodiff::ParamLayout;
use crate::decomp::{decomp_train, domain_csv, standard_subdomains, DecompModel};
use crate::hyper::{self, HyperNet};
use crate::network::{ArchKind, Network, NetworkSpec};
use crate::pdelib::{evaluate_errors_with, ErrorReport, PdeProblem};
use crate::physics::{CollocationSet, PhysicsLoss, TERMS};
use crate::symnet::{ExprNode, Grammar};

/// A trainable model of any architecture.
#[derive(Clone, Debug)]
pub enum Model {
    Single(Network),
    Hyper(HyperNet),
    Decomposed(DecompModel),
}

impl Model {
    /// The model `config` describes, with its parameter layout.
    pub fn build(config: &TrainConfig) -> Result<(Model, ParamLayout), HarnessError> {
        if config.architecture.is_hyper() {
            let h = hyper::build(config)?;
            let layout = h.layout();
            return Ok((Model::Hyper(h), layout));
        }
        let problem = config.problem()?;
        if config.architecture.is_decomp() {
            let m = DecompModel::build(&problem, config.architecture.kind(), config.residual_scale, standard_subdomains())?;
            let layout = m.layout.clone();
            return Ok((Model::Decomposed(m), layout));
        }
        let grammar = Grammar::new(&problem.vars).map_err(|e| HarnessError::Config(e.to_string()))?;
        let (net, layout) = Network::build(&config.network_spec(), &grammar, &problem.outputs, 0, "")
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok((Model::Single(net), layout))
    }

    pub fn param_count(&self) -> usize {
        match self {
            Model::Single(n) => n.param_count(),
            Model::Hyper(h) => h.param_count(),
            Model::Decomposed(d) => d.param_count(),
        }
    }

    /// Output values at `point` for the task `problem` describes.
    pub fn predictor<'a>(&'a self, params: &'a [f64], problem: &PdeProblem) -> Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a> {
        match self {
            Model::Single(n) => Box::new(move |p| n.eval_values(params, p)),
            Model::Decomposed(d) => Box::new(move |p| d.predict(params, p)),
            Model::Hyper(h) => {
                let lambda = problem.task_value().expect("hypernetwork problems carry a task parameter");
                let theta = h.generate(params, lambda);
                Box::new(move |p| h.target.eval_values(&theta, p))
            }
        }
    }

    /// Error report on `grid` for the task `problem` describes.
    pub fn report(&self, params: &[f64], problem: &PdeProblem, grid: &[Vec<f64>], label: &str) -> ErrorReport {
        evaluate_errors_with(problem, label, grid, self.predictor(params, problem))
    }

    /// Named expressions of every symbolic part (empty for a plain MLP).
    /// A hypernetwork is expanded at `task`.
    pub fn expressions(&self, params: &[f64], outputs: &[&str], task: Option<f64>, threshold: f64) -> Vec<(String, ExprNode)> {
        let named = |net: &Network, p: &[f64], prefix: &str| -> Vec<(String, ExprNode)> {
            net.expressions(p, threshold)
                .into_iter()
                .zip(outputs)
                .map(|(e, o)| (format!("{prefix}{o}"), e))
                .collect()
        };
        match self {
            Model::Single(n) => named(n, params, ""),
            Model::Hyper(h) => match task {
                Some(t) => named(&h.target, &h.generate(params, t), ""),
                None => Vec::new(),
            },
            Model::Decomposed(d) => d
                .nets
                .iter()
                .zip(&d.specs)
                .flat_map(|(n, s)| named(n, params, &format!("d{}_", s.index)))
                .collect(),
        }
    }
}

/// Everything a finished run produces.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub config: TrainConfig,
    pub model: Model,
    pub params: Vec<f64>,
    pub layout: ParamLayout,
    pub trace: LossTrace,
    /// One report per evaluated model and task. The final model comes last
    /// for single networks.
    pub reports: Vec<ErrorReport>,
    pub expressions: Vec<(String, ExprNode)>,
    /// Per-subdomain error table of decomposed runs.
    pub domain_csv: Option<String>,
}

impl TrainOutcome {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(self.config.clone(), self.layout.clone(), self.params.clone())
    }

    /// Report of the final model (the last one for a single task).
    pub fn final_report(&self) -> &ErrorReport {
        self.reports.last().expect("every run reports")
    }

    /// Task used for heatmaps and expressions of a hypernetwork run.
    pub fn display_task(&self) -> Option<f64> {
        display_task(&self.config)
    }
}

fn display_task(config: &TrainConfig) -> Option<f64> {
    if let Some(t) = config.task_param {
        return Some(t);
    }
    let h = config.hyper.as_ref()?;
    h.test_tasks.first().or(h.val_tasks.first()).or(h.train_tasks.first()).copied()
}

/// Trains the experiment `config` describes.
///
/// Divergence aborts with [`HarnessError::Diverged`] carrying the last
/// finite weights.
pub fn train(config: &TrainConfig) -> Result<TrainOutcome, HarnessError> {
    config.validate()?;
    let (model, layout) = Model::build(config)?;
    log::info!(
        "training {} on {} ({} parameters, {} epochs)",
        config.architecture.name(),
        config.problem,
        model.param_count(),
        config.epochs
    );
    match model {
        Model::Single(net) => train_single(config, net, layout),
        Model::Hyper(_) => train_hyper(config, layout),
        Model::Decomposed(_) => train_decomp(config, layout),
    }
}

fn train_single(config: &TrainConfig, net: Network, layout: ParamLayout) -> Result<TrainOutcome, HarnessError> {
    let problem = config.problem()?;
    let colloc = CollocationSet::sample(&problem, config.collocation, config.sampling, config.seed.wrapping_add(1));
    let mut columns = vec!["total"];
    columns.extend(TERMS.iter().map(|t| t.name()));
    let grid = problem.grid(config.eval_grid);
    let mut reports = Vec::new();

    let pinsn = net.kind() == ArchKind::Pinsn;
    // the symbolic part of a PINSN sits first in its layout, so a
    // standalone PISN at offset 0 reads exactly those weights
    let grammar = Grammar::new(&problem.vars).map_err(|e| HarnessError::Config(e.to_string()))?;
    let pisn = if pinsn {
        let (p, _) = Network::build(&NetworkSpec::pisn(config.depth), &grammar, &problem.outputs, 0, "")
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        debug_assert_eq!(p.param_range(), net.symbolic_range());
        Some(p)
    } else {
        None
    };
    let (first, trainable) = match &pisn {
        Some(p) => (p, net.symbolic_range()),
        None => (&net, net.param_range()),
    };
    if pinsn {
        log::info!("stage 1: symbolic network");
    }
    let loss = PhysicsLoss::new(&problem, first, &colloc, config.weights)?;
    let mut best: Option<(f64, Vec<f64>, LossTrace)> = None;
    for r in 0..config.restarts as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r));
        let mut params = net.init_values(&mut rng);
        let mut trace = LossTrace::new(&columns);
        let score = run(&mut params, 1, config.epochs, &config.schedule, vec![trainable.clone()], &mut trace, &loss)?;
        if config.restarts > 1 {
            log::info!("restart {} of {}: best loss {score:e}", r + 1, config.restarts);
        }
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, params, trace));
        }
    }
    let (_, mut params, mut trace) = best.expect("at least one restart");

    if let Some(pisn) = &pisn {
        reports.push(evaluate_errors_with(&problem, "pisn (stage 1)", &grid, |p| pisn.eval_values(&params, p)));
        log::info!("stage 2: residual network, symbolic weights frozen");
        let s2 = config.stage2.clone().expect("validated");
        let mut loss = PhysicsLoss::new(&problem, &net, &colloc, config.weights)?;
        loss.freeze_symbolic(&params)?;
        run(&mut params, 2, s2.epochs, &s2.schedule, vec![net.mlp_range()], &mut trace, &loss)?;
    }
    reports.push(evaluate_errors_with(&problem, config.architecture.name(), &grid, |p| net.eval_values(&params, p)));
    let model = Model::Single(net);
    let expressions = model.expressions(&params, &problem.outputs, None, config.threshold);
    Ok(TrainOutcome { config: config.clone(), model, params, layout, trace, reports, expressions, domain_csv: None })
}

/// Runs one stage and returns its best loss.
fn run(
    params: &mut Vec<f64>,
    id: u8,
    epochs: usize,
    schedule: &super::StepDecay,
    trainable: Vec<std::ops::Range<usize>>,
    trace: &mut LossTrace,
    loss: &PhysicsLoss,
) -> Result<f64, HarnessError> {
    let stage = Stage { id, epochs, schedule, trainable, log_every: epochs.div_ceil(10) };
    let objective = |p: &[f64], grad: &mut [f64]| -> Result<Vec<f64>, String> {
        let b = loss.evaluate_with_grad(p, grad).map_err(|e| e.to_string())?;
        let mut out = vec![b.total()];
        out.extend(b.terms);
        Ok(out)
    };
    match optimize(params, &stage, trace, objective) {
        Ok((best, score)) => {
            *params = best;
            Ok(score)
        }
        Err(s) => Err(HarnessError::Diverged { stage: id, epoch: s.epoch, detail: s.detail, last_finite: params.clone() }),
    }
}

fn train_hyper(config: &TrainConfig, layout: ParamLayout) -> Result<TrainOutcome, HarnessError> {
    let run = hyper::hyper_train(config)?;
    let h = config.hyper.clone().expect("validated");
    let grid = config.problem_at(Some(h.train_tasks[0]))?.grid(config.eval_grid);
    let model = Model::Hyper(run.hyper);
    let mut reports = Vec::new();
    for (split, tasks) in [("train", &h.train_tasks), ("val", &h.val_tasks), ("test", &h.test_tasks)] {
        for &t in tasks {
            let problem = config.problem_at(Some(t))?;
            reports.push(model.report(&run.values, &problem, &grid, &format!("{}:{split}", config.architecture.name())));
        }
    }
    let outputs = config.problem_at(Some(h.train_tasks[0]))?.outputs;
    let expressions = model.expressions(&run.values, &outputs, display_task(config), config.threshold);
    Ok(TrainOutcome { config: config.clone(), model, params: run.values, layout, trace: run.trace, reports, expressions, domain_csv: None })
}

fn train_decomp(config: &TrainConfig, layout: ParamLayout) -> Result<TrainOutcome, HarnessError> {
    let problem = config.problem()?;
    let run = decomp_train(&problem, standard_subdomains(), config)?;
    let csv = domain_csv(&run.model.specs, &run.domain_reports);
    let model = Model::Decomposed(run.model);
    let expressions = model.expressions(&run.values, &problem.outputs, None, config.threshold);
    Ok(TrainOutcome {
        config: config.clone(),
        model,
        params: run.values,
        layout,
        trace: run.trace,
        reports: vec![run.report],
        expressions,
        domain_csv: Some(csv),
    })
}

/// Rebuilds the model stored in a checkpoint.
pub fn load(checkpoint: &Checkpoint) -> Result<Model, HarnessError> {
    let (model, layout) = Model::build(&checkpoint.config)?;
    if layout != checkpoint.layout {
        return Err(HarnessError::Checkpoint("stored layout does not match the stored config".into()));
    }
    Ok(model)
}

/// Error report of a checkpoint on `problem` (task parameter optional;
/// the stored one is used when absent).
pub fn eval(checkpoint: &Checkpoint, problem: &str, task_param: Option<f64>) -> Result<ErrorReport, HarnessError> {
    let model = load(checkpoint)?;
    let mut config = checkpoint.config.clone();
    config.problem = problem.to_string();
    if task_param.is_some() {
        config.task_param = task_param;
    }
    let task = config.task_param.or_else(|| display_task(&config));
    let p = config.problem_at(task)?;
    let out = p.n_outputs();
    let want = checkpoint.config.problem_at(display_task(&checkpoint.config))?;
    if p.n_inputs() != want.n_inputs() || out != want.n_outputs() {
        return Err(HarnessError::Config(format!(
            "checkpoint was trained on {} ({} inputs, {} outputs), {} has {} inputs and {} outputs",
            want.name(),
            want.n_inputs(),
            want.n_outputs(),
            p.name(),
            p.n_inputs(),
            out
        )));
    }
    let grid = p.grid(config.eval_grid);
    Ok(model.report(&checkpoint.values, &p, &grid, checkpoint.config.architecture.name()))
}

/// Named expressions stored in a checkpoint.
pub fn extract(checkpoint: &Checkpoint, task: Option<f64>, threshold: f64) -> Result<Vec<(String, ExprNode)>, HarnessError> {
    let model = load(checkpoint)?;
    let c = &checkpoint.config;
    let task = task.or_else(|| display_task(c));
    let outputs = c.problem_at(task)?.outputs;
    if matches!(c.architecture, Architecture::Pinn | Architecture::HyperPinn | Architecture::DecompPinn) {
        return Err(HarnessError::Config(format!("{} has no symbolic part to extract", c.architecture.name())));
    }
    Ok(model.expressions(&checkpoint.values, &outputs, task, threshold))
}
