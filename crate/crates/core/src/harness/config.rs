use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::optim::StepDecay;
use super::HarnessError;
use crate::network::{ArchKind, NetworkSpec};
use crate::pdelib::{catalog_get_with, PdeProblem, ProblemKind, RangePolicy};
use crate::physics::{CollocationCounts, LossWeights, Sampling};

/// Architecture family of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    Pinn,
    Pisn,
    Pinsn,
    HyperPinn,
    HyperPisn,
    HyperPinsn,
    DecompPinn,
    DecompPisn,
    DecompPinsn,
}

impl Architecture {
    pub fn parse(s: &str) -> Option<Architecture> {
        serde::Deserialize::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s)).ok()
    }

    pub fn name(self) -> &'static str {
        use Architecture::*;
        match self {
            Pinn => "pinn",
            Pisn => "pisn",
            Pinsn => "pinsn",
            HyperPinn => "hyper-pinn",
            HyperPisn => "hyper-pisn",
            HyperPinsn => "hyper-pinsn",
            DecompPinn => "decomp-pinn",
            DecompPisn => "decomp-pisn",
            DecompPinsn => "decomp-pinsn",
        }
    }

    /// Main-network family.
    pub fn kind(self) -> ArchKind {
        use Architecture::*;
        match self {
            Pinn | HyperPinn | DecompPinn => ArchKind::Pinn,
            Pisn | HyperPisn | DecompPisn => ArchKind::Pisn,
            Pinsn | HyperPinsn | DecompPinsn => ArchKind::Pinsn,
        }
    }

    pub fn is_hyper(self) -> bool {
        matches!(self, Architecture::HyperPinn | Architecture::HyperPisn | Architecture::HyperPinsn)
    }

    pub fn is_decomp(self) -> bool {
        matches!(self, Architecture::DecompPinn | Architecture::DecompPisn | Architecture::DecompPinsn)
    }
}

/// A second optimization stage (PINSN residual training).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub epochs: usize,
    pub schedule: StepDecay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperConfig {
    pub hidden: Vec<usize>,
    pub train_tasks: Vec<f64>,
    /// Used only to pick the best snapshot.
    pub val_tasks: Vec<f64>,
    /// Evaluated after training, never seen during it.
    pub test_tasks: Vec<f64>,
    /// Factor applied to the initial output layer.
    pub output_scale: f64,
    /// Epochs between validation checks.
    pub val_every: usize,
}

impl Default for HyperConfig {
    fn default() -> Self {
        HyperConfig {
            hidden: vec![512, 512, 256, 256, 128],
            train_tasks: Vec::new(),
            val_tasks: Vec::new(),
            test_tasks: Vec::new(),
            output_scale: 1e-2,
            val_every: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterfaceWeights {
    pub value: f64,
    pub flux: f64,
    pub residual: f64,
}

impl Default for InterfaceWeights {
    fn default() -> Self {
        InterfaceWeights { value: 1.0, flux: 1.0, residual: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecompConfig {
    pub interface: InterfaceWeights,
    /// Points per interface face per time slice.
    pub interface_points: usize,
    /// Factor applied to every per-box residual-point budget.
    pub budget_scale: f64,
}

impl Default for DecompConfig {
    fn default() -> Self {
        DecompConfig { interface: InterfaceWeights::default(), interface_points: 50, budget_scale: 1.0 }
    }
}

/// One experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_param: Option<f64>,
    /// Accept task parameters outside the catalog range with a warning.
    #[serde(default)]
    pub allow_out_of_range: bool,
    pub architecture: Architecture,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    /// Output factor of the PINSN residual MLP.
    #[serde(default = "default_residual_scale")]
    pub residual_scale: f64,
    pub epochs: usize,
    pub schedule: StepDecay,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage2: Option<StageConfig>,
    pub collocation: CollocationCounts,
    #[serde(default = "default_sampling")]
    pub sampling: Sampling,
    #[serde(default)]
    pub weights: LossWeights,
    #[serde(default)]
    pub seed: u64,
    /// Independent initialisations (seeds `seed`, `seed + 1`, ...) of a
    /// single-network run; the one with the lowest training loss is kept.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Points per axis of the evaluation grid.
    #[serde(default = "default_eval_grid")]
    pub eval_grid: usize,
    /// Pruning threshold for expression extraction.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_precision")]
    pub precision: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper: Option<HyperConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomp: Option<DecompConfig>,
}

fn default_depth() -> usize {
    2
}
fn default_hidden() -> Vec<usize> {
    vec![20; 6]
}
fn default_residual_scale() -> f64 {
    1e-2
}
fn default_restarts() -> usize {
    1
}
fn default_sampling() -> Sampling {
    Sampling::Random
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_eval_grid() -> usize {
    101
}
fn default_threshold() -> f64 {
    1e-3
}
fn default_precision() -> usize {
    3
}

pub const FULL_EPOCHS: usize = 125_000;

/// Full-scale schedule of each family.
pub fn full_schedule(kind: ArchKind, hyper: bool) -> StepDecay {
    if hyper {
        return StepDecay { lr: 1e-4, gamma: 0.1, milestones: vec![50_000, 100_000] };
    }
    match kind {
        ArchKind::Pisn => StepDecay { lr: 1e-2, gamma: 0.1, milestones: vec![25_000, 50_000, 75_000, 100_000] },
        ArchKind::Pinn | ArchKind::Pinsn => StepDecay { lr: 1e-4, gamma: 0.1, milestones: vec![40_000, 80_000, 120_000] },
    }
}

/// Full-scale collocation counts.
pub fn full_collocation(problem: ProblemKind) -> CollocationCounts {
    match problem {
        ProblemKind::Kovasznay => CollocationCounts { interior: 2601, initial: 0, boundary: 320 },
        ProblemKind::Telegraph1 | ProblemKind::Telegraph2 => CollocationCounts { interior: 2601, initial: 40, boundary: 40 },
        _ => CollocationCounts { interior: 2601, initial: 100, boundary: 100 },
    }
}

/// Reynolds numbers of the Kovasznay train, validation and test tasks.
pub fn kovasznay_tasks() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let train = (0..10).map(|k| 100.0 + 100.0 * k as f64).collect();
    let val = vec![150.0, 350.0, 550.0, 650.0, 850.0];
    let test = vec![125.0, 375.0, 475.0, 725.0, 975.0];
    (train, val, test)
}

impl TrainConfig {
    /// Full-scale settings (125k epochs).
    pub fn full(problem: &str, task_param: Option<f64>, architecture: Architecture) -> Result<TrainConfig, HarnessError> {
        let kind = ProblemKind::from_name(problem)?;
        let base = full_schedule(architecture.kind(), architecture.is_hyper());
        let stage2 = (architecture.kind() == ArchKind::Pinsn).then(|| StageConfig {
            epochs: FULL_EPOCHS,
            schedule: full_schedule(ArchKind::Pinn, architecture.is_hyper()),
        });
        // a PINSN starts with its symbolic stage, trained on the symbolic schedule
        let schedule = if architecture.kind() == ArchKind::Pinsn && !architecture.is_hyper() {
            full_schedule(ArchKind::Pisn, false)
        } else {
            base
        };
        let hyper = architecture.is_hyper().then(|| {
            let mut h = HyperConfig::default();
            if kind == ProblemKind::Kovasznay {
                (h.train_tasks, h.val_tasks, h.test_tasks) = kovasznay_tasks();
            } else if let Some((_, lo, hi)) = kind.task_range() {
                h.train_tasks = (0..10).map(|k| lo + (hi - lo) * k as f64 / 9.0).collect();
            }
            h
        });
        Ok(TrainConfig {
            problem: problem.to_string(),
            task_param,
            allow_out_of_range: matches!(kind, ProblemKind::Telegraph1 | ProblemKind::Telegraph2),
            architecture,
            depth: 2,
            hidden: default_hidden(),
            residual_scale: default_residual_scale(),
            epochs: FULL_EPOCHS,
            schedule,
            stage2,
            collocation: full_collocation(kind),
            sampling: Sampling::Grid,
            weights: LossWeights::default(),
            seed: 0,
            restarts: 1,
            output_dir: default_output_dir(),
            eval_grid: 101,
            threshold: default_threshold(),
            precision: default_precision(),
            hyper,
            decomp: architecture.is_decomp().then(DecompConfig::default),
        })
    }

    /// Reduced settings for a single CPU core: `epochs` per stage, with
    /// milestones scaled proportionally and random collocation.
    pub fn desk(
        problem: &str,
        task_param: Option<f64>,
        architecture: Architecture,
        epochs: usize,
        interior: usize,
    ) -> Result<TrainConfig, HarnessError> {
        let mut c = TrainConfig::full(problem, task_param, architecture)?;
        c.schedule = c.schedule.rescaled(FULL_EPOCHS, epochs);
        if let Some(s) = &mut c.stage2 {
            s.schedule = s.schedule.rescaled(FULL_EPOCHS, epochs);
            s.epochs = epochs;
        }
        c.epochs = epochs;
        c.collocation.interior = interior;
        c.sampling = Sampling::Random;
        c.eval_grid = 51;
        if let Some(d) = &mut c.decomp {
            d.budget_scale = 0.1;
            d.interface_points = 10;
        }
        Ok(c)
    }

    pub fn from_toml(text: &str) -> Result<TrainConfig, HarnessError> {
        let c: TrainConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn problem(&self) -> Result<PdeProblem, HarnessError> {
        self.problem_at(self.task_param)
    }

    pub fn problem_at(&self, task_param: Option<f64>) -> Result<PdeProblem, HarnessError> {
        let policy = if self.allow_out_of_range { RangePolicy::Warn } else { RangePolicy::Reject };
        Ok(catalog_get_with(&self.problem, task_param, policy)?)
    }

    pub fn network_spec(&self) -> NetworkSpec {
        NetworkSpec {
            kind: self.architecture.kind(),
            depth: self.depth,
            hidden: self.hidden.clone(),
            residual_scale: self.residual_scale,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Config(m));
        let kind = ProblemKind::from_name(&self.problem)?;
        if self.epochs == 0 {
            return err("epochs must be positive".into());
        }
        self.schedule.validate(self.epochs).map_err(HarnessError::Config)?;
        if self.depth == 0 {
            return err("symbolic depth must be at least 1".into());
        }
        if self.architecture.kind() != ArchKind::Pisn && (self.hidden.is_empty() || self.hidden.contains(&0)) {
            return err("hidden layer widths must be nonzero".into());
        }
        match (&self.stage2, self.architecture.kind()) {
            (Some(s), ArchKind::Pinsn) => s.schedule.validate(s.epochs).map_err(HarnessError::Config)?,
            (None, ArchKind::Pinsn) => return err("pinsn runs need a [stage2] section".into()),
            _ => {}
        }
        self.weights.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if !(self.residual_scale > 0.0 && self.residual_scale.is_finite()) {
            return err(format!("residual_scale must be positive, got {}", self.residual_scale));
        }
        if self.restarts == 0 {
            return err("restarts must be at least 1".into());
        }
        if self.restarts > 1 && (self.architecture.is_hyper() || self.architecture.is_decomp()) {
            return err("restarts apply to single-network runs only".into());
        }
        if self.threshold.is_nan() || self.threshold < 0.0 {
            return err(format!("threshold must be >= 0, got {}", self.threshold));
        }
        if self.architecture.is_hyper() {
            let Some(h) = &self.hyper else {
                return err("hyper architectures need a [hyper] section".into());
            };
            if kind.task_range().is_none() {
                return err(format!("{} has no task parameter to condition on", self.problem));
            }
            if h.train_tasks.is_empty() {
                return err("hyper.train_tasks is empty".into());
            }
            for &t in h.train_tasks.iter().chain(&h.val_tasks).chain(&h.test_tasks) {
                self.problem_at(Some(t))?;
            }
        } else {
            self.problem()?;
        }
        if self.architecture.is_decomp() {
            if !matches!(kind, ProblemKind::BurgersCoupled | ProblemKind::BurgersConservation) {
                return err("domain decomposition is defined for the 2D Burgers problems".into());
            }
            let Some(d) = &self.decomp else {
                return err("decomp architectures need a [decomp] section".into());
            };
            if d.budget_scale.is_nan() || d.budget_scale <= 0.0 {
                return err("decomp.budget_scale must be positive".into());
            }
        }
        Ok(())
    }

    /// SHA-256 of the serialized config.
    pub fn hash(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        Sha256::digest(self.to_toml().as_bytes()).into()
    }
}
