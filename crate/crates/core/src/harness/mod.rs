//! Training driver: configuration, optimisation, checkpoints and outputs.

pub mod checkpoint;
pub mod config;
pub mod demo;
pub mod export;
pub mod optim;
pub mod trace;
pub mod train;

use std::path::Path;

use thiserror::Error;

use crate::pdelib::PdeError;
use crate::physics::PhysicsError;

pub use checkpoint::Checkpoint;
pub use config::{Architecture, DecompConfig, HyperConfig, InterfaceWeights, StageConfig, TrainConfig};
pub use optim::StepDecay;
pub use demo::{demo_extrapolation, DemoConfig, DemoFunction, ExtrapolationResult};
pub use export::{export_heatmap_grid, write_outputs};
pub use trace::{LossTrace, Stop};
pub use train::{train, Model, TrainOutcome};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("training diverged in stage {stage} at epoch {epoch}: {detail}")]
    Diverged { stage: u8, epoch: usize, detail: String, last_finite: Vec<f64> },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> HarnessError {
        HarnessError::Io { path: path.display().to_string(), source }
    }

    /// Process exit code: 2 for configuration problems, 3 for divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Pde(_) => 2,
            HarnessError::Diverged { .. } => 3,
            _ => 1,
        }
    }
}
