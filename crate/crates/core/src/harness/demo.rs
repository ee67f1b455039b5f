//! How far a plain MLP fit carries outside its training interval.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::trace::{optimize, LossTrace, Stage};
use super::{HarnessError, StepDecay};
use crate::mlp::Mlp;
use crate::pdelib::linspace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemoFunction {
    Linear,
    Exp,
    Log,
    Sin,
}

impl DemoFunction {
    pub const ALL: [DemoFunction; 4] = [DemoFunction::Linear, DemoFunction::Exp, DemoFunction::Log, DemoFunction::Sin];

    pub fn parse(s: &str) -> Option<DemoFunction> {
        DemoFunction::ALL.into_iter().find(|f| f.name() == s)
    }

    pub fn name(self) -> &'static str {
        match self {
            DemoFunction::Linear => "linear",
            DemoFunction::Exp => "exp",
            DemoFunction::Log => "log",
            DemoFunction::Sin => "sin",
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            DemoFunction::Linear => x,
            DemoFunction::Exp => x.exp(),
            DemoFunction::Log => x.ln(),
            DemoFunction::Sin => x.sin(),
        }
    }

    /// Interval the network is fitted on.
    pub fn train_domain(self) -> (f64, f64) {
        match self {
            DemoFunction::Linear => (-1.0, 1.0),
            DemoFunction::Exp => (1.0, 3.0),
            DemoFunction::Log => (4.0, 8.0),
            DemoFunction::Sin => (-5.0 * PI / 8.0, 5.0 * PI / 8.0),
        }
    }

    /// Wider interval the fit is evaluated on.
    pub fn eval_domain(self) -> (f64, f64) {
        match self {
            DemoFunction::Linear => (-3.0, 3.0),
            DemoFunction::Exp => (0.0, 4.0),
            DemoFunction::Log => (2.0, 12.0),
            DemoFunction::Sin => (-2.0 * PI, 2.0 * PI),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoConfig {
    pub samples: usize,
    pub eval_points: usize,
    pub epochs: usize,
    pub schedule: StepDecay,
    pub seed: u64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            samples: 200,
            eval_points: 1001,
            epochs: 4000,
            schedule: StepDecay { lr: 1e-2, gamma: 0.1, milestones: vec![2000, 3000] },
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtrapolationResult {
    pub function: DemoFunction,
    pub rmse_inside: f64,
    pub rmse_outside: f64,
    /// `(x, true, predicted)` over the evaluation interval.
    pub rows: Vec<(f64, f64, f64)>,
}

impl ExtrapolationResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,true,predicted,inside\n");
        let (lo, hi) = self.function.train_domain();
        for &(x, t, p) in &self.rows {
            let _ = writeln!(s, "{x},{t:e},{p:e},{}", u8::from(x >= lo && x <= hi));
        }
        s
    }
}

/// Root-mean-square errors of `predict` inside and outside the training
/// interval of `f`.
pub fn extrapolation_errors<P: Fn(f64) -> f64>(f: DemoFunction, eval_points: usize, predict: P) -> ExtrapolationResult {
    let (lo, hi) = f.train_domain();
    let (a, b) = f.eval_domain();
    let rows: Vec<(f64, f64, f64)> = linspace(a, b, eval_points).into_iter().map(|x| (x, f.eval(x), predict(x))).collect();
    let rmse = |inside: bool| {
        let sq: Vec<f64> = rows
            .iter()
            .filter(|r| (r.0 >= lo && r.0 <= hi) == inside)
            .map(|r| (r.1 - r.2).powi(2))
            .collect();
        (sq.iter().sum::<f64>() / sq.len().max(1) as f64).sqrt()
    };
    ExtrapolationResult { function: f, rmse_inside: rmse(true), rmse_outside: rmse(false), rows }
}

/// Fits a 6x20 tanh MLP to `f` on its training interval by full-batch
/// Adam on the mean squared error, then evaluates on the wider interval.
pub fn demo_extrapolation(f: DemoFunction, config: &DemoConfig) -> Result<ExtrapolationResult, HarnessError> {
    let mlp = Mlp::uniform(1, 20, 6, 1, 0).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = mlp.init_values(&mut rng);
    let (lo, hi) = f.train_domain();
    let xs = linspace(lo, hi, config.samples);
    let ys: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
    let n = xs.len() as f64;
    let mut trace = LossTrace::new(&["mse"]);
    let stage = Stage {
        id: 1,
        epochs: config.epochs,
        schedule: &config.schedule,
        trainable: vec![0..params.len()],
        log_every: config.epochs.div_ceil(10),
    };
    let objective = |p: &[f64], grad: &mut [f64]| -> Result<Vec<f64>, String> {
        let mut loss = 0.0;
        for (&x, &y) in xs.iter().zip(&ys) {
            let acts = mlp.forward_values(p, &[x]);
            let r = acts.output()[0] - y;
            loss += r * r / n;
            mlp.backward_values(p, &acts, &[2.0 * r / n], grad);
        }
        Ok(vec![loss])
    };
    let (best, _) = optimize(&mut params, &stage, &mut trace, objective).map_err(|s| HarnessError::Diverged {
        stage: 1,
        epoch: s.epoch,
        detail: s.detail,
        last_finite: Vec::new(),
    })?;
    Ok(extrapolation_errors(f, config.eval_points, |x| mlp.forward_values(&best, &[x]).output()[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_model_has_zero_error() {
        for f in DemoFunction::ALL {
            let r = extrapolation_errors(f, 101, |x| f.eval(x));
            assert_eq!((r.rmse_inside, r.rmse_outside), (0.0, 0.0));
        }
    }

    #[test]
    fn sin_domains() {
        assert_eq!(DemoFunction::Sin.eval_domain(), (-2.0 * PI, 2.0 * PI));
        assert_eq!(DemoFunction::parse("log"), Some(DemoFunction::Log));
        let r = extrapolation_errors(DemoFunction::Sin, 11, |_| 0.0);
        assert_eq!(r.rows.len(), 11);
        assert_eq!(r.to_csv().lines().count(), 12);
    }
}
