//! Output files of a run and parameter sweeps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::train::{train, TrainOutcome};
use super::{HarnessError, TrainConfig};
use crate::pdelib::{PdeProblem, ERROR_CSV_HEADER};
use crate::symnet::{render_named, ExprNode};

/// log10 of a zero error.
pub const LOG_FLOOR: f64 = -16.0;

/// Column dump of predicted and exact values on `grid`, one row per point
/// and output: the coordinates, `output_id`, `predicted`, `exact`,
/// `abs_error`, `log10_abs_error`.
pub fn export_heatmap_grid<F>(problem: &PdeProblem, grid: &[Vec<f64>], predict: F) -> String
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut s = String::new();
    for v in &problem.vars {
        s.push_str(v.name());
        s.push(',');
    }
    s.push_str("output_id,predicted,exact,abs_error,log10_abs_error\n");
    for p in grid {
        let pred = predict(p);
        let exact = problem.analytical_eval(p);
        for (k, (a, b)) in pred.iter().zip(&exact).enumerate() {
            let e = (a - b).abs();
            let l = if e > 0.0 { e.log10().max(LOG_FLOOR) } else { LOG_FLOOR };
            for c in p {
                let _ = write!(s, "{c},");
            }
            let _ = writeln!(s, "{k},{a:e},{b:e},{e:e},{l}");
        }
    }
    s
}

#[derive(Serialize)]
struct NamedExpr<'a> {
    output: &'a str,
    text: String,
    expr: &'a ExprNode,
}

/// Writes every output of a finished run into `dir` and returns the paths.
pub fn write_outputs(outcome: &TrainOutcome, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: &[u8]| -> Result<(), HarnessError> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| HarnessError::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    let c = &outcome.config;

    let mut errors = format!("{ERROR_CSV_HEADER}\n");
    for r in &outcome.reports {
        for row in r.csv_rows() {
            errors.push_str(&row);
            errors.push('\n');
        }
    }
    put("errors.csv", errors.as_bytes())?;
    put("loss_trace.csv", outcome.trace.to_csv().as_bytes())?;
    if let Some(d) = &outcome.domain_csv {
        put("domain_errors.csv", d.as_bytes())?;
    }
    if !outcome.expressions.is_empty() {
        let text: Vec<String> = outcome.expressions.iter().map(|(o, e)| render_named(e, o, c.precision)).collect();
        put("expression.txt", (text.join("\n\n") + "\n").as_bytes())?;
        let named: Vec<NamedExpr> = outcome
            .expressions
            .iter()
            .zip(text)
            .map(|((o, e), t)| NamedExpr { output: o, text: t, expr: e })
            .collect();
        let json = serde_json::to_string_pretty(&named).expect("expressions serialize");
        put("expression.json", json.as_bytes())?;
    }
    let problem = c.problem_at(outcome.display_task())?;
    let grid = problem.grid(c.eval_grid);
    let heat = export_heatmap_grid(&problem, &grid, outcome.model.predictor(&outcome.params, &problem));
    put("heatmap_grid.csv", heat.as_bytes())?;
    put("checkpoint.bin", &outcome.checkpoint().to_bytes())?;
    Ok(written)
}

/// Config keys a sweep can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKey {
    TaskParam,
    Seed,
    Depth,
    Epochs,
    Lr,
}

impl SweepKey {
    pub fn parse(s: &str) -> Option<SweepKey> {
        Some(match s {
            "task_param" => SweepKey::TaskParam,
            "seed" => SweepKey::Seed,
            "depth" => SweepKey::Depth,
            "epochs" => SweepKey::Epochs,
            "lr" => SweepKey::Lr,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepKey::TaskParam => "task_param",
            SweepKey::Seed => "seed",
            SweepKey::Depth => "depth",
            SweepKey::Epochs => "epochs",
            SweepKey::Lr => "lr",
        }
    }

    /// `config` with this key set to `v`.
    pub fn apply(self, config: &TrainConfig, v: f64) -> Result<TrainConfig, HarnessError> {
        let mut c = config.clone();
        let whole = || {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(HarnessError::Config(format!("{} must be a non-negative integer, got {v}", self.name())))
            }
        };
        match self {
            SweepKey::TaskParam => c.task_param = Some(v),
            SweepKey::Seed => c.seed = whole()? as u64,
            SweepKey::Depth => c.depth = whole()?,
            SweepKey::Epochs => {
                let e = whole()?;
                c.schedule = c.schedule.rescaled(c.epochs, e);
                c.epochs = e;
            }
            SweepKey::Lr => c.schedule.lr = v,
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parses `key=range` or a bare range (which sweeps `task_param`).
///
/// A range is either `lo:hi:n` (n equispaced values, ends included) or a
/// comma-separated list.
pub fn parse_sweep(spec: &str) -> Result<(SweepKey, Vec<f64>), HarnessError> {
    let bad = |m: String| HarnessError::Config(m);
    let (key, range) = match spec.split_once('=') {
        Some((k, r)) => (SweepKey::parse(k.trim()).ok_or_else(|| bad(format!("unknown sweep key {k:?}")))?, r),
        None => (SweepKey::TaskParam, spec),
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("bad number {s:?} in sweep range")));
    let parts: Vec<&str> = range.split(':').collect();
    let values = match parts.as_slice() {
        [lo, hi, n] => {
            let n: usize = n.trim().parse().map_err(|_| bad(format!("bad count {n:?} in sweep range")))?;
            if n == 0 {
                return Err(bad("sweep needs at least one value".into()));
            }
            let (lo, hi) = (num(lo)?, num(hi)?);
            if n == 1 {
                vec![lo]
            } else {
                crate::pdelib::linspace(lo, hi, n)
            }
        }
        [list] => list.split(',').map(num).collect::<Result<_, _>>()?,
        _ => return Err(bad(format!("sweep range {range:?} is neither lo:hi:n nor a list"))),
    };
    Ok((key, values))
}

/// One finished sweep run.
#[derive(Debug)]
pub struct SweepRun {
    pub value: f64,
    pub dir: PathBuf,
    pub outcome: TrainOutcome,
}

/// Trains `config` once per value, writing each run under
/// `output_dir/<key>_<value>` and a combined `sweep.csv`.
pub fn sweep(config: &TrainConfig, key: SweepKey, values: &[f64]) -> Result<Vec<SweepRun>, HarnessError> {
    let mut runs = Vec::new();
    let mut table = format!("{},{ERROR_CSV_HEADER}\n", key.name());
    for &v in values {
        let c = key.apply(config, v)?;
        let dir = config.output_dir.join(format!("{}_{v}", key.name()));
        log::info!("sweep {} = {v}", key.name());
        let outcome = train(&c)?;
        write_outputs(&outcome, &dir)?;
        for row in outcome.final_report().csv_rows() {
            let _ = writeln!(table, "{v},{row}");
        }
        runs.push(SweepRun { value: v, dir, outcome });
    }
    std::fs::create_dir_all(&config.output_dir).map_err(|e| HarnessError::io(&config.output_dir, e))?;
    let path = config.output_dir.join("sweep.csv");
    std::fs::write(&path, table).map_err(|e| HarnessError::io(&path, e))?;
    Ok(runs)
}
