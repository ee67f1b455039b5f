use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::optim::{adam_step_ranges, AdamState, StepDecay};

/// Per-epoch loss record. The first value column is always the total.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub columns: Vec<String>,
    pub rows: Vec<TraceRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub stage: u8,
    pub epoch: usize,
    pub lr: f64,
    pub values: Vec<f64>,
}

impl LossTrace {
    pub fn new(columns: &[&str]) -> LossTrace {
        LossTrace { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn last_total(&self) -> Option<f64> {
        self.rows.last().map(|r| r.values[0])
    }

    /// Totals of one stage in epoch order.
    pub fn totals(&self, stage: u8) -> Vec<f64> {
        self.rows.iter().filter(|r| r.stage == stage).map(|r| r.values[0]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("stage,epoch,lr,{}\n", self.columns.join(","));
        for r in &self.rows {
            s.push_str(&format!("{},{},{:e}", r.stage, r.epoch, r.lr));
            for v in &r.values {
                s.push_str(&format!(",{v:e}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Why a run stopped early.
#[derive(Clone, Debug, PartialEq)]
pub struct Stop {
    pub epoch: usize,
    pub detail: String,
}

/// One optimization stage.
pub struct Stage<'a> {
    pub id: u8,
    pub epochs: usize,
    pub schedule: &'a StepDecay,
    /// Parameters updated by this stage; everything else stays bitwise fixed.
    pub trainable: Vec<Range<usize>>,
    /// Epochs between progress log lines (0 disables).
    pub log_every: usize,
}

/// Full-batch Adam over `params[stage.trainable]`.
///
/// `objective` adds the gradient into its second argument (zeroed before
/// each call) and returns the trace values, total first. Returns the
/// lowest-loss snapshot and its loss. Stops at the first non-finite loss or
/// gradient; `params` then holds the last finite state.
pub fn optimize<F>(params: &mut [f64], stage: &Stage, trace: &mut LossTrace, objective: F) -> Result<(Vec<f64>, f64), Stop>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<Vec<f64>, String>,
{
    optimize_monitored(params, stage, trace, objective, None::<(usize, fn(&[f64]) -> f64)>)
}

/// Like [`optimize`], but when `monitor` is given the snapshot is chosen
/// by the monitor's score, evaluated every `n` epochs and after the last
/// step, instead of by the training loss.
pub fn optimize_monitored<F, M>(
    params: &mut [f64],
    stage: &Stage,
    trace: &mut LossTrace,
    mut objective: F,
    mut monitor: Option<(usize, M)>,
) -> Result<(Vec<f64>, f64), Stop>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<Vec<f64>, String>,
    M: FnMut(&[f64]) -> f64,
{
    let mut state = AdamState::new(params.len());
    let mut grad = vec![0.0; params.len()];
    let mut best = (params.to_vec(), f64::INFINITY);
    for epoch in 0..stage.epochs {
        let lr = stage.schedule.lr_at(epoch);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let values = objective(params, &mut grad).map_err(|detail| Stop { epoch, detail })?;
        let total = values[0];
        if !total.is_finite() {
            return Err(Stop { epoch, detail: format!("loss is {total}") });
        }
        if stage.log_every > 0 && epoch % stage.log_every == 0 {
            log::info!("stage {} epoch {epoch}: loss {total:.6e} lr {lr:.1e}", stage.id);
        }
        trace.rows.push(TraceRow { stage: stage.id, epoch, lr, values });
        let score = match &mut monitor {
            None => Some(total),
            Some((n, m)) => (epoch % *n == 0).then(|| m(params)),
        };
        if let Some(score) = score.filter(|&s| s < best.1) {
            best.0.copy_from_slice(params);
            best.1 = score;
        }
        adam_step_ranges(params, &grad, &mut state, lr, &stage.trainable)
            .map_err(|e| Stop { epoch, detail: e.to_string() })?;
    }
    if let Some((_, m)) = &mut monitor {
        let score = m(params);
        if score < best.1 || !best.1.is_finite() {
            best.0.copy_from_slice(params);
            best.1 = score;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic_and_keeps_frozen_entries() {
        let sched = StepDecay { lr: 0.1, gamma: 0.5, milestones: vec![100] };
        let stage = Stage { id: 1, epochs: 300, schedule: &sched, trainable: vec![0..1], log_every: 0 };
        let mut p = vec![3.0, 7.0];
        let mut trace = LossTrace::new(&["total"]);
        let (best, loss) = optimize(&mut p, &stage, &mut trace, |p, g| {
            g[0] = 2.0 * (p[0] - 1.0);
            g[1] = 1.0;
            Ok(vec![(p[0] - 1.0).powi(2)])
        })
        .unwrap();
        assert!(loss < 1e-4 && (best[0] - 1.0).abs() < 1e-2);
        assert_eq!(p[1], 7.0);
        assert_eq!(trace.rows.len(), 300);
        let totals = trace.totals(1);
        assert!(loss <= totals.iter().cloned().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn stops_on_nan() {
        let sched = StepDecay { lr: 0.1, gamma: 0.5, milestones: vec![] };
        let stage = Stage { id: 1, epochs: 10, schedule: &sched, trainable: vec![0..1], log_every: 0 };
        let mut p = vec![0.0];
        let mut n = 0;
        let stop = optimize(&mut p, &stage, &mut LossTrace::new(&["total"]), |_, g| {
            n += 1;
            g[0] = 1.0;
            Ok(vec![if n == 4 { f64::NAN } else { 1.0 }])
        })
        .unwrap_err();
        assert_eq!(stop.epoch, 3);
        assert!(p[0].is_finite());
    }
}
