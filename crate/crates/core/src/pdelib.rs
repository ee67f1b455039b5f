//! Benchmark PDEs with exact solutions, condition data and error metrics.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Jet, JetAlgebra, Slot};
use crate::network::Network;
use crate::symnet::Var;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("unknown problem {0:?} (expected one of {names})", names = NAMES.join(", "))]
    Unknown(String),
    #[error("problem {problem} needs task parameter {param} in [{lo}, {hi}]")]
    MissingParam { problem: &'static str, param: &'static str, lo: f64, hi: f64 },
    #[error("problem {0} takes no task parameter")]
    UnexpectedParam(&'static str),
    #[error("{param} = {value} is outside the valid range [{lo}, {hi}] for {problem}")]
    OutOfRange { problem: &'static str, param: &'static str, value: f64, lo: f64, hi: f64 },
}

/// Catalog names accepted by [`catalog_get`].
pub const NAMES: [&str; 10] = [
    "wave",
    "heat",
    "fp1",
    "fp2",
    "fp3",
    "kovasznay",
    "burgers2d-coupled",
    "burgers2d-conservation",
    "telegraph1",
    "telegraph2",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemKind {
    Wave,
    Heat,
    Fp1,
    Fp2,
    Fp3,
    Kovasznay,
    BurgersCoupled,
    BurgersConservation,
    Telegraph1,
    Telegraph2,
}

impl ProblemKind {
    pub fn from_name(name: &str) -> Result<ProblemKind, PdeError> {
        use ProblemKind::*;
        Ok(match name {
            "wave" => Wave,
            "heat" => Heat,
            "fp1" => Fp1,
            "fp2" => Fp2,
            "fp3" => Fp3,
            "kovasznay" => Kovasznay,
            "burgers2d-coupled" => BurgersCoupled,
            "burgers2d-conservation" => BurgersConservation,
            "telegraph1" => Telegraph1,
            "telegraph2" => Telegraph2,
            _ => return Err(PdeError::Unknown(name.to_string())),
        })
    }

    pub fn name(self) -> &'static str {
        use ProblemKind::*;
        match self {
            Wave => "wave",
            Heat => "heat",
            Fp1 => "fp1",
            Fp2 => "fp2",
            Fp3 => "fp3",
            Kovasznay => "kovasznay",
            BurgersCoupled => "burgers2d-coupled",
            BurgersConservation => "burgers2d-conservation",
            Telegraph1 => "telegraph1",
            Telegraph2 => "telegraph2",
        }
    }

    /// Task parameter name and valid range, if parameterized.
    pub fn task_range(self) -> Option<(&'static str, f64, f64)> {
        use ProblemKind::*;
        match self {
            Kovasznay => Some(("Re", 100.0, 1000.0)),
            BurgersCoupled => Some(("nu", 1e-3, 1e-2)),
            BurgersConservation => Some(("nu", 5e-3, 5e-2)),
            Telegraph1 => Some(("A", 0.5, 5.0)),
            Telegraph2 => Some(("A", 0.2, 3.2)),
            _ => None,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What to do with a task parameter outside the declared range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RangePolicy {
    Reject,
    /// Log a warning and build the problem anyway.
    Warn,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskParam {
    pub name: &'static str,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TaskParam {
    /// Affine map of the range onto `[-1, 1]`.
    pub fn normalized(&self) -> f64 {
        normalize(self.value, self.lo, self.hi)
    }
}

pub fn normalize(value: f64, lo: f64, hi: f64) -> f64 {
    2.0 * (value - lo) / (hi - lo) - 1.0
}

/// Which condition term a point belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    /// `u(x, 0) = f(x)`.
    InitialValue,
    /// `u_t(x, 0) = g(x)`.
    InitialRate,
    /// `u = h` on the spatial boundary.
    Boundary,
}

/// A face of the box domain: coordinate `var` fixed at its low or high end.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Face {
    pub var: usize,
    pub high: bool,
}

/// One benchmark problem. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct PdeProblem {
    pub kind: ProblemKind,
    /// Input variables in jet-seed order.
    pub vars: Vec<Var>,
    /// `[lo, hi]` per input variable.
    pub domain: Vec<(f64, f64)>,
    pub outputs: Vec<&'static str>,
    pub task: Option<TaskParam>,
    /// Discrete times used for sampling, when the problem is posed on slices.
    pub time_slices: Option<Vec<f64>>,
    /// Kovasznay eigenvalue, zero for other problems.
    lambda: f64,
}

/// Builds a catalog problem, rejecting out-of-range task parameters.
///
/// ```
/// let p = pisn::pdelib::catalog_get("telegraph1", Some(0.7)).unwrap();
/// assert_eq!(p.analytical_eval(&[0.0, 0.0]), vec![1.0]);
/// ```
pub fn catalog_get(name: &str, task_param: Option<f64>) -> Result<PdeProblem, PdeError> {
    catalog_get_with(name, task_param, RangePolicy::Reject)
}

pub fn catalog_get_with(name: &str, task_param: Option<f64>, policy: RangePolicy) -> Result<PdeProblem, PdeError> {
    let kind = ProblemKind::from_name(name)?;
    let task = match (kind.task_range(), task_param) {
        (None, None) => None,
        (None, Some(_)) => return Err(PdeError::UnexpectedParam(kind.name())),
        (Some((param, lo, hi)), None) => return Err(PdeError::MissingParam { problem: kind.name(), param, lo, hi }),
        (Some((param, lo, hi)), Some(value)) => {
            if !(lo..=hi).contains(&value) {
                let err = PdeError::OutOfRange { problem: kind.name(), param, value, lo, hi };
                match policy {
                    RangePolicy::Reject => return Err(err),
                    RangePolicy::Warn => log::warn!("{err}"),
                }
            }
            Some(TaskParam { name: param, value, lo, hi })
        }
    };
    use ProblemKind::*;
    let (vars, domain, outputs): (Vec<Var>, Vec<(f64, f64)>, Vec<&'static str>) = match kind {
        Wave | Heat => (vec![Var::X, Var::T], vec![(0.0, PI), (0.0, 1.0)], vec!["u"]),
        Fp1 | Fp2 | Fp3 | Telegraph1 | Telegraph2 => (vec![Var::X, Var::T], vec![(0.0, 1.0), (0.0, 1.0)], vec!["u"]),
        Kovasznay => (vec![Var::X, Var::Y], vec![(-0.5, 1.0), (-0.5, 1.5)], vec!["u", "v", "p"]),
        BurgersCoupled => (vec![Var::X, Var::Y, Var::T], vec![(0.0, 1.0); 3], vec!["u", "v"]),
        BurgersConservation => (vec![Var::X, Var::Y, Var::T], vec![(0.0, 1.0); 3], vec!["u"]),
    };
    let time_slices = matches!(kind, BurgersCoupled | BurgersConservation)
        .then(|| (0..=10).map(|k| k as f64 / 10.0).collect());
    let lambda = match (kind, task) {
        (Kovasznay, Some(t)) => kovasznay_lambda(t.value),
        _ => 0.0,
    };
    Ok(PdeProblem { kind, vars, domain, outputs, task, time_slices, lambda })
}

/// Eigenvalue of the Kovasznay flow for Reynolds number `re`.
pub fn kovasznay_lambda(re: f64) -> f64 {
    re / 2.0 - (re * re / 4.0 + 4.0 * PI * PI).sqrt()
}

impl PdeProblem {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn n_inputs(&self) -> usize {
        self.vars.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn n_equations(&self) -> usize {
        match self.kind {
            ProblemKind::Kovasznay => 3,
            ProblemKind::BurgersCoupled => 2,
            _ => 1,
        }
    }

    pub fn task_value(&self) -> Option<f64> {
        self.task.map(|t| t.value)
    }

    fn param(&self) -> f64 {
        self.task.map_or(0.0, |t| t.value)
    }

    /// Position of the time variable, if the problem is time dependent.
    pub fn time_index(&self) -> Option<usize> {
        self.vars.iter().position(|&v| v == Var::T)
    }

    /// Positions of the spatial variables.
    pub fn spatial_indices(&self) -> Vec<usize> {
        (0..self.vars.len()).filter(|&i| self.vars[i] != Var::T).collect()
    }

    /// Condition terms this problem declares.
    pub fn conditions(&self) -> Vec<Condition> {
        use ProblemKind::*;
        match self.kind {
            Wave | Telegraph1 | Telegraph2 => vec![Condition::InitialValue, Condition::InitialRate, Condition::Boundary],
            Heat | BurgersCoupled | BurgersConservation => vec![Condition::InitialValue, Condition::Boundary],
            Fp1 | Fp2 | Fp3 => vec![Condition::InitialValue],
            Kovasznay => vec![Condition::Boundary],
        }
    }

    pub fn has_condition(&self, c: Condition) -> bool {
        self.conditions().contains(&c)
    }

    /// Spatial boundary faces carrying boundary data.
    pub fn boundary_faces(&self) -> Vec<Face> {
        if !self.has_condition(Condition::Boundary) {
            return Vec::new();
        }
        self.spatial_indices()
            .into_iter()
            .flat_map(|var| [Face { var, high: false }, Face { var, high: true }])
            .collect()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.domain.len()
            && point.iter().zip(&self.domain).all(|(&p, &(lo, hi))| p >= lo && p <= hi)
    }

    /// Exact solution jets (value and derivatives up to second order) at
    /// `point`, one per output.
    pub fn exact_jets(&self, point: &[f64]) -> Vec<Jet> {
        use ProblemKind::*;
        let v = Jet::seed(point);
        let a = self.param();
        match self.kind {
            Wave => vec![v[0].sin() * v[1].sin()],
            Heat => vec![v[0].sin() * (-v[1]).exp()],
            Fp1 => vec![v[0] + v[1]],
            Fp2 => vec![v[0] * v[1].exp()],
            Fp3 => vec![(v[0] + 1.0) * v[1].exp()],
            Kovasznay => {
                let l = self.lambda;
                let e = (v[0] * l).exp();
                let arg = v[1] * (2.0 * PI);
                let u = 1.0 - e * arg.cos();
                let vv = e * arg.sin() * (l / (2.0 * PI));
                let p = (1.0 - (v[0] * (2.0 * l)).exp()) * 0.5;
                vec![u, vv, p]
            }
            BurgersCoupled => {
                let z = (v[0] * -4.0 + v[1] * 4.0 - v[2]) / (32.0 * a);
                let s = (z.exp() + 1.0).recip() * 0.25;
                vec![0.75 - s, s + 0.75]
            }
            BurgersConservation => {
                let z = (v[0] + v[1] - v[2]) / (2.0 * a);
                vec![(z.exp() + 1.0).recip()]
            }
            Telegraph1 => vec![(v[0] * a - v[1] * (a + 1.0)).exp()],
            Telegraph2 => vec![(v[0] * a).exp() + (v[1] * -a).exp()],
        }
    }

    /// Exact solution values at `point`, one per output.
    pub fn analytical_eval(&self, point: &[f64]) -> Vec<f64> {
        self.exact_jets(point).iter().map(Jet::value).collect()
    }

    /// Target of a condition term at `point`, one value per output.
    ///
    /// These are the stated condition functions (f, g, h), written out
    /// independently of the exact solution where the problem gives them.
    pub fn condition_target(&self, cond: Condition, point: &[f64]) -> Vec<f64> {
        use ProblemKind::*;
        let x = point[0];
        let a = self.param();
        match (self.kind, cond) {
            (Wave, Condition::InitialValue) => vec![0.0],
            (Wave, Condition::InitialRate) => vec![x.sin()],
            (Wave | Heat, Condition::Boundary) => vec![0.0],
            (Heat, Condition::InitialValue) => vec![x.sin()],
            (Fp1 | Fp2, Condition::InitialValue) => vec![x],
            (Fp3, Condition::InitialValue) => vec![x + 1.0],
            (Telegraph1, Condition::InitialValue) => vec![(a * x).exp()],
            (Telegraph1, Condition::InitialRate) => vec![-(a + 1.0) * (a * x).exp()],
            (Telegraph2, Condition::InitialValue) => vec![1.0 + (a * x).exp()],
            (Telegraph2, Condition::InitialRate) => vec![-a],
            (Kovasznay | BurgersCoupled | BurgersConservation | Telegraph1 | Telegraph2, _) => {
                self.analytical_eval(point)
            }
            (kind, cond) => panic!("{kind} declares no {cond:?} condition"),
        }
    }

    /// Governing-equation residuals given the output jets at `point`.
    ///
    /// Each residual is derivative-free (only its value is meaningful). The
    /// vector has one entry per governing equation.
    pub fn residual<A: JetAlgebra>(&self, alg: &mut A, outs: &[A::Value], point: &[f64]) -> Vec<A::Value> {
        use ProblemKind::*;
        let a = self.param();
        let d = |alg: &mut A, u: A::Value, s: Slot| alg.slot(u, s);
        let (x, t1) = (Slot::First(0), Slot::First(1));
        let (xx, yy) = (Slot::Second(0, 0), Slot::Second(1, 1));
        match self.kind {
            Wave | Heat | Fp1 | Fp2 | Fp3 | Telegraph1 | Telegraph2 => {
                let u = outs[0];
                let ux = d(alg, u, x);
                let uxx = d(alg, u, xx);
                let ut = d(alg, u, t1);
                let r = match self.kind {
                    Wave => {
                        let utt = d(alg, u, yy);
                        alg.sub(utt, uxx)
                    }
                    Heat => alg.sub(ut, uxx),
                    Fp1 => lincomb(alg, &[(1.0, ut), (-1.0, ux), (-1.0, uxx)]),
                    Fp2 | Fp3 => {
                        // u_t = p_x + q_xx with p = -u*c, q = u*c^2/2, c = x (+1)
                        let c = if self.kind == Fp2 { point[0] } else { point[0] + 1.0 };
                        lincomb(alg, &[(1.0, ut), (-c, ux), (-0.5 * c * c, uxx)])
                    }
                    _ => {
                        // u_xx = u_tt + 2k u_t + k^2 u
                        let k = if self.kind == Telegraph1 { 1.0 } else { a };
                        let utt = d(alg, u, yy);
                        let uv = d(alg, u, Slot::Value);
                        lincomb(alg, &[(1.0, uxx), (-1.0, utt), (-2.0 * k, ut), (-k * k, uv)])
                    }
                };
                vec![r]
            }
            Kovasznay => {
                let inv_re = 1.0 / a;
                let [u, v, p] = [outs[0], outs[1], outs[2]];
                let y = t1;
                let (uv, ux, uy, uxx, uyy) = (d(alg, u, Slot::Value), d(alg, u, x), d(alg, u, y), d(alg, u, xx), d(alg, u, yy));
                let (vv, vx, vy, vxx, vyy) = (d(alg, v, Slot::Value), d(alg, v, x), d(alg, v, y), d(alg, v, xx), d(alg, v, yy));
                let (px, py) = (d(alg, p, x), d(alg, p, y));
                let continuity = alg.add(ux, vy);
                let mom = |alg: &mut A, fx: A::Value, fy: A::Value, dp: A::Value, fxx: A::Value, fyy: A::Value| {
                    let a1 = alg.mul(uv, fx);
                    let a2 = alg.mul(vv, fy);
                    lincomb(alg, &[(1.0, a1), (1.0, a2), (1.0, dp), (-inv_re, fxx), (-inv_re, fyy)])
                };
                let mx = mom(alg, ux, uy, px, uxx, uyy);
                let my = mom(alg, vx, vy, py, vxx, vyy);
                vec![continuity, mx, my]
            }
            BurgersCoupled | BurgersConservation => {
                let (y, t) = (Slot::First(1), Slot::First(2));
                let u = outs[0];
                let v = if self.kind == BurgersCoupled { outs[1] } else { outs[0] };
                let uv = d(alg, u, Slot::Value);
                let vv = d(alg, v, Slot::Value);
                let eq = |alg: &mut A, f: A::Value| {
                    let (ft, fx, fy, fxx, fyy) = (d(alg, f, t), d(alg, f, x), d(alg, f, y), d(alg, f, xx), d(alg, f, yy));
                    let a1 = alg.mul(uv, fx);
                    let a2 = alg.mul(vv, fy);
                    lincomb(alg, &[(1.0, ft), (1.0, a1), (1.0, a2), (-a, fxx), (-a, fyy)])
                };
                let mut r = vec![eq(alg, u)];
                if self.kind == BurgersCoupled {
                    r.push(eq(alg, outs[1]));
                }
                r
            }
        }
    }

    /// Residuals of the exact solution at `point` (an oracle check).
    pub fn exact_residual(&self, point: &[f64]) -> Vec<f64> {
        let jets = self.exact_jets(point);
        self.residual(&mut crate::autodiff::Eval, &jets, point)
            .iter()
            .map(Jet::value)
            .collect()
    }

    /// Evaluation grid: `n` equispaced points per spatial axis, and either
    /// the problem's time slices or `n` points in time.
    pub fn grid(&self, n: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.vars.len())
            .map(|i| match (&self.time_slices, self.vars[i]) {
                (Some(ts), Var::T) => ts.clone(),
                _ => linspace(self.domain[i].0, self.domain[i].1, n),
            })
            .collect();
        cartesian(&axes)
    }
}

/// `Σ c_k v_k`.
pub fn lincomb<A: JetAlgebra>(alg: &mut A, terms: &[(f64, A::Value)]) -> A::Value {
    let mut acc: Option<A::Value> = None;
    for &(c, v) in terms {
        if c == 0.0 {
            continue;
        }
        let term = if c == 1.0 { v } else { alg.scale(v, c) };
        acc = Some(match acc {
            None => term,
            Some(a) => alg.add(a, term),
        });
    }
    acc.unwrap_or_else(|| alg.constant(0.0))
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Cartesian product, first axis varying slowest.
pub fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputError {
    pub output: String,
    pub mean: f64,
    pub max: f64,
}

/// Pointwise absolute error statistics against the exact solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub problem: String,
    pub task_param: Option<f64>,
    pub architecture: String,
    pub n_points: usize,
    pub outputs: Vec<OutputError>,
}

pub const ERROR_CSV_HEADER: &str = "problem,task_param,architecture,output,mean_err,max_err";

impl ErrorReport {
    /// Mean error averaged over outputs.
    pub fn mean(&self) -> f64 {
        self.outputs.iter().map(|o| o.mean).sum::<f64>() / self.outputs.len().max(1) as f64
    }

    pub fn max(&self) -> f64 {
        self.outputs.iter().map(|o| o.max).fold(0.0, f64::max)
    }

    pub fn csv_rows(&self) -> Vec<String> {
        let param = self.task_param.map(|v| v.to_string()).unwrap_or_default();
        self.outputs
            .iter()
            .map(|o| format!("{},{},{},{},{:e},{:e}", self.problem, param, self.architecture, o.output, o.mean, o.max))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(ERROR_CSV_HEADER);
        s.push('\n');
        for row in self.csv_rows() {
            s.push_str(&row);
            s.push('\n');
        }
        s
    }
}

/// Error statistics of an arbitrary predictor over `grid`.
pub fn evaluate_errors_with<F>(problem: &PdeProblem, architecture: &str, grid: &[Vec<f64>], predict: F) -> ErrorReport
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n_out = problem.n_outputs();
    let mut sum = vec![0.0; n_out];
    let mut max = vec![0.0f64; n_out];
    for p in grid {
        let exact = problem.analytical_eval(p);
        let pred = predict(p);
        for k in 0..n_out {
            let e = (pred[k] - exact[k]).abs();
            sum[k] += e;
            // NaN propagates so a broken run is never reported as accurate
            max[k] = if e.is_nan() { f64::NAN } else { max[k].max(e) };
        }
    }
    let n = grid.len().max(1) as f64;
    ErrorReport {
        problem: problem.name().to_string(),
        task_param: problem.task_value(),
        architecture: architecture.to_string(),
        n_points: grid.len(),
        outputs: (0..n_out)
            .map(|k| OutputError { output: problem.outputs[k].to_string(), mean: sum[k] / n, max: max[k] })
            .collect(),
    }
}

/// Error statistics of a network over `grid`.
pub fn evaluate_errors(problem: &PdeProblem, net: &Network, params: &[f64], grid: &[Vec<f64>]) -> ErrorReport {
    evaluate_errors_with(problem, net.kind().name(), grid, |p| net.eval_values(params, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params_for(kind: ProblemKind) -> Vec<Option<f64>> {
        match kind.task_range() {
            None => vec![None],
            Some((_, lo, hi)) => vec![Some(lo), Some(0.5 * (lo + hi)), Some(hi)],
        }
    }

    fn random_interior(p: &PdeProblem, rng: &mut ChaCha8Rng) -> Vec<f64> {
        p.domain.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect()
    }

    #[test]
    fn every_exact_solution_satisfies_its_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in NAMES {
            let kind = ProblemKind::from_name(name).unwrap();
            for tp in params_for(kind) {
                let p = catalog_get(name, tp).unwrap();
                for _ in 0..100 {
                    let pt = random_interior(&p, &mut rng);
                    let r = p.exact_residual(&pt);
                    assert_eq!(r.len(), p.n_equations());
                    for v in r {
                        assert!(v.abs() <= 1e-8, "{name} {tp:?} at {pt:?}: {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn conditions_agree_with_exact_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for name in NAMES {
            let kind = ProblemKind::from_name(name).unwrap();
            for tp in params_for(kind) {
                let p = catalog_get(name, tp).unwrap();
                for _ in 0..20 {
                    let mut pt = random_interior(&p, &mut rng);
                    if let Some(ti) = p.time_index() {
                        pt[ti] = p.domain[ti].0;
                        let jets = p.exact_jets(&pt);
                        if p.has_condition(Condition::InitialValue) {
                            let f = p.condition_target(Condition::InitialValue, &pt);
                            for (j, f) in jets.iter().zip(f) {
                                assert!((j.value() - f).abs() <= 1e-12, "{name} f");
                            }
                        }
                        if p.has_condition(Condition::InitialRate) {
                            let g = p.condition_target(Condition::InitialRate, &pt);
                            for (j, g) in jets.iter().zip(g) {
                                assert!((j.first(ti) - g).abs() <= 1e-12, "{name} g");
                            }
                        }
                    }
                    for face in p.boundary_faces() {
                        let mut q = random_interior(&p, &mut rng);
                        let (lo, hi) = p.domain[face.var];
                        q[face.var] = if face.high { hi } else { lo };
                        let h = p.condition_target(Condition::Boundary, &q);
                        for (e, h) in p.analytical_eval(&q).iter().zip(h) {
                            assert!((e - h).abs() <= 1e-12, "{name} h");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn catalog_examples() {
        let fp1 = catalog_get("fp1", None).unwrap();
        assert_eq!(fp1.analytical_eval(&[0.3, 0.2]), vec![0.5]);
        assert_eq!(fp1.condition_target(Condition::InitialValue, &[0.3, 0.0]), vec![0.3]);
        let b = catalog_get("burgers2d-coupled", Some(4.3e-3)).unwrap();
        let uv = b.analytical_eval(&[0.0, 0.0, 0.0]);
        assert_eq!(uv, vec![0.625, 0.875]);
        let heat = catalog_get("heat", None).unwrap();
        assert_eq!(heat.analytical_eval(&[PI / 2.0, 0.0]), vec![1.0]);
        let k = catalog_get("kovasznay", Some(475.0)).unwrap();
        let e = k.analytical_eval(&[0.0, 0.0]);
        assert_eq!((e[0], e[2]), (0.0, 0.0));
        assert_eq!(k.analytical_eval(&[0.0, 0.77])[2], 0.0);
    }

    #[test]
    fn coupled_burgers_sum_is_constant() {
        let b = catalog_get("burgers2d-coupled", Some(2.2e-3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let pt = random_interior(&b, &mut rng);
            let uv = b.analytical_eval(&pt);
            assert!((uv[0] + uv[1] - 1.5).abs() < 1e-15);
        }
    }

    #[test]
    fn task_range_enforced() {
        assert!(matches!(catalog_get("kovasznay", Some(50.0)), Err(PdeError::OutOfRange { lo, hi, .. }) if lo == 100.0 && hi == 1000.0));
        assert!(matches!(catalog_get("kovasznay", None), Err(PdeError::MissingParam { .. })));
        assert!(matches!(catalog_get("heat", Some(1.0)), Err(PdeError::UnexpectedParam(_))));
        assert!(matches!(catalog_get("poisson", None), Err(PdeError::Unknown(_))));
        let p = catalog_get_with("telegraph2", Some(0.1), RangePolicy::Warn).unwrap();
        assert_eq!(p.task_value(), Some(0.1));
    }

    #[test]
    fn heat_residual_of_polynomial() {
        let heat = catalog_get("heat", None).unwrap();
        let u = crate::autodiff::jet_eval(&[0.4, 0.3], |alg, v| alg.mul(v[0], v[0]));
        let r = heat.residual(&mut crate::autodiff::Eval, &[u], &[0.4, 0.3]);
        assert_eq!(r[0].value(), -2.0);
        let zero = heat.residual(&mut crate::autodiff::Eval, &[Jet::constant(0.0)], &[0.4, 0.3]);
        assert_eq!(zero[0].value(), 0.0);
    }

    #[test]
    fn error_report_offsets() {
        let heat = catalog_get("heat", None).unwrap();
        let grid = heat.grid(11);
        assert_eq!(grid.len(), 121);
        let exact = evaluate_errors_with(&heat, "oracle", &grid, |p| heat.analytical_eval(p));
        assert_eq!((exact.mean(), exact.max()), (0.0, 0.0));
        let off = evaluate_errors_with(&heat, "oracle", &grid, |p| vec![heat.analytical_eval(p)[0] + 1e-3]);
        assert!((off.mean() - 1e-3).abs() < 1e-15 && (off.max() - 1e-3).abs() < 1e-15);
        assert_eq!(off.csv_rows().len(), 1);
        let b = catalog_get("burgers2d-coupled", Some(5e-3)).unwrap();
        assert_eq!(b.grid(5).len(), 5 * 5 * 11);
    }
}
