//! Nested differentiation: forward jets in the inputs, reverse accumulation
//! in the parameters.
//!
//! Networks are written once against [`JetAlgebra`]. Evaluating with
//! [`Eval`] gives output jets (`u`, `u_x`, `u_xx`, ...); recording on a
//! [`Tape`] gives the same jets plus a reverse sweep that differentiates a
//! scalar built from those jets with respect to every parameter.

mod algebra;
mod jet;
mod params;
mod tape;

pub use algebra::{jet_eval, Eval, JetAlgebra};
pub use jet::{Jet, Slot, JET_LEN, MAX_VARS};
pub use params::{ParamGradient, ParamLayout, ParamVector, Segment};
pub use tape::{Node, Tape, UnaryFn};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("non-finite value or adjoint at tape entry {entry} ({op})")]
    NonFinite { entry: usize, op: &'static str },
    #[error("loss is not finite: {0}")]
    NonFiniteLoss(f64),
    #[error("parameter layout error: {0}")]
    Layout(String),
}

/// Gradient of the scalar recorded by `record` with respect to `params`.
///
/// `record` receives a fresh tape and the parameter values and returns the
/// loss node. Returns the loss value alongside the gradient.
pub fn param_grad<F>(params: &ParamVector, record: F) -> Result<(f64, ParamGradient), AutodiffError>
where
    F: FnOnce(&mut Tape, &[f64]) -> Node,
{
    let mut tape = Tape::new();
    let loss = record(&mut tape, &params.values);
    let value = tape.value(loss).value();
    if !value.is_finite() {
        return Err(AutodiffError::NonFiniteLoss(value));
    }
    let mut grad = ParamVector::zeros(params.layout().clone());
    tape.backward(&params.values, &[(loss, 1.0)], &mut grad.values)?;
    Ok((value, grad))
}
