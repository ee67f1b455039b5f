use super::jet::{Jet, Slot};

/// The closed set of primitives every network and residual operator is
/// written against.
///
/// Two implementations exist: [`Eval`] computes jets immediately, and
/// [`Tape`](super::Tape) records the same operations for a reverse sweep.
/// Anything outside this set cannot be expressed, so an unsupported
/// primitive is a compile error rather than an evaluation-time failure.
pub trait JetAlgebra {
    type Value: Copy;

    /// Introduces a jet with no parameter dependence (inputs, constants,
    /// cached outputs of frozen networks).
    fn lift(&mut self, jet: Jet) -> Self::Value;

    fn constant(&mut self, c: f64) -> Self::Value {
        self.lift(Jet::constant(c))
    }

    fn add(&mut self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn sub(&mut self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn mul(&mut self, a: Self::Value, b: Self::Value) -> Self::Value;
    /// `scale * a + shift`.
    fn affine(&mut self, a: Self::Value, scale: f64, shift: f64) -> Self::Value;
    fn sin(&mut self, a: Self::Value) -> Self::Value;
    fn exp(&mut self, a: Self::Value) -> Self::Value;
    fn tanh(&mut self, a: Self::Value) -> Self::Value;

    /// `Σ params[weights + k] * inputs[k] (+ params[bias])`.
    fn dot(
        &mut self,
        params: &[f64],
        weights: usize,
        inputs: &[Self::Value],
        bias: Option<usize>,
    ) -> Self::Value;

    /// Extracts one derivative slot of `a` as a derivative-free value.
    fn slot(&mut self, a: Self::Value, slot: Slot) -> Self::Value;

    /// Current jet of `a`.
    fn jet(&self, a: Self::Value) -> Jet;

    fn square(&mut self, a: Self::Value) -> Self::Value {
        self.mul(a, a)
    }

    fn scale(&mut self, a: Self::Value, s: f64) -> Self::Value {
        self.affine(a, s, 0.0)
    }

    fn sum(&mut self, terms: &[Self::Value]) -> Self::Value {
        match terms.split_first() {
            None => self.constant(0.0),
            Some((&first, rest)) => rest.iter().fold(first, |acc, &t| self.add(acc, t)),
        }
    }
}

/// Immediate forward-mode evaluation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Eval;

impl JetAlgebra for Eval {
    type Value = Jet;

    #[inline]
    fn lift(&mut self, jet: Jet) -> Jet {
        jet
    }

    #[inline]
    fn add(&mut self, a: Jet, b: Jet) -> Jet {
        a + b
    }

    #[inline]
    fn sub(&mut self, a: Jet, b: Jet) -> Jet {
        a - b
    }

    #[inline]
    fn mul(&mut self, a: Jet, b: Jet) -> Jet {
        a * b
    }

    #[inline]
    fn affine(&mut self, a: Jet, scale: f64, shift: f64) -> Jet {
        a.scale(scale) + shift
    }

    fn sin(&mut self, a: Jet) -> Jet {
        a.sin()
    }

    fn exp(&mut self, a: Jet) -> Jet {
        a.exp()
    }

    fn tanh(&mut self, a: Jet) -> Jet {
        a.tanh()
    }

    fn dot(&mut self, params: &[f64], weights: usize, inputs: &[Jet], bias: Option<usize>) -> Jet {
        let mut acc = Jet::constant(bias.map_or(0.0, |b| params[b]));
        for (w, h) in params[weights..weights + inputs.len()].iter().zip(inputs) {
            acc.axpy(*w, h);
        }
        acc
    }

    fn slot(&mut self, a: Jet, slot: Slot) -> Jet {
        Jet::constant(a.get(slot))
    }

    fn jet(&self, a: Jet) -> Jet {
        a
    }
}

/// Evaluates `f` on jets seeded at `point` (one variable per coordinate).
///
/// ```
/// use pisn::autodiff::{jet_eval, JetAlgebra};
/// let j = jet_eval(&[0.0], |alg, v| {
///     let two_x = alg.scale(v[0], 2.0);
///     alg.exp(two_x)
/// });
/// assert_eq!((j.value(), j.first(0), j.second(0, 0)), (1.0, 2.0, 4.0));
/// ```
pub fn jet_eval<F>(point: &[f64], f: F) -> Jet
where
    F: FnOnce(&mut Eval, &[Jet]) -> Jet,
{
    let vars = Jet::seed(point);
    f(&mut Eval, &vars)
}
