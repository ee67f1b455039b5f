//! Second-order jets over up to three input variables.
//!
//! A [`Jet`] carries `f`, `∂f/∂x_i` and `∂²f/∂x_i∂x_j` at a point. The
//! Hessian is stored packed (upper triangle, column-major), so symmetry
//! holds by construction: `second(i, j)` and `second(j, i)` read the same
//! slot.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Maximum number of input variables a jet differentiates against.
pub const MAX_VARS: usize = 3;
/// Number of stored reals: value, 3 first partials, 6 packed second partials.
pub const JET_LEN: usize = 1 + MAX_VARS + MAX_VARS * (MAX_VARS + 1) / 2;

const FIRST: usize = 1;
const SECOND: usize = 1 + MAX_VARS;

/// Packed index of the `(i, j)` second partial, `i <= j`.
#[inline(always)]
pub(crate) const fn packed(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

/// `(i, j)` pairs in packed order.
pub(crate) const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2)];

/// A derivative slot of a jet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Value,
    First(usize),
    Second(usize, usize),
}

impl Slot {
    /// Flat index into [`Jet::components`].
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Slot::Value => 0,
            Slot::First(i) => FIRST + i,
            Slot::Second(i, j) => SECOND + packed(i, j),
        }
    }

    pub fn is_valid(self) -> bool {
        match self {
            Slot::Value => true,
            Slot::First(i) => i < MAX_VARS,
            Slot::Second(i, j) => i < MAX_VARS && j < MAX_VARS,
        }
    }
}

/// Value with first and second input derivatives.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; JET_LEN],
}

impl Default for Jet {
    fn default() -> Self {
        Jet::ZERO
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("value", &self.value())
            .field("first", &self.gradient())
            .field("second", &self.hessian())
            .finish()
    }
}

impl Jet {
    pub const ZERO: Jet = Jet { c: [0.0; JET_LEN] };

    /// A constant: every derivative is zero.
    #[inline]
    pub fn constant(value: f64) -> Jet {
        let mut c = [0.0; JET_LEN];
        c[0] = value;
        Jet { c }
    }

    /// The input variable `var` evaluated at `value`.
    ///
    /// # Panics
    /// If `var >= MAX_VARS`.
    #[inline]
    pub fn variable(value: f64, var: usize) -> Jet {
        assert!(var < MAX_VARS, "jet variable index {var} out of range");
        let mut c = [0.0; JET_LEN];
        c[0] = value;
        c[FIRST + var] = 1.0;
        Jet { c }
    }

    /// Seeds one jet per coordinate of `point`.
    pub fn seed(point: &[f64]) -> Vec<Jet> {
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(v, i))
            .collect()
    }

    #[inline]
    pub fn from_components(c: [f64; JET_LEN]) -> Jet {
        Jet { c }
    }

    #[inline]
    pub fn components(&self) -> &[f64; JET_LEN] {
        &self.c
    }

    #[inline]
    pub(crate) fn components_mut(&mut self) -> &mut [f64; JET_LEN] {
        &mut self.c
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    #[inline]
    pub fn first(&self, i: usize) -> f64 {
        self.c[FIRST + i]
    }

    #[inline]
    pub fn second(&self, i: usize, j: usize) -> f64 {
        self.c[SECOND + packed(i, j)]
    }

    #[inline]
    pub fn get(&self, slot: Slot) -> f64 {
        self.c[slot.index()]
    }

    pub fn gradient(&self) -> [f64; MAX_VARS] {
        [self.first(0), self.first(1), self.first(2)]
    }

    pub fn hessian(&self) -> [[f64; MAX_VARS]; MAX_VARS] {
        let mut h = [[0.0; MAX_VARS]; MAX_VARS];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.second(i, j);
            }
        }
        h
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value()`.
    #[inline]
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        let a = &self.c;
        let mut c = [0.0; JET_LEN];
        c[0] = f0;
        for i in 0..MAX_VARS {
            c[FIRST + i] = f1 * a[FIRST + i];
        }
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            c[SECOND + k] = f1 * a[SECOND + k] + f2 * a[FIRST + i] * a[FIRST + j];
        }
        Jet { c }
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.chain(e, e, e)
    }

    pub fn tanh(&self) -> Jet {
        let t = self.value().tanh();
        let d = 1.0 - t * t;
        self.chain(t, d, -2.0 * t * d)
    }

    pub fn recip(&self) -> Jet {
        let v = self.value();
        let r = 1.0 / v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn sqrt(&self) -> Jet {
        let s = self.value().sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    pub fn powi(&self, n: i32) -> Jet {
        let v = self.value();
        let nf = f64::from(n);
        self.chain(
            v.powi(n),
            nf * v.powi(n - 1),
            nf * (nf - 1.0) * v.powi(n - 2),
        )
    }

    /// `self + w * other`, component-wise.
    #[inline]
    pub fn axpy(&mut self, w: f64, other: &Jet) {
        for (a, b) in self.c.iter_mut().zip(other.c.iter()) {
            *a += w * b;
        }
    }

    /// Component-wise inner product, used for adjoint contractions.
    #[inline]
    pub fn contract(&self, other: &Jet) -> f64 {
        self.c.iter().zip(other.c.iter()).map(|(a, b)| a * b).sum()
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Jet {
        let mut c = self.c;
        for v in c.iter_mut() {
            *v *= s;
        }
        Jet { c }
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, rhs: Jet) -> Jet {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a += b;
        }
        self
    }
}

impl AddAssign for Jet {
    #[inline]
    fn add_assign(&mut self, rhs: Jet) {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a += b;
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(mut self, rhs: Jet) -> Jet {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a -= b;
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: Jet) -> Jet {
        let (a, b) = (&self.c, &rhs.c);
        let mut c = [0.0; JET_LEN];
        c[0] = a[0] * b[0];
        for i in 0..MAX_VARS {
            c[FIRST + i] = a[0] * b[FIRST + i] + b[0] * a[FIRST + i];
        }
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            c[SECOND + k] = a[0] * b[SECOND + k]
                + b[0] * a[SECOND + k]
                + a[FIRST + i] * b[FIRST + j]
                + a[FIRST + j] * b[FIRST + i];
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}
