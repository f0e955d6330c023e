//! The scalar abstraction shared by the float baselines and the exact path.
//!
//! Experiment kernels are written once against [`Scalar`] and instantiated
//! per regime, so the float and exact trajectories run the same code.

use crate::exact::Rational;
use crate::float_emu::{round_to, Regime};
use num_traits::{One, Zero};
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const REGIME: Regime;

    /// Nearest value of this type (exact for [`Rational`]).
    fn from_rational(q: &Rational) -> Self;

    /// Nearest value of this type; panics on a non-finite input for the
    /// exact type.
    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    /// The exact value held, as a fraction. Panics on a non-finite value.
    fn to_rational(&self) -> Rational;
}

impl Scalar for f64 {
    const REGIME: Regime = Regime::Fp64;
    fn from_rational(q: &Rational) -> Self {
        q.to_f64()
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_rational(&self) -> Rational {
        Rational::from_f64_exact(*self).expect("finite value")
    }
}

/// Native `f32` arithmetic is IEEE single precision with one rounding per
/// operation, which is exactly the FP32 regime.
impl Scalar for f32 {
    const REGIME: Regime = Regime::Fp32;
    fn from_rational(q: &Rational) -> Self {
        let (p, (emin, emax)) = (24, (-126, 127));
        q.round_to_format(p, emin, emax).0 as f32
    }
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn to_rational(&self) -> Rational {
        Rational::from_f64_exact(*self as f64).expect("finite value")
    }
}

impl Scalar for Rational {
    const REGIME: Regime = Regime::Exact;
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
    fn from_f64(x: f64) -> Self {
        Rational::from_f64_exact(x).expect("finite value")
    }
    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
}

/// A bfloat16 value, stored widened in an `f64`. Every arithmetic result is
/// rounded back to bfloat16.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct Bf16(f64);

impl Bf16 {
    pub fn new(x: f64) -> Self {
        Bf16(round_to(x, Regime::Bf16))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Add for Bf16 {
    type Output = Bf16;
    fn add(self, rhs: Bf16) -> Bf16 {
        Bf16::new(self.0 + rhs.0)
    }
}

impl Sub for Bf16 {
    type Output = Bf16;
    fn sub(self, rhs: Bf16) -> Bf16 {
        Bf16::new(self.0 - rhs.0)
    }
}

impl Mul for Bf16 {
    type Output = Bf16;
    fn mul(self, rhs: Bf16) -> Bf16 {
        Bf16::new(self.0 * rhs.0)
    }
}

impl Neg for Bf16 {
    type Output = Bf16;
    fn neg(self) -> Bf16 {
        Bf16(-self.0)
    }
}

impl Zero for Bf16 {
    fn zero() -> Self {
        Bf16(0.0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
}

impl One for Bf16 {
    fn one() -> Self {
        Bf16(1.0)
    }
}

impl Scalar for Bf16 {
    const REGIME: Regime = Regime::Bf16;
    fn from_rational(q: &Rational) -> Self {
        Bf16(q.round_to_format(8, -126, 127).0)
    }
    fn from_f64(x: f64) -> Self {
        Bf16::new(x)
    }
    fn to_f64(&self) -> f64 {
        self.0
    }
    fn to_rational(&self) -> Rational {
        Rational::from_f64_exact(self.0).expect("finite value")
    }
}

/// Dot product accumulated left to right.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// `y = W x` for a row-major `n x n` matrix.
pub fn matvec<S: Scalar>(w: &[S], x: &[S]) -> Vec<S> {
    let n = x.len();
    assert_eq!(w.len(), n * n, "matrix is not square with the vector's length");
    w.chunks(n).map(|row| dot(row, x)).collect()
}

/// Sequential left-to-right sum.
pub fn sum_sequential<S: Scalar>(values: &[S]) -> S {
    values.iter().fold(S::zero(), |acc, v| acc + v.clone())
}

/// One step of the logistic map `r x (1 - x)`, evaluated as `(r x)(1 - x)`.
pub fn logistic_step<S: Scalar>(r: &S, x: &S) -> S {
    r.clone() * x.clone() * (S::one() - x.clone())
}

/// The map's derivative `r (1 - 2x)`.
pub fn logistic_derivative<S: Scalar>(r: &S, x: &S) -> S {
    let two = S::one() + S::one();
    r.clone() * (S::one() - two * x.clone())
}
