//! Exact fractions with lazy reduction and bit-width accounting.

use super::gcd::stein_gcd_unsigned;
use crate::error::{HaloError, Result};
use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

/// Bit widths of a fraction's numerator and denominator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BitReport {
    pub num_bits: u64,
    pub den_bits: u64,
    pub total_bits: u64,
}

impl BitReport {
    pub fn new(num_bits: u64, den_bits: u64) -> Self {
        Self {
            num_bits,
            den_bits,
            total_bits: num_bits + den_bits,
        }
    }

    /// Width of the wider component; this is what a fixed-width `(n, d)`
    /// register pair has to hold.
    pub fn widest(&self) -> u64 {
        self.num_bits.max(self.den_bits)
    }

    /// Componentwise maximum.
    pub fn max(self, other: Self) -> Self {
        Self {
            num_bits: self.num_bits.max(other.num_bits),
            den_bits: self.den_bits.max(other.den_bits),
            total_bits: self.total_bits.max(other.total_bits),
        }
    }
}

/// An exact rational `num / den` with `den > 0`.
///
/// Arithmetic never reduces. `reduced` records whether `gcd(|num|, den) = 1`
/// is known; [`Rational::simplify`] establishes it.
///
/// Equality and ordering compare values, not representations; use
/// [`Rational::identical`] for a representation-level comparison.
#[derive(Clone, Debug)]
pub struct Rational {
    num: BigInt,
    den: BigInt,
    reduced: bool,
}

/// Result of lifting a binary float at scale `2^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lift {
    pub value: Rational,
    /// False when `x * 2^k` was not an integer and had to be rounded.
    pub exact: bool,
}

/// Result of collapsing a rational to a binary float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Collapse {
    pub value: f64,
    pub overflow: bool,
}

impl Rational {
    pub fn new(num: BigInt, den: BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(HaloError::DivisionByZero);
        }
        Ok(Self::from_parts(num, den))
    }

    /// Builds `num / den`, normalizing the sign onto the numerator.
    ///
    /// Panics if `den` is zero.
    pub fn from_parts(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let (num, den) = if den.is_negative() { (-num, -den) } else { (num, den) };
        let reduced = den.is_one() || num.is_zero() && den.is_one();
        Self { num, den, reduced }
    }

    /// Convenience constructor for small fractions; panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Self {
        Self::from_parts(BigInt::from(num), BigInt::from(den))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self {
            num: n.into(),
            den: BigInt::one(),
            reduced: true,
        }
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    pub fn into_parts(self) -> (BigInt, BigInt) {
        (self.num, self.den)
    }

    pub fn bit_report(&self) -> BitReport {
        BitReport::new(self.num.bits(), self.den.bits())
    }

    pub fn total_bits(&self) -> u64 {
        self.num.bits() + self.den.bits()
    }

    /// Same numerator and denominator, not merely the same value.
    pub fn identical(&self, other: &Self) -> bool {
        self.num == other.num && self.den == other.den
    }

    pub fn signum(&self) -> i32 {
        match self.num.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.num.is_positive()
    }

    pub fn abs(&self) -> Self {
        Self {
            num: self.num.abs(),
            den: self.den.clone(),
            reduced: self.reduced,
        }
    }

    pub fn floor(&self) -> BigInt {
        self.num.div_floor(&self.den)
    }

    pub fn recip(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Err(HaloError::DivisionByZero);
        }
        let mut r = Self::from_parts(self.den.clone(), self.num.clone());
        r.reduced = self.reduced;
        Ok(r)
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    pub fn pow(&self, exp: u32) -> Self {
        if exp == 0 {
            return Self::one();
        }
        Self {
            num: num_traits::pow(self.num.clone(), exp as usize),
            den: num_traits::pow(self.den.clone(), exp as usize),
            reduced: self.reduced,
        }
    }

    /// Multiplies by `2^-k` (an exact shift of the denominator).
    pub fn shr(&self, k: u32) -> Self {
        if self.num.is_zero() {
            return self.clone();
        }
        Self {
            num: self.num.clone(),
            den: &self.den << k,
            reduced: false,
        }
    }

    /// Equal value with `gcd(|num|, den) = 1`.
    pub fn simplify(&self) -> Self {
        if self.reduced {
            return self.clone();
        }
        if self.num.is_zero() {
            return Self::zero();
        }
        let g = stein_gcd_unsigned(self.num.magnitude(), self.den.magnitude());
        if g.is_one() {
            return Self {
                num: self.num.clone(),
                den: self.den.clone(),
                reduced: true,
            };
        }
        let (num, den) = match pow2_exponent_unsigned(&g) {
            Some(k) => (&self.num >> k, &self.den >> k),
            None => {
                let g = BigInt::from_biguint(Sign::Plus, g);
                (&self.num / &g, &self.den / &g)
            }
        };
        Self {
            num,
            den,
            reduced: true,
        }
    }

    /// The exact value of a finite double.
    pub fn from_f64_exact(x: f64) -> Result<Self> {
        let (mantissa, exp) = decode_f64(x)?;
        if mantissa == 0 {
            return Ok(Self::zero());
        }
        let negative = x.is_sign_negative();
        let signed = |m: BigInt| if negative { -m } else { m };
        if exp >= 0 {
            return Ok(Self::from_integer(signed(BigInt::from(mantissa) << exp as u64)));
        }
        let strip = (mantissa.trailing_zeros() as i64).min(-exp);
        let m = mantissa >> strip;
        let k = (-exp - strip) as u64;
        Ok(Self {
            num: signed(BigInt::from(m)),
            den: BigInt::one() << k,
            reduced: true,
        })
    }

    /// Lifts `x` as `round(x * 2^k) / 2^k` without reducing.
    ///
    /// Rounding is half-to-even and only happens when `x * 2^k` is not an
    /// integer; `exact` reports whether it did.
    pub fn lift(x: f64, scale_log2: u32) -> Result<Lift> {
        let (mantissa, exp) = decode_f64(x)?;
        let den = BigInt::one() << scale_log2 as u64;
        let shift = exp + scale_log2 as i64;
        let (n, exact) = if mantissa == 0 {
            (BigInt::zero(), true)
        } else if shift >= 0 {
            (BigInt::from(mantissa) << shift as u64, true)
        } else {
            let drop = (-shift) as u32;
            let (q, exact) = round_shift_half_even(mantissa as u128, drop);
            (BigInt::from(q), exact)
        };
        let num = if x.is_sign_negative() { -n } else { n };
        Ok(Lift {
            value: Self {
                num,
                den,
                reduced: scale_log2 == 0,
            },
            exact,
        })
    }

    /// [`Rational::lift`] followed by [`Rational::simplify`].
    pub fn to_rational(x: f64, scale_log2: u32) -> Result<Lift> {
        let lift = Self::lift(x, scale_log2)?;
        Ok(Lift {
            value: lift.value.simplify(),
            exact: lift.exact,
        })
    }

    /// Nearest double, ties to even; overflow gives a signed infinity.
    pub fn to_float(&self) -> Collapse {
        let (value, overflow) = self.round_to_format(53, -1022, 1023);
        Collapse { value, overflow }
    }

    pub fn to_f64(&self) -> f64 {
        self.to_float().value
    }

    /// Correctly rounds this value to a binary format with `precision`
    /// significand bits (hidden bit included) and normal exponent range
    /// `[emin, emax]`, returning the result as a double.
    ///
    /// Subnormals of the target format are produced; values at or beyond
    /// the overflow threshold become infinities with the flag set.
    pub fn round_to_format(&self, precision: u32, emin: i64, emax: i64) -> (f64, bool) {
        debug_assert!((1..=53).contains(&precision));
        if self.num.is_zero() {
            return (0.0, false);
        }
        let negative = self.num.is_negative();
        let a = self.num.magnitude();
        let b = self.den.magnitude();
        let e0 = a.bits() as i64 - b.bits() as i64;
        let at_least = if e0 >= 0 {
            *a >= b << e0 as u64
        } else {
            a << (-e0) as u64 >= *b
        };
        let exponent = if at_least { e0 } else { e0 - 1 };
        let quantum = exponent.max(emin) - (precision as i64 - 1);
        let (n, d): (BigUint, BigUint) = if quantum >= 0 {
            (a.clone(), b << quantum as u64)
        } else {
            (a << (-quantum) as u64, b.clone())
        };
        let (mut q, r) = n.div_rem(&d);
        match (&r << 1u32).cmp(&d) {
            Ordering::Greater => q += 1u32,
            Ordering::Equal if q.bit(0) => q += 1u32,
            _ => {}
        }
        let sign = if negative { -1.0 } else { 1.0 };
        if q.is_zero() {
            return (sign * 0.0, false);
        }
        if q.bits() as i64 + quantum - 1 > emax {
            return (sign * f64::INFINITY, true);
        }
        let mantissa = q.to_u64().expect("rounded significand fits in 53 bits") as f64;
        (sign * ldexp(mantissa, quantum), false)
    }
}

/// Splits a finite double into `(m, e)` with `|x| = m * 2^e`.
pub(crate) fn decode_f64(x: f64) -> Result<(u64, i64)> {
    if !x.is_finite() {
        return Err(HaloError::NonFinite(x));
    }
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    Ok(if exp_field == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_field - 1075)
    })
}

/// `2^e` for `e` in the normal double range.
pub(crate) fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// `x * 2^e`, exact whenever the result is representable.
pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= pow2(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= pow2(-1000);
        e += 1000;
    }
    x * pow2(e)
}

fn round_shift_half_even(m: u128, drop: u32) -> (u128, bool) {
    if drop == 0 {
        return (m, true);
    }
    if drop >= 128 {
        return (0, m == 0);
    }
    let q = m >> drop;
    let rem = m & ((1u128 << drop) - 1);
    let half = 1u128 << (drop - 1);
    let q = match rem.cmp(&half) {
        Ordering::Greater => q + 1,
        Ordering::Equal if q & 1 == 1 => q + 1,
        _ => q,
    };
    (q, rem == 0)
}

pub(crate) fn pow2_exponent(d: &BigInt) -> Option<u64> {
    pow2_exponent_unsigned(d.magnitude())
}

fn pow2_exponent_unsigned(d: &BigUint) -> Option<u64> {
    let tz = d.trailing_zeros()?;
    (tz + 1 == d.bits()).then_some(tz)
}

/// Sums that cancel come back as the canonical `0/1`.
fn add_rationals(a: &Rational, b: &Rational) -> Rational {
    let sum = add_unnormalized(a, b);
    if sum.num.is_zero() {
        Rational::zero()
    } else {
        sum
    }
}

fn add_unnormalized(a: &Rational, b: &Rational) -> Rational {
    if a.num.is_zero() {
        return b.clone();
    }
    if b.num.is_zero() {
        return a.clone();
    }
    AddPlan::new(&a.den, &b.den).apply(a, b)
}

/// How two nonzero fractions with the given denominators are added. It
/// depends only on the denominators, so a tensor whose entries share one
/// can work it out once.
pub(crate) enum AddPlan {
    Same,
    /// Both powers of two; `b`'s exponent minus `a`'s.
    Shift(i64),
    /// One denominator is a proper multiple of the other.
    Multiple { a_is_big: bool, q: BigInt },
    Cross,
}

impl AddPlan {
    pub(crate) fn new(da: &BigInt, db: &BigInt) -> Self {
        if da == db {
            return AddPlan::Same;
        }
        if let (Some(ea), Some(eb)) = (pow2_exponent(da), pow2_exponent(db)) {
            return AddPlan::Shift(eb as i64 - ea as i64);
        }
        let a_is_big = da.bits() >= db.bits();
        let (big, small) = if a_is_big { (da, db) } else { (db, da) };
        if big.bits() > small.bits() {
            let (q, r) = big.div_rem(small);
            if r.is_zero() {
                return AddPlan::Multiple { a_is_big, q };
            }
        }
        AddPlan::Cross
    }

    /// `a + b` for nonzero `a` and `b`, unnormalized.
    pub(crate) fn apply(&self, a: &Rational, b: &Rational) -> Rational {
        let (num, den) = match self {
            AddPlan::Same => (&a.num + &b.num, a.den.clone()),
            AddPlan::Shift(d) if *d > 0 => ((&a.num << *d as u64) + &b.num, b.den.clone()),
            AddPlan::Shift(d) => ((&b.num << (-*d) as u64) + &a.num, a.den.clone()),
            AddPlan::Multiple { a_is_big: true, q } => (&a.num + &b.num * q, a.den.clone()),
            AddPlan::Multiple { a_is_big: false, q } => (&b.num + &a.num * q, b.den.clone()),
            AddPlan::Cross => (&a.num * &b.den + &b.num * &a.den, &a.den * &b.den),
        };
        Rational {
            num,
            den,
            reduced: false,
        }
    }
}

/// [`Rational`] addition with the denominator work already planned.
pub(crate) fn add_planned(plan: &AddPlan, a: &Rational, b: &Rational) -> Rational {
    let sum = if a.num.is_zero() {
        b.clone()
    } else if b.num.is_zero() {
        a.clone()
    } else {
        plan.apply(a, b)
    };
    if sum.num.is_zero() {
        Rational::zero()
    } else {
        sum
    }
}

fn mul_rationals(a: &Rational, b: &Rational) -> Rational {
    if a.num.is_zero() || b.num.is_zero() {
        return Rational::zero();
    }
    Rational {
        num: &a.num * &b.num,
        den: &a.den * &b.den,
        reduced: false,
    }
}

impl Zero for Rational {
    fn zero() -> Self {
        Self::from_integer(0)
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl One for Rational {
    fn one() -> Self {
        Self::from_integer(1)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational {
            num: -self.num,
            den: self.den,
            reduced: self.reduced,
        }
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -self.clone()
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $body(self, rhs)
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                $body(&self, &rhs)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $body(&self, rhs)
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                $body(self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, add_rationals);
forward_binop!(Mul, mul, mul_rationals);
forward_binop!(Sub, sub, |a: &Rational, b: &Rational| add_rationals(a, &-b));

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        if self.den == other.den {
            return self.num == other.num;
        }
        &self.num * &other.den == &other.num * &self.den
    }
}

impl Eq for Rational {}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        let by_sign = self.num.sign().cmp(&other.num.sign());
        if by_sign != Ordering::Equal {
            return by_sign;
        }
        if self.den == other.den {
            return self.num.cmp(&other.num);
        }
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl FromStr for Rational {
    type Err = HaloError;

    /// Accepts `n`, `n/d`, and finite decimals such as `-0.25` or `1e-16`,
    /// all parsed exactly.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || HaloError::Parse(format!("not a rational: {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            return Rational::new(n, d).map(|q| q.simplify());
        }
        let (mantissa, exp10) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if frac_part.contains(['-', '+']) || int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let digits = match digits.as_str() {
            "-" | "+" | "" => return Err(bad()),
            d => d,
        };
        let n = BigInt::from_str(digits).map_err(|_| bad())?;
        let exp = exp10 - frac_part.len() as i64;
        if exp.unsigned_abs() > 100_000 {
            return Err(bad());
        }
        let scale = num_traits::pow(BigInt::from(10), exp.unsigned_abs() as usize);
        let q = if exp >= 0 {
            Rational::from_integer(n * scale)
        } else {
            Rational::from_parts(n, scale)
        };
        Ok(q.simplify())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn thirds_sum_to_exactly_one() {
        let third = q(1, 3);
        assert!((&third + &third).identical(&q(2, 3)));
        let one = (&third + &third) + &third;
        assert_eq!(one, Rational::one());
        assert_eq!(one.simplify().numer(), &BigInt::from(1));
        assert_eq!(one.simplify().denom(), &BigInt::from(1));
        assert_eq!((q(1, 3) + q(1, 6)).simplify().to_string(), "1/2");
    }

    #[test]
    fn multiplication_examples() {
        assert_eq!(q(2, 3) * q(3, 2), Rational::one());
        assert!((q(1, 3) * q(1, 3)).identical(&q(1, 9)));
        let zero = q(5, 7) * Rational::zero();
        assert!(zero.is_zero());
        assert_eq!(zero.total_bits(), 1);
        assert_eq!(q(1, 2).checked_div(&Rational::zero()), Err(HaloError::DivisionByZero));
    }

    #[test]
    fn simplify_examples() {
        let s = q(32768, 65536).simplify();
        assert!(s.identical(&q(1, 2)) && s.is_reduced());
        assert!(q(576, 625).simplify().identical(&q(576, 625)));
        assert!(q(6, 4).simplify().identical(&q(3, 2)));
        assert!(q(-6, -4).simplify().identical(&q(3, 2)));
        assert!(q(6, -4).simplify().identical(&q(-3, 2)));
    }

    #[test]
    fn denominator_is_positive_after_construction() {
        let r = q(3, -7);
        assert!(r.denom().is_positive());
        assert_eq!(r.signum(), -1);
    }

    #[test]
    fn lift_examples() {
        let l = Rational::to_rational(0.75, 2).unwrap();
        assert!(l.exact && l.value.identical(&q(3, 4)));
        let l = Rational::to_rational(0.5, 16).unwrap();
        assert!(l.exact && l.value.identical(&q(1, 2)));
        let l = Rational::to_rational(0.2, 54).unwrap();
        assert!(l.exact);
        assert_eq!(l.value.numer(), &BigInt::from(3602879701896397u64));
        assert_eq!(l.value.denom(), &(BigInt::one() << 54u32));
        assert!(matches!(Rational::lift(f64::NAN, 4), Err(HaloError::NonFinite(_))));
        assert!(matches!(Rational::lift(f64::INFINITY, 4), Err(HaloError::NonFinite(_))));
    }

    #[test]
    fn lift_rounds_half_to_even_and_flags_loss() {
        // 0.375 * 4 = 1.5 -> 2 ; 0.625 * 4 = 2.5 -> 2
        let l = Rational::lift(0.375, 2).unwrap();
        assert!(!l.exact && l.value == q(1, 2));
        let l = Rational::lift(0.625, 2).unwrap();
        assert!(!l.exact && l.value == q(1, 2));
        let l = Rational::lift(-0.625, 2).unwrap();
        assert!(!l.exact && l.value == q(-1, 2));
        // lift keeps the scale as the denominator
        let l = Rational::lift(0.5, 16).unwrap();
        assert_eq!(l.value.denom(), &BigInt::from(65536));
    }

    #[test]
    fn to_float_examples() {
        assert_eq!(q(1, 2).to_f64(), 0.5);
        assert_eq!(q(1, 3).to_f64(), 1.0 / 3.0);
        assert_eq!(q(-2, 3).to_f64(), -2.0 / 3.0);
        let huge = Rational::from_integer(BigInt::one() << 1100u32);
        let c = huge.to_float();
        assert!(c.overflow && c.value == f64::INFINITY);
        let c = (-huge).to_float();
        assert!(c.overflow && c.value == f64::NEG_INFINITY);
        // smallest subnormal and half of it (ties to even -> 0)
        let tiny = Rational::from_parts(BigInt::one(), BigInt::one() << 1074u32);
        assert_eq!(tiny.to_f64(), f64::from_bits(1));
        assert_eq!(tiny.shr(1).to_f64(), 0.0);
        assert_eq!(tiny.shr(1).pow(1).to_f64(), 0.0);
    }

    #[test]
    fn one_third_matches_high_precision_division() {
        // 60 bits of 1/3 from exact long division, then rounded to 53
        let third = q(1, 3).to_f64();
        let exact = Rational::from_f64_exact(third).unwrap();
        let err = (exact - q(1, 3)).abs();
        // half an ulp of 1/3 is 2^-55
        assert!(err <= Rational::from_parts(BigInt::one(), BigInt::one() << 55u32));
    }

    #[test]
    fn round_trip_through_lift() {
        for &x in &[0.2, -0.3, 1.0, 12345.678, -0.25, 3.0e10, 0.999_999_9] {
            let l = Rational::to_rational(x, 54).unwrap();
            assert!(l.exact, "{x}");
            assert_eq!(l.value.to_f64(), x);
        }
        for &x in &[1e-300, -4.9e-324, f64::MAX, f64::MIN_POSITIVE] {
            let l = Rational::to_rational(x, 1074).unwrap();
            assert!(l.exact);
            assert_eq!(l.value.to_f64(), x);
            assert_eq!(Rational::from_f64_exact(x).unwrap().to_f64(), x);
        }
    }

    #[test]
    fn parse_forms() {
        assert!("1/5".parse::<Rational>().unwrap().identical(&q(1, 5)));
        assert!("-6/4".parse::<Rational>().unwrap().identical(&q(-3, 2)));
        assert!("0.25".parse::<Rational>().unwrap().identical(&q(1, 4)));
        assert!("4".parse::<Rational>().unwrap().identical(&q(4, 1)));
        let e = "1e-16".parse::<Rational>().unwrap();
        assert_eq!(e, Rational::from_parts(BigInt::one(), num_traits::pow(BigInt::from(10), 16)));
        assert!("-1.5e2".parse::<Rational>().unwrap().identical(&q(-150, 1)));
        for bad in ["", "x", "1/0", "1.2.3", "-", "e5", "1/"] {
            assert!(bad.parse::<Rational>().is_err(), "{bad}");
        }
    }

    #[test]
    fn ordering_is_by_value() {
        assert!(q(1, 3) < q(1, 2));
        assert!(q(-1, 2) < q(-1, 3));
        assert!(q(2, 4) == q(1, 2));
        assert_eq!(q(7, 2).floor(), BigInt::from(3));
        assert_eq!(q(-7, 2).floor(), BigInt::from(-4));
    }

    #[test]
    fn add_fast_paths_preserve_value() {
        let a = q(3, 8);
        let b = q(5, 32);
        assert!((&a + &b).identical(&Rational::from_parts(BigInt::from(17), BigInt::from(32))));
        let c = q(1, 6);
        let d = q(1, 2);
        // 6 is a multiple of 2
        assert!((&c + &d).identical(&q(4, 6)));
        assert_eq!(q(1, 6) + q(1, 10), q(4, 15));
    }
}
