//! Bounded-denominator approximation and order-free summation.

use super::rational::Rational;
use crate::error::{HaloError, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::cmp::Ordering;

/// Output of [`rational_approx`].
#[derive(Clone, Debug, PartialEq)]
pub struct Approx {
    pub value: Rational,
    /// False when nothing with `den <= d_max` lies within `eps` of `x` and
    /// `value` is the nearest grid point instead.
    pub within_tolerance: bool,
}

/// Simplest rational within `eps` of `x` whose denominator is at most `d_max`.
///
/// The denominator is found by Stern–Brocot descent over `[x - eps, x + eps]`,
/// taking runs of same-direction moves in one division. Among fractions with
/// that denominator inside the interval the one nearest `x` wins, then the
/// smaller one.
///
/// When the interval holds no fraction with `den <= d_max`, the nearest
/// member of that grid is returned with `within_tolerance = false`.
pub fn rational_approx(x: &Rational, eps: &Rational, d_max: u64) -> Result<Approx> {
    if !eps.is_positive() {
        return Err(HaloError::InvalidParameter("eps must be positive".into()));
    }
    if d_max == 0 {
        return Err(HaloError::InvalidParameter("d_max must be at least 1".into()));
    }
    // Left unreduced: the descent only needs values, and a gcd of
    // multi-hundred-kilobit operands would dominate the whole call.
    let lo = x - eps;
    let hi = x + eps;
    let bound = BigInt::from(d_max);
    match simplest_denominator(&lo, &hi, &bound) {
        Some(q) => {
            let value = nearest_with_denominator(x, &lo, &hi, &q);
            Ok(Approx {
                value,
                within_tolerance: true,
            })
        }
        None => Ok(Approx {
            value: nearest_on_grid(x, &bound),
            within_tolerance: false,
        }),
    }
}

/// Exact sum; evaluation order cannot affect the result.
pub fn sum_exact<'a, I>(values: I) -> Rational
where
    I: IntoIterator<Item = &'a Rational>,
{
    values
        .into_iter()
        .fold(Rational::zero(), |acc, v| acc + v)
        .simplify()
}

/// Denominator of the simplest rational in `[lo, hi]`, or `None` if it
/// exceeds `bound`.
fn simplest_denominator(lo: &Rational, hi: &Rational, bound: &BigInt) -> Option<BigInt> {
    if lo.signum() <= 0 && hi.signum() >= 0 {
        return Some(BigInt::one());
    }
    let (mut ln, mut ld, mut hn, mut hd) = if hi.signum() < 0 {
        let (a, b) = (-hi, -lo);
        (a.numer().clone(), a.denom().clone(), b.numer().clone(), b.denom().clone())
    } else {
        (lo.numer().clone(), lo.denom().clone(), hi.numer().clone(), hi.denom().clone())
    };
    // Denominators of the two previous convergents.
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    loop {
        let (a, r) = ln.div_rem(&ld);
        let term = if r.is_zero() || (&a + 1u32) * &hd <= hn {
            // lo is an integer, or an integer sits inside the interval
            if r.is_zero() { a } else { a + 1u32 }
        } else {
            // Descend: [lo, hi] -> [1 / (hi - a), 1 / (lo - a)].
            let next = &a * &k + &k_prev;
            k_prev = std::mem::replace(&mut k, next);
            if k > *bound {
                return None;
            }
            let new_ln = hd.clone();
            let new_ld = &hn - &a * &hd;
            let new_hn = ld.clone();
            let new_hd = r;
            (ln, ld, hn, hd) = (new_ln, new_ld, new_hn, new_hd);
            continue;
        };
        let q = term * &k + &k_prev;
        return (q <= *bound).then_some(q);
    }
}

fn nearest_with_denominator(x: &Rational, lo: &Rational, hi: &Rational, q: &BigInt) -> Rational {
    // numerators p with lo <= p/q <= hi
    let p_min = ceil_div(&(lo.numer() * q), lo.denom());
    let p_max = (hi.numer() * q).div_floor(hi.denom());
    let scaled = Rational::from_parts(x.numer() * q, x.denom().clone());
    let below = scaled.floor();
    let frac = &scaled - &Rational::from_integer(below.clone());
    // ties go to the smaller numerator
    let nearest = if frac > Rational::ratio(1, 2) { below + 1u32 } else { below };
    let p = nearest.clamp(p_min, p_max);
    Rational::from_parts(p, q.clone()).simplify()
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// Nearest fraction with denominator at most `bound`.
///
/// Walks the continued fraction of `x` until the convergent denominator
/// would pass `bound`, then compares the last convergent against the largest
/// admissible semiconvergent; the answer is always one of the two.
fn nearest_on_grid(x: &Rational, bound: &BigInt) -> Rational {
    if x.denom() <= bound {
        return x.simplify();
    }
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let (mut n, mut d) = (x.numer().clone(), x.denom().clone());
    loop {
        if d.is_zero() {
            // x was unreduced and is itself on the grid
            return Rational::from_parts(p1, q1);
        }
        let a = n.div_floor(&d);
        let q2 = &q0 + &a * &q1;
        if q2 > *bound {
            break;
        }
        let p2 = &p0 + &a * &p1;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let r = &n - &a * &d;
        (n, d) = (d, r);
    }
    let k = (bound - &q0).div_floor(&q1);
    let semi = Rational::from_parts(&p0 + &k * &p1, &q0 + &k * &q1).simplify();
    let conv = Rational::from_parts(p1, q1).simplify();
    pick_nearest(x, conv, semi)
}

/// Closer to `x`; equal distances prefer the smaller denominator, then the
/// smaller value.
fn pick_nearest(x: &Rational, a: Rational, b: Rational) -> Rational {
    let da = (&a - x).abs();
    let db = (&b - x).abs();
    match da.cmp(&db) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => match a.denom().cmp(b.denom()) {
            Ordering::Less => a,
            Ordering::Greater => b,
            Ordering::Equal => a.min(b),
        },
    }
}
