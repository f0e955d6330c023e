//! Exponential, softmax, inverse square root, LayerNorm and ReLU, all closed
//! over the rationals.

use crate::error::{HaloError, Result};
use crate::exact::Rational;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq)]
pub struct TranscendConfig {
    /// Taylor order `N` of the exponential.
    pub taylor_order: u32,
    pub nr_tolerance: Rational,
    pub nr_max_iters: usize,
    pub layernorm_epsilon: Rational,
}

impl Default for TranscendConfig {
    fn default() -> Self {
        Self {
            taylor_order: 8,
            nr_tolerance: Rational::from_parts(BigInt::one(), num_traits::pow(BigInt::from(10), 30)),
            nr_max_iters: 32,
            layernorm_epsilon: Rational::ratio(1, 100_000),
        }
    }
}

impl TranscendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taylor_order == 0 {
            return Err(HaloError::InvalidParameter("taylor order must be at least 1".into()));
        }
        if self.nr_max_iters == 0 {
            return Err(HaloError::InvalidParameter("nr_max_iters must be at least 1".into()));
        }
        if !self.nr_tolerance.is_positive() {
            return Err(HaloError::InvalidParameter("nr_tolerance must be positive".into()));
        }
        if self.layernorm_epsilon.signum() < 0 {
            return Err(HaloError::InvalidParameter("layernorm epsilon must be non-negative".into()));
        }
        Ok(())
    }
}

/// Numerator and denominator of `sum_{k<=n} (p/q)^k / k!`, namely
/// `sum_k p^k q^(n-k) n!/k!` over `q^n n!`.
fn taylor_parts(p: &BigInt, q: &BigInt, n: u32) -> (BigInt, BigInt) {
    let mut den = BigInt::one();
    let mut acc = BigInt::one();
    for k in (0..n).rev() {
        den = den * q * (k + 1);
        acc = acc * p + &den;
    }
    (acc, den)
}

/// Partial Taylor sum of `e^x` through `x^n / n!`.
pub fn rat_exp(x: &Rational, n: u32) -> Rational {
    let (num, den) = taylor_parts(x.numer(), x.denom(), n);
    Rational::from_parts(num, den)
}

/// Softmax with truncated exponentials; the components sum to exactly one.
///
/// Inputs are shifted by their maximum first. Without the shift a fixed `N`
/// loses all accuracy on large logits. The truncated series is not
/// shift-invariant, so this differs from [`rat_softmax_raw`].
pub fn rat_softmax(z: &[Rational], n: u32) -> Result<Vec<Rational>> {
    let Some(max) = z.iter().max() else {
        return Ok(Vec::new());
    };
    let shifted: Vec<Rational> = z.iter().map(|v| (v - max).simplify()).collect();
    softmax_common(&shifted, n)
}

/// The unshifted formula `RatExp(z_i) / sum_j RatExp(z_j)`.
pub fn rat_softmax_raw(z: &[Rational], n: u32) -> Result<Vec<Rational>> {
    let z: Vec<Rational> = z.iter().map(Rational::simplify).collect();
    softmax_common(&z, n)
}

/// Places the inputs over one common denominator so every truncated
/// exponential shares a denominator; the outputs are then `A_i / sum_j A_j`
/// with integer `A_i`.
fn softmax_common(z: &[Rational], n: u32) -> Result<Vec<Rational>> {
    let common = z.iter().fold(BigInt::one(), |l, s| l.lcm(s.denom()));
    let mut weights = Vec::with_capacity(z.len());
    for (index, s) in z.iter().enumerate() {
        let p = s.numer() * (&common / s.denom());
        let (a, _) = taylor_parts(&p, &common, n);
        if !a.is_positive() {
            return Err(HaloError::SeriesUnderflow { index });
        }
        weights.push(a);
    }
    let total: BigInt = weights.iter().sum();
    if total.is_zero() {
        return Ok(Vec::new());
    }
    Ok(weights
        .into_iter()
        .map(|a| Rational::from_parts(a, total.clone()))
        .collect())
}

/// A Newton–Raphson inverse square root with its residual history.
#[derive(Clone, Debug)]
pub struct InvSqrt {
    pub value: Rational,
    /// `1 - a y_t^2` for the seed and every iterate.
    pub residuals: Vec<Rational>,
    pub reseeded: bool,
}

/// `y` with `|a y^2 - 1| <= cfg.nr_tolerance`.
pub fn rat_inv_sqrt(a: &Rational, cfg: &TranscendConfig) -> Result<Rational> {
    rat_inv_sqrt_traced(a, cfg).map(|r| r.value)
}

/// [`rat_inv_sqrt`] keeping every residual.
///
/// The seed is `1/sqrt` of a range-reduced double, lifted at `2^53` and
/// scaled back by a power of two. Iterates are simplified every step.
pub fn rat_inv_sqrt_traced(a: &Rational, cfg: &TranscendConfig) -> Result<InvSqrt> {
    if !a.is_positive() {
        return Err(HaloError::Domain);
    }
    // a = a' 4^m with a' near 1
    let m = (a.numer().bits() as i64 - a.denom().bits() as i64) / 2;
    let reduced = scale_pow2(a, -2 * m);
    let seed_f = 1.0 / reduced.to_f64().sqrt();
    let mut y = scale_pow2(&Rational::to_rational(seed_f, 53)?.value, -m);
    let three = Rational::from_integer(3);
    let mut reseeded = false;
    if (a * &y * &y) >= three {
        y = scale_pow2(&Rational::one(), -(m + 1));
        reseeded = true;
        if (a * &y * &y) >= three {
            return Err(HaloError::NoConvergence { iters: 0 });
        }
    }
    let mut residuals = Vec::new();
    for _ in 0..=cfg.nr_max_iters {
        let e = (Rational::one() - a * &y * &y).simplify();
        let done = e.abs() <= cfg.nr_tolerance;
        residuals.push(e);
        if done {
            return Ok(InvSqrt {
                value: y,
                residuals,
                reseeded,
            });
        }
        if residuals.len() > cfg.nr_max_iters {
            break;
        }
        y = (&y * &(&three - &(a * &y * &y))).shr(1).simplify();
    }
    Err(HaloError::NoConvergence {
        iters: cfg.nr_max_iters,
    })
}

fn scale_pow2(q: &Rational, e: i64) -> Rational {
    if e >= 0 {
        Rational::from_parts(q.numer() << e as u64, q.denom().clone())
    } else {
        q.shr((-e) as u32)
    }
}

/// `(v - mean) / sqrt(var + eps)` with exact mean and population variance.
pub fn rat_layernorm(v: &[Rational], cfg: &TranscendConfig) -> Result<Vec<Rational>> {
    if v.is_empty() {
        return Err(HaloError::InvalidParameter("layernorm of an empty vector".into()));
    }
    let n = Rational::from_integer(v.len() as i64);
    let inv_n = n.recip()?;
    let mean = (v.iter().fold(Rational::zero(), |acc, x| acc + x) * &inv_n).simplify();
    let dev: Vec<Rational> = v.iter().map(|x| x - &mean).collect();
    let var = dev.iter().fold(Rational::zero(), |acc, d| acc + d * d) * &inv_n;
    let shifted = (var + &cfg.layernorm_epsilon).simplify();
    if shifted.is_zero() {
        return Err(HaloError::Degenerate);
    }
    let y = rat_inv_sqrt(&shifted, cfg)?;
    Ok(dev.iter().map(|d| d * &y).collect())
}

/// `q` if positive, else zero. A sign test on the numerator only.
pub fn rat_relu(q: &Rational) -> Rational {
    if q.numer().is_positive() {
        q.clone()
    } else {
        Rational::zero()
    }
}

/// Shift `k` with `2^-k` nearest to `1/sqrt(d)`, i.e. `round(log2(d) / 2)`.
pub fn attention_shift(d: usize) -> u32 {
    assert!(d >= 1, "dimension must be positive");
    ((d as f64).log2() / 2.0).round() as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn pow10_inv(k: usize) -> Rational {
        Rational::from_parts(BigInt::one(), num_traits::pow(BigInt::from(10), k))
    }

    fn factorial(n: u32) -> BigInt {
        (1..=n).fold(BigInt::one(), |acc, k| acc * k)
    }

    #[test]
    fn exp_examples() {
        for n in [0, 1, 5, 20] {
            assert_eq!(rat_exp(&Rational::zero(), n), Rational::one());
        }
        assert!(rat_exp(&Rational::one(), 2).simplify().identical(&q(5, 2)));
        assert_eq!(rat_exp(&Rational::one(), 0), Rational::one());
        assert_eq!(rat_exp(&q(-1, 2), 3), q(1, 1) - q(1, 2) + q(1, 8) - q(1, 48));
    }

    #[test]
    fn exp_error_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [4u32, 8, 16] {
            let bound = Rational::from_parts(BigInt::from(2), factorial(n + 1));
            for _ in 0..100 {
                let x = q(rng.gen_range(-1_000_000..=1_000_000), 1_000_000);
                let oracle = Rational::from_f64_exact(x.to_f64().exp()).unwrap();
                let err = (rat_exp(&x, n) - oracle).abs();
                assert!(err <= bound, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn softmax_examples() {
        let s = rat_softmax(&[Rational::zero(), Rational::zero()], 4).unwrap();
        assert_eq!(s, vec![q(1, 2), q(1, 2)]);
        let s = rat_softmax_raw(&[Rational::one(), Rational::zero()], 2).unwrap();
        assert_eq!(s, vec![q(5, 7), q(2, 7)]);
        // shifted: exponentials of 0 and -1 are 1 and 1/2
        let s = rat_softmax(&[Rational::one(), Rational::zero()], 2).unwrap();
        assert_eq!(s, vec![q(2, 3), q(1, 3)]);
        assert!(rat_softmax(&[], 3).unwrap().is_empty());
        assert_eq!(rat_softmax(&[q(7, 3)], 3).unwrap(), vec![Rational::one()]);
    }

    #[test]
    fn softmax_underflow_names_the_index() {
        // 1 + x + x^2/2 + x^3/6 < 0 at x = -5
        let z = [Rational::zero(), Rational::zero(), Rational::from_integer(-5)];
        assert_eq!(rat_softmax(&z, 3), Err(HaloError::SeriesUnderflow { index: 2 }));
    }

    #[test]
    fn softmax_sums_to_one_and_ignores_offsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let len = rng.gen_range(1..8);
            let z: Vec<Rational> = (0..len)
                .map(|_| q(rng.gen_range(-3000..3000), rng.gen_range(1..1000)))
                .collect();
            let s = rat_softmax(&z, 12).unwrap();
            let total = s.iter().fold(Rational::zero(), |a, b| a + b);
            assert!(total.simplify().identical(&Rational::one()));
            let c = q(rng.gen_range(-50..50), rng.gen_range(1..9));
            let moved: Vec<Rational> = z.iter().map(|v| v + &c).collect();
            let s2 = rat_softmax(&moved, 12).unwrap();
            assert!(s.iter().zip(&s2).all(|(a, b)| a.identical(b)));
        }
    }

    #[test]
    fn inv_sqrt_examples() {
        let cfg = TranscendConfig::default();
        let r = rat_inv_sqrt_traced(&Rational::one(), &cfg).unwrap();
        assert_eq!(r.value, Rational::one());
        assert!(r.residuals.last().unwrap().is_zero());

        // a single step from 3/2 at a = 1/4
        let (a, y0) = (q(1, 4), q(3, 2));
        let y1 = (&y0 * &(Rational::from_integer(3) - &a * &y0 * &y0)).shr(1);
        assert!(y1.simplify().identical(&q(117, 64)));

        let cfg = TranscendConfig {
            nr_tolerance: pow10_inv(30),
            ..TranscendConfig::default()
        };
        let y = rat_inv_sqrt(&Rational::from_integer(4), &cfg).unwrap();
        assert!((y - q(1, 2)).abs() <= pow10_inv(30));

        assert_eq!(rat_inv_sqrt(&Rational::zero(), &cfg), Err(HaloError::Domain));
        assert_eq!(rat_inv_sqrt(&q(-1, 2), &cfg), Err(HaloError::Domain));
    }

    #[test]
    fn inv_sqrt_converges_quadratically() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cfg = TranscendConfig {
            nr_tolerance: pow10_inv(100),
            ..TranscendConfig::default()
        };
        for _ in 0..100 {
            let a = Rational::from_parts(
                BigInt::from(rng.gen_range(1u64..u64::MAX)) << rng.gen_range(0u32..200),
                BigInt::from(rng.gen_range(1u64..u64::MAX)) << rng.gen_range(0u32..200),
            );
            let r = rat_inv_sqrt_traced(&a, &cfg).unwrap();
            assert!(r.residuals.last().unwrap().abs() <= cfg.nr_tolerance);
            for w in r.residuals.windows(2) {
                if w[0].abs() < q(1, 2) {
                    assert!(w[1].abs() <= &w[0] * &w[0]);
                }
            }
        }
    }

    #[test]
    fn layernorm_examples() {
        let cfg = TranscendConfig::default();
        let c = q(7, 3);
        let out = rat_layernorm(&[c.clone(), c.clone(), c], &cfg).unwrap();
        assert!(out.iter().all(|x| x.is_zero()));

        let cfg0 = TranscendConfig {
            layernorm_epsilon: Rational::zero(),
            ..TranscendConfig::default()
        };
        let out = rat_layernorm(&[q(1, 1), q(-1, 1)], &cfg0).unwrap();
        assert!((&out[0] - q(1, 1)).abs() <= cfg0.nr_tolerance);
        assert!((&out[1] - q(-1, 1)).abs() <= cfg0.nr_tolerance);
        assert_eq!(rat_layernorm(&[q(2, 1), q(2, 1)], &cfg0), Err(HaloError::Degenerate));

        let v = [q(1, 3), q(-5, 7), q(11, 2), q(0, 1)];
        let out = rat_layernorm(&v, &cfg).unwrap();
        assert!(out.iter().fold(Rational::zero(), |a, b| a + b).is_zero());
    }

    #[test]
    fn relu_examples() {
        assert!(rat_relu(&q(-3, 7)).is_zero());
        assert!(rat_relu(&q(5, 9)).identical(&q(5, 9)));
        assert!(rat_relu(&Rational::zero()).is_zero());
    }

    #[test]
    fn shift_choice() {
        assert_eq!(attention_shift(1), 0);
        assert_eq!(attention_shift(4), 1);
        assert_eq!(attention_shift(16), 2);
        assert_eq!(attention_shift(64), 3);
    }
}
