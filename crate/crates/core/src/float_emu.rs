//! Reduced-precision binary floating point, emulated on `f64`.
//!
//! Every emulated operation is computed in double precision and then rounded
//! once to the target format (round half to even). Doubles carry more than
//! `2p + 2` significand bits for both BF16 and FP32, so this double rounding
//! is innocuous for `+`, `-` and `*`: results are correctly rounded.
//! There is no fused multiply-add.

use crate::exact::{sum_exact, Rational};
use std::fmt;
use std::str::FromStr;

/// A precision regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    Bf16,
    Fp32,
    Fp64,
    Exact,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::Bf16, Regime::Fp32, Regime::Fp64, Regime::Exact];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Bf16 => "bf16",
            Regime::Fp32 => "fp32",
            Regime::Fp64 => "fp64",
            Regime::Exact => "exact",
        }
    }

    /// Significand bits including the hidden bit; `None` for exact.
    pub fn significand_bits(self) -> Option<u32> {
        match self {
            Regime::Bf16 => Some(8),
            Regime::Fp32 => Some(24),
            Regime::Fp64 => Some(53),
            Regime::Exact => None,
        }
    }

    pub fn exponent_bits(self) -> Option<u32> {
        match self {
            Regime::Bf16 | Regime::Fp32 => Some(8),
            Regime::Fp64 => Some(11),
            Regime::Exact => None,
        }
    }

    /// `(emin, emax)` of normal numbers.
    pub fn exponent_range(self) -> Option<(i64, i64)> {
        self.exponent_bits().map(|e| {
            let emax = (1i64 << (e - 1)) - 1;
            (1 - emax, emax)
        })
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bf16" => Ok(Regime::Bf16),
            "fp32" => Ok(Regime::Fp32),
            "fp64" => Ok(Regime::Fp64),
            "exact" => Ok(Regime::Exact),
            other => Err(format!("unknown regime {other:?} (expected bf16, fp32, fp64 or exact)")),
        }
    }
}

/// Rounds `x` to the nearest value representable in `regime`.
///
/// Ties go to even, overflow gives a signed infinity and subnormals of the
/// target format are kept. `Exact` and `Fp64` return `x` unchanged. NaN
/// passes through.
pub fn round_to(x: f64, regime: Regime) -> f64 {
    match (regime.significand_bits(), regime.exponent_range()) {
        (Some(p), Some((emin, emax))) if p < 53 => round_format(x, p, emin, emax),
        _ => x,
    }
}

fn round_format(x: f64, p: u32, emin: i64, emax: i64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let exp_field = ((x.to_bits() >> 52) & 0x7ff) as i64;
    // f64 subnormals sit far below every emulated format's range
    let e = if exp_field == 0 { -1023 } else { exp_field - 1023 };
    let quantum = e.max(emin) - (p as i64 - 1);
    // both scalings are by exact powers of two and stay in range
    let m = (x * pow2(-quantum)).round_ties_even();
    let r = m * pow2(quantum);
    if r.abs() >= pow2(emax + 1) {
        return f64::INFINITY.copysign(x);
    }
    r
}

fn pow2(e: i64) -> f64 {
    f64::from_bits(((e + 1023) as u64) << 52)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Add,
    Mul,
}

/// One operation with a single rounding to `regime`.
pub fn emulated_op(kind: OpKind, a: f64, b: f64, regime: Regime) -> f64 {
    let exact = match kind {
        OpKind::Add => a + b,
        OpKind::Mul => a * b,
    };
    round_to(exact, regime)
}

/// Left fold of emulated additions over `values` in the given `order`.
///
/// Panics if `order` is not a permutation of `0..values.len()`.
pub fn reduce_ordered(values: &[f64], order: &[usize], regime: Regime) -> f64 {
    assert_permutation(order, values.len());
    if regime == Regime::Exact {
        let lifted: Vec<Rational> = order
            .iter()
            .map(|&i| Rational::from_f64_exact(values[i]).expect("finite input"))
            .collect();
        return sum_exact(&lifted).to_f64();
    }
    let mut it = order.iter().map(|&i| values[i]);
    let Some(first) = it.next() else {
        return 0.0;
    };
    it.fold(round_to(first, regime), |acc, v| emulated_op(OpKind::Add, acc, v, regime))
}

fn assert_permutation(order: &[usize], n: usize) {
    assert_eq!(order.len(), n, "order length does not match values");
    let mut seen = vec![false; n];
    for &i in order {
        assert!(i < n && !seen[i], "order is not a permutation");
        seen[i] = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: exact rational rounding.
    fn oracle(x: f64, regime: Regime) -> f64 {
        let p = regime.significand_bits().unwrap();
        let (emin, emax) = regime.exponent_range().unwrap();
        Rational::from_f64_exact(x).unwrap().round_to_format(p, emin, emax).0
    }

    #[test]
    fn examples() {
        assert_eq!(round_to(0.5, Regime::Bf16), 0.5);
        assert_eq!(round_to(0.2, Regime::Bf16), 0.2001953125);
        assert_eq!(round_to(0.2, Regime::Bf16), 205.0 / 1024.0);
        assert_eq!(round_to(1.0 + 2f64.powi(-20), Regime::Bf16), 1.0);
        assert_eq!(emulated_op(OpKind::Add, 1.0, 2f64.powi(-9), Regime::Bf16), 1.0);
        assert_eq!(emulated_op(OpKind::Mul, 0.5, 0.5, Regime::Bf16), 0.25);
        assert_eq!(round_to(0.2, Regime::Fp32), 0.2f32 as f64);
        assert_eq!(round_to(0.2, Regime::Fp64), 0.2);
    }

    #[test]
    fn thirds_in_bf16() {
        // Round-to-nearest happens to land back on 1 here: 171/256 + 171/512
        // is 1 + 2^-9, below half an ulp of 1.
        let t = round_to(1.0 / 3.0, Regime::Bf16);
        assert_eq!(t, 171.0 / 512.0);
        let s = emulated_op(OpKind::Add, t, t, Regime::Bf16);
        assert_eq!(emulated_op(OpKind::Add, s, t, Regime::Bf16), 1.0);
    }

    #[test]
    fn reduction_order_witness() {
        let v = [1.0, 2f64.powi(-8), 2f64.powi(-8)];
        assert_eq!(reduce_ordered(&v, &[0, 1, 2], Regime::Bf16), 1.0);
        assert_eq!(reduce_ordered(&v, &[1, 2, 0], Regime::Bf16), 1.0078125);
        // one bit further down both orders agree
        let w = [1.0, 2f64.powi(-9), 2f64.powi(-9)];
        assert_eq!(reduce_ordered(&w, &[0, 1, 2], Regime::Bf16), 1.0);
        assert_eq!(reduce_ordered(&w, &[1, 2, 0], Regime::Bf16), 1.0);
        assert_eq!(reduce_ordered(&[0.3], &[0], Regime::Bf16), round_to(0.3, Regime::Bf16));
        assert_eq!(reduce_ordered(&[], &[], Regime::Bf16), 0.0);
    }

    #[test]
    fn exact_regime_is_order_free() {
        let v = [1.0, 2f64.powi(-8), 2f64.powi(-8), -1.0, 0.1, 1e-30];
        let base = reduce_ordered(&v, &[0, 1, 2, 3, 4, 5], Regime::Exact);
        for order in [[5, 4, 3, 2, 1, 0], [3, 0, 5, 1, 4, 2], [2, 4, 0, 1, 5, 3]] {
            assert_eq!(reduce_ordered(&v, &order, Regime::Exact).to_bits(), base.to_bits());
        }
    }

    #[test]
    fn overflow_and_subnormals() {
        assert_eq!(round_to(3.5e38, Regime::Bf16), f64::INFINITY);
        assert_eq!(round_to(-3.5e38, Regime::Fp32), f64::NEG_INFINITY);
        let tiny_bf16 = 2f64.powi(-133);
        assert_eq!(round_to(tiny_bf16, Regime::Bf16), tiny_bf16);
        assert_eq!(round_to(tiny_bf16 * 0.5, Regime::Bf16), 0.0);
        assert_eq!(round_to(tiny_bf16 * 0.75, Regime::Bf16), tiny_bf16);
        assert_eq!(round_to(1e-310, Regime::Fp32), 0.0);
        assert!(round_to(f64::NAN, Regime::Bf16).is_nan());
        assert_eq!(round_to(f32::MAX as f64, Regime::Fp32), f32::MAX as f64);
    }

    #[test]
    fn agrees_with_rational_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..100_000 {
            let x = match i % 3 {
                0 => rng.gen_range(-4.0..4.0),
                1 => f64::from_bits(rng.gen::<u64>() >> 2) * if rng.gen() { 1.0 } else { -1.0 },
                _ => rng.gen_range(-1.0..1.0) * 2f64.powi(rng.gen_range(-160..140)),
            };
            if !x.is_finite() {
                continue;
            }
            for regime in [Regime::Bf16, Regime::Fp32] {
                let got = round_to(x, regime);
                let want = oracle(x, regime);
                assert_eq!(got.to_bits(), want.to_bits(), "{x:e} {regime}");
            }
            assert_eq!(round_to(x, Regime::Fp64), x);
        }
    }

    #[test]
    fn fp32_matches_native_conversion() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100_000 {
            let x: f64 = rng.gen_range(-1e6..1e6) * 2f64.powi(rng.gen_range(-60..60));
            assert_eq!(round_to(x, Regime::Fp32), x as f32 as f64);
        }
    }

    #[test]
    fn emulated_ops_are_correctly_rounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20_000 {
            for regime in [Regime::Bf16, Regime::Fp32] {
                let a = round_to(rng.gen_range(-100.0..100.0), regime);
                let b = round_to(rng.gen_range(-100.0..100.0) * 2f64.powi(rng.gen_range(-30..30)), regime);
                let (qa, qb) = (Rational::from_f64_exact(a).unwrap(), Rational::from_f64_exact(b).unwrap());
                let p = regime.significand_bits().unwrap();
                let (emin, emax) = regime.exponent_range().unwrap();
                let sum = (&qa + &qb).round_to_format(p, emin, emax).0;
                let prod = (&qa * &qb).round_to_format(p, emin, emax).0;
                assert_eq!(emulated_op(OpKind::Add, a, b, regime), sum);
                assert_eq!(emulated_op(OpKind::Mul, a, b, regime), prod);
            }
        }
    }

    #[test]
    fn regime_names_round_trip() {
        for r in Regime::ALL {
            assert_eq!(r.name().parse::<Regime>().unwrap(), r);
        }
        assert!("fp8".parse::<Regime>().is_err());
        assert_eq!(Regime::Bf16.exponent_range(), Some((-126, 127)));
    }
}
