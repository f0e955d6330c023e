//! Dual-modular redundancy over the Mersenne primes `2^31 - 1` and
//! `2^17 - 1`.
//!
//! A result is checked by redoing the operation on residues and comparing
//! with the residues of the claimed result. Reduction modulo `2^k - 1`
//! folds `k`-bit chunks with an end-around carry and never divides.

use crate::exact::Rational;
use crate::float_emu::OpKind;
use num_bigint::{BigInt, BigUint, Sign};
use num_traits::Zero;
use std::sync::atomic::{AtomicU64, Ordering};

pub const M1_BITS: u32 = 31;
pub const M2_BITS: u32 = 17;
pub const M1: u64 = (1 << M1_BITS) - 1;
pub const M2: u64 = (1 << M2_BITS) - 1;

/// `x mod (2^k - 1)` by end-around-carry folding, for `2 <= k <= 32`.
pub fn mersenne_mod(x: &BigUint, k: u32) -> u64 {
    assert!((2..=32).contains(&k), "fold width {k} outside 2..=32");
    let m = (1u64 << k) - 1;
    let fold = |s: u64| (s & m) + (s >> k);
    let mut acc = 0u64;
    let mut buf = 0u128;
    let mut have = 0u32;
    for limb in x.iter_u64_digits() {
        buf |= (limb as u128) << have;
        have += 64;
        while have >= k {
            acc = fold(acc + (buf as u64 & m));
            buf >>= k;
            have -= k;
        }
    }
    acc = fold(acc + buf as u64);
    acc = fold(acc);
    if acc == m {
        0
    } else {
        acc
    }
}

/// Residues modulo `M1` and `M2`, each in `[0, M)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ResiduePair {
    pub r1: u64,
    pub r2: u64,
}

impl ResiduePair {
    pub fn combine(self, other: Self, kind: OpKind) -> Self {
        match kind {
            OpKind::Add => Self {
                r1: (self.r1 + other.r1) % M1,
                r2: (self.r2 + other.r2) % M2,
            },
            OpKind::Mul => Self {
                r1: self.r1 * other.r1 % M1,
                r2: self.r2 * other.r2 % M2,
            },
        }
    }
}

/// Negative values map to `M - (|n| mod M)`, reduced once more so `0`
/// stays `0`.
pub fn residues(n: &BigInt) -> ResiduePair {
    let mag = n.magnitude();
    let (a, b) = (mersenne_mod(mag, M1_BITS), mersenne_mod(mag, M2_BITS));
    if n.sign() == Sign::Minus {
        ResiduePair {
            r1: (M1 - a) % M1,
            r2: (M2 - b) % M2,
        }
    } else {
        ResiduePair { r1: a, r2: b }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Modulus {
    M1,
    M2,
}

impl Modulus {
    pub fn value(self) -> u64 {
        match self {
            Modulus::M1 => M1,
            Modulus::M2 => M2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultReport {
    pub detected: bool,
    pub failing_modulus: Vec<Modulus>,
    /// `c` minus the true result. Diagnostic only: detection never looks at it.
    pub injected_error_magnitude: BigInt,
}

/// Checks the claim `c = a (kind) b` in both residue fields.
pub fn dmr_check(a: &BigInt, b: &BigInt, c: &BigInt, kind: OpKind) -> FaultReport {
    let expect = residues(a).combine(residues(b), kind);
    let got = residues(c);
    let mut failing = Vec::new();
    if expect.r1 != got.r1 {
        failing.push(Modulus::M1);
    }
    if expect.r2 != got.r2 {
        failing.push(Modulus::M2);
    }
    let truth = match kind {
        OpKind::Add => a + b,
        OpKind::Mul => a * b,
    };
    FaultReport {
        detected: !failing.is_empty(),
        failing_modulus: failing,
        injected_error_magnitude: c - truth,
    }
}

/// Checks an unreduced rational result as two integer claims: the
/// numerator and the denominator of the textbook formula.
///
/// For addition the numerator claim is `n1 d2 + n2 d1`; its residues are
/// assembled from residue products, so no full-width product is formed.
pub fn dmr_check_rational(a: &Rational, b: &Rational, c: &Rational, kind: OpKind) -> bool {
    let (n1, d1) = (residues(a.numer()), residues(a.denom()));
    let (n2, d2) = (residues(b.numer()), residues(b.denom()));
    let num = match kind {
        OpKind::Add => n1.combine(d2, OpKind::Mul).combine(n2.combine(d1, OpKind::Mul), OpKind::Add),
        OpKind::Mul => n1.combine(n2, OpKind::Mul),
    };
    let den = d1.combine(d2, OpKind::Mul);
    residues(c.numer()) == num && residues(c.denom()) == den
}

/// `c` with the listed bits of its magnitude toggled; the sign is kept.
pub fn inject_fault(c: &BigInt, bit_positions: &[u64]) -> BigInt {
    let mut mag = c.magnitude().clone();
    for &p in bit_positions {
        let on = mag.bit(p);
        mag.set_bit(p, !on);
    }
    let sign = if mag.is_zero() {
        Sign::NoSign
    } else if c.sign() == Sign::Minus {
        Sign::Minus
    } else {
        Sign::Plus
    };
    BigInt::from_biguint(sign, mag)
}

/// Shadow verification of rational multiply and add, with pass/fail
/// counters that are safe to share across threads.
#[derive(Debug, Default)]
pub struct ShadowVerifier {
    enabled: bool,
    checks: AtomicU64,
    failures: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ShadowCounts {
    pub checks: u64,
    pub failures: u64,
}

impl ShadowVerifier {
    pub fn new(enabled: bool) -> Self {
        Self {
            enabled,
            ..Self::default()
        }
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    /// Records one check of an already computed result.
    pub fn verify(&self, a: &Rational, b: &Rational, c: &Rational, kind: OpKind) -> bool {
        if !self.enabled {
            return true;
        }
        let ok = dmr_check_rational(a, b, c, kind);
        self.checks.fetch_add(1, Ordering::Relaxed);
        if !ok {
            self.failures.fetch_add(1, Ordering::Relaxed);
        }
        ok
    }

    /// Unreduced product, checked when enabled.
    pub fn mul(&self, a: &Rational, b: &Rational) -> (Rational, bool) {
        let c = Rational::from_parts(a.numer() * b.numer(), a.denom() * b.denom());
        let ok = self.verify(a, b, &c, OpKind::Mul);
        (c, ok)
    }

    /// Unreduced cross-multiplied sum, checked when enabled.
    pub fn add(&self, a: &Rational, b: &Rational) -> (Rational, bool) {
        let c = Rational::from_parts(
            a.numer() * b.denom() + b.numer() * a.denom(),
            a.denom() * b.denom(),
        );
        let ok = self.verify(a, b, &c, OpKind::Add);
        (c, ok)
    }

    pub fn counts(&self) -> ShadowCounts {
        ShadowCounts {
            checks: self.checks.load(Ordering::Relaxed),
            failures: self.failures.load(Ordering::Relaxed),
        }
    }
}
