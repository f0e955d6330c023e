//! Binary (Stein) GCD over limb vectors.
//!
//! Only parity tests, shifts and subtraction are used; there is no division
//! anywhere on this path.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::Zero;
use std::cmp::Ordering;

/// `gcd(u, v)` for non-negative `u`, `v`; `gcd(0, v) = v`.
///
/// Negative inputs are treated by magnitude.
pub fn stein_gcd(u: &BigInt, v: &BigInt) -> BigInt {
    BigInt::from_biguint(Sign::Plus, stein_gcd_unsigned(u.magnitude(), v.magnitude()))
}

pub fn stein_gcd_unsigned(u: &BigUint, v: &BigUint) -> BigUint {
    if u.is_zero() {
        return v.clone();
    }
    if v.is_zero() {
        return u.clone();
    }
    let (Some(tu), Some(tv)) = (u.trailing_zeros(), v.trailing_zeros()) else {
        unreachable!("nonzero operands have a lowest set bit");
    };
    let shift = tu.min(tv);
    let a: BigUint = u >> tu;
    let b: BigUint = v >> tv;
    if a.bits() <= 64 && b.bits() <= 64 {
        let g = stein_u64(to_u64(&a), to_u64(&b));
        return BigUint::from(g) << shift;
    }
    let g = stein_odd_limbs(a.to_u64_digits(), b.to_u64_digits());
    BigUint::new(limbs_to_u32(&g)) << shift
}

fn to_u64(x: &BigUint) -> u64 {
    x.iter_u64_digits().next().unwrap_or(0)
}

/// Native word path; both operands odd on entry.
fn stein_u64(mut a: u64, mut b: u64) -> u64 {
    loop {
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a;
        }
        b >>= b.trailing_zeros();
    }
}

/// Both operands odd on entry. Limbs are little-endian and trimmed.
fn stein_odd_limbs(mut a: Vec<u64>, mut b: Vec<u64>) -> Vec<u64> {
    loop {
        if a.len() == 1 && b.len() == 1 {
            return vec![stein_u64(a[0], b[0])];
        }
        if a.len() == 1 && a[0] == 1 || b.len() == 1 && b[0] == 1 {
            return vec![1];
        }
        match cmp_limbs(&a, &b) {
            Ordering::Equal => return a,
            Ordering::Greater => std::mem::swap(&mut a, &mut b),
            Ordering::Less => {}
        }
        // b > a, both odd: b - a is even and nonzero.
        sub_in_place(&mut b, &a);
        shr_trailing_zeros(&mut b);
    }
}

fn cmp_limbs(a: &[u64], b: &[u64]) -> Ordering {
    a.len()
        .cmp(&b.len())
        .then_with(|| a.iter().rev().cmp(b.iter().rev()))
}

fn sub_in_place(b: &mut Vec<u64>, a: &[u64]) {
    let mut borrow = false;
    for i in 0..b.len() {
        let rhs = a.get(i).copied().unwrap_or(0);
        let (d1, o1) = b[i].overflowing_sub(rhs);
        let (d2, o2) = d1.overflowing_sub(borrow as u64);
        b[i] = d2;
        borrow = o1 || o2;
        if i >= a.len() && !borrow {
            break;
        }
    }
    debug_assert!(!borrow);
    while b.len() > 1 && *b.last().unwrap() == 0 {
        b.pop();
    }
}

fn shr_trailing_zeros(b: &mut Vec<u64>) {
    let zero_limbs = b.iter().take_while(|&&w| w == 0).count();
    if zero_limbs > 0 {
        b.drain(..zero_limbs);
    }
    let s = b[0].trailing_zeros();
    if s > 0 {
        let n = b.len();
        for i in 0..n {
            let hi = if i + 1 < n { b[i + 1] << (64 - s) } else { 0 };
            b[i] = (b[i] >> s) | hi;
        }
        while b.len() > 1 && *b.last().unwrap() == 0 {
            b.pop();
        }
    }
}

fn limbs_to_u32(limbs: &[u64]) -> Vec<u32> {
    limbs
        .iter()
        .flat_map(|&w| [w as u32, (w >> 32) as u32])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn big(x: u64) -> BigInt {
        BigInt::from(x)
    }

    fn euclid(a: &BigUint, b: &BigUint) -> BigUint {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let r = &a % &b;
            a = b;
            b = r;
        }
        a
    }

    #[test]
    fn spec_examples() {
        assert_eq!(stein_gcd(&big(0), &big(5)), big(5));
        assert_eq!(stein_gcd(&big(5), &big(0)), big(5));
        assert_eq!(stein_gcd(&big(48), &big(18)), big(6));
        assert_eq!(stein_gcd(&big((1 << 31) - 1), &big((1 << 17) - 1)), big(1));
        assert_eq!(stein_gcd(&big(0), &big(0)), big(0));
    }

    #[test]
    fn agrees_with_euclid_up_to_512_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..10_000 {
            let bits_a = rng.gen_range(1..=512);
            let bits_b = rng.gen_range(1..=512);
            let mut a = random_biguint(&mut rng, bits_a);
            let mut b = random_biguint(&mut rng, bits_b);
            if i % 3 == 0 {
                // force a shared factor so the result is not almost always 1
                let bits_f = rng.gen_range(1..=128);
                let f = random_biguint(&mut rng, bits_f);
                a *= &f;
                b *= &f;
            }
            assert_eq!(stein_gcd_unsigned(&a, &b), euclid(&a, &b), "{a} {b}");
        }
    }

    #[test]
    fn power_of_two_operands() {
        let a = BigUint::from(3u8) << 700u32;
        let b = BigUint::from(1u8) << 900u32;
        assert_eq!(stein_gcd_unsigned(&a, &b), BigUint::from(1u8) << 700u32);
        assert_eq!(a.gcd(&b), BigUint::from(1u8) << 700u32);
    }

    pub(crate) fn random_biguint(rng: &mut impl Rng, bits: u64) -> BigUint {
        let words = bits.div_ceil(32) as usize;
        let mut digits: Vec<u32> = (0..words).map(|_| rng.gen()).collect();
        let extra = words as u64 * 32 - bits;
        if let Some(top) = digits.last_mut() {
            *top >>= extra;
        }
        BigUint::new(digits)
    }
}
