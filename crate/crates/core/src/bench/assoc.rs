//! Reduction order: the same values summed in many orders.

use super::{float, float_error, meta, rational, regimes, Experiment, Record, Table};
use crate::config::BenchConfig;
use crate::error::Result;
use crate::exact::{sum_exact, Rational};
use crate::float_emu::{reduce_ordered, round_to, Regime};
use num_bigint::{BigInt, BigUint};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// `[1, 2^-8, 2^-8, -1]`: in bfloat16, `(1 + 2^-8) + 2^-8` is a pair of
/// ties that round back to 1, while `(2^-8 + 2^-8) + 1` is exactly
/// `1 + 2^-7`.
pub const WITNESS: [f64; 4] = [1.0, 1.0 / 256.0, 1.0 / 256.0, -1.0];

/// Values with random sign, an 8-bit significand and exponents spread over
/// `[-12, 12]`, so orders genuinely matter in low precision.
pub fn draw(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let m = rng.gen_range(128.0..256.0) / 128.0;
            let s = if rng.gen() { 1.0 } else { -1.0 };
            round_to(s * m * 2f64.powi(rng.gen_range(-12..=12)), Regime::Bf16)
        })
        .collect()
}

/// Each sequence of `values` summed under `orders`, in `regime`; exact
/// sums are rendered as fractions.
fn results(values: &[f64], orders: &[Vec<usize>], regime: Regime) -> Vec<(String, f64)> {
    let exact = sum_exact(&lift(values));
    orders
        .iter()
        .map(|o| {
            if regime == Regime::Exact {
                let permuted: Vec<Rational> = o.iter().map(|&i| Rational::from_f64_exact(values[i]).expect("finite")).collect();
                let s = sum_exact(&permuted);
                let e = (&s - &exact).abs().to_f64();
                (rational(&s), e)
            } else {
                let s = reduce_ordered(values, o, regime);
                (float(s), float_error(s, &exact))
            }
        })
        .collect()
}

fn lift(values: &[f64]) -> Vec<Rational> {
    values.iter().map(|&x| Rational::from_f64_exact(x).expect("finite")).collect()
}

fn all_orders(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in all_orders(n - 1) {
        for i in 0..=rest.len() {
            let mut o = rest.clone();
            o.insert(i, n - 1);
            out.push(o);
        }
    }
    out
}

pub fn run(cfg: &BenchConfig) -> Result<Table> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let values = draw(cfg.assoc_n, &mut rng);
    let orders: Vec<Vec<usize>> = (0..cfg.assoc_trials)
        .map(|_| {
            let mut o: Vec<usize> = (0..values.len()).collect();
            o.shuffle(&mut rng);
            o
        })
        .collect();
    let witness_orders = all_orders(WITNESS.len());
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for regime in regimes(cfg) {
        for (name, vals, ords) in [("random", &values[..], &orders), ("witness", &WITNESS[..], &witness_orders)] {
            let mut seen = BTreeSet::new();
            for (t, (shown, err)) in results(vals, ords, regime).into_iter().enumerate() {
                seen.insert(shown.clone());
                records.push(Record::new(regime.name(), t as u64, err, 0).with([name.to_string(), shown, seen.len().to_string()]));
            }
            summary.push(format!("{} {name}: {} distinct results over {} orders", regime.name(), seen.len(), ords.len()));
        }
    }
    Ok(Table {
        experiment: Experiment::Associativity,
        seed: cfg.seed,
        metadata: meta(&[
            ("n", cfg.assoc_n.to_string()),
            ("trials", cfg.assoc_trials.to_string()),
            ("witness", "1;2^-8;2^-8;-1".into()),
        ]),
        extra_columns: vec!["sequence", "result", "distinct_results"],
        records,
        summary,
    })
}

/// A random rational with numerator and denominator of at most `max_bits`
/// bits each.
pub fn random_rational(rng: &mut impl Rng, max_bits: u64) -> Rational {
    fn word(rng: &mut impl Rng, bits: u64) -> BigUint {
        let limbs: Vec<u32> = (0..bits.div_ceil(32)).map(|_| rng.gen()).collect();
        BigUint::from_slice(&limbs) >> (limbs.len() as u64 * 32 - bits)
    }
    let nb = rng.gen_range(1..=max_bits);
    let db = rng.gen_range(1..=max_bits - 1);
    let n = BigInt::from(word(rng, nb));
    let d = BigInt::from(word(rng, db)) + 1u32;
    let n = if rng.gen() { -n } else { n };
    Rational::from_parts(n, d)
}

/// Sums `sequences` random rational sequences under `perms` random orders
/// each and reports whether every order gave a bit-identical result.
pub fn exact_order_invariance(sequences: usize, max_len: usize, max_bits: u64, perms: usize, seed: u64) -> bool {
    use rayon::prelude::*;
    (0..sequences).into_par_iter().all(|i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let len = rng.gen_range(1..=max_len);
        let mut v: Vec<Rational> = (0..len).map(|_| random_rational(&mut rng, max_bits)).collect();
        let first = sum_exact(&v);
        (1..perms).all(|_| {
            v.shuffle(&mut rng);
            sum_exact(&v).identical(&first)
        })
    })
}
