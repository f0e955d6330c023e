//! Fault-injection campaign for the dual-modular checker.

use super::{meta, Experiment, Record, Table};
use crate::config::BenchConfig;
use crate::error::Result;
use crate::float_emu::OpKind;
use crate::integrity::{dmr_check, inject_fault, residues, M1, M2};
use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub phase: &'static str,
    pub kind: OpKind,
    pub bits_flipped: usize,
    pub error_mod_m1: u64,
    pub error_mod_m2: u64,
    pub detected: bool,
    /// Width of the corrupted result.
    pub result_bits: u64,
    pub error: f64,
}

fn operand(rng: &mut impl Rng, bits: u64) -> BigInt {
    let limbs: Vec<u32> = (0..bits.div_ceil(32)).map(|_| rng.gen()).collect();
    let mut x = BigUint::from_slice(&limbs) >> (limbs.len() as u64 * 32 - bits);
    x.set_bit(bits - 1, true);
    BigInt::from(x)
}

fn trial(phase: &'static str, a: &BigInt, b: &BigInt, kind: OpKind, flips: &[u64]) -> Trial {
    let c = match kind {
        OpKind::Add => a + b,
        OpKind::Mul => a * b,
    };
    let bad = inject_fault(&c, flips);
    let r = dmr_check(a, b, &bad, kind);
    let e = residues(&r.injected_error_magnitude);
    Trial {
        phase,
        kind,
        bits_flipped: flips.len(),
        error_mod_m1: e.r1,
        error_mod_m2: e.r2,
        detected: r.detected,
        result_bits: bad.bits(),
        error: r.injected_error_magnitude.abs().to_f64().unwrap_or(f64::INFINITY),
    }
}

/// Every single-bit flip of a `bits`-wide product.
pub fn single_bit_sweep(bits: u64, seed: u64) -> Vec<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = operand(&mut rng, bits / 2);
    let b = operand(&mut rng, bits - bits / 2);
    (0..bits).into_par_iter().map(|p| trial("single", &a, &b, OpKind::Mul, &[p])).collect()
}

/// Random bursts of `min..=max` flips inside a `window`-bit span of a
/// `bits`-wide result. Each trial has its own stream, so the campaign is
/// reproducible however it is scheduled.
pub fn burst_campaign(cfg: &BenchConfig) -> Vec<Trial> {
    let (bits, window) = (cfg.dmr_bits, cfg.dmr_window);
    (0..cfg.dmr_bursts as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i + 1);
            let kind = if rng.gen() { OpKind::Mul } else { OpKind::Add };
            let (a, b) = match kind {
                OpKind::Mul => (operand(&mut rng, bits / 2), operand(&mut rng, bits - bits / 2)),
                OpKind::Add => (operand(&mut rng, bits - 1), operand(&mut rng, bits - 1)),
            };
            let base = rng.gen_range(0..=bits - window);
            let n = rng.gen_range(cfg.dmr_min_flips..=cfg.dmr_max_flips);
            let flips: Vec<u64> = rand::seq::index::sample(&mut rng, window as usize, n)
                .into_iter()
                .map(|k| base + k as u64)
                .collect();
            trial("burst", &a, &b, kind, &flips)
        })
        .collect()
}

/// An error of exactly `M1 M2`, which both fields see as zero.
pub fn collision(seed: u64) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (operand(&mut rng, 64), operand(&mut rng, 64));
    let c = &a * &b;
    let bad = &c + BigInt::from(M1) * M2;
    let r = dmr_check(&a, &b, &bad, OpKind::Mul);
    Trial {
        phase: "collision",
        kind: OpKind::Mul,
        bits_flipped: (&c ^ &bad).magnitude().count_ones() as usize,
        error_mod_m1: 0,
        error_mod_m2: 0,
        detected: r.detected,
        result_bits: bad.bits(),
        error: r.injected_error_magnitude.to_f64().unwrap_or(f64::INFINITY),
    }
}

pub fn run(cfg: &BenchConfig) -> Result<Table> {
    let single = single_bit_sweep(cfg.dmr_bits, cfg.seed);
    let bursts = burst_campaign(cfg);
    let coll = collision(cfg.seed);
    let single_missed = single.iter().filter(|t| !t.detected).count();
    let burst_missed = bursts.iter().filter(|t| !t.detected).count();
    let burst_bad = bursts.iter().filter(|t| !t.detected && (t.error_mod_m1, t.error_mod_m2) != (0, 0)).count();
    let summary = vec![
        format!("single-bit: {} of {} detected", single.len() - single_missed, single.len()),
        format!("bursts: {burst_missed} undetected of {}, {burst_bad} of those with a nonzero residue", bursts.len()),
        format!("M1*M2 collision detected: {}", coll.detected),
    ];
    let records = single
        .iter()
        .chain(&bursts)
        .chain(std::iter::once(&coll))
        .enumerate()
        .map(|(i, t)| {
            Record::new("exact", i as u64, t.error, t.result_bits).with([
                t.phase.to_string(),
                i.to_string(),
                match t.kind {
                    OpKind::Add => "add",
                    OpKind::Mul => "mul",
                }
                .to_string(),
                t.bits_flipped.to_string(),
                t.error_mod_m1.to_string(),
                t.error_mod_m2.to_string(),
                t.detected.to_string(),
            ])
        })
        .collect();
    Ok(Table {
        experiment: Experiment::Dmr,
        seed: cfg.seed,
        metadata: meta(&[
            ("m1", M1.to_string()),
            ("m2", M2.to_string()),
            ("bits", cfg.dmr_bits.to_string()),
            ("window", cfg.dmr_window.to_string()),
            ("flips", format!("{}..{}", cfg.dmr_min_flips, cfg.dmr_max_flips)),
        ]),
        extra_columns: vec!["phase", "trial", "kind", "bits_flipped", "error_mod_m1", "error_mod_m2", "detected"],
        records,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_campaign() {
        let cfg = BenchConfig {
            dmr_bits: 128,
            dmr_bursts: 500,
            ..BenchConfig::default()
        };
        let t = run(&cfg).unwrap();
        assert_eq!(t.records.len(), 128 + 500 + 1);
        let single = single_bit_sweep(128, 1);
        assert!(single.iter().all(|t| t.detected && t.bits_flipped == 1));
        let bursts = burst_campaign(&cfg);
        assert!(bursts.iter().all(|t| t.detected || (t.error_mod_m1, t.error_mod_m2) == (0, 0)));
        assert!(bursts.iter().all(|t| (2..=8).contains(&t.bits_flipped)));
        assert!(!collision(1).detected);
        assert_eq!(bursts, burst_campaign(&cfg));
    }
}
