//! Width scaling: sequential summation of `d` random bfloat16 values.

use super::{meta, regimes, Experiment, Record, Table};
use crate::config::BenchConfig;
use crate::error::Result;
use crate::exact::{sum_exact, Rational};
use crate::float_emu::{round_to, Regime};
use crate::scalar::{sum_sequential, Bf16, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// `d` values drawn uniformly from `[-1, 1)` and rounded to bfloat16.
pub fn draw(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d).map(|_| round_to(rng.gen_range(-1.0..1.0), Regime::Bf16)).collect()
}

fn sum_in<S: Scalar>(values: &[f64]) -> Rational {
    let v: Vec<S> = values.iter().map(|&x| S::from_f64(x)).collect();
    sum_sequential(&v).to_rational()
}

/// `|sequential sum in regime - exact sum|` for one draw.
pub fn summation_error(values: &[f64], regime: Regime) -> f64 {
    let lifted: Vec<Rational> = values.iter().map(|&x| Rational::from_f64_exact(x).expect("finite")).collect();
    let exact = sum_exact(&lifted);
    let got = match regime {
        Regime::Bf16 => sum_in::<Bf16>(values),
        Regime::Fp32 => sum_in::<f32>(values),
        Regime::Fp64 => sum_in::<f64>(values),
        Regime::Exact => sum_exact(&lifted),
    };
    (&got - &exact).abs().to_f64()
}

pub fn run(cfg: &BenchConfig) -> Result<Table> {
    let seeds: Vec<u64> = (0..cfg.scale_seeds as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let mut widths = cfg.scale_widths.clone();
    widths.sort_unstable();
    widths.dedup();
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for regime in regimes(cfg) {
        let mut line = Vec::new();
        for &d in &widths {
            let errs: Vec<f64> = seeds.par_iter().map(|&s| summation_error(&draw(d, s), regime)).collect();
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            let max = errs.iter().cloned().fold(0.0, f64::max);
            line.push(format!("d={d}: {mean:e}"));
            records.push(Record::new(regime.name(), d as u64, mean, 0).with([super::float(max)]));
        }
        summary.push(format!("{}: mean error {}", regime.name(), line.join(", ")));
    }
    Ok(Table {
        experiment: Experiment::Scale,
        seed: cfg.seed,
        metadata: meta(&[("seeds", cfg.scale_seeds.to_string()), ("values", "uniform[-1,1) as bf16".into())]),
        extra_columns: vec!["max_error"],
        records,
        summary,
    })
}
