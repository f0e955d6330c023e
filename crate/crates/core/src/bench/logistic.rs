//! The logistic map `x <- r x (1 - x)` in each regime, measured against the
//! exact trajectory.

use super::{first_above, float, float_error, meta, opt, rational, regimes, Experiment, Record, Table};
use crate::config::BenchConfig;
use crate::error::{HaloError, Result};
use crate::exact::{rational_approx, Rational};
use crate::float_emu::Regime;
use crate::scalar::{logistic_step, Bf16, Scalar};

/// Exact trajectory `x_0 ..= x_steps`.
///
/// The exact iterate doubles its width every step, so every `ring_k` steps
/// it is snapped to the nearest fraction with denominator at most
/// `ring_dmax` within `eps` and simplified. The result is still a rational
/// trajectory of the map, computed without rounding in between.
pub fn exact_trajectory(
    r: &Rational,
    x0: &Rational,
    steps: usize,
    ring_k: usize,
    ring_dmax: u64,
    eps: &Rational,
) -> Result<Vec<Rational>> {
    if ring_k == 0 {
        return Err(HaloError::InvalidParameter("ring interval must be at least 1".into()));
    }
    let mut xs = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    xs.push(x.clone());
    for t in 1..=steps {
        x = logistic_step(r, &x);
        if t % ring_k == 0 {
            x = rational_approx(&x, eps, ring_dmax)?.value.simplify();
        }
        xs.push(x.clone());
    }
    Ok(xs)
}

/// Float trajectory in the regime of `S`.
pub fn float_trajectory<S: Scalar>(r: &Rational, x0: &Rational, steps: usize) -> Vec<f64> {
    let r = S::from_rational(r);
    let mut x = S::from_rational(x0);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x.to_f64());
    for _ in 0..steps {
        x = logistic_step(&r, &x);
        out.push(x.to_f64());
    }
    out
}

pub fn float_trajectory_in(regime: Regime, r: &Rational, x0: &Rational, steps: usize) -> Vec<f64> {
    match regime {
        Regime::Bf16 => float_trajectory::<Bf16>(r, x0, steps),
        Regime::Fp32 => float_trajectory::<f32>(r, x0, steps),
        Regime::Fp64 | Regime::Exact => float_trajectory::<f64>(r, x0, steps),
    }
}

pub struct Survival {
    pub regime: Regime,
    pub step: Option<usize>,
}

pub fn run(cfg: &BenchConfig) -> Result<Table> {
    let (r, x0, steps) = (&cfg.logistic_r, &cfg.logistic_x0, cfg.logistic_steps);
    let exact = exact_trajectory(r, x0, steps, cfg.logistic_ring_k, cfg.logistic_ring_dmax, &cfg.ring_eps)?;
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for regime in regimes(cfg) {
        let (errors, values, bits): (Vec<f64>, Vec<String>, Vec<u64>) = if regime == Regime::Exact {
            (
                vec![0.0; exact.len()],
                exact.iter().map(rational).collect(),
                exact.iter().map(Rational::total_bits).collect(),
            )
        } else {
            let xs = float_trajectory_in(regime, r, x0, steps);
            (
                xs.iter().zip(&exact).map(|(x, e)| float_error(*x, e)).collect(),
                xs.iter().map(|x| float(*x)).collect(),
                vec![0; xs.len()],
            )
        };
        let survival = first_above(&errors, cfg.survival_threshold);
        summary.push(format!(
            "{}: first step with error above {}: {}",
            regime.name(),
            cfg.survival_threshold,
            survival.map_or("none".to_string(), |s| s.to_string())
        ));
        for (t, ((e, v), b)) in errors.iter().zip(values).zip(bits).enumerate() {
            records.push(Record::new(regime.name(), t as u64, *e, b).with([v, opt(survival)]));
        }
    }
    Ok(Table {
        experiment: Experiment::Logistic,
        seed: cfg.seed,
        metadata: meta(&[
            ("r", rational(r)),
            ("x0", rational(x0)),
            ("survival", cfg.survival_threshold.to_string()),
            ("ring.k", cfg.logistic_ring_k.to_string()),
            ("ring.dmax", cfg.logistic_ring_dmax.to_string()),
            ("ring.eps", rational(&cfg.ring_eps)),
        ]),
        extra_columns: vec!["value", "survival_step"],
        records,
        summary,
    })
}

/// Survival step per configured float regime.
pub fn survival_steps(table: &Table) -> Vec<(String, Option<usize>)> {
    let mut out: Vec<(String, Option<usize>)> = Vec::new();
    let col = table
        .extra_columns
        .iter()
        .position(|c| *c == "survival_step")
        .expect("logistic table");
    for r in &table.records {
        if out.last().map(|(n, _)| n != &r.regime).unwrap_or(true) {
            out.push((r.regime.clone(), r.extras[col].parse().ok()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_iteration() {
        let xs = exact_trajectory(&Rational::ratio(4, 1), &Rational::ratio(1, 5), 2, 8, 1 << 32, &Rational::ratio(1, 1 << 40))
            .unwrap();
        assert_eq!(xs[1], Rational::ratio(16, 25));
        assert_eq!(xs[2], Rational::ratio(576, 625));
    }

    #[test]
    fn ring_keeps_the_exact_path_small_and_close() {
        let r = Rational::ratio(4, 1);
        let x0 = Rational::ratio(1, 5);
        let eps = Rational::ratio(1, 1 << 50);
        let shadow = exact_trajectory(&r, &x0, 16, 8, 1 << 32, &eps).unwrap();
        let truth = exact_trajectory(&r, &x0, 16, 1000, 1 << 32, &eps).unwrap();
        assert!(shadow.iter().all(|x| x.total_bits() < 16_000));
        // the only deviation is the snap at step 8, doubled each step after it
        assert!((&shadow[16] - &truth[16]).abs() < Rational::ratio(1, 1 << 30));
        assert!(shadow[7].identical(&truth[7]));
    }

    #[test]
    fn short_run_table() {
        let cfg = BenchConfig {
            logistic_steps: 60,
            ..BenchConfig::default()
        };
        let t = run(&cfg).unwrap();
        assert_eq!(t.records.len(), 3 * 61);
        assert!(t.records.iter().filter(|r| r.regime == "exact").all(|r| r.error == 0.0 && r.bits > 0));
        let s = survival_steps(&t);
        assert_eq!(s[0].0, "bf16");
        let bf16 = s[0].1.unwrap();
        let fp32 = s[1].1.unwrap();
        assert!(bf16 < fp32, "{bf16} {fp32}");
        assert_eq!(s[2].1, None);
    }
}
