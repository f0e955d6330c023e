//! Gradient fidelity: the depth-`L` derivative of the logistic chain,
//! `prod_{t<L} r (1 - 2 x_t)`, in each regime.

use super::logistic::exact_trajectory;
use super::{float, meta, rational, regimes, Experiment, Record, Table};
use crate::config::BenchConfig;
use crate::error::Result;
use crate::exact::Rational;
use crate::float_emu::Regime;
use crate::scalar::{logistic_derivative, logistic_step, Bf16, Scalar};
use num_traits::{One, Zero};

/// Running products `P_1 ..= P_depth`, each factor taken on the regime's
/// own trajectory.
fn float_products<S: Scalar>(r: &Rational, x0: &Rational, depth: usize) -> Vec<f64> {
    let r = S::from_rational(r);
    let mut x = S::from_rational(x0);
    let mut p = S::one();
    let mut out = Vec::with_capacity(depth);
    for _ in 0..depth {
        p = p * logistic_derivative(&r, &x);
        x = logistic_step(&r, &x);
        out.push(p.to_f64());
    }
    out
}

pub fn exact_products(cfg: &BenchConfig) -> Result<Vec<Rational>> {
    let r = &cfg.logistic_r;
    let xs = exact_trajectory(
        r,
        &cfg.logistic_x0,
        cfg.gradient_depth,
        cfg.logistic_ring_k,
        cfg.logistic_ring_dmax,
        &cfg.ring_eps,
    )?;
    let mut p = Rational::one();
    Ok(xs[..cfg.gradient_depth]
        .iter()
        .map(|x| {
            p = (&p * &logistic_derivative(r, x)).simplify();
            p.clone()
        })
        .collect())
}

/// `|p - exact| / |exact|`, or the absolute deviation when `exact` is 0.
pub fn relative_deviation(p: f64, exact: &Rational) -> f64 {
    let Ok(q) = Rational::from_f64_exact(p) else {
        return if p.is_nan() { f64::NAN } else { f64::INFINITY };
    };
    let diff = (&q - exact).abs();
    if exact.is_zero() {
        diff.to_f64()
    } else {
        diff.checked_div(&exact.abs()).expect("nonzero").to_f64()
    }
}

pub fn run(cfg: &BenchConfig) -> Result<Table> {
    let depth = cfg.gradient_depth;
    let exact = exact_products(cfg)?;
    let (r, x0) = (&cfg.logistic_r, &cfg.logistic_x0);
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for regime in regimes(cfg) {
        let rows: Vec<(f64, u64, String)> = match regime {
            Regime::Exact => exact.iter().map(|p| (0.0, p.total_bits(), float(p.to_f64()))).collect(),
            _ => {
                let ps = match regime {
                    Regime::Bf16 => float_products::<Bf16>(r, x0, depth),
                    Regime::Fp32 => float_products::<f32>(r, x0, depth),
                    _ => float_products::<f64>(r, x0, depth),
                };
                ps.iter().zip(&exact).map(|(p, e)| (relative_deviation(*p, e), 0, float(*p))).collect()
            }
        };
        let first_wrong = rows.iter().position(|(e, _, _)| !(*e <= 1.0)).map(|i| i + 1);
        summary.push(format!(
            "{}: first depth with relative deviation above 1: {}",
            regime.name(),
            first_wrong.map_or("none".to_string(), |d| d.to_string())
        ));
        for (i, (e, b, v)) in rows.into_iter().enumerate() {
            records.push(Record::new(regime.name(), i as u64 + 1, e, b).with([v]));
        }
    }
    Ok(Table {
        experiment: Experiment::Gradient,
        seed: cfg.seed,
        metadata: meta(&[
            ("r", rational(r)),
            ("x0", rational(x0)),
            ("depth", depth.to_string()),
            ("ring.k", cfg.logistic_ring_k.to_string()),
            ("ring.dmax", cfg.logistic_ring_dmax.to_string()),
        ]),
        extra_columns: vec!["product"],
        records,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_one_agrees_to_regime_precision() {
        let cfg = BenchConfig {
            gradient_depth: 1,
            ..BenchConfig::default()
        };
        let t = run(&cfg).unwrap();
        // r (1 - 2/5) = 12/5
        for r in &t.records {
            let tol = match r.regime.as_str() {
                "bf16" => 1.0 / 256.0,
                "fp32" => 1e-7,
                _ => 0.0,
            };
            assert!(r.error <= tol, "{} {}", r.regime, r.error);
        }
        assert_eq!(exact_products(&cfg).unwrap()[0], Rational::ratio(12, 5));
    }

    #[test]
    fn deviation_helper() {
        assert_eq!(relative_deviation(3.0, &Rational::ratio(2, 1)), 0.5);
        assert_eq!(relative_deviation(0.25, &Rational::zero()), 0.25);
        assert!(relative_deviation(f64::INFINITY, &Rational::one()).is_infinite());
    }
}
