//! Semantic drift: `h <- W h` with a near-orthogonal dyadic `W`.

use super::{first_above, float_error, meta, opt, regimes, Experiment, Record, Table};
use crate::config::BenchConfig;
use crate::error::{HaloError, Result};
use crate::exact::Rational;
use crate::float_emu::{round_to, Regime};
use crate::net::RationalTensor;
use crate::scalar::{matvec, Bf16, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest singular value of a row-major square matrix, by power
/// iteration on `W^T W` in double precision.
pub fn spectral_norm_estimate(w: &[f64], n: usize) -> f64 {
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut sigma = 0.0;
    for _ in 0..200 {
        let wv: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w[i * n + j] * v[j]).sum()).collect();
        let wtwv: Vec<f64> = (0..n).map(|j| (0..n).map(|i| w[i * n + j] * wv[i]).sum()).collect();
        let norm = wtwv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        sigma = norm.sqrt();
        v = wtwv.iter().map(|x| x / norm).collect();
    }
    sigma
}

/// A seeded orthogonal matrix (Gram-Schmidt on uniform entries), rescaled
/// to unit spectral norm and rounded entrywise to bfloat16, so every regime
/// holds exactly the same dyadic `W`.
pub fn drift_matrix(n: usize, seed: u64) -> Result<(Vec<Rational>, f64)> {
    if n < 2 {
        return Err(HaloError::InvalidParameter("drift dimension must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(x, a)| *x -= d * a);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            q.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    let mut w: Vec<f64> = q.concat();
    let mut sigma = 1.0;
    for _ in 0..8 {
        w = w.iter().map(|x| round_to(x / sigma, Regime::Bf16)).collect();
        sigma = spectral_norm_estimate(&w, n);
        if (0.99..=1.01).contains(&sigma) {
            break;
        }
    }
    let w = w
        .iter()
        .map(|&x| Rational::from_f64_exact(x))
        .collect::<Result<Vec<_>>>()?;
    Ok((w, sigma))
}

pub fn start_vector(n: usize, seed: u64) -> Result<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0001);
    (0..n)
        .map(|_| Rational::from_f64_exact(round_to(rng.gen_range(-1.0..1.0), Regime::Bf16)))
        .collect()
}

fn float_run<S: Scalar>(w: &[Rational], h0: &[Rational], steps: usize) -> Vec<Vec<f64>> {
    let w: Vec<S> = w.iter().map(S::from_rational).collect();
    let mut h: Vec<S> = h0.iter().map(S::from_rational).collect();
    let mut out = vec![h.iter().map(S::to_f64).collect()];
    for _ in 0..steps {
        h = matvec(&w, &h);
        out.push(h.iter().map(S::to_f64).collect());
    }
    out
}

fn max_error(x: &[f64], exact: &[Rational]) -> f64 {
    x.iter()
        .zip(exact)
        .map(|(v, e)| float_error(*v, e))
        .fold(0.0, |m, e| if e.is_nan() || e > m { e } else { m })
}

pub fn run(cfg: &BenchConfig) -> Result<Table> {
    let (n, steps) = (cfg.drift_dim, cfg.drift_steps);
    let (w, sigma) = drift_matrix(n, cfg.seed)?;
    let h0 = start_vector(n, cfg.seed)?;
    let wt = RationalTensor::new(n, n, w.clone())?;
    let mut h = RationalTensor::new(n, 1, h0.clone())?;
    let mut exact = vec![h.data().to_vec()];
    for _ in 0..steps {
        h = wt.matmul(&h)?;
        exact.push(h.data().to_vec());
    }

    let mut records = Vec::new();
    let mut summary = vec![format!("estimated spectral norm of W: {sigma:.6}")];
    for regime in regimes(cfg) {
        let (errors, bits): (Vec<f64>, Vec<u64>) = match regime {
            Regime::Exact => (vec![0.0; exact.len()], exact.iter().map(|v| v.iter().map(Rational::total_bits).max().unwrap_or(0)).collect()),
            _ => {
                let traj = match regime {
                    Regime::Bf16 => float_run::<Bf16>(&w, &h0, steps),
                    Regime::Fp32 => float_run::<f32>(&w, &h0, steps),
                    _ => float_run::<f64>(&w, &h0, steps),
                };
                (traj.iter().zip(&exact).map(|(x, e)| max_error(x, e)).collect(), vec![0; traj.len()])
            }
        };
        let cross = first_above(&errors, cfg.drift_threshold);
        summary.push(format!(
            "{}: first step with error above {}: {}; final error {:e}",
            regime.name(),
            cfg.drift_threshold,
            cross.map_or("none".to_string(), |s| s.to_string()),
            errors.last().copied().unwrap_or(0.0)
        ));
        for (t, (e, b)) in errors.into_iter().zip(bits).enumerate() {
            records.push(Record::new(regime.name(), t as u64, e, b).with([opt(cross)]));
        }
    }
    Ok(Table {
        experiment: Experiment::Drift,
        seed: cfg.seed,
        metadata: meta(&[
            ("dim", n.to_string()),
            ("steps", steps.to_string()),
            ("threshold", cfg.drift_threshold.to_string()),
            ("sigma_max", format!("{sigma:.6}")),
        ]),
        extra_columns: vec!["first_cross"],
        records,
        summary,
    })
}

/// First step past the threshold, per regime.
pub fn first_crossings(table: &Table) -> Vec<(String, Option<usize>)> {
    let mut out: Vec<(String, Option<usize>)> = Vec::new();
    for r in &table.records {
        if out.last().map(|(n, _)| n != &r.regime).unwrap_or(true) {
            out.push((r.regime.clone(), r.extras[0].parse().ok()));
        }
    }
    out
}
