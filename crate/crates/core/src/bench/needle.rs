//! Needle retrieval: push a token through `L` multiplications by `A`, pull
//! it back with the exact inverse, and measure what was lost.

use super::{abs_diff, meta, regimes, Experiment, Record, Table};
use crate::config::BenchConfig;
use crate::error::{HaloError, Result};
use crate::exact::Rational;
use crate::float_emu::{round_to, Regime};
use crate::net::RationalTensor;
use crate::scalar::{Bf16, Scalar};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `A = (signed block permutation) x M` with `M` a 2x2 dyadic matrix of
/// determinant 1 and trace in `(-2, 2)`. `M` is elliptic, so orbits stay
/// bounded, and its inverse `[[d, -b], [-c, a]]` is dyadic too.
#[derive(Clone, Debug, PartialEq)]
pub struct NeedleMatrix {
    /// `[a, b, c, d]`.
    pub m: [Rational; 4],
    /// Block `i` lands on block `perm[i]`, multiplied by `sign[i]`.
    pub perm: Vec<usize>,
    pub sign: Vec<i8>,
}

impl NeedleMatrix {
    pub fn random(dim: usize, rng: &mut impl Rng) -> Result<Self> {
        if dim < 2 || dim % 2 != 0 {
            return Err(HaloError::InvalidParameter("needle dimension must be even and at least 2".into()));
        }
        let m = loop {
            let a = Rational::ratio(rng.gen_range(-6..=6), 4);
            let d = Rational::ratio(rng.gen_range(-6..=6), 4);
            let b = Rational::ratio(if rng.gen() { 1 } else { -1 }, 1 << rng.gen_range(0..2));
            let c = (&(&a * &d) - &Rational::one()).checked_div(&b)?.simplify();
            let tr = (&a + &d).abs();
            if tr < Rational::ratio(2, 1) && c.abs() <= Rational::ratio(4, 1) && !c.is_zero() {
                break [a, b, c, d];
            }
        };
        let mut perm: Vec<usize> = (0..dim / 2).collect();
        perm.shuffle(rng);
        let sign = (0..dim / 2).map(|_| if rng.gen() { 1 } else { -1 }).collect();
        Ok(Self { m, perm, sign })
    }

    pub fn dim(&self) -> usize {
        2 * self.perm.len()
    }

    fn apply_with<S: Scalar>(&self, m: &[S; 4], h: &[S], inverse: bool) -> Vec<S> {
        let mut out = vec![S::zero(); h.len()];
        for (i, (&p, &s)) in self.perm.iter().zip(&self.sign).enumerate() {
            let (src, dst) = if inverse { (p, i) } else { (i, p) };
            let (x, y) = (h[2 * src].clone(), h[2 * src + 1].clone());
            let mut u = m[0].clone() * x.clone() + m[1].clone() * y.clone();
            let mut v = m[2].clone() * x + m[3].clone() * y;
            if s < 0 {
                u = -u;
                v = -v;
            }
            out[2 * dst] = u;
            out[2 * dst + 1] = v;
        }
        out
    }

    /// `A h`, computed in the regime of `S`.
    pub fn apply<S: Scalar>(&self, h: &[S]) -> Vec<S> {
        let m = [0, 1, 2, 3].map(|i| S::from_rational(&self.m[i]));
        self.apply_with(&m, h, false)
    }

    /// `A^{-1} h`, exactly.
    pub fn apply_inverse(&self, h: &[Rational]) -> Vec<Rational> {
        let [a, b, c, d] = &self.m;
        let inv = [d.clone(), -b, -c, a.clone()];
        self.apply_with(&inv, h, true)
    }

    pub fn dense(&self) -> RationalTensor {
        let n = self.dim();
        let mut t = vec![Rational::zero(); n * n];
        for (i, (&p, &s)) in self.perm.iter().zip(&self.sign).enumerate() {
            for (k, q) in self.m.iter().enumerate() {
                let (r, c) = (2 * p + k / 2, 2 * i + k % 2);
                t[r * n + c] = if s < 0 { -q } else { q.clone() };
            }
        }
        RationalTensor::new(n, n, t).expect("square")
    }
}

/// Exact determinant by fraction-free (Bareiss) elimination on the matrix
/// scaled to integers.
pub fn determinant(t: &RationalTensor) -> Rational {
    let n = t.rows();
    assert_eq!(n, t.cols(), "determinant of a non-square matrix");
    if n == 0 {
        return Rational::one();
    }
    let l = t.data().iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let mut a: Vec<Vec<BigInt>> = (0..n)
        .map(|r| (0..n).map(|c| { let q = t.get(r, c); q.numer() * (&l / q.denom()) }).collect())
        .collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return Rational::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let num = sign * &a[n - 1][n - 1];
    Rational::from_parts(num, num_traits::pow(l, n)).simplify()
}

/// States `A^t h0` at each checkpoint `t`, in the regime of `S`. A state
/// is left empty if the regime overflowed before reaching it.
fn forward<S: Scalar>(a: &NeedleMatrix, h0: &[Rational], checkpoints: &[usize]) -> Vec<Vec<Rational>> {
    let last = checkpoints.iter().copied().max().unwrap_or(0);
    let mut out = vec![Vec::new(); checkpoints.len()];
    let mut h: Vec<S> = h0.iter().map(S::from_rational).collect();
    for t in 0..=last {
        if t > 0 {
            h = a.apply(&h);
        }
        if S::REGIME != Regime::Exact && h.iter().any(|x| !x.to_f64().is_finite()) {
            break;
        }
        for (slot, _) in out.iter_mut().zip(checkpoints).filter(|(_, &c)| c == t) {
            *slot = h.iter().map(S::to_rational).collect();
        }
    }
    out
}

/// Max-norm error of retrieving `h0` from `h_l` by applying `A^{-1}`
/// exactly `l` times; infinite if the regime overflowed first.
pub fn retrieval_error(a: &NeedleMatrix, h_l: &[Rational], l: usize, h0: &[Rational]) -> f64 {
    if h_l.is_empty() {
        return f64::INFINITY;
    }
    let mut h = h_l.to_vec();
    for _ in 0..l {
        h = a.apply_inverse(&h);
    }
    h.iter().zip(h0).map(|(x, y)| abs_diff(x, y)).fold(0.0, f64::max)
}

pub fn setup(cfg: &BenchConfig) -> Result<(NeedleMatrix, Vec<Rational>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for attempt in 0.. {
        let a = NeedleMatrix::random(cfg.needle_dim, &mut rng)?;
        if determinant(&a.dense()).is_zero() {
            continue;
        }
        let h0 = (0..cfg.needle_dim)
            .map(|_| Rational::from_f64_exact(round_to(rng.gen_range(-1.0..1.0), Regime::Bf16)))
            .collect::<Result<Vec<_>>>()?;
        return Ok((a, h0, attempt));
    }
    unreachable!()
}

pub fn run(cfg: &BenchConfig) -> Result<Table> {
    let (a, h0, reseeds) = setup(cfg)?;
    let mut lengths = cfg.needle_lengths.clone();
    lengths.sort_unstable();
    lengths.dedup();
    let det = determinant(&a.dense());
    let mut records = Vec::new();
    let mut summary = vec![format!("det A = {det}, reseeds {reseeds}")];
    for regime in regimes(cfg) {
        let states = match regime {
            Regime::Exact => forward::<Rational>(&a, &h0, &lengths),
            Regime::Bf16 => forward::<Bf16>(&a, &h0, &lengths),
            Regime::Fp32 => forward::<f32>(&a, &h0, &lengths),
            Regime::Fp64 => forward::<f64>(&a, &h0, &lengths),
        };
        let errors: Vec<f64> = {
            use rayon::prelude::*;
            lengths
                .par_iter()
                .zip(states.par_iter())
                .map(|(&l, h)| retrieval_error(&a, h, l, &h0))
                .collect()
        };
        for ((&l, e), h) in lengths.iter().zip(&errors).zip(&states) {
            let bits = if regime == Regime::Exact { h.iter().map(Rational::total_bits).max().unwrap_or(0) } else { 0 };
            records.push(Record::new(regime.name(), l as u64, *e, bits));
        }
        summary.push(format!(
            "{}: retrieval error {}",
            regime.name(),
            lengths.iter().zip(&errors).map(|(l, e)| format!("L={l}: {e:e}")).collect::<Vec<_>>().join(", ")
        ));
    }
    Ok(Table {
        experiment: Experiment::Needle,
        seed: cfg.seed,
        metadata: meta(&[
            ("dim", cfg.needle_dim.to_string()),
            ("det", det.to_string()),
            ("reseeds", reseeds.to_string()),
            ("exact_ring", "off".into()),
        ]),
        extra_columns: vec![],
        records,
        summary,
    })
}
