use crate::error::{HaloError, Result};
use crate::exact::{add_planned, AddPlan, BitReport, Rational};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::sync::LazyLock;

static ONE: LazyLock<BigInt> = LazyLock::new(BigInt::one);
use rayon::prelude::*;

/// Dense row-major matrix of exact rationals.
///
/// `==` compares shape and values; [`RationalTensor::identical`] compares
/// representations.
#[derive(Clone, Debug)]
pub struct RationalTensor {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
    max_bits: u64,
}

impl RationalTensor {
    pub fn new(rows: usize, cols: usize, data: Vec<Rational>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(HaloError::Shape(format!(
                "{} entries for a {rows}x{cols} tensor",
                data.len()
            )));
        }
        let max_bits = data.iter().map(Rational::total_bits).max().unwrap_or(0);
        Ok(Self {
            rows,
            cols,
            data,
            max_bits,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let data = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Self::new(rows, cols, data).expect("length matches by construction")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| Rational::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { Rational::one() } else { Rational::zero() })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Rational] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Rational> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Largest `total_bits` over the entries.
    pub fn max_bits(&self) -> u64 {
        self.max_bits
    }

    /// Componentwise maximum of the entries' bit reports.
    pub fn bit_report(&self) -> BitReport {
        self.data
            .iter()
            .map(Rational::bit_report)
            .fold(BitReport::default(), BitReport::max)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone())
    }

    pub fn map(&self, f: impl Fn(&Rational) -> Rational + Sync + Send) -> Self {
        let data = self.data.par_iter().map(f).collect();
        Self::new(self.rows, self.cols, data).expect("shape preserved")
    }

    pub fn try_map(&self, f: impl Fn(&Rational) -> Result<Rational> + Sync + Send) -> Result<Self> {
        let data = self.data.par_iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(self.rows, self.cols, data)
    }

    pub fn simplify(&self) -> Self {
        self.map(Rational::simplify)
    }

    /// Exact product; nothing is simplified.
    ///
    /// Entries are computed in parallel; each is an exact sum, so the result
    /// does not depend on scheduling.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(HaloError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, m) = (self.rows, other.cols);
        if let (Some(da), Some(db)) = (self.shared_denominator(), other.shared_denominator()) {
            // Same representation as the general path, without recomputing
            // the denominator product for every term.
            let den = da * db;
            let data = (0..n * m)
                .into_par_iter()
                .map(|i| {
                    let (r, c) = (i / m, i % m);
                    let num: BigInt = (0..self.cols)
                        .map(|k| self.get(r, k).numer() * other.get(k, c).numer())
                        .sum();
                    if num.is_zero() {
                        Rational::zero()
                    } else {
                        Rational::from_parts(num, den.clone())
                    }
                })
                .collect();
            return Self::new(n, m, data);
        }
        let data = (0..n * m)
            .into_par_iter()
            .map(|i| {
                let (r, c) = (i / m, i % m);
                (0..self.cols).fold(Rational::zero(), |acc, k| {
                    acc + self.get(r, k) * other.get(k, c)
                })
            })
            .collect();
        Self::new(n, m, data)
    }

    /// The denominator every nonzero entry carries, if there is one.
    /// Zero entries are ignored; an all-zero tensor reports 1.
    pub fn shared_denominator(&self) -> Option<&BigInt> {
        let mut nonzero = self.data.iter().filter(|q| !q.is_zero());
        let Some(first) = nonzero.next() else {
            return Some(&ONE);
        };
        let d = first.denom();
        nonzero.all(|q| q.denom() == d).then_some(d)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(HaloError::Shape(format!(
                "cannot add {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let data = match (self.shared_denominator(), other.shared_denominator()) {
            (Some(da), Some(db)) => {
                let plan = AddPlan::new(da, db);
                self.data
                    .par_iter()
                    .zip(&other.data)
                    .map(|(a, b)| add_planned(&plan, a, b))
                    .collect()
            }
            _ => self.data.par_iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        };
        Self::new(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.map(|x| -x))
    }

    /// Entry-for-entry identical numerators and denominators.
    pub fn identical(&self, other: &Self) -> bool {
        self.shape() == other.shape() && self.data.iter().zip(&other.data).all(|(a, b)| a.identical(b))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(Rational::to_f64).collect()
    }
}

impl PartialEq for RationalTensor {
    fn eq(&self, other: &Self) -> bool {
        self.shape() == other.shape() && self.data == other.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dyadic(rng: &mut impl Rng) -> Rational {
        Rational::from_parts(BigInt::from(rng.gen_range(-40_000i64..40_000)), BigInt::one() << rng.gen_range(0u32..20))
    }

    #[test]
    fn shared_denominator_path_is_representation_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d1 = BigInt::from(3 * 1024);
        let d2 = BigInt::from(7 * 5);
        let mut entry = |d: &BigInt| {
            let n: i64 = rng.gen_range(-3..4);
            if n == 0 { Rational::zero() } else { Rational::from_parts(BigInt::from(n), d.clone()) }
        };
        let a = RationalTensor::from_fn(5, 6, |_, _| entry(&d1));
        let b = RationalTensor::from_fn(6, 4, |_, _| entry(&d2));
        assert_eq!(a.shared_denominator(), Some(&d1));
        let got = a.matmul(&b).unwrap();
        for r in 0..5 {
            for c in 0..4 {
                let want = (0..6).fold(Rational::zero(), |acc, k| acc + a.get(r, k) * b.get(k, c));
                assert!(got.get(r, c).identical(&want), "{r} {c}");
            }
        }
        let mixed = RationalTensor::new(1, 2, vec![Rational::ratio(1, 2), Rational::ratio(1, 3)]).unwrap();
        assert_eq!(mixed.shared_denominator(), None);
        let c = RationalTensor::from_fn(6, 4, |_, _| entry(&(&d1 * 5)));
        for (x, y) in [(&b, &c), (&c, &b), (&b, &b)] {
            let sum = x.add(y).unwrap();
            for i in 0..24 {
                assert!(sum.data()[i].identical(&(&x.data()[i] + &y.data()[i])));
            }
        }
        assert_eq!(RationalTensor::zeros(2, 2).shared_denominator(), Some(&BigInt::one()));
    }

    fn naive(a: &RationalTensor, b: &RationalTensor) -> Vec<Rational> {
        let mut out = Vec::new();
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = Rational::zero();
                for k in 0..a.cols() {
                    let p = Rational::from_parts(
                        a.get(i, k).numer() * b.get(k, j).numer(),
                        a.get(i, k).denom() * b.get(k, j).denom(),
                    );
                    s = Rational::from_parts(s.numer() * p.denom() + p.numer() * s.denom(), s.denom() * p.denom());
                }
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn identity_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = RationalTensor::from_fn(3, 5, |_, _| dyadic(&mut rng));
        let p = a.matmul(&RationalTensor::identity(5)).unwrap();
        assert!(p.identical(&a));
    }

    #[test]
    fn scalar_product() {
        let a = RationalTensor::new(1, 1, vec![Rational::ratio(1, 2)]).unwrap();
        let b = RationalTensor::new(1, 1, vec![Rational::ratio(2, 3)]).unwrap();
        let p = a.matmul(&b).unwrap().simplify();
        assert!(p.get(0, 0).identical(&Rational::ratio(1, 3)));
    }

    #[test]
    fn matches_naive_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = RationalTensor::from_fn(8, 8, |_, _| dyadic(&mut rng));
            let b = RationalTensor::from_fn(8, 8, |_, _| dyadic(&mut rng));
            let got = a.matmul(&b).unwrap();
            for (g, w) in got.data().iter().zip(naive(&a, &b)) {
                assert_eq!(*g, w);
            }
        }
    }

    #[test]
    fn shape_errors() {
        let a = RationalTensor::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(HaloError::Shape(_))));
        assert!(RationalTensor::new(2, 2, vec![Rational::zero()]).is_err());
        assert!(a.add(&RationalTensor::zeros(3, 2)).is_err());
    }

    #[test]
    fn max_bits_tracks_entries() {
        let t = RationalTensor::new(1, 2, vec![Rational::ratio(1, 2), Rational::ratio(255, 256)]).unwrap();
        assert_eq!(t.max_bits(), 8 + 9);
        assert_eq!(t.bit_report().den_bits, 9);
    }
}
