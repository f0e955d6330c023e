//! Periodic projection of the state onto a bounded-denominator grid.

use super::tensor::RationalTensor;
use crate::error::{HaloError, Result};
use crate::exact::{rational_approx, Rational};
use num_bigint::BigInt;
use num_traits::One;
use rayon::prelude::*;

/// What the state passes through before it is snapped to the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Denoiser {
    Identity,
    /// Collapse to the nearest double and lift back exactly.
    RoundThroughFloat,
}

impl std::str::FromStr for Denoiser {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "identity" => Ok(Denoiser::Identity),
            "round-through-float" => Ok(Denoiser::RoundThroughFloat),
            other => Err(format!("unknown denoiser {other:?} (expected identity or round-through-float)")),
        }
    }
}

impl std::fmt::Display for Denoiser {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Denoiser::Identity => "identity",
            Denoiser::RoundThroughFloat => "round-through-float",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RingConfig {
    /// Re-grounding interval `K`.
    pub interval: usize,
    /// Largest admissible grid denominator.
    pub d_max: u64,
    pub eps: Rational,
    pub denoiser: Denoiser,
}

impl Default for RingConfig {
    fn default() -> Self {
        Self {
            interval: 50,
            d_max: 1 << 16,
            eps: Rational::from_parts(BigInt::one(), num_traits::pow(BigInt::from(10), 16)),
            denoiser: Denoiser::Identity,
        }
    }
}

impl RingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.interval == 0 {
            return Err(HaloError::InvalidParameter("ring interval must be at least 1".into()));
        }
        if self.d_max == 0 {
            return Err(HaloError::InvalidParameter("ring d_max must be at least 1".into()));
        }
        if !self.eps.is_positive() {
            return Err(HaloError::InvalidParameter("ring eps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RingOutput {
    pub state: RationalTensor,
    /// Entries for which nothing on the grid was within `eps`.
    pub misses: usize,
    /// Bit bound for grid members at this state's magnitude.
    pub b_ring: u64,
}

/// `2 (bits(d_max) + bits(max integer part) + 1)`: no grid member whose
/// integer part is at most `max_int` needs more total bits than this.
pub fn b_ring(d_max: u64, max_int: &BigInt) -> u64 {
    2 * (64 - d_max.leading_zeros() as u64 + max_int.bits() + 1)
}

/// Denoise, snap every entry to the grid, simplify.
pub fn the_ring(h: &RationalTensor, cfg: &RingConfig) -> Result<RingOutput> {
    cfg.validate()?;
    let projected = h
        .data()
        .par_iter()
        .map(|x| {
            let clean = match cfg.denoiser {
                Denoiser::Identity => x.clone(),
                Denoiser::RoundThroughFloat => {
                    let c = x.to_float();
                    if c.overflow {
                        return Err(HaloError::NonFinite(c.value));
                    }
                    Rational::from_f64_exact(c.value)?
                }
            };
            let a = rational_approx(&clean, &cfg.eps, cfg.d_max)?;
            Ok((a.value.simplify(), a.within_tolerance))
        })
        .collect::<Result<Vec<_>>>()?;
    let misses = projected.iter().filter(|(_, ok)| !ok).count();
    let data: Vec<Rational> = projected.into_iter().map(|(q, _)| q).collect();
    let max_int = data
        .iter()
        .map(|q| q.abs().floor())
        .max()
        .unwrap_or_default();
    let state = RationalTensor::new(h.rows(), h.cols(), data)?;
    Ok(RingOutput {
        state,
        misses,
        b_ring: b_ring(cfg.d_max, &max_int),
    })
}
