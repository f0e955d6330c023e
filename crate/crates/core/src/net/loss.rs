//! The alignment loss between a continuous state and its grid projection,
//! with straight-through projection.

use super::ring::RingConfig;
use crate::error::{HaloError, Result};
use crate::exact::{rational_approx, Rational};
use num_traits::One;

#[derive(Clone, Debug, PartialEq)]
pub struct LossConfig {
    pub beta: Rational,
    pub gamma: Rational,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            beta: Rational::one(),
            gamma: Rational::ratio(1, 4),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    /// Gradient reaching `z_e`: only the commitment path, `2 gamma (z_e - z_q)`.
    pub grad_z_e: Vec<f64>,
    /// Gradient reaching `z_q`: `2 beta (z_q - z_e)`.
    pub grad_z_q: Vec<f64>,
}

/// `beta |sg(z_e) - z_q|^2 + gamma |z_e - sg(z_q)|^2`.
///
/// Stop-gradient leaves the value alone, so both terms contribute
/// `|z_e - z_q|^2` to the loss; each one only sends gradient to its own side.
pub fn ring_loss(z_e: &[f64], z_q: &[Rational], cfg: &LossConfig) -> Result<LossOutput> {
    if z_e.len() != z_q.len() {
        return Err(HaloError::Shape(format!("z_e has {} entries, z_q {}", z_e.len(), z_q.len())));
    }
    if cfg.beta.signum() < 0 || cfg.gamma.signum() < 0 {
        return Err(HaloError::InvalidParameter("beta and gamma must be non-negative".into()));
    }
    let (beta, gamma) = (cfg.beta.to_f64(), cfg.gamma.to_f64());
    let diff: Vec<f64> = z_e.iter().zip(z_q).map(|(e, q)| e - q.to_f64()).collect();
    let sq: f64 = diff.iter().map(|d| d * d).sum();
    Ok(LossOutput {
        loss: beta * sq + gamma * sq,
        grad_z_e: diff.iter().map(|d| 2.0 * gamma * d).collect(),
        grad_z_q: diff.iter().map(|d| -2.0 * beta * d).collect(),
    })
}

/// The backward rule of the projection: gradients pass through unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdentityJacobian;

impl IdentityJacobian {
    pub fn backward(&self, grad: &[f64]) -> Vec<f64> {
        grad.to_vec()
    }
}

/// Snaps each entry of `z_e` (lifted exactly) to the grid of `cfg`.
pub fn ste_project(z_e: &[f64], cfg: &RingConfig) -> Result<(Vec<Rational>, IdentityJacobian)> {
    cfg.validate()?;
    let z_q = z_e
        .iter()
        .map(|&x| {
            let lifted = Rational::from_f64_exact(x)?;
            Ok(rational_approx(&lifted, &cfg.eps, cfg.d_max)?.value)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((z_q, IdentityJacobian))
}
