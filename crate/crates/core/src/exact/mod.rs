//! Exact integer and rational arithmetic.

mod approx;
mod gcd;
mod rational;

pub use approx::{rational_approx, sum_exact, Approx};
pub use gcd::{stein_gcd, stein_gcd_unsigned};
pub use rational::{BitReport, Collapse, Lift, Rational};
pub(crate) use rational::{add_planned, AddPlan};
