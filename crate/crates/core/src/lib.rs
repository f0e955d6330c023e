//! Exact rational arithmetic for recurrent inference, with emulated float
//! baselines, residue-based integrity checks and a lazy-reduction cost model.

pub mod bench;
pub mod cli;
pub mod config;
pub mod eiu;
pub mod error;
pub mod exact;
pub mod float_emu;
pub mod integrity;
pub mod net;
pub mod scalar;
pub mod transcend;

pub use error::{HaloError, Result};
pub use exact::{BitReport, Rational};
pub use float_emu::Regime;
pub use scalar::{Bf16, Scalar};

/// The exact scalar.
pub type Exact = Rational;
/// IEEE single precision; native `f32` arithmetic rounds exactly as the
/// regime requires.
pub type Fp32 = f32;
pub type Fp64 = f64;
