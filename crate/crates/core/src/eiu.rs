//! Cycle-count model of the exact inference unit's lazy reduction.
//!
//! A single live value replays a bit-width trajectory. Once it passes the
//! trigger fraction of the register budget a GCD job is queued on a
//! background engine, which works while the matmul pipeline keeps going.
//! The pipeline only stalls when a step would overflow the register while
//! the job is still running. A finished job brings the value back to its
//! starting width plus whatever it grew since the job was queued.

use crate::error::{HaloError, Result};
use crate::exact::{BitReport, Rational};
use crate::net::RationalTensor;
use crate::net::StepTrace;
use crate::float_emu::{round_to, Regime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct EiuConfig {
    pub register_bits: u64,
    /// Background GCD throughput; 0 disables the engine.
    pub gcd_bits_per_cycle: u64,
    pub matmul_cycles_per_step: u64,
    /// Reductions that may be in flight at once; 0 makes every reduction
    /// synchronous.
    pub queue_depth: usize,
    /// Fraction of the budget past which a reduction is requested.
    pub trigger: Rational,
}

impl Default for EiuConfig {
    fn default() -> Self {
        Self {
            register_bits: 1024,
            gcd_bits_per_cycle: 4,
            matmul_cycles_per_step: 64,
            queue_depth: 4,
            trigger: Rational::ratio(3, 4),
        }
    }
}

impl EiuConfig {
    pub fn validate(&self) -> Result<()> {
        if self.register_bits < 64 {
            return Err(HaloError::InvalidParameter("register budget must be at least 64 bits".into()));
        }
        if self.matmul_cycles_per_step == 0 {
            return Err(HaloError::InvalidParameter("matmul cycles per step must be positive".into()));
        }
        if !self.trigger.is_positive() || self.trigger > Rational::ratio(1, 1) {
            return Err(HaloError::InvalidParameter("trigger fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// `floor(register_bits * trigger)`.
    pub fn threshold_bits(&self) -> u64 {
        let t = &Rational::from_integer(self.register_bits) * &self.trigger;
        u64::try_from(t.floor()).expect("threshold fits in u64")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PipelineStats {
    pub steps_executed: usize,
    pub reductions_triggered: usize,
    pub stall_cycles: u64,
    pub saturation_events: usize,
    pub peak_bits: u64,
    /// Step at which the first reduction was requested.
    pub first_trigger: Option<usize>,
}

impl PipelineStats {
    /// Growth steps completed before the first trigger (all of them if it
    /// never fired).
    pub fn steps_before_first_trigger(&self) -> usize {
        match self.first_trigger {
            Some(t) => t.saturating_sub(1),
            None => self.steps_executed.saturating_sub(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineRow {
    pub step: usize,
    pub live_bits: u64,
    pub pending_jobs: usize,
    /// Cycles stalled during this step.
    pub stalled: u64,
    pub reduced_this_step: bool,
}

#[derive(Clone, Debug)]
struct Job {
    /// Bits of work left.
    remaining: u64,
    /// Live width when the job was queued.
    snapshot: u64,
}

/// Replays `trace` and returns the totals and one row per step.
///
/// Occupancy is the widest component: numerator and denominator sit in
/// separate registers. A job costs the total bits of its operand, taken
/// as twice the occupancy.
pub fn simulate_pipeline(trace: &[BitReport], cfg: &EiuConfig) -> Result<(PipelineStats, Vec<PipelineRow>)> {
    cfg.validate()?;
    let first = trace
        .first()
        .ok_or_else(|| HaloError::InvalidParameter("empty trace".into()))?;
    let base = first.widest().max(1);
    let threshold = cfg.threshold_bits();
    let budget = cfg.register_bits;
    let rate = cfg.gcd_bits_per_cycle;
    let per_step = rate.saturating_mul(cfg.matmul_cycles_per_step);

    let mut stats = PipelineStats::default();
    let mut rows = Vec::with_capacity(trace.len());
    let mut live = base;
    let mut job: Option<Job> = None;

    let finish = |live: u64, j: &Job| base + live.saturating_sub(j.snapshot);

    for (t, w) in trace.iter().enumerate() {
        let mut stalled = 0u64;
        let mut reduced = false;
        if t > 0 {
            let delta = w.widest() as i64 - trace[t - 1].widest() as i64;
            let step = |live: u64| (live as i64 + delta).max(1) as u64;
            if step(live) > budget && rate > 0 {
                match job.take() {
                    Some(j) => {
                        stalled += j.remaining.div_ceil(rate);
                        live = finish(live, &j);
                    }
                    None => {
                        stats.reductions_triggered += 1;
                        stats.first_trigger.get_or_insert(t);
                        stalled += (2 * live).div_ceil(rate);
                        live = base;
                    }
                }
                reduced = true;
            }
            live = step(live);
            if live > budget {
                stats.saturation_events += 1;
            }
        }
        stats.stall_cycles += stalled;

        // The engine runs alongside this step's matmul.
        if let Some(j) = job.as_mut() {
            if j.remaining <= per_step {
                let j = job.take().expect("job present");
                live = finish(live, &j);
                reduced = true;
            } else {
                j.remaining -= per_step;
            }
        }

        if live > threshold && job.is_none() {
            stats.reductions_triggered += 1;
            stats.first_trigger.get_or_insert(t);
            let cost = 2 * live;
            if cfg.queue_depth == 0 {
                if rate > 0 {
                    let c = cost.div_ceil(rate);
                    stalled += c;
                    stats.stall_cycles += c;
                    live = base;
                    reduced = true;
                }
            } else {
                job = Some(Job {
                    remaining: cost,
                    snapshot: live,
                });
            }
        }

        stats.peak_bits = stats.peak_bits.max(live);
        rows.push(PipelineRow {
            step: t,
            live_bits: live,
            pending_jobs: usize::from(job.is_some()),
            stalled,
            reduced_this_step: reduced,
        });
    }
    stats.steps_executed = trace.len();
    Ok((stats, rows))
}

/// `floor((register_bits * trigger - B0) / alpha)`: growth steps before a
/// linearly growing value passes the trigger.
pub fn steps_until_reduction(alpha: u64, start_bits: u64, cfg: &EiuConfig) -> Result<u64> {
    if alpha == 0 {
        return Err(HaloError::InvalidParameter("growth per step must be positive".into()));
    }
    Ok(cfg.threshold_bits().saturating_sub(start_bits) / alpha)
}

/// The settled widths of an inference trace.
pub fn bit_trace(trace: &[StepTrace]) -> Vec<BitReport> {
    trace.iter().map(|s| s.bits).collect()
}

/// Widths of `h_{t+1} = W h_t` for a `dim`-wide chain whose weights and
/// start vector are bfloat16 values lifted onto the `2^-scale_log2` grid,
/// as the inference prelude does. Nothing is reduced.
pub fn bf16_chain_trace(dim: usize, steps: usize, scale_log2: u32, seed: u64) -> Result<Vec<BitReport>> {
    if dim == 0 {
        return Err(HaloError::InvalidParameter("chain width must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 1.0 / (dim as f64).sqrt();
    let mut draw = |scale: f64| -> Result<Rational> {
        Ok(Rational::lift(round_to(rng.gen_range(-scale..scale), Regime::Bf16), scale_log2)?.value)
    };
    let w = (0..dim * dim).map(|_| draw(bound)).collect::<Result<Vec<_>>>()?;
    let w = RationalTensor::new(dim, dim, w)?;
    let h = (0..dim).map(|_| draw(1.0)).collect::<Result<Vec<_>>>()?;
    let mut h = RationalTensor::new(dim, 1, h)?;
    let mut out = vec![h.bit_report()];
    for _ in 0..steps {
        h = w.matmul(&h)?;
        out.push(h.bit_report());
    }
    Ok(out)
}
