//! Bit-width of the recurrent model's state with and without re-grounding.

use super::{meta, rational, Experiment, Record, Table};
use crate::config::BenchConfig;
use crate::error::Result;
use crate::net::{bound_report, run_inference, BoundReport, InferenceConfig, InferenceOutput, ModelWeights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tokens(cfg: &InferenceConfig) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x70_6b_6e);
    (0..cfg.max_seq).map(|_| rng.gen_range(0..cfg.vocab)).collect()
}

pub struct RingCost {
    pub with_ring: InferenceOutput,
    pub without_ring: InferenceOutput,
    pub bound: BoundReport,
}

/// Runs the same model twice: re-grounding every `cfg.ring` interval for
/// `cfg.depth` steps, and never for `off_depth` steps (at most `cfg.depth`).
pub fn compare(cfg: &InferenceConfig, off_depth: usize) -> Result<RingCost> {
    let weights = ModelWeights::random(cfg)?;
    let toks = tokens(cfg);
    let off = InferenceConfig {
        ring: None,
        depth: off_depth.min(cfg.depth),
        ..cfg.clone()
    };
    let (with_ring, without_ring) = rayon::join(|| run_inference(&toks, cfg, &weights), || run_inference(&toks, &off, &weights));
    let (with_ring, without_ring) = (with_ring?, without_ring?);
    let ring = cfg.ring.clone().unwrap_or_default();
    let bound = bound_report(&with_ring.trace, ring.interval, ring.d_max, &with_ring.initial_state);
    Ok(RingCost { with_ring, without_ring, bound })
}

pub fn run(cfg: &BenchConfig) -> Result<Table> {
    let inf = cfg.inference();
    let rc = compare(&inf, cfg.ringcost_off_steps)?;
    let b = &rc.bound;
    let mut records = Vec::new();
    for (label, out) in [("off", &rc.without_ring), ("on", &rc.with_ring)] {
        for s in &out.trace {
            records.push(Record::new("exact", s.step as u64, 0.0, s.bits.total_bits).with([
                label.to_string(),
                s.computed_bits().to_string(),
                s.ring_misses.to_string(),
            ]));
        }
    }
    let k = cfg.ring_k;
    let at = |o: &InferenceOutput| o.trace.get(2 * k).map_or("not reached".to_string(), |s| s.bits.total_bits.to_string());
    let summary = vec![
        format!(
            "ring on: peak {} bits, bound B_ring + K alpha = {} + {}*{} = {} ({}), (K-1) form {} ({})",
            b.peak_bits,
            b.b_ring,
            k,
            b.alpha_obs,
            b.bound_k,
            if b.holds_k() { "holds" } else { "violated" },
            b.bound_k_minus_1,
            if b.holds_k_minus_1() { "holds" } else { "violated" }
        ),
        format!("bits at step {}: ring off {}, ring on {}", 2 * k, at(&rc.without_ring), at(&rc.with_ring)),
    ];
    Ok(Table {
        experiment: Experiment::RingCost,
        seed: cfg.seed,
        metadata: meta(&[
            ("d_model", inf.d_model.to_string()),
            ("depth", inf.depth.to_string()),
            ("off_depth", rc.without_ring.trace.len().saturating_sub(1).to_string()),
            ("ring.k", k.to_string()),
            ("ring.dmax", cfg.ring_dmax.to_string()),
            ("ring.eps", rational(&cfg.ring_eps)),
            ("ring.denoiser", cfg.ring_denoiser.to_string()),
            ("taylor.n", cfg.taylor_n.to_string()),
            ("b_ring", b.b_ring.to_string()),
            ("alpha_obs", b.alpha_obs.to_string()),
        ]),
        extra_columns: vec!["ring", "computed_bits", "ring_misses"],
        records,
        summary,
    })
}
