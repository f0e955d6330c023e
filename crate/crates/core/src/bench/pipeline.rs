//! The lazy-reduction cost model driven by an exact bfloat16 chain.

use super::{meta, rational, Experiment, Record, Table};
use crate::config::BenchConfig;
use crate::eiu::{bf16_chain_trace, simulate_pipeline, EiuConfig};
use crate::error::Result;

/// The engine settings compared: disabled, synchronous, and background.
pub fn engines(cfg: &BenchConfig) -> Vec<(&'static str, EiuConfig)> {
    let base = cfg.eiu();
    vec![
        ("disabled", EiuConfig { gcd_bits_per_cycle: 0, ..base.clone() }),
        ("synchronous", EiuConfig { queue_depth: 0, ..base.clone() }),
        ("background", base),
    ]
}

pub fn run(cfg: &BenchConfig) -> Result<Table> {
    let trace = bf16_chain_trace(cfg.pipeline_dim, cfg.pipeline_steps, cfg.model_scale_log2, cfg.seed)?;
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for (name, eiu) in engines(cfg) {
        let (stats, rows) = simulate_pipeline(&trace, &eiu)?;
        summary.push(format!(
            "{name}: first trigger after {} steps, {} reductions, {} stall cycles, {} saturations, peak {} bits",
            stats.steps_before_first_trigger(),
            stats.reductions_triggered,
            stats.stall_cycles,
            stats.saturation_events,
            stats.peak_bits
        ));
        for (row, raw) in rows.iter().zip(&trace) {
            records.push(Record::new("exact", row.step as u64, 0.0, row.live_bits).with([
                name.to_string(),
                row.live_bits.to_string(),
                row.pending_jobs.to_string(),
                row.stalled.to_string(),
                row.reduced_this_step.to_string(),
                raw.widest().to_string(),
                stats.steps_before_first_trigger().to_string(),
            ]));
        }
    }
    let eiu = cfg.eiu();
    Ok(Table {
        experiment: Experiment::Pipeline,
        seed: cfg.seed,
        metadata: meta(&[
            ("dim", cfg.pipeline_dim.to_string()),
            ("budget_bits", eiu.register_bits.to_string()),
            ("trigger", rational(&eiu.trigger)),
            ("gcd_rate", eiu.gcd_bits_per_cycle.to_string()),
            ("matmul_cycles", eiu.matmul_cycles_per_step.to_string()),
            ("queue_depth", eiu.queue_depth.to_string()),
            ("scale_log2", cfg.model_scale_log2.to_string()),
        ]),
        extra_columns: vec!["engine", "live_bits", "pending_jobs", "stalled", "reduced_this_step", "raw_bits", "steps_before_trigger"],
        records,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn engines_differ_as_expected() {
        let cfg = BenchConfig {
            pipeline_dim: 16,
            pipeline_steps: 150,
            ..BenchConfig::default()
        };
        let t = run(&cfg).unwrap();
        assert_eq!(t.records.len(), 3 * 151);
        let stalls = |e: &str| t.records.iter().filter(|r| r.extras[0] == e).map(|r| r.extras[3].parse::<u64>().unwrap()).sum::<u64>();
        assert_eq!(stalls("background"), 0);
        assert!(stalls("synchronous") > 0);
        assert!(t.records.iter().filter(|r| r.extras[0] == "disabled").any(|r| r.bits > cfg.budget_bits));
    }
}
