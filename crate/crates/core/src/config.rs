//! Flat `key = value` configuration for the benchmark harness.
//!
//! Dotted keys stand in for nesting. `#` starts a comment. Unknown keys are
//! rejected so a typo can never silently fall back to a default.

use crate::eiu::EiuConfig;
use crate::exact::Rational;
use crate::float_emu::Regime;
use crate::net::{Denoiser, InferenceConfig, RingConfig};
use crate::transcend::TranscendConfig;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{origin}: {msg}")]
    Invalid { origin: String, msg: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

/// Every knob of every experiment, with its default.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub seed: u64,
    pub regimes: Vec<Regime>,

    pub logistic_r: Rational,
    pub logistic_x0: Rational,
    pub logistic_steps: usize,
    /// Deviation past which a trajectory counts as lost.
    pub survival_threshold: f64,
    /// Re-grounding of the exact logistic trajectory, which would otherwise
    /// double its width every step.
    pub logistic_ring_k: usize,
    pub logistic_ring_dmax: u64,

    pub drift_dim: usize,
    pub drift_steps: usize,
    pub drift_threshold: f64,

    pub gradient_depth: usize,

    pub needle_dim: usize,
    pub needle_lengths: Vec<usize>,

    pub scale_widths: Vec<usize>,
    pub scale_seeds: usize,

    pub ring_k: usize,
    pub ring_dmax: u64,
    pub ring_eps: Rational,
    pub ring_denoiser: Denoiser,
    pub taylor_n: u32,
    pub ringcost_steps: usize,
    /// Depth of the comparison run without re-grounding. Its width grows by
    /// thousands of bits a step, so it stops early.
    pub ringcost_off_steps: usize,
    pub model_d: usize,
    pub model_ff: usize,
    pub model_vocab: usize,
    pub model_tokens: usize,
    pub model_scale_log2: u32,

    pub assoc_n: usize,
    pub assoc_trials: usize,

    pub dmr_bits: u64,
    pub dmr_bursts: usize,
    pub dmr_window: u64,
    pub dmr_min_flips: usize,
    pub dmr_max_flips: usize,

    pub budget_bits: u64,
    pub trigger: Rational,
    pub gcd_rate: u64,
    pub matmul_cycles: u64,
    pub queue_depth: usize,
    pub pipeline_steps: usize,
    pub pipeline_dim: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let ring = RingConfig::default();
        Self {
            seed: 42,
            regimes: vec![Regime::Bf16, Regime::Fp32, Regime::Exact],
            logistic_r: Rational::ratio(4, 1),
            logistic_x0: Rational::ratio(1, 5),
            logistic_steps: 2000,
            survival_threshold: 0.01,
            logistic_ring_k: 8,
            logistic_ring_dmax: 1 << 32,
            drift_dim: 64,
            drift_steps: 500,
            drift_threshold: 1e-4,
            gradient_depth: 200,
            needle_dim: 16,
            needle_lengths: vec![128, 512, 1024, 2048, 4096],
            scale_widths: vec![1024, 4096, 24576],
            scale_seeds: 100,
            ring_k: ring.interval,
            ring_dmax: ring.d_max,
            ring_eps: ring.eps,
            ring_denoiser: ring.denoiser,
            taylor_n: TranscendConfig::default().taylor_order,
            ringcost_steps: 300,
            ringcost_off_steps: 100,
            model_d: 32,
            model_ff: 32,
            model_vocab: 16,
            model_tokens: 8,
            model_scale_log2: 16,
            assoc_n: 64,
            assoc_trials: 100,
            dmr_bits: 512,
            dmr_bursts: 100_000,
            dmr_window: 64,
            dmr_min_flips: 2,
            dmr_max_flips: 8,
            budget_bits: 1024,
            trigger: Rational::ratio(3, 4),
            gcd_rate: 4,
            matmul_cycles: 64,
            queue_depth: 4,
            pipeline_steps: 120,
            pipeline_dim: 64,
        }
    }
}

fn parse<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: Display,
{
    value.parse::<T>().map_err(|e| format!("cannot parse {value:?}: {e}"))
}

fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>, String>
where
    T::Err: Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect()
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

macro_rules! keys {
    ($($key:literal => $field:ident : $kind:ident),* $(,)?) => {
        /// Every recognised key, in `meta.txt` order.
        pub const KEYS: &[&str] = &[$($key),*];

        impl BenchConfig {
            /// Sets one key from its text form.
            pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
                match key {
                    $($key => { self.$field = keys!(@parse $kind, value)?; })*
                    _ => return Err(format!("unknown key `{key}`")),
                }
                Ok(())
            }

            /// `(key, value)` for every key, in a form [`BenchConfig::set`] reads back.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$(($key, keys!(@show $kind, self.$field))),*]
            }
        }
    };
    (@parse one, $v:expr) => { parse($v) };
    (@parse list, $v:expr) => { parse_list($v) };
    (@show one, $f:expr) => { $f.to_string() };
    (@show list, $f:expr) => { join(&$f) };
}

keys! {
    "seed" => seed: one,
    "regimes" => regimes: list,
    "logistic.r" => logistic_r: one,
    "logistic.x0" => logistic_x0: one,
    "logistic.steps" => logistic_steps: one,
    "logistic.survival" => survival_threshold: one,
    "logistic.ring.k" => logistic_ring_k: one,
    "logistic.ring.dmax" => logistic_ring_dmax: one,
    "drift.dim" => drift_dim: one,
    "drift.steps" => drift_steps: one,
    "drift.threshold" => drift_threshold: one,
    "gradient.depth" => gradient_depth: one,
    "needle.dim" => needle_dim: one,
    "needle.lengths" => needle_lengths: list,
    "scale.widths" => scale_widths: list,
    "scale.seeds" => scale_seeds: one,
    "ring.k" => ring_k: one,
    "ring.dmax" => ring_dmax: one,
    "ring.eps" => ring_eps: one,
    "ring.denoiser" => ring_denoiser: one,
    "taylor.n" => taylor_n: one,
    "ringcost.steps" => ringcost_steps: one,
    "ringcost.off_steps" => ringcost_off_steps: one,
    "model.d" => model_d: one,
    "model.ff" => model_ff: one,
    "model.vocab" => model_vocab: one,
    "model.tokens" => model_tokens: one,
    "model.scale_log2" => model_scale_log2: one,
    "assoc.n" => assoc_n: one,
    "assoc.trials" => assoc_trials: one,
    "dmr.bits" => dmr_bits: one,
    "dmr.bursts" => dmr_bursts: one,
    "dmr.window" => dmr_window: one,
    "dmr.min_flips" => dmr_min_flips: one,
    "dmr.max_flips" => dmr_max_flips: one,
    "eiu.budget_bits" => budget_bits: one,
    "eiu.trigger" => trigger: one,
    "eiu.gcd_rate" => gcd_rate: one,
    "eiu.matmul_cycles" => matmul_cycles: one,
    "eiu.queue_depth" => queue_depth: one,
    "pipeline.steps" => pipeline_steps: one,
    "pipeline.dim" => pipeline_dim: one,
}

impl BenchConfig {
    /// Applies `key = value` lines; `origin` names the source in errors.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let here = || format!("{origin}:{}", i + 1);
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Invalid {
                origin: here(),
                msg: format!("expected `key = value`, found {line:?}"),
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|msg| ConfigError::Invalid { origin: here(), msg })?;
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), ConfigError> {
        let bad = |msg: String| ConfigError::Invalid {
            origin: format!("override {kv:?}"),
            msg,
        };
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| bad("expected key=value".into()))?;
        self.set(key.trim(), value.trim()).map_err(bad)
    }

    /// Text that [`BenchConfig::apply_text`] turns back into `self`.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("logistic.steps", self.logistic_steps),
            ("logistic.ring.k", self.logistic_ring_k),
            ("drift.steps", self.drift_steps),
            ("gradient.depth", self.gradient_depth),
            ("scale.seeds", self.scale_seeds),
            ("ring.k", self.ring_k),
            ("ringcost.steps", self.ringcost_steps),
            ("ringcost.off_steps", self.ringcost_off_steps),
            ("model.d", self.model_d),
            ("model.ff", self.model_ff),
            ("model.vocab", self.model_vocab),
            ("model.tokens", self.model_tokens),
            ("pipeline.steps", self.pipeline_steps),
            ("pipeline.dim", self.pipeline_dim),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(format!("{k} must be positive"));
        }
        if self.regimes.is_empty() {
            return Err("regimes must name at least one regime".into());
        }
        if self.logistic_x0.signum() <= 0 || self.logistic_x0 >= Rational::ratio(1, 1) {
            return Err("logistic.x0 must lie in (0, 1)".into());
        }
        if self.drift_dim < 2 {
            return Err("drift.dim must be at least 2".into());
        }
        if self.needle_dim < 2 || self.needle_dim % 2 != 0 {
            return Err("needle.dim must be even and at least 2".into());
        }
        if self.scale_widths.iter().any(|&w| w < 2) {
            return Err("scale.widths must all be at least 2".into());
        }
        if self.ringcost_steps < self.ring_k {
            return Err("ringcost.steps must be at least ring.k".into());
        }
        if self.assoc_n < 3 {
            return Err("assoc.n must be at least 3".into());
        }
        if self.dmr_bits < 2 || self.dmr_window == 0 || self.dmr_window > self.dmr_bits {
            return Err("dmr.window must lie in 1..=dmr.bits".into());
        }
        if self.dmr_min_flips == 0 || self.dmr_min_flips > self.dmr_max_flips || self.dmr_max_flips as u64 > self.dmr_window {
            return Err("need 1 <= dmr.min_flips <= dmr.max_flips <= dmr.window".into());
        }
        if !(self.survival_threshold > 0.0) || !(self.drift_threshold > 0.0) {
            return Err("thresholds must be positive".into());
        }
        self.ring().validate().map_err(|e| e.to_string())?;
        self.eiu().validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn ring(&self) -> RingConfig {
        RingConfig {
            interval: self.ring_k,
            d_max: self.ring_dmax,
            eps: self.ring_eps.clone(),
            denoiser: self.ring_denoiser,
        }
    }

    pub fn taylor(&self) -> TranscendConfig {
        TranscendConfig {
            taylor_order: self.taylor_n,
            ..TranscendConfig::default()
        }
    }

    pub fn inference(&self) -> InferenceConfig {
        InferenceConfig {
            depth: self.ringcost_steps,
            scale_log2: self.model_scale_log2,
            d_model: self.model_d,
            d_ff: self.model_ff,
            vocab: self.model_vocab,
            max_seq: self.model_tokens,
            taylor: self.taylor(),
            ring: Some(self.ring()),
            seed: self.seed,
        }
    }

    pub fn eiu(&self) -> EiuConfig {
        EiuConfig {
            register_bits: self.budget_bits,
            gcd_bits_per_cycle: self.gcd_rate,
            matmul_cycles_per_step: self.matmul_cycles,
            queue_depth: self.queue_depth,
            trigger: self.trigger.clone(),
        }
    }
}

/// Defaults, then the file (if any), then the overrides in order.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<BenchConfig, ConfigError> {
    let mut cfg = BenchConfig::default();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Io {
            path: p.display().to_string(),
            msg: e.to_string(),
        })?;
        cfg.apply_text(&text, &p.display().to_string())?;
    }
    for kv in overrides {
        cfg.apply_override(kv)?;
    }
    Ok(cfg)
}
