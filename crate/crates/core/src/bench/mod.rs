//! The precision experiments. Each one is a pure function of the
//! configuration and seed and produces one CSV table.
//!
//! Every table starts with the same columns (`experiment, regime, step,
//! error, bits, seed, flag, metadata`) followed by its own extras. Rows
//! are regime-major. Floats are written with 17 significant digits.

pub mod assoc;
pub mod dmr;
pub mod drift;
pub mod gradient;
pub mod logistic;
pub mod needle;
pub mod pipeline;
pub mod ringcost;
pub mod scale;

use crate::config::BenchConfig;
use crate::error::Result;
use crate::exact::Rational;
use crate::float_emu::Regime;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

pub const BASE_COLUMNS: [&str; 8] = ["experiment", "regime", "step", "error", "bits", "seed", "flag", "metadata"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    Logistic,
    Drift,
    Gradient,
    Needle,
    Scale,
    RingCost,
    Associativity,
    Dmr,
    Pipeline,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Logistic,
        Experiment::Drift,
        Experiment::Gradient,
        Experiment::Needle,
        Experiment::Scale,
        Experiment::RingCost,
        Experiment::Associativity,
        Experiment::Dmr,
        Experiment::Pipeline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Logistic => "logistic",
            Experiment::Drift => "drift",
            Experiment::Gradient => "gradient",
            Experiment::Needle => "needle",
            Experiment::Scale => "scale",
            Experiment::RingCost => "ringcost",
            Experiment::Associativity => "associativity",
            Experiment::Dmr => "dmr",
            Experiment::Pipeline => "pipeline",
        }
    }

    /// Keys that `--steps` sets for this experiment.
    pub fn steps_keys(self) -> &'static [&'static str] {
        match self {
            Experiment::Logistic => &["logistic.steps"],
            Experiment::Drift => &["drift.steps"],
            Experiment::Gradient => &["gradient.depth"],
            Experiment::RingCost => &["ringcost.steps"],
            Experiment::Pipeline => &["pipeline.steps"],
            Experiment::Associativity => &["assoc.trials"],
            Experiment::Dmr => &["dmr.bursts"],
            Experiment::Needle | Experiment::Scale => &[],
        }
    }

    pub fn run(self, cfg: &BenchConfig) -> Result<Table> {
        match self {
            Experiment::Logistic => logistic::run(cfg),
            Experiment::Drift => drift::run(cfg),
            Experiment::Gradient => gradient::run(cfg),
            Experiment::Needle => needle::run(cfg),
            Experiment::Scale => scale::run(cfg),
            Experiment::RingCost => ringcost::run(cfg),
            Experiment::Associativity => assoc::run(cfg),
            Experiment::Dmr => dmr::run(cfg),
            Experiment::Pipeline => pipeline::run(cfg),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

/// Non-finite errors are flagged rather than dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flag {
    Ok,
    Overflow,
    Nan,
}

impl Flag {
    pub fn of(x: f64) -> Flag {
        if x.is_nan() {
            Flag::Nan
        } else if x.is_infinite() {
            Flag::Overflow
        } else {
            Flag::Ok
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Flag::Ok => "ok",
            Flag::Overflow => "overflow",
            Flag::Nan => "nan",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub regime: String,
    pub step: u64,
    pub error: f64,
    pub bits: u64,
    pub flag: Flag,
    pub extras: Vec<String>,
}

impl Record {
    pub fn new(regime: impl Into<String>, step: u64, error: f64, bits: u64) -> Self {
        Self {
            regime: regime.into(),
            step,
            error,
            bits,
            flag: Flag::of(error),
            extras: Vec::new(),
        }
    }

    pub fn with(mut self, extras: impl IntoIterator<Item = String>) -> Self {
        self.extras.extend(extras);
        self
    }
}

/// One experiment's output.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub experiment: Experiment,
    pub seed: u64,
    /// Configuration echo repeated on every row; `;`-separated.
    pub metadata: String,
    pub extra_columns: Vec<&'static str>,
    pub records: Vec<Record>,
    /// Human-readable findings, printed by the CLI.
    pub summary: Vec<String>,
}

impl Table {
    pub fn column<'a>(&'a self, name: &str) -> Option<impl Iterator<Item = &'a str> + 'a> {
        let i = self.extra_columns.iter().position(|c| *c == name)?;
        Some(self.records.iter().map(move |r| r.extras[i].as_str()))
    }

    pub fn write_csv(&self, out: impl Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header = BASE_COLUMNS.iter().copied().chain(self.extra_columns.iter().copied());
        w.write_record(header)?;
        let seed = self.seed.to_string();
        for r in &self.records {
            assert_eq!(r.extras.len(), self.extra_columns.len(), "ragged row in {}", self.experiment);
            let base = [
                self.experiment.name().to_string(),
                r.regime.clone(),
                r.step.to_string(),
                float(r.error),
                r.bits.to_string(),
                seed.clone(),
                r.flag.name().to_string(),
                self.metadata.clone(),
            ];
            w.write_record(base.iter().chain(&r.extras))?;
        }
        w.flush()
    }
}

/// 17 significant digits.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn rational(q: &Rational) -> String {
    q.to_string()
}

/// `|a - b|` computed exactly, then rounded once.
pub fn abs_diff(a: &Rational, b: &Rational) -> f64 {
    (a - b).abs().to_f64()
}

/// `|x - exact|` for a float result; non-finite results come back as they are.
pub fn float_error(x: f64, exact: &Rational) -> f64 {
    match Rational::from_f64_exact(x) {
        Ok(q) => abs_diff(&q, exact),
        Err(_) => if x.is_nan() { f64::NAN } else { f64::INFINITY },
    }
}

/// The configured regimes in canonical order.
pub fn regimes(cfg: &BenchConfig) -> Vec<Regime> {
    let mut r = cfg.regimes.clone();
    r.sort();
    r.dedup();
    r
}

pub fn meta(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

/// First step at which `errors` passes `threshold`.
pub fn first_above(errors: &[f64], threshold: f64) -> Option<usize> {
    errors.iter().position(|e| !(*e <= threshold))
}

pub fn opt(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
