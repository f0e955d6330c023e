//! The `halo` command line.
//!
//! Exit codes: 0 on success, 1 when an experiment fails, 2 on bad
//! arguments or configuration.

use crate::bench::{Experiment, Table};
use crate::config::{load_config, BenchConfig};
use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Logistic,
    Drift,
    Gradient,
    Needle,
    Scale,
    Ringcost,
    Associativity,
    Dmr,
    Pipeline,
    /// Every experiment, run concurrently.
    All,
    /// Quick checks of the arithmetic against known answers.
    Selftest,
}

impl Command {
    pub fn experiments(self) -> Vec<Experiment> {
        match self {
            Command::All => Experiment::ALL.to_vec(),
            Command::Selftest => vec![],
            c => vec![c
                .to_possible_value()
                .and_then(|v| v.get_name().parse().ok())
                .expect("experiment names match commands")],
        }
    }
}

/// Run the exact-arithmetic precision experiments and write one CSV per
/// experiment, plus `meta.txt` with the resolved configuration.
#[derive(Debug, Parser)]
#[command(name = "halo", version)]
pub struct Cli {
    pub command: Command,
    /// Step count of the chosen experiment (depth for gradient, trials for
    /// associativity, bursts for dmr; needle and scale have none).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Seed for every random draw [default: 42].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [env: HALO_OUT, default: ./results].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated regimes from bf16, fp32, fp64, exact.
    #[arg(long)]
    pub regimes: Option<String>,
    /// Re-grounding interval K.
    #[arg(long = "ring.k")]
    pub ring_k: Option<usize>,
    /// Largest re-grounding denominator.
    #[arg(long = "ring.dmax")]
    pub ring_dmax: Option<u64>,
    /// Taylor order of the exponential.
    #[arg(long = "taylor.n")]
    pub taylor_n: Option<u32>,
    /// Register budget of the reduction unit, in bits.
    #[arg(long)]
    pub budget_bits: Option<u64>,
    /// GCD throughput of the reduction unit, bits per cycle.
    #[arg(long)]
    pub gcd_rate: Option<u64>,
    /// Any configuration key, `key=value`; repeatable. Dedicated flags win.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Write the files but print no summaries.
    #[arg(long, short)]
    pub quiet: bool,
}

impl Cli {
    /// Overrides in precedence order: `--set` first, then dedicated flags.
    pub fn overrides(&self) -> Vec<String> {
        let mut o = self.set.clone();
        if let Some(n) = self.steps {
            for e in self.command.experiments() {
                o.extend(e.steps_keys().iter().map(|k| format!("{k}={n}")));
            }
        }
        let mut flag = |k: &str, v: Option<String>| o.extend(v.map(|v| format!("{k}={v}")));
        flag("seed", self.seed.map(|v| v.to_string()));
        flag("regimes", self.regimes.clone());
        flag("ring.k", self.ring_k.map(|v| v.to_string()));
        flag("ring.dmax", self.ring_dmax.map(|v| v.to_string()));
        flag("taylor.n", self.taylor_n.map(|v| v.to_string()));
        flag("eiu.budget_bits", self.budget_bits.map(|v| v.to_string()));
        flag("eiu.gcd_rate", self.gcd_rate.map(|v| v.to_string()));
        o
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os("HALO_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"))
    }

    pub fn resolve(&self) -> Result<BenchConfig, String> {
        let cfg = load_config(self.config.as_deref(), &self.overrides()).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_table(dir: &Path, table: &Table) -> std::io::Result<()> {
    let mut f = BufWriter::new(File::create(dir.join(format!("{}.csv", table.experiment)))?);
    table.write_csv(&mut f)?;
    f.flush()
}

/// `meta.txt`: the command as a comment, then every resolved key, so the
/// file can be passed back with `--config`.
pub fn write_meta(dir: &Path, command: &str, cfg: &BenchConfig) -> std::io::Result<()> {
    std::fs::write(dir.join("meta.txt"), format!("# halo {command}\n{}", cfg.to_text()))
}

/// Runs `halo` with `args` (program name first) and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cfg = match cli.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("halo: {e}");
            return 2;
        }
    };
    if cli.command == Command::Selftest {
        return selftest();
    }
    let dir = cli.out_dir();
    if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| {
        let name = cli.command.to_possible_value().expect("named").get_name().to_string();
        write_meta(&dir, &name, &cfg)
    }) {
        eprintln!("halo: cannot write to {}: {e}", dir.display());
        return 1;
    }
    let results: Vec<(Experiment, Result<Table, String>)> = cli
        .command
        .experiments()
        .into_par_iter()
        .map(|e| {
            let r = e
                .run(&cfg)
                .map_err(|err| err.to_string())
                .and_then(|t| write_table(&dir, &t).map(|_| t).map_err(|err| err.to_string()));
            (e, r)
        })
        .collect();
    let mut code = 0;
    for (e, r) in results {
        match r {
            Ok(_) if cli.quiet => {}
            Ok(t) => {
                println!("{e}:");
                for line in &t.summary {
                    println!("  {line}");
                }
            }
            Err(msg) => {
                eprintln!("halo: {e} failed: {msg}");
                code = 1;
            }
        }
    }
    code
}

/// Known-answer checks that run in well under a second.
pub fn selftest() -> i32 {
    use crate::exact::{stein_gcd, Rational};
    use crate::float_emu::{reduce_ordered, OpKind, Regime};
    use crate::integrity::{dmr_check, inject_fault};
    use num_bigint::BigInt;

    let third = Rational::ratio(1, 3);
    let product = BigInt::from(123_456_789u64) * BigInt::from(987_654_321u64);
    let checks: Vec<(&str, bool)> = vec![
        ("gcd(48, 18) = 6", stein_gcd(&BigInt::from(48), &BigInt::from(18)) == BigInt::from(6)),
        ("1/3 + 1/3 + 1/3 = 1", &(&third + &third) + &third == Rational::ratio(1, 1)),
        (
            "bf16 addition depends on order",
            reduce_ordered(&[1.0, 1.0 / 256.0, 1.0 / 256.0], &[0, 1, 2], Regime::Bf16)
                != reduce_ordered(&[1.0, 1.0 / 256.0, 1.0 / 256.0], &[1, 2, 0], Regime::Bf16),
        ),
        (
            "residue check catches a flipped bit",
            dmr_check(
                &BigInt::from(123_456_789u64),
                &BigInt::from(987_654_321u64),
                &inject_fault(&product, &[17]),
                OpKind::Mul,
            )
            .detected,
        ),
        (
            "exp(1) to 8 terms",
            (crate::transcend::rat_exp(&Rational::ratio(1, 1), 8).to_f64() - std::f64::consts::E).abs() < 3e-5,
        ),
    ];
    let mut code = 0;
    for (name, ok) in checks {
        println!("{} {name}", if ok { "ok  " } else { "FAIL" });
        if !ok {
            code = 1;
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("halo").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn dedicated_flags_beat_set() {
        let c = parse(&["drift", "--set", "ring.k=7", "--ring.k", "10", "--steps", "9"]);
        let cfg = c.resolve().unwrap();
        assert_eq!((cfg.ring_k, cfg.drift_steps), (10, 9));
    }

    #[test]
    fn steps_for_all_touches_every_experiment() {
        let cfg = parse(&["all", "--steps", "60"]).resolve().unwrap();
        assert_eq!((cfg.logistic_steps, cfg.gradient_depth, cfg.dmr_bursts), (60, 60, 60));
    }

    #[test]
    fn bad_arguments_exit_2() {
        assert_eq!(main_with(["halo", "logistic", "--bogus"]), 2);
        assert_eq!(main_with(["halo", "nonsense"]), 2);
        assert_eq!(main_with(["halo", "drift", "--set", "ring.kk=5"]), 2);
        assert_eq!(main_with(["halo", "drift", "--regimes", "fp8"]), 2);
    }

    #[test]
    fn selftest_passes() {
        assert_eq!(selftest(), 0);
    }
}
