//! Command-line front end: `sample`, `oracle` and `verify`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::accounting::{aggregate, gof_test, outcome_counts, write_trials_csv, BudgetReport, GofResult, TrialSummary};
use crate::config::{AngleSpec, ExperimentConfig};
use crate::error::{Error, Result};
use crate::numerics::AngleUnit;
use crate::oracle::{full_distribution, full_trace_distribution, outcome_from_mask, outcome_string, N_ENUM};
use crate::protocol::{run_prepared_trials, run_trials_on, PreparedSet, Variant};
use crate::verify::{run_verify, VerifyOptions};

/// Largest discrepancy tolerated between the two oracle routes.
pub const ORACLE_TOLERANCE: f64 = 1.0 / (1u64 << 40) as f64;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NONCONFORMANT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ghzsim", version, about = "Exact classical sampling of GHZ measurement statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the protocol and write trials.csv, summary.json and oracle.json.
    Sample(ExperimentArgs),
    /// Tabulate the exact outcome distribution by both oracle routes.
    Oracle(ExperimentArgs),
    /// Run the acceptance suite and write verify.json.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    /// JSON config; flags given alongside override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated azimuthal angles, one per party (or one for all).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Comma-separated elevation angles, one per party (or one for all).
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
    #[arg(long, value_parser = parse_unit)]
    pub unit: Option<AngleUnit>,
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub kmax: Option<u32>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = VerifyOptions::default().seed)]
    pub seed: u64,
    /// Tenfold smaller samples.
    #[arg(long)]
    pub quick: bool,
    /// Comma-separated criterion ids to run (default: all).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
    #[arg(long, default_value = "ghzsim-out")]
    pub out_dir: PathBuf,
}

fn parse_unit(s: &str) -> std::result::Result<AngleUnit, String> {
    match s {
        "rad" => Ok(AngleUnit::Rad),
        "pi" => Ok(AngleUnit::Pi),
        other => Err(format!("unknown unit '{other}' (expected rad or pi)")),
    }
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect()
}

impl ExperimentArgs {
    /// Builds the config from the file (if any) and the flags. Angle flags
    /// replace the file's angles as a whole.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::InvalidConfig(format!("reading {}: {e}", path.display())))?;
                serde_json::from_str::<ExperimentConfig>(&text)?
            }
            None => ExperimentConfig::new(&[], &[], AngleUnit::Pi)?,
        };
        if self.config.is_none() || self.theta.is_some() || self.phi.is_some() {
            let (Some(theta), Some(phi)) = (&self.theta, &self.phi) else {
                return Err(Error::InvalidConfig("both --theta and --phi are required".into()));
            };
            let thetas = split_list(theta);
            let phis = split_list(phi);
            let n = self.n.unwrap_or(thetas.len().max(phis.len()));
            let widen = |v: Vec<String>, what: &str| -> Result<Vec<String>> {
                match v.len() {
                    len if len == n => Ok(v),
                    1 => Ok(vec![v[0].clone(); n]),
                    len => Err(Error::InvalidConfig(format!("{len} {what} values for n = {n}"))),
                }
            };
            let thetas = widen(thetas, "theta")?;
            let phis = widen(phis, "phi")?;
            cfg.angles = thetas.into_iter().zip(phis).map(|(theta, phi)| AngleSpec { theta, phi }).collect();
            cfg.n = n;
        } else if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(unit) = self.unit {
            cfg.unit = unit;
        }
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = self.kmax {
            cfg.k_max = k;
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = Some(d.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One row of the empirical-versus-exact table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub outcome: String,
    pub probability: f64,
    pub expected: f64,
    pub observed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub config: ExperimentConfig,
    pub report: BudgetReport,
    pub gof: Option<GofResult>,
    /// Why the goodness-of-fit test was skipped.
    pub gof_skipped: Option<String>,
    pub comparison: Option<Vec<ComparisonRow>>,
    pub conformant: bool,
}

/// One oracle table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub outcome: String,
    pub ghz_prob: f64,
    pub trace_prob: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n: usize,
    pub angles: Vec<AngleSpec>,
    pub unit: AngleUnit,
    pub rows: Vec<OracleRow>,
    pub max_discrepancy: f64,
    /// Largest enclosure radius of either route.
    pub max_error: f64,
    pub total: f64,
}

/// File contents produced by `sample`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleOutputs {
    pub trials_csv: Vec<u8>,
    pub summary_json: Vec<u8>,
    pub oracle_json: Option<Vec<u8>>,
    pub conformant: bool,
}

fn to_json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn oracle_report(cfg: &ExperimentConfig) -> Result<OracleReport> {
    let m = cfg.measurement_set()?;
    let d1 = full_distribution(&m)?;
    let d2 = full_trace_distribution(&m)?;
    let rows: Vec<OracleRow> = (0..1u64 << m.n())
        .map(|mask| {
            let (a, b) = (d1.prob(mask).to_f64(), d2.prob(mask).to_f64());
            OracleRow {
                outcome: outcome_string(&outcome_from_mask(mask, m.n())),
                ghz_prob: a,
                trace_prob: b,
                discrepancy: (a - b).abs(),
            }
        })
        .collect();
    Ok(OracleReport {
        n: m.n(),
        angles: cfg.angles.clone(),
        unit: cfg.unit,
        max_discrepancy: rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max),
        max_error: d1.max_error().max(d2.max_error()),
        total: d1.total().to_f64(),
        rows,
    })
}

/// Runs the trials of `cfg` and renders the output files. `workers` fixes
/// the thread count; the bytes do not depend on it.
pub fn render_sample(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<SampleOutputs> {
    let m = cfg.measurement_set()?;
    let set = PreparedSet::new(&m)?;
    let pcfg = cfg.protocol();
    let runs = match workers {
        Some(w) => run_trials_on(&set, &pcfg, 0..pcfg.trials, w)?,
        None => run_prepared_trials(&set, &pcfg, 0..pcfg.trials)?,
    };
    let trials: Vec<TrialSummary> = runs.iter().map(TrialSummary::from).collect();
    let report = aggregate(m.n(), cfg.variant, &trials, N_ENUM)?;
    let (mut gof, mut gof_skipped, mut comparison, mut oracle_json) = (None, None, None, None);
    if m.n() <= N_ENUM {
        let exact = full_distribution(&m)?;
        let counts = outcome_counts(m.n(), &trials);
        match gof_test(&counts, &exact) {
            Ok(g) => gof = Some(g),
            Err(e @ Error::InsufficientSamples { .. }) => gof_skipped = Some(e.to_string()),
            Err(e) => return Err(e),
        }
        comparison = Some(
            counts
                .iter()
                .enumerate()
                .map(|(mask, &observed)| {
                    let p = exact.prob(mask as u64).to_f64();
                    ComparisonRow {
                        outcome: outcome_string(&outcome_from_mask(mask as u64, m.n())),
                        probability: p,
                        expected: p * trials.len() as f64,
                        observed,
                    }
                })
                .collect(),
        );
        oracle_json = Some(to_json_bytes(&oracle_report(cfg)?)?);
    } else {
        gof_skipped = Some(format!("n = {} exceeds {N_ENUM}", m.n()));
    }
    let conformant = report.all_pass && gof.as_ref().is_none_or(|g| g.pass);
    let mut trials_csv = Vec::new();
    write_trials_csv(&mut trials_csv, &trials)?;
    // the output location is not part of the experiment
    let config = ExperimentConfig { out_dir: None, ..cfg.clone() };
    let summary = SampleSummary { config, report, gof, gof_skipped, comparison, conformant };
    Ok(SampleOutputs { trials_csv, summary_json: to_json_bytes(&summary)?, oracle_json, conformant })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

pub fn cmd_sample(cfg: &ExperimentConfig) -> Result<i32> {
    let out = render_sample(cfg, None)?;
    write_file(&cfg.output_dir(), "trials.csv", &out.trials_csv)?;
    write_file(&cfg.output_dir(), "summary.json", &out.summary_json)?;
    if let Some(o) = &out.oracle_json {
        write_file(&cfg.output_dir(), "oracle.json", o)?;
    }
    let summary: SampleSummary = serde_json::from_slice(&out.summary_json)?;
    let r = &summary.report;
    println!(
        "{} trials, n = {}, variant {}: mean random bits {:.2}, mean total bits {:.1}, mean rounds {:.3}",
        r.trials, r.n, cfg.variant, r.random_bits.mean, r.total_bits.mean, r.outer_rounds.mean
    );
    if let Some(s) = &r.inner_iterations {
        println!("mean inner iterations {:.3}, mean accepting-round exit k {:.3}", s.mean, r.inner_k_final.mean);
    }
    for c in &r.checks {
        let verdict = match (c.applies, c.pass) {
            (false, _) => "not applicable",
            (true, true) => "pass",
            (true, false) => "FAIL",
        };
        println!("  {} {:.3} ± {:.3} vs {}: {}", c.name, c.mean, c.stderr, c.bound, verdict);
    }
    match (&summary.gof, &summary.gof_skipped) {
        (Some(g), _) => println!(
            "  chi-square {:.2} (df {}, critical {:.2}), impossible outcomes hit {}: {}",
            g.statistic,
            g.degrees_of_freedom,
            g.critical_value,
            g.impossible_hits,
            if g.pass { "pass" } else { "FAIL" }
        ),
        (None, Some(why)) => println!("  goodness of fit skipped: {why}"),
        _ => {}
    }
    println!("wrote {}", cfg.output_dir().display());
    Ok(if out.conformant { EXIT_OK } else { EXIT_NONCONFORMANT })
}

pub fn cmd_oracle(cfg: &ExperimentConfig) -> Result<i32> {
    let report = oracle_report(cfg)?;
    write_file(&cfg.output_dir(), "oracle.json", &to_json_bytes(&report)?)?;
    for r in &report.rows {
        println!("{}  {:.15}  {:.15}", r.outcome, r.ghz_prob, r.trace_prob);
    }
    println!("max discrepancy {:.3e}", report.max_discrepancy);
    Ok(if report.max_discrepancy <= ORACLE_TOLERANCE { EXIT_OK } else { EXIT_NONCONFORMANT })
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let opts = VerifyOptions { seed: args.seed, quick: args.quick };
    let report = run_verify(&opts, &args.only)?;
    for c in &report.criteria {
        println!("{}", c.line());
    }
    write_file(&args.out_dir, "verify.json", &to_json_bytes(&report)?)?;
    Ok(if report.all_pass { EXIT_OK } else { EXIT_NONCONFORMANT })
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Sample(a) => a.resolve().and_then(|cfg| cmd_sample(&cfg)),
        Command::Oracle(a) => a.resolve().and_then(|cfg| cmd_oracle(&cfg)),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
