//! Command-line front end.
//!
//! Every command is deterministic given its full flag set. Exit codes:
//! 0 success, 2 invalid input or configuration, 3 impossible post-selection,
//! 4 IO failure. `PIGEONSIM_MAX_DIM` overrides the register dimension cap.
//!
//! A JSON config file passed with `--config` mirrors the flags (keys `n`,
//! `m`, `outcome`, `samples`, `seed`, `lambdas`, `sigma`, `pair`,
//! `no_postselect`, `format`, `out`) and adds what flags cannot express:
//! `intermediate` (a measurement chain for montecarlo), `pre_states`
//! (per-particle pre-selection amplitudes), `rng` (must name the built-in
//! generator), and `x_min`/`x_max`/`points` (spectra sampling grid).
//! Explicit flags override file values.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::{Result, SimError};
use crate::montecarlo::{compare_counts, run_ensemble, RunConfig, RNG_ID};
use crate::pigeonhole::{correlation_pattern, scenario_from_parts, Scenario};
use crate::prepost::MeasurementSpec;
use crate::qstate::{plus_state, RegisterShape, StateVector};
use crate::report::{
    self, counts_csv, deflection_report, general_csv, general_report, oracle_report,
    pattern_report, patterns_csv, sample_grid, scan_csv, spectra_csv, PatternReport,
    SpectraReportOut,
};
use crate::tol;
use crate::weakcoupling::{deflection_scan, evolve, postselect, unconditioned, DeflectionScan};
use crate::C64;

/// Hard bound on the register dimension for the patterns enumeration; every
/// outcome costs a full pattern analysis, so the output grows as dim * N^2.
const PATTERNS_DIM_LIMIT: usize = 4096;

#[derive(Parser, Debug)]
#[command(
    name = "pigeonsim",
    version,
    about = "Pre/post-selected particles in boxes: correlation patterns, \
             measurement chains, and weak-coupling pointer analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Correlation pattern of one pre/post-selected scenario
    Pigeonhole(CommonArgs),
    /// Correlation patterns of every final outcome
    Patterns(CommonArgs),
    /// Same-box suppression check across register sizes
    General(CommonArgs),
    /// Trajectory ensemble with counts CSV and exact-oracle JSON
    Montecarlo(CommonArgs),
    /// Pointer deflection scan with log-log slope fits
    Deflection(CommonArgs),
    /// Pointer marginal densities read as spectral line profiles
    Spectra(CommonArgs),
}

/// The full flag set. Each command reads the subset it documents and
/// ignores the rest, so scripts can share one flag block across commands.
#[derive(Args, Debug, Default, Clone)]
struct CommonArgs {
    /// Number of particles
    #[arg(long)]
    n: Option<usize>,
    /// Number of boxes
    #[arg(long)]
    m: Option<usize>,
    /// Final outcome index per particle, comma separated (e.g. 0,0,0)
    #[arg(long, value_delimiter = ',')]
    outcome: Option<Vec<usize>>,
    /// Number of trajectories
    #[arg(long)]
    samples: Option<u64>,
    /// Trajectory RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Coupling strengths, comma separated (e.g. 1e-3,2e-3,5e-3,1e-2)
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// Pointer spread
    #[arg(long)]
    sigma: Option<f64>,
    /// One-based particle pair (e.g. 1,2): montecarlo measures it,
    /// deflection and spectra restrict output to it
    #[arg(long, value_delimiter = ',')]
    pair: Option<Vec<usize>>,
    /// Run unconditioned instead of post-selected
    #[arg(long)]
    no_postselect: bool,
    /// Output format
    #[arg(long, value_enum)]
    format: Option<OutFormat>,
    /// Output path; montecarlo, deflection and spectra use it as a prefix
    /// for their artifact pair
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file mirroring the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum OutFormat {
    Json,
    Csv,
}

/// One intermediate measurement in a montecarlo chain. Particle indices are
/// one-based, matching report output.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum IntermediateSpec {
    /// Binary same-box/different-box measurement of a pair.
    SameDiff { pair: [usize; 2] },
    /// Full joint box measurement of a pair (M * M outcomes).
    BoxPair { pair: [usize; 2] },
    /// Box measurement of one particle (M outcomes).
    Box { particle: usize },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: Option<usize>,
    m: Option<usize>,
    outcome: Option<Vec<usize>>,
    samples: Option<u64>,
    seed: Option<u64>,
    lambdas: Option<Vec<f64>>,
    sigma: Option<f64>,
    pair: Option<[usize; 2]>,
    no_postselect: Option<bool>,
    format: Option<String>,
    out: Option<String>,
    rng: Option<String>,
    intermediate: Option<Vec<IntermediateSpec>>,
    /// Per-particle pre-selection amplitudes as [re, im] pairs; overrides
    /// the default plus-state product.
    pre_states: Option<Vec<Vec<[f64; 2]>>>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    points: Option<usize>,
}

/// Flags merged over the config file with defaults applied.
#[derive(Debug, Clone)]
struct Resolved {
    /// n and m exactly as given, before defaulting; `general` switches on
    /// their presence.
    n_given: Option<usize>,
    m_given: Option<usize>,
    n: usize,
    m: usize,
    outcome: Vec<usize>,
    samples: u64,
    seed: u64,
    lambdas: Vec<f64>,
    sigma: f64,
    /// Zero-based, validated i < j < n.
    pair: Option<(usize, usize)>,
    no_postselect: bool,
    format: OutFormat,
    out: Option<PathBuf>,
    intermediate: Vec<IntermediateSpec>,
    pre_states: Option<Vec<StateVector>>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    points: usize,
    cap: usize,
}

fn dimension_cap() -> Result<usize> {
    match std::env::var("PIGEONSIM_MAX_DIM") {
        Ok(s) => match s.parse::<usize>() {
            Ok(cap) if cap >= 2 => Ok(cap),
            _ => Err(SimError::Config(format!(
                "PIGEONSIM_MAX_DIM must be an integer of at least 2, got '{s}'"
            ))),
        },
        Err(std::env::VarError::NotPresent) => Ok(tol::DEFAULT_DIM_CAP),
        Err(std::env::VarError::NotUnicode(_)) => Err(SimError::Config(
            "PIGEONSIM_MAX_DIM is not valid unicode".into(),
        )),
    }
}

fn load_file_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))
}

fn parse_pair_flag(raw: &[usize], n: usize) -> Result<(usize, usize)> {
    if raw.len() != 2 {
        return Err(SimError::invalid("pair must be two indices, e.g. 1,2"));
    }
    let (i, j) = (raw[0], raw[1]);
    if i < 1 || j < 1 || i >= j || j > n {
        return Err(SimError::invalid(format!(
            "pair ({i},{j}) must satisfy 1 <= i < j <= {n} (indices are one-based)"
        )));
    }
    Ok((i - 1, j - 1))
}

fn resolve(args: &CommonArgs) -> Result<Resolved> {
    let file = match &args.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    if let Some(rng) = &file.rng {
        if rng != RNG_ID {
            return Err(SimError::Config(format!(
                "unsupported rng '{rng}'; the trajectory generator is '{RNG_ID}'"
            )));
        }
    }
    let cap = dimension_cap()?;
    let m = args.m.or(file.m).unwrap_or(2);
    let pre_states = file
        .pre_states
        .as_ref()
        .map(|parts| -> Result<Vec<StateVector>> {
            let shape = RegisterShape::new(1, m)?;
            parts
                .iter()
                .map(|amps| {
                    StateVector::from_amplitudes(
                        shape,
                        amps.iter().map(|&[re, im]| C64::new(re, im)).collect(),
                    )
                })
                .collect()
        })
        .transpose()
        .map_err(|e| SimError::Config(format!("pre_states: {e}")))?;
    let n_given = args.n.or(file.n);
    let n = n_given.or(pre_states.as_ref().map(Vec::len)).unwrap_or(3);
    if let Some(parts) = &pre_states {
        if parts.len() != n {
            return Err(SimError::Config(format!(
                "pre_states has {} entries for {} particles",
                parts.len(),
                n
            )));
        }
    }
    let outcome = args
        .outcome
        .clone()
        .or(file.outcome)
        .unwrap_or_else(|| vec![0; n]);
    let format = match &args.format {
        Some(f) => *f,
        None => match file.format.as_deref() {
            None | Some("json") => OutFormat::Json,
            Some("csv") => OutFormat::Csv,
            Some(other) => {
                return Err(SimError::Config(format!(
                    "format must be 'json' or 'csv', got '{other}'"
                )))
            }
        },
    };
    let pair = match (&args.pair, file.pair) {
        (Some(raw), _) => Some(parse_pair_flag(raw, n)?),
        (None, Some(raw)) => Some(parse_pair_flag(&raw, n)?),
        (None, None) => None,
    };
    let points = file.points.unwrap_or(201);
    if points < 2 {
        return Err(SimError::Config("points must be at least 2".into()));
    }
    Ok(Resolved {
        n_given,
        m_given: args.m.or(file.m),
        n,
        m,
        outcome,
        samples: args.samples.or(file.samples).unwrap_or(10_000),
        seed: args.seed.or(file.seed).unwrap_or(0),
        lambdas: args
            .lambdas
            .clone()
            .or(file.lambdas)
            .unwrap_or_else(|| vec![1e-3, 2e-3, 5e-3, 1e-2]),
        sigma: args.sigma.or(file.sigma).unwrap_or(1.0),
        pair,
        no_postselect: args.no_postselect || file.no_postselect.unwrap_or(false),
        format,
        out: args.out.clone().or(file.out.map(PathBuf::from)),
        intermediate: file.intermediate.unwrap_or_default(),
        pre_states,
        x_min: file.x_min,
        x_max: file.x_max,
        points,
        cap,
    })
}

fn make_scenario(r: &Resolved) -> Result<Scenario> {
    let parts = match &r.pre_states {
        Some(parts) => parts.clone(),
        None => vec![plus_state(r.m)?; r.n],
    };
    scenario_from_parts(parts, r.m, &r.outcome, r.cap)
}

fn scenario_for_outcome(r: &Resolved, outcome: &[usize]) -> Result<Scenario> {
    let parts = match &r.pre_states {
        Some(parts) => parts.clone(),
        None => vec![plus_state(r.m)?; r.n],
    };
    scenario_from_parts(parts, r.m, outcome, r.cap)
}

fn to_json_doc<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| SimError::Config(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).map_err(SimError::from),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn write_artifact(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn prefixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn cmd_pigeonhole(r: &Resolved) -> Result<()> {
    let scenario = make_scenario(r)?;
    let pattern = correlation_pattern(&scenario)?;
    let rep = pattern_report(&scenario, &pattern);
    let content = match r.format {
        OutFormat::Json => to_json_doc(&rep)?,
        OutFormat::Csv => patterns_csv(std::slice::from_ref(&rep)),
    };
    emit(r.out.as_deref(), &content)
}

fn cmd_patterns(r: &Resolved) -> Result<()> {
    let shape = RegisterShape::with_cap(r.n, r.m, r.cap)?;
    if shape.dim() > PATTERNS_DIM_LIMIT {
        return Err(SimError::invalid(format!(
            "patterns enumerates every outcome; dimension {} exceeds the {} limit",
            shape.dim(),
            PATTERNS_DIM_LIMIT
        )));
    }
    let mut reports: Vec<PatternReport> = Vec::with_capacity(shape.dim());
    for index in 0..shape.dim() {
        let outcome = shape.digits(index);
        let scenario = scenario_for_outcome(r, &outcome)?;
        let pattern = correlation_pattern(&scenario)?;
        reports.push(pattern_report(&scenario, &pattern));
    }
    let content = match r.format {
        OutFormat::Json => to_json_doc(&reports)?,
        OutFormat::Csv => patterns_csv(&reports),
    };
    emit(r.out.as_deref(), &content)
}

fn cmd_general(r: &Resolved) -> Result<()> {
    let reports = match (r.n_given, r.m_given) {
        (Some(n), Some(m)) => vec![crate::pigeonhole::verify_general_with_cap(n, m, r.cap)?],
        (None, None) => {
            // Default sweep: every register with more particles than boxes
            // up to six particles, the regime where same-box suppression is
            // a pigeonhole violation.
            let mut all = Vec::new();
            for n in 3..=6usize {
                for m in 2..n {
                    if (m as u128).pow(n as u32) <= r.cap as u128 {
                        all.push(crate::pigeonhole::verify_general_with_cap(n, m, r.cap)?);
                    }
                }
            }
            all
        }
        _ => {
            return Err(SimError::invalid(
                "general needs both --n and --m, or neither for the default sweep",
            ))
        }
    };
    let out: Vec<_> = reports.iter().map(general_report).collect();
    let content = match r.format {
        OutFormat::Json => to_json_doc(&out)?,
        OutFormat::Csv => general_csv(&out),
    };
    emit(r.out.as_deref(), &content)
}

fn build_intermediate(r: &Resolved, shape: RegisterShape) -> Result<Vec<MeasurementSpec>> {
    // An explicit --pair flag replaces any configured chain with the single
    // same/diff measurement of that pair.
    if let Some((i, j)) = r.pair {
        return Ok(vec![MeasurementSpec::same_diff(shape, i, j)?]);
    }
    let one_based = |k: usize, what: &str| -> Result<usize> {
        if k < 1 || k > shape.num_particles() {
            return Err(SimError::Config(format!(
                "{what} index {k} out of range (one-based, {} particles)",
                shape.num_particles()
            )));
        }
        Ok(k - 1)
    };
    r.intermediate
        .iter()
        .map(|spec| match spec {
            IntermediateSpec::SameDiff { pair: [i, j] } => {
                MeasurementSpec::same_diff(shape, one_based(*i, "pair")?, one_based(*j, "pair")?)
            }
            IntermediateSpec::BoxPair { pair: [i, j] } => MeasurementSpec::box_pair_full(
                shape,
                one_based(*i, "pair")?,
                one_based(*j, "pair")?,
            ),
            IntermediateSpec::Box { particle } => {
                MeasurementSpec::single_box_full(shape, one_based(*particle, "particle")?)
            }
        })
        .collect()
}

fn cmd_montecarlo(r: &Resolved) -> Result<()> {
    let scenario = make_scenario(r)?;
    let intermediate = build_intermediate(r, scenario.shape())?;
    let cfg = RunConfig {
        scenario,
        intermediate,
        samples: r.samples,
        seed: r.seed,
    };
    let counts = run_ensemble(&cfg)?;
    let comparison = compare_counts(&cfg, &counts)?;
    let csv = counts_csv(&cfg, &counts);
    let json = to_json_doc(&oracle_report(&cfg, &comparison))?;
    let prefix = r.out.clone().unwrap_or_else(|| PathBuf::from("montecarlo"));
    write_artifact(&prefixed(&prefix, ".counts.csv"), &csv)?;
    write_artifact(&prefixed(&prefix, ".oracle.json"), &json)
}

fn filter_scan(mut scan: DeflectionScan, pair: Option<(usize, usize)>) -> DeflectionScan {
    let Some(want) = pair else { return scan };
    let keep: Vec<usize> = scan
        .pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| **p == want)
        .map(|(k, _)| k)
        .collect();
    scan.pairs = keep.iter().map(|&k| scan.pairs[k]).collect();
    scan.fits = keep.iter().map(|&k| scan.fits[k].clone()).collect();
    for row in &mut scan.rows {
        row.mean_shifts = keep.iter().map(|&k| row.mean_shifts[k]).collect();
    }
    scan
}

fn cmd_deflection(r: &Resolved) -> Result<()> {
    let scenario = make_scenario(r)?;
    let post = (!r.no_postselect).then(|| scenario.post());
    let scan = deflection_scan(scenario.pre(), post, &r.lambdas, r.sigma)?;
    let scan = filter_scan(scan, r.pair);
    let csv = scan_csv(&scan);
    let json = to_json_doc(&deflection_report(&scan))?;
    match &r.out {
        Some(prefix) => {
            write_artifact(&prefixed(prefix, ".scan.csv"), &csv)?;
            write_artifact(&prefixed(prefix, ".slope.json"), &json)
        }
        None => {
            let content = match r.format {
                OutFormat::Json => json,
                OutFormat::Csv => csv,
            };
            emit(None, &content)
        }
    }
}

fn cmd_spectra(r: &Resolved) -> Result<()> {
    let scenario = make_scenario(r)?;
    let lambda_max = r.lambdas.iter().cloned().fold(0.0, f64::max);
    if r.lambdas.is_empty() {
        return Err(SimError::invalid("spectra needs at least one lambda"));
    }
    // Default grid covers the undeflected line and any first-order shift.
    let x_min = r.x_min.unwrap_or(-(4.0 * r.sigma + lambda_max));
    let x_max = r.x_max.unwrap_or(4.0 * r.sigma + lambda_max);
    if !x_min.is_finite() || !x_max.is_finite() || x_max <= x_min {
        return Err(SimError::Config("x_max must exceed x_min".into()));
    }
    let xs = sample_grid(x_min, x_max, r.points);
    let mut scans = Vec::with_capacity(r.lambdas.len());
    for &lambda in &r.lambdas {
        let cs = evolve(scenario.pre(), lambda, r.sigma)?;
        let scan = if r.no_postselect {
            report::spectra_scan_unconditioned(&unconditioned(&cs), lambda, &xs, r.pair)
        } else {
            report::spectra_scan_postselected(&postselect(&cs, scenario.post())?, &xs, r.pair)
        };
        scans.push(scan);
    }
    let rep = SpectraReportOut {
        sigma: r.sigma,
        postselected: !r.no_postselect,
        scans,
    };
    let csv = spectra_csv(&rep);
    let json = to_json_doc(&rep)?;
    match &r.out {
        Some(prefix) => {
            write_artifact(&prefixed(prefix, ".spectra.csv"), &csv)?;
            write_artifact(&prefixed(prefix, ".spectra.json"), &json)
        }
        None => {
            let content = match r.format {
                OutFormat::Json => json,
                OutFormat::Csv => csv,
            };
            emit(None, &content)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let (args, run): (&CommonArgs, fn(&Resolved) -> Result<()>) = match &cli.command {
        Cmd::Pigeonhole(a) => (a, cmd_pigeonhole),
        Cmd::Patterns(a) => (a, cmd_patterns),
        Cmd::General(a) => (a, cmd_general),
        Cmd::Montecarlo(a) => (a, cmd_montecarlo),
        Cmd::Deflection(a) => (a, cmd_deflection),
        Cmd::Spectra(a) => (a, cmd_spectra),
    };
    run(&resolve(args)?)
}

/// Exit code for an error: 3 for impossible post-selection, 4 for IO,
/// 2 for everything else (invalid input or configuration).
pub fn exit_code(e: &SimError) -> i32 {
    match e {
        SimError::ImpossiblePostselection(_) => 3,
        SimError::Io(_) => 4,
        _ => 2,
    }
}

/// Parse and run. Returns the process exit code instead of exiting so the
/// whole CLI is testable in-process.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests print to stdout and succeed; real
            // parse errors go to stderr with the invalid-input code.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
