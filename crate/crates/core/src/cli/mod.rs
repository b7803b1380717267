//! Command-line front end: `solve`, `certify`, `sweep`, `gn` and `oracle-n1`.
//!
//! Exit status: 0 success, 1 usage error, 2 failed acceptance check,
//! 3 solver error (the error name is written to the result file).

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::gn::{check_inequality, k_opt, GNParams, TrialFamily};
use crate::monitors::{certify, n1_oracle_deviation, CertifyOptions};
use crate::shooting::{alpha_grid, find_alpha, n1_alpha_from_f, sweep_classify, GroundStateResult};
pub use config::{ConfigError, RunConfig};
use output::{profile_csv, read_f64, sweep_csv, to_json};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Environment variable that overrides the sampler seed.
pub const SEED_ENV: &str = "MLAP_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "mlap",
    version,
    about = "Radial ground states of the m-Laplacian free boundary problem"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shoot for the ground state and write result.json (and optionally a profile CSV).
    Solve(Flags),
    /// Re-run a stored solve and check every identity along the ground state.
    Certify(Flags),
    /// Classify shots on an alpha grid and count Stall/Crossing transitions.
    Sweep(Flags),
    /// Sharp Gagliardo-Nirenberg constant from the ground state, with sampled trials.
    Gn(Flags),
    /// Compare shooting against the one-dimensional energy quadrature.
    #[command(name = "oracle-n1")]
    OracleN1(Flags),
}

impl Command {
    fn parts(&self) -> (&'static str, &Flags) {
        match self {
            Command::Solve(f) => ("solve", f),
            Command::Certify(f) => ("certify", f),
            Command::Sweep(f) => ("sweep", f),
            Command::Gn(f) => ("gn", f),
            Command::OracleN1(f) => ("oracle-n1", f),
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct Flags {
    /// Flat key = value configuration file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "N")]
    pub n: Option<String>,
    #[arg(long)]
    pub m: Option<String>,
    /// power-minus-const, double-power, cubic-minus-linear or linear-minus-const
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub c0: Option<String>,
    #[arg(long)]
    pub c1: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    /// qp or jzz
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long = "rel-tol")]
    pub rel_tol: Option<String>,
    #[arg(long = "abs-tol")]
    pub abs_tol: Option<String>,
    #[arg(long = "r-max")]
    pub r_max: Option<String>,
    #[arg(long = "u-floor")]
    pub u_floor: Option<String>,
    #[arg(long = "vprime-floor")]
    pub vprime_floor: Option<String>,
    #[arg(long = "alpha-tol")]
    pub alpha_tol: Option<String>,
    #[arg(long = "trust-gap")]
    pub trust_gap: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long = "in")]
    pub input: Option<String>,
    #[arg(long)]
    pub report: Option<String>,
    #[arg(long)]
    pub table: Option<String>,
    /// lo:hi:n:log or lo:hi:n:lin
    #[arg(long = "alpha-grid")]
    pub alpha_grid: Option<String>,
    #[arg(long)]
    pub workers: Option<String>,
    #[arg(long)]
    pub samples: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Comma separated values of a for the identity of P.
    #[arg(long = "a-values")]
    pub a_values: Option<String>,
    #[arg(long = "u-rep")]
    pub u_rep: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let all: [(&'static str, &Option<String>); 29] = [
            ("N", &self.n),
            ("m", &self.m),
            ("family", &self.family),
            ("c0", &self.c0),
            ("c1", &self.c1),
            ("gamma", &self.gamma),
            ("s", &self.s),
            ("q", &self.q),
            ("lambda", &self.lambda),
            ("preset", &self.preset),
            ("p", &self.p),
            ("rel-tol", &self.rel_tol),
            ("abs-tol", &self.abs_tol),
            ("r-max", &self.r_max),
            ("u-floor", &self.u_floor),
            ("vprime-floor", &self.vprime_floor),
            ("alpha-tol", &self.alpha_tol),
            ("trust-gap", &self.trust_gap),
            ("out", &self.out),
            ("profile", &self.profile),
            ("in", &self.input),
            ("report", &self.report),
            ("table", &self.table),
            ("alpha-grid", &self.alpha_grid),
            ("workers", &self.workers),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("a-values", &self.a_values),
            ("u-rep", &self.u_rep),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Io(s) => write!(f, "I/O error: {s}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Exit status and the files written by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit: i32,
    pub files: Vec<PathBuf>,
    pub message: String,
}

/// Merges defaults, the configuration file, flags and `MLAP_SEED`.
pub fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let (name, flags) = cli.command.parts();
    let mut cfg = RunConfig::default();
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_kv(&text)?;
    }
    cfg.command = name.to_string();
    cfg.apply_map(flags.pairs())?;
    if let Ok(seed) = std::env::var(SEED_ENV) {
        cfg.set("seed", &seed)?;
    }
    fill_default_paths(&mut cfg);
    Ok(cfg)
}

fn fill_default_paths(cfg: &mut RunConfig) {
    let default_out = match cfg.command.as_str() {
        "solve" => "result.json",
        "certify" => "",
        "sweep" => "sweep.json",
        "gn" => "gn.json",
        "oracle-n1" => "oracle.json",
        _ => "",
    };
    if cfg.out.is_empty() {
        cfg.out = default_out.into();
    }
    if cfg.command == "certify" {
        if cfg.input.is_empty() {
            cfg.input = "result.json".into();
        }
        if cfg.report.is_empty() {
            cfg.report = "report.json".into();
        }
    }
    if cfg.command == "sweep" && cfg.table.is_empty() {
        cfg.table = "table.csv".into();
    }
}

fn write_file(path: &Path, text: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    files.push(path.to_path_buf());
    Ok(())
}

fn json_text<T: Serialize>(v: &T) -> Result<String, CliError> {
    to_json(v).map_err(|e| CliError::Io(format!("serialization: {e}")))
}

#[derive(Serialize)]
struct ErrorOutput<'a> {
    config: &'a BTreeMap<String, String>,
    error: &'static str,
    message: String,
}

fn solver_failure(
    cfg: &RunConfig,
    path: &str,
    err: &Error,
    mut files: Vec<PathBuf>,
) -> Result<RunOutcome, CliError> {
    let map = cfg.to_map();
    let text = json_text(&ErrorOutput {
        config: &map,
        error: err.name(),
        message: err.to_string(),
    })?;
    write_file(Path::new(path), &text, &mut files)?;
    Ok(RunOutcome {
        exit: EXIT_SOLVER,
        files,
        message: format!("{}: {err}", err.name()),
    })
}

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    config: BTreeMap<String, String>,
    alpha_star: f64,
    #[serde(rename = "R_star", serialize_with = "output::serialize_f64")]
    r_star: f64,
    residuals: crate::shooting::GroundStateResiduals,
    iterations: usize,
    bracket: (f64, f64),
    #[serde(serialize_with = "output::serialize_opt_f64")]
    r_b: Option<f64>,
    nodes: usize,
    warnings: &'a [String],
    classification_trace: &'a [crate::shooting::TraceEntry],
}

fn solve_once(cfg: &RunConfig) -> Result<GroundStateResult, Error> {
    let params = cfg.params()?;
    let spec = cfg.spec()?;
    find_alpha(&params, &spec, None, &cfg.solve_controls())
}

fn run_solve(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let files = Vec::new();
    cfg.params().map_err(usage)?;
    cfg.spec().map_err(usage)?;
    let res = match solve_once(cfg) {
        Ok(r) => r,
        Err(e) => return solver_failure(cfg, &cfg.out, &e, files),
    };
    let mut files = files;
    let out = SolveOutput {
        config: cfg.to_map(),
        alpha_star: res.alpha_star,
        r_star: res.r_star,
        residuals: res.residuals,
        iterations: res.iterations,
        bracket: res.bracket,
        r_b: res.profile.events.r_b,
        nodes: res.profile.nodes.len(),
        warnings: &res.warnings,
        classification_trace: &res.classification_trace,
    };
    write_file(Path::new(&cfg.out), &json_text(&out)?, &mut files)?;
    if !cfg.profile.is_empty() {
        write_file(
            Path::new(&cfg.profile),
            &profile_csv(&res.profile),
            &mut files,
        )?;
    }
    Ok(RunOutcome {
        exit: EXIT_OK,
        files,
        message: format!(
            "alpha_star = {:.16e}, R_star = {:.16e}",
            res.alpha_star, res.r_star
        ),
    })
}

fn run_certify(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let text = std::fs::read_to_string(&cfg.input)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", cfg.input)))?;
    let stored: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{} is not JSON: {e}", cfg.input)))?;
    if let Some(err) = stored.get("error") {
        return Err(CliError::Usage(format!(
            "{} records a failed solve ({err})",
            cfg.input
        )));
    }
    let map = stored
        .get("config")
        .and_then(|c| c.as_object())
        .ok_or_else(|| CliError::Usage(format!("{} has no config object", cfg.input)))?;
    let mut solve_cfg = RunConfig::default();
    for (k, v) in map {
        let v = v
            .as_str()
            .ok_or_else(|| CliError::Usage(format!("config value for {k} is not a string")))?;
        solve_cfg.set(k, v)?;
    }
    let params = solve_cfg.params().map_err(usage)?;
    let spec = solve_cfg.spec().map_err(usage)?;
    let res = match solve_once(&solve_cfg) {
        Ok(r) => r,
        Err(e) => return solver_failure(cfg, &cfg.report, &e, Vec::new()),
    };
    let options = CertifyOptions {
        a_values: cfg.a_list()?,
        u_rep: cfg.u_rep_value()?,
        controls: solve_cfg.ode_controls(),
        ..CertifyOptions::default()
    };
    let mut report = certify(&params, &spec, &res, &options);
    if let Some(stored_alpha) = stored.get("alpha_star").and_then(read_f64) {
        report.checks.push(crate::monitors::Check::new(
            "reproduced_alpha",
            "alpha_star of the re-run equals the stored value",
            (res.alpha_star - stored_alpha).abs() / stored_alpha.abs(),
            0.0,
        ));
    }
    let all_pass = report.all_pass();
    let out = json!({
        "config": cfg.to_map(),
        "source_config": solve_cfg.to_map(),
        "alpha_star": res.alpha_star,
        "all_pass": all_pass,
        "checks": report.checks,
        "skipped": report.skipped,
        "a_values": report.a_values,
        "u_rep": report.u_rep,
    });
    let mut files = Vec::new();
    write_file(Path::new(&cfg.report), &json_text(&out)?, &mut files)?;
    let failed: Vec<String> = report.failures().iter().map(|c| c.check.clone()).collect();
    Ok(RunOutcome {
        exit: if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED },
        files,
        message: if all_pass {
            format!("{} checks passed", report.checks.len())
        } else {
            format!("failed checks: {}", failed.join(", "))
        },
    })
}

fn run_sweep(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let params = cfg.params().map_err(usage)?;
    let spec = cfg.spec().map_err(usage)?;
    let (lo, hi, n, log) = cfg.grid_spec(spec.b)?;
    let grid = alpha_grid(lo, hi, n, log);
    let workers = if cfg.workers == 0 {
        None
    } else {
        Some(cfg.workers)
    };
    let table = match sweep_classify(&params, &spec, &grid, &cfg.ode_controls(), workers) {
        Ok(t) => t,
        Err(e @ (Error::Domain(_) | Error::InvalidParameter(_))) => return Err(usage(e)),
        Err(e) => return solver_failure(cfg, &cfg.out, &e, Vec::new()),
    };
    let unique = table.stall_to_crossing == 1 && table.crossing_to_stall == 0;
    let out = json!({
        "config": cfg.to_map(),
        "stall_to_crossing": table.stall_to_crossing,
        "crossing_to_stall": table.crossing_to_stall,
        "undetermined": table.undetermined,
        "low_dim": params.low_dim(),
        "rows": table.rows,
    });
    let mut files = Vec::new();
    write_file(Path::new(&cfg.out), &json_text(&out)?, &mut files)?;
    write_file(Path::new(&cfg.table), &sweep_csv(&table), &mut files)?;
    let exit = if params.low_dim() && !unique {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    };
    Ok(RunOutcome {
        exit,
        files,
        message: format!(
            "{} Stall->Crossing, {} Crossing->Stall, {} undetermined",
            table.stall_to_crossing, table.crossing_to_stall, table.undetermined
        ),
    })
}

fn run_gn(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let gn = match cfg.preset.as_str() {
        "" => GNParams::new(cfg.n, cfg.m, cfg.q, cfg.s),
        "qp" => GNParams::new(cfg.n, 2.0, 1.0, cfg.p / 2.0),
        other => {
            return Err(CliError::Usage(format!(
                "preset {other:?} has no Gagliardo-Nirenberg form; use qp"
            )))
        }
    }
    .map_err(usage)?;
    let res = match k_opt(&gn, &cfg.solve_controls()) {
        Ok(r) => r,
        Err(e) => return solver_failure(cfg, &cfg.out, &e, Vec::new()),
    };
    let trials = [
        (TrialFamily::GaussianBumps, cfg.seed),
        (TrialFamily::Tents, cfg.seed.wrapping_add(1)),
    ];
    let mut reports = Vec::new();
    for (family, seed) in trials {
        match check_inequality(
            &gn,
            res.k_opt,
            family,
            cfg.samples,
            seed,
            Some(&res.profile),
        ) {
            Ok(r) => reports.push(r),
            Err(e) => return solver_failure(cfg, &cfg.out, &e, Vec::new()),
        }
    }
    let violations: usize = reports.iter().map(|r| r.violations).sum();
    let max_quotient = reports.iter().map(|r| r.max_quotient).fold(0.0, f64::max);
    let pass = violations == 0 && res.scale_invariance <= 1e-10 && res.resolution_change <= 1e-9;
    let trial_summary: Vec<_> = reports
        .iter()
        .map(|r| {
            json!({
                "family": r.family,
                "seed": r.seed,
                "samples": r.samples,
                "max_quotient": r.max_quotient,
                "margin": r.margin,
                "violations": r.violations,
            })
        })
        .collect();
    let out = json!({
        "config": cfg.to_map(),
        "theta": res.theta,
        "k_opt": res.k_opt,
        "norms": {"s": res.norm_s, "q": res.norm_q, "grad_m": res.grad_norm_m},
        "lambda_used": res.lambda_used,
        "alpha_star": res.alpha_star,
        "R_star": if res.r_star.is_finite() { json!(res.r_star) } else { json!("inf") },
        "admissibility": gn.admissibility,
        "scale_invariance": res.scale_invariance,
        "resolution_change": res.resolution_change,
        "sampler_seed": cfg.seed,
        "violations": violations,
        "max_quotient": max_quotient,
        "trials": trial_summary,
        "warnings": res.warnings,
    });
    let mut files = Vec::new();
    write_file(Path::new(&cfg.out), &json_text(&out)?, &mut files)?;
    Ok(RunOutcome {
        exit: if pass { EXIT_OK } else { EXIT_CHECK_FAILED },
        files,
        message: format!(
            "theta = {}, K_opt = {:.16e}, violations = {violations}",
            res.theta, res.k_opt
        ),
    })
}

fn run_oracle_n1(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    if cfg.n != 1.0 {
        return Err(CliError::Usage(format!(
            "oracle-n1 needs N = 1, got {}",
            cfg.n
        )));
    }
    let spec = cfg.spec().map_err(usage)?;
    cfg.params().map_err(usage)?;
    let alpha_f = match n1_alpha_from_f(&spec) {
        Ok(a) => a,
        Err(e) => return solver_failure(cfg, &cfg.out, &e, Vec::new()),
    };
    let res = match solve_once(cfg) {
        Ok(r) => r,
        Err(e) => return solver_failure(cfg, &cfg.out, &e, Vec::new()),
    };
    let deviation = match n1_oracle_deviation(&res.profile) {
        Ok(d) => d,
        Err(e) => return solver_failure(cfg, &cfg.out, &e, Vec::new()),
    };
    let rel = (res.alpha_star - alpha_f).abs() / alpha_f;
    let pass = rel <= 1e-8 && deviation <= 1e-6;
    let out = json!({
        "config": cfg.to_map(),
        "alpha_from_F": alpha_f,
        "alpha_shooting": res.alpha_star,
        "alpha_rel_diff": rel,
        "profile_max_rel_diff": deviation,
        "pass": pass,
    });
    let mut files = Vec::new();
    write_file(Path::new(&cfg.out), &json_text(&out)?, &mut files)?;
    Ok(RunOutcome {
        exit: if pass { EXIT_OK } else { EXIT_CHECK_FAILED },
        files,
        message: format!("alpha relative difference {rel:e}, profile deviation {deviation:e}"),
    })
}

/// Executes one configured run.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    match cfg.command.as_str() {
        "solve" => run_solve(cfg),
        "certify" => run_certify(cfg),
        "sweep" => run_sweep(cfg),
        "gn" => run_gn(cfg),
        "oracle-n1" => run_oracle_n1(cfg),
        other => Err(CliError::Usage(format!("unknown command {other:?}"))),
    }
}

/// Parses `args`, runs and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_USAGE;
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            if outcome.exit == EXIT_OK {
                println!("{}", outcome.message);
            } else {
                eprintln!("{}", outcome.message);
            }
            outcome.exit
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("mlap").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_file_and_defaults_are_explicit() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.cfg");
        std::fs::write(&file, "N = 2\nm = 3\nfamily = cubic-minus-linear\n").unwrap();
        let cli = parse(&["solve", "--config", file.to_str().unwrap(), "--m", "2.5"]);
        let cfg = build_config(&cli).unwrap();
        assert_eq!((cfg.n, cfg.m), (2.0, 2.5));
        assert_eq!(cfg.out, "result.json");
        assert_eq!(cfg.to_map().len(), config::KEYS.len());
    }

    #[test]
    fn bad_flag_values_are_usage_errors() {
        let cli = parse(&["solve", "--N", "abc"]);
        assert!(matches!(build_config(&cli), Err(CliError::Usage(_))));
        let cfg = RunConfig {
            family: "nope".into(),
            ..RunConfig::default()
        };
        assert!(matches!(run(&cfg), Err(CliError::Usage(_))));
    }

    #[test]
    fn unknown_flags_exit_with_usage_status() {
        assert_eq!(
            main_with_args(["mlap", "solve", "--bogus", "1"]),
            EXIT_USAGE
        );
    }
}
