//! Command-line front end: `simulate`, `sweep-delta`, `balance` and
//! `analyze` subcommands over a flat key-value config file with
//! flag overrides (flags win).

mod config;

pub use config::{parse_list, ConfigFile};

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::datamodel::{load_csv, stratify, ColumnRoles};
use crate::error::{Error, Result};
use crate::estimators::{sdipe, EstimatorKind, WeightDiagnostics};
use crate::impute::ImputationConfig;
use crate::inference::{
    balance_report, bootstrap_ci, run_monte_carlo, sensitivity_sweep, BalanceRow, McScenario,
    SimReportRow,
};
use crate::numstat::RngStream;
use crate::simgen::{generate_masked, SimConfig};

#[derive(Parser, Debug)]
#[command(
    name = "sdipe",
    version,
    about = "Stratified delta-imputed propensity estimation of average treatment effects"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Monte Carlo study: bias, confidence intervals and coverage over a
    /// scenario grid, for both estimators.
    Simulate(GridArgs),
    /// Average bias over a grid of shift parameters (plot-ready CSV).
    SweepDelta(SweepArgs),
    /// Covariate-balance report averaged over replicates.
    Balance(GridArgs),
    /// Estimate the ATE on a user-supplied CSV with a partially observed
    /// confounder column.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SharedArgs {
    /// Master seed; every output is a pure function of (config, seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Flat key-value config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Monte Carlo replicates per scenario.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Bootstrap resamples per replicate.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Number of imputations.
    #[arg(long)]
    pub m: Option<usize>,
    /// Imputation shift parameter.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    /// Sample sizes, comma separated.
    #[arg(long)]
    pub n: Option<String>,
    /// Treatment prevalence targets, comma separated.
    #[arg(long)]
    pub prevalence: Option<String>,
    /// Missingness targets, comma separated.
    #[arg(long)]
    pub missing: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Shift-parameter grid, comma separated.
    #[arg(long)]
    pub delta_grid: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    /// Input CSV path.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Outcome column name.
    #[arg(long)]
    pub outcome: Option<String>,
    /// Treatment column name (values 0/1).
    #[arg(long)]
    pub treatment: Option<String>,
    /// Partially observed confounder column name.
    #[arg(long)]
    pub mnar: Option<String>,
    /// Fully observed covariate columns, comma separated.
    #[arg(long)]
    pub covariates: Option<String>,
    /// Token marking a missing confounder cell (empty cells always count).
    #[arg(long)]
    pub na_token: Option<String>,
}

/// Fully resolved run configuration (defaults < config file < flags).
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub replicates: usize,
    pub bootstrap_b: usize,
    pub m: usize,
    pub delta: f64,
    pub proper: bool,
    pub ci_level: f64,
    pub n_grid: Vec<usize>,
    pub prevalence_grid: Vec<f64>,
    pub missing_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub beta0: f64,
    pub noise_sd: f64,
    /// Estimator for the sweep subcommand.
    pub estimator: EstimatorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub treatment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mnar: Option<String>,
    pub covariates: Vec<String>,
    pub na_token: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out_dir: PathBuf::from("sdipe_out"),
            replicates: 500,
            bootstrap_b: 200,
            m: 10,
            delta: 0.0,
            proper: true,
            ci_level: 0.95,
            n_grid: vec![500, 1000],
            prevalence_grid: vec![0.2, 0.4],
            missing_grid: vec![0.1, 0.3, 0.5],
            delta_grid: vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0],
            beta0: 0.0,
            noise_sd: 1.0,
            estimator: EstimatorKind::Sdipe,
            input: None,
            outcome: None,
            treatment: None,
            mnar: None,
            covariates: Vec::new(),
            na_token: "NA".to_string(),
        }
    }
}

impl RunConfig {
    fn apply_file(&mut self, file: &ConfigFile) -> Result<()> {
        if let Some(v) = file.parse_value::<u64>("seed")? {
            self.seed = v;
        }
        if let Some(v) = file.get("out") {
            self.out_dir = PathBuf::from(v);
        }
        if let Some(v) = file.parse_value::<usize>("replicates")? {
            self.replicates = v;
        }
        if let Some(v) = file.parse_value::<usize>("bootstrap")? {
            self.bootstrap_b = v;
        }
        if let Some(v) = file.parse_value::<usize>("m")? {
            self.m = v;
        }
        if let Some(v) = file.parse_value::<f64>("delta")? {
            self.delta = v;
        }
        if let Some(v) = file.parse_value::<bool>("proper")? {
            self.proper = v;
        }
        if let Some(v) = file.parse_value::<f64>("ci_level")? {
            self.ci_level = v;
        }
        if let Some(v) = file.parse_list::<usize>("n")? {
            self.n_grid = v;
        }
        if let Some(v) = file.parse_list::<f64>("prevalence")? {
            self.prevalence_grid = v;
        }
        if let Some(v) = file.parse_list::<f64>("missing")? {
            self.missing_grid = v;
        }
        if let Some(v) = file.parse_list::<f64>("delta_grid")? {
            self.delta_grid = v;
        }
        if let Some(v) = file.parse_value::<f64>("beta0")? {
            self.beta0 = v;
        }
        if let Some(v) = file.parse_value::<f64>("noise_sd")? {
            self.noise_sd = v;
        }
        if let Some(v) = file.get("estimator") {
            self.estimator = v.parse()?;
        }
        if let Some(v) = file.get("input") {
            self.input = Some(PathBuf::from(v));
        }
        for (key, slot) in [
            ("outcome", &mut self.outcome),
            ("treatment", &mut self.treatment),
            ("mnar", &mut self.mnar),
        ] {
            if let Some(v) = file.get(key) {
                *slot = Some(v.to_string());
            }
        }
        if let Some(v) = file.get("covariates") {
            self.covariates = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
        if let Some(v) = file.get("na_token") {
            self.na_token = v.to_string();
        }
        Ok(())
    }

    fn apply_shared(&mut self, shared: &SharedArgs) -> Result<()> {
        if let Some(path) = &shared.config {
            let file = ConfigFile::load(path)?;
            self.apply_file(&file)?;
        }
        if let Some(v) = shared.seed {
            self.seed = v;
        }
        if let Some(v) = &shared.out {
            self.out_dir = v.clone();
        }
        if let Some(v) = shared.replicates {
            self.replicates = v;
        }
        if let Some(v) = shared.bootstrap {
            self.bootstrap_b = v;
        }
        if let Some(v) = shared.m {
            self.m = v;
        }
        if let Some(v) = shared.delta {
            self.delta = v;
        }
        Ok(())
    }

    fn apply_grid(&mut self, args: &GridArgs) -> Result<()> {
        self.apply_shared(&args.shared)?;
        if let Some(raw) = &args.n {
            self.n_grid =
                parse_list(raw).map_err(|_| Error::Config(format!("cannot parse --n '{raw}'")))?;
        }
        if let Some(raw) = &args.prevalence {
            self.prevalence_grid = parse_list(raw)
                .map_err(|_| Error::Config(format!("cannot parse --prevalence '{raw}'")))?;
        }
        if let Some(raw) = &args.missing {
            self.missing_grid = parse_list(raw)
                .map_err(|_| Error::Config(format!("cannot parse --missing '{raw}'")))?;
        }
        Ok(())
    }

    fn validate_grid(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.bootstrap_b < 2 {
            return Err(Error::Config("bootstrap must be at least 2".into()));
        }
        for &n in &self.n_grid {
            if n < 2 {
                return Err(Error::Config(format!("n must be at least 2, got {n}")));
            }
        }
        for &p in self.prevalence_grid.iter().chain(&self.missing_grid) {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Config(format!("grid probabilities must lie in (0,1), got {p}")));
            }
        }
        self.icfg().validate()?;
        Ok(())
    }

    fn sim_config(&self, n: usize, prevalence: f64, missing: f64) -> SimConfig {
        SimConfig {
            n,
            prevalence_target: prevalence,
            missing_target: missing,
            beta0: self.beta0,
            noise_sd: self.noise_sd,
            seed: self.seed,
            ..SimConfig::default()
        }
    }

    fn icfg(&self) -> ImputationConfig {
        ImputationConfig {
            m: self.m,
            delta: self.delta,
            proper: self.proper,
            deterministic: false,
        }
    }
}

/// Run a parsed command line. Errors map to exit codes via
/// [`Error::exit_code`].
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::SweepDelta(args) => cmd_sweep_delta(&args),
        Command::Balance(args) => cmd_balance(&args),
        Command::Analyze(args) => cmd_analyze(&args),
    }
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::Config(format!("cannot create output directory: {e}")))
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    wall_time_secs: f64,
    config: &'a RunConfig,
}

fn write_manifest(cfg: &RunConfig, command: &str, started: Instant) -> Result<()> {
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        wall_time_secs: started.elapsed().as_secs_f64(),
        config: cfg,
    };
    let path = cfg.out_dir.join("manifest.json");
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, &manifest)?;
    file.write_all(b"\n")?;
    Ok(())
}

fn scenario_label(kind: EstimatorKind, sim: &SimConfig) -> String {
    format!(
        "{kind} n={} prevalence={} missing={}",
        sim.n, sim.prevalence_target, sim.missing_target
    )
}

// -------------------------------------------------------------------
// simulate
// -------------------------------------------------------------------

fn cmd_simulate(args: &GridArgs) -> Result<()> {
    let started = Instant::now();
    let mut cfg = RunConfig::default();
    cfg.apply_grid(args)?;
    cfg.validate_grid()?;
    ensure_out_dir(&cfg)?;

    let master = RngStream::new(cfg.seed);
    let mut rows: Vec<SimReportRow> = Vec::new();
    let mut scenario_idx = 0u64;
    for &n in &cfg.n_grid {
        for &prevalence in &cfg.prevalence_grid {
            for &missing in &cfg.missing_grid {
                for kind in [EstimatorKind::Sdipe, EstimatorKind::Baseline] {
                    let sc = McScenario {
                        sim: cfg.sim_config(n, prevalence, missing),
                        icfg: cfg.icfg(),
                        replicates: cfg.replicates,
                        bootstrap_b: cfg.bootstrap_b,
                        ci_level: cfg.ci_level,
                        estimator: kind,
                    };
                    let label = scenario_label(kind, &sc.sim);
                    let row = run_monte_carlo(&sc, &master.substream(scenario_idx))
                        .map_err(|e| e.with_context(label.clone()))?;
                    if row.failed_replicates * 50 > cfg.replicates {
                        eprintln!(
                            "warning: {label}: {} of {} replicates failed",
                            row.failed_replicates, cfg.replicates
                        );
                    }
                    rows.push(row);
                    scenario_idx += 1;
                }
            }
        }
    }

    write_simulation_csv(&rows, &cfg.out_dir.join("simulation_report.csv"))?;
    write_raw_estimates_csv(&rows, &cfg.out_dir.join("raw_estimates.csv"))?;
    write_manifest(&cfg, "simulate", started)?;
    println!(
        "simulate: {} scenarios -> {}",
        rows.len(),
        cfg.out_dir.join("simulation_report.csv").display()
    );
    Ok(())
}

fn write_simulation_csv(rows: &[SimReportRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "method",
        "n",
        "prevalence",
        "missing_pct",
        "delta",
        "relative_bias_pct",
        "ci_lo_mean",
        "ci_hi_mean",
        "coverage",
    ])?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            r.n.to_string(),
            format!("{}", r.prevalence),
            format!("{}", r.missing_pct),
            format!("{}", r.delta),
            format!("{}", r.relative_bias_pct),
            format!("{}", r.ci_lo_mean),
            format!("{}", r.ci_hi_mean),
            format!("{}", r.coverage),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_raw_estimates_csv(rows: &[SimReportRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "n", "prevalence", "missing_pct", "delta", "replicate", "tau_hat"])?;
    for r in rows {
        for (i, tau) in r.raw_estimates.iter().enumerate() {
            w.write_record([
                r.method.to_string(),
                r.n.to_string(),
                format!("{}", r.prevalence),
                format!("{}", r.missing_pct),
                format!("{}", r.delta),
                i.to_string(),
                format!("{tau}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

// -------------------------------------------------------------------
// sweep-delta
// -------------------------------------------------------------------

fn cmd_sweep_delta(args: &SweepArgs) -> Result<()> {
    let started = Instant::now();
    let mut cfg = RunConfig::default();
    cfg.apply_grid(&args.grid)?;
    if let Some(raw) = &args.delta_grid {
        cfg.delta_grid =
            parse_list(raw).map_err(|_| Error::Config(format!("cannot parse --delta-grid '{raw}'")))?;
    }
    cfg.validate_grid()?;
    if cfg.delta_grid.is_empty() {
        return Err(Error::Config("delta grid must not be empty".into()));
    }
    ensure_out_dir(&cfg)?;

    let master = RngStream::new(cfg.seed);
    let mut scenario_idx = 0u64;
    for &prevalence in &cfg.prevalence_grid {
        let mut rows = Vec::new();
        for &n in &cfg.n_grid {
            for &missing in &cfg.missing_grid {
                let sc = McScenario {
                    sim: cfg.sim_config(n, prevalence, missing),
                    icfg: cfg.icfg(),
                    replicates: cfg.replicates,
                    bootstrap_b: cfg.bootstrap_b,
                    ci_level: cfg.ci_level,
                    estimator: cfg.estimator,
                };
                let label = scenario_label(cfg.estimator, &sc.sim);
                let sweep = sensitivity_sweep(&sc, &cfg.delta_grid, &master.substream(scenario_idx))
                    .map_err(|e| e.with_context(label))?;
                rows.extend(sweep);
                scenario_idx += 1;
            }
        }
        let pct = prevalence * 100.0;
        let path = cfg.out_dir.join(format!("delta_sensitivity_prev{pct}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["delta", "missing_pct", "n", "avg_bias"])?;
        for r in &rows {
            w.write_record([
                format!("{}", r.delta),
                format!("{}", r.missing_pct),
                r.n.to_string(),
                format!("{}", r.avg_bias),
            ])?;
        }
        w.flush()?;
        println!("sweep-delta: prevalence {prevalence} -> {}", path.display());
    }
    write_manifest(&cfg, "sweep-delta", started)?;
    Ok(())
}

// -------------------------------------------------------------------
// balance
// -------------------------------------------------------------------

fn cmd_balance(args: &GridArgs) -> Result<()> {
    let started = Instant::now();
    let mut cfg = RunConfig::default();
    cfg.apply_grid(args)?;
    cfg.validate_grid()?;
    ensure_out_dir(&cfg)?;

    let master = RngStream::new(cfg.seed);
    let path = cfg.out_dir.join("balance_report.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["prevalence", "missing_pct", "confounder", "subgroup", "method", "abs_diff"])?;

    let mut scenario_idx = 0u64;
    for &n in &cfg.n_grid {
        for &prevalence in &cfg.prevalence_grid {
            for &missing in &cfg.missing_grid {
                let sim = cfg.sim_config(n, prevalence, missing);
                let scenario_stream = master.substream(scenario_idx);
                let rows = average_balance(&sim, &cfg, &scenario_stream)
                    .map_err(|e| e.with_context(scenario_label(EstimatorKind::Sdipe, &sim)))?;
                for (row, mean_diff) in rows {
                    w.write_record([
                        format!("{prevalence}"),
                        format!("{}", missing * 100.0),
                        row.confounder.to_string(),
                        row.subgroup.to_string(),
                        row.method.to_string(),
                        format!("{mean_diff}"),
                    ])?;
                }
                scenario_idx += 1;
            }
        }
    }
    w.flush()?;
    write_manifest(&cfg, "balance", started)?;
    println!("balance -> {}", path.display());
    Ok(())
}

/// Average the per-dataset balance rows over replicates; failed
/// replicates (degenerate subgroups) are skipped and counted.
fn average_balance(
    sim: &SimConfig,
    cfg: &RunConfig,
    scenario_stream: &RngStream,
) -> Result<Vec<(BalanceRow, f64)>> {
    let mut sums: Vec<(BalanceRow, f64)> = Vec::new();
    let mut successes = 0usize;
    let mut failed = 0usize;
    for r in 0..cfg.replicates {
        let rep = scenario_stream.substream(r as u64);
        let mut gen_rng = rep.substream(0);
        let (ds, _) = generate_masked(sim, &mut gen_rng)?;
        let mut per_method = Vec::with_capacity(8);
        let mut ok = true;
        for (slot, kind) in [EstimatorKind::Sdipe, EstimatorKind::Baseline].iter().enumerate() {
            let mut est_rng = rep.substream(1 + slot as u64);
            match balance_report(&ds, &cfg.icfg(), *kind, &mut est_rng) {
                Ok(rows) => per_method.extend(rows),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            failed += 1;
            continue;
        }
        if sums.is_empty() {
            sums = per_method.iter().map(|row| (row.clone(), 0.0)).collect();
        }
        for (acc, row) in sums.iter_mut().zip(&per_method) {
            acc.1 += row.abs_diff;
        }
        successes += 1;
    }
    if successes == 0 {
        return Err(Error::ReplicateFailures {
            failed,
            total: cfg.replicates,
        });
    }
    if failed * 50 > cfg.replicates {
        eprintln!("warning: balance: {failed} of {} replicates failed", cfg.replicates);
    }
    Ok(sums
        .into_iter()
        .map(|(row, sum)| (row, sum / successes as f64))
        .collect())
}

// -------------------------------------------------------------------
// analyze
// -------------------------------------------------------------------

#[derive(Serialize)]
struct ClipCounts {
    #[serde(skip_serializing_if = "Option::is_none")]
    observed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    missing: Option<usize>,
}

#[derive(Serialize)]
struct AnalysisOutput {
    tau_hat: f64,
    ci: (f64, f64),
    p_obs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_obs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_miss: Option<f64>,
    n: usize,
    missing_pct: f64,
    missing_pct_treated: f64,
    missing_pct_control: f64,
    delta: f64,
    m: usize,
    seed: u64,
    bootstrap_b: usize,
    weight_diagnostics: WeightDiagnostics,
    clip_counts: ClipCounts,
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let started = Instant::now();
    let mut cfg = RunConfig::default();
    cfg.apply_shared(&args.shared)?;
    if let Some(v) = &args.input {
        cfg.input = Some(v.clone());
    }
    for (slot, value) in [
        (&mut cfg.outcome, &args.outcome),
        (&mut cfg.treatment, &args.treatment),
        (&mut cfg.mnar, &args.mnar),
    ] {
        if let Some(v) = value {
            *slot = Some(v.clone());
        }
    }
    if let Some(raw) = &args.covariates {
        cfg.covariates = raw.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    if let Some(v) = &args.na_token {
        cfg.na_token = v.clone();
    }
    cfg.icfg().validate()?;
    if cfg.bootstrap_b < 2 {
        return Err(Error::Config("bootstrap must be at least 2".into()));
    }

    let input = cfg.input.clone().ok_or_else(|| Error::Config("analyze requires --input".into()))?;
    let roles = ColumnRoles::new(
        cfg.outcome.clone().ok_or_else(|| Error::Config("analyze requires --outcome".into()))?,
        cfg.treatment.clone().ok_or_else(|| Error::Config("analyze requires --treatment".into()))?,
        cfg.mnar.clone().ok_or_else(|| Error::Config("analyze requires --mnar".into()))?,
        cfg.covariates.clone(),
    )
    .with_na_token(cfg.na_token.clone());
    ensure_out_dir(&cfg)?;

    let ds = load_csv(&input, &roles)?;
    let icfg = cfg.icfg();
    let master = RngStream::new(cfg.seed);

    let mut est_rng = master.substream(0);
    let est = sdipe(&ds, &icfg, &mut est_rng)?;

    let estimator = |ds: &crate::datamodel::Dataset, rng: &mut RngStream| {
        sdipe(ds, &icfg, rng).map(|e| e.tau_hat)
    };
    let ci = bootstrap_ci(&ds, &estimator, cfg.bootstrap_b, cfg.ci_level, &master.substream(1))?;

    let sv = stratify(&ds);
    let arm_missing = |arm: u8| {
        let rows: Vec<usize> = (0..ds.n()).filter(|&i| ds.a()[i] == arm).collect();
        if rows.is_empty() {
            return 0.0;
        }
        let missing = rows.iter().filter(|&&i| ds.r_z()[i] == 0).count();
        missing as f64 / rows.len() as f64 * 100.0
    };

    let output = AnalysisOutput {
        tau_hat: est.tau_hat,
        ci,
        p_obs: est.p_obs,
        tau_obs: est.tau_obs,
        tau_miss: est.tau_miss,
        n: ds.n(),
        missing_pct: (1.0 - sv.p_obs) * 100.0,
        missing_pct_treated: arm_missing(1),
        missing_pct_control: arm_missing(0),
        delta: icfg.delta,
        m: icfg.m,
        seed: cfg.seed,
        bootstrap_b: cfg.bootstrap_b,
        clip_counts: ClipCounts {
            observed: est.diagnostics.observed.as_ref().map(|s| s.clip_count),
            missing: est.diagnostics.missing.as_ref().map(|s| s.clip_count),
        },
        weight_diagnostics: est.diagnostics,
    };

    let path = cfg.out_dir.join("analysis.json");
    let mut file = std::fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut file, &output)?;
    file.write_all(b"\n")?;
    write_manifest(&cfg, "analyze", started)?;
    println!("analyze -> {}", path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("run.cfg");
        std::fs::write(&cfg_path, "seed = 7\nreplicates = 9\nm = 4\n").unwrap();
        let args = GridArgs {
            shared: SharedArgs {
                seed: Some(99),
                config: Some(cfg_path),
                out: None,
                replicates: None,
                bootstrap: None,
                m: None,
                delta: None,
            },
            n: Some("250".into()),
            prevalence: None,
            missing: None,
        };
        let mut cfg = RunConfig::default();
        cfg.apply_grid(&args).unwrap();
        assert_eq!(cfg.seed, 99); // flag wins
        assert_eq!(cfg.replicates, 9); // file wins over default
        assert_eq!(cfg.m, 4);
        assert_eq!(cfg.n_grid, vec![250]);
    }

    #[test]
    fn bad_grid_values_are_config_errors() {
        let mut cfg = RunConfig::default();
        cfg.missing_grid = vec![1.5];
        let err = cfg.validate_grid().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
