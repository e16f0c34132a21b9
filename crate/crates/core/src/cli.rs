//! Command-line front end: configuration resolution, experiment dispatch and
//! CSV/manifest output.
//!
//! Settings are layered: built-in defaults, then an optional flat `key = value`
//! configuration file, then command-line flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::estimator::{db_to_linear, ChannelParams};
use crate::geometry::{CorrelationModel, CorrelationParams};
use crate::outage::EigenMode;
use crate::simulation::{
    closed_form_outage_curve, distortion_samples, mc_outage, sweep_eigenvalue, sweep_nodes, GeometryMode,
    SimConfig,
};
use crate::validation::{self, ValidationScale};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Mean distortion without fading versus the number of nodes.
    Fig2,
    /// Outage probability versus target distortion for the three models.
    Fig3,
    /// Largest outage eigenvalue and its lower bound versus target distortion.
    Fig4,
    /// Outage curve of a single network.
    Outage,
    /// Per-trial distortion samples.
    Distortion,
    /// Closed-form versus Monte Carlo validation suite.
    Validate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
            Command::Fig4 => "fig4",
            Command::Outage => "outage",
            Command::Distortion => "distortion",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "corrmac", version, about = "Distributed estimation over a coherent fading MAC with correlated sensors")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output CSV path; the manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// full-rank, rank-one or unity.
    #[arg(long)]
    pub model: Option<String>,
    /// Comma-separated node counts.
    #[arg(long)]
    pub nodes: Option<String>,
    /// Comma-separated target distortions in [0, 1].
    #[arg(long = "delta-grid")]
    pub delta_grid: Option<String>,
    /// Comma-separated source distances in meters.
    #[arg(long = "source-distances")]
    pub source_distances: Option<String>,
    #[arg(long = "no-fading")]
    pub no_fading: bool,
    /// Use the eigenvalues of s2 (F - (1 - delta) B) in the closed forms.
    #[arg(long = "approx-eigen")]
    pub approx_eigen: bool,
    /// Number of random geometries.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Fading draws per geometry.
    #[arg(long)]
    pub draws: Option<usize>,
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub command: Command,
    pub config: SimConfig,
    pub output_path: PathBuf,
    pub delta_grid: Vec<f64>,
    pub node_counts: Vec<usize>,
    pub source_distances: Vec<f64>,
    pub threads: usize,
    pub eigen_mode: EigenMode,
    pub geometry_mode: GeometryMode,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Model(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Model(Error::InvalidParameter(_)) => 2,
            CliError::Model(Error::Degenerate(_)) => 3,
            CliError::Model(_) => 2,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// Set when a closed form was replaced by its Monte Carlo estimate.
    pub fallback: Option<String>,
    /// Set by `validate` when at least one check failed.
    pub failed_checks: usize,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.fallback.is_some() {
            3
        } else if self.failed_checks > 0 {
            1
        } else {
            0
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_list<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>, CliError> {
    let values = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| cfg_err(format!("{key}: cannot parse '{t}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(cfg_err(format!("{key}: empty list")));
    }
    Ok(values)
}

fn parse_value<T: std::str::FromStr>(key: &str, s: &str) -> Result<T, CliError> {
    s.trim().parse::<T>().map_err(|_| cfg_err(format!("{key}: cannot parse '{s}'")))
}

/// Parses the flat configuration format: one `key = value` per line, `#` comments.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| cfg_err(format!("line {}: expected 'key = value'", lineno + 1)))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

/// Every tunable with its default.
#[derive(Debug, Clone, PartialEq)]
struct Settings {
    n_nodes: usize,
    side: f64,
    source_distance: f64,
    theta1: f64,
    theta2: f64,
    sigma_s2: f64,
    obs_snr_db: f64,
    comm_snr_db: f64,
    p_tot_db: f64,
    sigma_g2: f64,
    sigma_n2: Option<f64>,
    sigma_nu2: Option<f64>,
    p_tot: Option<f64>,
    model: CorrelationModel,
    runs: usize,
    draws: usize,
    seed: u64,
    threads: usize,
    fading: Option<bool>,
    approx_eigen: bool,
    geometry_mode: GeometryMode,
    nodes: Option<Vec<usize>>,
    delta_grid: Option<Vec<f64>>,
    source_distances: Option<Vec<f64>>,
    out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            n_nodes: 10,
            side: 20.0,
            source_distance: 30.0,
            theta1: 250.0,
            theta2: 1.0,
            sigma_s2: 1.0,
            obs_snr_db: 20.0,
            comm_snr_db: 20.0,
            p_tot_db: 10.0,
            sigma_g2: 1.0,
            sigma_n2: None,
            sigma_nu2: None,
            p_tot: None,
            model: CorrelationModel::FullRank,
            runs: 1000,
            draws: 1000,
            seed: 1,
            threads: 0,
            fading: None,
            approx_eigen: false,
            geometry_mode: GeometryMode::Resampled,
            nodes: None,
            delta_grid: None,
            source_distances: None,
            out: None,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(cfg_err(format!("{key}: expected a boolean, got '{v}'"))),
    }
}

fn parse_model(v: &str) -> Result<CorrelationModel, CliError> {
    v.parse().map_err(|e: Error| cfg_err(e.to_string()))
}

impl Settings {
    fn apply(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "n_nodes" => self.n_nodes = parse_value(key, v)?,
            "side" => self.side = parse_value(key, v)?,
            "source_distance" => self.source_distance = parse_value(key, v)?,
            "theta1" => self.theta1 = parse_value(key, v)?,
            "theta2" => self.theta2 = parse_value(key, v)?,
            "sigma_s2" => self.sigma_s2 = parse_value(key, v)?,
            "obs_snr_db" => self.obs_snr_db = parse_value(key, v)?,
            "comm_snr_db" => self.comm_snr_db = parse_value(key, v)?,
            "p_tot_db" => self.p_tot_db = parse_value(key, v)?,
            "sigma_g2" => self.sigma_g2 = parse_value(key, v)?,
            "sigma_n2" => self.sigma_n2 = Some(parse_value(key, v)?),
            "sigma_nu2" => self.sigma_nu2 = Some(parse_value(key, v)?),
            "p_tot" => self.p_tot = Some(parse_value(key, v)?),
            "model" => self.model = parse_model(v)?,
            "runs" => self.runs = parse_value(key, v)?,
            "draws" => self.draws = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "threads" => self.threads = parse_value(key, v)?,
            "fading" => self.fading = Some(parse_bool(key, v)?),
            "approx_eigen" => self.approx_eigen = parse_bool(key, v)?,
            "geometry_mode" => {
                self.geometry_mode = match v.trim() {
                    "fixed" => GeometryMode::Fixed,
                    "resampled" => GeometryMode::Resampled,
                    other => return Err(cfg_err(format!("geometry_mode: expected fixed or resampled, got '{other}'"))),
                }
            }
            "nodes" => self.nodes = Some(parse_list(key, v)?),
            "delta_grid" => self.delta_grid = Some(parse_list(key, v)?),
            "source_distances" => self.source_distances = Some(parse_list(key, v)?),
            "out" => self.out = Some(PathBuf::from(v.trim())),
            // manifest provenance lines, so a manifest can be fed back as a config
            "tool" | "version" | "command" => {}
            other => return Err(cfg_err(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    fn channel(&self) -> Result<ChannelParams, CliError> {
        let sigma_n2 = self.sigma_n2.unwrap_or(self.sigma_s2 / db_to_linear(self.obs_snr_db));
        let sigma_nu2 = self.sigma_nu2.unwrap_or((self.sigma_s2 + sigma_n2) / db_to_linear(self.comm_snr_db));
        let p_tot = self.p_tot.unwrap_or(db_to_linear(self.p_tot_db) * self.sigma_s2);
        Ok(ChannelParams::new(self.sigma_s2, sigma_n2, sigma_nu2, self.sigma_g2, p_tot)?)
    }
}

fn manifest_entries(spec: &ExperimentSpec) -> Vec<(&'static str, String)> {
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let c = &spec.config;
    vec![
        ("tool", "corrmac".into()),
        ("version", VERSION.into()),
        ("command", spec.command.name().into()),
        ("seed", c.seed.to_string()),
        ("threads", spec.threads.to_string()),
        ("n_nodes", c.n_nodes.to_string()),
        ("side", c.side.to_string()),
        ("source_distance", c.source_distance.to_string()),
        ("theta1", c.corr_params.theta1().to_string()),
        ("theta2", c.corr_params.theta2().to_string()),
        ("model", c.model.to_string()),
        ("sigma_s2", c.channel.sigma_s2.to_string()),
        ("sigma_n2", c.channel.sigma_n2.to_string()),
        ("sigma_nu2", c.channel.sigma_nu2.to_string()),
        ("sigma_g2", c.channel.sigma_g2.to_string()),
        ("p_tot", c.channel.p_tot.to_string()),
        ("runs", c.n_geometries.to_string()),
        ("draws", c.n_fading_draws.to_string()),
        ("fading", c.fading_enabled.to_string()),
        ("approx_eigen", (spec.eigen_mode == EigenMode::Approx).to_string()),
        (
            "geometry_mode",
            match spec.geometry_mode {
                GeometryMode::Fixed => "fixed".into(),
                GeometryMode::Resampled => "resampled".into(),
            },
        ),
        ("nodes", spec.node_counts.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")),
        ("delta_grid", join(&spec.delta_grid)),
        ("source_distances", join(&spec.source_distances)),
        ("out", spec.output_path.display().to_string()),
    ]
}

fn default_grid(step_count: usize) -> Vec<f64> {
    (0..=step_count).map(|k| k as f64 / step_count as f64).collect()
}

/// Resolves defaults, the configuration file and flags into an [`ExperimentSpec`].
pub fn resolve(args: &Args) -> Result<ExperimentSpec, CliError> {
    let mut s = Settings::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read config {}: {e}", path.display())))?;
        for (k, v) in parse_config_text(&text)? {
            s.apply(&k, &v)?;
        }
    }
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if let Some(v) = args.threads {
        s.threads = v;
    }
    if let Some(v) = &args.out {
        s.out = Some(v.clone());
    }
    if let Some(v) = &args.model {
        s.model = parse_model(v)?;
    }
    if let Some(v) = &args.nodes {
        s.nodes = Some(parse_list("nodes", v)?);
    }
    if let Some(v) = &args.delta_grid {
        s.delta_grid = Some(parse_list("delta-grid", v)?);
    }
    if let Some(v) = &args.source_distances {
        s.source_distances = Some(parse_list("source-distances", v)?);
    }
    if args.no_fading {
        s.fading = Some(false);
    }
    if args.approx_eigen {
        s.approx_eigen = true;
    }
    if let Some(v) = args.runs {
        s.runs = v;
    }
    if let Some(v) = args.draws {
        s.draws = v;
    }
    build_spec(args.command, &s)
}

fn build_spec(command: Command, s: &Settings) -> Result<ExperimentSpec, CliError> {
    let corr_params = CorrelationParams::new(s.theta1, s.theta2)?;
    let fading_enabled = s.fading.unwrap_or(command != Command::Fig2);
    let config = SimConfig {
        n_nodes: s.n_nodes,
        side: s.side,
        source_distance: s.source_distance,
        corr_params,
        model: s.model,
        channel: s.channel()?,
        n_geometries: s.runs,
        n_fading_draws: s.draws,
        seed: s.seed,
        fading_enabled,
    };
    config.validate()?;

    let delta_grid = s.delta_grid.clone().unwrap_or_else(|| match command {
        Command::Fig4 => default_grid(100),
        _ => default_grid(20),
    });
    if let Some(d) = delta_grid.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(cfg_err(format!("delta-grid values must lie in [0, 1], got {d}")));
    }
    let node_counts = s.nodes.clone().unwrap_or_else(|| vec![1, 2, 5, 10, 20, 50, 100, 200, 300, 400, 500]);
    if node_counts.contains(&0) {
        return Err(cfg_err("node counts must be at least 1"));
    }
    let source_distances = s.source_distances.clone().unwrap_or_else(|| vec![0.0, 30.0, 50.0]);
    if source_distances.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
        return Err(cfg_err("source distances must be non-negative"));
    }

    Ok(ExperimentSpec {
        command,
        config,
        output_path: s.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", command.name()))),
        delta_grid,
        node_counts,
        source_distances,
        threads: s.threads,
        eigen_mode: if s.approx_eigen { EigenMode::Approx } else { EigenMode::Exact },
        geometry_mode: if command == Command::Outage { GeometryMode::Fixed } else { s.geometry_mode },
    })
}

/// Path of the manifest written next to `csv_path`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest");
    csv_path.with_file_name(name)
}

fn write_manifest(spec: &ExperimentSpec) -> Result<PathBuf, CliError> {
    let mut text = String::new();
    for (k, v) in manifest_entries(spec) {
        writeln!(text, "{k} = {v}").expect("string write");
    }
    let path = manifest_path(&spec.output_path);
    fs::write(&path, text)?;
    Ok(path)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Fig2Row {
    n: usize,
    model: &'static str,
    mean_d: f64,
    std_err: f64,
}

#[derive(Serialize)]
struct OutageRow {
    delta: f64,
    model: &'static str,
    p_closed: f64,
    p_mc: f64,
    ci_low: f64,
    ci_high: f64,
}

#[derive(Serialize)]
struct Fig4Row {
    delta: f64,
    source_distance: f64,
    lambda_exact_norm: f64,
    lambda_bound_norm: f64,
}

#[derive(Serialize)]
struct SampleRow {
    geometry_index: usize,
    trial_index: usize,
    d_tilde: f64,
}

#[derive(Serialize)]
struct CheckRow {
    check: &'static str,
    passed: bool,
    detail: String,
}

fn outage_rows(spec: &ExperimentSpec, models: &[CorrelationModel], fallback: &mut Vec<String>) -> Result<Vec<OutageRow>, CliError> {
    let mut rows = Vec::new();
    for &model in models {
        let cfg = SimConfig { model, ..spec.config.clone() };
        let mc = mc_outage(&cfg, &spec.delta_grid, spec.geometry_mode)?;
        let closed: Vec<f64> =
            match closed_form_outage_curve(&cfg, &spec.delta_grid, spec.geometry_mode, spec.eigen_mode) {
                Ok(curve) => curve.iter().map(|m| m.mean).collect(),
                Err(Error::Degenerate(msg)) => {
                    fallback.push(format!("{model}: {msg}; p_closed replaced by the Monte Carlo estimate"));
                    mc.iter().map(|p| p.p_hat).collect()
                }
                Err(e) => return Err(e.into()),
            };
        rows.extend(mc.iter().zip(closed).map(|(pt, p_closed)| OutageRow {
            delta: pt.delta,
            model: model.as_str(),
            p_closed,
            p_mc: pt.p_hat,
            ci_low: pt.ci_low,
            ci_high: pt.ci_high,
        }));
    }
    Ok(rows)
}

fn execute(spec: &ExperimentSpec) -> Result<RunOutcome, CliError> {
    let mut fallback = Vec::new();
    let mut failed_checks = 0;
    let path = &spec.output_path;
    match spec.command {
        Command::Fig2 => {
            let rows: Vec<Fig2Row> = sweep_nodes(&spec.config, &spec.node_counts)?
                .into_iter()
                .map(|r| Fig2Row { n: r.n, model: r.model.as_str(), mean_d: r.mean_d, std_err: r.std_err })
                .collect();
            write_csv(path, &rows)?;
        }
        Command::Fig3 => write_csv(path, &outage_rows(spec, &CorrelationModel::ALL, &mut fallback)?)?,
        Command::Outage => write_csv(path, &outage_rows(spec, &[spec.config.model], &mut fallback)?)?,
        Command::Fig4 => {
            let rows: Vec<Fig4Row> = sweep_eigenvalue(&spec.config, &spec.source_distances, &spec.delta_grid)?
                .into_iter()
                .map(|r| Fig4Row {
                    delta: r.delta,
                    source_distance: r.source_distance,
                    lambda_exact_norm: r.lambda_exact_norm.mean,
                    lambda_bound_norm: r.lambda_bound_norm.mean,
                })
                .collect();
            write_csv(path, &rows)?;
        }
        Command::Distortion => {
            let rows: Vec<SampleRow> = distortion_samples(&spec.config)?
                .into_iter()
                .map(|s| SampleRow { geometry_index: s.geometry_index, trial_index: s.trial_index, d_tilde: s.d_tilde })
                .collect();
            write_csv(path, &rows)?;
        }
        Command::Validate => {
            let scale = ValidationScale { geometries: spec.config.n_geometries, ..ValidationScale::default() };
            let checks = validation::run_all(&spec.config, &scale)?;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            failed_checks = checks.iter().filter(|c| !c.passed).count();
            let rows: Vec<CheckRow> =
                checks.into_iter().map(|c| CheckRow { check: c.name, passed: c.passed, detail: c.detail }).collect();
            write_csv(path, &rows)?;
        }
    }
    let manifest = write_manifest(spec)?;
    Ok(RunOutcome {
        files: vec![path.clone(), manifest],
        fallback: if fallback.is_empty() { None } else { Some(fallback.join("; ")) },
        failed_checks,
    })
}

/// Runs the experiment on a dedicated pool of `spec.threads` workers.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| cfg_err(format!("cannot build thread pool: {e}")))?;
    pool.install(|| execute(spec))
}

/// Parses `argv`, runs, reports, and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = resolve(&args).and_then(|spec| run(&spec));
    match outcome {
        Ok(o) => {
            for f in &o.files {
                eprintln!("wrote {}", f.display());
            }
            if let Some(msg) = &o.fallback {
                eprintln!("degenerate closed form: {msg}");
            }
            o.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Args {
        Args::try_parse_from(std::iter::once("corrmac").chain(list.iter().copied())).unwrap()
    }

    #[test]
    fn defaults_follow_reference_setup() {
        let spec = resolve(&args(&["fig3"])).unwrap();
        let c = &spec.config;
        assert_eq!(c.n_nodes, 10);
        assert_eq!(c.side, 20.0);
        assert_eq!(c.source_distance, 30.0);
        assert_eq!(c.corr_params, CorrelationParams::new(250.0, 1.0).unwrap());
        assert!((c.channel.sigma_n2 - 0.01).abs() < 1e-15);
        assert!((c.channel.sigma_nu2 - 0.0101).abs() < 1e-15);
        assert!((c.channel.p_tot - 10.0).abs() < 1e-12);
        assert_eq!(c.channel.sigma_g2, 1.0);
        assert_eq!(c.n_geometries, 1000);
        assert!(c.fading_enabled);
        assert_eq!(spec.delta_grid.len(), 21);
        assert!(!resolve(&args(&["fig2"])).unwrap().config.fading_enabled);
    }

    #[test]
    fn config_file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "# sweep\nseed = 9\nmodel = rank-one\nobs_snr_db = 10\nnodes = 3, 4\nsigma_nu2 = 0.5\n").unwrap();
        let spec = resolve(&args(&["fig2", "--config", cfg.to_str().unwrap(), "--seed", "4"])).unwrap();
        assert_eq!(spec.config.seed, 4);
        assert_eq!(spec.config.model, CorrelationModel::RankOne);
        assert!((spec.config.channel.sigma_n2 - 0.1).abs() < 1e-15);
        assert_eq!(spec.config.channel.sigma_nu2, 0.5);
        assert_eq!(spec.node_counts, vec![3, 4]);
    }

    #[test]
    fn invalid_settings_are_config_errors() {
        for bad in [
            vec!["fig3", "--model", "matern"],
            vec!["fig3", "--delta-grid", "0.1,1.5"],
            vec!["fig2", "--nodes", "0,3"],
            vec!["fig2", "--nodes", "a"],
            vec!["fig3", "--runs", "0"],
        ] {
            let err = resolve(&args(&bad)).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad:?}: {err}");
        }
        assert!(parse_config_text("no equals sign").is_err());
        let mut s = Settings::default();
        assert!(s.apply("bogus", "1").is_err());
    }

    #[test]
    fn manifest_sits_next_to_csv() {
        assert_eq!(manifest_path(Path::new("out/fig2.csv")), PathBuf::from("out/fig2.csv.manifest"));
    }

    #[test]
    fn degenerate_maps_to_exit_three() {
        assert_eq!(CliError::Model(Error::Degenerate("x".into())).exit_code(), 3);
        let o = RunOutcome { files: vec![], fallback: Some("x".into()), failed_checks: 0 };
        assert_eq!(o.exit_code(), 3);
    }
}
