//! Batch entry point: one JSON config plus flag overrides, plot-ready CSV and
//! JSONL outputs. Every output carries the config hash and seed.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coalescent::{simulate_block_counts, BlockCounts, CoalescentError, Horizon};
use crate::flemingviot::{default_types, extract_eves, replay_fv, simulate_fv, FvError, FvHorizon, DEFAULT_THETA};
use crate::lookdown::{self, sample_graph, LookdownError, LookdownGraph};
use crate::measure::{LambdaMeasure, MeasureError, MeasureSpec};
use crate::rates::MergerSampler;
use crate::rng::{self, purpose};
use crate::validate::{self, Thresholds, TestSpec, ValidateError, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Print the regime classification of a measure.
    Classify,
    /// Sample coalescent paths; CSV of TMRCAs and optional block counts.
    Coalescent,
    /// Sample a lookdown graph; JSONL of reproduction events.
    Lookdown,
    /// Simulate (or replay) a Fleming-Viot path; JSONL of states.
    Fv,
    /// Extract the Eves of a stored run.
    Eves,
    /// Run a validation suite; exit status 3 if any test fails.
    Validate,
    /// Mean block counts against the speed of coming down from infinity.
    Speed,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Coalescent => "coalescent",
            Command::Lookdown => "lookdown",
            Command::Fv => "fv",
            Command::Eves => "eves",
            Command::Validate => "validate",
            Command::Speed => "speed",
        }
    }

    fn needs_seed(self) -> bool {
        !matches!(self, Command::Classify | Command::Eves)
    }
}

#[derive(Debug, Parser)]
#[command(name = "lambda-flows", version, about = "Λ-coalescents, lookdown graphs and Λ-Fleming-Viot simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; without it the primary output goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    #[arg(long, global = true, env = "LAMBDA_FLOWS_THREADS")]
    pub threads: Option<usize>,
    /// Stored graph or run (JSONL) for `eves` and for `fv` replay.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Default,
    NegativeControls,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub measure: Option<MeasureSpec>,
    pub n: Option<usize>,
    pub window: Option<(f64, f64)>,
    /// Coalescent horizon; absent means run to absorption.
    pub horizon: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub out: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub types: Option<Vec<f64>>,
    pub theta: Option<f64>,
    pub tests: Option<Vec<TestSpec>>,
    pub suite: Option<Suite>,
    pub thresholds: Option<Thresholds>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Coalescent(#[from] CoalescentError),
    #[error(transparent)]
    Lookdown(#[from] LookdownError),
    #[error(transparent)]
    Fv(#[from] FvError),
    #[error(transparent)]
    Validate(#[from] ValidateError),
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Flags take precedence over the file.
    fn merge(mut self, cli: &Cli) -> Result<Self, CliError> {
        if let Some(c) = self.command {
            if c != cli.command {
                return Err(CliError::Config(format!("config is for `{}`, invoked as `{}`", c.name(), cli.command.name())));
            }
        }
        self.command = Some(cli.command);
        self.seed = cli.seed.or(self.seed);
        self.out = cli.out.clone().or(self.out);
        self.replicates = cli.replicates.or(self.replicates);
        self.input = cli.input.clone().or(self.input);
        Ok(self)
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        hex::encode(Sha256::digest(serde_json::to_vec(&c).expect("serializable")))
    }

    fn measure(&self) -> Result<LambdaMeasure, CliError> {
        let spec = self.measure.as_ref().ok_or_else(|| CliError::Config("`measure` is required".into()))?;
        Ok(spec.build()?)
    }

    fn n(&self) -> Result<usize, CliError> {
        self.n.ok_or_else(|| CliError::Config("`n` is required".into()))
    }

    fn seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::Config("`seed` is required for simulation commands".into()))
    }
}

fn meta(cfg: &RunConfig) -> Value {
    json!({"config_sha256": cfg.hash(), "seed": cfg.seed})
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.into(), source }
}

/// Writes `bytes` to `out/name`, or to stdout when `primary` and no output
/// directory is set.
fn emit(out: Option<&Path>, name: &str, bytes: &[u8], primary: bool) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io_err(&path))?;
            info!("wrote {}", path.display());
        }
        None if primary => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes).map_err(io_err(Path::new("<stdout>")))?;
        }
        None => {}
    }
    Ok(())
}

fn csv_header(cfg: &RunConfig, columns: &str) -> String {
    format!("# config_sha256={} seed={}\n{columns}\n", cfg.hash(), cfg.seed.map_or("none".into(), |s| s.to_string()))
}

fn json_line(v: &impl Serialize) -> Result<String, CliError> {
    let mut s = serde_json::to_string(v)?;
    s.push('\n');
    Ok(s)
}

// ----- commands --------------------------------------------------------------------

fn cmd_classify(cfg: &RunConfig) -> Result<i32, CliError> {
    let m = cfg.measure()?;
    let (body, code) = match m.classify() {
        Ok(class) => (serde_json::to_value(class)?, 0),
        Err(MeasureError::Undecided(reason)) => (json!({"regime": "UNDECIDED", "reason": reason}), 2),
        Err(e) => return Err(e.into()),
    };
    let mut obj = json!({"meta": meta(cfg)});
    obj.as_object_mut().unwrap().extend(body.as_object().cloned().unwrap_or_default());
    emit(cfg.out.as_deref(), "classify.json", json_line(&obj)?.as_bytes(), true)?;
    Ok(code)
}

fn cmd_coalescent(cfg: &RunConfig) -> Result<i32, CliError> {
    let (m, n, seed) = (cfg.measure()?, cfg.n()?, cfg.seed()?);
    let reps = cfg.replicates.unwrap_or(1);
    let horizon = cfg.horizon.map_or(Horizon::Absorption, Horizon::At);
    let grid = cfg.t_grid.clone().unwrap_or_default();
    if let Some(h) = cfg.horizon {
        if let Some(&t) = grid.iter().find(|&&t| t > h) {
            return Err(CliError::Config(format!("t_grid point {t} beyond horizon {h}")));
        }
    }
    if n < 2 {
        return Err(CoalescentError::TooSmall(n).into());
    }
    let sampler = MergerSampler::new(&m, n)?;
    let rows: Vec<Result<(Option<f64>, Vec<usize>), CoalescentError>> = rng::replicate(reps, seed, purpose::COALESCENT, |_, rng| {
        let path = simulate_block_counts(&sampler, n, horizon, rng)?;
        let tmrca = (path.counts.last() == Some(&1)).then(|| *path.times.last().unwrap());
        let counts = grid.iter().map(|&t| path.count_at(t)).collect::<Result<_, _>>()?;
        Ok((tmrca, counts))
    });
    let mut tm = csv_header(cfg, "replicate,tmrca");
    let mut bc = csv_header(cfg, "replicate,t,blocks");
    for (i, r) in rows.into_iter().enumerate() {
        let (tmrca, counts) = r?;
        let _ = writeln!(tm, "{i},{}", tmrca.map_or(String::new(), |t| t.to_string()));
        for (t, c) in grid.iter().zip(counts) {
            let _ = writeln!(bc, "{i},{t},{c}");
        }
    }
    emit(cfg.out.as_deref(), "coalescent.csv", tm.as_bytes(), true)?;
    if !grid.is_empty() {
        emit(cfg.out.as_deref(), "coalescent_blocks.csv", bc.as_bytes(), false)?;
    }
    Ok(0)
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphMeta {
    config_sha256: String,
    seed: u64,
    n: usize,
    window: (f64, f64),
    measure: MeasureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    types: Option<Vec<f64>>,
}

fn graph_jsonl(g: &LookdownGraph, gm: &GraphMeta) -> Result<Vec<u8>, CliError> {
    let mut buf = json_line(&json!({"meta": gm}))?.into_bytes();
    g.write_events(&mut buf).map_err(io_err(Path::new("<buffer>")))?;
    Ok(buf)
}

fn cmd_lookdown(cfg: &RunConfig) -> Result<i32, CliError> {
    let (m, n, seed) = (cfg.measure()?, cfg.n()?, cfg.seed()?);
    let window = cfg.window.unwrap_or((0.0, 1.0));
    let g = sample_graph(&m, n, window, seed)?;
    let gm = GraphMeta { config_sha256: cfg.hash(), seed, n, window, measure: m.spec(), types: None };
    emit(cfg.out.as_deref(), "graph.jsonl", &graph_jsonl(&g, &gm)?, true)?;
    Ok(0)
}

/// Reads a graph file written by `lookdown` or `fv`.
fn read_graph(path: &Path) -> Result<(LookdownGraph, GraphMeta), CliError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(io_err(path))?;
    #[derive(Deserialize)]
    struct Wrapper {
        meta: GraphMeta,
    }
    let gm = serde_json::from_str::<Wrapper>(&first)
        .map_err(|e| CliError::Config(format!("{}: first line is not a graph meta line: {e}", path.display())))?
        .meta;
    let mut g = LookdownGraph::read_events(reader, gm.n, gm.window)?;
    lookdown::set_provenance(&mut g, gm.seed, gm.measure.clone());
    Ok((g, gm))
}

#[derive(Serialize)]
struct FvLine<'a> {
    t: f64,
    atoms: &'a [(f64, f64)],
    dust: f64,
}

fn cmd_fv(cfg: &RunConfig) -> Result<i32, CliError> {
    let (run, gm) = match &cfg.input {
        Some(path) => {
            let (g, gm) = read_graph(path)?;
            let types = gm.types.clone().unwrap_or_else(|| default_types(gm.n, gm.seed));
            (replay_fv(g, types)?, gm)
        }
        None => {
            let (m, n, seed) = (cfg.measure()?, cfg.n()?, cfg.seed()?);
            let window = cfg.window.unwrap_or((0.0, 1.0));
            let run = simulate_fv(&m, n, FvHorizon::Window(window.0, window.1), seed, cfg.types.clone())?;
            let gm = GraphMeta { config_sha256: cfg.hash(), seed, n, window, measure: m.spec(), types: cfg.types.clone() };
            (run, gm)
        }
    };
    // the header comes from the graph, so a replay reproduces the file exactly
    let mut out = json_line(&json!({"meta": {"config_sha256": gm.config_sha256, "seed": gm.seed, "n": gm.n, "window": gm.window}}))?;
    for (t, state) in run.path() {
        out.push_str(&json_line(&FvLine { t, atoms: &state.atoms, dust: state.dust })?);
    }
    emit(cfg.out.as_deref(), "fv.jsonl", out.as_bytes(), true)?;
    if cfg.input.is_none() {
        emit(cfg.out.as_deref(), "graph.jsonl", &graph_jsonl(&run.graph, &gm)?, false)?;
    }
    Ok(0)
}

fn cmd_eves(cfg: &RunConfig) -> Result<i32, CliError> {
    let path = cfg.input.as_ref().ok_or_else(|| CliError::Config("`eves` needs --input (a graph written by `fv` or `lookdown`)".into()))?;
    let (g, gm) = read_graph(path)?;
    let types = gm.types.clone().unwrap_or_else(|| default_types(gm.n, gm.seed));
    let run = replay_fv(g, types)?;
    let report = extract_eves(&run, cfg.theta.unwrap_or(DEFAULT_THETA))?;
    let obj = json!({"meta": {"config_sha256": cfg.hash(), "seed": gm.seed, "source_config_sha256": gm.config_sha256}, "report": report});
    emit(cfg.out.as_deref(), "eves.json", json_line(&obj)?.as_bytes(), true)?;
    Ok(0)
}

fn cmd_speed(cfg: &RunConfig) -> Result<i32, CliError> {
    let (m, n, seed) = (cfg.measure()?, cfg.n()?, cfg.seed()?);
    let grid = cfg.t_grid.clone().ok_or_else(|| CliError::Config("`t_grid` is required".into()))?;
    let th = cfg.thresholds.unwrap_or_default();
    let report = validate::speed_test(&m, n, &grid, cfg.replicates.unwrap_or(20), seed, &th)?;
    let mut csv = csv_header(cfg, "t,v,mean_blocks,ratio,shifted_ratio,verdict");
    for p in report.details["points"].as_array().into_iter().flatten() {
        let _ = writeln!(csv, "{},{},{},{},{},{}", p["t"], p["v"], p["mean_blocks"], p["ratio"], p["shifted_ratio"], p["verdict"].as_str().unwrap_or(""));
    }
    emit(cfg.out.as_deref(), "speed.csv", csv.as_bytes(), true)?;
    Ok(0)
}

fn cmd_validate(cfg: &RunConfig) -> Result<i32, CliError> {
    let seed = cfg.seed()?;
    let mut specs = match (&cfg.tests, cfg.suite) {
        (Some(t), _) => t.clone(),
        (None, Some(Suite::NegativeControls)) => validate::negative_controls(),
        (None, _) => validate::default_suite(),
    };
    if let Some(r) = cfg.replicates {
        specs = specs.into_iter().map(|s| s.with_replicates(r)).collect();
    }
    let th = cfg.thresholds.unwrap_or_default();
    let reports = validate::run_suite(&specs, seed, &th)?;
    let failed = reports.iter().filter(|r| r.verdict == Verdict::Fail).count();
    for r in &reports {
        info!("{} {:?} statistic={} threshold={}", r.id, r.verdict, r.statistic, r.threshold);
    }
    let obj = json!({"meta": meta(cfg), "thresholds": th, "reports": reports});
    emit(cfg.out.as_deref(), "validate.json", serde_json::to_string_pretty(&obj)?.as_bytes(), true)?;
    Ok(if failed > 0 { 3 } else { 0 })
}

/// Runs a parsed command line and returns the process exit status: 0 on
/// success, 1 on errors, 2 for an UNDECIDED classification, 3 when a
/// validation test fails.
pub fn run(cli: &Cli) -> i32 {
    match try_run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn try_run(cli: &Cli) -> Result<i32, CliError> {
    if let Some(t) = cli.threads {
        if rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            warn!("thread pool already initialised; --threads ignored");
        }
    }
    let base = match &cli.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    let cfg = base.merge(cli)?;
    let replay = cli.command == Command::Fv && cfg.input.is_some();
    if cli.command.needs_seed() && !replay && cfg.seed.is_none() {
        return Err(CliError::Config(format!("`{}` needs a seed (--seed or \"seed\" in the config)", cli.command.name())));
    }
    match cli.command {
        Command::Classify => cmd_classify(&cfg),
        Command::Coalescent => cmd_coalescent(&cfg),
        Command::Lookdown => cmd_lookdown(&cfg),
        Command::Fv => cmd_fv(&cfg),
        Command::Eves => cmd_eves(&cfg),
        Command::Validate => cmd_validate(&cfg),
        Command::Speed => cmd_speed(&cfg),
    }
}

/// Parses `args` (program name first) and runs; clap's own exit status is
/// returned for usage errors and `--help`.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            e.exit_code()
        }
    }
}
