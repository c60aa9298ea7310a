//! The `dynbt` command-line interface.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for data or model
//! errors. Failures are reported on stderr as a single JSON object; stdout
//! only ever carries the requested output.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::data::{load_csv, raw_count_matrix_at, save_csv, Dataset};
use crate::error::Error;
use crate::experiments::{
    all_times_settings, frequency_study, games_per_pair_settings, repetition_rng, run_table, single_time_settings,
    Setting, TableConfig,
};
use crate::graph::{per_time_connectivity, strongly_connected_components, FrequencyMode};
use crate::kernel::{CountSource, KernelFamily, KernelSmoother, KernelSpec};
use crate::metrics::{loo_prediction_metrics, rank_diff, trajectory_error};
use crate::parallel;
use crate::simulate::{
    constant_games, generate_agnostic_matches, generate_agnostic_probs, generate_bt_matches, gp_sample_beta, GpSpec,
};
use crate::solver::{
    center, fit_trajectory, projection, rank, FitOptions, Ranking, TrajectoryMode, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::tuning::{default_h_grid, select_bandwidth, BandwidthSelection, CvOptions, FoldSelection};

#[derive(Debug, Parser)]
#[command(name = "dynbt", version, about = "Time-varying Bradley-Terry rankings")]
pub struct Cli {
    /// File of `key = value` lines mirroring the long flags; command-line flags win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Worker threads for trajectory, cross-validation and bench fan-out.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit score trajectories; JSON lines on stdout, optional wide CSV.
    Fit(FitArgs),
    /// Rankings only, as JSON lines.
    Rank(RankArgs),
    /// Leave-one-out curve over a bandwidth grid.
    Cv(CvArgs),
    /// Connectivity verdicts per time, over all times and pooled.
    Check(CheckArgs),
    /// Generate synthetic matches and their truth.
    Simulate(SimulateArgs),
    /// Score an estimate against a truth file.
    Eval(EvalArgs),
    /// Run a Monte Carlo study and print its JSON report.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bandwidth {
    Fixed(f64),
    Loocv,
}

impl FromStr for Bandwidth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("loocv") {
            return Ok(Bandwidth::Loocv);
        }
        match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(Bandwidth::Fixed(h)),
            _ => Err(format!("expected a positive bandwidth or `loocv`, got {s:?}")),
        }
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Matches CSV with columns time,team_a,team_b,wins_a,wins_b.
    #[arg(long)]
    input: PathBuf,

    #[arg(long, default_value = "gaussian")]
    kernel: KernelFamily,

    /// A positive bandwidth, or `loocv` to select one from --h-grid.
    #[arg(long, default_value = "loocv")]
    bandwidth: Bandwidth,

    #[arg(long, value_delimiter = ',')]
    h_grid: Option<Vec<f64>>,

    /// Score this many random folds per bandwidth instead of every game.
    #[arg(long)]
    cv_folds: Option<usize>,

    /// Seed for --cv-folds.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,

    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,

    /// Evaluation times in input units; defaults to the observed times.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Wide CSV of scores: `time,<team1>,<team2>,...`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write the JSON lines here instead of stdout.
    #[arg(long)]
    jsonl: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[command(flatten)]
    model: ModelArgs,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[arg(long)]
    input: PathBuf,

    #[arg(long, default_value = "gaussian")]
    kernel: KernelFamily,

    #[arg(long, value_delimiter = ',')]
    h_grid: Option<Vec<f64>>,

    #[arg(long)]
    cv_folds: Option<usize>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,

    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,

    /// Curve CSV (`h,nll,folds_skipped`); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    input: PathBuf,

    #[arg(long, default_value = "gaussian")]
    kernel: KernelFamily,

    /// Also check the smoothed counts at every observed time.
    #[arg(long)]
    bandwidth: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Bt,
    Agnostic,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    mode: Mode,

    #[arg(long, default_value_t = 50)]
    n: usize,

    #[arg(long, default_value_t = 50)]
    m: usize,

    /// Games per pair per time.
    #[arg(long, default_value_t = 1)]
    games: u64,

    #[arg(long)]
    seed: u64,

    #[arg(long, default_value_t = 0.05)]
    p_low: f64,

    #[arg(long, default_value_t = 0.95)]
    p_high: f64,

    /// Matches CSV.
    #[arg(long)]
    out: PathBuf,

    /// Truth JSON.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Wide score CSV as written by `fit --out`.
    #[arg(long)]
    estimate: PathBuf,

    /// Truth JSON as written by `simulate --truth`.
    #[arg(long)]
    truth: PathBuf,

    /// Matches CSV; adds leave-one-out metrics at --bandwidth.
    #[arg(long, requires = "bandwidth")]
    input: Option<PathBuf>,

    #[arg(long, requires = "input")]
    bandwidth: Option<f64>,

    #[arg(long, default_value = "gaussian")]
    kernel: KernelFamily,

    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,

    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// 1: model-based comparison, 2: model-free comparison, 4: per-time
    /// connectivity, 5: all-times connectivity, 6: games per pair.
    #[arg(long, value_parser = ["1", "2", "4", "5", "6"])]
    table: String,

    /// Repetitions (default 20 for tables 1-2, 50 otherwise).
    #[arg(long)]
    seeds: Option<usize>,

    #[arg(long)]
    seed: u64,

    /// Folds per bandwidth during selection; 0 scores every game.
    #[arg(long, default_value_t = 2000)]
    selection_folds: usize,

    /// For the connectivity tables, also check smoothed counts at this bandwidth.
    #[arg(long)]
    smoothing_h: Option<f64>,

    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure together with the team names needed to report it.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Model { error: Error, teams: Vec<String> },
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure::Model { error, teams: Vec::new() }
    }
}

type CliResult<T> = Result<T, Failure>;

fn with_teams(teams: &[String]) -> impl Fn(Error) -> Failure + '_ {
    move |error| Failure::Model { error, teams: teams.to_vec() }
}

fn named(components: &[Vec<usize>], teams: &[String]) -> Value {
    components
        .iter()
        .map(|c| c.iter().map(|&i| teams.get(i).cloned().unwrap_or_else(|| i.to_string())).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .into()
}

fn failure_json(f: &Failure) -> Value {
    match f {
        Failure::Usage(message) => json!({ "error": "UsageError", "message": message }),
        Failure::Model { error, teams } => {
            let mut v = json!({ "error": error.kind(), "message": error.to_string() });
            if let Error::NotStronglyConnected { components } = error {
                v["components"] = named(components, teams);
            }
            v
        }
    }
}

/// Splices `key = value` lines from `--config` into the argument list for
/// every key not already given on the command line.
fn expand_config(mut args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut path = None;
    for (k, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(k + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let given: Vec<String> = args
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", n + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key == "config" || given.contains(&key) {
            continue;
        }
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => args.push(format!("--{key}={value}").into()),
        }
    }
    Ok(args)
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .try_init();
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let outcome = expand_config(args)
        .map_err(Failure::Usage)
        .and_then(|args| match Cli::try_parse_from(args) {
            Ok(cli) => Ok(cli),
            Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
                let _ = e.print();
                Err(Failure::Usage(String::new()))
            }
            Err(e) => Err(Failure::Usage(e.to_string().trim_end().to_string())),
        })
        .and_then(|cli| {
            let jobs = cli.jobs;
            if jobs == 0 {
                return Err(Failure::Usage("--jobs must be at least 1".into()));
            }
            parallel::with_jobs(jobs, move || dispatch(cli.command))
        });
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(m)) if m.is_empty() => 0,
        Err(f) => {
            eprintln!("{}", failure_json(&f));
            match f {
                Failure::Usage(_) => 1,
                Failure::Model { .. } => 2,
            }
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Fit(a) => cmd_fit(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Check(a) => cmd_check(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(Error::from)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(e: io::Error) -> Failure {
    Error::from(e).into()
}

fn fit_options(tol: f64, max_iter: usize) -> CliResult<FitOptions> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Failure::Usage("--tol and --max-iter must be positive".into()));
    }
    Ok(FitOptions { tol, max_iter, ..FitOptions::default() })
}

fn cv_options(family: KernelFamily, folds: Option<usize>, seed: u64, fit: FitOptions) -> CvOptions {
    let folds = match folds {
        Some(folds) if folds > 0 => FoldSelection::Subsample { folds, seed },
        _ => FoldSelection::Exact,
    };
    CvOptions { fit, folds, family }
}

fn select(dataset: &Dataset, grid: Option<Vec<f64>>, cv: &CvOptions) -> CliResult<BandwidthSelection> {
    let grid = grid.unwrap_or_else(default_h_grid);
    let selection = select_bandwidth(dataset, &grid, cv).map_err(with_teams(dataset.teams()))?;
    log::info!("selected h* = {} (nll {})", selection.h_star, selection.nll_star);
    if !selection.is_interior() {
        log::warn!("h* = {} lies on the edge of the grid", selection.h_star);
    }
    Ok(selection)
}

struct Trajectory {
    teams: Vec<String>,
    times: Vec<f64>,
    scores: Vec<Vec<f64>>,
}

fn trajectory(m: ModelArgs) -> CliResult<Trajectory> {
    let dataset = load_csv(&m.input)?;
    let opts = fit_options(m.tol, m.max_iter)?;
    let h = match m.bandwidth {
        Bandwidth::Fixed(h) => h,
        Bandwidth::Loocv => select(&dataset, m.h_grid, &cv_options(m.kernel, m.cv_folds, m.seed, opts))?.h_star,
    };
    let spec = KernelSpec::new(m.kernel, h)?;
    let grid: Vec<f64> = match &m.times {
        Some(raw) => raw.iter().map(|&t| dataset.normalized_time(t)).collect(),
        None => dataset.distinct_times().to_vec(),
    };
    if let Some(k) = grid.iter().position(|t| !(0.0..=1.0).contains(t)) {
        return Err(Failure::Usage(format!(
            "evaluation time {} lies outside the observed range",
            m.times.as_ref().map_or(f64::NAN, |r| r[k])
        )));
    }
    let mode = if parallel::threads() > 1 { TrajectoryMode::Parallel } else { TrajectoryMode::Sequential };
    let points = fit_trajectory(&dataset, &spec, &grid, &opts, mode).map_err(with_teams(dataset.teams()))?;
    let mut times = Vec::with_capacity(points.len());
    let mut scores = Vec::with_capacity(points.len());
    for p in points {
        let raw = dataset.raw_time(p.time);
        match p.fit {
            Ok(r) => scores.push(r.scores.into_inner()),
            Err(Error::MaxIterExceeded { report }) => {
                log::warn!("time {raw}: no convergence (gradient {:.3e})", report.grad_inf_norm);
                scores.push(report.scores.into_inner());
            }
            Err(e) => {
                log::error!("time {raw}: {e}");
                return Err(with_teams(dataset.teams())(e));
            }
        }
        times.push(raw);
    }
    Ok(Trajectory { teams: dataset.teams().to_vec(), times, scores })
}

fn rank_map(teams: &[String], ranking: &Ranking) -> serde_json::Map<String, Value> {
    teams.iter().zip(ranking.as_slice()).map(|(t, &r)| (t.clone(), r.into())).collect()
}

fn write_beta_csv(path: &Path, traj: &Trajectory) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(Error::from)?;
    let mut header = vec!["time".to_string()];
    header.extend(traj.teams.iter().cloned());
    w.write_record(&header).map_err(Error::from)?;
    for (t, b) in traj.times.iter().zip(&traj.scores) {
        let row: Vec<String> = std::iter::once(t.to_string()).chain(b.iter().map(f64::to_string)).collect();
        w.write_record(&row).map_err(Error::from)?;
    }
    w.flush().map_err(io_err)
}

fn cmd_fit(a: FitArgs) -> CliResult<()> {
    let traj = trajectory(a.model)?;
    if let Some(path) = &a.out {
        write_beta_csv(path, &traj)?;
    }
    let mut out = sink(a.jsonl.as_deref())?;
    for (t, b) in traj.times.iter().zip(&traj.scores) {
        let beta: serde_json::Map<String, Value> = traj.teams.iter().cloned().zip(b.iter().map(|&v| v.into())).collect();
        let line = json!({ "time": t, "beta": beta, "ranks": rank_map(&traj.teams, &rank(b)) });
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

fn cmd_rank(a: RankArgs) -> CliResult<()> {
    let traj = trajectory(a.model)?;
    let mut out = sink(a.out.as_deref())?;
    for (t, b) in traj.times.iter().zip(&traj.scores) {
        writeln!(out, "{}", json!({ "time": t, "ranks": rank_map(&traj.teams, &rank(b)) })).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

fn cmd_cv(a: CvArgs) -> CliResult<()> {
    let dataset = load_csv(&a.input)?;
    let opts = fit_options(a.tol, a.max_iter)?;
    let selection = select(&dataset, a.h_grid, &cv_options(a.kernel, a.cv_folds, a.seed, opts))?;
    {
        let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
        w.write_record(["h", "nll", "folds_skipped"]).map_err(Error::from)?;
        for p in &selection.curve {
            let nll = p.nll.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([p.h.to_string(), nll, p.folds_skipped.to_string()]).map_err(Error::from)?;
        }
        w.flush().map_err(io_err)?;
    }
    let summary = json!({
        "h_star": selection.h_star,
        "nll": selection.nll_star,
        "interior": selection.is_interior(),
        "excluded": selection.excluded(),
    });
    if a.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn cmd_check(a: CheckArgs) -> CliResult<()> {
    let dataset = load_csv(&a.input)?;
    let teams = dataset.teams();
    let per_time: Vec<Value> = per_time_connectivity(&dataset)
        .iter()
        .enumerate()
        .map(|(k, &ok)| {
            let x = raw_count_matrix_at(&dataset, k);
            json!({
                "time": dataset.raw_time(dataset.distinct_times()[k]),
                "connected": ok,
                "components": named(&strongly_connected_components(&x, 0.0), teams),
            })
        })
        .collect();
    let all_times = per_time.iter().all(|v| v["connected"] == true);
    let connected_count = per_time.iter().filter(|v| v["connected"] == true).count();

    let pooled = dataset.aggregate_counts();
    let pooled_components = strongly_connected_components(&pooled, 0.0);
    let mut report = json!({
        "teams": teams,
        "per_time": per_time,
        "per_time_frequency": connected_count as f64 / dataset.distinct_times().len() as f64,
        "all_times": all_times,
        "pooled": { "connected": pooled_components.len() == 1, "components": named(&pooled_components, teams) },
    });

    let mut failure = (pooled_components.len() > 1).then(|| pooled_components.clone());
    if let Some(h) = a.bandwidth {
        let spec = KernelSpec::new(a.kernel, h)?;
        let smoother = KernelSmoother::new(&dataset, spec);
        let smoothed: Vec<Value> = dataset
            .distinct_times()
            .iter()
            .map(|&t| {
                let comps = strongly_connected_components(&smoother.counts_at(t), smoother.eps());
                if comps.len() > 1 && failure.is_none() {
                    failure = Some(comps.clone());
                }
                json!({ "time": dataset.raw_time(t), "connected": comps.len() == 1, "components": named(&comps, teams) })
            })
            .collect();
        report["smoothed"] = json!({ "bandwidth": h, "kernel": a.kernel.to_string(), "per_time": smoothed });
    }
    println!("{report}");
    match failure {
        Some(components) => Err(with_teams(teams)(Error::NotStronglyConnected { components })),
        None => Ok(()),
    }
}

/// Truth file written by `simulate` and read by `eval`.
#[derive(Debug, Serialize, Deserialize)]
struct Truth {
    mode: Mode,
    seed: u64,
    teams: Vec<String>,
    times: Vec<f64>,
    /// Centred scores (or projection scores in agnostic mode), `[time][team]`.
    beta: Vec<Vec<f64>>,
    /// `[time][i][j]`, agnostic mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probabilities: Option<Vec<Vec<Vec<f64>>>>,
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    if a.n < 2 || a.m == 0 {
        return Err(Failure::Usage("--n must be at least 2 and --m at least 1".into()));
    }
    let mut rng = repetition_rng(a.seed, 0);
    let games = constant_games(a.games);
    let times: Vec<f64> = (1..=a.m).map(|t| t as f64).collect();
    let opts = FitOptions::default();
    let (dataset, beta, probabilities) = match a.mode {
        Mode::Bt => {
            let gp = GpSpec::bradley_terry_default(a.m)?;
            let paths = gp_sample_beta(a.n, &gp, &mut rng)?;
            let dataset = generate_bt_matches(&paths, games, &mut rng)?;
            let beta = (0..a.m)
                .map(|t| {
                    let mut b: Vec<f64> = paths.iter().map(|p| p[t]).collect();
                    center(&mut b);
                    b
                })
                .collect();
            (dataset, beta, None)
        }
        Mode::Agnostic => {
            let gp = GpSpec::agnostic_default(a.m)?;
            let field = generate_agnostic_probs(a.n, &gp, a.p_low, a.p_high, &mut rng)?;
            let dataset = generate_agnostic_matches(&field, games, &mut rng)?;
            let nested = field.to_nested();
            let beta = nested
                .iter()
                .map(|p| projection(p, &opts).map(|b| b.into_inner()))
                .collect::<Result<_, _>>()?;
            (dataset, beta, Some(nested))
        }
    };
    save_csv(&dataset, &a.out)?;
    let truth = Truth { mode: a.mode, seed: a.seed, teams: dataset.teams().to_vec(), times, beta, probabilities };
    let mut w = BufWriter::new(File::create(&a.truth).map_err(io_err)?);
    serde_json::to_writer(&mut w, &truth).map_err(Error::from)?;
    w.flush().map_err(io_err)
}

fn read_estimate(path: &Path) -> CliResult<(Vec<String>, Vec<f64>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(Error::from)?;
    let headers = rdr.headers().map_err(Error::from)?.clone();
    if headers.get(0).map(str::trim) != Some("time") || headers.len() < 3 {
        return Err(Error::Validation("estimate CSV must start with `time` and name at least 2 teams".into()).into());
    }
    let teams: Vec<String> = headers.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let (mut times, mut rows) = (Vec::new(), Vec::new());
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(Error::from)?;
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| Error::Parse { line: n as u64 + 2, message: format!("bad number {s:?}") })
        };
        times.push(parse(&rec[0])?);
        rows.push(rec.iter().skip(1).map(parse).collect::<Result<Vec<_>, _>>()?);
    }
    Ok((teams, times, rows))
}

fn cmd_eval(a: EvalArgs) -> CliResult<()> {
    let (teams, times, rows) = read_estimate(&a.estimate)?;
    let truth: Truth = serde_json::from_reader(io::BufReader::new(File::open(&a.truth).map_err(io_err)?))
        .map_err(Error::from)?;
    let order: Vec<usize> = truth
        .teams
        .iter()
        .map(|t| teams.iter().position(|u| u == t))
        .collect::<Option<_>>()
        .filter(|_| teams.len() == truth.teams.len())
        .ok_or_else(|| Error::ShapeMismatch("estimate and truth name different teams".into()))?;
    let mut est = Vec::with_capacity(times.len());
    let mut tru = Vec::with_capacity(times.len());
    for (t, row) in times.iter().zip(&rows) {
        let k = truth
            .times
            .iter()
            .position(|s| (s - t).abs() <= 1e-9 * s.abs().max(1.0))
            .ok_or_else(|| Error::ShapeMismatch(format!("time {t} is not in the truth file")))?;
        est.push(order.iter().map(|&j| row[j]).collect::<Vec<f64>>());
        tru.push(truth.beta[k].clone());
    }
    let ranks = |v: &[Vec<f64>]| v.iter().map(|b| rank(b)).collect::<Vec<_>>();
    let err = trajectory_error(&est, &tru)?;
    let mut report = json!({
        "times": times,
        "rank_diff": rank_diff(&ranks(&est), &ranks(&tru))?,
        "uniform_error": err.uniform_sup,
        "per_time_sup": err.per_time_sup,
    });
    if let (Some(input), Some(h)) = (&a.input, a.bandwidth) {
        let dataset = load_csv(input)?;
        let spec = KernelSpec::new(a.kernel, h)?;
        let loo = loo_prediction_metrics(&dataset, &spec, a.tol, a.max_iter).map_err(with_teams(dataset.teams()))?;
        report["loo_prob"] = loo.loo_prob.into();
        report["loo_nll"] = loo.loo_nll.into();
        report["loo_folds_skipped"] = loo.folds_skipped.into();
    }
    println!("{report}");
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CliResult<()> {
    let mut out = sink(a.out.as_deref())?;
    let smoothing = a.smoothing_h.map(KernelSpec::gaussian).transpose()?;
    let report = match a.table.as_str() {
        "1" | "2" => {
            let setting = if a.table == "1" { Setting::BradleyTerry } else { Setting::Agnostic };
            let cfg = TableConfig {
                selection_folds: (a.selection_folds > 0).then_some(a.selection_folds),
                ..TableConfig::new(setting, a.seeds.unwrap_or(20), a.seed)
            };
            serde_json::to_value(run_table(&cfg)?).map_err(Error::from)?
        }
        t => {
            let (settings, mode) = match t {
                "4" => (single_time_settings(), FrequencyMode::PerTime),
                "5" => (all_times_settings(), FrequencyMode::AllTimes),
                _ => (games_per_pair_settings(), FrequencyMode::AllTimes),
            };
            let report = frequency_study(&settings, mode, a.seeds.unwrap_or(50), a.seed, smoothing.as_ref())?;
            serde_json::to_value(report).map_err(Error::from)?
        }
    };
    serde_json::to_writer_pretty(&mut out, &report).map_err(Error::from)?;
    writeln!(out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_argument() {
        assert_eq!("loocv".parse::<Bandwidth>().unwrap(), Bandwidth::Loocv);
        assert_eq!("0.03".parse::<Bandwidth>().unwrap(), Bandwidth::Fixed(0.03));
        assert!("-1".parse::<Bandwidth>().is_err());
        assert!("wide".parse::<Bandwidth>().is_err());
    }

    #[test]
    fn config_lines_fill_missing_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\nkernel = epanechnikov\nbandwidth=0.2\nmax_iter = 50\nverbose = false\n").unwrap();
        let args: Vec<OsString> = ["dynbt", "fit", "--bandwidth", "0.1", "--config"]
            .iter()
            .map(OsString::from)
            .chain([path.clone().into_os_string()])
            .collect();
        let out: Vec<String> = expand_config(args).unwrap().into_iter().map(|a| a.into_string().unwrap()).collect();
        assert!(out.contains(&"--kernel=epanechnikov".to_string()));
        assert!(out.contains(&"--max-iter=50".to_string()));
        assert!(!out.iter().any(|a| a == "--bandwidth=0.2"));
        assert!(!out.iter().any(|a| a.contains("verbose")));
    }

    #[test]
    fn malformed_config_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        std::fs::write(&path, "kernel gaussian\n").unwrap();
        let args = vec![OsString::from("dynbt"), OsString::from("--config"), path.into_os_string()];
        assert!(expand_config(args).is_err());
    }
}
