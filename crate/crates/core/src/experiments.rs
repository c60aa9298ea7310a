//! Monte Carlo studies on synthetic data: estimator comparisons against a
//! known truth and connectivity frequency tables.
//!
//! Repetition `r` of a study seeded with `s` draws everything from
//! `ChaCha8Rng::seed_from_u64(s)` on stream `r`, so each repetition is
//! reproducible on its own and independent of the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{raw_count_matrix_at, Dataset};
use crate::error::{Error, Result};
use crate::graph::{strongly_connected_components, FrequencyMode};
use crate::kernel::{CountSource, KernelSmoother, KernelSpec};
use crate::metrics::{
    rank_diff, static_loo_metrics, trajectory_error, win_rate_loo_prob, win_rate_rankings,
    LooMetrics,
};
use crate::parallel;
use crate::simulate::{
    constant_games, generate_agnostic_matches, generate_agnostic_probs, generate_bt_matches, gp_sample_beta, GpSpec,
};
use crate::solver::{fit, fit_trajectory, gradient_descent_unchecked, projection_of, rank, FitOptions, Ranking, TrajectoryMode};
use crate::tuning::{default_h_grid, loocv, select_bandwidth, CvOptions, CvPoint, FoldSelection};

/// Gradient steps used to rank a time point whose maximum-likelihood
/// estimate does not exist.
pub const FALLBACK_ITERATIONS: usize = 1000;

pub fn repetition_rng(seed: u64, repetition: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repetition as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Scores follow Gaussian-process paths and games follow the model.
    BradleyTerry,
    /// Pairwise probabilities follow Gaussian-process paths directly; the
    /// truth is their best Bradley-Terry approximation.
    Agnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableConfig {
    pub setting: Setting,
    pub n_teams: usize,
    pub n_times: usize,
    pub n_games: u64,
    pub repetitions: usize,
    pub seed: u64,
    pub h_grid: Vec<f64>,
    /// Folds per bandwidth during selection; `None` uses every game.
    pub selection_folds: Option<usize>,
    pub p_range: (f64, f64),
    #[serde(skip)]
    pub fit: FitOptions,
}

impl TableConfig {
    pub fn new(setting: Setting, repetitions: usize, seed: u64) -> Self {
        TableConfig {
            setting,
            n_teams: 50,
            n_times: 50,
            n_games: 1,
            repetitions,
            seed,
            h_grid: default_h_grid(),
            selection_folds: Some(2000),
            p_range: (0.05, 0.95),
            fit: FitOptions::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_teams < 2 || self.n_times == 0 || self.n_games == 0 || self.repetitions == 0 {
            return Err(Error::Domain(format!(
                "need N >= 2 and positive M, n and repetitions; got N={}, M={}, n={}, reps={}",
                self.n_teams, self.n_times, self.n_games, self.repetitions
            )));
        }
        Ok(())
    }
}

/// One synthetic data set with its truth, indexed `[time][team]`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub dataset: Dataset,
    pub truth: Vec<Vec<f64>>,
}

pub fn simulate_instance(cfg: &TableConfig, repetition: usize) -> Result<Instance> {
    let mut rng = repetition_rng(cfg.seed, repetition);
    let games = constant_games(cfg.n_games);
    match cfg.setting {
        Setting::BradleyTerry => {
            let gp = GpSpec::bradley_terry_default(cfg.n_times)?;
            let paths = gp_sample_beta(cfg.n_teams, &gp, &mut rng)?;
            let dataset = generate_bt_matches(&paths, games, &mut rng)?;
            let truth = (0..cfg.n_times).map(|t| paths.iter().map(|p| p[t]).collect()).collect();
            Ok(Instance { dataset, truth })
        }
        Setting::Agnostic => {
            let gp = GpSpec::agnostic_default(cfg.n_times)?;
            let field = generate_agnostic_probs(cfg.n_teams, &gp, cfg.p_range.0, cfg.p_range.1, &mut rng)?;
            let dataset = generate_agnostic_matches(&field, games, &mut rng)?;
            let truth = (0..cfg.n_times)
                .map(|t| projection_of(&field.matrix_at(t), &cfg.fit).map(|b| b.into_inner()))
                .collect::<Result<_>>()?;
            Ok(Instance { dataset, truth })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorScores {
    pub rank_diff: f64,
    pub loo_prob: f64,
    pub loo_nll: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepetitionResult {
    pub repetition: usize,
    pub h_star: f64,
    pub dynamic: EstimatorScores,
    pub static_bt: EstimatorScores,
    pub win_rate: EstimatorScores,
    /// Largest sup-norm error of the smoothed fit over the observed times.
    pub dynamic_uniform_error: f64,
    /// Times where the unsmoothed data were not strongly connected.
    pub static_disconnected_times: usize,
    pub dynamic_loo_folds_skipped: usize,
    pub static_loo_folds_skipped: usize,
    pub cv_curve: Vec<CvPoint>,
}

fn fallback_scores(x: &crate::data::CountMatrix) -> Result<Vec<f64>> {
    Ok(gradient_descent_unchecked(x, FALLBACK_ITERATIONS)?.scores.into_inner())
}

fn scores_or_fallback(x: &crate::data::CountMatrix, opts: &FitOptions) -> Result<(Vec<f64>, bool)> {
    match fit(x, opts) {
        Ok(r) => Ok((r.scores.into_inner(), true)),
        Err(Error::MaxIterExceeded { report }) => Ok((report.scores.into_inner(), true)),
        Err(Error::NotStronglyConnected { .. }) => Ok((fallback_scores(x)?, false)),
        Err(e) => Err(e),
    }
}

/// Static per-time estimates; disconnected times fall back to a fixed
/// number of gradient steps from zero.
pub fn static_estimates(dataset: &Dataset, opts: &FitOptions) -> Result<(Vec<Vec<f64>>, usize)> {
    let mut disconnected = 0;
    let mut out = Vec::with_capacity(dataset.distinct_times().len());
    for k in 0..dataset.distinct_times().len() {
        let (scores, ok) = scores_or_fallback(&raw_count_matrix_at(dataset, k), opts)?;
        disconnected += usize::from(!ok);
        out.push(scores);
    }
    Ok((out, disconnected))
}

/// Smoothed estimates at every distinct time.
pub fn dynamic_estimates(dataset: &Dataset, spec: &KernelSpec, opts: &FitOptions) -> Result<Vec<Vec<f64>>> {
    let smoother = KernelSmoother::new(dataset, *spec);
    let points = fit_trajectory(dataset, spec, dataset.distinct_times(), opts, TrajectoryMode::Sequential)?;
    points
        .into_iter()
        .map(|p| match p.fit {
            Ok(r) => Ok(r.scores.into_inner()),
            Err(Error::MaxIterExceeded { report }) => Ok(report.scores.into_inner()),
            Err(Error::NotStronglyConnected { .. }) => fallback_scores(&smoother.counts_at(p.time)),
            Err(e) => Err(e),
        })
        .collect()
}

fn rankings(estimates: &[Vec<f64>]) -> Vec<Ranking> {
    estimates.iter().map(|b| rank(b)).collect()
}

fn selection_seed(seed: u64, repetition: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (repetition as u64).wrapping_add(1)
}

pub fn run_repetition(cfg: &TableConfig, repetition: usize) -> Result<RepetitionResult> {
    cfg.validate()?;
    let Instance { dataset, truth } = simulate_instance(cfg, repetition)?;
    let true_ranks = rankings(&truth);

    let folds = match cfg.selection_folds {
        Some(folds) => FoldSelection::Subsample { folds, seed: selection_seed(cfg.seed, repetition) },
        None => FoldSelection::Exact,
    };
    let cv = CvOptions { fit: cfg.fit, folds, ..CvOptions::default() };
    let selection = select_bandwidth(&dataset, &cfg.h_grid, &cv)?;
    let spec = KernelSpec::new(cv.family, selection.h_star)?;

    let dynamic = dynamic_estimates(&dataset, &spec, &cfg.fit)?;
    let dynamic_loo: LooMetrics = loocv(&dataset, &spec, &CvOptions { folds: FoldSelection::Exact, ..cv })?.into();
    let (static_fit, static_disconnected_times) = static_estimates(&dataset, &cfg.fit)?;
    let static_loo = static_loo_metrics(&dataset, &cfg.fit)?;

    Ok(RepetitionResult {
        repetition,
        h_star: selection.h_star,
        dynamic: EstimatorScores {
            rank_diff: rank_diff(&rankings(&dynamic), &true_ranks)?,
            loo_prob: dynamic_loo.loo_prob,
            loo_nll: Some(dynamic_loo.loo_nll),
        },
        static_bt: EstimatorScores {
            rank_diff: rank_diff(&rankings(&static_fit), &true_ranks)?,
            loo_prob: static_loo.loo_prob,
            loo_nll: Some(static_loo.loo_nll),
        },
        win_rate: EstimatorScores {
            rank_diff: rank_diff(&win_rate_rankings(&dataset), &true_ranks)?,
            loo_prob: win_rate_loo_prob(&dataset)?,
            loo_nll: None,
        },
        dynamic_uniform_error: trajectory_error(&dynamic, &truth)?.uniform_sup,
        static_disconnected_times,
        dynamic_loo_folds_skipped: dynamic_loo.folds_skipped,
        static_loo_folds_skipped: static_loo.folds_skipped,
        cv_curve: selection.curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableSummary {
    pub dynamic: EstimatorScores,
    pub static_bt: EstimatorScores,
    pub win_rate: EstimatorScores,
    pub h_star_mean: f64,
    pub dynamic_uniform_error_mean: f64,
    /// Repetitions where the smoothed fit has the strictly smaller rank difference.
    pub dynamic_beats_static: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableReport {
    pub config: TableConfig,
    pub repetitions: Vec<RepetitionResult>,
    pub summary: TableSummary,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn mean_scores(rows: &[RepetitionResult], pick: impl Fn(&RepetitionResult) -> EstimatorScores) -> EstimatorScores {
    let nll: Option<Vec<f64>> = rows.iter().map(|r| pick(r).loo_nll).collect();
    EstimatorScores {
        rank_diff: mean(rows.iter().map(|r| pick(r).rank_diff)),
        loo_prob: mean(rows.iter().map(|r| pick(r).loo_prob)),
        loo_nll: nll.map(|v| mean(v.into_iter())),
    }
}

pub fn summarize_table(rows: &[RepetitionResult]) -> TableSummary {
    TableSummary {
        dynamic: mean_scores(rows, |r| r.dynamic),
        static_bt: mean_scores(rows, |r| r.static_bt),
        win_rate: mean_scores(rows, |r| r.win_rate),
        h_star_mean: mean(rows.iter().map(|r| r.h_star)),
        dynamic_uniform_error_mean: mean(rows.iter().map(|r| r.dynamic_uniform_error)),
        dynamic_beats_static: rows.iter().filter(|r| r.dynamic.rank_diff < r.static_bt.rank_diff).count(),
    }
}

/// Runs every repetition (in parallel when enabled) and averages them.
pub fn run_table(cfg: &TableConfig) -> Result<TableReport> {
    cfg.validate()?;
    let rows = parallel::map_range(cfg.repetitions, |r| {
        log::info!("repetition {}/{}", r + 1, cfg.repetitions);
        run_repetition(cfg, r)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let summary = summarize_table(&rows);
    Ok(TableReport { config: cfg.clone(), repetitions: rows, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrequencySetting {
    pub n_teams: usize,
    pub n_times: usize,
    pub n_games: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub setting: FrequencySetting,
    pub frequency: f64,
    pub standard_error: f64,
    /// Same statistic on kernel-smoothed counts, when a bandwidth was given.
    pub smoothed_frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyReport {
    pub mode: FrequencyMode,
    pub repetitions: usize,
    pub seed: u64,
    pub smoothing_bandwidth: Option<f64>,
    pub rows: Vec<FrequencyRow>,
}

/// Per-time connectivity on raw data, for `(N, M)` with one game per pair.
pub fn single_time_settings() -> Vec<FrequencySetting> {
    [(5, 5), (10, 10), (20, 10), (30, 10), (40, 10), (50, 10)]
        .into_iter()
        .map(|(n_teams, n_times)| FrequencySetting { n_teams, n_times, n_games: 1 })
        .collect()
}

/// All-times connectivity for growing `N` at `M = 10`.
pub fn all_times_settings() -> Vec<FrequencySetting> {
    [10, 20, 30, 40, 50, 60]
        .into_iter()
        .map(|n_teams| FrequencySetting { n_teams, n_times: 10, n_games: 1 })
        .collect()
}

/// All-times connectivity at `N = M = 10` for growing games per pair.
pub fn games_per_pair_settings() -> Vec<FrequencySetting> {
    [1, 2, 4, 6, 8, 10]
        .into_iter()
        .map(|n_games| FrequencySetting { n_teams: 10, n_times: 10, n_games })
        .collect()
}

fn mode_statistic(flags: &[bool], mode: FrequencyMode) -> f64 {
    let ok = flags.iter().filter(|&&b| b).count();
    match mode {
        FrequencyMode::PerTime => ok as f64 / flags.len() as f64,
        FrequencyMode::AllTimes => f64::from(u8::from(ok == flags.len())),
    }
}

/// Connectivity frequency over repetitions of the model-based generator.
pub fn connectivity_frequency(
    setting: FrequencySetting,
    mode: FrequencyMode,
    repetitions: usize,
    seed: u64,
    smoothing: Option<&KernelSpec>,
) -> Result<FrequencyRow> {
    let cfg = TableConfig {
        n_teams: setting.n_teams,
        n_times: setting.n_times,
        n_games: setting.n_games,
        ..TableConfig::new(Setting::BradleyTerry, repetitions, seed)
    };
    cfg.validate()?;
    let per_rep = parallel::map_range(repetitions, |r| -> Result<(f64, Option<f64>)> {
        let mut rng = repetition_rng(seed, r);
        let gp = GpSpec::bradley_terry_default(setting.n_times)?;
        let paths = gp_sample_beta(setting.n_teams, &gp, &mut rng)?;
        let ds = generate_bt_matches(&paths, constant_games(setting.n_games), &mut rng)?;
        let raw: Vec<bool> = (0..ds.distinct_times().len())
            .map(|k| strongly_connected_components(&raw_count_matrix_at(&ds, k), 0.0).len() == 1)
            .collect();
        let smoothed = smoothing.map(|spec| {
            let s = KernelSmoother::new(&ds, *spec);
            let flags: Vec<bool> = ds
                .distinct_times()
                .iter()
                .map(|&t| strongly_connected_components(&s.counts_at(t), s.eps()).len() == 1)
                .collect();
            mode_statistic(&flags, mode)
        });
        Ok((mode_statistic(&raw, mode), smoothed))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let values: Vec<f64> = per_rep.iter().map(|v| v.0).collect();
    let frequency = mean(values.iter().copied());
    let standard_error = if repetitions > 1 {
        let var = values.iter().map(|v| (v - frequency).powi(2)).sum::<f64>() / (repetitions - 1) as f64;
        (var / repetitions as f64).sqrt()
    } else {
        0.0
    };
    let smoothed_frequency = smoothing.map(|_| mean(per_rep.iter().filter_map(|v| v.1)));
    Ok(FrequencyRow { setting, frequency, standard_error, smoothed_frequency })
}

pub fn frequency_study(
    settings: &[FrequencySetting],
    mode: FrequencyMode,
    repetitions: usize,
    seed: u64,
    smoothing: Option<&KernelSpec>,
) -> Result<FrequencyReport> {
    let rows = settings
        .iter()
        .map(|&s| connectivity_frequency(s, mode, repetitions, seed, smoothing))
        .collect::<Result<_>>()?;
    Ok(FrequencyReport { mode, repetitions, seed, smoothing_bandwidth: smoothing.map(KernelSpec::bandwidth), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(setting: Setting) -> TableConfig {
        TableConfig {
            n_teams: 6,
            n_times: 8,
            n_games: 3,
            h_grid: vec![0.1, 0.3, 1.0],
            selection_folds: None,
            ..TableConfig::new(setting, 2, 5)
        }
    }

    #[test]
    fn instance_is_reproducible() {
        let cfg = small(Setting::BradleyTerry);
        let a = simulate_instance(&cfg, 1).unwrap();
        let b = simulate_instance(&cfg, 1).unwrap();
        let c = simulate_instance(&cfg, 0).unwrap();
        assert_eq!(a.dataset.records(), b.dataset.records());
        assert_ne!(a.dataset.records(), c.dataset.records());
        assert_eq!(a.truth.len(), 8);
    }

    #[test]
    fn small_tables_run() {
        for setting in [Setting::BradleyTerry, Setting::Agnostic] {
            let report = run_table(&small(setting)).unwrap();
            assert_eq!(report.repetitions.len(), 2);
            let s = &report.summary;
            assert!(s.dynamic.rank_diff >= 0.0 && s.dynamic.rank_diff < 6.0);
            assert!(s.dynamic.loo_nll.unwrap() > 0.0);
            assert!(s.win_rate.loo_nll.is_none());
            assert!(report.config.h_grid.contains(&s.h_star_mean) || report.repetitions.len() > 1);
        }
    }

    #[test]
    fn frequency_modes() {
        let setting = FrequencySetting { n_teams: 5, n_times: 4, n_games: 1 };
        let per = connectivity_frequency(setting, FrequencyMode::PerTime, 10, 3, None).unwrap();
        let all = connectivity_frequency(setting, FrequencyMode::AllTimes, 10, 3, None).unwrap();
        assert!((0.0..=1.0).contains(&per.frequency));
        assert!(all.frequency <= per.frequency + 1e-12);
        let many = FrequencySetting { n_teams: 5, n_times: 4, n_games: 40 };
        assert!(connectivity_frequency(many, FrequencyMode::PerTime, 10, 3, None).unwrap().frequency > per.frequency);
    }
}
