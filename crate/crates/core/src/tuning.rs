//! Leave-one-out cross-validation of the kernel bandwidth.
//!
//! A fold removes a single game (one Bernoulli outcome), refits at the
//! held-out game's time only, and scores the game by its negative
//! log-likelihood under the refit. Removing a game at time `t_m` lowers one
//! entry of `X̃(t_m)` by the game's own kernel weight, so folds are evaluated
//! directly on the smoothed matrix and warm-started from the full-data fit.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{Dataset, MatchRecord};
use crate::error::{Error, Result};
use crate::graph::strongly_connected_components;
use crate::kernel::{CountSource, KernelFamily, KernelSmoother, KernelSpec};
use crate::parallel;
use crate::solver::{minimize, refit_near, softplus, FitOptions, NewtonFactor, Problem};

/// Geometric grid from 0.005 to 1.0 with 20 points.
pub fn default_h_grid() -> Vec<f64> {
    let (lo, hi, n) = (0.005f64, 1.0f64, 20);
    let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
    (0..n)
        .map(|k| if k == n - 1 { hi } else { lo * ratio.powi(k) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldSelection {
    /// Every game is held out once.
    Exact,
    /// A uniformly drawn subset of `folds` games (without replacement).
    Subsample { folds: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct CvOptions {
    pub fit: FitOptions,
    pub folds: FoldSelection,
    pub family: KernelFamily,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions { fit: FitOptions::default(), folds: FoldSelection::Exact, family: KernelFamily::Gaussian }
    }
}

/// One held-out game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fold {
    pub record: usize,
    pub time_index: usize,
    pub winner: usize,
    pub loser: usize,
}

/// Unit folds in record order: a record with `k` games yields `k` folds.
pub fn enumerate_folds(dataset: &Dataset) -> Vec<Fold> {
    let mut folds = Vec::with_capacity(dataset.total_games() as usize);
    let mut time_index = 0;
    for (idx, r) in dataset.records().iter().enumerate() {
        while dataset.distinct_times()[time_index] != r.time {
            time_index += 1;
        }
        for _ in 0..r.wins_a {
            folds.push(Fold { record: idx, time_index, winner: r.team_a, loser: r.team_b });
        }
        for _ in 0..r.wins_b {
            folds.push(Fold { record: idx, time_index, winner: r.team_b, loser: r.team_a });
        }
    }
    folds
}

/// The dataset with `fold`'s game removed.
pub fn held_out_dataset(dataset: &Dataset, fold: &Fold) -> Result<Dataset> {
    let mut records: Vec<MatchRecord> = dataset.records().to_vec();
    let r = &mut records[fold.record];
    if r.team_a == fold.winner {
        r.wins_a -= 1;
    } else {
        r.wins_b -= 1;
    }
    if r.games() == 0 {
        records.remove(fold.record);
    }
    Ok(Dataset::new(dataset.teams().to_vec(), records, dataset.raw_time_range())?.inherit_raw_times(dataset))
}

/// Per-fold prediction of the held-out game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldPrediction {
    /// Predicted probability that the held-out winner wins.
    pub p_win: f64,
    pub nll: f64,
}

/// Predictions within this distance of 1/2 count as coin flips, so exact
/// ties in the data are not decided by round-off in the fit.
pub const TIE_TOLERANCE: f64 = 1e-9;

impl FoldPrediction {
    /// 1 when the winner was predicted to lose, 1/2 on a coin flip.
    pub fn error(&self) -> f64 {
        if (self.p_win - 0.5).abs() <= TIE_TOLERANCE {
            0.5
        } else if self.p_win < 0.5 {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooSummary {
    pub nll: f64,
    /// Mean misprediction rate of the held-out winner.
    pub prediction_error: f64,
    pub folds: usize,
    pub folds_skipped: usize,
}

fn group_by_time(dataset: &Dataset, folds: &[Fold]) -> Vec<Vec<(usize, usize, usize)>> {
    // (winner, loser, multiplicity), first-occurrence order within each time
    let mut grouped: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); dataset.distinct_times().len()];
    for f in folds {
        let slot = &mut grouped[f.time_index];
        match slot.iter_mut().find(|(w, l, _)| *w == f.winner && *l == f.loser) {
            Some(entry) => entry.2 += 1,
            None => slot.push((f.winner, f.loser, 1)),
        }
    }
    grouped
}

fn select_folds(dataset: &Dataset, selection: FoldSelection) -> Vec<Fold> {
    let all = enumerate_folds(dataset);
    match selection {
        FoldSelection::Exact => all,
        FoldSelection::Subsample { folds, seed } if folds < all.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = sample(&mut rng, all.len(), folds).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| all[i]).collect()
        }
        FoldSelection::Subsample { .. } => all,
    }
}

type TimeOutcome = Vec<(Option<FoldPrediction>, usize)>;

fn predict_time<S: CountSource>(
    source: &S,
    k: usize,
    group: &[(usize, usize, usize)],
    opts: &FitOptions,
) -> TimeOutcome {
    if group.is_empty() {
        return Vec::new();
    }
    let t = source.dataset().distinct_times()[k];
    let eps = opts.eps.max(source.eps());
    let opts = opts.with_eps(eps);
    let x = source.counts_at(t);
    let skip_all = || group.iter().map(|&(_, _, c)| (None, c)).collect();

    let full = match Problem::new(&x) {
        Ok(p) => p,
        Err(_) => return skip_all(),
    };
    if strongly_connected_components(&x, eps).len() != 1 {
        return skip_all();
    }
    let n = x.dim();
    let beta = match minimize(&full, &vec![0.0; n], &opts) {
        Ok(r) => r.scores.into_inner(),
        Err(Error::MaxIterExceeded { report }) => report.scores.into_inner(),
        Err(_) => return skip_all(),
    };
    let factor = NewtonFactor::at(&full, &beta);
    let weight = source.self_weight(t);

    group
        .iter()
        .map(|&(w, l, count)| {
            let remaining = x.get(w, l) - weight;
            if remaining <= eps {
                let mut reduced = x.clone();
                reduced.set(w, l, remaining.max(0.0));
                if strongly_connected_components(&reduced, eps).len() != 1 {
                    return (None, count);
                }
            }
            let problem = full.without(w, l, weight);
            let fit = match &factor {
                Some(f) => refit_near(&problem, &beta, f, &opts),
                None => minimize(&problem, &beta, &opts),
            };
            match fit {
                Ok(r) => {
                    let b = r.scores.as_slice();
                    let d = b[w] - b[l];
                    let p_win = crate::solver::logistic(d);
                    (Some(FoldPrediction { p_win, nll: softplus(-d) }), count)
                }
                Err(e) => {
                    log::warn!("fold at t={t} ({w} beat {l}) failed: {e}");
                    (None, count)
                }
            }
        })
        .collect()
}

/// Fold predictions in time-major order with their multiplicities.
pub fn loo_predictions<S: CountSource>(
    source: &S,
    folds: FoldSelection,
    opts: &FitOptions,
) -> Vec<(Option<FoldPrediction>, usize)> {
    let dataset = source.dataset();
    let grouped = group_by_time(dataset, &select_folds(dataset, folds));
    parallel::map_range(grouped.len(), |k| predict_time(source, k, &grouped[k], opts))
        .into_iter()
        .flatten()
        .collect()
}

/// Averages fold predictions in a fixed sequential order.
pub fn summarize(predictions: &[(Option<FoldPrediction>, usize)]) -> Result<LooSummary> {
    let (mut nll, mut err, mut folds, mut skipped) = (0.0, 0.0, 0usize, 0usize);
    for (p, count) in predictions {
        match p {
            Some(p) => {
                nll += p.nll * *count as f64;
                err += p.error() * *count as f64;
                folds += count;
            }
            None => skipped += count,
        }
    }
    if folds == 0 {
        return Err(Error::AllFoldsFailed { folds: skipped });
    }
    Ok(LooSummary { nll: nll / folds as f64, prediction_error: err / folds as f64, folds, folds_skipped: skipped })
}

pub fn loo_with<S: CountSource>(source: &S, cv: &CvOptions) -> Result<LooSummary> {
    if source.dataset().total_games() < 2 {
        return Err(Error::Validation("leave-one-out needs at least 2 games".into()));
    }
    summarize(&loo_predictions(source, cv.folds, &cv.fit))
}

pub fn loocv(dataset: &Dataset, spec: &KernelSpec, cv: &CvOptions) -> Result<LooSummary> {
    loo_with(&KernelSmoother::new(dataset, *spec), cv)
}

/// Mean held-out negative log-likelihood over all single-game folds.
pub fn loocv_nll(dataset: &Dataset, spec: &KernelSpec, opts: &FitOptions) -> Result<f64> {
    let cv = CvOptions { fit: *opts, folds: FoldSelection::Exact, family: spec.family() };
    Ok(loocv(dataset, spec, &cv)?.nll)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvPoint {
    pub h: f64,
    /// `None` when every fold was disconnected.
    pub nll: Option<f64>,
    pub prediction_error: Option<f64>,
    pub folds: usize,
    pub folds_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthSelection {
    pub h_star: f64,
    pub nll_star: f64,
    /// Sorted by `h`.
    pub curve: Vec<CvPoint>,
}

impl BandwidthSelection {
    /// Bandwidths whose folds all failed.
    pub fn excluded(&self) -> Vec<f64> {
        self.curve.iter().filter(|p| p.nll.is_none()).map(|p| p.h).collect()
    }

    /// True when the minimum is not at either end of the grid.
    pub fn is_interior(&self) -> bool {
        let valid: Vec<&CvPoint> = self.curve.iter().filter(|p| p.nll.is_some()).collect();
        valid.len() >= 3 && valid.first().unwrap().h < self.h_star && self.h_star < valid.last().unwrap().h
    }
}

pub fn select_bandwidth(dataset: &Dataset, h_grid: &[f64], cv: &CvOptions) -> Result<BandwidthSelection> {
    if h_grid.is_empty() {
        return Err(Error::Domain("bandwidth grid is empty".into()));
    }
    let mut grid = h_grid.to_vec();
    if let Some(h) = grid.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(Error::Domain(format!("bandwidth {h} is not positive")));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let curve: Vec<CvPoint> = parallel::map(&grid, |&h| {
        let spec = KernelSpec::new(cv.family, h).expect("validated bandwidth");
        match loocv(dataset, &spec, cv) {
            Ok(s) => CvPoint { h, nll: Some(s.nll), prediction_error: Some(s.prediction_error), folds: s.folds, folds_skipped: s.folds_skipped },
            Err(Error::AllFoldsFailed { folds }) => {
                log::warn!("h = {h}: all {folds} folds disconnected; excluded");
                CvPoint { h, nll: None, prediction_error: None, folds: 0, folds_skipped: folds }
            }
            Err(e) => {
                log::warn!("h = {h}: {e}; excluded");
                CvPoint { h, nll: None, prediction_error: None, folds: 0, folds_skipped: 0 }
            }
        }
    });

    // Ascending h with `<=` breaks ties toward the larger bandwidth.
    let mut best: Option<(f64, f64)> = None;
    for p in &curve {
        if let Some(nll) = p.nll {
            if best.is_none_or(|(_, b)| nll <= b) {
                best = Some((p.h, nll));
            }
        }
    }
    let (h_star, nll_star) = best.ok_or(Error::AllFoldsFailed { folds: 0 })?;
    Ok(BandwidthSelection { h_star, nll_star, curve })
}
