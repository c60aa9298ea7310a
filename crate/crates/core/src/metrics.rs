//! Evaluation metrics for estimated rankings and the diagnostics that enter
//! the oracle error bounds.

use serde::Serialize;

use crate::data::{raw_count_matrix_at, CountMatrix, Dataset};
use crate::error::{Error, Result};
use crate::kernel::{smooth_counts, CountSource, KernelSpec, PerTimeCounts};
use crate::solver::{center, rank, FitOptions, Ranking, ScoreVector};
use crate::tuning::{loo_with, loocv, CvOptions, FoldSelection, LooSummary};

/// Mean of `|est_rank - true_rank|` over teams and times.
pub fn rank_diff(est: &[Ranking], truth: &[Ranking]) -> Result<f64> {
    if est.len() != truth.len() || est.is_empty() {
        return Err(Error::ShapeMismatch(format!("{} estimated vs {} true time points", est.len(), truth.len())));
    }
    let mut sum = 0usize;
    let mut count = 0usize;
    for (k, (e, t)) in est.iter().zip(truth).enumerate() {
        if e.0.len() != t.0.len() {
            return Err(Error::ShapeMismatch(format!("time {k}: {} vs {} teams", e.0.len(), t.0.len())));
        }
        sum += e.0.iter().zip(&t.0).map(|(a, b)| a.abs_diff(*b)).sum::<usize>();
        count += e.0.len();
    }
    Ok(sum as f64 / count as f64)
}

/// Rankings of the columns of an `N x M` path matrix.
pub fn rankings_from_paths(paths: &[Vec<f64>]) -> Vec<Ranking> {
    let m = paths.first().map_or(0, Vec::len);
    (0..m)
        .map(|t| rank(&paths.iter().map(|p| p[t]).collect::<Vec<_>>()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LooMetrics {
    pub loo_prob: f64,
    pub loo_nll: f64,
    pub folds: usize,
    pub folds_skipped: usize,
}

impl From<LooSummary> for LooMetrics {
    fn from(s: LooSummary) -> Self {
        LooMetrics { loo_prob: s.prediction_error, loo_nll: s.nll, folds: s.folds, folds_skipped: s.folds_skipped }
    }
}

/// Leave-one-out error rate and negative log-likelihood of the smoothed fit.
pub fn loo_prediction_metrics(dataset: &Dataset, spec: &KernelSpec, tol: f64, max_iter: usize) -> Result<LooMetrics> {
    let cv = CvOptions {
        fit: FitOptions { tol, max_iter, ..FitOptions::default() },
        folds: FoldSelection::Exact,
        family: spec.family(),
    };
    loocv(dataset, spec, &cv).map(Into::into)
}

/// The same metrics for the unsmoothed per-time fit. Folds whose time point
/// loses connectivity are skipped.
pub fn static_loo_metrics(dataset: &Dataset, opts: &FitOptions) -> Result<LooMetrics> {
    let cv = CvOptions { fit: *opts, ..CvOptions::default() };
    loo_with(&PerTimeCounts::new(dataset), &cv).map(Into::into)
}

/// `max_i Σ_{j≠i} |T_ij / T_i - 1/(N-1)|` for a count matrix, with
/// `T_ij = X_ij + X_ji`.
pub fn delta_of(x: &CountMatrix) -> Result<f64> {
    let n = x.dim();
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 teams, got {n}")));
    }
    let even = 1.0 / (n - 1) as f64;
    let mut worst = 0.0f64;
    for i in 0..n {
        let t_i: f64 = (0..n).filter(|&j| j != i).map(|j| x.get(i, j) + x.get(j, i)).sum();
        if t_i <= 0.0 {
            return Err(Error::IsolatedTeam(i));
        }
        let dev: f64 = (0..n)
            .filter(|&j| j != i)
            .map(|j| ((x.get(i, j) + x.get(j, i)) / t_i - even).abs())
            .sum();
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Schedule irregularity of the smoothed counts at time `t`.
pub fn delta_h(dataset: &Dataset, spec: &KernelSpec, t: f64) -> Result<f64> {
    delta_of(&smooth_counts(dataset, spec, t))
}

/// `exp(max β - min β)`.
pub fn condition_number_m(beta: &ScoreVector) -> f64 {
    let b = beta.as_slice();
    let (lo, hi) = b.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if b.is_empty() {
        1.0
    } else {
        (hi - lo).exp()
    }
}

/// `exp(1 / p_min)`, accepting `p_min` in `(0, 1]`.
pub fn condition_number_k(p_min: f64) -> Result<f64> {
    if !(p_min > 0.0 && p_min <= 1.0) {
        return Err(Error::Domain(format!("p_min must lie in (0, 1], got {p_min}")));
    }
    Ok((1.0 / p_min).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// `48 M(t) (δ + C_s h)`
    PointwiseM,
    /// `72 K (δ + C_s h)`
    PointwiseK,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleBound {
    pub value: f64,
    /// The bound only applies while it stays below 1/3.
    pub active: bool,
}

pub fn oracle_bound_rhs(condition: f64, delta: f64, c_s: f64, h: f64, mode: BoundMode) -> Result<OracleBound> {
    if !(condition >= 1.0 && delta >= 0.0 && c_s > 0.0 && h > 0.0) {
        return Err(Error::Domain(format!(
            "need condition >= 1, delta >= 0, C_s > 0, h > 0; got ({condition}, {delta}, {c_s}, {h})"
        )));
    }
    let constant = match mode {
        BoundMode::PointwiseM => 48.0,
        BoundMode::PointwiseK => 72.0,
    };
    let value = constant * condition * (delta + c_s * h);
    Ok(OracleBound { value, active: value < 1.0 / 3.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryError {
    pub per_time_sup: Vec<f64>,
    pub uniform_sup: f64,
}

/// Sup-norm error per time after centring both sides, and its maximum.
/// Inputs are indexed `[time][team]`.
pub fn trajectory_error(est: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<TrajectoryError> {
    if est.len() != truth.len() || est.is_empty() {
        return Err(Error::ShapeMismatch(format!("{} estimated vs {} true time points", est.len(), truth.len())));
    }
    let mut per_time_sup = Vec::with_capacity(est.len());
    for (k, (e, t)) in est.iter().zip(truth).enumerate() {
        if e.len() != t.len() {
            return Err(Error::ShapeMismatch(format!("time {k}: {} vs {} teams", e.len(), t.len())));
        }
        let (mut e, mut t) = (e.clone(), t.clone());
        center(&mut e);
        center(&mut t);
        per_time_sup.push(e.iter().zip(&t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let uniform_sup = per_time_sup.iter().copied().fold(0.0, f64::max);
    Ok(TrajectoryError { per_time_sup, uniform_sup })
}

/// Wins over games at time index `k`; a team without games gets 1/2.
pub fn win_rates_at(dataset: &Dataset, k: usize) -> Vec<f64> {
    rates(&raw_count_matrix_at(dataset, k))
}

fn rates(x: &CountMatrix) -> Vec<f64> {
    let n = x.dim();
    (0..n)
        .map(|i| {
            let wins: f64 = x.row(i).iter().sum();
            let games: f64 = wins + (0..n).map(|j| x.get(j, i)).sum::<f64>();
            if games > 0.0 {
                wins / games
            } else {
                0.5
            }
        })
        .collect()
}

/// Per-time win-rate rankings at every distinct time.
pub fn win_rate_rankings(dataset: &Dataset) -> Vec<Ranking> {
    (0..dataset.distinct_times().len()).map(|k| rank(&win_rates_at(dataset, k))).collect()
}

/// Leave-one-out error rate of predicting each game's winner as the team
/// with the higher same-time win rate, computed without that game. Equal
/// rates count as half an error.
pub fn win_rate_loo_prob(dataset: &Dataset) -> Result<f64> {
    let source = PerTimeCounts::new(dataset);
    let (mut err, mut folds) = (0.0, 0usize);
    for (k, &t) in dataset.distinct_times().iter().enumerate() {
        let x = source.counts_at(t);
        for r in dataset.records_at(k) {
            for (w, l, count) in [(r.team_a, r.team_b, r.wins_a), (r.team_b, r.team_a, r.wins_b)] {
                if count == 0 {
                    continue;
                }
                let mut held = x.clone();
                held.add(w, l, -1.0);
                let rate = rates(&held);
                let e = match rate[w].partial_cmp(&rate[l]) {
                    Some(std::cmp::Ordering::Greater) => 0.0,
                    Some(std::cmp::Ordering::Less) => 1.0,
                    _ => 0.5,
                };
                err += e * count as f64;
                folds += count as usize;
            }
        }
    }
    if folds == 0 {
        return Err(Error::EmptyData);
    }
    Ok(err / folds as f64)
}
