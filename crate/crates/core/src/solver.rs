//! Weighted Bradley-Terry fitting at a single time point.
//!
//! The objective is the normalized negative log-likelihood
//! `R(β) = Σ_{i≠j} X_ij log(1 + exp(β_j - β_i)) / Σ_{i≠j} X_ij`
//! over the sum-zero plane. It is convex, and strictly convex on that plane
//! exactly when the win digraph of `X` is strongly connected.
//!
//! [`fit`] runs minorization-maximization sweeps
//! `u_i <- W_i / Σ_j T_ij / (u_i + u_j)` (with `u = exp β`, `W_i` the row sums
//! and `T_ij = X_ij + X_ji`), interleaved with Newton steps that are only
//! accepted when they lower the risk. [`fit_gradient_descent`] is a plain
//! fixed-step gradient method kept as an independent cross-check.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::data::{CountMatrix, Dataset};
use crate::error::{Error, Result};
use crate::graph::require_connected;
use crate::kernel::{CountSource, KernelFamily, KernelSmoother, KernelSpec};
use crate::parallel;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Constants appearing in the theory: design density bounds `d_min`/`d_max`,
/// probability Lipschitz constant `l_p`, the floor `p_min` on winning
/// probabilities, smoothing constant `c_s`, bandwidth slack `eta`, kernel
/// Lipschitz constant `l_w`, per-pair game count `t_games` and team count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryParams {
    pub d_min: f64,
    pub d_max: f64,
    pub l_p: f64,
    pub p_min: f64,
    /// Free constant; no numeric value is known, 1.0 by default.
    pub c_s: f64,
    pub eta: f64,
    pub l_w: f64,
    pub t_games: f64,
    pub n_teams: usize,
}

impl Default for TheoryParams {
    fn default() -> Self {
        TheoryParams {
            d_min: 1.0,
            d_max: 1.0,
            l_p: 1.0,
            p_min: 0.05,
            c_s: 1.0,
            eta: 0.1,
            l_w: KernelFamily::Gaussian.lipschitz(),
            t_games: 1.0,
            n_teams: 2,
        }
    }
}

impl TheoryParams {
    /// `p_min = 1` is accepted as the degenerate limit.
    pub fn validate(&self) -> Result<()> {
        if !(self.d_min > 0.0 && self.d_min <= 1.0 && self.d_max >= 1.0) {
            return Err(Error::Domain(format!(
                "need 0 < D_m <= 1 <= D_M, got D_m = {}, D_M = {}",
                self.d_min, self.d_max
            )));
        }
        if !(self.p_min > 0.0 && self.p_min <= 1.0) {
            return Err(Error::Domain(format!("p_min must lie in (0, 1], got {}", self.p_min)));
        }
        for (name, v) in [("L_p", self.l_p), ("C_s", self.c_s), ("eta", self.eta), ("L_W", self.l_w), ("T", self.t_games)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Team scores `β` with `Σ β_i = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    /// Centers `beta` onto the sum-zero plane.
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("scores must be finite".into()));
        }
        let mut beta = beta;
        center(&mut beta);
        Ok(ScoreVector(beta))
    }

    pub fn zeros(n: usize) -> Self {
        ScoreVector(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn permuted(&self, perm: &[usize]) -> ScoreVector {
        let mut out = vec![0.0; self.0.len()];
        for (i, &p) in perm.iter().enumerate() {
            out[p] = self.0[i];
        }
        ScoreVector(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub scores: ScoreVector,
    pub iterations: usize,
    pub final_risk: f64,
    pub converged: bool,
    /// Sup-norm of the gradient of the normalized risk.
    pub grad_inf_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Bound on the stationarity residual in count units,
    /// `max_i |Σ_j X_ij - Σ_j T_ij σ(β_i - β_j)|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Entries at or below `eps` are absent edges for the connectivity gate.
    pub eps: f64,
    /// Interleave safeguarded Newton steps with the MM sweeps.
    pub newton: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, eps: 0.0, newton: true }
    }
}

impl FitOptions {
    pub fn with_eps(self, eps: f64) -> Self {
        FitOptions { eps, ..self }
    }
}

/// Subtracts the mean.
pub fn center(beta: &mut [f64]) {
    if beta.is_empty() {
        return;
    }
    let mean = beta.iter().sum::<f64>() / beta.len() as f64;
    for b in beta.iter_mut() {
        *b -= mean;
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + e^-z)` without overflow.
#[inline]
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

const RESIDUAL_FLOOR_ULPS: f64 = 1024.0;

fn max_games(n: usize, pairs: &[(usize, usize, f64, f64)]) -> f64 {
    let mut t = vec![0.0; n];
    for &(i, j, a, b) in pairs {
        t[i] += a + b;
        t[j] += a + b;
    }
    t.into_iter().fold(0.0, f64::max)
}

/// Pair-list view of a count matrix used by every solver path.
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    n: usize,
    /// `(i, j, X_ij, X_ji)` for `i < j` with `X_ij + X_ji > 0`.
    pairs: Vec<(usize, usize, f64, f64)>,
    wins: Vec<f64>,
    total: f64,
    /// Largest per-team game total `T_i`.
    max_games: f64,
}

impl Problem {
    pub(crate) fn new(x: &CountMatrix) -> Result<Self> {
        let n = x.dim();
        let mut pairs = Vec::new();
        let mut wins = vec![0.0; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (x.get(i, j), x.get(j, i));
                if a + b > 0.0 {
                    pairs.push((i, j, a, b));
                }
                wins[i] += a;
                wins[j] += b;
            }
        }
        let total: f64 = wins.iter().sum();
        if !(total > 0.0) {
            return Err(Error::EmptyData);
        }
        let max_games = max_games(n, &pairs);
        Ok(Problem { n, pairs, wins, total, max_games })
    }

    /// The same problem with `weight` wins of `winner` over `loser` removed.
    pub(crate) fn without(&self, winner: usize, loser: usize, weight: f64) -> Problem {
        let mut p = self.clone();
        let (i, j) = if winner < loser { (winner, loser) } else { (loser, winner) };
        if let Some(pair) = p.pairs.iter_mut().find(|q| q.0 == i && q.1 == j) {
            if winner < loser {
                pair.2 = (pair.2 - weight).max(0.0);
            } else {
                pair.3 = (pair.3 - weight).max(0.0);
            }
        }
        p.wins[winner] = (p.wins[winner] - weight).max(0.0);
        p.total = p.wins.iter().sum();
        p.max_games = max_games(p.n, &p.pairs);
        p
    }

    /// Normalized-gradient threshold equivalent to a count-unit residual of
    /// `tol`. Residuals below a few thousand ulps of `T_i` are round-off, so
    /// the target is floored there.
    pub(crate) fn threshold(&self, tol: f64) -> f64 {
        tol.max(RESIDUAL_FLOOR_ULPS * f64::EPSILON * self.max_games) / self.total
    }

    pub(crate) fn risk(&self, beta: &[f64]) -> f64 {
        let mut s = 0.0;
        for &(i, j, a, b) in &self.pairs {
            let d = beta[j] - beta[i];
            s += a * softplus(d) + b * softplus(-d);
        }
        s / self.total
    }

    /// Normalized gradient into `out`; returns its sup-norm.
    pub(crate) fn gradient(&self, beta: &[f64], out: &mut [f64]) -> f64 {
        for (o, w) in out.iter_mut().zip(&self.wins) {
            *o = -w;
        }
        let (lo, hi) = beta.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &b| (l.min(b), h.max(b)));
        if hi - lo < 600.0 {
            // σ(β_i - β_j) = u_i / (u_i + u_j) with one exp per team.
            let u: Vec<f64> = beta.iter().map(|b| (b - hi).exp()).collect();
            for &(i, j, a, b) in &self.pairs {
                let t = a + b;
                let s = u[i] / (u[i] + u[j]);
                out[i] += t * s;
                out[j] += t * (1.0 - s);
            }
        } else {
            for &(i, j, a, b) in &self.pairs {
                let t = a + b;
                let s = logistic(beta[i] - beta[j]);
                out[i] += t * s;
                out[j] += t * (1.0 - s);
            }
        }
        let mut sup: f64 = 0.0;
        for o in out.iter_mut() {
            *o /= self.total;
            sup = sup.max(o.abs());
        }
        sup
    }

    /// Unnormalized Hessian (a weighted graph Laplacian).
    pub(crate) fn hessian(&self, beta: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.n, self.n);
        for &(i, j, a, b) in &self.pairs {
            let s = logistic(beta[i] - beta[j]);
            let c = (a + b) * s * (1.0 - s);
            h[(i, i)] += c;
            h[(j, j)] += c;
            h[(i, j)] -= c;
            h[(j, i)] -= c;
        }
        h
    }

    /// One cyclic MM sweep in log-score coordinates, then recentering.
    fn mm_sweep(&self, beta: &mut [f64], adjacency: &[Vec<(usize, f64)>]) {
        let hi = beta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut u: Vec<f64> = beta.iter().map(|b| (b - hi).exp()).collect();
        for i in 0..self.n {
            let denom: f64 = adjacency[i].iter().map(|&(j, t)| t / (u[i] + u[j])).sum();
            u[i] = self.wins[i] / denom;
        }
        for (b, ui) in beta.iter_mut().zip(&u) {
            *b = ui.ln();
        }
        center(beta);
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j, a, b) in &self.pairs {
            adj[i].push((j, a + b));
            adj[j].push((i, a + b));
        }
        adj
    }
}

/// Cholesky factor of the normalized Hessian lifted along the constant
/// direction, `H / total + c 11ᵀ / n`, which is positive definite on
/// connected data and acts as `H⁺` on sum-zero right-hand sides.
pub(crate) struct NewtonFactor {
    chol: Cholesky<f64, Dyn>,
}

impl NewtonFactor {
    pub(crate) fn at(problem: &Problem, beta: &[f64]) -> Option<Self> {
        let n = problem.n;
        let mut h = problem.hessian(beta) / problem.total;
        let lift = (0..n).map(|i| h[(i, i)]).sum::<f64>() / n as f64;
        if !(lift > 0.0) {
            return None;
        }
        h.add_scalar_mut(lift / n as f64);
        Cholesky::new(h).map(|chol| NewtonFactor { chol })
    }

    pub(crate) fn solve(&self, g: &[f64]) -> Vec<f64> {
        let mut step = self.chol.solve(&DVector::from_column_slice(g)).as_slice().to_vec();
        center(&mut step);
        step
    }
}

fn check_square(beta: &[f64], x: &CountMatrix) -> Result<()> {
    if beta.len() != x.dim() {
        return Err(Error::ShapeMismatch(format!("{} scores for a {}x{} matrix", beta.len(), x.dim(), x.dim())));
    }
    Ok(())
}

/// Normalized weighted negative log-likelihood.
pub fn empirical_risk(beta: &ScoreVector, x: &CountMatrix) -> Result<f64> {
    check_square(beta.as_slice(), x)?;
    Ok(Problem::new(x)?.risk(beta.as_slice()))
}

/// Gradient of [`empirical_risk`].
pub fn risk_gradient(beta: &ScoreVector, x: &CountMatrix) -> Result<Vec<f64>> {
    check_square(beta.as_slice(), x)?;
    let p = Problem::new(x)?;
    let mut g = vec![0.0; x.dim()];
    p.gradient(beta.as_slice(), &mut g);
    Ok(g)
}

/// `max_i |Σ_j X_ij - Σ_j T_ij σ(β_i - β_j)|` in count units.
pub fn stationarity_residual(beta: &ScoreVector, x: &CountMatrix) -> Result<f64> {
    check_square(beta.as_slice(), x)?;
    let p = Problem::new(x)?;
    let mut g = vec![0.0; x.dim()];
    Ok(p.gradient(beta.as_slice(), &mut g) * p.total)
}

/// Unnormalized Hessian of the likelihood:
/// `H_ij = -(X_ij + X_ji) σ_ij (1 - σ_ij)`, `H_ii = -Σ_{j≠i} H_ij`.
pub fn hessian(beta: &ScoreVector, x: &CountMatrix) -> Result<DMatrix<f64>> {
    check_square(beta.as_slice(), x)?;
    Ok(Problem::new(x)?.hessian(beta.as_slice()))
}

pub fn fit(x: &CountMatrix, opts: &FitOptions) -> Result<FitReport> {
    fit_from(x, &vec![0.0; x.dim()], opts)
}

/// [`fit`] started from `init` instead of zero.
pub fn fit_from(x: &CountMatrix, init: &[f64], opts: &FitOptions) -> Result<FitReport> {
    check_square(init, x)?;
    let problem = Problem::new(x)?;
    require_connected(x, opts.eps)?;
    minimize(&problem, init, opts)
}

const NEWTON_BACKOFF: usize = 5;

pub(crate) fn minimize(problem: &Problem, init: &[f64], opts: &FitOptions) -> Result<FitReport> {
    let n = problem.n;
    let adjacency = problem.adjacency();
    let mut beta = init.to_vec();
    center(&mut beta);
    let warm = beta.iter().any(|&b| b != 0.0);
    let mut grad = vec![0.0; n];
    let mut risk = problem.risk(&beta);
    let mut next_newton = if warm { 0 } else { 1 };
    let threshold = problem.threshold(opts.tol);

    let mut iterations = 0;
    loop {
        let mut sup = problem.gradient(&beta, &mut grad);
        if sup <= threshold && opts.newton {
            // One extra Newton step takes a converged fit down to round-off,
            // which makes the result independent of the count scale.
            if let Some(factor) = NewtonFactor::at(problem, &beta) {
                let step = factor.solve(&grad);
                let mut candidate: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b - s).collect();
                center(&mut candidate);
                let mut g2 = vec![0.0; n];
                let sup2 = problem.gradient(&candidate, &mut g2);
                if sup2 < sup {
                    beta = candidate;
                    grad = g2;
                    sup = sup2;
                    risk = problem.risk(&beta);
                }
            }
        }
        if sup <= threshold || iterations >= opts.max_iter {
            let report = FitReport {
                scores: ScoreVector(beta),
                iterations,
                final_risk: risk,
                converged: sup <= threshold,
                grad_inf_norm: sup,
            };
            return if report.converged {
                Ok(report)
            } else {
                Err(Error::MaxIterExceeded { report: Box::new(report) })
            };
        }
        iterations += 1;

        if opts.newton && iterations > next_newton {
            if let Some(factor) = NewtonFactor::at(problem, &beta) {
                let step = factor.solve(&grad);
                let candidate: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b - s).collect();
                let cand_risk = problem.risk(&candidate);
                let accept = cand_risk < risk
                    || (cand_risk <= risk + 4.0 * f64::EPSILON * risk.abs() && {
                        let mut g2 = vec![0.0; n];
                        problem.gradient(&candidate, &mut g2) < sup
                    });
                if accept && cand_risk.is_finite() {
                    beta = candidate;
                    center(&mut beta);
                    risk = cand_risk;
                    continue;
                }
            }
            next_newton = iterations + NEWTON_BACKOFF;
        }
        problem.mm_sweep(&mut beta, &adjacency);
        risk = problem.risk(&beta);
    }
}

/// Chord iteration from a nearby solution using a fixed Hessian factor,
/// falling back to [`minimize`] if it stalls.
pub(crate) fn refit_near(problem: &Problem, warm: &[f64], factor: &NewtonFactor, opts: &FitOptions) -> Result<FitReport> {
    const CHORD_MAX: usize = 60;
    let mut beta = warm.to_vec();
    let mut grad = vec![0.0; problem.n];
    let mut prev = f64::INFINITY;
    let threshold = problem.threshold(opts.tol);
    for k in 0..CHORD_MAX {
        let sup = problem.gradient(&beta, &mut grad);
        if sup <= threshold {
            return Ok(FitReport {
                final_risk: problem.risk(&beta),
                scores: ScoreVector(beta),
                iterations: k,
                converged: true,
                grad_inf_norm: sup,
            });
        }
        if !(sup < prev) {
            break;
        }
        prev = sup;
        let step = factor.solve(&grad);
        for (b, s) in beta.iter_mut().zip(&step) {
            *b -= s;
        }
    }
    minimize(problem, warm, opts)
}

/// Plain gradient descent with step `1/L`, `L = max_i T_i / (2 Σ X)` bounding
/// the curvature of the normalized risk.
pub fn fit_gradient_descent(x: &CountMatrix, opts: &FitOptions) -> Result<FitReport> {
    let problem = Problem::new(x)?;
    require_connected(x, opts.eps)?;
    let report = descend(&problem, problem.threshold(opts.tol), opts.max_iter);
    if report.converged {
        Ok(report)
    } else {
        Err(Error::MaxIterExceeded { report: Box::new(report) })
    }
}

/// Gradient descent without the connectivity gate. On disconnected data the
/// iterate drifts apart along the separating direction; the ordering it
/// produces is still informative.
pub fn gradient_descent_unchecked(x: &CountMatrix, iterations: usize) -> Result<FitReport> {
    let problem = Problem::new(x)?;
    Ok(descend(&problem, 0.0, iterations))
}

/// `tol` is on the normalized gradient.
fn descend(problem: &Problem, tol: f64, max_iter: usize) -> FitReport {
    let n = problem.n;
    let lipschitz = problem.max_games / (2.0 * problem.total);
    let step = 1.0 / lipschitz;
    let mut beta = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut iterations = 0;
    let mut sup = problem.gradient(&beta, &mut grad);
    while sup > tol && iterations < max_iter {
        for (b, g) in beta.iter_mut().zip(&grad) {
            *b -= step * g;
        }
        center(&mut beta);
        iterations += 1;
        sup = problem.gradient(&beta, &mut grad);
    }
    FitReport {
        final_risk: problem.risk(&beta),
        scores: ScoreVector(beta),
        iterations,
        converged: sup <= tol,
        grad_inf_norm: sup,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryMode {
    /// One point after another, each warm-started from the previous fit.
    #[default]
    Sequential,
    /// Grid points dispatched to the thread pool, each started from zero.
    Parallel,
}

#[derive(Debug)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub fit: Result<FitReport>,
}

impl TrajectoryPoint {
    pub fn scores(&self) -> Option<&ScoreVector> {
        self.fit.as_ref().ok().map(|r| &r.scores)
    }
}

/// Smooths and fits at every grid time; failures are recorded per point.
pub fn fit_trajectory(
    dataset: &Dataset,
    spec: &KernelSpec,
    grid: &[f64],
    opts: &FitOptions,
    mode: TrajectoryMode,
) -> Result<Vec<TrajectoryPoint>> {
    let smoother = KernelSmoother::new(dataset, *spec);
    fit_trajectory_with(&smoother, grid, opts, mode)
}

pub fn fit_trajectory_with<S: CountSource>(
    source: &S,
    grid: &[f64],
    opts: &FitOptions,
    mode: TrajectoryMode,
) -> Result<Vec<TrajectoryPoint>> {
    if grid.is_empty() {
        return Err(Error::Domain("evaluation grid is empty".into()));
    }
    if let Some(t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Domain(format!("grid time {t} outside [0, 1]")));
    }
    let opts = opts.with_eps(opts.eps.max(source.eps()));
    let n = source.dataset().n_teams();
    let fit_at = |t: f64, init: &[f64]| -> Result<FitReport> {
        let x = source.counts_at(t);
        fit_from(&x, init, &opts)
    };
    Ok(match mode {
        TrajectoryMode::Sequential => {
            let mut out = Vec::with_capacity(grid.len());
            let mut init = vec![0.0; n];
            for &t in grid {
                let fit = fit_at(t, &init);
                if let Ok(r) = &fit {
                    init.copy_from_slice(r.scores.as_slice());
                }
                out.push(TrajectoryPoint { time: t, fit });
            }
            out
        }
        TrajectoryMode::Parallel => {
            let zero = vec![0.0; n];
            parallel::map(grid, |&t| TrajectoryPoint { time: t, fit: fit_at(t, &zero) })
        }
    })
}

/// Validated pairwise probability matrix: `P_ij ∈ (0, 1)`, `P_ij + P_ji = 1`.
pub fn probability_matrix(rows: &[Vec<f64>]) -> Result<CountMatrix> {
    let n = rows.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Domain(format!("row {i} has length {}, expected {n}", row.len())));
        }
        for j in 0..n {
            if i == j {
                if row[j] != 0.0 {
                    return Err(Error::Domain(format!("diagonal entry ({i},{i}) must be 0")));
                }
                continue;
            }
            let p = row[j];
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Domain(format!("P[{i}][{j}] = {p} outside (0, 1)")));
            }
            if (p + rows[j][i] - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!("P[{i}][{j}] + P[{j}][{i}] != 1")));
            }
        }
    }
    CountMatrix::from_rows(rows).map_err(|e| Error::Domain(e.to_string()))
}

/// Population risk `R(β) = Σ_{i≠j} p_ij log(1 + exp(β_j - β_i)) / C(N, 2)`.
///
/// Since `Σ_{i≠j} p_ij = C(N, 2)` this coincides with [`empirical_risk`]
/// evaluated on `P`.
pub fn population_risk(beta: &ScoreVector, p: &CountMatrix) -> Result<f64> {
    check_square(beta.as_slice(), p)?;
    let n = p.dim() as f64;
    let pairs = n * (n - 1.0) / 2.0;
    let mut s = 0.0;
    for i in 0..p.dim() {
        for j in 0..p.dim() {
            if i != j {
                s += p.get(i, j) * softplus(beta.as_slice()[j] - beta.as_slice()[i]);
            }
        }
    }
    Ok(s / pairs)
}

/// Best Bradley-Terry approximation `β*` to a probability matrix.
pub fn projection(p: &[Vec<f64>], opts: &FitOptions) -> Result<ScoreVector> {
    let m = probability_matrix(p)?;
    projection_of(&m, opts)
}

pub(crate) fn projection_of(p: &CountMatrix, opts: &FitOptions) -> Result<ScoreVector> {
    Ok(fit(p, opts)?.scores)
}

/// `ranks[i]` is team `i`'s position, 1 = best.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Ranking(pub Vec<usize>);

impl Ranking {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Team indices from best to worst.
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.0.len()];
        for (team, &r) in self.0.iter().enumerate() {
            order[r - 1] = team;
        }
        order
    }
}

/// Ranks by descending score; equal scores go to the lower team index.
pub fn rank(scores: &[f64]) -> Ranking {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; scores.len()];
    for (pos, &team) in order.iter().enumerate() {
        ranks[team] = pos + 1;
    }
    Ranking(ranks)
}
