//! Synthetic data: Gaussian-process score paths, Bradley-Terry match
//! generation, and the model-agnostic probability-field generator.
//!
//! All generators take an explicit RNG. The CLI and experiment harness use
//! `rand_chacha::ChaCha8Rng`, which is portable and reproducible for a
//! given seed and stream.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::Serialize;

use crate::data::{CountMatrix, Dataset, MatchRecord};
use crate::error::{Error, Result};
use crate::solver::logistic;

/// `Σ_kl = 1 - M^-α |k - l|^r` for `k, l = 1..M`.
pub fn toeplitz_cov(m: usize, alpha: f64, r: f64) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(Error::Domain("M must be at least 1".into()));
    }
    if !(alpha > 0.0 && r > 0.0) {
        return Err(Error::Domain(format!("alpha and r must be positive, got ({alpha}, {r})")));
    }
    let scale = (m as f64).powf(-alpha);
    Ok(DMatrix::from_fn(m, m, |k, l| 1.0 - scale * (k.abs_diff(l) as f64).powf(r)))
}

/// How each team's mean path `μ_i(t)` is drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanSpec {
    /// Constant in time, `u_i ~ Uniform[low, high]` i.i.d.
    Uniform { low: f64, high: f64 },
    /// Constant in time; teams split at random into `groups` near-equal
    /// groups, group `g = 1..G` drawing `u_i ~ Uniform[gap (g-1), gap (g-1) + width]`.
    GroupWise { groups: usize, gap: f64, width: f64 },
    /// Explicit `N x M` means.
    Fixed(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpSpec {
    pub m: usize,
    pub mean: MeanSpec,
    pub covariance: DMatrix<f64>,
}

impl GpSpec {
    pub fn new(m: usize, mean: MeanSpec, covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != m || covariance.ncols() != m {
            return Err(Error::ShapeMismatch(format!(
                "covariance is {}x{}, expected {m}x{m}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if (&covariance - covariance.transpose()).amax() > 1e-12 {
            return Err(Error::Domain("covariance is not symmetric".into()));
        }
        Ok(GpSpec { m, mean, covariance })
    }

    /// Uniform[0, 1] means with the `(α, r) = (1, 1)` Toeplitz covariance.
    pub fn bradley_terry_default(m: usize) -> Result<Self> {
        GpSpec::new(m, MeanSpec::Uniform { low: 0.0, high: 1.0 }, toeplitz_cov(m, 1.0, 1.0)?)
    }

    /// Group-wise means (`G = 5`, `a = 1.5`, `b = 0.5`) with the same covariance.
    pub fn agnostic_default(m: usize) -> Result<Self> {
        GpSpec::new(m, MeanSpec::GroupWise { groups: 5, gap: 1.5, width: 0.5 }, toeplitz_cov(m, 1.0, 1.0)?)
    }
}

/// A matrix `L` with `L Lᵀ = Σ`: Cholesky when it succeeds, otherwise a
/// symmetric eigen-factorization with round-off negative eigenvalues clamped.
pub fn covariance_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = cov.clone().cholesky() {
        return Ok(chol.l());
    }
    let eig = SymmetricEigen::new(cov.clone());
    let scale = cov.amax().max(1.0);
    let min = eig.eigenvalues.min();
    if min < -1e-10 * scale {
        return Err(Error::Factorization(format!("covariance has eigenvalue {min:.3e}")));
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

pub fn team_means<R: Rng + ?Sized>(n: usize, m: usize, mean: &MeanSpec, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let constant = |u: Vec<f64>| u.into_iter().map(|v| vec![v; m]).collect();
    match mean {
        MeanSpec::Uniform { low, high } => {
            if !(low <= high) {
                return Err(Error::Domain(format!("empty mean range [{low}, {high}]")));
            }
            Ok(constant((0..n).map(|_| low + (high - low) * rng.random::<f64>()).collect()))
        }
        MeanSpec::GroupWise { groups, gap, width } => {
            if *groups == 0 || *groups > n {
                return Err(Error::Domain(format!("cannot split {n} teams into {groups} groups")));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let mut group_of = vec![0; n];
            let (base, extra) = (n / groups, n % groups);
            let mut pos = 0;
            for g in 0..*groups {
                let size = base + usize::from(g < extra);
                for &team in &order[pos..pos + size] {
                    group_of[team] = g;
                }
                pos += size;
            }
            Ok(constant(
                (0..n)
                    .map(|i| gap * group_of[i] as f64 + width * rng.random::<f64>())
                    .collect(),
            ))
        }
        MeanSpec::Fixed(paths) => {
            if paths.len() != n || paths.iter().any(|p| p.len() != m) {
                return Err(Error::ShapeMismatch(format!("fixed means must be {n}x{m}")));
            }
            Ok(paths.clone())
        }
    }
}

fn gaussian_path<R: Rng + ?Sized>(mean: &[f64], factor: &DMatrix<f64>, rng: &mut R) -> Vec<f64> {
    let z = DVector::from_iterator(mean.len(), (0..mean.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let draw = factor * z;
    mean.iter().zip(draw.iter()).map(|(m, d)| m + d).collect()
}

/// `N x M` score paths, one multivariate normal draw per team.
pub fn gp_sample_beta<R: Rng + ?Sized>(n: usize, gp: &GpSpec, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let factor = covariance_factor(&gp.covariance)?;
    let means = team_means(n, gp.m, &gp.mean, rng)?;
    Ok(means.iter().map(|mu| gaussian_path(mu, &factor, rng)).collect())
}

/// Binomial draw; inversion for `n <= 64`, BTPE beyond.
pub fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if n > 64 {
        return Binomial::new(n, p).expect("valid binomial").sample(rng);
    }
    if p > 0.5 {
        return n - invert_binomial(n, 1.0 - p, rng);
    }
    invert_binomial(n, p, rng)
}

fn invert_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    let q = 1.0 - p;
    let ratio = p / q;
    let mut pmf = q.powi(n as i32);
    let mut cdf = pmf;
    let u: f64 = rng.random();
    let mut k = 0;
    while u > cdf && k < n {
        pmf *= (n - k) as f64 / (k + 1) as f64 * ratio;
        k += 1;
        cdf += pmf;
    }
    k
}

pub fn team_names(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(2);
    (1..=n).map(|i| format!("T{i:0width$}")).collect()
}

/// Games played by pair `(i, j)`, `i < j`, at time index `t`.
pub trait GameSchedule: Fn(usize, usize, usize) -> u64 {}
impl<F: Fn(usize, usize, usize) -> u64> GameSchedule for F {}

pub fn constant_games(n: u64) -> impl Fn(usize, usize, usize) -> u64 {
    move |_, _, _| n
}

fn generate_matches<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    prob: impl Fn(usize, usize, usize) -> f64,
    n_games: impl GameSchedule,
    rng: &mut R,
) -> Result<Dataset> {
    let mut records = Vec::new();
    for t in 0..m {
        for i in 0..n {
            for j in (i + 1)..n {
                let games = n_games(i, j, t);
                if games == 0 {
                    continue;
                }
                let wins_a = sample_binomial(games, prob(i, j, t), rng);
                records.push(MatchRecord {
                    time: (t + 1) as f64,
                    team_a: i,
                    team_b: j,
                    wins_a,
                    wins_b: games - wins_a,
                });
            }
        }
    }
    if records.is_empty() {
        return Err(Error::Validation("schedule produced no games".into()));
    }
    Dataset::from_raw(team_names(n), records)
}

/// Matches at raw times `1..=M` with `x_ij(t) ~ Binom(n_ij(t), σ(β_i(t) - β_j(t)))`.
pub fn generate_bt_matches<R: Rng + ?Sized>(
    beta_paths: &[Vec<f64>],
    n_games: impl GameSchedule,
    rng: &mut R,
) -> Result<Dataset> {
    let n = beta_paths.len();
    let m = beta_paths.first().map_or(0, Vec::len);
    if beta_paths.iter().any(|p| p.len() != m) {
        return Err(Error::ShapeMismatch("score paths have unequal lengths".into()));
    }
    generate_matches(n, m, |i, j, t| logistic(beta_paths[i][t] - beta_paths[j][t]), n_games, rng)
}

/// `p[t][i][j]`, the probability that `i` beats `j` at time index `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityField {
    n: usize,
    m: usize,
    p: Vec<f64>,
}

impl ProbabilityField {
    pub fn from_fn(n: usize, m: usize, upper: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let mut p = vec![0.0; n * n * m];
        for t in 0..m {
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = upper(i, j, t);
                    if !(v > 0.0 && v < 1.0) {
                        return Err(Error::Domain(format!("p[{t}][{i}][{j}] = {v} outside (0, 1)")));
                    }
                    p[(t * n + i) * n + j] = v;
                    p[(t * n + j) * n + i] = 1.0 - v;
                }
            }
        }
        Ok(ProbabilityField { n, m, p })
    }

    pub fn n_teams(&self) -> usize {
        self.n
    }

    pub fn n_times(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, t: usize) -> f64 {
        self.p[(t * self.n + i) * self.n + j]
    }

    pub fn matrix_at(&self, t: usize) -> CountMatrix {
        let rows: Vec<Vec<f64>> = (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j, t)).collect()).collect();
        CountMatrix::from_rows(&rows).expect("probability field entries are valid")
    }

    pub fn min_probability(&self) -> f64 {
        (0..self.m)
            .flat_map(|t| (0..self.n).flat_map(move |i| (0..self.n).filter(move |&j| j != i).map(move |j| (i, j, t))))
            .map(|(i, j, t)| self.get(i, j, t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.m).map(|t| self.matrix_at(t).to_rows()).collect()
    }
}

/// Pairwise Gaussian-process draws (mean `μ_i(t) - μ_j(t)`, shared
/// covariance) for `i < j`, mapped by one global affine transform so the
/// smallest draw lands on `p_l` and the largest on `p_u`.
///
/// If every raw draw is equal the map is undefined and every probability is
/// set to the midpoint `(p_l + p_u) / 2`.
pub fn generate_agnostic_probs<R: Rng + ?Sized>(
    n: usize,
    gp: &GpSpec,
    p_l: f64,
    p_u: f64,
    rng: &mut R,
) -> Result<ProbabilityField> {
    if !(0.0 < p_l && p_l < p_u && p_u < 1.0) {
        return Err(Error::Domain(format!("need 0 < p_l < p_u < 1, got [{p_l}, {p_u}]")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 teams, got {n}")));
    }
    let m = gp.m;
    let factor = covariance_factor(&gp.covariance)?;
    let means = team_means(n, m, &gp.mean, rng)?;
    let mut raw = vec![Vec::new(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mu: Vec<f64> = (0..m).map(|t| means[i][t] - means[j][t]).collect();
            raw[i * n + j] = gaussian_path(&mu, &factor, rng);
        }
    }
    let (lo, hi) = raw
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if hi > lo {
        let scale = (p_u - p_l) / (hi - lo);
        ProbabilityField::from_fn(n, m, |i, j, t| {
            let v = raw[i * n + j][t];
            if v == hi {
                p_u
            } else {
                p_l + (v - lo) * scale
            }
        })
    } else {
        log::warn!("all raw probability draws are equal; using the midpoint");
        let mid = 0.5 * (p_l + p_u);
        ProbabilityField::from_fn(n, m, |_, _, _| mid)
    }
}

pub fn generate_agnostic_matches<R: Rng + ?Sized>(
    field: &ProbabilityField,
    n_games: impl GameSchedule,
    rng: &mut R,
) -> Result<Dataset> {
    generate_matches(field.n, field.m, |i, j, t| field.get(i, j, t), n_games, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn toeplitz_entries() {
        let s = toeplitz_cov(50, 1.0, 1.0).unwrap();
        assert!((0..50).all(|k| s[(k, k)] == 1.0));
        assert!((s[(0, 49)] - 0.02).abs() < 1e-15);
        assert_eq!(s, s.transpose());
        for k in 0..49 {
            assert_eq!(s[(k, k + 1)], s[(0, 1)]);
        }
        let s2 = toeplitz_cov(7, 0.5, 2.0).unwrap();
        assert!((s2[(1, 4)] - (1.0 - 7f64.powf(-0.5) * 9.0)).abs() < 1e-15);
        assert!(toeplitz_cov(0, 1.0, 1.0).is_err());
        assert!(toeplitz_cov(3, 0.0, 1.0).is_err());
    }

    #[test]
    fn toeplitz_default_is_positive_definite() {
        assert!(toeplitz_cov(50, 1.0, 1.0).unwrap().cholesky().is_some());
    }

    #[test]
    fn zero_covariance_returns_means() {
        let means = vec![vec![0.5, 0.25, -1.0], vec![2.0, 2.0, 2.0]];
        let gp = GpSpec::new(3, MeanSpec::Fixed(means.clone()), DMatrix::zeros(3, 3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(gp_sample_beta(2, &gp, &mut rng).unwrap(), means);
    }

    #[test]
    fn indefinite_covariance_fails() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(covariance_factor(&cov), Err(Error::Factorization(_))));
    }

    #[test]
    fn group_means_fall_in_their_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mean = MeanSpec::GroupWise { groups: 5, gap: 1.5, width: 0.5 };
        let u = team_means(50, 1, &mean, &mut rng).unwrap();
        let mut per_group = [0; 5];
        for row in &u {
            let g = (row[0] / 1.5).floor() as usize;
            assert!(g < 5);
            assert!(row[0] >= 1.5 * g as f64 && row[0] <= 1.5 * g as f64 + 0.5);
            per_group[g] += 1;
        }
        assert_eq!(per_group, [10; 5]);
    }

    #[test]
    fn binomial_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(sample_binomial(0, 0.3, &mut rng), 0);
        assert_eq!(sample_binomial(7, 0.0, &mut rng), 0);
        assert_eq!(sample_binomial(7, 1.0, &mut rng), 7);
        for _ in 0..100 {
            assert!(sample_binomial(10, 0.9, &mut rng) <= 10);
        }
    }

    #[test]
    fn binomial_mean_and_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, p) in [(1u64, 0.3), (10, 0.7), (40, 0.05), (500, 0.4)] {
            let draws: Vec<f64> = (0..20_000).map(|_| sample_binomial(n, p, &mut rng) as f64).collect();
            let mean = draws.iter().sum::<f64>() / draws.len() as f64;
            let var = n as f64 * p * (1.0 - p);
            let se = (var / draws.len() as f64).sqrt();
            assert!((mean - n as f64 * p).abs() < 5.0 * se, "n={n} p={p} mean={mean}");
        }
    }

    #[test]
    fn empty_schedule_pair_has_no_records() {
        let paths = vec![vec![0.0, 0.0], vec![0.1, 0.2], vec![1.0, -1.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ds = generate_bt_matches(&paths, |i, j, _| u64::from(!(i == 0 && j == 2)) * 3, &mut rng).unwrap();
        assert!(ds.records().iter().all(|r| !(r.team_a == 0 && r.team_b == 2)));
        assert!(ds.records().iter().all(|r| r.games() == 3));
        assert_eq!(ds.distinct_times(), &[0.0, 1.0]);
    }

    #[test]
    fn agnostic_field_extremes_and_antisymmetry() {
        let gp = GpSpec::agnostic_default(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = generate_agnostic_probs(10, &gp, 0.05, 0.95, &mut rng).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in 0..8 {
            for i in 0..10 {
                for j in 0..10 {
                    if i != j {
                        assert!((f.get(i, j, t) + f.get(j, i, t) - 1.0).abs() < 1e-15);
                        if i < j {
                            lo = lo.min(f.get(i, j, t));
                            hi = hi.max(f.get(i, j, t));
                        }
                    }
                }
            }
        }
        assert!((lo - 0.05).abs() < 1e-15);
        assert_eq!(hi, 0.95);
        assert!(generate_agnostic_probs(10, &gp, 0.6, 0.4, &mut rng).is_err());
    }

    #[test]
    fn degenerate_field_uses_midpoint() {
        let gp = GpSpec::new(2, MeanSpec::Fixed(vec![vec![0.0; 2]; 3]), DMatrix::zeros(2, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = generate_agnostic_probs(3, &gp, 0.2, 0.6, &mut rng).unwrap();
        assert!((f.get(0, 1, 0) - 0.4).abs() < 1e-15);
        assert!((f.get(1, 0, 1) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn names() {
        assert_eq!(team_names(3), vec!["T01", "T02", "T03"]);
        assert_eq!(team_names(120)[0], "T001");
    }
}
