mod common;

use common::is_strongly_connected;
use dynbt::data::{raw_count_matrix, MatchRecord};
use dynbt::kernel::{smooth_counts, KernelSpec};
use dynbt::metrics::static_loo_metrics;
use dynbt::solver::{fit, FitOptions};
use dynbt::tuning::{
    default_h_grid, enumerate_folds, held_out_dataset, loocv, select_bandwidth, CvOptions, FoldSelection,
};
use dynbt::{CountMatrix, Dataset, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn schedule(seed: u64, n: usize, m: usize, games: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strength: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut records = Vec::new();
    for t in 0..m {
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < 0.7 {
                    let p = 1.0 / (1.0 + (strength[j] - strength[i]).exp());
                    let wa = (0..games).filter(|_| rng.random::<f64>() < p).count() as u64;
                    records.push(MatchRecord { time: t as f64, team_a: i, team_b: j, wins_a: wa, wins_b: games - wa });
                }
            }
        }
    }
    Dataset::from_raw((0..n).map(|i| format!("p{i}")).collect(), records).unwrap()
}

/// Refits every fold from scratch on the held-out dataset.
fn brute_force(ds: &Dataset, counts: impl Fn(&Dataset, f64) -> Option<CountMatrix>, eps: f64) -> (f64, f64, usize) {
    let opts = FitOptions { tol: 1e-12, ..FitOptions::default() };
    let (mut nll, mut err, mut used) = (0.0, 0.0, 0usize);
    for fold in enumerate_folds(ds) {
        let t = ds.distinct_times()[fold.time_index];
        let held = held_out_dataset(ds, &fold).unwrap();
        let Some(x) = counts(&held, t) else { continue };
        if !is_strongly_connected(&x, eps) {
            continue;
        }
        let b = fit(&x, &opts.with_eps(eps)).unwrap();
        let d = b.scores.as_slice()[fold.winner] - b.scores.as_slice()[fold.loser];
        let p = 1.0 / (1.0 + (-d).exp());
        nll -= p.ln();
        err += if (p - 0.5).abs() <= 1e-9 { 0.5 } else if p < 0.5 { 1.0 } else { 0.0 };
        used += 1;
    }
    (nll / used as f64, err / used as f64, used)
}

#[test]
fn smoothed_loo_matches_brute_force_refits() {
    for (seed, h) in [(1, 0.1), (2, 0.4), (3, 0.2)] {
        let ds = schedule(seed, 5, 6, 2);
        let spec = KernelSpec::gaussian(h).unwrap();
        let fast = loocv(&ds, &spec, &CvOptions { fit: FitOptions { tol: 1e-12, ..FitOptions::default() }, ..CvOptions::default() })
            .unwrap();
        let (nll, err, used) = brute_force(&ds, |held, t| Some(smooth_counts(held, &spec, t)), 1e-12);
        assert_eq!(fast.folds, used);
        assert!((fast.nll - nll).abs() < 1e-8, "h={h}: {} vs {nll}", fast.nll);
        assert!((fast.prediction_error - err).abs() < 1e-12);
    }
}

#[test]
fn static_loo_matches_brute_force_refits() {
    let ds = schedule(9, 4, 5, 3);
    let fast = static_loo_metrics(&ds, &FitOptions { tol: 1e-12, ..FitOptions::default() }).unwrap();
    let (nll, err, used) = brute_force(&ds, |held, t| raw_count_matrix(held, t).ok(), 0.0);
    assert_eq!(fast.folds, used);
    assert_eq!(fast.folds + fast.folds_skipped, ds.total_games() as usize);
    assert!((fast.loo_nll - nll).abs() < 1e-8);
    assert!((fast.loo_prob - err).abs() < 1e-12);
}

#[test]
fn subsampled_folds_are_reproducible() {
    let ds = schedule(4, 6, 8, 1);
    let spec = KernelSpec::gaussian(0.2).unwrap();
    let cv = CvOptions { folds: FoldSelection::Subsample { folds: 30, seed: 3 }, ..CvOptions::default() };
    let a = loocv(&ds, &spec, &cv).unwrap();
    let b = loocv(&ds, &spec, &cv).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.folds + a.folds_skipped, 30);
}

#[test]
fn selection_returns_grid_minimum() {
    let ds = schedule(6, 5, 10, 2);
    let grid = default_h_grid();
    let sel = select_bandwidth(&ds, &grid, &CvOptions::default()).unwrap();
    let best = sel.curve.iter().filter_map(|p| p.nll).fold(f64::INFINITY, f64::min);
    assert_eq!(sel.nll_star, best);
    assert!(grid.contains(&sel.h_star));
    assert!(sel.curve.windows(2).all(|w| w[0].h < w[1].h));
}

#[test]
fn single_game_dataset_cannot_be_cross_validated() {
    let ds = Dataset::from_raw(
        vec!["a".into(), "b".into()],
        vec![MatchRecord { time: 0.0, team_a: 0, team_b: 1, wins_a: 1, wins_b: 0 }],
    )
    .unwrap();
    assert!(matches!(loocv(&ds, &KernelSpec::gaussian(0.1).unwrap(), &CvOptions::default()), Err(Error::Validation(_))));
}
