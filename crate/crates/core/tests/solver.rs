mod common;

use approx::assert_relative_eq;
use common::{naive_risk, plane_search_three, random_connected, sup_diff};
use dynbt::solver::{
    empirical_risk, fit, fit_gradient_descent, hessian, rank, risk_gradient, stationarity_residual, FitOptions,
    ScoreVector,
};
use dynbt::{CountMatrix, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, n: usize) -> CountMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_connected(n, 0.6, &mut rng)
}

fn random_beta(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn tight() -> FitOptions {
    FitOptions { tol: 1e-13, ..FitOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn risk_matches_naive_sum(seed in any::<u64>(), n in 2usize..7) {
        let x = instance(seed, n);
        let b = random_beta(seed, n);
        let r = empirical_risk(&ScoreVector::new(b.clone()).unwrap(), &x).unwrap();
        let mut centred = b.clone();
        let mean = b.iter().sum::<f64>() / n as f64;
        centred.iter_mut().for_each(|v| *v -= mean);
        prop_assert!((r - naive_risk(&centred, &x)).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>(), n in 2usize..7) {
        let x = instance(seed, n);
        let b = random_beta(seed, n);
        let g = risk_gradient(&ScoreVector::new(b.clone()).unwrap(), &x).unwrap();
        let bc = ScoreVector::new(b).unwrap();
        let h = 1e-5;
        for i in 0..n {
            let mut up = bc.as_slice().to_vec();
            let mut dn = up.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (naive_risk(&up, &x) - naive_risk(&dn, &x)) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1e-3), "i={} fd={} g={}", i, fd, g[i]);
        }
    }

    #[test]
    fn hessian_matches_gradient_differences(seed in any::<u64>(), n in 2usize..7) {
        let x = instance(seed, n);
        let b = ScoreVector::new(random_beta(seed, n)).unwrap();
        let hm = hessian(&b, &x).unwrap();
        let total = x.total();
        let h = 1e-5;
        for j in 0..n {
            let mut up = b.as_slice().to_vec();
            let mut dn = up.clone();
            up[j] += h;
            dn[j] -= h;
            // Shifting one coordinate moves the centred point; evaluate the
            // gradient in raw coordinates to keep the difference exact.
            let gu = raw_gradient(&up, &x);
            let gd = raw_gradient(&dn, &x);
            for i in 0..n {
                let fd = (gu[i] - gd[i]) / (2.0 * h) * total;
                prop_assert!((fd - hm[(i, j)]).abs() <= 1e-4 * hm[(i, j)].abs().max(1e-2));
            }
        }
    }

    #[test]
    fn laplacian_structure(seed in any::<u64>(), n in 2usize..7) {
        let x = instance(seed, n);
        let b = ScoreVector::new(random_beta(seed, n)).unwrap();
        let hm = hessian(&b, &x).unwrap();
        for i in 0..n {
            prop_assert!(hm.row(i).sum().abs() <= 1e-10 * hm[(i, i)].max(1.0));
            for j in 0..n {
                prop_assert!((hm[(i, j)] - hm[(j, i)]).abs() < 1e-14);
                if i != j {
                    prop_assert!(hm[(i, j)] <= 0.0);
                }
            }
        }
        let eig = hm.clone().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        prop_assert!(vals[0].abs() < 1e-10 * vals[n - 1].max(1.0));
        // connected data: the null space is exactly the constants
        prop_assert!(vals[1] > 1e-10);
    }

    #[test]
    fn fit_is_scale_invariant(seed in any::<u64>(), n in 2usize..7, c in 0.01f64..100.0) {
        let x = instance(seed, n);
        let a = fit(&x, &tight()).unwrap();
        let b = fit(&x.scaled(c), &tight()).unwrap();
        prop_assert!(sup_diff(a.scores.as_slice(), b.scores.as_slice()) < 1e-8);
    }

    #[test]
    fn fit_is_label_equivariant(seed in any::<u64>(), n in 2usize..7) {
        let x = instance(seed, n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in (1..n).rev() {
            perm.swap(k, rng.random_range(0..=k));
        }
        let a = fit(&x, &tight()).unwrap();
        let b = fit(&x.permuted(&perm), &tight()).unwrap();
        let expected = a.scores.permuted(&perm);
        prop_assert!(sup_diff(expected.as_slice(), b.scores.as_slice()) < 1e-8);
    }

    #[test]
    fn mm_newton_and_descent_agree(seed in any::<u64>(), n in 2usize..7) {
        let x = instance(seed, n);
        let opts = FitOptions { tol: 1e-12, max_iter: 200_000, ..FitOptions::default() };
        let a = fit(&x, &opts).unwrap();
        let mm = fit(&x, &FitOptions { newton: false, ..opts }).unwrap();
        let gd = fit_gradient_descent(&x, &opts).unwrap();
        prop_assert!(sup_diff(a.scores.as_slice(), mm.scores.as_slice()) < 1e-7);
        prop_assert!(sup_diff(a.scores.as_slice(), gd.scores.as_slice()) < 1e-7);
        prop_assert!(a.scores.as_slice().iter().sum::<f64>().abs() < 1e-12);
    }
}

fn raw_gradient(beta: &[f64], x: &CountMatrix) -> Vec<f64> {
    let n = x.dim();
    let total = x.total();
    (0..n)
        .map(|i| {
            let mut g = 0.0;
            for j in 0..n {
                if j != i {
                    let p = 1.0 / (1.0 + (beta[j] - beta[i]).exp());
                    g += (x.get(i, j) + x.get(j, i)) * p - x.get(i, j);
                }
            }
            g / total
        })
        .collect()
}

#[test]
fn three_team_fits_match_plane_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..10 {
        let x = random_connected(3, 0.8, &mut rng);
        let r = fit(&x, &tight()).unwrap();
        let oracle = plane_search_three(&x, 15.0);
        assert!(sup_diff(r.scores.as_slice(), &oracle) < 1e-4, "{:?} vs {oracle:?}", r.scores);
    }
}

#[test]
fn two_team_closed_form() {
    // σ(β_1 - β_2) = 3/4 at the optimum.
    let x = CountMatrix::from_rows(&[vec![0.0, 3.0], vec![1.0, 0.0]]).unwrap();
    let r = fit(&x, &tight()).unwrap();
    assert_relative_eq!(r.scores.as_slice()[0], 0.5 * 3f64.ln(), epsilon = 1e-12);
    assert!(stationarity_residual(&r.scores, &x).unwrap() < 1e-12);
}

#[test]
fn winless_team_has_no_fit() {
    let x = CountMatrix::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 0.0, 1.0], vec![0.0, 0.0, 0.0]]).unwrap();
    match fit(&x, &FitOptions::default()) {
        Err(Error::NotStronglyConnected { components }) => assert_eq!(components, vec![vec![0, 1], vec![2]]),
        other => panic!("expected a connectivity error, got {other:?}"),
    }
}

#[test]
fn ranking_orders_scores() {
    let r = rank(&[0.3, -1.0, 2.0, 0.3]);
    assert_eq!(r.as_slice(), &[2, 4, 1, 3]);
    assert_eq!(r.order(), vec![2, 0, 3, 1]);
}
