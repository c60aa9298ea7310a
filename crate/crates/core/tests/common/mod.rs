//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use dynbt::CountMatrix;
use rand::Rng;

/// Transitive closure by Floyd-Warshall; `reach[i][j]` iff a path `i -> j`
/// exists along entries `> eps` (every vertex reaches itself).
pub fn reachability(x: &CountMatrix, eps: f64) -> Vec<Vec<bool>> {
    let n = x.dim();
    let mut r = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            r[i][j] = i == j || x.get(i, j) > eps;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

/// Strongly connected classes from the closure, each sorted, ordered by
/// smallest member.
pub fn closure_classes(x: &CountMatrix, eps: f64) -> Vec<Vec<usize>> {
    let r = reachability(x, eps);
    let n = x.dim();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| r[i][j] && r[j][i]).collect();
        for &j in &class {
            seen[j] = true;
        }
        out.push(class);
    }
    out
}

pub fn is_strongly_connected(x: &CountMatrix, eps: f64) -> bool {
    reachability(x, eps).iter().all(|row| row.iter().all(|&b| b))
}

/// Random count matrix with roughly `density` of the off-diagonal entries
/// positive; a directed cycle is added when the result is not strongly
/// connected.
pub fn random_connected<R: Rng>(n: usize, density: f64, rng: &mut R) -> CountMatrix {
    let mut x = CountMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < density {
                let v = if rng.random::<bool>() { rng.random_range(1..6) as f64 } else { rng.random_range(0.05..4.0) };
                x.set(i, j, v);
            }
        }
    }
    if !is_strongly_connected(&x, 0.0) {
        let mut order: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            order.swap(k, rng.random_range(0..=k));
        }
        for k in 0..n {
            let (a, b) = (order[k], order[(k + 1) % n]);
            x.add(a, b, 1.0);
        }
    }
    x
}

/// Likelihood written out term by term.
pub fn naive_risk(beta: &[f64], x: &CountMatrix) -> f64 {
    let n = x.dim();
    let mut total = 0.0;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && x.get(i, j) > 0.0 {
                total += x.get(i, j);
                sum += x.get(i, j) * (1.0 + (beta[j] - beta[i]).exp()).ln();
            }
        }
    }
    sum / total
}

pub fn golden_section(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Minimizer over the plane `β_1 + β_2 + β_3 = 0` by nested golden-section
/// searches on `(a, b) -> (a, b, -a - b)`.
pub fn plane_search_three(x: &CountMatrix, half_width: f64) -> [f64; 3] {
    let inner = |a: f64| {
        let b = golden_section(-half_width, half_width, 1e-10, |b| naive_risk(&[a, b, -a - b], x));
        (b, naive_risk(&[a, b, -a - b], x))
    };
    let a = golden_section(-half_width, half_width, 1e-10, |a| inner(a).1);
    let b = inner(a).0;
    [a, b, -a - b]
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
