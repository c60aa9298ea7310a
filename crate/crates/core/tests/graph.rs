mod common;

use common::{closure_classes, is_strongly_connected, reachability};
use dynbt::graph::{condition1_holds, strongly_connected_components};
use dynbt::CountMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn digraph(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> CountMatrix {
    let mut x = CountMatrix::zeros(n);
    for (i, j) in edges {
        x.set(i, j, 1.0);
    }
    x
}

fn sorted(mut comps: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    comps.sort();
    comps
}

/// No edge may lead from a later component back into an earlier one.
fn assert_topological(x: &CountMatrix, comps: &[Vec<usize>]) {
    let r = reachability(x, 0.0);
    for (a, ca) in comps.iter().enumerate() {
        for cb in &comps[a + 1..] {
            assert!(!r[cb[0]][ca[0]], "component {cb:?} reaches earlier {ca:?}");
        }
    }
}

#[test]
fn all_three_vertex_digraphs() {
    let pairs: Vec<(usize, usize)> = (0..3).flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    for mask in 0u32..64 {
        let x = digraph(3, pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &p)| p));
        let comps = strongly_connected_components(&x, 0.0);
        assert_eq!(sorted(comps.clone()), closure_classes(&x, 0.0), "mask {mask:06b}");
        assert_topological(&x, &comps);
        assert_eq!(condition1_holds(&x, 0.0).unwrap(), is_strongly_connected(&x, 0.0));
    }
}

#[test]
fn random_digraphs_up_to_eight_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in 4..=8 {
        for _ in 0..2000 {
            let density = rng.random_range(0.05..0.6);
            let mut x = CountMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.random::<f64>() < density {
                        x.set(i, j, rng.random_range(0.5..3.0));
                    }
                }
            }
            let comps = strongly_connected_components(&x, 0.0);
            assert_eq!(sorted(comps.clone()), closure_classes(&x, 0.0));
            assert_topological(&x, &comps);
        }
    }
}

#[test]
fn round_robin_cycle_is_connected() {
    let n = 7;
    let x = digraph(n, (0..n).map(|i| (i, (i + 1) % n)));
    assert!(condition1_holds(&x, 0.0).unwrap());
    let chain = digraph(n, (0..n - 1).map(|i| (i, i + 1)));
    let comps = strongly_connected_components(&chain, 0.0);
    assert_eq!(comps, (0..n).map(|i| vec![i]).collect::<Vec<_>>());
}
