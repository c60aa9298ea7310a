//! Existence and uniqueness checks: a fit exists and is unique exactly when
//! the digraph with an edge `i -> j` for every positive `X_ij` ("i beat j")
//! is strongly connected.

use serde::Serialize;

use crate::data::{raw_count_matrix_at, CountMatrix, Dataset};
use crate::error::{Error, Result};

/// Strongly connected components of the win digraph (edge `i -> j` iff
/// `X_ij > eps`), in topological order of the condensation: no edge leads
/// from a later component into an earlier one.
pub fn strongly_connected_components(x: &CountMatrix, eps: f64) -> Vec<Vec<usize>> {
    let n = x.dim();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::with_capacity(n);
    let mut components = Vec::new();
    let mut next_index = 0;
    // (vertex, next neighbour to scan)
    let mut call: Vec<(usize, usize)> = Vec::with_capacity(n);

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut cursor)) = call.last_mut() {
            let row = x.row(v);
            let mut descended = false;
            while *cursor < n {
                let w = *cursor;
                *cursor += 1;
                if w == v || row[w] <= eps {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                    descended = true;
                    break;
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            }
            if descended {
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
        }
    }
    // Tarjan finishes sink components first.
    components.reverse();
    components
}

fn check_dim(x: &CountMatrix) -> Result<()> {
    if x.dim() < 2 {
        return Err(Error::Domain(format!("connectivity needs at least 2 teams, got {}", x.dim())));
    }
    Ok(())
}

/// True iff every bipartition of the teams has a win crossing it in each
/// direction, i.e. the win digraph is strongly connected.
pub fn condition1_holds(x: &CountMatrix, eps: f64) -> Result<bool> {
    check_dim(x)?;
    Ok(strongly_connected_components(x, eps).len() == 1)
}

/// `Ok(())` when strongly connected, otherwise the component witness.
pub fn require_connected(x: &CountMatrix, eps: f64) -> Result<()> {
    check_dim(x)?;
    let components = strongly_connected_components(x, eps);
    if components.len() == 1 {
        Ok(())
    } else {
        Err(Error::NotStronglyConnected { components })
    }
}

/// Lower bound `1 - 4N exp(-N T p_min / 2)` on the probability that every
/// time point is strongly connected, clamped to `[0, 1]`.
pub fn connectivity_probability_bound(n: usize, t: f64, p_min: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("need N >= 2, got {n}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("T must be positive, got {t}")));
    }
    if !(p_min > 0.0 && p_min < 1.0) {
        return Err(Error::Domain(format!("p_min must lie in (0, 1), got {p_min}")));
    }
    let n = n as f64;
    Ok((1.0 - 4.0 * n * (-0.5 * n * t * p_min).exp()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyMode {
    /// Fraction of distinct times whose raw counts are strongly connected.
    PerTime,
    /// 1 if every distinct time is strongly connected, else 0.
    AllTimes,
}

pub fn per_time_connectivity(dataset: &Dataset) -> Vec<bool> {
    (0..dataset.distinct_times().len())
        .map(|k| strongly_connected_components(&raw_count_matrix_at(dataset, k), 0.0).len() == 1)
        .collect()
}

pub fn condition1_frequency(dataset: &Dataset, mode: FrequencyMode) -> f64 {
    let flags = per_time_connectivity(dataset);
    let ok = flags.iter().filter(|&&b| b).count();
    match mode {
        FrequencyMode::PerTime => ok as f64 / flags.len() as f64,
        FrequencyMode::AllTimes => {
            if ok == flags.len() {
                1.0
            } else {
                0.0
            }
        }
    }
}
