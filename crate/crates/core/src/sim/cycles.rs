//! Short cycle counts of a multigraph.
//!
//! A cycle of length `k ≥ 3` is found once from its minimum vertex, in the
//! direction whose second vertex is smaller than its last; it contributes the
//! product of the multiplicities of its edges. A pair of parallel edges is a
//! 2-cycle, so vertex pairs of multiplicity `m` contribute `C(m, 2)`.

use crate::error::{Error, Result};
use crate::sim::lift::UGraph;

pub const MAX_CYCLE_LENGTH: usize = 12;

/// `Z_k` for `k = 0..=kmax` (entries 0 and 1 are zero).
pub fn count_k_cycles(graph: &UGraph, kmax: usize) -> Result<Vec<u64>> {
    if kmax > MAX_CYCLE_LENGTH {
        return Err(Error::budget("cycle length", kmax.to_string(), MAX_CYCLE_LENGTH as u64));
    }
    let mut counts = vec![0u64; kmax + 1];
    if kmax < 2 {
        return Ok(counts);
    }
    let n = graph.vertex_count();
    for v in 0..n {
        for &(w, m) in graph.neighbours(v) {
            if w > v {
                counts[2] += (m as u64) * (m as u64 - 1) / 2;
            }
        }
    }
    let mut on_path = vec![false; n];
    let mut path = Vec::with_capacity(kmax);
    for root in 0..n {
        on_path[root] = true;
        path.push(root);
        extend(graph, root, 1, kmax, &mut on_path, &mut path, &mut counts);
        path.pop();
        on_path[root] = false;
    }
    Ok(counts)
}

fn extend(
    graph: &UGraph,
    root: usize,
    weight: u64,
    kmax: usize,
    on_path: &mut [bool],
    path: &mut Vec<usize>,
    counts: &mut [u64],
) {
    let last = *path.last().expect("non-empty path");
    for &(w, m) in graph.neighbours(last) {
        if w == root && path.len() >= 3 && path[1] < last {
            counts[path.len()] += weight * m as u64;
        }
        if w > root && !on_path[w] && path.len() < kmax {
            on_path[w] = true;
            path.push(w);
            extend(graph, root, weight * m as u64, kmax, on_path, path, counts);
            path.pop();
            on_path[w] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_graphs() {
        let k4 = UGraph::new(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(count_k_cycles(&k4, 4).unwrap(), vec![0, 0, 0, 4, 3]);
        let c6: Vec<(usize, usize)> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        assert_eq!(count_k_cycles(&UGraph::new(6, &c6).unwrap(), 8).unwrap(), vec![0, 0, 0, 0, 0, 0, 1, 0, 0]);
        let banana = UGraph::new(2, &[(0, 1), (0, 1), (0, 1)]).unwrap();
        assert_eq!(count_k_cycles(&banana, 4).unwrap(), vec![0, 0, 3, 0, 0]);
        // triangle with one doubled edge: two triangles and one 2-cycle
        let t = UGraph::new(3, &[(0, 1), (0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(count_k_cycles(&t, 3).unwrap(), vec![0, 0, 1, 2]);
        assert!(count_k_cycles(&k4, 13).unwrap_err().is_budget());
    }
}
