//! Exact perfect matching counts by dynamic programming over a vertex order.
//!
//! Vertices are processed one at a time. The state is the set of
//! already-matched vertices among the *frontier* (unprocessed vertices with a
//! processed neighbour); each frontier vertex occupies a bit slot that is
//! recycled once it is processed. A processed vertex is either already
//! matched (its bit is cleared) or is matched now to a later neighbour. The
//! cost is governed by the largest frontier, which a greedy order keeps small.

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::sim::lift::UGraph;

/// Default cap on the number of live DP states.
pub const DEFAULT_STATE_CAP: usize = 1 << 24;

/// A vertex order built greedily from `start`: each step takes the vertex
/// whose processing grows the frontier least.
pub fn greedy_order_from(graph: &UGraph, start: usize) -> Vec<usize> {
    let n = graph.vertex_count();
    let mut processed = vec![false; n];
    let mut in_frontier = vec![false; n];
    let mut touched = vec![0usize; n];
    let mut order = Vec::with_capacity(n);
    for step in 0..n {
        let v = if step == 0 {
            start
        } else {
            let mut best: Option<(isize, usize, usize)> = None;
            for v in 0..n {
                if processed[v] {
                    continue;
                }
                let fresh = graph
                    .neighbours(v)
                    .iter()
                    .filter(|&&(w, _)| !processed[w] && !in_frontier[w])
                    .count() as isize;
                // smaller growth, then more processed neighbours, then lower index
                let key = (fresh - isize::from(in_frontier[v]), usize::MAX - touched[v], v);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
            best.expect("an unprocessed vertex").2
        };
        processed[v] = true;
        in_frontier[v] = false;
        for &(w, _) in graph.neighbours(v) {
            if !processed[w] {
                in_frontier[w] = true;
                touched[w] += 1;
            }
        }
        order.push(v);
    }
    order
}

/// Frontier sizes after each step of `order`.
pub fn frontier_profile(graph: &UGraph, order: &[usize]) -> Vec<usize> {
    let n = graph.vertex_count();
    let mut processed = vec![false; n];
    let mut in_frontier = vec![false; n];
    let mut size = 0usize;
    order
        .iter()
        .map(|&v| {
            processed[v] = true;
            if std::mem::replace(&mut in_frontier[v], false) {
                size -= 1;
            }
            for &(w, _) in graph.neighbours(v) {
                if !processed[w] && !std::mem::replace(&mut in_frontier[w], true) {
                    size += 1;
                }
            }
            size
        })
        .collect()
}

fn order_cost(graph: &UGraph, order: &[usize]) -> f64 {
    frontier_profile(graph, order).iter().map(|&f| (f as f64).exp2()).sum()
}

/// A vertex order with a small `Σ_t 2^{frontier_t}`, a proxy for the number
/// of DP states: the best greedy order over all start vertices, refined by
/// moving single vertices a few places while that lowers the cost.
pub fn greedy_order(graph: &UGraph) -> Vec<usize> {
    let n = graph.vertex_count();
    let Some((mut cost, mut order)) = (0..n)
        .map(|s| greedy_order_from(graph, s))
        .map(|o| (order_cost(graph, &o), o))
        .min_by(|a, b| a.0.total_cmp(&b.0))
    else {
        return Vec::new();
    };
    const WINDOW: usize = 6;
    for _pass in 0..8 {
        let mut improved = false;
        for i in 0..n {
            for j in i.saturating_sub(WINDOW)..(i + WINDOW + 1).min(n) {
                if i == j {
                    continue;
                }
                let mut trial = order.clone();
                let v = trial.remove(i);
                trial.insert(j, v);
                let c = order_cost(graph, &trial);
                if c < cost {
                    cost = c;
                    order = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    order
}

/// The number of perfect matchings, parallel edges counted as distinct.
pub fn count_perfect_matchings(graph: &UGraph) -> Result<u128> {
    count_perfect_matchings_with(graph, &greedy_order(graph), DEFAULT_STATE_CAP)
}

trait Key: Copy + Eq + std::hash::Hash {
    const BITS: usize;
    fn zero() -> Self;
    fn test(self, bit: usize) -> bool;
    fn set(self, bit: usize) -> Self;
    fn clear(self, bit: usize) -> Self;
}

macro_rules! key_impl {
    ($t:ty) => {
        impl Key for $t {
            const BITS: usize = <$t>::BITS as usize;
            fn zero() -> Self {
                0
            }
            fn test(self, bit: usize) -> bool {
                self >> bit & 1 == 1
            }
            fn set(self, bit: usize) -> Self {
                self | (1 as $t) << bit
            }
            fn clear(self, bit: usize) -> Self {
                self & !((1 as $t) << bit)
            }
        }
    };
}

key_impl!(u64);
key_impl!(u128);

pub fn count_perfect_matchings_with(graph: &UGraph, order: &[usize], state_cap: usize) -> Result<u128> {
    let n = graph.vertex_count();
    if n % 2 == 1 {
        return Ok(0);
    }
    let mut pos = vec![usize::MAX; n];
    for (t, &v) in order.iter().enumerate() {
        pos[v] = t;
    }
    if order.len() != n || pos.contains(&usize::MAX) {
        return Err(Error::InvalidConfig("vertex order is not a permutation".into()));
    }
    let width = frontier_profile(graph, order).into_iter().max().unwrap_or(0);
    if width <= 64 {
        run::<u64>(graph, order, &pos, state_cap)
    } else {
        run::<u128>(graph, order, &pos, state_cap)
    }
}

fn run<K: Key>(graph: &UGraph, order: &[usize], pos: &[usize], state_cap: usize) -> Result<u128> {
    let n = graph.vertex_count();
    let mut slot = vec![usize::MAX; n];
    let mut free_slots: Vec<usize> = (0..K::BITS).rev().collect();
    let mut states: FxHashMap<K, u128> = FxHashMap::default();
    states.insert(K::zero(), 1);
    let mut next: FxHashMap<K, u128> = FxHashMap::default();
    for (t, &v) in order.iter().enumerate() {
        // Later neighbours enter the frontier now.
        let later: Vec<(usize, u32)> = graph.neighbours(v).iter().copied().filter(|&(w, _)| pos[w] > t).collect();
        for &(w, _) in &later {
            if slot[w] == usize::MAX {
                slot[w] = free_slots
                    .pop()
                    .ok_or_else(|| Error::budget("matching frontier", format!("more than {} vertices", K::BITS), K::BITS as u64))?;
            }
        }
        let own = slot[v];
        next.clear();
        for (&state, &count) in &states {
            if own != usize::MAX && state.test(own) {
                let entry = next.entry(state.clear(own)).or_insert(0);
                *entry = entry.checked_add(count).ok_or_else(overflow)?;
                continue;
            }
            for &(w, m) in &later {
                if state.test(slot[w]) {
                    continue;
                }
                let add = count.checked_mul(m as u128).ok_or_else(overflow)?;
                let entry = next.entry(state.set(slot[w])).or_insert(0);
                *entry = entry.checked_add(add).ok_or_else(overflow)?;
            }
        }
        if own != usize::MAX {
            free_slots.push(own);
            slot[v] = usize::MAX;
        }
        if next.len() > state_cap {
            return Err(Error::budget("matching states", next.len().to_string(), state_cap as u64));
        }
        std::mem::swap(&mut states, &mut next);
        if states.is_empty() {
            return Ok(0);
        }
    }
    Ok(states.get(&K::zero()).copied().unwrap_or(0))
}

fn overflow() -> Error {
    Error::budget("matching count", "exceeds 2^128", u64::MAX)
}
