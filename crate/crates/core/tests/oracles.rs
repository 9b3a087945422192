//! Exact moments and counters against brute force.

use lift_moments::first_moment::exact_first_moment;
use lift_moments::laplace::DEFAULT_CAP;
use lift_moments::second_moment::exact_second_moment;
use lift_moments::sim::lift::sample_lift;
use lift_moments::sim::matching::{count_perfect_matchings, count_perfect_matchings_with};
use lift_moments::sim::oracle::{exhaustive_lift_oracle, for_each_lift, DEFAULT_ORACLE_CAP};
use lift_moments::stats::{chi_square, chi_square_critical};
use lift_moments::{families, Multigraph, UGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn first_moment_matches_all_lifts() {
    for (graph, ns) in [(families::parallel_edges(3), 1..=3u64), (families::complete(4), 1..=2)] {
        for n in ns {
            let oracle = exhaustive_lift_oracle(&graph, n as usize, 0, DEFAULT_ORACLE_CAP).unwrap();
            assert_eq!(exact_first_moment(&graph, n, DEFAULT_CAP).unwrap().value, oracle.e_x, "n = {n}");
        }
    }
}

#[test]
fn second_moment_matches_all_lifts() {
    for (graph, ns) in [(families::parallel_edges(3), 1..=3u64), (families::complete(4), 1..=2)] {
        for n in ns {
            let oracle = exhaustive_lift_oracle(&graph, n as usize, 0, DEFAULT_ORACLE_CAP).unwrap();
            assert_eq!(exact_second_moment(&graph, n, DEFAULT_CAP).unwrap().value, oracle.e_x2, "n = {n}");
        }
    }
}

#[test]
fn moments_of_other_graphs() {
    // prism and a 4-regular two-vertex graph at n = 2
    for graph in [families::prism(3), families::parallel_edges(4)] {
        let oracle = exhaustive_lift_oracle(&graph, 2, 0, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(exact_first_moment(&graph, 2, DEFAULT_CAP).unwrap().value, oracle.e_x);
        assert_eq!(exact_second_moment(&graph, 2, DEFAULT_CAP).unwrap().value, oracle.e_x2);
    }
    // a non-regular graph: first moment only
    let g = Multigraph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
    for n in 1..=3 {
        let oracle = exhaustive_lift_oracle(&g, n, 0, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(exact_first_moment(&g, n as u64, DEFAULT_CAP).unwrap().value, oracle.e_x);
    }
}

#[test]
fn oracle_budget_is_enforced() {
    let err = exhaustive_lift_oracle(&families::complete(4), 4, 0, DEFAULT_ORACLE_CAP).unwrap_err();
    assert!(err.is_budget());
}

/// Perfect matchings by removing the lowest vertex and trying each partner.
fn naive_matchings(adj: &[Vec<u32>], alive: &mut Vec<bool>) -> u128 {
    let Some(v) = alive.iter().position(|&a| a) else {
        return 1;
    };
    alive[v] = false;
    let mut total = 0;
    for w in 0..adj.len() {
        if alive[w] && adj[v][w] > 0 {
            alive[w] = false;
            total += adj[v][w] as u128 * naive_matchings(adj, alive);
            alive[w] = true;
        }
    }
    alive[v] = true;
    total
}

/// Ryser's formula for the permanent of a square matrix.
fn ryser(m: &[Vec<u32>]) -> i128 {
    let n = m.len();
    let mut total = 0i128;
    for subset in 1u32..(1 << n) {
        let mut prod = 1i128;
        for row in m {
            let s: i128 = (0..n).filter(|&j| subset >> j & 1 == 1).map(|j| row[j] as i128).sum();
            prod *= s;
            if prod == 0 {
                break;
            }
        }
        let sign = if (n - subset.count_ones() as usize).is_multiple_of(2) { 1 } else { -1 };
        total += sign * prod;
    }
    total
}

fn adjacency(g: &UGraph) -> Vec<Vec<u32>> {
    let n = g.vertex_count();
    (0..n).map(|v| (0..n).map(|w| g.multiplicity(v, w)).collect()).collect()
}

#[test]
fn matching_counter_against_naive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = 2 * rng.random_range(1..=10);
        let p: f64 = rng.random_range(0.2..0.7);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(p) {
                    edges.push((a, b));
                    if rng.random_bool(0.1) {
                        edges.push((a, b));
                    }
                }
            }
        }
        let g = UGraph::new(n, &edges).unwrap();
        let expected = naive_matchings(&adjacency(&g), &mut vec![true; n]);
        assert_eq!(count_perfect_matchings(&g).unwrap(), expected);
        let identity: Vec<usize> = (0..n).collect();
        assert_eq!(count_perfect_matchings_with(&g, &identity, 1 << 20).unwrap(), expected);
    }
}

#[test]
fn bipartite_counts_against_ryser() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let side = rng.random_range(1..=10);
        let m: Vec<Vec<u32>> = (0..side)
            .map(|_| (0..side).map(|_| if rng.random_bool(0.45) { rng.random_range(1..=2) } else { 0 }).collect())
            .collect();
        let mut edges = Vec::new();
        for (a, row) in m.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                for _ in 0..c {
                    edges.push((a, side + b));
                }
            }
        }
        let g = UGraph::new(2 * side, &edges).unwrap();
        assert_eq!(count_perfect_matchings(&g).unwrap() as i128, ryser(&m));
    }
}

#[test]
fn odd_lifts_have_no_matchings() {
    let tri = families::cycle(3);
    for seed in 0..5 {
        let lift = sample_lift(&tri, 3, seed, 0).unwrap();
        assert_eq!(count_perfect_matchings(&lift.to_ugraph()).unwrap(), 0);
    }
}

#[test]
fn sampled_lifts_are_uniform() {
    // K2^3 at n = 2 has 8 equally likely fiber tuples.
    let graph = families::parallel_edges(3);
    let mut tuples = Vec::new();
    for_each_lift(&graph, 2, DEFAULT_ORACLE_CAP, |lift| {
        tuples.push(lift.perms.clone());
        Ok(())
    })
    .unwrap();
    assert_eq!(tuples.len(), 8);
    let mut observed = vec![0u64; 8];
    let samples = 8000;
    for t in 0..samples {
        let lift = sample_lift(&graph, 2, 2024, t).unwrap();
        let class = tuples.iter().position(|p| *p == lift.perms).unwrap();
        observed[class] += 1;
    }
    let expected = vec![samples as f64 / 8.0; 8];
    assert!(chi_square(&observed, &expected) < chi_square_critical(7, 0.001));
}

#[test]
fn fibers_use_independent_streams() {
    // A graph that extends another by one edge draws the shared fibers identically.
    let small = families::parallel_edges(3);
    let large = families::parallel_edges(4);
    let a = sample_lift(&small, 7, 5, 3).unwrap();
    let b = sample_lift(&large, 7, 5, 3).unwrap();
    assert_eq!(a.perms[..], b.perms[..3]);
    let c = sample_lift(&small, 7, 5, 4).unwrap();
    assert_ne!(a.perms, c.perms);
}
