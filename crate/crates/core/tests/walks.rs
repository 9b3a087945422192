//! Walk counts, cycle statistics and the limit variable.

use lift_moments::nb_walks::{cycle_series, sample_limit_w, ssc_constant, walk_counts, walk_counts_trace};
use lift_moments::report::int;
use lift_moments::sim::cycles::count_k_cycles;
use lift_moments::stats::mean_estimate;
use lift_moments::{families, UGraph};

#[test]
fn trace_and_spectrum_agree() {
    for graph in [families::complete(4), families::parallel_edges(3), families::petersen(), families::prism(3)] {
        let w = walk_counts(&graph, 12).unwrap();
        assert_eq!(w.agree, Some(true));
        assert_eq!(w.trace.len(), 12);
    }
}

#[test]
fn short_cycle_means() {
    let k4 = cycle_series(&families::complete(4), 12).unwrap();
    assert_eq!(k4.row(3).unwrap().lambda_k, int(4));
    let banana = cycle_series(&families::parallel_edges(3), 12).unwrap();
    assert_eq!(banana.row(2).unwrap().lambda_k, int(3));
    assert!(banana.rows.iter().filter(|r| r.k % 2 == 1).all(|r| r.w_k == "0"));
}

#[test]
fn girth_cycles_are_counted_by_walks() {
    // Below twice the girth every closed non-backtracking walk of length
    // equal to the girth traces a cycle, 2k times.
    for (graph, girth) in [(families::petersen(), 5), (families::prism(3), 3), (families::complete(4), 3)] {
        let w = walk_counts_trace(&graph, girth).unwrap();
        let z = count_k_cycles(&UGraph::from_multigraph(&graph), girth).unwrap();
        assert_eq!(w[girth - 1], 2 * girth as u128 * z[girth] as u128);
    }
}

#[test]
fn partial_products_increase_to_the_constant() {
    for graph in [families::complete(4), families::parallel_edges(3), families::parallel_edges(4)] {
        let s = ssc_constant(&graph, 20).unwrap();
        assert!(s.agree);
        assert!(s.partial_sums_monotone);
        let last: f64 = s.partial_products.last().unwrap().parse().unwrap();
        assert!(last <= s.value() * (1.0 + 1e-9));
        assert!(last >= s.value() * (1.0 - 1e-4));
    }
}

#[test]
fn limit_variable_is_positive_with_unit_mean() {
    for graph in [families::complete(4), families::parallel_edges(3)] {
        let spectrum = cycle_series(&graph, 20).unwrap();
        let w = sample_limit_w(&spectrum, 20_000, 9);
        assert!(w.iter().all(|&x| x > 0.0 && x.is_finite()));
        let m = mean_estimate(&w);
        assert!(m.within(1.0, 4.0), "mean {} se {}", m.value, m.se);
    }
}

#[test]
fn limit_samples_are_reproducible() {
    let spectrum = cycle_series(&families::complete(4), 10).unwrap();
    assert_eq!(sample_limit_w(&spectrum, 100, 3), sample_limit_w(&spectrum, 100, 3));
    assert_ne!(sample_limit_w(&spectrum, 100, 3), sample_limit_w(&spectrum, 100, 4));
}
