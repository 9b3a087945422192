//! Lattice algebra: fixed constants and randomized properties.

use lift_moments::exact::{det_bareiss, int_rows, rank, smith_invariants, IntRows};
use lift_moments::lattice::{
    first_moment_lattice, gram_determinant, integer_kernel_basis, quotient_order, quotient_order_by_enumeration,
    second_moment_lattice,
};
use lift_moments::families;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn pow(b: i64, e: u32) -> BigInt {
    BigInt::from(b).pow(e)
}

#[test]
fn first_moment_covolumes() {
    let k4 = first_moment_lattice(&families::complete(4)).unwrap();
    assert_eq!((k4.lattice.rank(), k4.lattice.gram_det.clone()), (2, BigInt::from(12)));
    let banana = first_moment_lattice(&families::parallel_edges(3)).unwrap();
    assert_eq!((banana.lattice.rank(), banana.lattice.gram_det.clone()), (2, BigInt::from(3)));
}

#[test]
fn second_moment_covolumes() {
    let k4 = second_moment_lattice(&families::complete(4)).unwrap();
    assert_eq!(k4.lattice.rank(), 14);
    assert_eq!(k4.lattice.gram_det, pow(2, 14) * pow(3, 5) * pow(5, 3));
    let banana = second_moment_lattice(&families::parallel_edges(3)).unwrap();
    assert_eq!(banana.lattice.rank(), 9);
    assert_eq!(banana.lattice.gram_det, pow(2, 8) * pow(3, 3));
}

#[test]
fn second_moment_basis_solves_constraints() {
    for graph in [families::complete(4), families::parallel_edges(3), families::prism(3)] {
        let l = second_moment_lattice(&graph).unwrap();
        for v in &l.lattice.basis {
            for row in &l.constraints {
                let s: BigInt = row.iter().zip(v).map(|(&a, b)| BigInt::from(a) * b).sum();
                assert!(s.is_zero());
            }
        }
    }
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-3i64..=3, cols), rows)
}

fn apply(m: &[Vec<i64>], v: &[BigInt]) -> Vec<BigInt> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(&a, b)| BigInt::from(a) * b).sum())
        .collect()
}

/// `u · basis` for an integer matrix `u`.
fn combine(u: &[Vec<i64>], basis: &IntRows) -> IntRows {
    u.iter()
        .map(|row| {
            (0..basis[0].len())
                .map(|j| row.iter().zip(basis).map(|(&c, b)| BigInt::from(c) * &b[j]).sum())
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_saturated_and_complete((m, cols) in (1usize..4, 2usize..6).prop_flat_map(|(r, c)| (matrix(r, c), Just(c)))) {
        let rows = int_rows(&m);
        let kernel = integer_kernel_basis(&rows, cols);
        prop_assert_eq!(kernel.rank() + rank(&rows), cols);
        for v in &kernel.basis {
            prop_assert!(apply(&m, v).iter().all(Zero::is_zero));
        }
        if kernel.rank() > 0 {
            // Saturated: the basis has trivial quotient order.
            prop_assert_eq!(quotient_order(&kernel.basis).unwrap(), BigInt::from(1));
        }
    }

    #[test]
    fn gram_determinant_is_basis_invariant(
        m in matrix(2, 5),
        ops in prop::collection::vec((0usize..2, 0usize..2, -3i64..=3), 1..6),
    ) {
        let rows = int_rows(&m);
        prop_assume!(!gram_determinant(&rows).is_zero());
        let mut u = vec![vec![1i64, 0], vec![0, 1]];
        for (i, j, k) in ops {
            if i != j {
                let add: Vec<i64> = u[j].iter().map(|x| x * k).collect();
                for (a, b) in u[i].iter_mut().zip(add) {
                    *a += b;
                }
            } else if k < 0 {
                u[i].iter_mut().for_each(|x| *x = -*x);
            }
        }
        prop_assert_eq!(det_bareiss(&int_rows(&u)).abs(), BigInt::from(1));
        let rebased = combine(&u, &rows);
        prop_assert_eq!(gram_determinant(&rebased), gram_determinant(&rows));
        prop_assert_eq!(smith_invariants(&rebased), smith_invariants(&rows));
    }

    #[test]
    fn quotient_order_by_two_routes(m in matrix(2, 4)) {
        let rows = int_rows(&m);
        prop_assume!(!gram_determinant(&rows).is_zero());
        match quotient_order_by_enumeration(&rows, 1 << 16) {
            Ok(q) => prop_assert_eq!(q, quotient_order(&rows).unwrap()),
            Err(e) => prop_assert!(e.is_budget()),
        }
    }
}
