//! Derivatives by finite differences and invariance of the Laplace estimate.

use lift_moments::first_moment::{first_moment_problem, FirstMomentField};
use lift_moments::laplace::{estimate_at, hessian_restricted_det, maximize_on_section, SmoothField};
use lift_moments::lattice::ExactLattice;
use lift_moments::second_moment::{second_moment_problem, Phi2Field};
use lift_moments::{families, MaximizeOptions};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const REL: f64 = 1e-5;

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= REL * scale.max(1.0)
}

fn check_derivatives(field: &dyn SmoothField, center: f64, rng: &mut ChaCha8Rng) {
    let n = field.dim();
    for _ in 0..20 {
        let x: Vec<f64> = (0..n).map(|_| center * rng.random_range(0.8..1.2)).collect();
        let grad = field.gradient(&x);
        let hess = field.hessian(&x);
        let gscale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let hscale = hess.amax();
        for k in 0..n {
            let mut up = x.clone();
            let mut down = x.clone();
            up[k] += STEP;
            down[k] -= STEP;
            let fd = (field.value(&up) - field.value(&down)) / (2.0 * STEP);
            assert!(close(fd, grad[k], gscale), "gradient {k}: {fd} vs {}", grad[k]);
            let (gu, gd) = (field.gradient(&up), field.gradient(&down));
            for j in 0..n {
                let fd = (gu[j] - gd[j]) / (2.0 * STEP);
                assert!(close(fd, hess[(j, k)], hscale), "hessian ({j},{k}): {fd} vs {}", hess[(j, k)]);
            }
        }
    }
}

#[test]
fn first_moment_field_derivatives() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    check_derivatives(&FirstMomentField { edges: 6 }, 1.0 / 3.0, &mut rng);
}

#[test]
fn second_moment_field_derivatives() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    check_derivatives(&Phi2Field::new(&families::parallel_edges(3)), 1.0 / 9.0, &mut rng);
    check_derivatives(&Phi2Field::new(&families::complete(4)), 1.0 / 9.0, &mut rng);
}

/// A random unimodular matrix as a product of elementary moves.
fn unimodular(r: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<i64>> {
    let mut u: Vec<Vec<i64>> = (0..r).map(|i| (0..r).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..3 * r {
        let (i, j) = (rng.random_range(0..r), rng.random_range(0..r));
        if i == j {
            u.swap(i, (i + 1) % r);
            continue;
        }
        let k = rng.random_range(-1i64..=1);
        let add: Vec<i64> = u[j].iter().map(|x| x * k).collect();
        for (a, b) in u[i].iter_mut().zip(add) {
            *a += b;
        }
    }
    u
}

fn rebase(lattice: &ExactLattice, u: &[Vec<i64>]) -> ExactLattice {
    let basis = u
        .iter()
        .map(|row| {
            (0..lattice.ambient_dim)
                .map(|j| row.iter().zip(&lattice.basis).map(|(&c, b)| BigInt::from(c) * &b[j]).sum())
                .collect()
        })
        .collect();
    ExactLattice::from_basis(lattice.ambient_dim, basis).unwrap()
}

#[test]
fn estimate_does_not_depend_on_the_basis() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = MaximizeOptions { multistart: 0, ..Default::default() };
    for graph in [families::complete(4), families::parallel_edges(3)] {
        let (mut problem, _) = second_moment_problem(&graph).unwrap();
        let maximum = maximize_on_section(&problem, &opts).unwrap();
        let (base, _) = estimate_at(&problem, &maximum).unwrap();
        let h = problem.phi.hessian(&maximum.x0);
        let original = problem.lattice.clone();
        for _ in 0..10 {
            let u = unimodular(original.rank(), &mut rng);
            let lattice = rebase(&original, &u);
            assert_eq!(lattice.gram_det, original.gram_det);
            let det = hessian_restricted_det(&h, &lattice.basis_f64()).unwrap();
            assert!((det / base.det_neg_h_restricted - 1.0).abs() < 1e-10);
            problem.lattice = lattice;
            let (est, _) = estimate_at(&problem, &maximum).unwrap();
            assert!((est.constant / base.constant - 1.0).abs() < 1e-10);
        }
    }
    // first moment too
    let mut problem = first_moment_problem(&families::complete(4)).unwrap();
    let maximum = maximize_on_section(&problem, &opts).unwrap();
    let (base, _) = estimate_at(&problem, &maximum).unwrap();
    let original = problem.lattice.clone();
    for _ in 0..10 {
        problem.lattice = rebase(&original, &unimodular(original.rank(), &mut rng));
        let (est, _) = estimate_at(&problem, &maximum).unwrap();
        assert!((est.constant / base.constant - 1.0).abs() < 1e-10);
    }
}
