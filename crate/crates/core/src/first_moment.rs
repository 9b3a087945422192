//! The expected number of perfect matchings in a random `n`-lift.
//!
//! Writing `ℓ_e` for the number of lifted edges of a matching inside the
//! fiber over `e`,
//!
//! ```text
//! E[X] = Σ_ℓ n!^{g-h} ∏_e (n - ℓ_e)! / ℓ_e!
//! ```
//!
//! over integer `ℓ` with `Σ_{e∋v} ℓ_e = n` at every vertex. The sum is
//! evaluated exactly by [`exact_first_moment`] and asymptotically by the
//! Laplace engine in [`asymptotic_first_moment`], which is cross-checked
//! against the closed form for regular graphs.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{det_bareiss, int_rows, Accumulator, ExactMatrix, Factorials, Product};
use crate::graph::{GraphMatrices, Multigraph};
use crate::laplace::{
    self, for_each_coset_point, AsymptoticEstimate, ExponentRecord, LaplaceProblem, MaximizeOptions, SmoothField,
    Uniqueness,
};
use crate::lattice::first_moment_lattice;
use crate::report::{decimal_f64, exact_rational, int, ln_rational, rational_pow, SymbolicConstant};

/// A fractional perfect matching: `z_e ≥ 0` with `Σ_{e∋v} z_e = 1`.
///
/// Regular graphs get the uniform `1/d`. Otherwise a perfect matching of the
/// bipartite double cover is found by augmenting paths; it yields a
/// half-integral `z`, and none exists iff no fractional perfect matching does.
pub fn fractional_pm(graph: &Multigraph) -> Option<Vec<BigRational>> {
    if let Some(d) = graph.regular_degree() {
        return Some(vec![BigRational::new(BigInt::one(), BigInt::from(d)); graph.edge_count()]);
    }
    let g = graph.vertex_count();
    // right-side vertex -> (left vertex, edge)
    let mut owner: Vec<Option<(usize, usize)>> = vec![None; g];
    fn augment(
        graph: &Multigraph,
        u: usize,
        seen: &mut [bool],
        owner: &mut [Option<(usize, usize)>],
    ) -> bool {
        for &e in graph.incident_edges(u) {
            let w = graph.other_end(e, u);
            if seen[w] {
                continue;
            }
            seen[w] = true;
            let free = match owner[w] {
                None => true,
                Some((prev, _)) => augment(graph, prev, seen, owner),
            };
            if free {
                owner[w] = Some((u, e));
                return true;
            }
        }
        false
    }
    for u in 0..g {
        let mut seen = vec![false; g];
        if !augment(graph, u, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut z = vec![BigRational::zero(); graph.edge_count()];
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    for (_, e) in owner.into_iter().flatten() {
        z[e] += &half;
    }
    Some(z)
}

/// Whether `n z` is an integer vector.
pub fn allowed_by_z(z: &[BigRational], n: u64) -> bool {
    let n = int(n as i64);
    z.iter().all(|x| (x * &n).is_integer())
}

fn check_vertex_sums(graph: &Multigraph, n: u64, l: &[i64]) -> Result<()> {
    if l.len() != graph.edge_count() {
        return Err(Error::Dimension(format!("expected {} edge values, got {}", graph.edge_count(), l.len())));
    }
    if let Some(e) = l.iter().position(|&x| x < 0 || x as u64 > n) {
        return Err(Error::InvalidConfig(format!("edge {e} value {} outside [0, {n}]", l[e])));
    }
    for v in 0..graph.vertex_count() {
        let s: i64 = graph.incident_edges(v).iter().map(|&e| l[e]).sum();
        if s as u64 != n {
            return Err(Error::InvalidConfig(format!("vertex {v} sum {s} differs from n = {n}")));
        }
    }
    Ok(())
}

/// `a_n(ℓ) = n!^{g-h} ∏_e (n - ℓ_e)! / ℓ_e!`.
pub fn term_a1(graph: &Multigraph, n: u64, l: &[i64]) -> Result<BigRational> {
    check_vertex_sums(graph, n, l)?;
    let f = Factorials::up_to(n as usize);
    let (scaled, scale) = scaled_term(graph, &f, l);
    Ok(BigRational::new(scaled.into_big(), scale))
}

/// Integer `a_n(ℓ) · n!^{h + max(h-g, 0)}` and the scale itself.
fn scaled_term(graph: &Multigraph, f: &Factorials, l: &[i64]) -> (Product, BigInt) {
    let n = f.max();
    let (g, h) = (graph.vertex_count(), graph.edge_count());
    let nf = f.get(n);
    let mut p = Product::one();
    for _ in h..g {
        p = p.times(nf);
    }
    for &x in l {
        let x = x as usize;
        p = p.times(f.get(n - x)).times(&(nf / f.get(x)));
    }
    (p, num_traits::pow(nf.clone(), h + h.saturating_sub(g)))
}

/// An exact moment at one `n`.
#[derive(Clone, Debug, Serialize)]
pub struct ExactMoment {
    pub n: u64,
    #[serde(serialize_with = "exact_rational")]
    pub value: BigRational,
    /// Lattice points visited by the enumeration.
    pub points: u64,
    /// Whether `n z` is integral for the canonical offset. The exact value is
    /// computed either way; a disallowed `n` can still have `E[X] > 0`.
    pub allowed_by_z: bool,
}

/// Exact `E[X]` for the random `n`-lift, by enumeration of the coset.
pub fn exact_first_moment(graph: &Multigraph, n: u64, cap: u64) -> Result<ExactMoment> {
    let m = GraphMatrices::build(graph);
    let f = Factorials::up_to(n as usize);
    let mut acc = Accumulator::default();
    let points = for_each_coset_point(&m.incidence, &vec![1; graph.vertex_count()], n, cap, |l| {
        acc.add(scaled_term(graph, &f, l).0);
        Ok(())
    })?;
    let scale = scaled_term(graph, &f, &vec![0; graph.edge_count()]).1;
    let allowed = fractional_pm(graph).is_some_and(|z| allowed_by_z(&z, n));
    Ok(ExactMoment {
        n,
        value: BigRational::new(acc.total(), scale),
        points,
        allowed_by_z: allowed,
    })
}

/// `φ(x) = Σ_e (1 - x_e) ln(1 - x_e) - x_e ln x_e`.
#[derive(Clone, Debug)]
pub struct FirstMomentField {
    pub edges: usize,
}

impl SmoothField for FirstMomentField {
    fn dim(&self) -> usize {
        self.edges
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| (1.0 - t) * (1.0 - t).ln() - t * t.ln()).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&t| -(t * (1.0 - t)).ln() - 2.0).collect()
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            x.len(),
            x.iter().map(|&t| 1.0 / (1.0 - t) - 1.0 / t),
        ))
    }
}

/// `ψ(x) = ∏_e ((1 - x_e) / x_e)^{1/2}`.
pub fn psi1(x: &[f64]) -> f64 {
    x.iter().map(|&t| 0.5 * ((1.0 - t) / t).ln()).sum::<f64>().exp()
}

/// The first-moment sum as a Laplace problem on `R^E`.
pub fn first_moment_problem(graph: &Multigraph) -> Result<LaplaceProblem> {
    let z = fractional_pm(graph).ok_or_else(|| Error::Hypothesis("graph has no fractional perfect matching".into()))?;
    let m = GraphMatrices::build(graph);
    let lattice = first_moment_lattice(graph)?.lattice;
    let (g, h) = (graph.vertex_count() as i64, graph.edge_count() as i64);
    let start: Vec<f64> = z.iter().map(|x| num_traits::ToPrimitive::to_f64(x).unwrap()).collect();
    let interior = start.iter().all(|&t| t > 0.0 && t < 1.0);
    Ok(LaplaceProblem {
        phi: Box::new(FirstMomentField { edges: graph.edge_count() }),
        psi: Box::new(psi1),
        lattice,
        constraints: m.incidence.clone(),
        rhs: vec![1; graph.vertex_count()],
        offset: Some(z),
        start: interior.then_some(start),
        b: ExponentRecord {
            constant: 1.0,
            power: Rational64::new(g - h, 2),
        },
    })
}

/// The regular-graph closed form of the first-moment constant.
///
/// Non-bipartite: `C = 2 (d-1)^{(d-1)g/2} / ((d(d-2))^{dg/4-g/2} det(A+dI)^{1/2})`.
/// Bipartite: `C = (d-1)^{(d-1)g/2+1/2} (2π)^{1/2} / ((d(d-2))^{dg/4-g/2+1/2} det(A'+dI)^{1/2})`
/// with `A'` the adjacency matrix minus its last row and column.
pub fn closed_form_constant(graph: &Multigraph) -> Result<SymbolicConstant> {
    let d = graph.require_regular(3)? as i64;
    let g = graph.vertex_count();
    let h = graph.edge_count() as i64;
    let m = GraphMatrices::build(graph);
    let shifted = |k: usize| -> BigInt {
        let rows: Vec<Vec<i64>> = (0..k)
            .map(|i| (0..k).map(|j| m.adjacency[i][j] + if i == j { d } else { 0 }).collect())
            .collect();
        det_bareiss(&int_rows(&rows))
    };
    let gi = g as i64;
    let dm1 = int(d - 1);
    let dd2 = int(d * (d - 2));
    if graph.is_bipartite() {
        let squared = rational_pow(&dm1, (d - 1) * gi + 1) * int(2)
            / (rational_pow(&dd2, h - gi + 1) * BigRational::from_integer(shifted(g - 1)));
        Ok(SymbolicConstant::new(squared, 1))
    } else {
        let squared =
            rational_pow(&dm1, (d - 1) * gi) * int(4) / (rational_pow(&dd2, h - gi) * BigRational::from_integer(shifted(g)));
        Ok(SymbolicConstant::new(squared, 0))
    }
}

/// Asymptotics of `E[X]` assembled by the engine, with the closed form as a check.
#[derive(Clone, Debug, Serialize)]
pub struct FirstMomentAsymptotics {
    pub estimate: AsymptoticEstimate,
    pub closed_form: SymbolicConstant,
    #[serde(serialize_with = "decimal_f64")]
    pub relative_difference: f64,
    /// Engine values at the maximum against `x₀ = 1/d`, `φ(x₀) = (g/2) ln((d-1)^{d-1}/d^{d-2})`,
    /// `ψ(x₀) = (d-1)^{h/2}` and `det(-H|V) = (d(d-2)/(d-1))^r`.
    #[serde(serialize_with = "decimal_f64")]
    pub max_point_error: f64,
    pub closed_form_check: bool,
}

/// Relative tolerance between the closed form and the engine.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-9;

pub fn asymptotic_first_moment(graph: &Multigraph, opts: &MaximizeOptions) -> Result<FirstMomentAsymptotics> {
    let d = graph.require_regular(3)?;
    let problem = first_moment_problem(graph)?;
    let mut estimate = laplace::asymptotic_estimate(&problem, opts)?;
    estimate.uniqueness = Uniqueness::Proven;

    // Exact values at x₀ = 1/d: H = -(d(d-2)/(d-1)) I.
    let (g, h) = (graph.vertex_count() as i64, graph.edge_count() as i64);
    let di = d as i64;
    let r = estimate.rank as i64;
    let diag = BigRational::new(BigInt::from(-di * (di - 2)), BigInt::from(di - 1));
    let hess = ExactMatrix::from_fn(graph.edge_count(), graph.edge_count(), |i, j| {
        if i == j {
            diag.clone()
        } else {
            BigRational::zero()
        }
    });
    let det_exact = laplace::hessian_restricted_det_exact(&hess, &problem.lattice.basis)?;
    // C² = (2π)^{r + g - h} ψ² / (Vol² det)
    let pi_power = r + g - h;
    let squared = rational_pow(&int(2), pi_power) * rational_pow(&int(di - 1), h)
        / (problem.lattice.vol_squared() * &det_exact);
    estimate.symbolic = Some(SymbolicConstant::new(squared, pi_power));

    let closed = closed_form_constant(graph)?;
    let relative_difference = (estimate.constant / closed.value() - 1.0).abs();
    let x_err = estimate.x0.iter().map(|&x| (x - 1.0 / d as f64).abs()).fold(0.0, f64::max);
    let df = d as f64;
    let phi_expected = g as f64 / 2.0 * ((df - 1.0) * (df - 1.0).ln() - (df - 2.0) * df.ln());
    let det_expected = (df * (df - 2.0) / (df - 1.0)).powi(r as i32);
    let max_point_error = x_err
        .max((estimate.exp_rate - phi_expected).abs())
        .max((estimate.det_neg_h_restricted / det_expected - 1.0).abs())
        .max(((problem.psi)(&estimate.x0) / (df - 1.0).powf(h as f64 / 2.0) - 1.0).abs());
    let closed_form_check = relative_difference < CLOSED_FORM_TOLERANCE && max_point_error < CLOSED_FORM_TOLERANCE;
    if !closed_form_check {
        return Err(Error::Inconsistent(format!(
            "engine constant {} disagrees with closed form {} (relative {relative_difference:e}, point error {max_point_error:e})",
            estimate.constant,
            closed.value()
        )));
    }
    Ok(FirstMomentAsymptotics {
        estimate,
        closed_form: closed,
        relative_difference,
        max_point_error,
        closed_form_check,
    })
}

/// One row of a moment report.
#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub n: u64,
    pub allowed_by_z: bool,
    /// `None` when the exact sum was over budget.
    #[serde(serialize_with = "crate::report::opt_exact_rational")]
    pub exact: Option<BigRational>,
    pub exact_error: Option<String>,
    #[serde(serialize_with = "decimal_f64")]
    pub asymptotic_value_at_n: f64,
    pub ratio: Option<String>,
}

impl MomentRow {
    pub fn ratio_value(&self) -> Option<f64> {
        self.ratio.as_ref().and_then(|r| r.parse().ok())
    }
}

/// `exact / asymptotic` computed in logarithms, so huge values are fine.
pub fn ratio(exact: &BigRational, estimate: &AsymptoticEstimate, n: u64) -> Option<f64> {
    if !exact.is_positive() {
        return None;
    }
    Some((ln_rational(exact) - estimate.ln_value_at(n as f64)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentKind {
    First,
    Second,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub kind: MomentKind,
    pub rows: Vec<MomentRow>,
    pub asymptotic: Option<AsymptoticEstimate>,
    pub closed_form_check: Option<bool>,
    pub notes: Vec<String>,
}

/// Builds report rows from exact evaluations; budget failures become row notes.
pub fn moment_rows(
    grid: &[u64],
    estimate: Option<&AsymptoticEstimate>,
    mut exact: impl FnMut(u64) -> Result<ExactMoment>,
) -> Result<Vec<MomentRow>> {
    grid.iter()
        .map(|&n| {
            let (value, error, allowed) = match exact(n) {
                Ok(m) => (Some(m.value), None, m.allowed_by_z),
                Err(e) if e.is_budget() => (None, Some(e.to_string()), true),
                Err(e) => return Err(e),
            };
            let asym = estimate.map_or(f64::NAN, |e| e.value_at(n as f64));
            let ratio = match (&value, estimate) {
                (Some(v), Some(e)) => ratio(v, e, n).map(|r| format!("{r:.14e}")),
                _ => None,
            };
            Ok(MomentRow {
                n,
                allowed_by_z: allowed,
                exact: value,
                exact_error: error,
                asymptotic_value_at_n: asym,
                ratio,
            })
        })
        .collect()
}

pub fn first_moment_report(
    graph: &Multigraph,
    grid: &[u64],
    cap: u64,
    opts: &MaximizeOptions,
) -> Result<MomentReport> {
    let mut notes = Vec::new();
    let asym = if graph.regular_degree().is_some_and(|d| d >= 3) {
        Some(asymptotic_first_moment(graph, opts)?)
    } else {
        notes.push("asymptotics are only certified for d-regular graphs with d >= 3".to_string());
        None
    };
    let rows = moment_rows(grid, asym.as_ref().map(|a| &a.estimate), |n| exact_first_moment(graph, n, cap))?;
    Ok(MomentReport {
        kind: MomentKind::First,
        rows,
        closed_form_check: asym.as_ref().map(|a| a.closed_form_check),
        asymptotic: asym.map(|a| a.estimate),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use crate::laplace::DEFAULT_CAP;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn fractional_matchings() {
        assert_eq!(fractional_pm(&families::complete(4)).unwrap(), vec![q(1, 3); 6]);
        assert!(fractional_pm(&families::path(3)).is_none());
        let p4 = fractional_pm(&families::path(4)).unwrap();
        assert_eq!(p4, vec![q(1, 1), q(0, 1), q(1, 1)]);
        // A triangle with a pendant path: the fractional matching is unique.
        let g = Multigraph::new(5, vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]).unwrap();
        assert_eq!(fractional_pm(&g).unwrap(), vec![q(1, 2), q(1, 2), q(1, 2), q(0, 1), q(1, 1)]);
    }

    #[test]
    fn term_values() {
        let k4 = families::complete(4);
        // edges (0,1),(0,2),(0,3),(1,2),(1,3),(2,3); matching {01, 23}
        assert_eq!(term_a1(&k4, 1, &[1, 0, 0, 0, 0, 1]).unwrap(), q(1, 1));
        let k23 = families::parallel_edges(3);
        assert_eq!(term_a1(&k23, 3, &[1, 1, 1]).unwrap(), q(4, 3));
        assert_eq!(term_a1(&k23, 0, &[0, 0, 0]).unwrap(), q(1, 1));
        assert!(term_a1(&k23, 3, &[1, 1, 0]).is_err());
    }

    #[test]
    fn small_exact_values() {
        let k4 = families::complete(4);
        let one = exact_first_moment(&k4, 1, DEFAULT_CAP).unwrap();
        assert_eq!(one.value, q(3, 1));
        assert!(!one.allowed_by_z);
        assert!(exact_first_moment(&k4, 3, DEFAULT_CAP).unwrap().allowed_by_z);
        assert_eq!(exact_first_moment(&families::parallel_edges(3), 1, DEFAULT_CAP).unwrap().value, q(3, 1));
        // Odd number of lifted vertices: no perfect matching.
        let tri = families::cycle(3);
        assert!(exact_first_moment(&tri, 1, DEFAULT_CAP).unwrap().value.is_zero());
    }

    #[test]
    fn closed_forms_of_the_examples() {
        let c = closed_form_constant(&families::complete(4)).unwrap();
        assert_eq!(c.squared, q(64, 27));
        assert_eq!(c.pi_half_power, 0);
        let b = closed_form_constant(&families::parallel_edges(3)).unwrap();
        assert_eq!(b.squared, q(64, 27));
        assert_eq!(b.pi_half_power, 1);
    }

    #[test]
    fn engine_matches_closed_form() {
        let opts = MaximizeOptions { multistart: 5, ..Default::default() };
        for graph in [families::complete(4), families::parallel_edges(3), families::petersen()] {
            let a = asymptotic_first_moment(&graph, &opts).unwrap();
            assert!(a.closed_form_check);
            assert_eq!(a.estimate.symbolic.as_ref().unwrap(), &a.closed_form);
        }
        let k4 = asymptotic_first_moment(&families::complete(4), &opts).unwrap().estimate;
        assert_eq!(k4.poly_power, Rational64::from_integer(0));
        assert!((k4.exp_rate - 2.0 * (4.0f64 / 3.0).ln()).abs() < 1e-12);
    }
}
