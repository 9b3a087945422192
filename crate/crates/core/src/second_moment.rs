//! The second moment `E[X²]`, a sum over ordered pairs of perfect matchings.
//!
//! A pair `(M₁, M₂)` of matchings of the lift is summarized by `ℓ_{ief}`: the
//! number of lifted vertices over `i` whose `M₁` edge lies over `e` and whose
//! `M₂` edge lies over `f`. For an edge `e = ij` the counts
//!
//! ```text
//! s_e = Σ_{f≠e} ℓ_{ief},  t_e = Σ_{f≠e} ℓ_{ife},  u_e = n - s_e - t_e - ℓ_{iee}
//! ```
//!
//! do not depend on the endpoint, and
//!
//! ```text
//! E[X²] = Σ_ℓ n!^{g-h} ∏_e s_e! t_e! u_e! / ℓ_{iee}! · ∏_i ∏_{e≠f} 1/ℓ_{ief}!.
//! ```

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{Accumulator, ExactMatrix, Factorials, Product};
use crate::first_moment::{self, allowed_by_z, fractional_pm, moment_rows, ExactMoment, MomentKind, MomentReport};
use crate::graph::Multigraph;
use crate::laplace::{
    self, estimate_at, for_each_coset_point, maximize_on_section, AsymptoticEstimate, ExponentRecord, LaplaceProblem,
    MaximizeOptions, SectionMaximum, SmoothField, Uniqueness,
};
use crate::lattice::{pair_constraints, second_moment_lattice, PairIndex, SecondMomentLattice};
use crate::report::{decimal_f64, exact_rational, int, rational_pow, SymbolicConstant};

/// The `(i, e)` blocks of the pair space: where `x_{iee}`, the `σ` coordinates
/// `(i, e, f≠e)` and the `τ` coordinates `(i, f≠e, e)` live.
#[derive(Clone, Debug)]
struct Block {
    edge: usize,
    tail: bool,
    diag: usize,
    sigma: Vec<usize>,
    tau: Vec<usize>,
}

fn blocks(graph: &Multigraph, index: &PairIndex) -> Vec<Block> {
    let mut out = Vec::new();
    for i in 0..graph.vertex_count() {
        for &e in index.incident(i) {
            let others = index.incident(i).iter().filter(|&&f| f != e);
            out.push(Block {
                edge: e,
                tail: graph.edge(e).0 == i,
                diag: index.coord(i, e, e),
                sigma: others.clone().map(|&f| index.coord(i, e, f)).collect(),
                tau: others.map(|&f| index.coord(i, f, e)).collect(),
            });
        }
    }
    out
}

/// A validated pair configuration `ℓ_{ief}` for a given `n`.
#[derive(Clone, Debug, Serialize)]
pub struct PairConfig {
    pub n: u64,
    pub values: Vec<i64>,
    /// `(s_e, t_e, u_e, ℓ_{iee})` per edge.
    pub edge_counts: Vec<(i64, i64, i64, i64)>,
}

impl PairConfig {
    /// Checks vertex totals and endpoint independence of `ℓ_{iee}`, `s_e`, `t_e`.
    pub fn new(graph: &Multigraph, index: &PairIndex, n: u64, values: Vec<i64>) -> Result<Self> {
        if values.len() != index.len() {
            return Err(Error::Dimension(format!("expected {} pair values, got {}", index.len(), values.len())));
        }
        if values.iter().any(|&x| x < 0 || x as u64 > n) {
            return Err(Error::InvalidConfig(format!("pair values must lie in [0, {n}]")));
        }
        let constraints = pair_constraints(graph, index);
        for (row, c) in constraints.iter().enumerate() {
            let s: i64 = c.iter().zip(&values).map(|(a, b)| a * b).sum();
            let want = if row < graph.vertex_count() { n as i64 } else { 0 };
            if s != want {
                return Err(Error::InvalidConfig(format!("pair constraint {row} evaluates to {s}, expected {want}")));
            }
        }
        let mut edge_counts = vec![(0, 0, 0, 0); graph.edge_count()];
        for b in blocks(graph, index).iter().filter(|b| b.tail) {
            let s: i64 = b.sigma.iter().map(|&k| values[k]).sum();
            let t: i64 = b.tau.iter().map(|&k| values[k]).sum();
            let diag = values[b.diag];
            let u = n as i64 - s - t - diag;
            if u < 0 {
                return Err(Error::InvalidConfig(format!("edge {} has u_e = {u} < 0", b.edge)));
            }
            edge_counts[b.edge] = (s, t, u, diag);
        }
        Ok(PairConfig { n, values, edge_counts })
    }
}

struct TermPlan {
    tails: Vec<Block>,
    off_diagonal: Vec<usize>,
    n_factorial_power: usize,
    scale_power: usize,
}

impl TermPlan {
    fn new(graph: &Multigraph, index: &PairIndex) -> Self {
        let (g, h) = (graph.vertex_count(), graph.edge_count());
        let off_diagonal: Vec<usize> = index
            .triples()
            .iter()
            .enumerate()
            .filter(|(_, &(_, e, f))| e != f)
            .map(|(k, _)| k)
            .collect();
        TermPlan {
            tails: blocks(graph, index).into_iter().filter(|b| b.tail).collect(),
            n_factorial_power: g.saturating_sub(h),
            scale_power: h.saturating_sub(g) + h + off_diagonal.len(),
            off_diagonal,
        }
    }

    /// `a_n(ℓ) · n!^{scale_power}`, an integer.
    fn scaled(&self, f: &Factorials, l: &[i64]) -> Product {
        let n = f.max();
        let nf = f.get(n);
        let mut p = Product::one();
        for _ in 0..self.n_factorial_power {
            p = p.times(nf);
        }
        for b in &self.tails {
            let s: i64 = b.sigma.iter().map(|&k| l[k]).sum();
            let t: i64 = b.tau.iter().map(|&k| l[k]).sum();
            let diag = l[b.diag];
            let u = n as i64 - s - t - diag;
            p = p
                .times(f.get(s as usize))
                .times(f.get(t as usize))
                .times(f.get(u as usize))
                .times(&(nf / f.get(diag as usize)));
        }
        for &k in &self.off_diagonal {
            p = p.times(&(nf / f.get(l[k] as usize)));
        }
        p
    }
}

/// `a_n(ℓ)` for a pair configuration, in integer factorials only.
pub fn term_a2(graph: &Multigraph, config: &PairConfig) -> Result<BigRational> {
    let index = PairIndex::new(graph);
    let plan = TermPlan::new(graph, &index);
    let f = Factorials::up_to(config.n as usize);
    let scale = num_traits::pow(f.get(config.n as usize).clone(), plan.scale_power);
    Ok(BigRational::new(plan.scaled(&f, &config.values).into_big(), scale))
}

/// Exact `E[X²]` by backtracking over the `(i, e, f)` coordinates.
pub fn exact_second_moment(graph: &Multigraph, n: u64, cap: u64) -> Result<ExactMoment> {
    let index = PairIndex::new(graph);
    let constraints = pair_constraints(graph, &index);
    let mut rhs = vec![1i64; graph.vertex_count()];
    rhs.resize(constraints.len(), 0);
    let plan = TermPlan::new(graph, &index);
    let f = Factorials::up_to(n as usize);
    let mut acc = Accumulator::default();
    let points = for_each_coset_point(&constraints, &rhs, n, cap, |l| {
        acc.add(plan.scaled(&f, l));
        Ok(())
    })?;
    let scale = num_traits::pow(f.get(n as usize).clone(), plan.scale_power);
    Ok(ExactMoment {
        n,
        value: BigRational::new(acc.total(), scale),
        points,
        allowed_by_z: fractional_pm(graph).is_some_and(|z| allowed_by_z(&z, n)),
    })
}

/// `φ(x) = ½ Σ_{i,e} [σ ln σ + τ ln τ + γ ln γ - x_{iee} ln x_{iee} - 2 Σ_{f≠e} x_{ief} ln x_{ief}]`
/// with `σ_{ie} = Σ_{f≠e} x_{ief}`, `τ_{ie} = Σ_{f≠e} x_{ife}`, `γ_{ie} = 1 - x_{iee} - σ - τ`.
#[derive(Clone, Debug)]
pub struct Phi2Field {
    dim: usize,
    blocks: Vec<Block>,
    off_diagonal: Vec<usize>,
}

fn xlnx(x: f64) -> f64 {
    x * x.ln()
}

impl Phi2Field {
    pub fn new(graph: &Multigraph) -> Self {
        let index = PairIndex::new(graph);
        Phi2Field {
            dim: index.len(),
            blocks: blocks(graph, &index),
            off_diagonal: TermPlan::new(graph, &index).off_diagonal,
        }
    }

    fn parts(&self, b: &Block, x: &[f64]) -> (f64, f64, f64, f64) {
        let s: f64 = b.sigma.iter().map(|&k| x[k]).sum();
        let t: f64 = b.tau.iter().map(|&k| x[k]).sum();
        let diag = x[b.diag];
        (s, t, 1.0 - diag - s - t, diag)
    }

    /// `ψ(x) = ∏_{i,e} (σ τ γ / x_{iee})^{1/4} ∏_i ∏_{e≠f} x_{ief}^{-1/2}`.
    pub fn psi(&self, x: &[f64]) -> f64 {
        let mut ln = 0.0;
        for b in &self.blocks {
            let (s, t, c, diag) = self.parts(b, x);
            ln += 0.25 * (s.ln() + t.ln() + c.ln() - diag.ln());
        }
        for &k in &self.off_diagonal {
            ln -= 0.5 * x[k].ln();
        }
        ln.exp()
    }
}

impl SmoothField for Phi2Field {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut v = 0.0;
        for b in &self.blocks {
            let (s, t, c, diag) = self.parts(b, x);
            v += 0.5 * (xlnx(s) + xlnx(t) + xlnx(c) - xlnx(diag));
        }
        v - self.off_diagonal.iter().map(|&k| xlnx(x[k])).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.dim];
        for b in &self.blocks {
            let (s, t, c, diag) = self.parts(b, x);
            let (ls, lt, lc) = (0.5 * (s.ln() + 1.0), 0.5 * (t.ln() + 1.0), 0.5 * (c.ln() + 1.0));
            for &k in &b.sigma {
                grad[k] += ls - lc;
            }
            for &k in &b.tau {
                grad[k] += lt - lc;
            }
            grad[b.diag] -= lc + 0.5 * (diag.ln() + 1.0);
        }
        for &k in &self.off_diagonal {
            grad[k] -= x[k].ln() + 1.0;
        }
        grad
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut hess = DMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            let (s, t, c, diag) = self.parts(b, x);
            for &p in &b.sigma {
                for &q in &b.sigma {
                    hess[(p, q)] += 0.5 / s;
                }
            }
            for &p in &b.tau {
                for &q in &b.tau {
                    hess[(p, q)] += 0.5 / t;
                }
            }
            let gamma: Vec<usize> = b.sigma.iter().chain(&b.tau).chain([&b.diag]).copied().collect();
            for &p in &gamma {
                for &q in &gamma {
                    hess[(p, q)] += 0.5 / c;
                }
            }
            hess[(b.diag, b.diag)] -= 0.5 / diag;
        }
        for &k in &self.off_diagonal {
            hess[(k, k)] -= 1.0 / x[k];
        }
        hess
    }
}

impl Phi2Field {
    /// The Hessian at the uniform point `x_{ief} = 1/d²` of a `d`-regular graph, exactly.
    pub fn exact_hessian_at_uniform(&self, d: usize) -> ExactMatrix {
        let d2 = int((d * d) as i64);
        let dm1 = int(d as i64 - 1);
        // σ = τ = (d-1)/d², γ = (d-1)²/d², x = 1/d².
        let inv_s = &d2 / &dm1;
        let inv_c = &d2 / (&dm1 * &dm1);
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let mut hess = ExactMatrix::zeros(self.dim, self.dim);
        let mut add = |p: usize, q: usize, v: &BigRational| {
            let cur = hess.get(p, q).clone();
            hess.set(p, q, cur + v);
        };
        let hs = &half * &inv_s;
        let hc = &half * &inv_c;
        let hd = -(&half * &d2);
        let od = -d2.clone();
        for b in &self.blocks {
            for &p in &b.sigma {
                for &q in &b.sigma {
                    add(p, q, &hs);
                }
            }
            for &p in &b.tau {
                for &q in &b.tau {
                    add(p, q, &hs);
                }
            }
            let gamma: Vec<usize> = b.sigma.iter().chain(&b.tau).chain([&b.diag]).copied().collect();
            for &p in &gamma {
                for &q in &gamma {
                    add(p, q, &hc);
                }
            }
            add(b.diag, b.diag, &hd);
        }
        for &k in &self.off_diagonal {
            add(k, k, &od);
        }
        hess
    }
}

/// `ln((d-1)^{d-1} / d^{d-2})`, the per-vertex value of `φ` at the uniform point.
pub fn uniform_rate(d: usize) -> f64 {
    let d = d as f64;
    (d - 1.0) * (d - 1.0).ln() - (d - 2.0) * d.ln()
}

/// The second-moment sum as a Laplace problem, starting from `x = 1/d²`.
pub fn second_moment_problem(graph: &Multigraph) -> Result<(LaplaceProblem, SecondMomentLattice)> {
    let lattice = second_moment_lattice(graph)?;
    let d = lattice.degree;
    let field = Phi2Field::new(graph);
    let n_dim = lattice.index.len();
    let (g, h) = (graph.vertex_count() as i64, graph.edge_count() as i64);
    let mut rhs = vec![1i64; graph.vertex_count()];
    rhs.resize(lattice.constraints.len(), 0);
    let psi_field = field.clone();
    let problem = LaplaceProblem {
        phi: Box::new(field),
        psi: Box::new(move |x| psi_field.psi(x)),
        lattice: lattice.lattice.clone(),
        constraints: lattice.constraints.clone(),
        rhs,
        offset: Some(vec![BigRational::new(BigInt::from(1), BigInt::from(d * d)); n_dim]),
        start: Some(vec![1.0 / (d * d) as f64; n_dim]),
        b: ExponentRecord {
            constant: 1.0,
            power: Rational64::new(g + 3 * h - (d * d) as i64 * g, 2),
        },
    };
    Ok((problem, lattice))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MaximizerStatus {
    /// `d = 3`: the maximum at the uniform point is a theorem.
    Proven,
    /// `d ≥ 4`: supported by multistart agreement only.
    Heuristic,
}

#[derive(Clone, Debug, Serialize)]
pub struct MaximizerReport {
    pub degree: usize,
    pub status: MaximizerStatus,
    pub maximum: SectionMaximum,
    #[serde(serialize_with = "decimal_f64")]
    pub x0_error: f64,
    #[serde(serialize_with = "decimal_f64")]
    pub phi_error: f64,
    #[serde(serialize_with = "decimal_f64")]
    pub psi_relative_error: f64,
    pub multistart_agree: bool,
    pub pass: bool,
}

/// Tolerances for the uniform maximizer.
pub const X0_TOLERANCE: f64 = 1e-9;
pub const PHI_TOLERANCE: f64 = 1e-10;

fn maximizer_report(graph: &Multigraph, problem: &LaplaceProblem, d: usize, maximum: SectionMaximum) -> MaximizerReport {
    let g = graph.vertex_count() as f64;
    let x0_error = maximum
        .x0
        .iter()
        .map(|&x| (x - 1.0 / (d * d) as f64).abs())
        .fold(0.0, f64::max);
    let phi_error = (maximum.value - g * uniform_rate(d)).abs();
    let df = d as f64;
    let ln_psi_expected = d as f64 * g * ((df - 1.0).ln() + (df - 2.0) * df.ln());
    let psi_relative_error = ((problem.psi)(&maximum.x0).ln() - ln_psi_expected).exp() - 1.0;
    let multistart_agree = maximum.multistart.as_ref().is_none_or(|m| m.all_agree);
    let status = if d == 3 { MaximizerStatus::Proven } else { MaximizerStatus::Heuristic };
    let pass = x0_error < X0_TOLERANCE && phi_error < PHI_TOLERANCE && multistart_agree;
    MaximizerReport {
        degree: d,
        status,
        maximum,
        x0_error,
        phi_error,
        psi_relative_error: psi_relative_error.abs(),
        multistart_agree,
        pass,
    }
}

/// Locates the maximum of `φ` on the second-moment section and compares it
/// with the uniform point `1/d²`.
pub fn verify_phi2_maximizer(graph: &Multigraph, opts: &MaximizeOptions) -> Result<MaximizerReport> {
    let (problem, lattice) = second_moment_problem(graph)?;
    let maximum = maximize_on_section(&problem, opts)?;
    Ok(maximizer_report(graph, &problem, lattice.degree, maximum))
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondMomentAsymptotics {
    pub estimate: AsymptoticEstimate,
    pub maximizer: MaximizerReport,
    pub maximizer_status: MaximizerStatus,
    pub lattice: SecondMomentLattice,
    /// `det(-H|V)` at `1/d²`, exactly.
    #[serde(serialize_with = "exact_rational")]
    pub det_exact: BigRational,
    #[serde(serialize_with = "decimal_f64")]
    pub det_relative_difference: f64,
}

/// `E[X²] ~ C n^p e^{n φ(x₀)}` through the engine, with the symbolic constant
/// from the exact restricted Hessian at the uniform point.
pub fn asymptotic_second_moment(graph: &Multigraph, opts: &MaximizeOptions) -> Result<SecondMomentAsymptotics> {
    let (problem, lattice) = second_moment_problem(graph)?;
    problem.validate()?;
    let d = lattice.degree;
    let maximum = maximize_on_section(&problem, opts)?;
    let report = maximizer_report(graph, &problem, d, maximum.clone());
    if !report.pass {
        return Err(Error::Hypothesis(format!(
            "maximum is not the uniform point (x error {:e}, phi error {:e}, multistart agree {})",
            report.x0_error, report.phi_error, report.multistart_agree
        )));
    }
    let (mut estimate, _) = estimate_at(&problem, &maximum)?;
    estimate.uniqueness = match report.status {
        MaximizerStatus::Proven => Uniqueness::Proven,
        MaximizerStatus::Heuristic => Uniqueness::HeuristicUnique,
    };

    let field = Phi2Field::new(graph);
    let det_exact = laplace::hessian_restricted_det_exact(&field.exact_hessian_at_uniform(d), &lattice.lattice.basis)?;
    if det_exact <= BigRational::zero() {
        return Err(Error::Hypothesis("det(-H|V) is not positive".into()));
    }
    let det_relative_difference = (estimate.det_neg_h_restricted / det_exact.to_f64().unwrap() - 1.0).abs();

    // C² = (2π)^{r + 2 p_b} ψ(x₀)² / (Vol² det(-H|V))
    let (g, h) = (graph.vertex_count() as i64, graph.edge_count() as i64);
    let di = d as i64;
    let pi_power = estimate.rank as i64 + g + 3 * h - di * di * g;
    let psi_squared = rational_pow(&int((di - 1) * di.pow(d as u32 - 2)), 2 * di * g);
    let squared = rational_pow(&int(2), pi_power) * psi_squared / (lattice.lattice.vol_squared() * &det_exact);
    estimate.symbolic = Some(SymbolicConstant::new(squared, pi_power));

    Ok(SecondMomentAsymptotics {
        estimate,
        maximizer_status: report.status,
        maximizer: report,
        lattice,
        det_exact,
        det_relative_difference,
    })
}

pub fn second_moment_report(
    graph: &Multigraph,
    grid: &[u64],
    cap: u64,
    opts: &MaximizeOptions,
) -> Result<(MomentReport, Option<SecondMomentAsymptotics>)> {
    let mut notes = Vec::new();
    let asym = if graph.regular_degree().is_some_and(|d| d >= 3) {
        Some(asymptotic_second_moment(graph, opts)?)
    } else {
        notes.push("asymptotics are only available for d-regular graphs with d >= 3".to_string());
        None
    };
    if let Some(a) = &asym {
        notes.extend(a.lattice.notes.iter().cloned());
        if a.maximizer_status == MaximizerStatus::Heuristic {
            notes.push("d >= 4: the maximizer is conjectural, supported by multistart agreement".to_string());
        }
    }
    let rows = moment_rows(grid, asym.as_ref().map(|a| &a.estimate), |n| exact_second_moment(graph, n, cap))?;
    let report = MomentReport {
        kind: MomentKind::Second,
        rows,
        asymptotic: asym.as_ref().map(|a| a.estimate.clone()),
        closed_form_check: None,
        notes,
    };
    Ok((report, asym))
}

/// `E[X²] ≥ E[X]²` for exact values.
pub fn cauchy_schwarz_holds(graph: &Multigraph, n: u64, cap: u64) -> Result<bool> {
    let first = first_moment::exact_first_moment(graph, n, cap)?.value;
    let second = exact_second_moment(graph, n, cap)?.value;
    Ok(second >= &first * &first)
}
