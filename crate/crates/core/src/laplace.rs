//! Laplace's method for sums over a lattice coset.
//!
//! A [`LaplaceProblem`] describes a sum `Σ a_n(ℓ)` over `(L + ℓ_n) ∩ n[0,1]^N`
//! with `a_n(ℓ) ≈ b_n ψ(ℓ/n) e^{nφ(ℓ/n)}`. The engine locates the maximum
//! `x₀` of `φ` on the affine section `W = {x : Cx = rhs}` by Newton's method
//! in section coordinates, computes `det(−H|_V)` and assembles
//!
//! ```text
//! Σ a_n(ℓ) ~ (2π)^{r/2} ψ(x₀) / (Vol(L) det(−H|_V)^{1/2}) · b_n n^{r/2} e^{nφ(x₀)}.
//! ```
//!
//! [`exact_coset_sum`] evaluates the left-hand side exactly for small `n`.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, int_rows, ExactMatrix, IntRows};
use crate::lattice::ExactLattice;
use crate::report::{decimal_f64, decimal_vec, exact_rational, SymbolicConstant};
use crate::streams::{stream, DOMAIN_MULTISTART};

/// A twice differentiable scalar field on the open box `(0,1)^N`.
pub trait SmoothField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
}

/// `b_n = constant · (2πn)^power`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentRecord {
    pub constant: f64,
    #[serde(serialize_with = "ratio_string")]
    pub power: Rational64,
}

fn ratio_string<S: serde::Serializer>(r: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

pub type PsiFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// An instance of the lattice Laplace summation.
pub struct LaplaceProblem {
    pub phi: Box<dyn SmoothField>,
    pub psi: PsiFn,
    pub lattice: ExactLattice,
    /// Affine section `W = {x : constraints · x = rhs}`; its direction space is
    /// the real span of `lattice`.
    pub constraints: Vec<Vec<i64>>,
    pub rhs: Vec<i64>,
    /// A rational point `w ∈ W`; `ℓ_n = n w` whenever that is integral.
    pub offset: Option<Vec<BigRational>>,
    /// Strictly interior feasible starting point, if one is known.
    pub start: Option<Vec<f64>>,
    pub b: ExponentRecord,
}

impl LaplaceProblem {
    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    /// `ℓ_n = n w` if it is an integer vector.
    pub fn offset_at(&self, n: u64) -> Option<Vec<BigInt>> {
        let w = self.offset.as_ref()?;
        let scale = BigRational::from_integer(BigInt::from(n));
        w.iter()
            .map(|x| {
                let y = x * &scale;
                y.is_integer().then(|| y.to_integer())
            })
            .collect()
    }

    /// Checks that the offset lies on `W` and the lattice spans the section's
    /// direction space.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.lattice.ambient_dim != n || self.constraints.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension("problem dimensions disagree".into()));
        }
        if self.constraints.len() != self.rhs.len() {
            return Err(Error::Dimension("constraint and rhs lengths differ".into()));
        }
        for v in &self.lattice.basis {
            for row in &self.constraints {
                let s: BigInt = row.iter().zip(v).map(|(&a, b)| BigInt::from(a) * b).sum();
                if !s.is_zero() {
                    return Err(Error::Inconsistent("lattice vector leaves the section".into()));
                }
            }
        }
        let rank = exact::rank(&int_rows(&self.constraints));
        if rank + self.lattice.rank() != n {
            return Err(Error::Inconsistent(format!(
                "lattice rank {} does not span the section (constraint rank {rank}, N = {n})",
                self.lattice.rank()
            )));
        }
        if let Some(w) = &self.offset {
            for (row, &b) in self.constraints.iter().zip(&self.rhs) {
                let s: BigRational = row
                    .iter()
                    .zip(w)
                    .map(|(&a, x)| x * BigRational::from_integer(BigInt::from(a)))
                    .sum();
                if s != BigRational::from_integer(BigInt::from(b)) {
                    return Err(Error::Inconsistent("offset is not on the affine section".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MaximizeOptions {
    /// Number of random interior restarts used to probe uniqueness.
    pub multistart: usize,
    pub seed: u64,
    /// Target norm of the projected gradient.
    pub tolerance: f64,
    /// Distance below which two maximizers count as the same point.
    pub agreement: f64,
    pub max_iterations: usize,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            multistart: 100,
            seed: 0,
            tolerance: 1e-12,
            agreement: 1e-8,
            max_iterations: 500,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MultistartSummary {
    pub runs: usize,
    pub converged: usize,
    pub agreeing: usize,
    #[serde(serialize_with = "decimal_f64")]
    pub max_deviation: f64,
    pub all_agree: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SectionMaximum {
    #[serde(serialize_with = "decimal_vec")]
    pub x0: Vec<f64>,
    #[serde(serialize_with = "decimal_f64")]
    pub value: f64,
    #[serde(serialize_with = "decimal_f64")]
    pub gradient_residual: f64,
    pub iterations: usize,
    pub multistart: Option<MultistartSummary>,
}

/// Orthonormal basis (columns) of the span of `vectors`.
fn orthonormal_columns(vectors: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    if vectors.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    let m = DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
    m.qr().q()
}

const INTERIOR_MARGIN: f64 = 1e-12;

/// Largest `t ≥ 0` keeping `x + t·dx` inside `[margin, 1 - margin]^N`.
fn max_step(x: &[f64], dx: &[f64], margin: f64) -> f64 {
    let mut t = f64::INFINITY;
    for (&xi, &di) in x.iter().zip(dx) {
        if di > 0.0 {
            t = t.min((1.0 - margin - xi) / di);
        } else if di < 0.0 {
            t = t.min((margin - xi) / di);
        }
    }
    t.max(0.0)
}

struct Ascent {
    x: Vec<f64>,
    value: f64,
    residual: f64,
    iterations: usize,
}

fn newton_ascent(phi: &dyn SmoothField, z: &DMatrix<f64>, start: &[f64], opts: &MaximizeOptions) -> Result<Ascent> {
    let mut x = start.to_vec();
    let mut value = phi.value(&x);
    let r = z.ncols();
    let mut residual;
    for it in 0..opts.max_iterations {
        let g = DVector::from_vec(phi.gradient(&x));
        let gy = z.transpose() * &g;
        residual = gy.norm();
        if r == 0 || residual < opts.tolerance {
            return Ok(Ascent { x, value, residual, iterations: it });
        }
        let hy = z.transpose() * phi.hessian(&x) * z;
        let newton = (-&hy).cholesky().map(|c| c.solve(&gy));
        let (step_y, is_newton) = match newton {
            Some(s) if s.dot(&gy) > 0.0 => (s, true),
            _ => (gy.clone(), false),
        };
        let dx: Vec<f64> = (z * &step_y).iter().copied().collect();
        let limit = max_step(&x, &dx, INTERIOR_MARGIN);
        let mut alpha = if limit >= 1.0 { 1.0 } else { 0.95 * limit };
        let slope = step_y.dot(&gy);
        let trial = |alpha: f64| -> Vec<f64> { x.iter().zip(&dx).map(|(a, b)| a + alpha * b).collect() };
        if is_newton && residual < 1e-6 && alpha == 1.0 {
            x = trial(1.0);
            value = phi.value(&x);
            continue;
        }
        loop {
            let candidate = trial(alpha);
            let v = phi.value(&candidate);
            if v.is_finite() && v >= value + 1e-4 * alpha * slope {
                x = candidate;
                value = v;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-30 {
                return Err(Error::NoConvergence { residual, iterations: it });
            }
        }
    }
    let g = DVector::from_vec(phi.gradient(&x));
    residual = (z.transpose() * g).norm();
    if residual < opts.tolerance {
        return Ok(Ascent { x, value, residual, iterations: opts.max_iterations });
    }
    Err(Error::NoConvergence {
        residual,
        iterations: opts.max_iterations,
    })
}

/// Analytic center of `{x : Cx = b, 0 < x < 1}` by infeasible-start Newton
/// on the log barrier.
pub fn analytic_center(constraints: &[Vec<i64>], rhs: &[i64], n: usize) -> Result<Vec<f64>> {
    let m = constraints.len();
    let c = DMatrix::from_fn(m, n, |i, j| constraints[i][j] as f64);
    let b = DVector::from_fn(m, |i, _| rhs[i] as f64);
    let mut x = DVector::from_element(n, 0.5);
    let mut nu = DVector::zeros(m);
    let residual = |x: &DVector<f64>, nu: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
        let grad = DVector::from_fn(n, |i, _| -1.0 / x[i] + 1.0 / (1.0 - x[i]));
        (grad + c.transpose() * nu, &c * x - &b)
    };
    for _ in 0..200 {
        let (rd, rp) = residual(&x, &nu);
        if rp.norm() < 1e-13 * (1.0 + b.norm()) && rd.norm() < 1e-10 {
            return Ok(x.iter().copied().collect());
        }
        let mut kkt = DMatrix::zeros(n + m, n + m);
        for i in 0..n {
            kkt[(i, i)] = 1.0 / (x[i] * x[i]) + 1.0 / ((1.0 - x[i]) * (1.0 - x[i]));
        }
        kkt.view_mut((0, n), (n, m)).copy_from(&c.transpose());
        kkt.view_mut((n, 0), (m, n)).copy_from(&c);
        let mut rhs_vec = DVector::zeros(n + m);
        rhs_vec.rows_mut(0, n).copy_from(&(-&rd));
        rhs_vec.rows_mut(n, m).copy_from(&(-&rp));
        let sol = kkt
            .svd(true, true)
            .solve(&rhs_vec, 1e-12)
            .map_err(|_| Error::NoInteriorPoint)?;
        let dx = sol.rows(0, n).into_owned();
        let dnu = sol.rows(n, m).into_owned();
        let norm0 = rd.norm_squared() + rp.norm_squared();
        let xs: Vec<f64> = x.iter().copied().collect();
        let dxs: Vec<f64> = dx.iter().copied().collect();
        let mut t = max_step(&xs, &dxs, 0.0).min(1.0 / 0.99) * 0.99;
        t = t.min(1.0);
        loop {
            let xn = &x + &dx * t;
            let nun = &nu + &dnu * t;
            let (a, bb) = residual(&xn, &nun);
            if a.norm_squared() + bb.norm_squared() <= (1.0 - 0.01 * t).powi(2) * norm0 {
                x = xn;
                nu = nun;
                break;
            }
            t *= 0.5;
            if t < 1e-20 {
                return Err(Error::NoInteriorPoint);
            }
        }
    }
    Err(Error::NoInteriorPoint)
}

fn feasible(constraints: &[Vec<i64>], rhs: &[i64], x: &[f64]) -> bool {
    let interior = x.iter().all(|&v| v > 0.0 && v < 1.0);
    interior
        && constraints.iter().zip(rhs).all(|(row, &b)| {
            let s: f64 = row.iter().zip(x).map(|(&a, v)| a as f64 * v).sum();
            (s - b as f64).abs() < 1e-9 * (1.0 + b.abs() as f64)
        })
}

/// Maximizes `φ` over the interior of `[0,1]^N ∩ W`.
pub fn maximize_on_section(problem: &LaplaceProblem, opts: &MaximizeOptions) -> Result<SectionMaximum> {
    let n = problem.dim();
    let start = match &problem.start {
        Some(s) => s.clone(),
        None => analytic_center(&problem.constraints, &problem.rhs, n)?,
    };
    if !feasible(&problem.constraints, &problem.rhs, &start) {
        return Err(Error::NoInteriorPoint);
    }
    let z = orthonormal_columns(&problem.lattice.basis_f64(), n);
    let primary = newton_ascent(problem.phi.as_ref(), &z, &start, opts)?;

    let multistart = (opts.multistart > 0 && z.ncols() > 0).then(|| {
        let runs: Vec<Option<Vec<f64>>> = (0..opts.multistart)
            .map(|run| {
                let mut rng = stream(opts.seed, &[DOMAIN_MULTISTART, run as u64]);
                let y = DVector::from_fn(z.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let dir: Vec<f64> = (&z * y).iter().copied().collect();
                let t = max_step(&start, &dir, 0.0) * rng.random_range(0.05..0.95);
                let s: Vec<f64> = start.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
                newton_ascent(problem.phi.as_ref(), &z, &s, opts).ok().map(|a| a.x)
            })
            .collect();
        let mut summary = MultistartSummary {
            runs: runs.len(),
            converged: 0,
            agreeing: 0,
            max_deviation: 0.0,
            all_agree: true,
        };
        for x in runs.iter().flatten() {
            summary.converged += 1;
            let dev = x
                .iter()
                .zip(&primary.x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            summary.max_deviation = summary.max_deviation.max(dev);
            if dev < opts.agreement {
                summary.agreeing += 1;
            }
        }
        summary.all_agree = summary.agreeing == summary.runs;
        summary
    });

    Ok(SectionMaximum {
        x0: primary.x,
        value: primary.value,
        gradient_residual: primary.residual,
        iterations: primary.iterations,
        multistart,
    })
}

/// `det(−H|_V) = det(−H(z_i, z_j)) / det(<z_i, z_j>)` for a basis `z` of `V`.
/// Evaluated as `det(−QᵀHQ)` with `Z = QR`, which stays accurate for skewed bases.
pub fn hessian_restricted_det(h: &DMatrix<f64>, basis: &[Vec<f64>]) -> Result<f64> {
    let n = h.nrows();
    let r = basis.len();
    if r == 0 {
        return Ok(1.0);
    }
    let z = DMatrix::from_fn(n, r, |i, j| basis[j][i]);
    let qr = z.clone().qr();
    let rr = qr.r();
    for j in 0..r {
        if rr[(j, j)].abs() <= 1e-12 * z.column(j).norm() {
            return Err(Error::Dependent);
        }
    }
    let q = qr.q();
    let form = -(q.transpose() * h * &q);
    Ok(form.determinant())
}

/// Exact version of [`hessian_restricted_det`] for a rational form and an integer basis.
pub fn hessian_restricted_det_exact(h: &ExactMatrix, basis: &IntRows) -> Result<BigRational> {
    if basis.is_empty() {
        return Ok(BigRational::from_integer(BigInt::from(1)));
    }
    let zt = ExactMatrix::from_int_rows(basis);
    let z = zt.transpose();
    let gram = zt.mul(&z)?.det()?;
    if gram.is_zero() {
        return Err(Error::Dependent);
    }
    let form = zt.mul(h)?.mul(&z)?;
    let minus = BigRational::from_integer(BigInt::from(-1));
    Ok(form.scale(&minus).det()? / gram)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Uniqueness {
    /// Uniqueness of the maximizer is a theorem for this problem class.
    Proven,
    /// All multistart runs agreed; not a proof.
    HeuristicUnique,
    /// Multistart runs disagreed or were not performed.
    Unverified,
}

/// `Σ a_n(ℓ) ~ constant · n^{poly_power} · e^{n·exp_rate}`.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticEstimate {
    #[serde(rename = "C", serialize_with = "decimal_f64")]
    pub constant: f64,
    #[serde(rename = "p_total", serialize_with = "ratio_string")]
    pub poly_power: Rational64,
    #[serde(serialize_with = "decimal_f64")]
    pub exp_rate: f64,
    #[serde(serialize_with = "decimal_vec")]
    pub x0: Vec<f64>,
    #[serde(rename = "det_neg_H_restricted", serialize_with = "decimal_f64")]
    pub det_neg_h_restricted: f64,
    #[serde(serialize_with = "exact_rational")]
    pub vol_squared: BigRational,
    pub rank: usize,
    pub multistart_agreement: Option<MultistartSummary>,
    pub uniqueness: Uniqueness,
    /// Exact form of `constant` when all ingredients are known exactly.
    pub symbolic: Option<SymbolicConstant>,
    pub description: String,
}

impl AsymptoticEstimate {
    pub fn ln_value_at(&self, n: f64) -> f64 {
        self.constant.ln() + self.poly_power.to_f64().unwrap() * n.ln() + n * self.exp_rate
    }

    pub fn value_at(&self, n: f64) -> f64 {
        self.ln_value_at(n).exp()
    }

    pub fn describe(constant: f64, power: Rational64, rate: f64) -> String {
        format!("{constant:.12} * n^({power}) * exp({rate:.12} n)")
    }
}

/// Hypotheses of the summation theorem checked at the located maximum.
#[derive(Clone, Debug, Serialize)]
pub struct HypothesisAudit {
    pub interior: bool,
    pub psi_positive: bool,
    pub hessian_positive: bool,
}

impl HypothesisAudit {
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.interior {
            out.push("maximizer is not interior");
        }
        if !self.psi_positive {
            out.push("psi(x0) is not positive");
        }
        if !self.hessian_positive {
            out.push("det(-H|V) is not positive");
        }
        out
    }
}

/// Assembles the estimate at an already located maximum.
pub fn estimate_at(problem: &LaplaceProblem, maximum: &SectionMaximum) -> Result<(AsymptoticEstimate, HypothesisAudit)> {
    let x0 = &maximum.x0;
    let h = problem.phi.hessian(x0);
    let det = hessian_restricted_det(&h, &problem.lattice.basis_f64())?;
    let psi = (problem.psi)(x0);
    let audit = HypothesisAudit {
        interior: x0.iter().all(|&v| v > 0.0 && v < 1.0),
        psi_positive: psi > 0.0 && psi.is_finite(),
        hessian_positive: det > 0.0 && det.is_finite(),
    };
    let failures = audit.failures();
    if !failures.is_empty() {
        return Err(Error::Hypothesis(failures.join("; ")));
    }
    let r = problem.lattice.rank();
    let vol_squared = problem.lattice.vol_squared();
    let ln_vol = 0.5 * crate::report::ln_rational(&vol_squared);
    let two_pi = 2.0 * std::f64::consts::PI;
    let b_power = problem.b.power.to_f64().unwrap();
    let ln_c = 0.5 * r as f64 * two_pi.ln() + psi.ln() - ln_vol - 0.5 * det.ln()
        + problem.b.constant.ln()
        + b_power * two_pi.ln();
    let constant = ln_c.exp();
    let poly_power = Rational64::new(r as i64, 2) + problem.b.power;
    let uniqueness = match &maximum.multistart {
        Some(m) if m.all_agree => Uniqueness::HeuristicUnique,
        _ => Uniqueness::Unverified,
    };
    let estimate = AsymptoticEstimate {
        constant,
        poly_power,
        exp_rate: maximum.value,
        x0: x0.clone(),
        det_neg_h_restricted: det,
        vol_squared,
        rank: r,
        multistart_agreement: maximum.multistart.clone(),
        uniqueness,
        symbolic: None,
        description: AsymptoticEstimate::describe(constant, poly_power, maximum.value),
    };
    Ok((estimate, audit))
}

/// Locates the maximum and assembles the Laplace estimate.
pub fn asymptotic_estimate(problem: &LaplaceProblem, opts: &MaximizeOptions) -> Result<AsymptoticEstimate> {
    problem.validate()?;
    let maximum = maximize_on_section(problem, opts)?;
    estimate_at(problem, &maximum).map(|(e, _)| e)
}

#[derive(Clone, Debug, Serialize)]
pub struct CosetSum {
    #[serde(serialize_with = "exact_rational")]
    pub value: BigRational,
    pub points: u64,
}

/// Default enumeration budget for exact coset sums, in search nodes.
pub const DEFAULT_CAP: u64 = 10_000_000;

struct Enumerator<'a, F> {
    n: i64,
    cols: Vec<Vec<(usize, i64)>>,
    closing: Vec<Vec<(usize, i64)>>,
    suffix_min: Vec<Vec<i64>>,
    suffix_max: Vec<Vec<i64>>,
    visit: &'a mut F,
    point: Vec<i64>,
    residual: Vec<i64>,
    points: u64,
    nodes: u64,
    cap: u64,
}

impl<F: FnMut(&[i64]) -> Result<()>> Enumerator<'_, F> {
    fn assign(&mut self, p: usize, v: i64) -> bool {
        self.point[p] = v;
        for &(j, c) in &self.cols[p] {
            self.residual[j] -= c * v;
        }
        self.cols[p]
            .iter()
            .all(|&(j, _)| self.residual[j] >= self.suffix_min[p + 1][j] && self.residual[j] <= self.suffix_max[p + 1][j])
    }

    fn unassign(&mut self, p: usize, v: i64) {
        for &(j, c) in &self.cols[p] {
            self.residual[j] += c * v;
        }
    }

    fn descend(&mut self, p: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(Error::budget("coset enumeration", format!("more than {} search nodes", self.cap), self.cap));
        }
        if p == self.point.len() {
            self.points += 1;
            return (self.visit)(&self.point);
        }
        if let Some(&(j, c)) = self.closing[p].first() {
            // The last coordinate of some constraint is forced.
            let r = self.residual[j];
            if r % c != 0 {
                return Ok(());
            }
            let v = r / c;
            if (0..=self.n).contains(&v) {
                if self.assign(p, v) {
                    self.descend(p + 1)?;
                }
                self.unassign(p, v);
            }
            return Ok(());
        }
        for v in 0..=self.n {
            if self.assign(p, v) {
                self.descend(p + 1)?;
            }
            self.unassign(p, v);
        }
        Ok(())
    }
}

/// Calls `visit` on every `ℓ ∈ {0..n}^N` with `constraints · ℓ = n · rhs`,
/// in lexicographic order, by backtracking with residual-range pruning.
/// Returns the number of points visited. `cap` bounds the number of search
/// nodes, so the work done is bounded whatever the size of the coset.
pub fn for_each_coset_point<F>(constraints: &[Vec<i64>], rhs: &[i64], n: u64, cap: u64, mut visit: F) -> Result<u64>
where
    F: FnMut(&[i64]) -> Result<()>,
{
    let dim = constraints.first().map_or(0, Vec::len);
    if constraints.len() != rhs.len() || constraints.iter().any(|r| r.len() != dim) {
        return Err(Error::Dimension("coset constraints are ragged".into()));
    }
    let ni = n as i64;
    let m = constraints.len();
    let mut cols = vec![Vec::new(); dim];
    let mut last = vec![None; m];
    for (j, row) in constraints.iter().enumerate() {
        for (p, &c) in row.iter().enumerate() {
            if c != 0 {
                cols[p].push((j, c));
                last[j] = Some(p);
            }
        }
    }
    let mut closing = vec![Vec::new(); dim];
    for (j, l) in last.iter().enumerate() {
        match l {
            Some(p) => closing[*p].push((j, constraints[j][*p])),
            None if rhs[j] != 0 && n > 0 => return Ok(0),
            None => {}
        }
    }
    let mut suffix_min = vec![vec![0i64; m]; dim + 1];
    let mut suffix_max = vec![vec![0i64; m]; dim + 1];
    for p in (0..dim).rev() {
        for j in 0..m {
            let c = constraints[j][p];
            suffix_min[p][j] = suffix_min[p + 1][j] + ni * c.min(0);
            suffix_max[p][j] = suffix_max[p + 1][j] + ni * c.max(0);
        }
    }
    let residual: Vec<i64> = rhs.iter().map(|&b| b * ni).collect();
    if residual
        .iter()
        .enumerate()
        .any(|(j, &r)| r < suffix_min[0][j] || r > suffix_max[0][j])
    {
        return Ok(0);
    }
    let mut e = Enumerator {
        n: ni,
        cols,
        closing,
        suffix_min,
        suffix_max,
        visit: &mut visit,
        point: vec![0; dim],
        residual,
        points: 0,
        nodes: 0,
        cap,
    };
    e.descend(0)?;
    Ok(e.points)
}

/// Exact `Σ term(ℓ)` over all `ℓ ∈ {0..n}^N` with `constraints · ℓ = n · rhs`.
pub fn exact_coset_sum<F>(mut term: F, constraints: &[Vec<i64>], rhs: &[i64], n: u64, cap: u64) -> Result<CosetSum>
where
    F: FnMut(&[i64]) -> Result<BigRational>,
{
    let mut value = BigRational::zero();
    let points = for_each_coset_point(constraints, rhs, n, cap, |l| {
        value += term(l)?;
        Ok(())
    })?;
    Ok(CosetSum { value, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::integer_kernel_basis;

    /// φ(x) = −Σ (x_i − w_i)².
    struct Bowl(Vec<f64>);

    impl SmoothField for Bowl {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            -x.iter().zip(&self.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            x.iter().zip(&self.0).map(|(a, b)| -2.0 * (a - b)).collect()
        }
        fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
            DMatrix::from_diagonal_element(x.len(), x.len(), -2.0)
        }
    }

    fn bowl_problem(w: Vec<f64>, constraints: Vec<Vec<i64>>, rhs: Vec<i64>) -> LaplaceProblem {
        let n = w.len();
        let lattice = integer_kernel_basis(&int_rows(&constraints), n);
        LaplaceProblem {
            phi: Box::new(Bowl(w)),
            psi: Box::new(|_| 1.0),
            lattice,
            constraints,
            rhs,
            offset: None,
            start: None,
            b: ExponentRecord { constant: 1.0, power: Rational64::from_integer(0) },
        }
    }

    #[test]
    fn quadratic_bowl_maximum_is_its_center() {
        // W = {x1 + x2 + x3 = 1}, w interior.
        let w = vec![0.2, 0.3, 0.5];
        let p = bowl_problem(w.clone(), vec![vec![1, 1, 1]], vec![1]);
        let opts = MaximizeOptions { multistart: 10, ..Default::default() };
        let m = maximize_on_section(&p, &opts).unwrap();
        for (a, b) in m.x0.iter().zip(&w) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(m.value.abs() < 1e-20);
        assert!(m.gradient_residual < 1e-12);
        assert!(m.multistart.unwrap().all_agree);
    }

    #[test]
    fn analytic_center_of_simplex() {
        let c = analytic_center(&[vec![1, 1, 1, 1]], &[1], 4).unwrap();
        for v in c {
            assert!((v - 0.25).abs() < 1e-10);
        }
        assert!(matches!(analytic_center(&[vec![1, 1]], &[3], 2), Err(Error::NoInteriorPoint)));
    }

    #[test]
    fn restricted_det_of_scaled_identity() {
        let h = DMatrix::from_diagonal_element(6, 6, -1.5);
        let basis = vec![vec![1.0, -1.0, 0.0, 0.0, 1.0, -1.0], vec![0.0, 1.0, -1.0, 1.0, -1.0, 0.0]];
        let det = hessian_restricted_det(&h, &basis).unwrap();
        assert!((det - 2.25).abs() < 1e-12);
        assert!(matches!(
            hessian_restricted_det(&h, &[basis[0].clone(), basis[0].clone()]),
            Err(Error::Dependent)
        ));
    }

    #[test]
    fn degenerate_rank_zero_problem() {
        // W = {x1 = 1/2... } expressed as 2x1 = 1, 2x2 = 1: a single point.
        let constraints = vec![vec![2, 0], vec![0, 2]];
        let mut p = bowl_problem(vec![0.5, 0.5], constraints, vec![1, 1]);
        p.psi = Box::new(|_| 3.0);
        p.b = ExponentRecord { constant: 2.0, power: Rational64::from_integer(0) };
        let e = asymptotic_estimate(&p, &MaximizeOptions::default()).unwrap();
        assert_eq!(e.rank, 0);
        assert!((e.constant - 6.0).abs() < 1e-12);
        assert_eq!(e.poly_power, Rational64::from_integer(0));
    }

    #[test]
    fn coset_sum_counts_k4_perfect_matchings() {
        let k4 = crate::graph::build_matrices(&crate::graph::families::complete(4));
        let one = |_: &[i64]| Ok(BigRational::from_integer(BigInt::from(1)));
        let s = exact_coset_sum(one, &k4.incidence, &[1; 4], 1, DEFAULT_CAP).unwrap();
        assert_eq!(s.points, 3);
        let s0 = exact_coset_sum(one, &k4.incidence, &[1; 4], 0, DEFAULT_CAP).unwrap();
        assert_eq!(s0.points, 1);
    }

    #[test]
    fn coset_sum_budget() {
        let rows = vec![vec![1, 1, 1, 1, 1, 1]];
        let one = |_: &[i64]| Ok(BigRational::from_integer(BigInt::from(1)));
        let err = exact_coset_sum(one, &rows, &[1], 100, 1000).unwrap_err();
        assert!(err.is_budget());
    }
}
