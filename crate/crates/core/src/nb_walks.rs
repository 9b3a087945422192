//! Non-backtracking walks, short cycle statistics and the small subgraph
//! conditioning constant.
//!
//! `R` is indexed by directed edges `(e, i, j)`; `R[(e,i,j),(f,p,q)] = 1` iff
//! `p = j` and `f ≠ e`. Closed non-backtracking walks of length `k` number
//! `w_k = Tr(R^k)`. In a random lift the number of `k`-cycles is
//! asymptotically Poisson with mean `λ_k = w_k/(2k)`, and conditioning on a
//! perfect matching tilts it by `1 + δ_k`, `δ_k = (-1/(d-1))^k`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::det_bareiss;
use crate::first_moment::asymptotic_first_moment;
use crate::graph::{GraphMatrices, Multigraph};
use crate::laplace::MaximizeOptions;
use crate::report::{decimal12, int, rational_pow, SymbolicConstant};
use crate::second_moment::asymptotic_second_moment;
use crate::streams::{stream, DOMAIN_LIMIT_W};

/// The non-backtracking matrix.
#[derive(Clone, Debug)]
pub struct NBMatrix {
    /// Directed edges `(e, tail, head)`; edge `e` appears as `2e` (stored
    /// orientation) and `2e + 1` (reversed).
    pub directed: Vec<(usize, usize, usize)>,
    /// Successors of each directed edge.
    pub successors: Vec<Vec<usize>>,
}

impl NBMatrix {
    pub fn size(&self) -> usize {
        self.directed.len()
    }

    pub fn dense(&self) -> Vec<Vec<i64>> {
        let m = self.size();
        let mut out = vec![vec![0i64; m]; m];
        for (a, succ) in self.successors.iter().enumerate() {
            for &b in succ {
                out[a][b] = 1;
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.successors.iter().map(Vec::len).collect()
    }
}

pub fn nb_matrix(graph: &Multigraph) -> NBMatrix {
    let mut directed = Vec::with_capacity(2 * graph.edge_count());
    for (e, &(i, j)) in graph.edges().iter().enumerate() {
        directed.push((e, i, j));
        directed.push((e, j, i));
    }
    let successors = directed
        .iter()
        .map(|&(e, _, j)| {
            graph
                .incident_edges(j)
                .iter()
                .filter(|&&f| f != e)
                .map(|&f| 2 * f + usize::from(graph.edge(f).0 != j))
                .collect()
        })
        .collect();
    NBMatrix { directed, successors }
}

/// `w_1, ..., w_kmax` as `Tr(R^k)` by exact integer powers.
pub fn walk_counts_trace(graph: &Multigraph, kmax: usize) -> Result<Vec<u128>> {
    let r = nb_matrix(graph);
    let m = r.size();
    // power[a][b] = number of NB walks of length k from a to b
    let mut power: Vec<Vec<u128>> = (0..m)
        .map(|a| {
            let mut row = vec![0u128; m];
            for &b in &r.successors[a] {
                row[b] += 1;
            }
            row
        })
        .collect();
    let mut out = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        if k > 1 {
            let mut next = vec![vec![0u128; m]; m];
            for (a, row) in power.iter().enumerate() {
                for (c, &v) in row.iter().enumerate() {
                    if v == 0 {
                        continue;
                    }
                    for &b in &r.successors[c] {
                        next[a][b] = next[a][b]
                            .checked_add(v)
                            .ok_or_else(|| Error::budget("walk counts", format!("overflow at k = {k}"), u128::MAX as u64))?;
                    }
                }
            }
            power = next;
        }
        out.push((0..m).map(|a| power[a][a]).sum());
    }
    Ok(out)
}

/// The eigenvalues of `R` for a `d`-regular graph: `β±` roots of
/// `x² - α x + (d-1)` for each adjacency eigenvalue `α`, then `+1` and `-1`
/// each `g(d-2)/2` times.
pub fn nb_spectrum(graph: &Multigraph) -> Result<Vec<Complex64>> {
    let d = graph.require_regular(3)?;
    let m = GraphMatrices::build(graph);
    let mut out = Vec::with_capacity(2 * graph.edge_count());
    let c = (d - 1) as f64;
    for &a in &m.alphas {
        let disc = Complex64::new(a * a - 4.0 * c, 0.0).sqrt();
        out.push((Complex64::new(a, 0.0) + disc) / 2.0);
        out.push((Complex64::new(a, 0.0) - disc) / 2.0);
    }
    let rest = graph.vertex_count() * (d - 2) / 2;
    out.extend(std::iter::repeat_n(Complex64::new(1.0, 0.0), rest));
    out.extend(std::iter::repeat_n(Complex64::new(-1.0, 0.0), rest));
    Ok(out)
}

/// `w_k = ½ g(d-2)(1 + (-1)^k) + Σ_i (β_i^+)^k + (β_i^-)^k`, rounded.
pub fn walk_counts_spectral(graph: &Multigraph, kmax: usize) -> Result<Vec<i128>> {
    let spectrum = nb_spectrum(graph)?;
    (1..=kmax)
        .map(|k| {
            let s: Complex64 = spectrum.iter().map(|b| b.powu(k as u32)).sum();
            let rounded = s.re.round();
            let scale = spectrum.iter().map(|b| b.norm().powi(k as i32)).sum::<f64>().max(1.0);
            if (s.re - rounded).abs() > 1e-6 * scale || s.im.abs() > 1e-6 * scale {
                return Err(Error::Inconsistent(format!("spectral w_{k} = {s} is not an integer")));
            }
            Ok(rounded as i128)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkCounts {
    /// `w_1..w_kmax` from traces.
    pub trace: Vec<u128>,
    /// The same from the spectrum, for regular graphs.
    pub spectral: Option<Vec<i128>>,
    pub agree: Option<bool>,
}

/// Both evaluations of the walk counts; an error if they disagree.
pub fn walk_counts(graph: &Multigraph, kmax: usize) -> Result<WalkCounts> {
    let trace = walk_counts_trace(graph, kmax)?;
    let spectral = match graph.regular_degree() {
        Some(d) if d >= 3 => Some(walk_counts_spectral(graph, kmax)?),
        _ => None,
    };
    let agree = spectral
        .as_ref()
        .map(|s| s.iter().zip(&trace).all(|(&a, &b)| a >= 0 && a as u128 == b));
    if agree == Some(false) {
        return Err(Error::Inconsistent("trace and spectral walk counts disagree".into()));
    }
    Ok(WalkCounts { trace, spectral, agree })
}

/// Per-`k` statistics.
#[derive(Clone, Debug, Serialize)]
pub struct CycleRow {
    pub k: usize,
    pub w_k: String,
    #[serde(serialize_with = "crate::report::exact_rational")]
    pub lambda_k: BigRational,
    #[serde(serialize_with = "ratio64")]
    pub delta_k: Rational64,
    #[serde(serialize_with = "crate::report::exact_rational")]
    pub mu_k: BigRational,
}

fn ratio64<S: serde::Serializer>(r: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl CycleRow {
    pub fn lambda(&self) -> f64 {
        self.lambda_k.to_f64().unwrap()
    }

    pub fn delta(&self) -> f64 {
        self.delta_k.to_f64().unwrap()
    }

    pub fn mu(&self) -> f64 {
        self.mu_k.to_f64().unwrap()
    }
}

/// Cycle statistics `λ_k, δ_k, μ_k` for `k = 1..kmax`.
#[derive(Clone, Debug, Serialize)]
pub struct CycleSpectrum {
    pub kmax: usize,
    pub degree: usize,
    pub rows: Vec<CycleRow>,
    /// Upper bound on `Σ_{k>kmax} λ_k δ_k²`.
    pub tail_bound: String,
}

impl CycleSpectrum {
    pub fn row(&self, k: usize) -> Option<&CycleRow> {
        self.rows.get(k.checked_sub(1)?)
    }

    /// Partial sums `Σ_{k≤K} λ_k δ_k²`, `K = 1..kmax`.
    pub fn partial_sums(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.rows
            .iter()
            .map(|r| {
                acc += r.lambda() * r.delta() * r.delta();
                acc
            })
            .collect()
    }
}

pub fn cycle_series(graph: &Multigraph, kmax: usize) -> Result<CycleSpectrum> {
    let d = graph.require_regular(3)?;
    let counts = walk_counts(graph, kmax)?;
    let dm1 = (d - 1) as i64;
    let rows = counts
        .trace
        .iter()
        .enumerate()
        .map(|(idx, &w)| {
            let k = idx + 1;
            let lambda = BigRational::new(BigInt::from(w), BigInt::from(2 * k));
            let delta = Rational64::new(if k % 2 == 0 { 1 } else { -1 }, dm1.pow(k as u32));
            let one_plus = BigRational::new(BigInt::from(delta.numer() + delta.denom()), BigInt::from(*delta.denom()));
            CycleRow {
                k,
                w_k: w.to_string(),
                mu_k: &lambda * one_plus,
                lambda_k: lambda,
                delta_k: delta,
            }
        })
        .collect();
    // w_k ≤ 2h (d-1)^k, so the tail is at most h (d-1)^{-kmax} / ((kmax+1)(d-2)).
    let h = graph.edge_count() as f64;
    let c = (d - 1) as f64;
    let tail = h * c.powi(-(kmax as i32)) / ((kmax + 1) as f64 * (c - 1.0));
    Ok(CycleSpectrum {
        kmax,
        degree: d,
        rows,
        tail_bound: decimal12(tail),
    })
}

/// The small subgraph conditioning constant `exp(Σ_k λ_k δ_k²)` evaluated
/// as a determinant over `R` and as a product over the adjacency spectrum.
#[derive(Clone, Debug, Serialize)]
pub struct SscConstant {
    /// `(d-1)^{dg} det((d-1)² I - R)^{-1/2}`; its square is exact.
    pub determinant_form: SymbolicConstant,
    /// `(d-1)^{dg-g/2} ((d-1)⁴-1)^{-(d-2)g/4} ∏_i ((d-1)³+1-(d-1)α_i)^{-1/2}`.
    pub spectral_value: String,
    pub relative_difference: String,
    pub agree: bool,
    /// `exp` of the partial sums of `λ_k δ_k²`.
    pub partial_products: Vec<String>,
    pub partial_sums_monotone: bool,
}

impl SscConstant {
    pub fn value(&self) -> f64 {
        self.determinant_form.value()
    }
}

/// Agreement required between the two evaluations.
pub const SSC_TOLERANCE: f64 = 1e-9;

pub fn ssc_spectral(graph: &Multigraph) -> Result<f64> {
    let d = graph.require_regular(3)?;
    let m = GraphMatrices::build(graph);
    let (g, c) = (graph.vertex_count() as f64, (d - 1) as f64);
    let dg = d as f64 * g;
    let mut ln = (dg - g / 2.0) * c.ln() - (d as f64 - 2.0) * g / 4.0 * (c.powi(4) - 1.0).ln();
    for &a in &m.alphas {
        let f = c.powi(3) + 1.0 - c * a;
        if f <= 0.0 {
            return Err(Error::Inconsistent(format!("spectral factor {f} is not positive")));
        }
        ln -= 0.5 * f.ln();
    }
    Ok(ln.exp())
}

pub fn ssc_constant(graph: &Multigraph, kmax: usize) -> Result<SscConstant> {
    let d = graph.require_regular(3)?;
    let r = nb_matrix(graph);
    let c2 = ((d - 1) * (d - 1)) as i64;
    let mut shifted = r.dense();
    for (a, row) in shifted.iter_mut().enumerate() {
        for (b, x) in row.iter_mut().enumerate() {
            *x = if a == b { c2 } else { 0 } - *x;
        }
    }
    let det = det_bareiss(&crate::exact::int_rows(&shifted));
    if det <= BigInt::zero() {
        return Err(Error::Inconsistent("det((d-1)^2 I - R) is not positive".into()));
    }
    let dg = (d * graph.vertex_count()) as i64;
    let squared = rational_pow(&int(d as i64 - 1), 2 * dg) / BigRational::from_integer(det);
    let determinant_form = SymbolicConstant::new(squared, 0);
    let spectral = ssc_spectral(graph)?;
    let rel = (determinant_form.value() / spectral - 1.0).abs();

    let spectrum = cycle_series(graph, kmax)?;
    let sums = spectrum.partial_sums();
    let bound = determinant_form.ln_value() + 1e-9;
    let monotone = sums.windows(2).all(|w| w[1] >= w[0]) && sums.iter().all(|&s| s <= bound);
    Ok(SscConstant {
        determinant_form,
        spectral_value: decimal12(spectral),
        relative_difference: format!("{rel:.3e}"),
        agree: rel < SSC_TOLERANCE,
        partial_products: sums.iter().map(|s| decimal12(s.exp())).collect(),
        partial_sums_monotone: monotone,
    })
}

/// Comparison of `lim E[X²]/E[X]²` with the conditioning constant.
#[derive(Clone, Debug, Serialize)]
pub struct A4Report {
    pub lhs: SymbolicConstant,
    pub rhs: SymbolicConstant,
    /// `p₂ - 2p₁`; must vanish.
    pub power_difference: String,
    /// `φ₂(x₀) - 2φ₁(x₀)`; must vanish.
    pub rate_difference: String,
    pub relative_difference: String,
    pub pass: bool,
}

pub const A4_TOLERANCE: f64 = 1e-6;

/// Compares the two sides; `pass` requires matching powers and rates and a
/// relative difference below `tol`.
pub fn a4_compare(
    lhs: SymbolicConstant,
    rhs: SymbolicConstant,
    power_difference: Rational64,
    rate_difference: f64,
    tol: f64,
) -> A4Report {
    let rel = (lhs.value() / rhs.value() - 1.0).abs();
    let pass = power_difference == Rational64::zero() && rate_difference.abs() < 1e-9 && rel < tol;
    A4Report {
        lhs,
        rhs,
        power_difference: power_difference.to_string(),
        rate_difference: format!("{rate_difference:.3e}"),
        relative_difference: format!("{rel:.3e}"),
        pass,
    }
}

pub fn a4_check(graph: &Multigraph, opts: &MaximizeOptions) -> Result<A4Report> {
    let first = asymptotic_first_moment(graph, opts)?.estimate;
    let second = asymptotic_second_moment(graph, opts)?.estimate;
    let (Some(c1), Some(c2)) = (&first.symbolic, &second.symbolic) else {
        return Err(Error::Inconsistent("moment constants lack an exact form".into()));
    };
    let lhs = c2.div(&c1.mul(c1));
    let rhs = ssc_constant(graph, 20)?.determinant_form;
    Ok(a4_compare(
        lhs,
        rhs,
        second.poly_power - first.poly_power * 2,
        second.exp_rate - 2.0 * first.exp_rate,
        A4_TOLERANCE,
    ))
}

/// A Poisson draw: sequential inversion for small means, `rand_distr` otherwise.
pub fn poisson<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < 30.0 {
        let u: f64 = rng.random();
        let mut p = (-lambda).exp();
        let mut cdf = p;
        let mut k = 0u64;
        while u > cdf && k < 1000 {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
        }
        return k;
    }
    Poisson::new(lambda).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Samples of `W = ∏_k (1+δ_k)^{Y_k} e^{-λ_k δ_k}` with independent
/// `Y_k ~ Po(λ_k)`, truncated at the spectrum's `kmax`. Sample `t` uses the
/// streams keyed by `(seed, k, t)`.
pub fn sample_limit_w(spectrum: &CycleSpectrum, count: usize, seed: u64) -> Vec<f64> {
    let params: Vec<(usize, f64, f64)> = spectrum
        .rows
        .iter()
        .filter(|r| r.lambda() > 0.0)
        .map(|r| (r.k, r.lambda(), r.delta()))
        .collect();
    sample_product(&params, count, seed)
}

/// `(k, λ_k, δ_k)` triples to samples of the truncated product.
pub fn sample_product(params: &[(usize, f64, f64)], count: usize, seed: u64) -> Vec<f64> {
    (0..count)
        .into_par_iter()
        .map(|t| {
            let mut ln = 0.0;
            for &(k, lambda, delta) in params {
                let mut rng = stream(seed, &[DOMAIN_LIMIT_W, k as u64, t as u64]);
                let y = poisson(&mut rng, lambda);
                ln += y as f64 * delta.ln_1p() - lambda * delta;
            }
            ln.exp()
        })
        .collect()
}
