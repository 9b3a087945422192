use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Multigraph;
use crate::nb_walks::cycle_series;
use crate::report::decimal_f64;
use crate::sim::cycles::count_k_cycles;
use crate::sim::lift::sample_lift;
use crate::sim::matching::count_perfect_matchings;
use crate::stats::{mean_estimate, ratio_estimate, variance_estimate, Estimate};

/// One sampled lift.
#[derive(Clone, Debug, Serialize)]
pub struct Trial {
    pub trial: u64,
    pub x: u128,
    /// `Z_k`, `k = 0..=kmax`.
    pub z: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleEstimates {
    pub k: usize,
    pub mean: Estimate,
    pub variance: Estimate,
    /// `E[X Z_k] / E[X]`.
    pub tilted_mean: Estimate,
    /// `λ_k` and `μ_k` for regular graphs.
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    #[serde(serialize_with = "opt_decimal")]
    pub z_mean: Option<f64>,
    #[serde(serialize_with = "opt_decimal")]
    pub z_variance: Option<f64>,
    #[serde(serialize_with = "opt_decimal")]
    pub z_tilted: Option<f64>,
}

fn opt_decimal<S: serde::Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => decimal_f64(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimReport {
    pub trials: usize,
    pub n: usize,
    pub seed: u64,
    pub kmax: usize,
    pub mean_x: Estimate,
    pub mean_x2: Estimate,
    pub cycles: Vec<CycleEstimates>,
    #[serde(skip)]
    pub per_trial: Vec<Trial>,
}

impl SimReport {
    pub fn cycle(&self, k: usize) -> Option<&CycleEstimates> {
        self.cycles.iter().find(|c| c.k == k)
    }

    pub fn x_values(&self) -> Vec<f64> {
        self.per_trial.iter().map(|t| t.x as f64).collect()
    }

    /// One row per trial: `trial,X,Z_2,...,Z_kmax`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,X");
        for k in 2..=self.kmax {
            out.push_str(&format!(",Z_{k}"));
        }
        out.push('\n');
        for t in &self.per_trial {
            out.push_str(&format!("{},{}", t.trial, t.x));
            for k in 2..=self.kmax {
                out.push_str(&format!(",{}", t.z[k]));
            }
            out.push('\n');
        }
        out
    }
}

/// Samples one lift and counts its matchings and short cycles.
pub fn run_trial(graph: &Multigraph, n: usize, kmax: usize, seed: u64, trial: u64) -> Result<Trial> {
    let lift = sample_lift(graph, n, seed, trial)?;
    let u = lift.to_ugraph();
    if !lift.invariants_hold(graph, &u) {
        return Err(Error::Inconsistent(format!("trial {trial}: lift degrees or edge count are wrong")));
    }
    Ok(Trial {
        trial,
        x: count_perfect_matchings(&u)?,
        z: count_k_cycles(&u, kmax)?,
    })
}

/// Monte Carlo estimates of `E[X]`, `E[X²]`, `E[Z_k]`, `Var Z_k` and
/// `E[X Z_k]/E[X]`. Trials run in parallel on the current rayon pool; results
/// depend only on `(seed, trial)`.
pub fn monte_carlo_moments(graph: &Multigraph, n: usize, trials: usize, kmax: usize, seed: u64) -> Result<SimReport> {
    if trials < 2 {
        return Err(Error::InvalidConfig("at least two trials are needed".into()));
    }
    let per_trial: Vec<Trial> = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(graph, n, kmax, seed, t))
        .collect::<Result<_>>()?;
    let x: Vec<f64> = per_trial.iter().map(|t| t.x as f64).collect();
    let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
    let spectrum = match graph.regular_degree() {
        Some(d) if d >= 3 => Some(cycle_series(graph, kmax.max(1))?),
        _ => None,
    };
    let cycles = (2..=kmax)
        .map(|k| {
            let z: Vec<f64> = per_trial.iter().map(|t| t.z[k] as f64).collect();
            let xz: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a * b).collect();
            let mean = mean_estimate(&z);
            let variance = variance_estimate(&z);
            let tilted_mean = ratio_estimate(&xz, &x);
            let row = spectrum.as_ref().and_then(|s| s.row(k));
            let lambda = row.map(|r| r.lambda());
            let mu = row.map(|r| r.mu());
            CycleEstimates {
                k,
                z_mean: lambda.map(|l| mean.z_score(l)),
                z_variance: lambda.map(|l| variance.z_score(l)),
                z_tilted: mu.map(|m| tilted_mean.z_score(m)),
                mean,
                variance,
                tilted_mean,
                lambda,
                mu,
            }
        })
        .collect();
    Ok(SimReport {
        trials,
        n,
        seed,
        kmax,
        mean_x: mean_estimate(&x),
        mean_x2: mean_estimate(&x2),
        cycles,
        per_trial,
    })
}
