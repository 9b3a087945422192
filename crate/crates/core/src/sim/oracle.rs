//! Exact averages over every `n`-lift, by enumerating all fiber permutations.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Multigraph;
use crate::report::exact_rational;
use crate::sim::cycles::count_k_cycles;
use crate::sim::lift::Lift;
use crate::sim::matching::count_perfect_matchings;

pub const DEFAULT_ORACLE_CAP: u64 = 1_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub lifts: u64,
    #[serde(serialize_with = "exact_rational")]
    pub e_x: BigRational,
    #[serde(serialize_with = "exact_rational")]
    pub e_x2: BigRational,
    /// `E[Z_k]`, `k = 0..=kmax`.
    #[serde(skip)]
    pub e_z: Vec<BigRational>,
    /// `E[X Z_k]`, `k = 0..=kmax`.
    #[serde(skip)]
    pub e_xz: Vec<BigRational>,
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("a larger element");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// Calls `visit` on every `n`-lift of `graph`.
pub fn for_each_lift(graph: &Multigraph, n: usize, cap: u64, mut visit: impl FnMut(&Lift) -> Result<()>) -> Result<u64> {
    let h = graph.edge_count();
    let perms = permutations(n);
    let total = (perms.len() as f64).powi(h as i32);
    if total > cap as f64 {
        return Err(Error::budget("lift enumeration", format!("{total:.3e} lifts"), cap));
    }
    let mut digits = vec![0usize; h];
    let mut count = 0u64;
    loop {
        let lift = Lift::from_perms(graph, n, digits.iter().map(|&d| perms[d].clone()).collect())?;
        visit(&lift)?;
        count += 1;
        let Some(e) = digits.iter().rposition(|&d| d + 1 < perms.len()) else {
            return Ok(count);
        };
        digits[e] += 1;
        for d in &mut digits[e + 1..] {
            *d = 0;
        }
    }
}

/// Exact `E[X]`, `E[X²]`, `E[Z_k]` and `E[X Z_k]` over all lifts.
pub fn exhaustive_lift_oracle(graph: &Multigraph, n: usize, kmax: usize, cap: u64) -> Result<OracleReport> {
    let mut sx = BigInt::from(0);
    let mut sx2 = BigInt::from(0);
    let mut sz = vec![BigInt::from(0); kmax + 1];
    let mut sxz = vec![BigInt::from(0); kmax + 1];
    let lifts = for_each_lift(graph, n, cap, |lift| {
        let u = lift.to_ugraph();
        let x = BigInt::from(count_perfect_matchings(&u)?);
        let z = count_k_cycles(&u, kmax)?;
        for (k, &c) in z.iter().enumerate() {
            sz[k] += c;
            sxz[k] += &x * c;
        }
        sx2 += &x * &x;
        sx += x;
        Ok(())
    })?;
    let avg = |s: &BigInt| BigRational::new(s.clone(), BigInt::from(lifts));
    Ok(OracleReport {
        n,
        lifts,
        e_x: avg(&sx),
        e_x2: avg(&sx2),
        e_z: sz.iter().map(avg).collect(),
        e_xz: sxz.iter().map(avg).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;

    #[test]
    fn permutation_listing() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(1), vec![vec![0]]);
        assert_eq!(permutations(3)[1], vec![0, 2, 1]);
    }

    #[test]
    fn single_lifts() {
        let k4 = exhaustive_lift_oracle(&families::complete(4), 1, 3, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(k4.lifts, 1);
        assert_eq!(k4.e_x, BigRational::from_integer(3.into()));
        assert_eq!(k4.e_x2, BigRational::from_integer(9.into()));
        assert_eq!(k4.e_z[3], BigRational::from_integer(4.into()));
        let banana = exhaustive_lift_oracle(&families::parallel_edges(3), 1, 2, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(banana.e_x, BigRational::from_integer(3.into()));
    }
}
