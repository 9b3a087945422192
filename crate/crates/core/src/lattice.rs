//! Integer lattices: kernels, covolumes, quotient orders and the two moment
//! lattices of a multigraph.
//!
//! All volumes are carried squared, as exact rationals, so no irrational
//! number is ever represented.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, det_bareiss, gram_matrix, int_rows, IntRows};
use crate::graph::{GraphMatrices, Multigraph};
use crate::report::{exact_rational, int_matrix};

/// A lattice given by a basis of integer vectors in `Z^N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactLattice {
    pub ambient_dim: usize,
    #[serde(serialize_with = "int_matrix")]
    pub basis: IntRows,
    #[serde(serialize_with = "crate::report::big_int")]
    pub gram_det: BigInt,
}

impl ExactLattice {
    pub fn from_basis(ambient_dim: usize, basis: IntRows) -> Result<Self> {
        if basis.iter().any(|v| v.len() != ambient_dim) {
            return Err(Error::Dimension("basis vector length differs from ambient dimension".into()));
        }
        let gram_det = gram_determinant(&basis);
        if gram_det.is_zero() {
            return Err(Error::Dependent);
        }
        Ok(ExactLattice {
            ambient_dim,
            basis,
            gram_det,
        })
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Squared covolume; equal to the Gram determinant of any basis.
    pub fn vol_squared(&self) -> BigRational {
        BigRational::from_integer(self.gram_det.clone())
    }

    pub fn basis_f64(&self) -> Vec<Vec<f64>> {
        self.basis
            .iter()
            .map(|v| v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect())
            .collect()
    }

    /// Whether the integer combination `coeffs · basis` is `v`.
    pub fn combination(&self, coeffs: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.ambient_dim];
        for (c, v) in coeffs.iter().zip(&self.basis) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
        out
    }
}

/// Gram determinant of a list of integer vectors; zero iff they are dependent.
pub fn gram_determinant(vectors: &[Vec<BigInt>]) -> BigInt {
    det_bareiss(&gram_matrix(vectors))
}

/// Saturated basis of the integer kernel of `matrix` (an `m x N` matrix).
pub fn integer_kernel_basis(matrix: &[Vec<BigInt>], ambient_dim: usize) -> ExactLattice {
    let basis = exact::integer_kernel(matrix, ambient_dim);
    let gram_det = gram_determinant(&basis);
    ExactLattice {
        ambient_dim,
        basis,
        gram_det,
    }
}

fn require_independent(spanning: &[Vec<BigInt>]) -> Result<BigInt> {
    let gram = gram_determinant(spanning);
    if gram.is_zero() {
        Err(Error::Dependent)
    } else {
        Ok(gram)
    }
}

/// Order of `L / L0`, where `L0` is the integer span of `spanning` and `L`
/// the integer points of its real span: the product of the Smith invariants.
pub fn quotient_order(spanning: &[Vec<BigInt>]) -> Result<BigInt> {
    require_independent(spanning)?;
    Ok(exact::smith_invariants(spanning).into_iter().product())
}

/// Counts the solutions `t in (Q/Z)^m` of `sum_i t_i x_i = 0 mod 1` directly.
/// Every solution has denominators dividing the largest Smith invariant, so
/// the search runs over that grid. Exponential; `cap` bounds the grid size.
pub fn quotient_order_by_enumeration(spanning: &[Vec<BigInt>], cap: u64) -> Result<BigInt> {
    require_independent(spanning)?;
    let invariants = exact::smith_invariants(spanning);
    let largest = invariants
        .last()
        .cloned()
        .unwrap_or_else(BigInt::one)
        .to_u64()
        .ok_or_else(|| Error::budget("quotient enumeration", "unbounded", cap))?;
    let m = spanning.len();
    let grid = (largest as f64).powi(m as i32);
    if grid > cap as f64 {
        return Err(Error::budget("quotient enumeration", grid, cap));
    }
    let n = spanning.first().map_or(0, Vec::len);
    let cols: Vec<Vec<i64>> = (0..n)
        .map(|j| {
            spanning
                .iter()
                .map(|x| (&x[j] % BigInt::from(largest)).to_i64().unwrap())
                .collect()
        })
        .collect();
    let modulus = largest as i64;
    let mut t = vec![0i64; m];
    let mut count = 0u64;
    loop {
        if cols
            .iter()
            .all(|col| col.iter().zip(&t).map(|(a, b)| a * b).sum::<i64>().rem_euclid(modulus) == 0)
        {
            count += 1;
        }
        let mut k = 0;
        loop {
            if k == m {
                return Ok(BigInt::from(count));
            }
            t[k] += 1;
            if t[k] < modulus {
                break;
            }
            t[k] = 0;
            k += 1;
        }
    }
}

/// The lattice `L^⊥ = V^⊥ ∩ Z^N` of a spanning set together with the duality data.
#[derive(Clone, Debug, Serialize)]
pub struct LatticeDuality {
    pub m: usize,
    pub perp_lattice: ExactLattice,
    /// Saturation `V ∩ Z^N` of the spanning set.
    pub span_lattice: ExactLattice,
    #[serde(serialize_with = "crate::report::big_int")]
    pub q: BigInt,
    #[serde(serialize_with = "exact_rational")]
    pub vol0_squared: BigRational,
}

impl LatticeDuality {
    /// `Vol(L0)^2 / q^2`.
    pub fn predicted_perp_vol_squared(&self) -> BigRational {
        &self.vol0_squared / BigRational::from_integer(&self.q * &self.q)
    }
}

pub fn perp_lattice_volume(spanning: &[Vec<BigInt>]) -> Result<LatticeDuality> {
    let vol0 = require_independent(spanning)?;
    let n = spanning.first().map_or(0, Vec::len);
    let perp = integer_kernel_basis(spanning, n);
    if perp.rank() + spanning.len() != n {
        return Err(Error::Inconsistent(format!(
            "perp lattice rank {} with {} spanning vectors in dimension {n}",
            perp.rank(),
            spanning.len()
        )));
    }
    let span_lattice = integer_kernel_basis(&perp.basis, n);
    let q = quotient_order(spanning)?;
    let duality = LatticeDuality {
        m: spanning.len(),
        perp_lattice: perp,
        span_lattice,
        q,
        vol0_squared: BigRational::from_integer(vol0),
    };
    if duality.perp_lattice.gram_det != duality.span_lattice.gram_det {
        return Err(Error::Inconsistent(format!(
            "Vol(L)^2 = {} but Vol(L^perp)^2 = {}",
            duality.span_lattice.gram_det, duality.perp_lattice.gram_det
        )));
    }
    if duality.predicted_perp_vol_squared() != duality.perp_lattice.vol_squared() {
        return Err(Error::Inconsistent(format!(
            "Vol(L0)^2 / q^2 = {} but Vol(L^perp)^2 = {}",
            duality.predicted_perp_vol_squared(),
            duality.perp_lattice.gram_det
        )));
    }
    Ok(duality)
}

/// The first-moment lattice `{ν ∈ Z^E : Âν = 0}` with its closed-form covolume.
#[derive(Clone, Debug, Serialize)]
pub struct FirstMomentLattice {
    pub lattice: ExactLattice,
    pub bipartite: bool,
    pub expected_rank: usize,
    #[serde(serialize_with = "exact_rational")]
    pub closed_form_vol_squared: BigRational,
}

pub fn first_moment_lattice(graph: &Multigraph) -> Result<FirstMomentLattice> {
    let g = graph.vertex_count();
    let h = graph.edge_count();
    let m = GraphMatrices::build(graph);
    let incidence = int_rows(&m.incidence);
    let lattice = integer_kernel_basis(&incidence, h);
    let bipartite = graph.is_bipartite();
    let plus: Vec<Vec<i64>> = (0..g)
        .map(|i| (0..g).map(|j| m.adjacency[i][j] + m.degree[i][j]).collect())
        .collect();
    let (expected_rank, closed_form) = if bipartite {
        let trimmed: Vec<Vec<i64>> = plus[..g - 1].iter().map(|row| row[..g - 1].to_vec()).collect();
        (h + 1 - g, BigRational::from_integer(det_bareiss(&int_rows(&trimmed))))
    } else {
        (
            h - g,
            BigRational::new(det_bareiss(&int_rows(&plus)), BigInt::from(4)),
        )
    };
    if lattice.rank() != expected_rank {
        return Err(Error::Inconsistent(format!(
            "first-moment lattice has rank {} but closed form predicts {expected_rank}",
            lattice.rank()
        )));
    }
    if lattice.vol_squared() != closed_form {
        return Err(Error::Inconsistent(format!(
            "first-moment lattice Vol^2 = {} but closed form gives {closed_form}",
            lattice.gram_det
        )));
    }
    Ok(FirstMomentLattice {
        lattice,
        bipartite,
        expected_rank,
        closed_form_vol_squared: closed_form,
    })
}

/// Coordinates `(i, e, f)` of the pair state space: vertex `i` and two edges
/// `e, f` at `i`, ordered lexicographically by `(i, e, f)` with edges in
/// index order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairIndex {
    triples: Vec<(usize, usize, usize)>,
    /// `offsets[i]` is the first coordinate of vertex `i`.
    offsets: Vec<usize>,
    incident: Vec<Vec<usize>>,
}

impl PairIndex {
    pub fn new(graph: &Multigraph) -> Self {
        let mut triples = Vec::new();
        let mut offsets = Vec::new();
        let mut incident = Vec::new();
        for i in 0..graph.vertex_count() {
            offsets.push(triples.len());
            let edges = graph.incident_edges(i).to_vec();
            for &e in &edges {
                for &f in &edges {
                    triples.push((i, e, f));
                }
            }
            incident.push(edges);
        }
        PairIndex {
            triples,
            offsets,
            incident,
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triple(&self, k: usize) -> (usize, usize, usize) {
        self.triples[k]
    }

    pub fn triples(&self) -> &[(usize, usize, usize)] {
        &self.triples
    }

    pub fn incident(&self, i: usize) -> &[usize] {
        &self.incident[i]
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len()
    }

    /// Coordinate of `(i, e, f)`; panics if `e` or `f` is not incident to `i`.
    pub fn coord(&self, i: usize, e: usize, f: usize) -> usize {
        let edges = &self.incident[i];
        let d = edges.len();
        let pe = edges.iter().position(|&x| x == e).expect("edge e incident to i");
        let pf = edges.iter().position(|&x| x == f).expect("edge f incident to i");
        self.offsets[i] + pe * d + pf
    }
}

/// The `g + 3h` linear forms cutting out the span of the second-moment
/// lattice: one vertex-total row per vertex, then for each edge `ε` the
/// directed rows for `(ε, ε)`, `(ε, f≠ε)` and `(e≠ε, ε)` coordinates.
pub fn pair_constraints(graph: &Multigraph, index: &PairIndex) -> Vec<Vec<i64>> {
    let n = index.len();
    let h = graph.edge_count();
    let mut rows = Vec::with_capacity(graph.vertex_count() + 3 * h);
    for j in 0..graph.vertex_count() {
        rows.push(
            index
                .triples()
                .iter()
                .map(|&(i, _, _)| i64::from(i == j))
                .collect(),
        );
    }
    for kind in 1..=3 {
        for eps in 0..h {
            let mut row = vec![0i64; n];
            for (k, &(i, e, f)) in index.triples().iter().enumerate() {
                let hit = match kind {
                    1 => e == eps && f == eps,
                    2 => e == eps && f != eps,
                    _ => e != eps && f == eps,
                };
                if hit {
                    row[k] = graph.orientation(i, eps);
                }
            }
            rows.push(row);
        }
    }
    rows
}

/// The second-moment lattice with its constraint system and, for
/// non-bipartite graphs, the closed-form covolume.
#[derive(Clone, Debug, Serialize)]
pub struct SecondMomentLattice {
    pub lattice: ExactLattice,
    pub degree: usize,
    pub bipartite: bool,
    /// Rank predicted by the closed form (non-bipartite) or by `d²g − g − 3h + 2` (bipartite).
    pub expected_rank: usize,
    pub rank_matches_expected: bool,
    #[serde(serialize_with = "crate::report::opt_exact_rational")]
    pub closed_form_vol_squared: Option<BigRational>,
    #[serde(skip)]
    pub constraints: Vec<Vec<i64>>,
    #[serde(skip)]
    pub index: PairIndex,
    pub notes: Vec<String>,
}

fn pow_rational(base: i64, exp: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(base));
    if exp >= 0 {
        num_traits::pow(b, exp as usize)
    } else {
        num_traits::pow(b.recip(), (-exp) as usize)
    }
}

pub fn second_moment_lattice(graph: &Multigraph) -> Result<SecondMomentLattice> {
    let d = graph.require_regular(3)?;
    let g = graph.vertex_count();
    let h = graph.edge_count();
    let index = PairIndex::new(graph);
    let constraints = pair_constraints(graph, &index);
    let lattice = integer_kernel_basis(&int_rows(&constraints), index.len());
    let bipartite = graph.is_bipartite();
    let mut notes = Vec::new();
    let (expected_rank, closed_form) = if bipartite {
        notes.push(
            "bipartite graph: no closed form for the covolume; kernel value reported".to_string(),
        );
        (d * d * g + 2 - g - 3 * h, None)
    } else {
        let m = GraphMatrices::build(graph);
        let di = d as i64;
        let shifted = |c: i64, sign: i64| -> BigInt {
            let rows: Vec<Vec<i64>> = (0..g)
                .map(|i| {
                    (0..g)
                        .map(|j| sign * m.adjacency[i][j] + if i == j { c } else { 0 })
                        .collect()
                })
                .collect();
            det_bareiss(&int_rows(&rows))
        };
        let plus = shifted(di, 1);
        let minus = shifted(di * (2 * di - 3), -1);
        // Vol^2 = 2^(3h-3g-4) (d(d-2))^(h-g) det(dI+A)^2 det(d(2d-3)I-A)
        let (g64, h64) = (g as i64, h as i64);
        let vol2 = pow_rational(2, 3 * h64 - 3 * g64 - 4)
            * pow_rational(di * (di - 2), h64 - g64)
            * BigRational::from_integer(&plus * &plus * minus);
        (d * d * g - g - 3 * h, Some(vol2))
    };
    let rank_matches_expected = lattice.rank() == expected_rank;
    if !bipartite && !rank_matches_expected {
        return Err(Error::Inconsistent(format!(
            "second-moment lattice rank {} differs from {expected_rank}",
            lattice.rank()
        )));
    }
    if bipartite && !rank_matches_expected {
        notes.push(format!(
            "kernel rank {} differs from the presumed d^2 g - g - 3h + 2 = {expected_rank}",
            lattice.rank()
        ));
    }
    if let Some(cf) = &closed_form {
        if *cf != lattice.vol_squared() {
            return Err(Error::Inconsistent(format!(
                "second-moment Vol^2 = {} but closed form gives {cf}",
                lattice.gram_det
            )));
        }
    }
    Ok(SecondMomentLattice {
        lattice,
        degree: d,
        bipartite,
        expected_rank,
        rank_matches_expected,
        closed_form_vol_squared: closed_form,
        constraints,
        index,
        notes,
    })
}

/// Sign-normalized copy of a vector divided by the gcd of its entries.
pub fn primitive(v: &[BigInt]) -> Vec<BigInt> {
    use num_integer::Integer;
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    let sign = v.iter().find(|x| !x.is_zero()).map_or(1, |x| if x.is_negative() { -1 } else { 1 });
    v.iter().map(|x| x / &g * sign).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn incidence_rows(graph: &Multigraph) -> IntRows {
        int_rows(&GraphMatrices::build(graph).incidence)
    }

    #[test]
    fn kernel_ranks() {
        let k4 = incidence_rows(&complete(4));
        assert_eq!(integer_kernel_basis(&k4, 6).rank(), 2);
        let ones = int_rows(&[vec![1, 1, 1]]);
        assert_eq!(integer_kernel_basis(&ones, 3).rank(), 2);
        let banana = incidence_rows(&parallel_edges(3));
        assert_eq!(integer_kernel_basis(&banana, 3).rank(), 2);
        let full = int_rows(&[vec![1, 0], vec![0, 1]]);
        assert_eq!(integer_kernel_basis(&full, 2).rank(), 0);
    }

    #[test]
    fn gram_determinants() {
        assert_eq!(gram_determinant(&incidence_rows(&complete(4))), big(48));
        let banana = incidence_rows(&parallel_edges(3));
        assert_eq!(gram_determinant(&banana[..1]), big(3));
        let e = int_rows(&[vec![1, 0], vec![0, 1]]);
        assert_eq!(gram_determinant(&e), big(1));
        assert!(gram_determinant(&banana).is_zero());
    }

    #[test]
    fn quotient_orders() {
        assert_eq!(quotient_order(&incidence_rows(&complete(4))).unwrap(), big(2));
        assert_eq!(quotient_order(&incidence_rows(&petersen())).unwrap(), big(2));
        let banana = incidence_rows(&parallel_edges(3));
        assert_eq!(quotient_order(&banana[..1]).unwrap(), big(1));
        assert!(matches!(quotient_order(&banana), Err(Error::Dependent)));
    }

    #[test]
    fn quotient_order_of_second_moment_constraints() {
        let graph = complete(4);
        let index = PairIndex::new(&graph);
        let rows = int_rows(&pair_constraints(&graph, &index));
        assert_eq!(rows.len(), 4 + 18);
        assert_eq!(quotient_order(&rows).unwrap(), big(4));
    }

    #[test]
    fn enumeration_agrees_with_smith() {
        for graph in [complete(4), prism(3), cycle(5)] {
            let rows = incidence_rows(&graph);
            assert_eq!(
                quotient_order_by_enumeration(&rows, 1 << 20).unwrap(),
                quotient_order(&rows).unwrap()
            );
        }
        let banana = incidence_rows(&parallel_edges(3));
        assert_eq!(quotient_order_by_enumeration(&banana[..1], 100).unwrap(), big(1));
    }

    #[test]
    fn perp_volumes() {
        let k4 = perp_lattice_volume(&incidence_rows(&complete(4))).unwrap();
        assert_eq!(k4.perp_lattice.vol_squared(), BigRational::from_integer(big(12)));
        let banana = incidence_rows(&parallel_edges(3));
        let b = perp_lattice_volume(&banana[..1]).unwrap();
        assert_eq!(b.perp_lattice.gram_det, big(3));
        let single = perp_lattice_volume(&int_rows(&[vec![1, 1]])).unwrap();
        assert_eq!(single.perp_lattice.rank(), 1);
        assert_eq!(single.perp_lattice.gram_det, big(2));
        assert_eq!(primitive(&single.perp_lattice.basis[0]), vec![big(1), big(-1)]);
    }

    #[test]
    fn first_moment_lattices() {
        let k4 = first_moment_lattice(&complete(4)).unwrap();
        assert_eq!(k4.lattice.rank(), 2);
        assert_eq!(k4.lattice.gram_det, big(12));
        let banana = first_moment_lattice(&parallel_edges(3)).unwrap();
        assert_eq!(banana.lattice.rank(), 2);
        assert_eq!(banana.lattice.gram_det, big(3));
        let c6 = first_moment_lattice(&cycle(6)).unwrap();
        assert_eq!(c6.lattice.rank(), 1);
        assert_eq!(primitive(&c6.lattice.basis[0]), [1, -1, 1, -1, 1, -1].map(big).to_vec());
    }

    #[test]
    fn pair_index_is_lexicographic() {
        let graph = complete(4);
        let index = PairIndex::new(&graph);
        assert_eq!(index.len(), 36);
        assert_eq!(index.triple(0), (0, 0, 0));
        assert_eq!(index.triple(1), (0, 0, 1));
        assert_eq!(index.triple(9), (1, 0, 0));
        assert_eq!(index.coord(1, 3, 4), 9 + 3 + 2);
        for (k, &(i, e, f)) in index.triples().iter().enumerate() {
            assert_eq!(index.coord(i, e, f), k);
        }
    }

    #[test]
    fn second_moment_lattices() {
        let k4 = second_moment_lattice(&complete(4)).unwrap();
        assert_eq!(k4.lattice.rank(), 14);
        // (2^7 3^(5/2) 5^(3/2))^2
        let expected = BigInt::from(2).pow(14) * BigInt::from(3).pow(5) * BigInt::from(5).pow(3);
        assert_eq!(k4.lattice.gram_det, expected);
        assert_eq!(k4.closed_form_vol_squared, Some(BigRational::from_integer(expected)));

        let banana = second_moment_lattice(&parallel_edges(3)).unwrap();
        assert_eq!(banana.lattice.rank(), 9);
        assert!(banana.rank_matches_expected);
        assert_eq!(banana.lattice.gram_det, BigInt::from(2).pow(8) * BigInt::from(27));
        assert!(banana.closed_form_vol_squared.is_none());

        assert!(matches!(second_moment_lattice(&path(3)), Err(Error::NotRegular)));
        assert!(matches!(second_moment_lattice(&cycle(5)), Err(Error::DegreeTooSmall(2))));
    }

    #[test]
    fn second_moment_closed_form_on_cubic_graphs() {
        for graph in [petersen(), prism(3)] {
            let l = second_moment_lattice(&graph).unwrap();
            let d = 3;
            let g = graph.vertex_count();
            assert_eq!(l.lattice.rank(), d * d * g - g - 3 * d * g / 2);
            assert_eq!(Some(l.lattice.vol_squared()), l.closed_form_vol_squared);
        }
    }
}
