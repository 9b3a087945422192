//! Arbitrary-precision integer and rational linear algebra.
//!
//! Integer algorithms (echelon reduction with a unimodular transform, Hermite
//! and Smith normal forms, Bareiss determinants) work on row lists of
//! [`BigInt`]. [`ExactMatrix`] carries rational entries for determinants of
//! forms that are only rational, such as restricted Hessians at rational points.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type IntRows = Vec<Vec<BigInt>>;

pub fn int_rows(rows: &[Vec<i64>]) -> IntRows {
    rows.iter()
        .map(|row| row.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

pub fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gram matrix `(<v_i, v_j>)`.
pub fn gram_matrix(vectors: &[Vec<BigInt>]) -> IntRows {
    let r = vectors.len();
    let mut gram = vec![vec![BigInt::zero(); r]; r];
    for i in 0..r {
        for j in i..r {
            let v = dot(&vectors[i], &vectors[j]);
            gram[j][i] = v.clone();
            gram[i][j] = v;
        }
    }
    gram
}

/// Determinant of a square integer matrix by fraction-free elimination.
pub fn det_bareiss(matrix: &[Vec<BigInt>]) -> BigInt {
    let n = matrix.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = matrix.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

fn sub_multiple(target: &mut [BigInt], source: &[BigInt], q: &BigInt) {
    for (t, s) in target.iter_mut().zip(source) {
        if !s.is_zero() {
            *t -= q * s;
        }
    }
}

/// Reduces `rows` to row echelon form by unimodular row operations, applying
/// the same operations to `transform`. Returns the number of nonzero rows.
fn echelon_with_transform(rows: &mut IntRows, transform: &mut IntRows) -> usize {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    let mut pivot = 0;
    for col in 0..n_cols {
        if pivot == n_rows {
            break;
        }
        loop {
            let best = (pivot..n_rows)
                .filter(|&r| !rows[r][col].is_zero())
                .min_by(|&a, &b| rows[a][col].abs().cmp(&rows[b][col].abs()));
            let Some(best) = best else { break };
            rows.swap(pivot, best);
            transform.swap(pivot, best);
            let mut clean = true;
            for r in pivot + 1..n_rows {
                if rows[r][col].is_zero() {
                    continue;
                }
                let q = rows[r][col].div_floor(&rows[pivot][col]);
                let (head, tail) = rows.split_at_mut(r);
                sub_multiple(&mut tail[0], &head[pivot], &q);
                let (head, tail) = transform.split_at_mut(r);
                sub_multiple(&mut tail[0], &head[pivot], &q);
                if !rows[r][col].is_zero() {
                    clean = false;
                }
            }
            if clean {
                pivot += 1;
                break;
            }
        }
    }
    pivot
}

/// Row-style Hermite normal form of a full-row-rank integer matrix: pivots
/// are the leftmost nonzero entries, positive, with entries above each pivot
/// reduced into `[0, pivot)`.
pub fn hermite_normal_form(rows: &[Vec<BigInt>]) -> IntRows {
    let mut a = rows.to_vec();
    let mut dummy = vec![Vec::new(); a.len()];
    let rank = echelon_with_transform(&mut a, &mut dummy);
    a.truncate(rank);
    let n_cols = a.first().map_or(0, Vec::len);
    let mut col = 0;
    for p in 0..a.len() {
        while col < n_cols && a[p][col].is_zero() {
            col += 1;
        }
        if a[p][col].is_negative() {
            for x in a[p].iter_mut() {
                *x = -x.clone();
            }
        }
        for r in 0..p {
            let q = a[r][col].div_floor(&a[p][col]);
            if !q.is_zero() {
                let (head, tail) = a.split_at_mut(p);
                sub_multiple(&mut head[r], &tail[0], &q);
            }
        }
        col += 1;
    }
    a
}

/// Saturated basis of `{v in Z^N : M v = 0}` for the `m x N` matrix `M`,
/// returned in Hermite normal form.
pub fn integer_kernel(matrix: &[Vec<BigInt>], n_cols: usize) -> IntRows {
    let mut transposed: IntRows = (0..n_cols)
        .map(|j| matrix.iter().map(|row| row[j].clone()).collect())
        .collect();
    let mut transform: IntRows = (0..n_cols)
        .map(|i| {
            (0..n_cols)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect();
    let rank = echelon_with_transform(&mut transposed, &mut transform);
    let kernel = transform.split_off(rank);
    if kernel.is_empty() {
        return kernel;
    }
    hermite_normal_form(&kernel)
}

pub fn rank(matrix: &[Vec<BigInt>]) -> usize {
    let mut a = matrix.to_vec();
    let mut dummy = vec![Vec::new(); a.len()];
    echelon_with_transform(&mut a, &mut dummy)
}

/// Nonzero invariant factors of the Smith normal form, as a divisibility chain.
pub fn smith_invariants(matrix: &[Vec<BigInt>]) -> Vec<BigInt> {
    let mut a = matrix.to_vec();
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    let mut t = 0;
    while t < m.min(n) {
        let pos = (t..m)
            .flat_map(|i| (t..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !a[i][j].is_zero())
            .min_by(|&(i, j), &(k, l)| a[i][j].abs().cmp(&a[k][l].abs()));
        let Some((pi, pj)) = pos else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..m {
                if !a[i][t].is_zero() {
                    let q = a[i][t].div_floor(&a[t][t]);
                    let (head, tail) = a.split_at_mut(i);
                    sub_multiple(&mut tail[0], &head[t], &q);
                    dirty |= !a[i][t].is_zero();
                }
            }
            for j in t + 1..n {
                if !a[t][j].is_zero() {
                    let q = a[t][j].div_floor(&a[t][t]);
                    for row in a.iter_mut() {
                        let s = row[t].clone();
                        row[j] -= &q * s;
                    }
                    dirty |= !a[t][j].is_zero();
                }
            }
            if dirty {
                let mut best = (t, t);
                for i in t..m {
                    if !a[i][t].is_zero() && a[i][t].abs() < a[best.0][best.1].abs() {
                        best = (i, t);
                    }
                }
                for j in t..n {
                    if !a[t][j].is_zero() && a[t][j].abs() < a[best.0][best.1].abs() {
                        best = (t, j);
                    }
                }
                a.swap(t, best.0);
                for row in a.iter_mut() {
                    row.swap(t, best.1);
                }
                continue;
            }
            let offender = (t + 1..m)
                .flat_map(|i| (t + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| !(&a[i][j] % &a[t][t]).is_zero());
            match offender {
                Some((i, _)) => {
                    let row = a[i].clone();
                    for (x, y) in a[t].iter_mut().zip(row) {
                        *x += y;
                    }
                }
                None => break,
            }
        }
        out.push(a[t][t].abs());
        t += 1;
    }
    out
}

/// Table of `0!, 1!, ..., n!`.
#[derive(Clone, Debug)]
pub struct Factorials(Vec<BigInt>);

impl Factorials {
    pub fn up_to(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        table.push(BigInt::one());
        for k in 1..=n {
            let next = &table[k - 1] * BigInt::from(k);
            table.push(next);
        }
        Factorials(table)
    }

    pub fn get(&self, k: usize) -> &BigInt {
        &self.0[k]
    }

    pub fn max(&self) -> usize {
        self.0.len() - 1
    }
}

/// A product of big integers that stays in `u128` until it overflows.
#[derive(Clone, Debug)]
pub enum Product {
    Small(u128),
    Big(BigInt),
}

impl Product {
    pub fn one() -> Self {
        Product::Small(1)
    }

    pub fn times(self, x: &BigInt) -> Self {
        use num_traits::ToPrimitive;
        match self {
            Product::Small(a) => match x.to_u128().and_then(|b| a.checked_mul(b)) {
                Some(c) => Product::Small(c),
                None => Product::Big(BigInt::from(a) * x),
            },
            Product::Big(a) => Product::Big(a * x),
        }
    }

    pub fn into_big(self) -> BigInt {
        match self {
            Product::Small(a) => BigInt::from(a),
            Product::Big(a) => a,
        }
    }
}

/// Running sum of [`Product`]s.
#[derive(Clone, Debug, Default)]
pub struct Accumulator {
    small: u128,
    big: BigInt,
}

impl Accumulator {
    pub fn add(&mut self, p: Product) {
        match p {
            Product::Small(a) => match self.small.checked_add(a) {
                Some(s) => self.small = s,
                None => {
                    self.big += BigInt::from(self.small) + BigInt::from(a);
                    self.small = 0;
                }
            },
            Product::Big(a) => self.big += a,
        }
    }

    pub fn total(&self) -> BigInt {
        &self.big + BigInt::from(self.small)
    }
}

/// A dense matrix of arbitrary-precision rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigRational>,
}

impl ExactMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExactMatrix {
            rows,
            cols,
            entries: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigRational) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        ExactMatrix { rows, cols, entries }
    }

    pub fn from_int_rows(rows: &[Vec<BigInt>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        ExactMatrix::from_fn(rows.len(), cols, |i, j| BigRational::from_integer(rows[i][j].clone()))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: BigRational) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn transpose(&self) -> Self {
        ExactMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &ExactMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(ExactMatrix::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols)
                .filter(|&k| !self.get(i, k).is_zero())
                .map(|k| self.get(i, k) * other.get(k, j))
                .sum()
        }))
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        ExactMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|x| x * factor).collect(),
        }
    }

    /// Determinant by Gaussian elimination over the rationals.
    pub fn det(&self) -> Result<BigRational> {
        if self.rows != self.cols {
            return Err(Error::Dimension("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a: Vec<Vec<BigRational>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j).clone()).collect())
            .collect();
        let mut det = BigRational::one();
        for k in 0..n {
            let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
                return Ok(BigRational::zero());
            };
            if p != k {
                a.swap(p, k);
                det = -det;
            }
            det *= a[k][k].clone();
            for i in k + 1..n {
                if a[i][k].is_zero() {
                    continue;
                }
                let factor = &a[i][k] / &a[k][k];
                let (head, tail) = a.split_at_mut(i);
                for (x, y) in tail[0][k..].iter_mut().zip(&head[k][k..]) {
                    *x -= &factor * y;
                }
            }
        }
        Ok(det)
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        use num_traits::ToPrimitive;
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j).to_f64().unwrap_or(f64::NAN)
        })
    }
}

impl fmt::Display for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}
