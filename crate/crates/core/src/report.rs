//! Serialization conventions shared by every report.
//!
//! Exact rationals become `{"num": "...", "den": "..."}`, irrational
//! constants become decimal strings with 15 significant digits, and constants
//! whose square is rational (up to a power of π) get a factored symbolic form.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

pub fn decimal(x: f64) -> String {
    format!("{x:.14e}")
}

/// Decimal string with 12 significant digits.
pub fn decimal12(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn exact_rational<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(2))?;
    map.serialize_entry("num", &q.numer().to_string())?;
    map.serialize_entry("den", &q.denom().to_string())?;
    map.end()
}

pub fn opt_exact_rational<S: Serializer>(q: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
    match q {
        Some(q) => exact_rational(q, s),
        None => s.serialize_none(),
    }
}

pub fn big_int<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

pub fn int_matrix<S: Serializer>(rows: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for row in rows {
        let printed: Vec<String> = row.iter().map(ToString::to_string).collect();
        seq.serialize_element(&printed)?;
    }
    seq.end()
}

pub fn decimal_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&decimal(*x))
}

pub fn decimal_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&decimal(*x))?;
    }
    seq.end()
}

/// Serializable wrapper for an exact rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exact(pub BigRational);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        exact_rational(&self.0, s)
    }
}

/// Natural logarithm of a positive big integer without overflow.
pub fn ln_big(x: &BigInt) -> f64 {
    assert!(x.is_positive(), "ln of a non-positive integer");
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_rational(q: &BigRational) -> f64 {
    ln_big(q.numer()) - ln_big(q.denom())
}

/// Prime factorization by trial division; `None` if a cofactor above
/// `limit²` remains unfactored.
pub fn factor(n: &BigInt, limit: u64) -> Option<BTreeMap<u64, u32>> {
    let mut n = n.abs();
    let mut out = BTreeMap::new();
    if n.is_zero() {
        return None;
    }
    let mut p = 2u64;
    while p <= limit && !n.is_one() {
        let bp = BigInt::from(p);
        while (&n % &bp).is_zero() {
            n /= &bp;
            *out.entry(p).or_insert(0) += 1;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n.is_one() {
        return Some(out);
    }
    let rest = n.to_u64()?;
    if (rest as u128) <= (limit as u128) * (limit as u128) {
        *out.entry(rest).or_insert(0) += 1;
        Some(out)
    } else {
        None
    }
}

/// A positive constant `sqrt(squared) · π^(pi_half_power / 2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicConstant {
    pub squared: BigRational,
    pub pi_half_power: i64,
}

impl SymbolicConstant {
    pub fn new(squared: BigRational, pi_half_power: i64) -> Self {
        SymbolicConstant {
            squared,
            pi_half_power,
        }
    }

    pub fn value(&self) -> f64 {
        (0.5 * ln_rational(&self.squared)).exp()
            * std::f64::consts::PI.powf(self.pi_half_power as f64 / 2.0)
    }

    pub fn ln_value(&self) -> f64 {
        0.5 * ln_rational(&self.squared) + self.pi_half_power as f64 / 2.0 * std::f64::consts::PI.ln()
    }

    pub fn mul(&self, other: &SymbolicConstant) -> SymbolicConstant {
        SymbolicConstant::new(&self.squared * &other.squared, self.pi_half_power + other.pi_half_power)
    }

    pub fn div(&self, other: &SymbolicConstant) -> SymbolicConstant {
        SymbolicConstant::new(&self.squared / &other.squared, self.pi_half_power - other.pi_half_power)
    }

    /// Exponents of each prime in the constant itself (halves of the exponents in `squared`).
    pub fn prime_exponents(&self) -> Option<BTreeMap<u64, BigRational>> {
        let num = factor(self.squared.numer(), 1 << 16)?;
        let den = factor(self.squared.denom(), 1 << 16)?;
        let mut out: BTreeMap<u64, BigRational> = BTreeMap::new();
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        for (p, e) in num {
            *out.entry(p).or_insert_with(BigRational::zero) += &half * BigInt::from(e);
        }
        for (p, e) in den {
            *out.entry(p).or_insert_with(BigRational::zero) -= &half * BigInt::from(e);
        }
        out.retain(|_, e| !e.is_zero());
        Some(out)
    }
}

impl fmt::Display for SymbolicConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = match self.prime_exponents() {
            Some(exps) => exps
                .into_iter()
                .map(|(p, e)| {
                    if e.is_one() {
                        p.to_string()
                    } else {
                        format!("{p}^{e}")
                    }
                })
                .collect(),
            None => vec![format!("sqrt({})", self.squared)],
        };
        if self.pi_half_power != 0 {
            let e = BigRational::new(BigInt::from(self.pi_half_power), BigInt::from(2));
            parts.push(if e.is_one() { "pi".to_string() } else { format!("pi^{e}") });
        }
        if parts.is_empty() {
            parts.push("1".to_string());
        }
        write!(f, "{}", parts.join(" * "))
    }
}

impl Serialize for SymbolicConstant {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(4))?;
        map.serialize_entry("value", &decimal(self.value()))?;
        map.serialize_entry("symbolic", &self.to_string())?;
        map.serialize_entry("squared", &Exact(self.squared.clone()))?;
        map.serialize_entry("pi_half_power", &self.pi_half_power)?;
        map.end()
    }
}

/// `b^e` for an integer base and exponent as an exact rational.
pub fn rational_pow(base: &BigRational, exp: i64) -> BigRational {
    if exp >= 0 {
        num_traits::pow(base.clone(), exp as usize)
    } else {
        num_traits::pow(base.recip(), (-exp) as usize)
    }
}

pub fn int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbolic_display_uses_half_exponents() {
        // (2^10 3^(-3/2) 5^-1 11^(-3/2))^2 = 2^20 / (3^3 5^2 11^3)
        let squared = BigRational::new(
            BigInt::from(2).pow(20),
            BigInt::from(27) * BigInt::from(25) * BigInt::from(1331),
        );
        let c = SymbolicConstant::new(squared, 0);
        assert_eq!(c.to_string(), "2^10 * 3^-3/2 * 5^-1 * 11^-3/2");
        assert!((c.value() - 1024.0 / (27f64.sqrt() * 5.0 * 1331f64.sqrt())).abs() < 1e-12);
        let with_pi = SymbolicConstant::new(int(64) / int(27), 1);
        assert_eq!(with_pi.to_string(), "2^3 * 3^-3/2 * pi^1/2");
    }

    #[test]
    fn ln_of_huge_integers() {
        let x = BigInt::from(3).pow(2000);
        assert!((ln_big(&x) - 2000.0 * 3f64.ln()).abs() < 1e-9);
        assert!((ln_big(&BigInt::from(1000)) - 1000f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rational_json_shape() {
        let q = Exact(BigRational::new(BigInt::from(4), BigInt::from(6)));
        assert_eq!(serde_json::to_string(&q).unwrap(), r#"{"num":"2","den":"3"}"#);
    }
}
