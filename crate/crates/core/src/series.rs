//! Truncated formal power series in ħ over a polynomial coefficient
//! ring with declared opaque symbols, and the quantum-parameter
//! extraction q(ħ) = w(ħ)/w(−ħ).
//!
//! Symbols stand for numbers whose exact value is irrelevant to the
//! computation (e.g. `z` for ζ(3)²/π⁶); they are treated as
//! algebraically independent indeterminates over ℚ, so a cancellation
//! in the output is an exact polynomial identity, not a numerical
//! coincidence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalars::Rational;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Polynomial coefficients
// ---------------------------------------------------------------------------

/// A monomial in the declared symbols: symbol name → exponent.
pub type Monomial = BTreeMap<String, u32>;

/// A multivariate polynomial over ℚ in opaque symbols, stored sparsely
/// with sorted monomials so equal polynomials have equal representations.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn rational(r: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert(Monomial::new(), r);
        }
        Poly { terms }
    }

    pub fn one() -> Self {
        Poly::rational(Rational::one())
    }

    pub fn symbol(name: &str) -> Self {
        let mut mono = Monomial::new();
        mono.insert(name.to_string(), 1);
        let mut terms = BTreeMap::new();
        terms.insert(mono, Rational::one());
        Poly { terms }
    }

    pub fn term(mono: Monomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(normalize_mono(mono), c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant (symbol-free) part, if the polynomial has no other
    /// terms.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// All symbols appearing with nonzero exponent.
    pub fn symbols(&self) -> BTreeSet<String> {
        self.terms
            .keys()
            .flat_map(|m| m.keys().cloned())
            .collect()
    }

    pub fn add(&self, rhs: &Poly) -> Poly {
        let mut terms = self.terms.clone();
        for (m, c) in &rhs.terms {
            let entry = terms.entry(m.clone()).or_insert_with(Rational::zero);
            *entry = &*entry + c;
            if entry.is_zero() {
                terms.remove(m);
            }
        }
        Poly { terms }
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn mul(&self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let mut m = ma.clone();
                for (s, e) in mb {
                    *m.entry(s.clone()).or_insert(0) += e;
                }
                out = out.add(&Poly::term(m, ca * cb));
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, q)| (m.clone(), q * c))
                .collect(),
        }
    }
}

fn normalize_mono(m: Monomial) -> Monomial {
    m.into_iter().filter(|&(_, e)| e != 0).collect()
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let syms: Vec<String> = m
                    .iter()
                    .map(|(s, e)| if *e == 1 { s.clone() } else { format!("{s}^{e}") })
                    .collect();
                if syms.is_empty() {
                    format!("{c}")
                } else {
                    format!("{c}·{}", syms.join("·"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// The declared coefficient ring: a finite set of algebraically
/// independent symbols adjoined to ℚ.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CoeffRing {
    symbols: BTreeSet<String>,
}

impl CoeffRing {
    pub fn rationals() -> Self {
        CoeffRing::default()
    }

    pub fn with_symbols<I: IntoIterator<Item = S>, S: Into<String>>(it: I) -> Self {
        CoeffRing {
            symbols: it.into_iter().map(Into::into).collect(),
        }
    }

    pub fn symbols(&self) -> &BTreeSet<String> {
        &self.symbols
    }

    pub fn contains(&self, p: &Poly) -> bool {
        p.symbols().is_subset(&self.symbols)
    }
}

// ---------------------------------------------------------------------------
// Truncated series
// ---------------------------------------------------------------------------

/// A power series in ħ over [`Poly`] coefficients, carried through a
/// declared truncation order N (coefficients of ħ^0 … ħ^N inclusive).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeries {
    order: usize,
    coeffs: Vec<Poly>,
}

impl TruncatedSeries {
    /// A series from explicit coefficients; missing high coefficients
    /// are zero-padded, extra ones are dropped.
    pub fn new(order: usize, mut coeffs: Vec<Poly>) -> Self {
        coeffs.resize(order + 1, Poly::zero());
        TruncatedSeries { order, coeffs }
    }

    pub fn one(order: usize) -> Self {
        TruncatedSeries::new(order, vec![Poly::one()])
    }

    /// The exponential series Σ_{k≤N} ħ^k/k!.
    pub fn exp(order: usize) -> Self {
        let mut fact = Rational::one();
        let coeffs = (0..=order)
            .map(|k| {
                if k > 0 {
                    fact = &fact * &Rational::new(1, k as i64);
                }
                Poly::rational(fact.clone())
            })
            .collect();
        TruncatedSeries { order, coeffs }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeff(&self, k: usize) -> &Poly {
        &self.coeffs[k]
    }

    /// The substitution ħ ↦ −ħ.
    pub fn flip_sign(&self) -> TruncatedSeries {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 0 { c.clone() } else { c.neg() })
            .collect();
        TruncatedSeries {
            order: self.order,
            coeffs,
        }
    }

    pub fn add(&self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let order = self.order.min(rhs.order);
        let coeffs = (0..=order)
            .map(|k| self.coeffs[k].add(&rhs.coeffs[k]))
            .collect();
        TruncatedSeries { order, coeffs }
    }

    /// Replace the ħ^k-coefficient (order unchanged).
    pub fn with_coeff(&self, k: usize, c: Poly) -> TruncatedSeries {
        let mut out = self.clone();
        out.coeffs[k] = c;
        out
    }
}

/// Cauchy product, truncated to the minimum of the two orders.
pub fn series_mul(a: &TruncatedSeries, b: &TruncatedSeries) -> TruncatedSeries {
    let order = a.order.min(b.order);
    let coeffs = (0..=order)
        .map(|k| {
            let mut acc = Poly::zero();
            for i in 0..=k {
                acc = acc.add(&a.coeffs[i].mul(&b.coeffs[k - i]));
            }
            acc
        })
        .collect();
    TruncatedSeries { order, coeffs }
}

/// Multiplicative inverse through the truncation order, by the
/// recursive coefficient solve c'_k = −c₀⁻¹ Σ_{i≥1} c_i c'_{k−i}.
pub fn series_inv(a: &TruncatedSeries) -> Result<TruncatedSeries> {
    let c0 = a.coeffs[0].as_rational().ok_or_else(|| {
        Error::Domain("constant term has a symbol part, cannot invert".into())
    })?;
    if c0.is_zero() {
        return Err(Error::Domain("constant term is zero, cannot invert".into()));
    }
    let c0_inv = c0.recip()?;
    let mut coeffs = vec![Poly::rational(c0_inv.clone())];
    for k in 1..=a.order {
        let mut acc = Poly::zero();
        for i in 1..=k {
            acc = acc.add(&a.coeffs[i].mul(&coeffs[k - i]));
        }
        coeffs.push(acc.neg().scale(&c0_inv));
    }
    Ok(TruncatedSeries {
        order: a.order,
        coeffs,
    })
}

/// The quantum parameter q(ħ) = w(ħ)/w(−ħ) of a series with w(0) = 1.
pub fn q_parameter(w: &TruncatedSeries) -> Result<TruncatedSeries> {
    if w.coeffs[0] != Poly::one() {
        return Err(Error::Domain("series must have constant term 1".into()));
    }
    Ok(series_mul(w, &series_inv(&w.flip_sign())?))
}

/// Result of comparing a series against Σ ħ^k/k!.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpComparison {
    /// Equality through the truncation order.
    pub matches: bool,
    /// Power, found coefficient, and expected coefficient of the first
    /// differing term, if any.
    pub first_mismatch: Option<(usize, Poly, Poly)>,
}

/// Exact comparison against the exponential series through the
/// truncation order.
pub fn compare_exp(q: &TruncatedSeries) -> ExpComparison {
    let e = TruncatedSeries::exp(q.order);
    for k in 0..=q.order {
        if q.coeffs[k] != e.coeffs[k] {
            return ExpComparison {
                matches: false,
                first_mismatch: Some((k, q.coeffs[k].clone(), e.coeffs[k].clone())),
            };
        }
    }
    ExpComparison {
        matches: true,
        first_mismatch: None,
    }
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    mono: BTreeMap<String, u32>,
    val: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffJson {
    pow: usize,
    poly: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesJson {
    order: usize,
    coeffs: Vec<CoeffJson>,
}

impl Serialize for TruncatedSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(pow, p)| CoeffJson {
                pow,
                poly: p
                    .terms
                    .iter()
                    .map(|(m, c)| TermJson {
                        mono: m.clone(),
                        val: c.to_string(),
                    })
                    .collect(),
            })
            .collect();
        SeriesJson {
            order: self.order,
            coeffs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let raw = SeriesJson::deserialize(d)?;
        let mut coeffs = vec![Poly::zero(); raw.order + 1];
        for c in raw.coeffs {
            if c.pow > raw.order {
                return Err(D::Error::custom(format!(
                    "coefficient power {} exceeds order {}",
                    c.pow, raw.order
                )));
            }
            let mut p = Poly::zero();
            for t in c.poly {
                let val = Rational::from_str(&t.val)
                    .map_err(|e| D::Error::custom(format!("bad rational '{}': {e}", t.val)))?;
                p = p.add(&Poly::term(t.mono, val));
            }
            coeffs[c.pow] = p;
        }
        Ok(TruncatedSeries {
            order: raw.order,
            coeffs,
        })
    }
}
