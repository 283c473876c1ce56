//! Exact coefficient arithmetic.
//!
//! The scalar tower used everywhere else in the library:
//!
//! * [`Rational`] — arbitrary-precision rationals (ℚ);
//! * [`TauScalar`] — Laurent polynomials in a single transcendental τ,
//!   which stands for the period 2πi (no relation τ² = −4π² is imposed:
//!   π and i never appear separately);
//! * [`TauFraction`] — the fraction field of the τ-polynomials, needed
//!   for flag linear algebra;
//! * [`ExpValue`] — the multiplicative group ℂ× presented symbolically
//!   as `Exp(λ)` for λ a [`TauScalar`], with `Exp(λ) = Exp(λ′)` exactly
//!   when λ − λ′ ∈ τℤ (the kernel of exp on this ring is τℤ).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Rational
// ---------------------------------------------------------------------------

/// An exact rational number in lowest terms with positive denominator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    /// `num/den`.  Panics if `den == 0` (a programming error, not a
    /// recoverable input condition).
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_int(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Largest integer ≤ self.
    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// Fractional part in [0, 1).
    pub fn fract(&self) -> Rational {
        Rational(&self.0 - self.0.floor())
    }

    pub fn recip(&self) -> Result<Rational> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn abs(&self) -> Rational {
        Rational(self.0.abs())
    }
}

macro_rules! rational_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                (&self).$method(&rhs)
            }
        }
    };
}
rational_binop!(Add, add);
rational_binop!(Sub, sub);
rational_binop!(Mul, mul);

impl Div for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero");
        Rational(&self.0 / &rhs.0)
    }
}

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        &self / &rhs
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Rational {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: BigInt = num
            .parse()
            .map_err(|_| Error::Malformed(format!("bad rational numerator {num:?}")))?;
        let d: BigInt = den
            .parse()
            .map_err(|_| Error::Malformed(format!("bad rational denominator {den:?}")))?;
        if d.is_zero() {
            return Err(Error::Malformed("rational with zero denominator".into()));
        }
        Ok(Rational(BigRational::new(n, d)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(D::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// TauScalar
// ---------------------------------------------------------------------------

/// A Laurent polynomial in τ = 2πi with rational coefficients.
///
/// Stored as a sparse map from τ-exponent to nonzero coefficient.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TauScalar {
    terms: BTreeMap<i64, Rational>,
}

impl TauScalar {
    pub fn zero() -> Self {
        TauScalar::default()
    }

    pub fn one() -> Self {
        TauScalar::from_rational(Rational::one())
    }

    pub fn from_rational(r: Rational) -> Self {
        TauScalar::term(0, r)
    }

    pub fn from_int(n: i64) -> Self {
        TauScalar::from_rational(Rational::from_int(n))
    }

    /// τ itself.
    pub fn tau() -> Self {
        TauScalar::term(1, Rational::one())
    }

    /// τ^k.
    pub fn tau_pow(k: i64) -> Self {
        TauScalar::term(k, Rational::one())
    }

    /// The single term c·τ^k.
    pub fn term(k: i64, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(k, c);
        }
        TauScalar { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (i64, Rational)>>(it: I) -> Self {
        let mut out = TauScalar::zero();
        for (k, c) in it {
            out.add_term(k, c);
        }
        out
    }

    fn add_term(&mut self, k: i64, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(k).or_insert_with(Rational::zero);
        *entry = &*entry + &c;
        if entry.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The coefficient of τ^k (zero if absent).
    pub fn coeff(&self, k: i64) -> Rational {
        self.terms.get(&k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i64, &Rational)> {
        self.terms.iter()
    }

    pub fn min_degree(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_degree(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    /// Multiplication by τ^k.
    pub fn shifted(&self, k: i64) -> TauScalar {
        TauScalar {
            terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect(),
        }
    }

    pub fn scaled(&self, c: &Rational) -> TauScalar {
        if c.is_zero() {
            return TauScalar::zero();
        }
        TauScalar {
            terms: self.terms.iter().map(|(e, v)| (*e, v * c)).collect(),
        }
    }

    /// The τ-conjugate: τ ↦ −τ, i.e. every odd-degree term is negated.
    /// An involutive ring homomorphism (the real structure forced by the
    /// Tate-twist conventions, conj(2πi) = −2πi).
    pub fn conjugate(&self) -> TauScalar {
        TauScalar {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (*e, if e.rem_euclid(2) == 1 { -c } else { c.clone() }))
                .collect(),
        }
    }

    pub fn pow(&self, mut k: u32) -> TauScalar {
        let mut base = self.clone();
        let mut acc = TauScalar::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    /// Leading (highest-degree) coefficient of a nonzero polynomial.
    fn leading(&self) -> (i64, Rational) {
        let (e, c) = self.terms.iter().next_back().expect("nonzero polynomial");
        (*e, c.clone())
    }

    /// Polynomial division with remainder.  Both operands must have
    /// nonnegative τ-degrees only and `d` must be nonzero; returns
    /// (quotient, remainder) with deg rem < deg d.
    pub(crate) fn divrem(&self, d: &TauScalar) -> (TauScalar, TauScalar) {
        assert!(!d.is_zero(), "division by zero polynomial");
        debug_assert!(self.min_degree().unwrap_or(0) >= 0 && d.min_degree().unwrap() >= 0);
        let (dd, dc) = d.leading();
        let mut rem = self.clone();
        let mut quot = TauScalar::zero();
        while !rem.is_zero() {
            let (rd, rc) = rem.leading();
            if rd < dd {
                break;
            }
            let t = TauScalar::term(rd - dd, &rc / &dc);
            quot = &quot + &t;
            rem = &rem - &(&t * d);
        }
        (quot, rem)
    }

    /// Monic gcd of two polynomials (nonnegative degrees), via the
    /// Euclidean algorithm.  gcd(0, 0) = 0.
    pub(crate) fn gcd(a: &TauScalar, b: &TauScalar) -> TauScalar {
        let mut a = a.clone();
        let mut b = b.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            return a;
        }
        let (_, lc) = a.leading();
        a.scaled(&lc.recip().expect("nonzero leading coefficient"))
    }
}

impl Add for &TauScalar {
    type Output = TauScalar;
    fn add(self, rhs: &TauScalar) -> TauScalar {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl Sub for &TauScalar {
    type Output = TauScalar;
    fn sub(self, rhs: &TauScalar) -> TauScalar {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c);
        }
        out
    }
}

impl Mul for &TauScalar {
    type Output = TauScalar;
    fn mul(self, rhs: &TauScalar) -> TauScalar {
        let mut out = TauScalar::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                out.add_term(ea + eb, ca * cb);
            }
        }
        out
    }
}

impl Neg for &TauScalar {
    type Output = TauScalar;
    fn neg(self) -> TauScalar {
        TauScalar {
            terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(),
        }
    }
}

macro_rules! tau_owned_ops {
    ($ty:ty) => {
        impl Add for $ty {
            type Output = $ty;
            fn add(self, rhs: $ty) -> $ty {
                &self + &rhs
            }
        }
        impl Sub for $ty {
            type Output = $ty;
            fn sub(self, rhs: $ty) -> $ty {
                &self - &rhs
            }
        }
        impl Mul for $ty {
            type Output = $ty;
            fn mul(self, rhs: $ty) -> $ty {
                &self * &rhs
            }
        }
        impl Neg for $ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                -&self
            }
        }
    };
}
tau_owned_ops!(TauScalar);

impl fmt::Display for TauScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match e {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}·τ")?,
                _ => write!(f, "{c}·τ^{e}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for TauScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<(i64, &Rational)> = self.terms.iter().map(|(e, c)| (*e, c)).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TauScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<(i64, Rational)> = Vec::deserialize(d)?;
        Ok(TauScalar::from_terms(v))
    }
}

/// Free-function form of the real structure (see [`TauScalar::conjugate`]).
pub fn tau_conjugate(s: &TauScalar) -> TauScalar {
    s.conjugate()
}

// ---------------------------------------------------------------------------
// TauFraction
// ---------------------------------------------------------------------------

/// An element of the fraction field of ℚ[τ], in canonical form:
/// the denominator is a polynomial with nonzero constant term and
/// leading coefficient 1, coprime to the numerator polynomial part
/// (τ-power units are absorbed into the numerator, which may therefore
/// be a genuine Laurent polynomial).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TauFraction {
    num: TauScalar,
    den: TauScalar,
}

impl TauFraction {
    pub fn new(num: TauScalar, den: TauScalar) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::reduced(num, den))
    }

    fn reduced(num: TauScalar, den: TauScalar) -> Self {
        if num.is_zero() {
            return TauFraction {
                num: TauScalar::zero(),
                den: TauScalar::one(),
            };
        }
        // Pull the τ-power units out of both parts, then cancel the gcd
        // of the polynomial parts and normalize the denominator monic.
        let vn = num.min_degree().unwrap();
        let vd = den.min_degree().unwrap();
        let mut n = num.shifted(-vn);
        let mut d = den.shifted(-vd);
        let g = TauScalar::gcd(&n, &d);
        if !g.is_zero() && g != TauScalar::one() {
            n = n.divrem(&g).0;
            d = d.divrem(&g).0;
        }
        let (_, lc) = d.leading();
        let lc_inv = lc.recip().expect("nonzero leading coefficient");
        n = n.scaled(&lc_inv);
        d = d.scaled(&lc_inv);
        TauFraction {
            num: n.shifted(vn - vd),
            den: d,
        }
    }

    pub fn zero() -> Self {
        TauFraction {
            num: TauScalar::zero(),
            den: TauScalar::one(),
        }
    }

    pub fn one() -> Self {
        TauFraction {
            num: TauScalar::one(),
            den: TauScalar::one(),
        }
    }

    pub fn from_scalar(s: TauScalar) -> Self {
        TauFraction {
            num: s,
            den: TauScalar::one(),
        }
    }

    pub fn from_rational(r: Rational) -> Self {
        TauFraction::from_scalar(TauScalar::from_rational(r))
    }

    pub fn from_int(n: i64) -> Self {
        TauFraction::from_scalar(TauScalar::from_int(n))
    }

    pub fn numer(&self) -> &TauScalar {
        &self.num
    }

    pub fn denom(&self) -> &TauScalar {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num == TauScalar::one() && self.den == TauScalar::one()
    }

    /// The underlying Laurent polynomial, if the denominator is trivial.
    pub fn as_scalar(&self) -> Option<TauScalar> {
        if self.den == TauScalar::one() {
            Some(self.num.clone())
        } else {
            None
        }
    }

    pub fn recip(&self) -> Result<TauFraction> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::reduced(self.den.clone(), self.num.clone()))
    }

    pub fn scaled(&self, r: &Rational) -> TauFraction {
        Self::reduced(self.num.scaled(r), self.den.clone())
    }

    /// τ ↦ −τ on numerator and denominator.
    pub fn conjugate(&self) -> TauFraction {
        Self::reduced(self.num.conjugate(), self.den.conjugate())
    }
}

impl Default for TauFraction {
    fn default() -> Self {
        TauFraction::zero()
    }
}

impl Add for &TauFraction {
    type Output = TauFraction;
    fn add(self, rhs: &TauFraction) -> TauFraction {
        TauFraction::reduced(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Sub for &TauFraction {
    type Output = TauFraction;
    fn sub(self, rhs: &TauFraction) -> TauFraction {
        TauFraction::reduced(
            &(&self.num * &rhs.den) - &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Mul for &TauFraction {
    type Output = TauFraction;
    fn mul(self, rhs: &TauFraction) -> TauFraction {
        TauFraction::reduced(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Neg for &TauFraction {
    type Output = TauFraction;
    fn neg(self) -> TauFraction {
        TauFraction {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}
tau_owned_ops!(TauFraction);

impl Div for &TauFraction {
    type Output = TauFraction;
    fn div(self, rhs: &TauFraction) -> TauFraction {
        assert!(!rhs.is_zero(), "division by zero");
        TauFraction::reduced(&self.num * &rhs.den, &self.den * &rhs.num)
    }
}

impl Div for TauFraction {
    type Output = TauFraction;
    fn div(self, rhs: TauFraction) -> TauFraction {
        &self / &rhs
    }
}

impl fmt::Display for TauFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == TauScalar::one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TauFractionRepr {
    num: TauScalar,
    den: TauScalar,
}

impl Serialize for TauFraction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TauFractionRepr {
            num: self.num.clone(),
            den: self.den.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TauFraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = TauFractionRepr::deserialize(d)?;
        TauFraction::new(repr.num, repr.den).map_err(D::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// ExpValue
// ---------------------------------------------------------------------------

/// A symbolic exponential `Exp(λ)` of a τ-polynomial, i.e. an element of
/// ℂ× presented by a logarithm.  Two values coincide exactly when their
/// logs differ by an integer multiple of τ = 2πi, so the canonical
/// representative reduces the τ¹-coefficient to the interval [0, 1);
/// all other τ-degrees are untouched.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExpValue {
    log: TauScalar,
}

impl ExpValue {
    pub fn new(log: TauScalar) -> Self {
        let c1 = log.coeff(1);
        let mut log = log;
        if !c1.is_integer() || !c1.is_zero() {
            let shift = TauScalar::term(1, Rational::from_bigint(c1.floor()));
            log = &log - &shift;
        }
        ExpValue { log }
    }

    /// Exp(0) = 1.
    pub fn one() -> Self {
        ExpValue {
            log: TauScalar::zero(),
        }
    }

    pub fn log(&self) -> &TauScalar {
        &self.log
    }

    pub fn is_one(&self) -> bool {
        self.log.is_zero()
    }

    /// Group law Exp(λ)·Exp(μ) = Exp(λ+μ).
    pub fn mul(&self, rhs: &ExpValue) -> ExpValue {
        ExpValue::new(&self.log + &rhs.log)
    }

    pub fn inv(&self) -> ExpValue {
        ExpValue::new(-&self.log)
    }

    pub fn pow(&self, k: i64) -> ExpValue {
        ExpValue::new(self.log.scaled(&Rational::from_int(k)))
    }

    /// Smallest j ≥ 1 with Exp(λ)^j = 1, i.e. j·λ ∈ τℤ.  Present exactly
    /// when λ is a rational multiple of τ (a root of unity); a nonzero
    /// coefficient in any other τ-degree rules it out.
    pub fn torsion_order(&self) -> Option<u64> {
        if self.log.is_zero() {
            return Some(1);
        }
        let mut it = self.log.terms();
        let (e, c) = it.next().unwrap();
        if it.next().is_some() || *e != 1 {
            return None;
        }
        // Canonical c ∈ (0, 1); the order is its denominator.
        c.denom().to_u64()
    }
}

/// Exact equality of exponentials: true iff the logs differ by τℤ.
pub fn exp_equal(a: &ExpValue, b: &ExpValue) -> bool {
    a == b
}

/// Torsion order of an exponential (see [`ExpValue::torsion_order`]).
pub fn exp_torsion_order(a: &ExpValue) -> Option<u64> {
    a.torsion_order()
}

impl fmt::Display for ExpValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Exp({})", self.log)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpValueRepr {
    log: TauScalar,
}

impl Serialize for ExpValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ExpValueRepr {
            log: self.log.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExpValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ExpValueRepr::deserialize(d)?;
        Ok(ExpValue::new(repr.log))
    }
}
