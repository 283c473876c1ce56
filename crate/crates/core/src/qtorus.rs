//! Quantum tori: exact monomial arithmetic in the algebra with
//! relations x_i x_j = q_{ij} x_j x_i, the frame derivations and trace,
//! the HKR-type pairing against polyvectors, the low-degree normalized
//! Hochschild mixed complex, centre detection, Gauss–Manin parallel
//! transport with monodromy, the transported integral K-lattice with
//! its mixed Hodge structure, extension classes, and the comparison
//! with the Poisson-torus quantum parameters.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

use crate::exterior::{LogForm, PeriodicForm, Polyvector, TorusContext};
use crate::linalg::{hermite_row_basis, integer_kernel, IntMat, QMat};
use crate::mhs::{
    carlson_class, jacobian_equal, ExtensionMaps, JacobianElement,
    MixedHodgeStructure, Subspace,
};
use crate::scalars::{exp_equal, ExpValue, Rational, TauFraction, TauScalar};
use crate::toric::{self, ToricPoissonStructure};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Parameters of a quantum torus, recorded as a branch of logarithms:
/// q_{ij} = Exp(λ_{ij}) for i < j, with q_{ji} = q_{ij}^{−1} and
/// q_{ii} = 1 by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QTorusParams {
    n: usize,
    log_lift: BTreeMap<(usize, usize), TauScalar>,
}

impl QTorusParams {
    pub fn new(n: usize, entries: &[(usize, usize, TauScalar)]) -> Result<Self> {
        if n == 0 || n > 16 {
            return Err(Error::Domain("torus dimension must be in 1..=16".into()));
        }
        let mut log_lift = BTreeMap::new();
        for (i, j, v) in entries {
            if !(1 <= *i && i < j && *j <= n) {
                return Err(Error::Domain(format!(
                    "log-lift index ({i},{j}) is not strictly upper-triangular in 1..={n}"
                )));
            }
            if !v.is_zero() {
                log_lift.insert((*i, *j), v.clone());
            }
        }
        Ok(QTorusParams { n, log_lift })
    }

    pub fn commutative(n: usize) -> Self {
        QTorusParams::new(n, &[]).expect("valid dimension")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The chosen log q_{ij} for any pair, with the skew convention
    /// λ_{ji} = −λ_{ij} and λ_{ii} = 0.
    pub fn log_q(&self, i: usize, j: usize) -> TauScalar {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => {
                self.log_lift.get(&(i, j)).cloned().unwrap_or_default()
            }
            std::cmp::Ordering::Equal => TauScalar::zero(),
            std::cmp::Ordering::Greater => {
                -&self.log_lift.get(&(j, i)).cloned().unwrap_or_default()
            }
        }
    }

    pub fn q(&self, i: usize, j: usize) -> ExpValue {
        ExpValue::new(self.log_q(i, j))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &TauScalar)> {
        self.log_lift.iter()
    }

    /// The Poisson torus with the same log-parameters.
    pub fn poisson_structure(&self) -> ToricPoissonStructure {
        let entries: Vec<_> = self
            .log_lift
            .iter()
            .map(|(&(i, j), v)| (i, j, v.clone()))
            .collect();
        ToricPoissonStructure::new(self.n, &entries).expect("same shape")
    }
}

// ---------------------------------------------------------------------------
// Elements
// ---------------------------------------------------------------------------

/// A coefficient: a finite formal sum Σ c·Exp(μ) with fraction-field
/// scalars and canonical exponential factors.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ExpCoeff {
    terms: BTreeMap<ExpValue, TauFraction>,
}

impl ExpCoeff {
    pub fn zero() -> Self {
        ExpCoeff::default()
    }

    pub fn one() -> Self {
        ExpCoeff::from_frac(TauFraction::one())
    }

    pub fn from_frac(c: TauFraction) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(ExpValue::one(), c);
        }
        ExpCoeff { terms }
    }

    pub fn from_exp(e: ExpValue) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(e, TauFraction::one());
        ExpCoeff { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExpValue, &TauFraction)> {
        self.terms.iter()
    }

    pub fn add(&self, rhs: &ExpCoeff) -> ExpCoeff {
        let mut terms = self.terms.clone();
        for (e, c) in &rhs.terms {
            let v = terms.entry(e.clone()).or_insert_with(TauFraction::zero);
            *v = &*v + c;
            if v.is_zero() {
                terms.remove(e);
            }
        }
        ExpCoeff { terms }
    }

    pub fn neg(&self) -> ExpCoeff {
        ExpCoeff {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, rhs: &ExpCoeff) -> ExpCoeff {
        let mut out = ExpCoeff::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let mut one_term = BTreeMap::new();
                one_term.insert(e1.mul(e2), c1 * c2);
                out = out.add(&ExpCoeff { terms: one_term });
            }
        }
        out
    }

    pub fn scale(&self, c: &TauFraction) -> ExpCoeff {
        if c.is_zero() {
            return ExpCoeff::zero();
        }
        ExpCoeff {
            terms: self
                .terms
                .iter()
                .map(|(e, v)| (e.clone(), v * c))
                .collect(),
        }
    }
}

/// An element of the quantum torus in the monomial basis x^k, k ∈ ℤⁿ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QTorusElement {
    params: QTorusParams,
    terms: BTreeMap<Vec<i64>, ExpCoeff>,
}

impl QTorusElement {
    pub fn zero(params: QTorusParams) -> Self {
        QTorusElement {
            params,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(params: QTorusParams) -> Self {
        QTorusElement::monomial(params, vec![0; 0], ExpCoeff::one())
    }

    /// c·x^k; a short exponent vector is zero-padded to length n.
    pub fn monomial(params: QTorusParams, mut k: Vec<i64>, c: ExpCoeff) -> Self {
        k.resize(params.n, 0);
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(k, c);
        }
        QTorusElement { params, terms }
    }

    pub fn generator(params: QTorusParams, i: usize) -> Self {
        let mut k = vec![0i64; params.n];
        k[i - 1] = 1;
        QTorusElement::monomial(params, k, ExpCoeff::one())
    }

    pub fn params(&self) -> &QTorusParams {
        &self.params
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &ExpCoeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, k: &[i64]) -> ExpCoeff {
        self.terms.get(k).cloned().unwrap_or_default()
    }

    pub fn add(&self, rhs: &QTorusElement) -> Result<QTorusElement> {
        if self.params != rhs.params {
            return Err(Error::ParameterMismatch);
        }
        let mut terms = self.terms.clone();
        for (k, c) in &rhs.terms {
            let v = terms.entry(k.clone()).or_insert_with(ExpCoeff::zero);
            *v = v.add(c);
            if v.is_zero() {
                terms.remove(k);
            }
        }
        Ok(QTorusElement {
            params: self.params.clone(),
            terms,
        })
    }

    pub fn neg(&self) -> QTorusElement {
        QTorusElement {
            params: self.params.clone(),
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect(),
        }
    }

    pub fn scale(&self, c: &ExpCoeff) -> QTorusElement {
        let mut terms = BTreeMap::new();
        for (k, v) in &self.terms {
            let w = v.mul(c);
            if !w.is_zero() {
                terms.insert(k.clone(), w);
            }
        }
        QTorusElement {
            params: self.params.clone(),
            terms,
        }
    }
}

/// The reordering cocycle of x^k·x^m: Exp(Σ_{i>j} k_i m_j λ_{ij}).
fn reorder_exp(params: &QTorusParams, k: &[i64], m: &[i64]) -> ExpValue {
    let mut log = TauScalar::zero();
    for i in 1..=params.n {
        for j in 1..i {
            let f = Rational::from_int(k[i - 1]) * Rational::from_int(m[j - 1]);
            if !f.is_zero() {
                log = &log + &params.log_q(i, j).scaled(&f);
            }
        }
    }
    ExpValue::new(log)
}

/// The product in A_q: x^k·x^m = Exp(Σ_{i>j} k_i m_j λ_{ij})·x^{k+m},
/// extended bilinearly.
pub fn qt_mul(a: &QTorusElement, b: &QTorusElement) -> Result<QTorusElement> {
    if a.params != b.params {
        return Err(Error::ParameterMismatch);
    }
    let mut out = QTorusElement::zero(a.params.clone());
    for (k, ck) in &a.terms {
        for (m, cm) in &b.terms {
            let sum: Vec<i64> = k.iter().zip(m).map(|(x, y)| x + y).collect();
            let c = ck
                .mul(cm)
                .mul(&ExpCoeff::from_exp(reorder_exp(&a.params, k, m)));
            out = out.add(&QTorusElement::monomial(a.params.clone(), sum, c))?;
        }
    }
    Ok(out)
}

/// The frame derivation e_i: scales x^k by k_i.
pub fn qt_derivation(i: usize, a: &QTorusElement) -> Result<QTorusElement> {
    if i == 0 || i > a.params.n {
        return Err(Error::Domain(format!("derivation index {i} out of range")));
    }
    let mut out = QTorusElement::zero(a.params.clone());
    for (k, c) in &a.terms {
        let scaled = c.scale(&TauFraction::from_int(k[i - 1]));
        out = out.add(&QTorusElement::monomial(
            a.params.clone(),
            k.clone(),
            scaled,
        ))?;
    }
    Ok(out)
}

/// The canonical trace: the coefficient of x⁰.
pub fn qt_trace(a: &QTorusElement) -> ExpCoeff {
    a.coeff(&vec![0i64; a.params.n])
}

// ---------------------------------------------------------------------------
// Chains and the mixed complex
// ---------------------------------------------------------------------------

/// A degree-k chain of the normalized Hochschild mixed complex: a sum
/// of monomial tensors x^{k₀}⊗…⊗x^{k_k} with a joint coefficient.
/// Terms with a scalar (zero exponent vector) in an inner slot (any
/// slot but the first) are degenerate and dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    params: QTorusParams,
    degree: usize,
    terms: BTreeMap<Vec<Vec<i64>>, ExpCoeff>,
}

impl Chain {
    pub fn zero(params: QTorusParams, degree: usize) -> Self {
        Chain {
            params,
            degree,
            terms: BTreeMap::new(),
        }
    }

    /// A single monomial tensor; degenerate tensors normalize to zero.
    pub fn of_monomials(params: QTorusParams, mons: &[Vec<i64>], c: ExpCoeff) -> Result<Chain> {
        if mons.is_empty() {
            return Err(Error::Domain("a chain needs at least one slot".into()));
        }
        let degree = mons.len() - 1;
        let mut chain = Chain::zero(params.clone(), degree);
        let mut key: Vec<Vec<i64>> = Vec::with_capacity(mons.len());
        for (slot, m) in mons.iter().enumerate() {
            let mut m = m.clone();
            m.resize(params.n, 0);
            if slot > 0 && m.iter().all(|x| *x == 0) {
                return Ok(chain); // degenerate
            }
            key.push(m);
        }
        if !c.is_zero() {
            chain.terms.insert(key, c);
        }
        Ok(chain)
    }

    /// The multilinear expansion a₀⊗…⊗a_k of element slots.
    pub fn of_elements(slots: &[QTorusElement]) -> Result<Chain> {
        if slots.is_empty() {
            return Err(Error::Domain("a chain needs at least one slot".into()));
        }
        let params = slots[0].params.clone();
        let mut chain = Chain::zero(params.clone(), slots.len() - 1);
        let mut stack: Vec<(Vec<Vec<i64>>, ExpCoeff)> = vec![(Vec::new(), ExpCoeff::one())];
        for a in slots {
            if a.params != params {
                return Err(Error::ParameterMismatch);
            }
            let mut next = Vec::new();
            for (prefix, c) in &stack {
                for (k, ck) in &a.terms {
                    let mut p = prefix.clone();
                    p.push(k.clone());
                    next.push((p, c.mul(ck)));
                }
            }
            stack = next;
        }
        for (mons, c) in stack {
            chain = chain.add(&Chain::of_monomials(params.clone(), &mons, c)?)?;
        }
        Ok(chain)
    }

    pub fn params(&self) -> &QTorusParams {
        &self.params
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Vec<i64>>, &ExpCoeff)> {
        self.terms.iter()
    }

    pub fn add(&self, rhs: &Chain) -> Result<Chain> {
        if self.params != rhs.params || self.degree != rhs.degree {
            return Err(Error::DegreeMismatch(format!(
                "chain degrees {} and {}",
                self.degree, rhs.degree
            )));
        }
        let mut terms = self.terms.clone();
        for (k, c) in &rhs.terms {
            let v = terms.entry(k.clone()).or_insert_with(ExpCoeff::zero);
            *v = v.add(c);
            if v.is_zero() {
                terms.remove(k);
            }
        }
        Ok(Chain {
            params: self.params.clone(),
            degree: self.degree,
            terms,
        })
    }

    fn scale_sign(&self, sign: i64) -> Chain {
        if sign == 1 {
            return self.clone();
        }
        Chain {
            params: self.params.clone(),
            degree: self.degree,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect(),
        }
    }
}

/// The Hochschild differential b on monomial chains.
pub fn hochschild_b(c: &Chain) -> Result<Chain> {
    let k = c.degree;
    let mut out = Chain::zero(c.params.clone(), k.saturating_sub(1));
    if k == 0 {
        return Ok(out);
    }
    for (mons, coeff) in &c.terms {
        for i in 0..k {
            // merge slots i and i+1
            let q = reorder_exp(&c.params, &mons[i], &mons[i + 1]);
            let mut merged: Vec<Vec<i64>> = Vec::with_capacity(k);
            for (s, m) in mons.iter().enumerate() {
                if s == i {
                    merged.push(m.iter().zip(&mons[i + 1]).map(|(x, y)| x + y).collect());
                } else if s != i + 1 {
                    merged.push(m.clone());
                }
            }
            let sign = if i % 2 == 0 { 1 } else { -1 };
            let term = Chain::of_monomials(
                c.params.clone(),
                &merged,
                coeff.mul(&ExpCoeff::from_exp(q)),
            )?
            .scale_sign(sign);
            out = out.add(&term)?;
        }
        // (−1)^k a_k a₀ ⊗ a₁ ⊗ … ⊗ a_{k−1}
        let q = reorder_exp(&c.params, &mons[k], &mons[0]);
        let mut wrapped: Vec<Vec<i64>> = Vec::with_capacity(k);
        wrapped.push(mons[k].iter().zip(&mons[0]).map(|(x, y)| x + y).collect());
        wrapped.extend(mons[1..k].iter().cloned());
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let term = Chain::of_monomials(
            c.params.clone(),
            &wrapped,
            coeff.mul(&ExpCoeff::from_exp(q)),
        )?
        .scale_sign(sign);
        out = out.add(&term)?;
    }
    Ok(out)
}

/// The Connes–Tsygan operator B on the normalized complex:
/// B(a₀⊗…⊗a_k) = Σ_i (−1)^{ik} 1⊗a_i⊗…⊗a_k⊗a₀⊗…⊗a_{i−1}.
pub fn connes_b(c: &Chain) -> Result<Chain> {
    let k = c.degree;
    let mut out = Chain::zero(c.params.clone(), k + 1);
    for (mons, coeff) in &c.terms {
        for i in 0..=k {
            let mut rotated: Vec<Vec<i64>> = Vec::with_capacity(k + 2);
            rotated.push(vec![0i64; c.params.n]);
            rotated.extend(mons[i..=k].iter().cloned());
            rotated.extend(mons[0..i].iter().cloned());
            let sign = if (i * k) % 2 == 0 { 1 } else { -1 };
            let term =
                Chain::of_monomials(c.params.clone(), &rotated, coeff.clone())?.scale_sign(sign);
            out = out.add(&term)?;
        }
    }
    Ok(out)
}

/// The HKR-type pairing ⟨ξ₁∧…∧ξ_k, a₀⊗…⊗a_k⟩ =
/// (1/k!)·det(τ(a₀·ξ_i(a_j)))_{i,j=1..k}, with ξ a frame polyvector
/// extended bilinearly and the determinant expanded exactly.
pub fn hkr_pairing(xi: &Polyvector, c: &Chain) -> Result<ExpCoeff> {
    let n = c.params.n;
    if xi.context() != TorusContext::new(n) {
        return Err(Error::ParameterMismatch);
    }
    let k = c.degree;
    let mut total = ExpCoeff::zero();
    for (set, weight) in xi.terms() {
        if set.len() != k {
            return Err(Error::DegreeMismatch(format!(
                "polyvector degree {} vs chain degree {k}",
                set.len()
            )));
        }
        let frame = set.indices(); // ascending: ξ₁, …, ξ_k
        for (mons, coeff) in &c.terms {
            // The trace vanishes unless the total monomial weight is zero.
            let mut weight_sum = vec![0i64; n];
            for m in mons.iter() {
                for (w, x) in weight_sum.iter_mut().zip(m) {
                    *w += x;
                }
            }
            if weight_sum.iter().any(|w| *w != 0) {
                continue;
            }
            // Determinant expansion of τ(a₀·ξ_i(a_j)): each permutation π
            // contributes sgn(π)·τ(a₀·ξ_{π(1)}(a₁)···ξ_{π(k)}(a_k)), the
            // derivatives multiplied inside the algebra before tracing.
            let mut det = ExpCoeff::zero();
            let mut perm: Vec<usize> = (0..k).collect();
            permute(&mut perm, 0, 1, &mut |p, sign| {
                let mut scale = Rational::one();
                for (j, &pi) in p.iter().enumerate() {
                    scale = scale * Rational::from_int(mons[j + 1][frame[pi] - 1]);
                }
                if scale.is_zero() {
                    return;
                }
                // Reordering cocycle of x^{m₀}·x^{m₁}···x^{m_k}.
                let mut cocycle = ExpValue::one();
                let mut acc = mons[0].clone();
                for m in &mons[1..] {
                    cocycle = cocycle.mul(&reorder_exp(&c.params, &acc, m));
                    for (a, x) in acc.iter_mut().zip(m) {
                        *a += x;
                    }
                }
                let mut term = ExpCoeff::from_exp(cocycle)
                    .scale(&TauFraction::from_rational(scale));
                if sign < 0 {
                    term = term.neg();
                }
                det = det.add(&term);
            });
            let mut factorial = Rational::one();
            for f in 2..=k as i64 {
                factorial = factorial * Rational::from_int(f);
            }
            let scaled = det
                .scale(weight)
                .scale(&TauFraction::from_rational(
                    factorial.recip().expect("nonzero factorial"),
                ))
                .mul(coeff);
            total = total.add(&scaled);
        }
    }
    Ok(total)
}

fn permute(p: &mut Vec<usize>, at: usize, sign: i64, f: &mut dyn FnMut(&[usize], i64)) {
    if at == p.len() {
        f(p, sign);
        return;
    }
    for i in at..p.len() {
        p.swap(at, i);
        let s = if i == at { sign } else { -sign };
        permute(p, at + 1, s, f);
        p.swap(at, i);
    }
}

// ---------------------------------------------------------------------------
// Centre
// ---------------------------------------------------------------------------

fn in_tau_z(s: &TauScalar) -> bool {
    if s.is_zero() {
        return true;
    }
    let mut it = s.terms();
    let (e, c) = it.next().unwrap();
    it.next().is_none() && *e == 1 && c.is_integer()
}

/// Whether x^k is central: Σ_i k_i λ_{li} ∈ τℤ for every l.
pub fn centre_membership(k: &[i64], params: &QTorusParams) -> Result<bool> {
    if k.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            got: k.len(),
        });
    }
    for l in 1..=params.n {
        let mut s = TauScalar::zero();
        for (i, ki) in k.iter().enumerate() {
            if *ki != 0 {
                s = &s + &params.log_q(l, i + 1).scaled(&Rational::from_int(*ki));
            }
        }
        if !in_tau_z(&s) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// For all-torsion q, the canonical (Hermite) basis of the central
/// sublattice {k : x^k central} ⊆ ℤⁿ.  Errors when some q_{ij} is not
/// a root of unity (the centre is then not of finite index).
pub fn centre_generators_torsion(params: &QTorusParams) -> Result<IntMat> {
    let n = params.n;
    // Write λ_{li} = τ·c_{li}; centrality is Σ_i k_i c_{li} ∈ ℤ for all l.
    let mut c = vec![vec![Rational::zero(); n]; n];
    let mut denom = BigInt::one();
    for l in 1..=n {
        for i in 1..=n {
            let lam = params.log_q(l, i);
            if lam.is_zero() {
                continue;
            }
            let mut it = lam.terms();
            let (e, coeff) = it.next().unwrap();
            if it.next().is_some() || *e != 1 {
                return Err(Error::Domain(format!(
                    "q_{{{l},{i}}} is not a root of unity; the centre has infinite index"
                )));
            }
            denom = denom.lcm(coeff.denom());
            c[l - 1][i - 1] = coeff.clone();
        }
    }
    // Integer matrix P with P/denom = c; solve P·k ≡ 0 (mod denom) via the
    // kernel of [P | −denom·I].
    let mut aug = IntMat::zeros(n, 2 * n);
    for l in 0..n {
        for i in 0..n {
            let v = &c[l][i];
            aug[(l, i)] = v.numer() * (&denom / v.denom());
        }
        aug[(l, n + l)] = -denom.clone();
    }
    let kernel = integer_kernel(&aug);
    let mut rows = IntMat::zeros(kernel.len(), n);
    for (r, v) in kernel.iter().enumerate() {
        for i in 0..n {
            rows[(r, i)] = v[i].clone();
        }
    }
    Ok(hermite_row_basis(&rows))
}

// ---------------------------------------------------------------------------
// Gauss–Manin transport
// ---------------------------------------------------------------------------

/// A parallel-transport operator exp(ι_A/u) for a constant bivector A;
/// unipotent because contraction is nilpotent.
#[derive(Clone, Debug)]
pub struct ConnectionOperator {
    n: usize,
    exponent: Polyvector,
}

impl ConnectionOperator {
    pub fn identity(n: usize) -> Self {
        ConnectionOperator {
            n,
            exponent: Polyvector::zero(TorusContext::new(n)),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn exponent(&self) -> &Polyvector {
        &self.exponent
    }

    /// Apply to a periodic form (exact finite expansion).
    pub fn apply(&self, w: &PeriodicForm) -> Result<PeriodicForm> {
        crate::exterior::transport_operator(&self.exponent, w)
    }

    /// Composition: exponents add (contractions in the frame commute).
    pub fn compose(&self, rhs: &ConnectionOperator) -> Result<ConnectionOperator> {
        if self.n != rhs.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: rhs.n,
            });
        }
        Ok(ConnectionOperator {
            n: self.n,
            exponent: self.exponent.add(&rhs.exponent)?,
        })
    }

    pub fn inverse(&self) -> ConnectionOperator {
        ConnectionOperator {
            n: self.n,
            exponent: self.exponent.neg(),
        }
    }

    /// The matrix of the operator at u = 1 on the even or odd
    /// coordinate model.
    pub fn matrix(&self, parity: u8) -> Result<QMat> {
        let subsets = toric::parity_subsets(self.n, parity);
        let dim = subsets.len();
        let ctx = TorusContext::new(self.n);
        let mut m = QMat::zeros(dim, dim);
        for (col, s) in subsets.iter().enumerate() {
            let image = toric::exp_contract(&self.exponent, &LogForm::dlog_set(ctx, *s))?;
            for (row, t) in subsets.iter().enumerate() {
                m[(row, col)] = image.coeff(&vec![0i64; self.n], *t);
            }
        }
        Ok(m)
    }
}

/// Parallel transport from the commutative basepoint to q: flat
/// sections of ∇ = d + u^{−1} Σ dlog q_{ij} ι_{e_i∧e_j} are
/// exp(−Σ λ_{ij} ι_{e_i∧e_j}/u)·v₀, so the lattice transport carries
/// the negated log-lift in the exponent.
pub fn gauss_manin_transport(params: &QTorusParams) -> ConnectionOperator {
    let entries: Vec<(usize, usize, TauFraction)> = params
        .log_lift
        .iter()
        .map(|(&(i, j), v)| (i, j, TauFraction::from_scalar(-v)))
        .collect();
    ConnectionOperator {
        n: params.n,
        exponent: Polyvector::from_lambda(TorusContext::new(params.n), &entries),
    }
}

/// The monodromy ρ(γ_{ij}) = exp((τ/u)·ι_{e_i∧e_j}) of the loop in the
/// (i,j)-th q-coordinate.
pub fn monodromy(i: usize, j: usize, n: usize) -> Result<ConnectionOperator> {
    if !(1 <= i && i < j && j <= n) {
        return Err(Error::Domain(format!("monodromy indices ({i},{j}) out of range")));
    }
    Ok(ConnectionOperator {
        n,
        exponent: Polyvector::from_lambda(
            TorusContext::new(n),
            &[(i, j, TauFraction::from_scalar(TauScalar::tau()))],
        ),
    })
}

// ---------------------------------------------------------------------------
// The K-lattice and extension classes
// ---------------------------------------------------------------------------

/// The even K-lattice of A_q: the commutative charge lattice carried by
/// Gauss–Manin transport, against the fixed (q-independent) Hodge
/// filtration and the constant weight filtration.  validate_mhs passes
/// by construction (asserted in tests).
pub fn k_lattice(params: &QTorusParams) -> Result<MixedHodgeStructure> {
    let basepoint = toric::toric_k_mhs(&ToricPoissonStructure::zero(params.n), 0)?;
    let transport = gauss_manin_transport(params).matrix(0)?;
    let comparison = transport.mul(basepoint.mhs.comparison());
    MixedHodgeStructure::new(
        comparison,
        basepoint.mhs.weight_steps().to_vec(),
        basepoint.mhs.hodge_steps().to_vec(),
    )
}

/// The Carlson class of the W₂/W₀ subquotient of the K-lattice, one
/// column per pair (i < j).
pub fn k_lattice_extension(params: &QTorusParams) -> Result<JacobianElement> {
    let n = params.n;
    let pairs: Vec<(usize, usize)> = (1..=n)
        .flat_map(|i| ((i + 1)..=n).map(move |j| (i, j)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Domain("no extension data below dimension 2".into()));
    }
    let full = k_lattice(params)?;
    let r = 1 + pairs.len();
    let w2 = full.weight_at(2);
    if w2.dim() != r {
        return Err(Error::Domain("unexpected W₂ dimension".into()));
    }
    let comparison = QMat::from_fn(r, r, |i, j| full.comparison()[(i, j)].clone());
    let mut hodge: Vec<(i64, Subspace)> = Vec::new();
    for (p, s) in full.hodge_steps() {
        if *p >= 2 {
            break;
        }
        hodge.push((*p, restrict_prefix(&s.intersect(&w2), r)?));
    }
    hodge.push((2, Subspace::zero(r)));
    let weight = vec![
        (0, restrict_prefix(&full.weight_at(0), r)?),
        (2, Subspace::full(r)),
    ];
    let total = MixedHodgeStructure::new(comparison, weight, hodge)?;

    let sub = MixedHodgeStructure::tate(0);
    let quot = MixedHodgeStructure::new(
        QMat::from_fn(pairs.len(), pairs.len(), |i, j| {
            if i == j {
                TauFraction::from_scalar(TauScalar::tau_pow(-1).scaled(&Rational::from_int(-1)))
            } else {
                TauFraction::zero()
            }
        }),
        vec![(2, Subspace::full(pairs.len()))],
        vec![
            (1, Subspace::full(pairs.len())),
            (2, Subspace::zero(pairs.len())),
        ],
    )?;
    let inj = IntMat::from_rows(
        &(0..r)
            .map(|i| vec![if i == 0 { 1 } else { 0 }])
            .collect::<Vec<_>>(),
    );
    let proj = IntMat::from_rows(
        &(0..pairs.len())
            .map(|i| (0..r).map(|j| if j == i + 1 { 1 } else { 0 }).collect())
            .collect::<Vec<_>>(),
    );
    carlson_class(&sub, &total, &quot, &ExtensionMaps { inj, proj })
}

fn restrict_prefix(s: &Subspace, k: usize) -> Result<Subspace> {
    let b = s.basis();
    for i in 0..b.nrows() {
        for j in k..b.ncols() {
            if !b[(i, j)].is_zero() {
                return Err(Error::Domain(
                    "subspace not supported on the coordinate prefix".into(),
                ));
            }
        }
    }
    Ok(Subspace::from_rows(&QMat::from_fn(b.nrows(), k, |i, j| {
        b[(i, j)].clone()
    })))
}

/// The extension classes [W₂K⁰(A_q)] per pair: asserted equal to
/// q_{ij} = Exp(λ_{ij}); a mismatch is a bug signal.
pub fn extension_class(params: &QTorusParams) -> Result<BTreeMap<(usize, usize), ExpValue>> {
    let n = params.n;
    let mut out = BTreeMap::new();
    if n < 2 {
        return Ok(out);
    }
    let class = k_lattice_extension(params)?;
    let tau = TauFraction::from_scalar(TauScalar::tau());
    let mut col = 0usize;
    for i in 1..=n {
        for j in (i + 1)..=n {
            let entry = &class.representative()[(0, col)] * &tau;
            let log = entry.as_scalar().ok_or_else(|| {
                Error::Domain("extension class produced a non-polynomial".into())
            })?;
            let value = ExpValue::new(log);
            if !exp_equal(&value, &params.q(i, j)) {
                return Err(Error::Domain(format!(
                    "extension class does not equal q at ({i},{j})"
                )));
            }
            out.insert((i, j), value);
            col += 1;
        }
    }
    Ok(out)
}

/// Entrywise comparison of the quantum-torus extension classes with the
/// Poisson-torus quantum parameters of the same log-lift (q = e^ħ).
pub fn compare_with_poisson(params: &QTorusParams) -> Result<bool> {
    let classes = extension_class(params)?;
    let poisson = toric::quantum_parameter(&params.poisson_structure())?;
    Ok(classes
        .iter()
        .all(|(k, v)| poisson.get(k).map_or(false, |p| exp_equal(p, v))))
}

/// Root-of-unity Hodge classes: when every q_{ij} is torsion with lcm
/// of orders j, returns j after verifying the j-th power of the
/// extension class is trivial; otherwise returns None after verifying
/// no power up to `bound` is trivial.
pub fn hodge_class_torsion(params: &QTorusParams, bound: u64) -> Result<Option<u64>> {
    let n = params.n;
    let mut orders = Vec::new();
    let mut all_torsion = true;
    for i in 1..=n {
        for j in (i + 1)..=n {
            match params.q(i, j).torsion_order() {
                Some(o) => orders.push(o),
                None => all_torsion = false,
            }
        }
    }
    if n < 2 {
        return Ok(Some(1));
    }
    let class = k_lattice_extension(params)?;
    if all_torsion {
        let j = orders.iter().fold(1u64, |a, &b| a.lcm(&b));
        let powered = class.scale_int(j as i64);
        if !jacobian_equal(&powered, &powered.zero_like())? {
            return Err(Error::Domain(
                "torsion class power failed to split (bug signal)".into(),
            ));
        }
        Ok(Some(j))
    } else {
        for m in 1..=bound {
            let powered = class.scale_int(m as i64);
            if jacobian_equal(&powered, &powered.zero_like())? {
                return Err(Error::Domain(format!(
                    "non-torsion class became trivial at power {m} (bug signal)"
                )));
            }
        }
        Ok(None)
    }
}
