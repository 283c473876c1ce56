//! Exact logarithmic de Rham calculus on the n-torus.
//!
//! Forms are finite sums Σ c_{k,I} x^k dlog x_{i₁}∧…∧dlog x_{i_p} with
//! coefficients in the τ-fraction field; polyvectors are constant
//! (invariant) combinations of the frame wedges e_{j₁}∧…∧e_{j_m}, where
//! e_i = x_i ∂_{x_i}.  On top of these sit the exterior derivative, the
//! first-slot contraction, the Brylinski–Koszul operator δ_σ = [d, ι_σ],
//! u-periodic forms with the transport operator e^{ι_σ/u}, the Mukai
//! involution, and the filtered integration pairing.
//!
//! Sign conventions are pinned once by the anchor identity
//! ι_{e₁∧e₂}(dlog x₂ ∧ dlog x₁) = 1 (contraction in the first slot,
//! ι_{e_J} = ι_{e_{j₁}}∘…∘ι_{e_{j_m}}) and propagated mechanically.

use std::collections::BTreeMap;

use crate::scalars::{Rational, TauFraction};
use crate::{Error, Result};

/// The ambient torus: fixes the dimension n and thereby the frames
/// e_1…e_n of 𝔱 and dlog x_1…dlog x_n of 𝔱^∨.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TorusContext {
    pub n: usize,
}

impl TorusContext {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "torus dimension must be at least 1");
        TorusContext { n }
    }

    fn check(&self, other: &TorusContext) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }
}

/// A sorted subset of {1..n} stored as a bitmask (bit i−1 ⇔ index i).
/// Encodes the wedge dlog x_{i₁}∧…∧dlog x_{i_p} (or e_{i₁}∧…∧e_{i_p})
/// in ascending written order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct IdxSet(pub u64);

impl IdxSet {
    pub fn empty() -> Self {
        IdxSet(0)
    }

    /// Full set {1..n}.
    pub fn full(n: usize) -> Self {
        IdxSet((1u64 << n) - 1)
    }

    /// From 1-based indices (must be distinct).
    pub fn from_indices(indices: &[usize]) -> Self {
        let mut bits = 0u64;
        for &i in indices {
            assert!(i >= 1, "indices are 1-based");
            assert!(bits & (1 << (i - 1)) == 0, "repeated index");
            bits |= 1 << (i - 1);
        }
        IdxSet(bits)
    }

    /// Ascending 1-based indices.
    pub fn indices(&self) -> Vec<usize> {
        (0..64).filter(|b| self.0 & (1 << b) != 0).map(|b| b + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        i >= 1 && self.0 & (1 << (i - 1)) != 0
    }

    /// Koszul sign and union for the wedge (self written first):
    /// `None` when the sets intersect.
    pub fn wedge_sign(&self, other: &IdxSet) -> Option<(IdxSet, i64)> {
        if self.0 & other.0 != 0 {
            return None;
        }
        // Count inversions: pairs (a ∈ self, b ∈ other) with a > b.
        let mut inversions = 0u32;
        for b in 0..64 {
            if other.0 & (1 << b) != 0 {
                inversions += (self.0 >> (b + 1)).count_ones();
            }
        }
        let sign = if inversions % 2 == 0 { 1 } else { -1 };
        Some((IdxSet(self.0 | other.0), sign))
    }

    /// Remove index i (which must be present); the sign (−1)^{position}
    /// is the cost of moving the contraction past the earlier factors.
    pub fn remove_sign(&self, i: usize) -> (IdxSet, i64) {
        assert!(self.contains(i), "index not present");
        let bit = 1u64 << (i - 1);
        let position = (self.0 & (bit - 1)).count_ones();
        let sign = if position % 2 == 0 { 1 } else { -1 };
        (IdxSet(self.0 & !bit), sign)
    }
}

fn sign_fraction(s: i64) -> TauFraction {
    TauFraction::from_int(s)
}

// ---------------------------------------------------------------------------
// LogForm
// ---------------------------------------------------------------------------

/// A logarithmic differential form Σ c_{k,I} x^k dlog x_I (possibly of
/// mixed degree) with coefficients in the τ-fraction field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogForm {
    ctx: TorusContext,
    terms: BTreeMap<(Vec<i64>, IdxSet), TauFraction>,
}

impl LogForm {
    pub fn zero(ctx: TorusContext) -> Self {
        LogForm {
            ctx,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(ctx: TorusContext) -> Self {
        LogForm::scalar(ctx, TauFraction::one())
    }

    pub fn scalar(ctx: TorusContext, c: TauFraction) -> Self {
        LogForm::monomial(ctx, vec![0; ctx.n], IdxSet::empty(), c)
    }

    /// dlog x_i.
    pub fn dlog(ctx: TorusContext, i: usize) -> Self {
        assert!(1 <= i && i <= ctx.n, "index out of range");
        LogForm::monomial(ctx, vec![0; ctx.n], IdxSet::from_indices(&[i]), TauFraction::one())
    }

    /// The invariant wedge dlog x_I.
    pub fn dlog_set(ctx: TorusContext, set: IdxSet) -> Self {
        LogForm::monomial(ctx, vec![0; ctx.n], set, TauFraction::one())
    }

    /// c · x^k dlog x_I.
    pub fn monomial(ctx: TorusContext, k: Vec<i64>, set: IdxSet, c: TauFraction) -> Self {
        assert_eq!(k.len(), ctx.n, "monomial length mismatch");
        assert!(set.indices().iter().all(|&i| i <= ctx.n), "index out of range");
        let mut f = LogForm::zero(ctx);
        f.add_term(k, set, c);
        f
    }

    pub fn context(&self) -> TorusContext {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Vec<i64>, IdxSet), &TauFraction)> {
        self.terms.iter()
    }

    pub fn coeff(&self, k: &[i64], set: IdxSet) -> TauFraction {
        self.terms
            .get(&(k.to_vec(), set))
            .cloned()
            .unwrap_or_else(TauFraction::zero)
    }

    fn add_term(&mut self, k: Vec<i64>, set: IdxSet, c: TauFraction) {
        if c.is_zero() {
            return;
        }
        let key = (k, set);
        let entry = self.terms.entry(key.clone()).or_insert_with(TauFraction::zero);
        *entry = &*entry + &c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, rhs: &LogForm) -> Result<LogForm> {
        self.ctx.check(&rhs.ctx)?;
        let mut out = self.clone();
        for ((k, set), c) in &rhs.terms {
            out.add_term(k.clone(), *set, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &LogForm) -> Result<LogForm> {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> LogForm {
        LogForm {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(key, c)| (key.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, c: &TauFraction) -> LogForm {
        if c.is_zero() {
            return LogForm::zero(self.ctx);
        }
        LogForm {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(key, v)| (key.clone(), v * c)).collect(),
        }
    }

    /// Graded-commutative product with the Koszul sign.
    pub fn wedge(&self, rhs: &LogForm) -> Result<LogForm> {
        self.ctx.check(&rhs.ctx)?;
        let mut out = LogForm::zero(self.ctx);
        for ((ka, sa), ca) in &self.terms {
            for ((kb, sb), cb) in &rhs.terms {
                let Some((set, sign)) = sa.wedge_sign(sb) else {
                    continue;
                };
                let k: Vec<i64> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                out.add_term(k, set, &(ca * cb) * &sign_fraction(sign));
            }
        }
        Ok(out)
    }

    /// The de Rham differential: d(x^k dlog x_I) = Σ_i k_i x^k dlog x_i ∧ dlog x_I.
    pub fn exterior_d(&self) -> LogForm {
        let mut out = LogForm::zero(self.ctx);
        for ((k, set), c) in &self.terms {
            for i in 1..=self.ctx.n {
                let ki = k[i - 1];
                if ki == 0 {
                    continue;
                }
                let Some((merged, sign)) = IdxSet::from_indices(&[i]).wedge_sign(set) else {
                    continue;
                };
                out.add_term(
                    k.clone(),
                    merged,
                    c.scaled(&Rational::from_int(ki * sign)),
                );
            }
        }
        out
    }

    /// Contraction by a single frame vector e_i in the first slot:
    /// ι_{e_i}(dlog x_I) = (−1)^{position of i in I} dlog x_{I∖i}.
    fn contract_frame(&self, i: usize) -> LogForm {
        let mut out = LogForm::zero(self.ctx);
        for ((k, set), c) in &self.terms {
            if !set.contains(i) {
                continue;
            }
            let (rest, sign) = set.remove_sign(i);
            out.add_term(k.clone(), rest, c * &sign_fraction(sign));
        }
        out
    }

    /// Contraction by the wedge e_J, J = {j₁<…<j_m}, as the composite
    /// ι_{e_{j₁}}∘…∘ι_{e_{j_m}} (so ι_{e_{j_m}} acts first).
    fn contract_wedge(&self, set: IdxSet) -> LogForm {
        let mut out = self.clone();
        for &j in set.indices().iter().rev() {
            out = out.contract_frame(j);
        }
        out
    }

    /// True when no term carries a nonzero monomial (invariant form).
    pub fn is_invariant(&self) -> bool {
        self.terms.keys().all(|(k, _)| k.iter().all(|&x| x == 0))
    }

    /// The part of the given form degree.
    pub fn degree_component(&self, p: usize) -> LogForm {
        LogForm {
            ctx: self.ctx,
            terms: self
                .terms
                .iter()
                .filter(|((_, set), _)| set.len() == p)
                .map(|(key, c)| (key.clone(), c.clone()))
                .collect(),
        }
    }

    /// The form degrees present.
    pub fn degrees(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.terms.keys().map(|(_, set)| set.len()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

// ---------------------------------------------------------------------------
// Polyvector
// ---------------------------------------------------------------------------

/// An invariant polyvector Σ c_J e_J in the frame e_i = x_i ∂_{x_i}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polyvector {
    ctx: TorusContext,
    terms: BTreeMap<IdxSet, TauFraction>,
}

impl Polyvector {
    pub fn zero(ctx: TorusContext) -> Self {
        Polyvector {
            ctx,
            terms: BTreeMap::new(),
        }
    }

    /// c · e_J.
    pub fn wedge_term(ctx: TorusContext, set: IdxSet, c: TauFraction) -> Self {
        assert!(set.indices().iter().all(|&i| i <= ctx.n), "index out of range");
        let mut p = Polyvector::zero(ctx);
        p.add_term(set, c);
        p
    }

    /// The bivector σ = Σ_{i<j} λ_{ij} e_i∧e_j of a bracket
    /// {x_i, x_j} = λ_{ij} x_i x_j.
    pub fn from_lambda(ctx: TorusContext, entries: &[(usize, usize, TauFraction)]) -> Self {
        let mut p = Polyvector::zero(ctx);
        for (i, j, c) in entries {
            assert!(i < j, "strictly upper-triangular entries required");
            p.add_term(IdxSet::from_indices(&[*i, *j]), c.clone());
        }
        p
    }

    fn add_term(&mut self, set: IdxSet, c: TauFraction) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(set).or_insert_with(TauFraction::zero);
        *entry = &*entry + &c;
        if entry.is_zero() {
            self.terms.remove(&set);
        }
    }

    pub fn context(&self) -> TorusContext {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&IdxSet, &TauFraction)> {
        self.terms.iter()
    }

    pub fn add(&self, rhs: &Polyvector) -> Result<Polyvector> {
        if self.ctx != rhs.ctx {
            return Err(Error::DimensionMismatch {
                expected: self.ctx.n,
                got: rhs.ctx.n,
            });
        }
        let mut out = self.clone();
        for (set, c) in rhs.terms.iter() {
            out.add_term(*set, c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Polyvector {
        Polyvector {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(set, c)| (*set, -c)).collect(),
        }
    }

    pub fn scale(&self, c: &TauFraction) -> Polyvector {
        if c.is_zero() {
            return Polyvector::zero(self.ctx);
        }
        Polyvector {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(set, v)| (*set, v * c)).collect(),
        }
    }

    pub fn is_pure_degree(&self, m: usize) -> bool {
        self.terms.keys().all(|set| set.len() == m)
    }
}

/// First-slot contraction ι_p applied to a form, extended bilinearly.
pub fn contract(p: &Polyvector, a: &LogForm) -> Result<LogForm> {
    p.context().check(&a.context())?;
    let mut out = LogForm::zero(a.context());
    for (set, c) in p.terms() {
        out = out.add(&a.contract_wedge(*set).scale(c))?;
    }
    Ok(out)
}

/// The Brylinski–Koszul operator δ_σ = [d, ι_σ] = d ι_σ − ι_σ d for a
/// bivector σ.
pub fn poisson_delta(sigma: &Polyvector, a: &LogForm) -> Result<LogForm> {
    if !sigma.is_pure_degree(2) {
        return Err(Error::DegreeMismatch(
            "Poisson bivector must have pure degree 2".into(),
        ));
    }
    let first = contract(sigma, a)?.exterior_d();
    let second = contract(sigma, &a.exterior_d())?;
    first.sub(&second)
}

// ---------------------------------------------------------------------------
// PeriodicForm
// ---------------------------------------------------------------------------

/// A finite u-Laurent combination of log forms: Σ_j u^j ω_j.  A term of
/// form-degree p at u-level j contributes to K-degree 2j − p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicForm {
    ctx: TorusContext,
    terms: BTreeMap<i64, LogForm>,
}

impl PeriodicForm {
    pub fn zero(ctx: TorusContext) -> Self {
        PeriodicForm {
            ctx,
            terms: BTreeMap::new(),
        }
    }

    /// u^level · form.
    pub fn from_level(level: i64, form: LogForm) -> Self {
        let ctx = form.context();
        let mut w = PeriodicForm::zero(ctx);
        w.add_level(level, form);
        w
    }

    pub fn context(&self) -> TorusContext {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn levels(&self) -> impl Iterator<Item = (&i64, &LogForm)> {
        self.terms.iter()
    }

    pub fn level(&self, j: i64) -> LogForm {
        self.terms.get(&j).cloned().unwrap_or_else(|| LogForm::zero(self.ctx))
    }

    fn add_level(&mut self, level: i64, form: LogForm) {
        if form.is_zero() {
            return;
        }
        match self.terms.get_mut(&level) {
            Some(existing) => {
                let sum = existing.add(&form).expect("same context");
                if sum.is_zero() {
                    self.terms.remove(&level);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(level, form);
            }
        }
    }

    pub fn add(&self, rhs: &PeriodicForm) -> Result<PeriodicForm> {
        self.ctx.check(&rhs.ctx)?;
        let mut out = self.clone();
        for (level, form) in &rhs.terms {
            out.add_level(*level, form.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &PeriodicForm) -> Result<PeriodicForm> {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> PeriodicForm {
        PeriodicForm {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(level, f)| (*level, f.neg())).collect(),
        }
    }

    pub fn scale(&self, c: &TauFraction) -> PeriodicForm {
        if c.is_zero() {
            return PeriodicForm::zero(self.ctx);
        }
        PeriodicForm {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(level, f)| (*level, f.scale(c))).collect(),
        }
    }

    /// Multiplication by u^k.
    pub fn shift_u(&self, k: i64) -> PeriodicForm {
        PeriodicForm {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(level, f)| (level + k, f.clone())).collect(),
        }
    }

    /// Levelwise de Rham differential.
    pub fn exterior_d(&self) -> PeriodicForm {
        let mut out = PeriodicForm::zero(self.ctx);
        for (level, f) in &self.terms {
            out.add_level(*level, f.exterior_d());
        }
        out
    }

    /// Levelwise δ_σ.
    pub fn poisson_delta(&self, sigma: &Polyvector) -> Result<PeriodicForm> {
        let mut out = PeriodicForm::zero(self.ctx);
        for (level, f) in &self.terms {
            out.add_level(*level, poisson_delta(sigma, f)?);
        }
        Ok(out)
    }

    pub fn wedge(&self, rhs: &PeriodicForm) -> Result<PeriodicForm> {
        self.ctx.check(&rhs.ctx)?;
        let mut out = PeriodicForm::zero(self.ctx);
        for (la, fa) in &self.terms {
            for (lb, fb) in &rhs.terms {
                out.add_level(la + lb, fa.wedge(fb)?);
            }
        }
        Ok(out)
    }

    pub fn is_invariant(&self) -> bool {
        self.terms.values().all(LogForm::is_invariant)
    }
}

/// The transport operator e^{ι_σ/u} = Σ_m ι_σ^m/(m! u^m) applied to a
/// periodic form; finite because contraction by a bivector drops form
/// degree by 2.
pub fn transport_operator(sigma: &Polyvector, w: &PeriodicForm) -> Result<PeriodicForm> {
    if !sigma.is_pure_degree(2) {
        return Err(Error::DegreeMismatch(
            "transport requires a degree-2 polyvector".into(),
        ));
    }
    sigma.context().check(&w.context())?;
    let mut out = PeriodicForm::zero(w.context());
    for (level, form) in w.levels() {
        let mut current = form.clone();
        let mut m: i64 = 0;
        let mut factorial = Rational::one();
        loop {
            out.add_level(
                level - m,
                current.scale(&TauFraction::from_rational(
                    Rational::one() / factorial.clone(),
                )),
            );
            if current.is_zero() {
                break;
            }
            current = contract(sigma, &current)?;
            m += 1;
            factorial = &factorial * &Rational::from_int(m);
            if current.is_zero() {
                break;
            }
        }
    }
    Ok(out)
}

/// The Mukai involution ω ↦ ω^∨: a u^j-level form of degree p is scaled
/// by (−1)^{j−p} (the ⋄-action of −1).
pub fn mukai_involution(w: &PeriodicForm) -> PeriodicForm {
    let ctx = w.context();
    let mut out = PeriodicForm::zero(ctx);
    for (level, form) in w.levels() {
        for ((k, set), c) in form.terms() {
            let exponent = level - set.len() as i64;
            let sign = if exponent.rem_euclid(2) == 0 { 1 } else { -1 };
            out.add_level(
                *level,
                LogForm::monomial(ctx, k.clone(), *set, c * &sign_fraction(sign)),
            );
        }
    }
    out
}

/// The filtered integration pairing of invariant periodic forms:
/// τⁿ times the dlog x_1∧…∧dlog x_n coefficient of v^∨ ∧ w, collected
/// by u-power (∫ of the top dlog form over (S¹)ⁿ is (2πi)ⁿ).
pub fn integration_pairing(
    v: &PeriodicForm,
    w: &PeriodicForm,
) -> Result<BTreeMap<i64, TauFraction>> {
    v.context().check(&w.context())?;
    if !v.is_invariant() || !w.is_invariant() {
        return Err(Error::Domain(
            "integration pairing requires invariant forms".into(),
        ));
    }
    let n = v.context().n;
    let tau_n = TauFraction::from_scalar(crate::scalars::TauScalar::tau_pow(n as i64));
    let product = mukai_involution(v).wedge(w)?;
    let zero_mono = vec![0i64; n];
    let mut out = BTreeMap::new();
    for (level, form) in product.levels() {
        let c = form.coeff(&zero_mono, IdxSet::full(n));
        if !c.is_zero() {
            out.insert(*level, &c * &tau_n);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::TauScalar;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tf(n: i64) -> TauFraction {
        TauFraction::from_int(n)
    }

    fn random_fraction(rng: &mut ChaCha8Rng) -> TauFraction {
        let num = TauScalar::from_terms([
            (0, Rational::new(rng.gen_range(-4..=4), 1 + rng.gen_range(0..3))),
            (rng.gen_range(-1..=2), Rational::from_int(rng.gen_range(-3..=3))),
        ]);
        if num.is_zero() {
            TauFraction::one()
        } else {
            TauFraction::from_scalar(num)
        }
    }

    fn random_logform(rng: &mut ChaCha8Rng, ctx: TorusContext, terms: usize) -> LogForm {
        let mut f = LogForm::zero(ctx);
        for _ in 0..terms {
            let k: Vec<i64> = (0..ctx.n).map(|_| rng.gen_range(-2..=2)).collect();
            let bits = rng.gen_range(0..(1u64 << ctx.n));
            f = f
                .add(&LogForm::monomial(ctx, k, IdxSet(bits), random_fraction(rng)))
                .unwrap();
        }
        f
    }

    fn random_bivector(rng: &mut ChaCha8Rng, ctx: TorusContext) -> Polyvector {
        let mut entries = Vec::new();
        for i in 1..=ctx.n {
            for j in i + 1..=ctx.n {
                entries.push((i, j, random_fraction(rng)));
            }
        }
        Polyvector::from_lambda(ctx, &entries)
    }

    #[test]
    fn wedge_examples() {
        let ctx = TorusContext::new(2);
        let d1 = LogForm::dlog(ctx, 1);
        let d2 = LogForm::dlog(ctx, 2);
        let d12 = LogForm::dlog_set(ctx, IdxSet::from_indices(&[1, 2]));
        assert_eq!(d1.wedge(&d2).unwrap(), d12);
        assert_eq!(d2.wedge(&d1).unwrap(), d12.neg());

        // (x₁ dlog x₁) ∧ (x₁² dlog x₂) = x₁³ dlog x₁∧dlog x₂.
        let a = LogForm::monomial(ctx, vec![1, 0], IdxSet::from_indices(&[1]), tf(1));
        let b = LogForm::monomial(ctx, vec![2, 0], IdxSet::from_indices(&[2]), tf(1));
        let expect = LogForm::monomial(ctx, vec![3, 0], IdxSet::from_indices(&[1, 2]), tf(1));
        assert_eq!(a.wedge(&b).unwrap(), expect);
    }

    #[test]
    fn exterior_d_examples() {
        let ctx = TorusContext::new(2);
        // d(x₁) = x₁ dlog x₁.
        let x1 = LogForm::monomial(ctx, vec![1, 0], IdxSet::empty(), tf(1));
        assert_eq!(
            x1.exterior_d(),
            LogForm::monomial(ctx, vec![1, 0], IdxSet::from_indices(&[1]), tf(1))
        );
        // d(dlog x₁) = 0.
        assert!(LogForm::dlog(ctx, 1).exterior_d().is_zero());
        // d(x₁x₂ dlog x₂) = x₁x₂ dlog x₁∧dlog x₂.
        let f = LogForm::monomial(ctx, vec![1, 1], IdxSet::from_indices(&[2]), tf(1));
        assert_eq!(
            f.exterior_d(),
            LogForm::monomial(ctx, vec![1, 1], IdxSet::from_indices(&[1, 2]), tf(1))
        );
    }

    #[test]
    fn contraction_anchor() {
        let ctx = TorusContext::new(2);
        let sigma = Polyvector::wedge_term(ctx, IdxSet::from_indices(&[1, 2]), tf(1));
        // ι_{e₁∧e₂}(dlog x₂∧dlog x₁) = 1.
        let d21 = LogForm::dlog(ctx, 2).wedge(&LogForm::dlog(ctx, 1)).unwrap();
        assert_eq!(contract(&sigma, &d21).unwrap(), LogForm::one(ctx));
        // ι_{e₁}(dlog x₁∧dlog x₂) = dlog x₂.
        let d12 = LogForm::dlog_set(ctx, IdxSet::from_indices(&[1, 2]));
        let e1 = Polyvector::wedge_term(ctx, IdxSet::from_indices(&[1]), tf(1));
        assert_eq!(contract(&e1, &d12).unwrap(), LogForm::dlog(ctx, 2));
        // ι_{e₁∧e₂}(dlog x₁∧dlog x₂) = −1.
        assert_eq!(contract(&sigma, &d12).unwrap(), LogForm::one(ctx).neg());
    }

    #[test]
    fn d_squared_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            let ctx = TorusContext::new(n);
            for _ in 0..20 {
                let f = random_logform(&mut rng, ctx, 4);
                assert!(f.exterior_d().exterior_d().is_zero());
            }
        }
    }

    #[test]
    fn delta_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 2..=3 {
            let ctx = TorusContext::new(n);
            for _ in 0..15 {
                let sigma = random_bivector(&mut rng, ctx);
                let f = random_logform(&mut rng, ctx, 3);
                // δ_σ kills invariant forms.
                let inv = LogForm::dlog_set(ctx, IdxSet::from_indices(&[1, 2]));
                assert!(poisson_delta(&sigma, &inv).unwrap().is_zero());
                // δ² = 0 and dδ + δd = 0.
                let df = poisson_delta(&sigma, &f).unwrap();
                assert!(poisson_delta(&sigma, &df).unwrap().is_zero());
                let anti = df
                    .exterior_d()
                    .add(&poisson_delta(&sigma, &f.exterior_d()).unwrap())
                    .unwrap();
                assert!(anti.is_zero());
            }
        }
    }

    #[test]
    fn contraction_preserves_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ctx = TorusContext::new(3);
        for _ in 0..10 {
            let sigma = random_bivector(&mut rng, ctx);
            let f = LogForm::dlog_set(ctx, IdxSet::from_indices(&[1, 2, 3]));
            assert!(contract(&sigma, &f).unwrap().is_invariant());
        }
    }

    #[test]
    fn transport_examples() {
        let ctx = TorusContext::new(2);
        // e^{ι_σ/u}(1) = 1.
        let sigma = Polyvector::from_lambda(ctx, &[(1, 2, tf(5))]);
        let one = PeriodicForm::from_level(0, LogForm::one(ctx));
        assert_eq!(transport_operator(&sigma, &one).unwrap(), one);

        // e^{ι_σ/u}(dlog x₂∧dlog x₁) = dlog x₂∧dlog x₁ + λ/u.
        let lam = TauFraction::from_scalar(TauScalar::term(1, Rational::new(3, 7)));
        let sigma = Polyvector::from_lambda(ctx, &[(1, 2, lam.clone())]);
        let d21 = LogForm::dlog(ctx, 2).wedge(&LogForm::dlog(ctx, 1)).unwrap();
        let w = PeriodicForm::from_level(0, d21.clone());
        let got = transport_operator(&sigma, &w).unwrap();
        let expect = PeriodicForm::from_level(0, d21)
            .add(&PeriodicForm::from_level(-1, LogForm::scalar(ctx, lam)))
            .unwrap();
        assert_eq!(got, expect);
    }

    #[test]
    fn transport_double_contraction_top_form() {
        // n = 4: the u⁻²-level of e^{ι_σ/u}(top form) is ι_σ²/2 of it.
        let ctx = TorusContext::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let sigma = random_bivector(&mut rng, ctx);
        let top = PeriodicForm::from_level(0, LogForm::dlog_set(ctx, IdxSet::full(4)));
        let got = transport_operator(&sigma, &top).unwrap();
        let once = contract(&sigma, &LogForm::dlog_set(ctx, IdxSet::full(4))).unwrap();
        let twice = contract(&sigma, &once).unwrap();
        assert_eq!(
            got.level(-2),
            twice.scale(&TauFraction::from_rational(Rational::new(1, 2)))
        );
    }

    #[test]
    fn transport_inverse_composes_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let ctx = TorusContext::new(3);
        for _ in 0..10 {
            let sigma = random_bivector(&mut rng, ctx);
            let w = PeriodicForm::from_level(0, random_logform(&mut rng, ctx, 3));
            let forward = transport_operator(&sigma, &w).unwrap();
            let back = transport_operator(&sigma.neg(), &forward).unwrap();
            assert_eq!(back, w);
        }
    }

    #[test]
    fn mukai_involution_examples() {
        let ctx = TorusContext::new(2);
        let one = PeriodicForm::from_level(0, LogForm::one(ctx));
        assert_eq!(mukai_involution(&one), one);

        let d12 = PeriodicForm::from_level(0, LogForm::dlog_set(ctx, IdxSet::from_indices(&[1, 2])));
        assert_eq!(mukai_involution(&d12), d12);

        let u1 = PeriodicForm::from_level(1, LogForm::one(ctx));
        assert_eq!(mukai_involution(&u1), u1.neg());

        // Involutivity on a random mix.
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let w = PeriodicForm::from_level(2, random_logform(&mut rng, ctx, 4))
            .add(&PeriodicForm::from_level(-1, random_logform(&mut rng, ctx, 4)))
            .unwrap();
        assert_eq!(mukai_involution(&mukai_involution(&w)), w);
    }

    #[test]
    fn integration_pairing_examples() {
        let ctx = TorusContext::new(2);
        let tau2 = TauFraction::from_scalar(TauScalar::tau_pow(2));
        let one = PeriodicForm::from_level(0, LogForm::one(ctx));
        let top = PeriodicForm::from_level(0, LogForm::dlog_set(ctx, IdxSet::full(2)));
        let pairing = integration_pairing(&one, &top).unwrap();
        assert_eq!(pairing, BTreeMap::from([(0, tau2)]));

        let d1 = PeriodicForm::from_level(0, LogForm::dlog(ctx, 1));
        assert!(integration_pairing(&d1, &d1).unwrap().is_empty());

        // Non-invariant input is rejected.
        let bad = PeriodicForm::from_level(
            0,
            LogForm::monomial(ctx, vec![1, 0], IdxSet::empty(), tf(1)),
        );
        assert!(integration_pairing(&bad, &top).is_err());
    }

    #[test]
    fn exp_conjugation_identity_smoke() {
        // e^{−ι_σ/u}(u·d(e^{ι_σ/u} ω)) = δ_σ ω + u·dω on random data.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 2..=3 {
            let ctx = TorusContext::new(n);
            for _ in 0..10 {
                let sigma = random_bivector(&mut rng, ctx);
                let omega = PeriodicForm::from_level(rng.gen_range(-1..=1), random_logform(&mut rng, ctx, 3));
                let lhs = transport_operator(
                    &sigma.neg(),
                    &transport_operator(&sigma, &omega).unwrap().exterior_d().shift_u(1),
                )
                .unwrap();
                let rhs = omega
                    .poisson_delta(&sigma)
                    .unwrap()
                    .add(&omega.exterior_d().shift_u(1))
                    .unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn context_mismatch_is_reported() {
        let a = LogForm::dlog(TorusContext::new(2), 1);
        let b = LogForm::dlog(TorusContext::new(3), 1);
        assert!(a.wedge(&b).is_err());
    }
}
