//! The K-theory mixed Hodge structure of a Poisson torus.
//!
//! For a log-constant Poisson bivector σ = Σ_{i<j} λ_{ij} e_i∧e_j on
//! the n-torus, this module assembles the even/odd K-lattice with its
//! charge map into the invariant de Rham model, the weight filtration,
//! the σ-deformed Hodge flag e^{ι_σ}(∧^{≥2p−•}), the ⋄ (Adams-type)
//! rescaling action, quantum parameters with a Carlson-class
//! cross-check, Torelli and zero-obstruction tests, and the
//! infinitesimal period map.

use std::collections::BTreeMap;

use itertools::Itertools;

use crate::exterior::{contract, IdxSet, LogForm, Polyvector, TorusContext};
use crate::linalg::{IntMat, QMat};
use crate::mhs::{
    carlson_class, ExtensionMaps, JacobianElement, MixedHodgeStructure, Subspace,
};
use crate::scalars::{exp_equal, ExpValue, Rational, TauFraction, TauScalar};
use crate::{Error, Result};

/// A constant Poisson structure on the n-torus: {x_i, x_j} = λ_{ij} x_i x_j
/// with a strictly upper-triangular log-parameter matrix (λ_{ij})_{i<j}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToricPoissonStructure {
    n: usize,
    lambda: BTreeMap<(usize, usize), TauScalar>,
}

impl ToricPoissonStructure {
    /// Build from 1-based strictly upper-triangular entries (i < j ≤ n).
    pub fn new(n: usize, entries: &[(usize, usize, TauScalar)]) -> Result<Self> {
        if n == 0 || n > 16 {
            return Err(Error::Domain("torus dimension must be in 1..=16".into()));
        }
        let mut lambda = BTreeMap::new();
        for (i, j, v) in entries {
            if !(1 <= *i && i < j && *j <= n) {
                return Err(Error::Domain(format!(
                    "λ index ({i},{j}) is not strictly upper-triangular in 1..={n}"
                )));
            }
            if !v.is_zero() {
                lambda.insert((*i, *j), v.clone());
            }
        }
        Ok(ToricPoissonStructure { n, lambda })
    }

    pub fn zero(n: usize) -> Self {
        ToricPoissonStructure::new(n, &[]).expect("valid dimension")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self, i: usize, j: usize) -> TauScalar {
        self.lambda.get(&(i, j)).cloned().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &TauScalar)> {
        self.lambda.iter()
    }

    pub fn context(&self) -> TorusContext {
        TorusContext::new(self.n)
    }

    /// The bivector Σ λ_{ij} e_i∧e_j.
    pub fn polyvector(&self) -> Polyvector {
        let entries: Vec<(usize, usize, TauFraction)> = self
            .lambda
            .iter()
            .map(|(&(i, j), v)| (i, j, TauFraction::from_scalar(v.clone())))
            .collect();
        Polyvector::from_lambda(self.context(), &entries)
    }

    /// The structure ħσ for a polynomial scale factor.
    pub fn scaled(&self, hbar: &TauScalar) -> ToricPoissonStructure {
        let entries: Vec<_> = self
            .lambda
            .iter()
            .map(|(&(i, j), v)| (i, j, hbar * v))
            .collect();
        ToricPoissonStructure::new(self.n, &entries).expect("same shape")
    }
}

// ---------------------------------------------------------------------------
// Coordinate model
// ---------------------------------------------------------------------------

/// All index subsets of {1..n} of size ≡ parity (mod 2), ordered by
/// (size, then lexicographically).  These index the coordinates of the
/// invariant-form model of K⁰ (parity 0) resp. K¹ (parity 1).
pub fn parity_subsets(n: usize, parity: u8) -> Vec<IdxSet> {
    let mut out = Vec::new();
    let mut m = parity as usize;
    while m <= n {
        for combo in (1..=n).combinations(m) {
            out.push(IdxSet::from_indices(&combo));
        }
        m += 2;
    }
    out
}

fn subsets_of_size(n: usize, m: usize) -> Vec<IdxSet> {
    (1..=n)
        .combinations(m)
        .map(|c| IdxSet::from_indices(&c))
        .collect()
}

/// Coordinates of an invariant form with respect to a subset basis.
fn coords_of(form: &LogForm, subsets: &[IdxSet]) -> Result<Vec<TauFraction>> {
    if !form.is_invariant() {
        return Err(Error::Domain("form is not invariant".into()));
    }
    let zero_k = vec![0i64; form.context().n];
    let mut out = vec![TauFraction::zero(); subsets.len()];
    let mut seen = 0usize;
    for (idx, s) in subsets.iter().enumerate() {
        let c = form.coeff(&zero_k, *s);
        if !c.is_zero() {
            seen += 1;
        }
        out[idx] = c;
    }
    let total = form.terms().filter(|(_, c)| !c.is_zero()).count();
    if seen != total {
        return Err(Error::Domain(
            "form has components outside the parity model".into(),
        ));
    }
    Ok(out)
}

/// e^{ι_σ} at u = 1: Σ_k ι_σ^k / k!, exact because contraction is
/// nilpotent.
pub fn exp_contract(sigma: &Polyvector, form: &LogForm) -> Result<LogForm> {
    let mut acc = form.clone();
    let mut cur = form.clone();
    let mut k: i64 = 1;
    loop {
        cur = contract(sigma, &cur)?;
        if cur.is_zero() {
            break;
        }
        cur = cur.scale(&TauFraction::from_rational(Rational::new(1, k)));
        acc = acc.add(&cur)?;
        k += 1;
    }
    Ok(acc)
}

/// A decreasing Hodge-type flag, stored as the distinct steps of an
/// increasing label list, as consumed by [`MixedHodgeStructure`].
pub type HodgeFlag = Vec<(i64, Subspace)>;

/// The σ-deformed Hodge flag F^p = e^{ι_σ}(∧^{≥2p−parity}) in the
/// parity coordinate model, for an arbitrary (possibly
/// fraction-coefficient) bivector.
pub fn flag_of_polyvector(n: usize, sigma: &Polyvector, parity: u8) -> Result<HodgeFlag> {
    let ctx = TorusContext::new(n);
    let subsets = parity_subsets(n, parity);
    let dim = subsets.len();
    let p_max = ((n + parity as usize) / 2) as i64;
    let p_first_full = parity as i64; // largest p with F^p = everything
    let mut flag: HodgeFlag = vec![(p_first_full, Subspace::full(dim))];
    for p in (p_first_full + 1)..=p_max {
        let mut rows = QMat::zeros(0, dim);
        let mut m = parity as usize;
        while m <= n {
            if (m as i64) >= 2 * p - parity as i64 {
                for s in subsets_of_size(n, m) {
                    let image = exp_contract(sigma, &LogForm::dlog_set(ctx, s))?;
                    let coords = coords_of(&image, &subsets)?;
                    let mut row = QMat::zeros(1, dim);
                    for (idx, c) in coords.into_iter().enumerate() {
                        row[(0, idx)] = c;
                    }
                    rows = rows.vstack(&row);
                }
            }
            m += 2;
        }
        flag.push((p, Subspace::from_rows(&rows)));
    }
    flag.push((p_max + 1, Subspace::zero(dim)));
    Ok(flag)
}

/// [`flag_of_polyvector`] for a toric Poisson structure.
pub fn poisson_hodge_flag(sigma: &ToricPoissonStructure, parity: u8) -> Result<HodgeFlag> {
    flag_of_polyvector(sigma.n, &sigma.polyvector(), parity)
}

// ---------------------------------------------------------------------------
// The K-theory mixed Hodge structure
// ---------------------------------------------------------------------------

/// The even (parity 0) or odd (parity 1) K-lattice of a Poisson torus
/// with its mixed Hodge structure, together with the subset basis that
/// labels the coordinates.
#[derive(Clone, Debug)]
pub struct ToricKMhs {
    pub parity: u8,
    pub subsets: Vec<IdxSet>,
    pub mhs: MixedHodgeStructure,
}

/// Builds the K-theory MHS of σ with the deformed flag.
///
/// Lattice generators are the reversed wedges l_{i_m}∧…∧l_{i₁}, so the
/// charge of the (i,j)-pair generator is τ^{−1}·dlog x_j∧dlog x_i and
/// the comparison in sorted-dlog coordinates is diagonal with entries
/// (−1)^{m(m−1)/2}·τ^{−j} on the ∧^{2j+parity}-block.  Block weights
/// are 2j (parity 0) resp. 2j+2 (parity 1).
pub fn toric_k_mhs(sigma: &ToricPoissonStructure, parity: u8) -> Result<ToricKMhs> {
    toric_k_mhs_shifted(sigma, parity, 0)
}

/// The same structure with every block reindexed by `shift` Tate
/// twists (comparison multiplied by τ^shift, weights lowered by
/// 2·shift, Hodge labels by shift) — multiplication by u^shift in the
/// periodicity direction.
pub fn toric_k_mhs_shifted(
    sigma: &ToricPoissonStructure,
    parity: u8,
    shift: i64,
) -> Result<ToricKMhs> {
    if parity > 1 {
        return Err(Error::Domain("parity must be 0 or 1".into()));
    }
    let n = sigma.n;
    let subsets = parity_subsets(n, parity);
    let dim = subsets.len();

    let comparison = QMat::from_fn(dim, dim, |i, j| {
        if i != j {
            return TauFraction::zero();
        }
        let m = subsets[i].len() as i64;
        let level = (m - parity as i64) / 2;
        let sign = if (m * (m - 1) / 2) % 2 == 0 { 1 } else { -1 };
        TauFraction::from_scalar(
            TauScalar::tau_pow(shift - level).scaled(&Rational::from_int(sign)),
        )
    });

    // Weight steps: W_{2j+2·parity − 2·shift} spans blocks of size ≤ 2j+parity.
    let mut weight: Vec<(i64, Subspace)> = Vec::new();
    let mut m = parity as usize;
    while m <= n {
        let label = (m as i64 - parity as i64) + 2 * parity as i64 - 2 * shift;
        let cutoff = m;
        let rows = QMat::from_fn(
            subsets.iter().filter(|s| s.len() <= cutoff).count(),
            dim,
            |i, j| {
                if i == j {
                    TauFraction::one()
                } else {
                    TauFraction::zero()
                }
            },
        );
        weight.push((label, Subspace::from_rows(&rows)));
        m += 2;
    }

    let hodge: HodgeFlag = poisson_hodge_flag(sigma, parity)?
        .into_iter()
        .map(|(p, s)| (p - shift, s))
        .collect();

    let mhs = MixedHodgeStructure::new(comparison, weight, hodge)?;
    Ok(ToricKMhs {
        parity,
        subsets,
        mhs,
    })
}

// ---------------------------------------------------------------------------
// Adams ⋄-action
// ---------------------------------------------------------------------------

fn frac_pow(h: &TauFraction, k: i64) -> Result<TauFraction> {
    let base = if k >= 0 { h.clone() } else { h.recip()? };
    let mut out = TauFraction::one();
    for _ in 0..k.unsigned_abs() {
        out = &out * &base;
    }
    Ok(out)
}

/// The ⋄-action ħ⋄ on an invariant form: the degree-(2j+parity)
/// component is scaled by ħ^{−j}.
pub fn adams_scale_form(hbar: &TauFraction, form: &LogForm) -> Result<LogForm> {
    if hbar.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let ctx = form.context();
    let mut out = LogForm::zero(ctx);
    for d in form.degrees() {
        let j = (d / 2) as i64;
        let scaled = form.degree_component(d).scale(&frac_pow(hbar, -j)?);
        out = out.add(&scaled)?;
    }
    Ok(out)
}

/// The ⋄-action on a flag in the parity coordinate model:
/// componentwise rescaling followed by re-canonicalization.
pub fn adams_scale_flag(
    hbar: &TauFraction,
    flag: &HodgeFlag,
    n: usize,
    parity: u8,
) -> Result<HodgeFlag> {
    if hbar.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let subsets = parity_subsets(n, parity);
    let dim = subsets.len();
    let mut op = QMat::zeros(dim, dim);
    for (i, s) in subsets.iter().enumerate() {
        let j = ((s.len() - parity as usize) / 2) as i64;
        op[(i, i)] = frac_pow(hbar, -j)?;
    }
    Ok(flag
        .iter()
        .map(|(p, s)| (*p, s.map(&op)))
        .collect())
}

// ---------------------------------------------------------------------------
// Quantum parameters
// ---------------------------------------------------------------------------

/// Restrict a subspace supported on the first `k` coordinates to those
/// coordinates.
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

fn pair_list(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            out.push((i, j));
        }
    }
    out
}

/// The extension class of the W₂/W₀ subquotient of the even K-theory
/// MHS, as a Jacobian element with one column per pair (i < j).
pub fn k0_extension_class(sigma: &ToricPoissonStructure) -> Result<JacobianElement> {
    let n = sigma.n;
    let pairs = pair_list(n);
    let k = toric_k_mhs(sigma, 0)?;
    let r = 1 + pairs.len();

    // W₂ is the coordinate prefix {∅} ∪ {pairs}; restrict the structure.
    let w2 = k.mhs.weight_at(2);
    if w2.dim() != r {
        return Err(Error::Domain("unexpected W₂ dimension".into()));
    }
    let comparison = QMat::from_fn(r, r, |i, j| k.mhs.comparison()[(i, j)].clone());
    let mut hodge: HodgeFlag = Vec::new();
    for (p, s) in k.mhs.hodge_steps() {
        if *p >= 2 {
            break;
        }
        hodge.push((*p, restrict_prefix(&s.intersect(&w2), r)?));
    }
    hodge.push((2, Subspace::zero(r)));
    let weight = vec![
        (0, restrict_prefix(&k.mhs.weight_at(0), r)?),
        (2, Subspace::full(r)),
    ];
    let total = MixedHodgeStructure::new(comparison, weight, hodge)?;

    let sub = MixedHodgeStructure::tate(0);
    let quot_cmp = QMat::from_fn(pairs.len(), pairs.len(), |i, j| {
        if i == j {
            TauFraction::from_scalar(TauScalar::tau_pow(-1).scaled(&Rational::from_int(-1)))
        } else {
            TauFraction::zero()
        }
    });
    let quot = MixedHodgeStructure::new(
        quot_cmp,
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
            .map(|i| {
                (0..r)
                    .map(|j| if j == i + 1 { 1 } else { 0 })
                    .collect()
            })
            .collect::<Vec<_>>(),
    );
    carlson_class(&sub, &total, &quot, &ExtensionMaps { inj, proj })
}

/// Quantum parameters of the even K-theory: (Exp(λ_{ij}))_{i<j}.
///
/// Each entry is recomputed independently through the Carlson class of
/// the W₂/W₀ subquotient and the two paths are asserted to agree; a
/// mismatch is reported as a domain error (it would indicate a bug).
pub fn quantum_parameter(
    sigma: &ToricPoissonStructure,
) -> Result<BTreeMap<(usize, usize), ExpValue>> {
    let n = sigma.n;
    let pairs = pair_list(n);
    let mut out = BTreeMap::new();
    for &(i, j) in &pairs {
        out.insert((i, j), ExpValue::new(sigma.lambda(i, j)));
    }
    if pairs.is_empty() {
        return Ok(out);
    }
    let class = k0_extension_class(sigma)?;
    let tau = TauFraction::from_scalar(TauScalar::tau());
    for (col, &(i, j)) in pairs.iter().enumerate() {
        let entry = &class.representative()[(0, col)] * &tau;
        let log = entry.as_scalar().ok_or_else(|| {
            Error::Domain("quantum parameter cross-check produced a non-polynomial".into())
        })?;
        if !exp_equal(&ExpValue::new(log), &out[&(i, j)]) {
            return Err(Error::Domain(format!(
                "quantum parameter cross-check failed at ({i},{j})"
            )));
        }
    }
    Ok(out)
}

/// Quantum parameters read from the odd K-theory (n ≥ 3; empty below).
///
/// The parameter at (i,j) is extracted from the Carlson class of the
/// W₄/W₂ subquotient of K¹: with auxiliary index c ∉ {i,j} and
/// T = sort{i,j,c}, the (c,T)-entry of the class carries λ_{ij} with
/// the combinatorial sign (−1)^{position of c in T}.  Agreement with
/// the even-parity parameters is asserted.
pub fn quantum_parameter_k1(
    sigma: &ToricPoissonStructure,
) -> Result<BTreeMap<(usize, usize), ExpValue>> {
    let n = sigma.n;
    if n < 3 {
        return Ok(BTreeMap::new());
    }
    let k = toric_k_mhs(sigma, 1)?;
    let triples = subsets_of_size(n, 3);
    let r = n + triples.len();

    let w4 = k.mhs.weight_at(4);
    if w4.dim() != r {
        return Err(Error::Domain("unexpected W₄ dimension".into()));
    }
    let comparison = QMat::from_fn(r, r, |i, j| k.mhs.comparison()[(i, j)].clone());
    let weight = vec![
        (2, restrict_prefix(&k.mhs.weight_at(2), r)?),
        (4, Subspace::full(r)),
    ];
    let mut hodge: HodgeFlag = vec![(1, Subspace::full(r))];
    hodge.push((2, restrict_prefix(&k.mhs.hodge_at(2).intersect(&w4), r)?));
    hodge.push((3, Subspace::zero(r)));
    let total = MixedHodgeStructure::new(comparison, weight, hodge)?;

    // Sub: the ∧¹-block (weight 2, comparison the identity).
    let sub = MixedHodgeStructure::new(
        QMat::identity(n),
        vec![(2, Subspace::full(n))],
        vec![(1, Subspace::full(n)), (2, Subspace::zero(n))],
    )?;
    // Quotient: the ∧³-block (weight 4, comparison −τ^{−1}).
    let t = triples.len();
    let quot = MixedHodgeStructure::new(
        QMat::from_fn(t, t, |i, j| {
            if i == j {
                TauFraction::from_scalar(TauScalar::tau_pow(-1).scaled(&Rational::from_int(-1)))
            } else {
                TauFraction::zero()
            }
        }),
        vec![(4, Subspace::full(t))],
        vec![(2, Subspace::full(t)), (3, Subspace::zero(t))],
    )?;
    let inj = IntMat::from_rows(
        &(0..r)
            .map(|i| (0..n).map(|j| if i == j { 1 } else { 0 }).collect())
            .collect::<Vec<_>>(),
    );
    let proj = IntMat::from_rows(
        &(0..t)
            .map(|i| (0..r).map(|j| if j == n + i { 1 } else { 0 }).collect())
            .collect::<Vec<_>>(),
    );
    let class = carlson_class(&sub, &total, &quot, &ExtensionMaps { inj, proj })?;

    let even = quantum_parameter(sigma)?;
    let tau = TauFraction::from_scalar(TauScalar::tau());
    let mut out = BTreeMap::new();
    for (i, j) in pair_list(n) {
        let c = (1..=n).find(|c| *c != i && *c != j).expect("n ≥ 3");
        let mut triple = vec![i, j, c];
        triple.sort_unstable();
        let pos = triple.iter().position(|&x| x == c).unwrap();
        let eps = if pos % 2 == 0 { 1 } else { -1 };
        let col = triples
            .iter()
            .position(|s| *s == IdxSet::from_indices(&triple))
            .unwrap();
        let entry = &class.representative()[(c - 1, col)] * &tau;
        let log = entry
            .as_scalar()
            .ok_or_else(|| Error::Domain("odd-parity parameter is non-polynomial".into()))?
            .scaled(&Rational::from_int(eps));
        let param = ExpValue::new(log);
        if !exp_equal(&param, &even[&(i, j)]) {
            return Err(Error::Domain(format!(
                "odd/even quantum parameter mismatch at ({i},{j})"
            )));
        }
        out.insert((i, j), param);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Torelli, zero obstruction, infinitesimal periods
// ---------------------------------------------------------------------------

/// Whether two Poisson tori have equal quantum parameters, i.e.
/// λ − λ′ ∈ τ·(integer matrix).
pub fn torelli_equal(a: &ToricPoissonStructure, b: &ToricPoissonStructure) -> Result<bool> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            expected: a.n,
            got: b.n,
        });
    }
    for (i, j) in pair_list(a.n) {
        if !exp_equal(
            &ExpValue::new(a.lambda(i, j)),
            &ExpValue::new(b.lambda(i, j)),
        ) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The de Rham Euler characteristics χ_dR(β_{ji}) of the F¹-generators
/// (their degree-0 components, which equal λ_{ij}), and whether χ is a
/// morphism of MHS (all values zero).
pub fn zero_obstruction(
    sigma: &ToricPoissonStructure,
) -> Result<(Vec<((usize, usize), TauScalar)>, bool)> {
    let ctx = sigma.context();
    let pv = sigma.polyvector();
    let mut values = Vec::new();
    let mut all_zero = true;
    let zero_k = vec![0i64; sigma.n];
    for (i, j) in pair_list(sigma.n) {
        // β_{ji} = e^{ι_σ}(dlog x_j ∧ dlog x_i) at u = 1.
        let form = LogForm::dlog(ctx, j).wedge(&LogForm::dlog(ctx, i))?;
        let beta = exp_contract(&pv, &form)?;
        let chi = beta.coeff(&zero_k, IdxSet::empty());
        let chi = chi
            .as_scalar()
            .ok_or_else(|| Error::Domain("non-polynomial obstruction value".into()))?;
        if !chi.is_zero() {
            all_zero = false;
        }
        values.push(((i, j), chi));
    }
    Ok((values, all_zero))
}

/// The ħ¹-coefficient of the exact polynomial family ħ ↦ F_{ħσ},
/// returned per block as the induced map ∧^m → ∧^{m−2} in sorted-dlog
/// coordinates; asserted equal to the contraction operator ι_σ.
pub fn infinitesimal_period(sigma: &ToricPoissonStructure) -> Result<BTreeMap<usize, QMat>> {
    let n = sigma.n;
    let ctx = sigma.context();
    let pv = sigma.polyvector();
    let mut out = BTreeMap::new();
    for m in 2..=n {
        let src = subsets_of_size(n, m);
        let tgt = subsets_of_size(n, m - 2);
        let samples = m / 2 + 1; // degree of ħ ↦ e^{ħι_σ}(deg-m form) is ≤ m/2
        // Sample the family at ħ = 0..samples and interpolate each
        // generator's degree-(m−2) coordinates.
        let vandermonde = QMat::from_fn(samples + 1, samples + 1, |i, j| {
            let mut v = TauFraction::one();
            for _ in 0..j {
                v = &v * &TauFraction::from_int(i as i64);
            }
            v
        });
        let vinv = vandermonde.inverse().ok_or(Error::Singular)?;
        let mut op = QMat::zeros(tgt.len(), src.len());
        for (col, s) in src.iter().enumerate() {
            let mut samples_mat = QMat::zeros(samples + 1, tgt.len());
            for h in 0..=samples {
                let scaled = pv.scale(&TauFraction::from_int(h as i64));
                let image = exp_contract(&scaled, &LogForm::dlog_set(ctx, *s))?;
                let comp = image.degree_component(m - 2);
                for (row, t) in tgt.iter().enumerate() {
                    samples_mat[(h, row)] = comp.coeff(&vec![0i64; n], *t);
                }
            }
            let poly_coeffs = vinv.mul(&samples_mat); // row k = ħ^k coefficient
            for (row, _) in tgt.iter().enumerate() {
                op[(row, col)] = poly_coeffs[(1, row)].clone();
            }
        }
        // Postcondition: the linearization is the contraction ι_σ.
        let direct = QMat::from_fn(tgt.len(), src.len(), |row, col| {
            contract(&pv, &LogForm::dlog_set(ctx, src[col]))
                .map(|f| f.coeff(&vec![0i64; n], tgt[row]))
                .unwrap_or_else(|_| TauFraction::zero())
        });
        if op != direct {
            return Err(Error::Domain(
                "infinitesimal period map disagrees with the contraction operator".into(),
            ));
        }
        out.insert(m, op);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{mukai_involution, PeriodicForm};
    use crate::mhs::{tate_twist, validate_mhs};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tf(s: TauScalar) -> TauFraction {
        TauFraction::from_scalar(s)
    }

    fn random_sigma(rng: &mut ChaCha8Rng, n: usize) -> ToricPoissonStructure {
        let mut entries = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                let c0 = Rational::new(rng.gen_range(-6..=6), rng.gen_range(1..=4));
                let c1 = Rational::new(rng.gen_range(-3..=3), rng.gen_range(1..=3));
                entries.push((i, j, TauScalar::from_terms([(0, c0), (1, c1)])));
            }
        }
        ToricPoissonStructure::new(n, &entries).unwrap()
    }

    #[test]
    fn zero_sigma_gives_classical_flag() {
        let sigma = ToricPoissonStructure::zero(3);
        let flag = poisson_hodge_flag(&sigma, 0).unwrap();
        // F¹ = span of the pair coordinates (no deformation).
        let f1 = flag.iter().find(|(p, _)| *p == 1).map(|(_, s)| s).unwrap();
        assert_eq!(f1.dim(), 3);
        let subsets = parity_subsets(3, 0);
        for (idx, s) in subsets.iter().enumerate() {
            let e = QMat::from_fn(subsets.len(), 1, |i, _| {
                if i == idx {
                    TauFraction::one()
                } else {
                    TauFraction::zero()
                }
            });
            assert_eq!(f1.contains(&e), s.len() == 2);
        }
    }

    #[test]
    fn n2_deformed_line_is_beta() {
        // F¹ is spanned by dlog x₂∧dlog x₁ + λ.
        let lam = TauScalar::from_terms([(0, Rational::new(5, 3))]);
        let sigma = ToricPoissonStructure::new(2, &[(1, 2, lam.clone())]).unwrap();
        let flag = poisson_hodge_flag(&sigma, 0).unwrap();
        let f1 = flag.iter().find(|(p, _)| *p == 1).map(|(_, s)| s).unwrap();
        assert_eq!(f1.dim(), 1);
        // Coordinates (∅, {1,2}); dlog₂∧dlog₁ = −e_{12}, so β = (λ, −1).
        let beta = QMat::from_fn(2, 1, |i, _| {
            if i == 0 {
                tf(lam.clone())
            } else {
                -TauFraction::one()
            }
        });
        assert!(f1.contains(&beta));
    }

    #[test]
    fn n4_top_hodge_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let sigma = random_sigma(&mut rng, 4);
        let flag = poisson_hodge_flag(&sigma, 0).unwrap();
        let f2 = flag.iter().find(|(p, _)| *p == 2).map(|(_, s)| s).unwrap();
        assert_eq!(f2.dim(), 1);
        let top = exp_contract(
            &sigma.polyvector(),
            &LogForm::dlog_set(sigma.context(), IdxSet::full(4)),
        )
        .unwrap();
        let coords = coords_of(&top, &parity_subsets(4, 0)).unwrap();
        let v = QMat::from_fn(coords.len(), 1, |i, _| coords[i].clone());
        assert!(f2.contains(&v));
        // Degrees 4, 2, 0 are all populated: 1 + 6 + 1 coordinates generically.
        assert!(coords.iter().filter(|c| !c.is_zero()).count() >= 3);
    }

    #[test]
    fn hodge_numbers_are_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=4 {
            for parity in 0..=1u8 {
                let sigma = random_sigma(&mut rng, n);
                let deformed = poisson_hodge_flag(&sigma, parity).unwrap();
                let classical =
                    poisson_hodge_flag(&ToricPoissonStructure::zero(n), parity).unwrap();
                for ((p, s), (p0, s0)) in deformed.iter().zip(&classical) {
                    assert_eq!(p, p0);
                    assert_eq!(s.dim(), s0.dim(), "n={n} parity={parity} p={p}");
                }
            }
        }
    }

    #[test]
    fn k_mhs_validates_for_random_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=4 {
            for parity in 0..=1u8 {
                let sigma = random_sigma(&mut rng, n);
                let k = toric_k_mhs(&sigma, parity).unwrap();
                let d = validate_mhs(&k.mhs);
                assert!(
                    d.all_pass(),
                    "n={n} parity={parity}: {:?}",
                    d.failures
                );
            }
        }
    }

    #[test]
    fn bott_shift_is_tate_twist() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sigma = random_sigma(&mut rng, 3);
        for parity in 0..=1u8 {
            let base = toric_k_mhs(&sigma, parity).unwrap();
            let shifted = toric_k_mhs_shifted(&sigma, parity, 1).unwrap();
            assert_eq!(shifted.mhs, tate_twist(&base.mhs, 1));
        }
    }

    #[test]
    fn adams_identity_and_mukai() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let sigma = random_sigma(&mut rng, 4);
        let ctx = sigma.context();
        let omega = exp_contract(
            &sigma.polyvector(),
            &LogForm::dlog_set(ctx, IdxSet::full(4)),
        )
        .unwrap();
        let id = adams_scale_form(&TauFraction::one(), &omega).unwrap();
        assert_eq!(id, omega);

        // ħ = −1 is the Mukai involution once each degree-2j component is
        // placed at its natural u-level j.
        let minus = adams_scale_form(&-TauFraction::one(), &omega).unwrap();
        for d in omega.degrees() {
            let placed = PeriodicForm::from_level((d / 2) as i64, omega.degree_component(d));
            let muk = mukai_involution(&placed);
            assert_eq!(muk.level((d / 2) as i64), minus.degree_component(d));
        }
    }

    #[test]
    fn flag_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for n in 2..=4 {
            let sigma = random_sigma(&mut rng, n);
            let hbar = TauFraction::new(
                TauScalar::from_terms([(0, Rational::new(3, 2)), (1, Rational::one())]),
                TauScalar::from_terms([(0, Rational::new(1, 1)), (2, Rational::new(1, 5))]),
            )
            .unwrap();
            for parity in 0..=1u8 {
                let scaled_flag = adams_scale_flag(
                    &hbar,
                    &poisson_hodge_flag(&sigma, parity).unwrap(),
                    n,
                    parity,
                )
                .unwrap();
                let direct =
                    flag_of_polyvector(n, &sigma.polyvector().scale(&hbar), parity).unwrap();
                assert_eq!(scaled_flag, direct, "n={n} parity={parity}");
            }
        }
    }

    #[test]
    fn quantum_parameter_examples() {
        // λ = 0 → all trivial.
        let q = quantum_parameter(&ToricPoissonStructure::zero(3)).unwrap();
        assert!(q.values().all(|e| e.is_one()));

        // λ₁₂ = τ/3 → torsion of order 3.
        let sigma = ToricPoissonStructure::new(
            2,
            &[(1, 2, TauScalar::term(1, Rational::new(1, 3)))],
        )
        .unwrap();
        let q = quantum_parameter(&sigma).unwrap();
        assert_eq!(q[&(1, 2)].torsion_order(), Some(3));

        // Generic λ → Exp(λ), and the Carlson cross-check passes.
        let lam = TauScalar::from_terms([(0, Rational::new(7, 5)), (1, Rational::new(2, 3))]);
        let sigma = ToricPoissonStructure::new(2, &[(1, 2, lam.clone())]).unwrap();
        let q = quantum_parameter(&sigma).unwrap();
        assert!(exp_equal(&q[&(1, 2)], &ExpValue::new(lam)));
    }

    #[test]
    fn quantum_parameter_cross_check_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in 2..=4 {
            let sigma = random_sigma(&mut rng, n);
            let q = quantum_parameter(&sigma).unwrap();
            for (i, j) in pair_list(n) {
                assert!(exp_equal(&q[&(i, j)], &ExpValue::new(sigma.lambda(i, j))));
            }
        }
    }

    #[test]
    fn odd_parity_parameters_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for n in 3..=4 {
            let sigma = random_sigma(&mut rng, n);
            let q1 = quantum_parameter_k1(&sigma).unwrap();
            assert_eq!(q1.len(), n * (n - 1) / 2);
        }
        assert!(quantum_parameter_k1(&random_sigma(&mut rng, 2))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn one_parameter_subgroup() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let sigma = random_sigma(&mut rng, 3);
        let h1 = TauScalar::from_terms([(0, Rational::new(2, 3))]);
        let h2 = TauScalar::from_terms([(0, Rational::new(1, 4)), (1, Rational::one())]);
        let qa = quantum_parameter(&sigma.scaled(&h1)).unwrap();
        let qb = quantum_parameter(&sigma.scaled(&h2)).unwrap();
        let qs = quantum_parameter(&sigma.scaled(&(&h1 + &h2))).unwrap();
        for (i, j) in pair_list(3) {
            assert!(exp_equal(&qa[&(i, j)].mul(&qb[&(i, j)]), &qs[&(i, j)]));
        }
    }

    #[test]
    fn purity_of_parameter_space() {
        // The Jacobian carrying the parameters is ℂ/τℤ per pair: no
        // F⁰-part and a full integral lattice.
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for n in 2..=4 {
            let sigma = random_sigma(&mut rng, n);
            let class = k0_extension_class(&sigma).unwrap();
            assert_eq!(class.f0_dim(), 0);
            assert_eq!(class.integral_rank(), n * (n - 1) / 2);
        }
    }

    #[test]
    fn torelli_examples() {
        let lam = TauScalar::from_terms([(0, Rational::new(1, 2))]);
        let a = ToricPoissonStructure::new(2, &[(1, 2, lam.clone())]).unwrap();
        assert!(torelli_equal(&a, &a).unwrap());

        let b = ToricPoissonStructure::new(
            2,
            &[(1, 2, &lam + &TauScalar::term(1, Rational::from_int(-4)))],
        )
        .unwrap();
        assert!(torelli_equal(&a, &b).unwrap());

        let c = ToricPoissonStructure::new(2, &[(1, 2, &lam + &TauScalar::one())]).unwrap();
        assert!(!torelli_equal(&a, &c).unwrap());

        assert!(torelli_equal(&a, &ToricPoissonStructure::zero(3)).is_err());
    }

    #[test]
    fn zero_obstruction_examples() {
        let (vals, ok) = zero_obstruction(&ToricPoissonStructure::zero(2)).unwrap();
        assert!(ok);
        assert!(vals.iter().all(|(_, v)| v.is_zero()));

        let sigma =
            ToricPoissonStructure::new(2, &[(1, 2, TauScalar::from_int(5))]).unwrap();
        let (vals, ok) = zero_obstruction(&sigma).unwrap();
        assert!(!ok);
        assert_eq!(vals[0].1, TauScalar::from_int(5));

        // λ = τ: e^λ = 1 but the obstruction still reads τ, not its class.
        let sigma = ToricPoissonStructure::new(2, &[(1, 2, TauScalar::tau())]).unwrap();
        let (vals, ok) = zero_obstruction(&sigma).unwrap();
        assert!(!ok);
        assert_eq!(vals[0].1, TauScalar::tau());
    }

    #[test]
    fn infinitesimal_period_examples() {
        // σ = 0 → zero operator in every block.
        let ops = infinitesimal_period(&ToricPoissonStructure::zero(3)).unwrap();
        for (_, m) in &ops {
            assert!(m.is_zero());
        }

        // n = 2: dlog x₂∧dlog x₁ ↦ λ, i.e. dlog₁∧dlog₂ ↦ −λ in sorted coords.
        let lam = TauScalar::from_terms([(0, Rational::new(4, 7)), (2, Rational::one())]);
        let sigma = ToricPoissonStructure::new(2, &[(1, 2, lam.clone())]).unwrap();
        let ops = infinitesimal_period(&sigma).unwrap();
        assert_eq!(ops[&2][(0, 0)], -tf(lam.clone()));

        // Linearity in σ.
        let doubled = infinitesimal_period(&sigma.scaled(&TauScalar::from_int(2))).unwrap();
        assert_eq!(
            doubled[&2][(0, 0)],
            &ops[&2][(0, 0)] * &TauFraction::from_int(2)
        );
    }
}
