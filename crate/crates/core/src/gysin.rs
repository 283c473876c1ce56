//! Smith-normal-form K-theory plumbing: Gysin sequences with
//! weight-graded output, the binomial basis change on K(ℙ^d), and the
//! projective-bundle and blowup direct-sum constructors.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::linalg::IntMat;
use crate::mhs::{direct_sum, tate_twist, FgAbGroup, MixedHodgeStructure};
use crate::{Error, Result};

/// Input data of a Gysin sequence K(Y) → K(X) → K(X∖Y) → K(Y)[1]:
/// the ambient even K-basis, the pushforward i_! in that basis
/// (columns = images of the submanifold's even K-basis), and the rank
/// of the odd boundary piece with its caller-supplied weight tag.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GysinInput {
    /// Labels of the ambient even K-basis (its rank is the length).
    pub labels: Vec<String>,
    /// The pushforward matrix, rows indexed by `labels`.
    pub pushforward: Vec<Vec<i64>>,
    /// Free rank of the odd boundary lattice.
    pub odd_rank: usize,
    /// Weight tag of the odd piece.
    pub odd_weight: i64,
}

impl GysinInput {
    pub fn validate(&self) -> Result<()> {
        if self.pushforward.len() != self.labels.len() {
            return Err(Error::Malformed(format!(
                "pushforward has {} rows but there are {} basis labels",
                self.pushforward.len(),
                self.labels.len()
            )));
        }
        let cols = self.pushforward.first().map_or(0, |r| r.len());
        if self.pushforward.iter().any(|r| r.len() != cols) {
            return Err(Error::Malformed("ragged pushforward matrix".into()));
        }
        Ok(())
    }
}

/// A weight-graded K-group: one finitely generated abelian group per
/// weight tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedKResult {
    pub pieces: BTreeMap<i64, FgAbGroup>,
}

#[derive(Serialize, Deserialize)]
struct GroupJson {
    free: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    torsion: Vec<u64>,
}

impl Serialize for GradedKResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.pieces.len()))?;
        for (w, g) in &self.pieces {
            let torsion = g
                .torsion()
                .iter()
                .map(|d| d.to_u64().ok_or_else(|| {
                    serde::ser::Error::custom("torsion order exceeds u64")
                }))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            map.serialize_entry(
                &format!("w{w}"),
                &GroupJson {
                    free: g.free_rank(),
                    torsion,
                },
            )?;
        }
        map.end()
    }
}

/// The weight-graded K-theory of the complement: the weight-0 piece is
/// the image of j^* (the cokernel of i_!, computed by Smith normal
/// form) and the odd piece is free of the given rank at its weight tag.
pub fn gysin_weight_graded(input: &GysinInput) -> Result<GradedKResult> {
    input.validate()?;
    let m = IntMat::from_rows(&input.pushforward);
    let mut pieces = BTreeMap::new();
    pieces.insert(0, FgAbGroup::cokernel(&m));
    pieces.insert(
        input.odd_weight,
        FgAbGroup::free(input.odd_rank),
    );
    Ok(GradedKResult { pieces })
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    let mut out = BigInt::from(1);
    for i in 0..k {
        out = out * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    out
}

/// The unimodular change of basis on K⁰(ℙ^d) between the classes
/// e_j = (1−t)^j and the powers of t: entry (i,j) is the t^i-coefficient
/// (−1)^i·C(j,i).  The matrix is an involution, so it is returned with
/// its (equal) inverse.
pub fn pd_basis_change(d: usize) -> (IntMat, IntMat) {
    let mut m = IntMat::zeros(d + 1, d + 1);
    for j in 0..=d {
        for i in 0..=j {
            let b = binomial(j, i);
            m[(i, j)] = if i % 2 == 0 { b } else { -b };
        }
    }
    (m.clone(), m)
}

/// The projective-bundle decomposition K(ℙ(E)) ≅ ⊕_{j=0}^{r−1} K(base)(−j).
pub fn projective_bundle_sum(base: &MixedHodgeStructure, r: usize) -> Result<MixedHodgeStructure> {
    if r == 0 {
        return Err(Error::Domain("bundle rank must be at least 1".into()));
    }
    let mut out = base.clone();
    for j in 1..r {
        out = direct_sum(&out, &tate_twist(base, -(j as i64)));
    }
    Ok(out)
}

/// The blowup decomposition K(Bl_Y X) ≅ K(X) ⊕ ⊕_{j=1}^{codim−1} K(Y)(−j).
pub fn blowup_sum(
    x: &MixedHodgeStructure,
    y: &MixedHodgeStructure,
    codim: usize,
) -> Result<MixedHodgeStructure> {
    if codim == 0 {
        return Err(Error::Domain("codimension must be at least 1".into()));
    }
    let mut out = x.clone();
    for j in 1..codim {
        out = direct_sum(&out, &tate_twist(y, -(j as i64)));
    }
    Ok(out)
}
