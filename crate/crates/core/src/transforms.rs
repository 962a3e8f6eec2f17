//! Public record-specific feature transforms and exhaustive oracles for
//! Hamming-distance-preserving maps.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::TransformError;
use crate::field::Field;
use crate::linalg::{FieldMatrix, FieldVector};

/// Largest domain size for which `check_distance_preserving` compares all
/// pairs instead of sampling.
pub const EXHAUSTIVE_DOMAIN: usize = 1 << 12;

/// A public transform applied to the feature vector before committing.
///
/// The vector length and the field are carried by the record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TransformDescriptor {
    Identity {},
    /// `out[i] = w[perm[i]]`, i.e. `P[i][perm[i]] = 1`.
    BitPermutation {
        perm: Vec<usize>,
    },
    /// Coordinate-wise `out[i] = sigma[w[i]]`.
    FieldPermutation {
        sigma: Vec<u16>,
    },
}

/// Transform family without its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    Identity,
    BitPermutation,
    FieldPermutation,
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::Identity => "identity",
            TransformKind::BitPermutation => "bit-permutation",
            TransformKind::FieldPermutation => "field-permutation",
        })
    }
}

impl FromStr for TransformKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "identity" => Ok(TransformKind::Identity),
            "bit-permutation" => Ok(TransformKind::BitPermutation),
            "field-permutation" => Ok(TransformKind::FieldPermutation),
            _ => Err(format!("unknown transform `{s}`")),
        }
    }
}

fn is_permutation(values: impl Iterator<Item = usize>, n: usize) -> bool {
    let mut seen = vec![false; n];
    let mut count = 0;
    for v in values {
        if v >= n || seen[v] {
            return false;
        }
        seen[v] = true;
        count += 1;
    }
    count == n
}

fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

impl TransformDescriptor {
    pub fn kind(&self) -> TransformKind {
        match self {
            TransformDescriptor::Identity {} => TransformKind::Identity,
            TransformDescriptor::BitPermutation { .. } => TransformKind::BitPermutation,
            TransformDescriptor::FieldPermutation { .. } => TransformKind::FieldPermutation,
        }
    }

    /// Checks the bijection invariants against a length and a field.
    pub fn validate(&self, n: usize, field: &Field) -> Result<(), TransformError> {
        match self {
            TransformDescriptor::Identity {} => Ok(()),
            TransformDescriptor::BitPermutation { perm } => {
                if perm.len() != n {
                    return Err(TransformError::LengthMismatch { expected: perm.len(), found: n });
                }
                if !is_permutation(perm.iter().copied(), n) {
                    return Err(TransformError::NotPermutation(n));
                }
                Ok(())
            }
            TransformDescriptor::FieldPermutation { sigma } => {
                let q = field.order() as usize;
                if sigma.len() != q || !is_permutation(sigma.iter().map(|&s| s as usize), q) {
                    return Err(TransformError::NotBijection);
                }
                Ok(())
            }
        }
    }

    pub fn apply(&self, w: &FieldVector) -> Result<FieldVector, TransformError> {
        self.validate(w.len(), w.field())?;
        Ok(match self {
            TransformDescriptor::Identity {} => w.clone(),
            TransformDescriptor::BitPermutation { perm } => w.select(perm),
            TransformDescriptor::FieldPermutation { sigma } => map_entries(w, sigma),
        })
    }

    pub fn apply_inverse(&self, v: &FieldVector) -> Result<FieldVector, TransformError> {
        self.inverse(v.len(), v.field())?.apply(v)
    }

    /// The inverse transform.
    pub fn inverse(&self, n: usize, field: &Field) -> Result<TransformDescriptor, TransformError> {
        self.validate(n, field)?;
        Ok(match self {
            TransformDescriptor::Identity {} => TransformDescriptor::Identity {},
            TransformDescriptor::BitPermutation { perm } => {
                TransformDescriptor::BitPermutation { perm: inverse_permutation(perm) }
            }
            TransformDescriptor::FieldPermutation { sigma } => {
                let inv = inverse_permutation(&sigma.iter().map(|&s| s as usize).collect::<Vec<_>>());
                TransformDescriptor::FieldPermutation { sigma: inv.into_iter().map(|s| s as u16).collect() }
            }
        })
    }

    /// Matrix form P with `P * w = apply(w)`; identity gives I.
    pub fn as_matrix(&self, n: usize, field: &Field) -> Result<FieldMatrix, TransformError> {
        self.validate(n, field)?;
        match self {
            TransformDescriptor::Identity {} => Ok(FieldMatrix::identity(field, n)),
            TransformDescriptor::BitPermutation { perm } => {
                let mut p = FieldMatrix::zeros(field, n, n);
                for (i, &j) in perm.iter().enumerate() {
                    p.set(i, j, 1);
                }
                Ok(p)
            }
            TransformDescriptor::FieldPermutation { .. } => Err(TransformError::WrongVariant),
        }
    }
}

fn map_entries(w: &FieldVector, sigma: &[u16]) -> FieldVector {
    let elems = w.elems().into_iter().map(|x| sigma[x as usize]).collect();
    FieldVector::from_elems(w.field(), elems).expect("sigma maps into the field")
}

/// Uniformly random transform of the given family (Fisher-Yates).
pub fn random_transform<R: Rng + ?Sized>(
    kind: TransformKind,
    n: usize,
    field: &Field,
    rng: &mut R,
) -> TransformDescriptor {
    match kind {
        TransformKind::Identity => TransformDescriptor::Identity {},
        TransformKind::BitPermutation => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            TransformDescriptor::BitPermutation { perm }
        }
        TransformKind::FieldPermutation => {
            let mut sigma: Vec<u16> = field.elements().collect();
            sigma.shuffle(rng);
            TransformDescriptor::FieldPermutation { sigma }
        }
    }
}

/// Returns `(a, b)` with `sigma(x) = a*x + b` on all of F, `a != 0`.
pub fn detect_affine(field: &Field, sigma: &[u16]) -> Result<(u16, u16), TransformError> {
    let q = field.order() as usize;
    if sigma.len() != q || !is_permutation(sigma.iter().map(|&s| s as usize), q) {
        return Err(TransformError::NotBijection);
    }
    let b = sigma[0];
    let a = field.sub(sigma[1], b);
    if a == 0 {
        return Err(TransformError::NotAffine);
    }
    for x in field.elements() {
        if sigma[x as usize] != field.add(field.mul(a, x), b) {
            return Err(TransformError::NotAffine);
        }
    }
    Ok((a, b))
}

/// Counts affine bijections of F by running [`detect_affine`] on every one
/// of the q! bijections. Returns `(affine, q!)`.
pub fn count_affine_bijections(field: &Field) -> Result<(u64, u64), TransformError> {
    let q = field.order() as usize;
    if q > 8 {
        return Err(TransformError::TooLarge(q));
    }
    let mut sigma: Vec<u16> = field.elements().collect();
    let mut affine = 0;
    let mut total = 0;
    for_each_permutation(&mut sigma, &mut |s| {
        total += 1;
        if detect_affine(field, s).is_ok() {
            affine += 1;
        }
    });
    Ok((affine, total))
}

/// Heap's algorithm.
fn for_each_permutation<T, F: FnMut(&[T])>(items: &mut [T], visit: &mut F) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// A Hamming isometry of {0,1}^n as a lookup table on integers (bit i of
/// the index is coordinate i), with its decomposition `T(v) = P*v xor s`
/// when one exists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryIsometry {
    pub n: usize,
    pub table: Vec<u32>,
    /// Bit permutation in `apply` convention (`out[i] = v[perm[i]]`).
    pub perm: Option<Vec<usize>>,
    pub shift: u32,
}

impl BinaryIsometry {
    pub fn decomposes(&self) -> bool {
        self.perm.is_some()
    }
}

fn permute_bits(v: u32, perm: &[usize]) -> u32 {
    perm.iter().enumerate().fold(0, |acc, (i, &j)| acc | (((v >> j) & 1) << i))
}

/// Finds `P` with `T(v) = P*v xor T(0)` for all v by reading off the images
/// of the unit vectors, then checking every input.
fn decompose(n: usize, table: &[u32]) -> Option<Vec<usize>> {
    let shift = table[0];
    let mut perm = vec![usize::MAX; n];
    for j in 0..n {
        let image = table[1 << j] ^ shift;
        if image.count_ones() != 1 {
            return None;
        }
        perm[image.trailing_zeros() as usize] = j;
    }
    if perm.contains(&usize::MAX) {
        return None;
    }
    (0..table.len() as u32).all(|v| table[v as usize] == permute_bits(v, &perm) ^ shift).then_some(perm)
}

/// Every bijection of {0,1}^n that preserves Hamming distance, n <= 3.
///
/// The search assigns images in input order and abandons a branch as soon as
/// an assigned pair violates the distance, so every bijection is either
/// visited or ruled out by a concrete pair.
pub fn enumerate_distance_preserving_bijections(n: usize) -> Result<Vec<BinaryIsometry>, TransformError> {
    if n == 0 || n > 3 {
        return Err(TransformError::TooLarge(n));
    }
    let size = 1usize << n;
    let mut table = vec![0u32; size];
    let mut used = vec![false; size];
    let mut out = Vec::new();
    extend_isometry(n, 0, &mut table, &mut used, &mut out);
    Ok(out)
}

fn extend_isometry(n: usize, next: usize, table: &mut [u32], used: &mut [bool], out: &mut Vec<BinaryIsometry>) {
    if next == table.len() {
        let perm = decompose(n, table);
        out.push(BinaryIsometry { n, table: table.to_vec(), perm, shift: table[0] });
        return;
    }
    for image in 0..table.len() {
        if used[image] {
            continue;
        }
        let ok = (0..next).all(|u| (table[u] ^ image as u32).count_ones() == (u ^ next).count_ones());
        if !ok {
            continue;
        }
        used[image] = true;
        table[next] = image as u32;
        extend_isometry(n, next + 1, table, used, out);
        used[image] = false;
    }
}

/// Result of [`check_distance_preserving`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceCheck {
    Preserving,
    /// A pair of domain indices whose distance changes.
    Counterexample(usize, usize),
}

impl DistanceCheck {
    pub fn is_preserving(&self) -> bool {
        matches!(self, DistanceCheck::Preserving)
    }
}

fn index_distance(q: usize, n: usize, mut a: usize, mut b: usize) -> usize {
    let mut d = 0;
    for _ in 0..n {
        if a % q != b % q {
            d += 1;
        }
        a /= q;
        b /= q;
    }
    d
}

/// Checks `d(T(u), T(v)) = d(u, v)` for a map on F^n given as a table over
/// base-q indices (digit i is coordinate i). All pairs are compared when the
/// domain has at most [`EXHAUSTIVE_DOMAIN`] points, otherwise `trials`
/// random pairs.
pub fn check_distance_preserving<R: Rng + ?Sized>(
    q: usize,
    n: usize,
    table: &[usize],
    trials: usize,
    rng: &mut R,
) -> DistanceCheck {
    let size = table.len();
    let test = |u: usize, v: usize| index_distance(q, n, table[u], table[v]) == index_distance(q, n, u, v);
    if size <= EXHAUSTIVE_DOMAIN {
        for u in 0..size {
            for v in u + 1..size {
                if !test(u, v) {
                    return DistanceCheck::Counterexample(u, v);
                }
            }
        }
    } else {
        for _ in 0..trials {
            let u = rng.random_range(0..size);
            let v = rng.random_range(0..size);
            if !test(u, v) {
                return DistanceCheck::Counterexample(u, v);
            }
        }
    }
    DistanceCheck::Preserving
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn json_layout() {
        let t = TransformDescriptor::BitPermutation { perm: vec![2, 0, 1] };
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"{"type":"bit-permutation","perm":[2,0,1]}"#);
        assert_eq!(serde_json::to_string(&TransformDescriptor::Identity {}).unwrap(), r#"{"type":"identity"}"#);
        assert!(serde_json::from_str::<TransformDescriptor>(r#"{"type":"rotation"}"#).is_err());
    }

    #[test]
    fn field_permutation_is_not_a_matrix() {
        let f = Field::with_order(5).unwrap();
        let t = TransformDescriptor::FieldPermutation { sigma: vec![1, 2, 3, 4, 0] };
        assert_eq!(t.as_matrix(3, &f), Err(TransformError::WrongVariant));
    }

    #[test]
    fn rejects_bad_arrays() {
        let f = Field::gf2();
        let w = FieldVector::zeros(&f, 3);
        let t = TransformDescriptor::BitPermutation { perm: vec![0, 0, 1] };
        assert_eq!(t.apply(&w), Err(TransformError::NotPermutation(3)));
        let t = TransformDescriptor::FieldPermutation { sigma: vec![0, 0] };
        assert_eq!(t.apply(&w), Err(TransformError::NotBijection));
    }

    #[test]
    fn affine_detection() {
        let f = Field::with_order(5).unwrap();
        assert_eq!(detect_affine(&f, &[0, 1, 2, 3, 4]), Ok((1, 0)));
        assert_eq!(detect_affine(&f, &[1, 2, 3, 4, 0]), Ok((1, 1)));
        assert_eq!(detect_affine(&f, &[0, 1, 3, 2, 4]), Err(TransformError::NotAffine));
    }

    #[test]
    fn swapped_outputs_are_caught() {
        // Identity on {0,1}^3 with the images of 000 and 011 exchanged.
        let mut table: Vec<usize> = (0..8).collect();
        table.swap(0, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(!check_distance_preserving(2, 3, &table, 0, &mut rng).is_preserving());
    }
}
