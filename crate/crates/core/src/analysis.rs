//! Closed-form quantities as exact rationals: sphere packing density,
//! the union bound on false links, and the chance that a random field
//! permutation is affine.

use std::collections::BTreeMap;

use num_bigint::BigUint;
pub use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codes::LinearCode;
use crate::error::AnalysisError;
use crate::transforms::{random_transform, TransformKind};

/// Parameters of a density query; the radius is `floor((d-1)/2)` unless
/// given explicitly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityQuery {
    pub q: u32,
    pub n: usize,
    pub k: usize,
    pub radius: usize,
}

impl DensityQuery {
    pub fn from_distance(q: u32, n: usize, k: usize, d: usize) -> Result<Self, AnalysisError> {
        if d == 0 {
            return Err(AnalysisError::InvalidQuery("minimum distance must be positive".into()));
        }
        Self::with_radius(q, n, k, (d - 1) / 2)
    }

    pub fn with_radius(q: u32, n: usize, k: usize, radius: usize) -> Result<Self, AnalysisError> {
        if q < 2 {
            return Err(AnalysisError::InvalidQuery(format!("field order {q} < 2")));
        }
        if k > n || radius > n {
            return Err(AnalysisError::InvalidQuery(format!(
                "need k <= n and radius <= n (n={n}, k={k}, radius={radius})"
            )));
        }
        Ok(DensityQuery { q, n, k, radius })
    }
}

fn binomial(n: usize, k: usize) -> BigUint {
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * BigUint::from(n - i) / BigUint::from(i + 1))
}

/// Number of vectors in F^n of weight at most `radius`.
pub fn ball_size(q: u32, n: usize, radius: usize) -> BigUint {
    let qm1 = BigUint::from(q - 1);
    (0..=radius.min(n)).map(|j| binomial(n, j) * qm1.pow(j as u32)).sum()
}

fn q_power(q: u32, e: i64) -> BigRational {
    let base = BigRational::from_integer(BigUint::from(q).into());
    let p = base.pow(e.unsigned_abs() as i32);
    if e >= 0 {
        p
    } else {
        p.recip()
    }
}

/// `q^(k-n) * sum_{j <= radius} (q-1)^j C(n, j)`.
pub fn sphere_packing_density(query: &DensityQuery) -> BigRational {
    let ball = BigRational::from_integer(ball_size(query.q, query.n, query.radius).into());
    ball * q_power(query.q, query.k as i64 - query.n as i64)
}

/// `min(1, q^(rank-n) * B)` with B the number of patterns of weight <= b.
/// An upper bound on the false-link rate, not a prediction.
pub fn union_bound_linkage(q: u32, n: usize, rank: usize, b: usize) -> Result<BigRational, AnalysisError> {
    let query = DensityQuery::with_radius(q, n, rank, b)?;
    Ok(sphere_packing_density(&query).min(BigRational::one()))
}

/// Fraction of the q! bijections of F that are affine: `1/(q-2)!`.
pub fn linear_map_probability(q: u32) -> Result<BigRational, AnalysisError> {
    if q < 3 {
        return Err(AnalysisError::FieldTooSmall(q));
    }
    let factorial: BigUint = (1..=q - 2).map(BigUint::from).product();
    Ok(BigRational::new(BigUint::one().into(), factorial.into()))
}

/// log2 of a positive rational, accurate to double precision even when the
/// value underflows an f64.
pub fn log2(x: &BigRational) -> f64 {
    fn log2_int(v: &num_bigint::BigInt) -> f64 {
        let bits = v.bits();
        let shift = bits.saturating_sub(64);
        let top = (v >> shift).to_f64().unwrap_or(f64::NAN);
        top.log2() + shift as f64
    }
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    log2_int(x.numer()) - log2_int(x.denom())
}

/// `"num/den"` rendering.
pub fn ratio_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or_else(|| 2f64.powf(log2(x)))
}

/// Empirical distribution of rank(G~) over random bit-permutation pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankStatistics {
    pub samples: usize,
    pub ranks: BTreeMap<usize, usize>,
    /// Keyed by q^(2k - rank), as a decimal string since it can exceed u64.
    pub solution_counts: BTreeMap<String, usize>,
}

/// Draws `samples` independent pairs of random bit permutations and records
/// the rank of `(P1^-1 G | P2^-1 G)`.
pub fn rank_statistics<R: Rng + ?Sized>(code: &LinearCode, samples: usize, rng: &mut R) -> RankStatistics {
    let mut stats = RankStatistics { samples, ..Default::default() };
    let n = code.n();
    for _ in 0..samples {
        let t1 = random_transform(TransformKind::BitPermutation, n, code.field(), rng);
        let t2 = random_transform(TransformKind::BitPermutation, n, code.field(), rng);
        let rank = permuted_pair_rank(code, &t1, &t2);
        record_rank(&mut stats, code, rank);
    }
    stats
}

pub(crate) fn record_rank(stats: &mut RankStatistics, code: &LinearCode, rank: usize) {
    *stats.ranks.entry(rank).or_default() += 1;
    let solutions = BigUint::from(code.field().order()).pow((2 * code.k() - rank) as u32);
    *stats.solution_counts.entry(solutions.to_string()).or_default() += 1;
}

/// rank of `(P1^-1 G | P2^-1 G)`.
pub fn permuted_pair_rank(
    code: &LinearCode,
    t1: &crate::transforms::TransformDescriptor,
    t2: &crate::transforms::TransformDescriptor,
) -> usize {
    let n = code.n();
    let f = code.field();
    let g = code.generator();
    let p1 = t1.inverse(n, f).and_then(|t| t.as_matrix(n, f)).expect("bit permutation");
    let p2 = t2.inverse(n, f).and_then(|t| t.as_matrix(n, f)).expect("bit permutation");
    let g1 = p1.mul(g).expect("dimensions agree");
    let g2 = p2.mul(g).expect("dimensions agree");
    g1.concat_cols(&g2).expect("dimensions agree").rank()
}
