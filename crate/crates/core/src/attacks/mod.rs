//! Linkage attacks on pairs of fuzzy commitments.
//!
//! All attacks reduce to one problem: given generator blocks G1, G2 and an
//! offset r, find the lightest `e` (weight <= b) with `r - e` in the span of
//! `G~ = (G1 | G2)`, then solve `G~ (m1 | -m2) = r - e` and map the message
//! halves back to feature-vector candidates.

pub mod engine;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::codes::LinearCode;
use crate::commitment::{vector_to_json, HashBinding, Record};
use crate::error::{AttackError, CodeError, LinalgError, TransformError};
use crate::linalg::{FieldMatrix, FieldVector};
use crate::transforms::{detect_affine, TransformDescriptor};

use engine::{PatternSpace, SyndromeScanner};

/// Default cap on the number of coset solutions tried against the hashes.
pub const DEFAULT_MAX_COSET: u128 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Related,
    NonRelated,
}

/// Stop at the first passing pattern, or also count every passing pattern.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScanMode {
    #[default]
    FirstHit,
    AllHits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttackOptions {
    /// Weight bound on the error pattern.
    pub b: usize,
    pub mode: ScanMode,
    /// Scan index ranges on the rayon pool.
    pub parallel: bool,
    /// Solutions of the linear system tried against the hashes per hit.
    pub max_coset: u128,
}

impl AttackOptions {
    pub fn new(b: usize) -> Self {
        AttackOptions { b, mode: ScanMode::FirstHit, parallel: false, max_coset: DEFAULT_MAX_COSET }
    }
}

/// Codewords and feature vectors recovered from one solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidates {
    pub c1: FieldVector,
    pub c2: FieldVector,
    pub w1: FieldVector,
    pub w2: FieldVector,
}

#[derive(Clone, Debug)]
pub struct AttackOutcome {
    pub verdict: Verdict,
    pub candidates: Option<Candidates>,
    /// q^nullity(G~) when it fits in a u128.
    pub all_solutions: Option<u128>,
    pub nullity: usize,
    pub rank: usize,
    pub hash_verified: bool,
    pub error_pattern: Option<FieldVector>,
    pub pattern_index: Option<u64>,
    pub patterns_scanned: u64,
    /// Number of passing patterns, in [`ScanMode::AllHits`] only.
    pub hits: Option<u64>,
    /// rank(G~) = n: every offset is in the span, so the link carries no
    /// information.
    pub degenerate: bool,
    pub elapsed: Duration,
}

impl AttackOutcome {
    pub fn is_related(&self) -> bool {
        self.verdict == Verdict::Related
    }

    /// JSON rendering used by the command line tool.
    pub fn to_json(&self) -> serde_json::Value {
        let cand = self.candidates.as_ref().map(|c| {
            json!({
                "w1": vector_to_json(&c.w1),
                "w2": vector_to_json(&c.w2),
                "c1": vector_to_json(&c.c1),
                "c2": vector_to_json(&c.c2),
            })
        });
        json!({
            "verdict": self.verdict,
            "candidates": cand,
            "all_solutions": self.all_solutions.map(|s| s.to_string()),
            "nullity": self.nullity,
            "rank": self.rank,
            "hash_verified": self.hash_verified,
            "error_pattern": self.error_pattern.as_ref().map(vector_to_json),
            "pattern_index": self.pattern_index,
            "patterns_scanned": self.patterns_scanned,
            "hits": self.hits,
            "degenerate": self.degenerate,
            "elapsed_ms": self.elapsed.as_secs_f64() * 1e3,
        })
    }
}

/// Links two commitments under the same code by decoding `f1 - f2`.
pub fn decodability_attack(f1: &FieldVector, f2: &FieldVector, code: &LinearCode) -> Result<Verdict, AttackError> {
    let r = f1.sub(f2)?;
    match code.decode_bounded(&r) {
        Ok(_) => Ok(Verdict::Related),
        Err(CodeError::DecodeFailure) => Ok(Verdict::NonRelated),
        Err(e) => Err(e.into()),
    }
}

/// Generalized decodability attack on `f1 = G1 m1 + w1`, `f2 = G2 m2 + w2`.
pub fn generalized_attack(
    g1: &FieldMatrix,
    g2: &FieldMatrix,
    f1: &FieldVector,
    f2: &FieldVector,
    hashes: Option<(&HashBinding, &HashBinding)>,
    options: &AttackOptions,
) -> Result<AttackOutcome, AttackError> {
    let r = f1.sub(f2)?;
    scan_and_recover(g1, g2, &r, hashes, options, |m1, m2| {
        let c1 = g1.mul_vec(m1)?;
        let c2 = g2.mul_vec(m2)?;
        Ok(Candidates { w1: f1.sub(&c1)?, w2: f2.sub(&c2)?, c1, c2 })
    })
}

fn inverse_permutation(transform: &TransformDescriptor, n: usize) -> Result<Vec<usize>, AttackError> {
    match transform {
        TransformDescriptor::Identity {} => Ok((0..n).collect()),
        TransformDescriptor::BitPermutation { perm } => {
            if perm.len() != n {
                return Err(TransformError::LengthMismatch { expected: perm.len(), found: n }.into());
            }
            let mut inv = vec![usize::MAX; n];
            for (i, &p) in perm.iter().enumerate() {
                if p >= n || inv[p] != usize::MAX {
                    return Err(TransformError::NotPermutation(n).into());
                }
                inv[p] = i;
            }
            Ok(inv)
        }
        TransformDescriptor::FieldPermutation { .. } => Err(TransformError::WrongVariant.into()),
    }
}

/// Attack on two records `f_i = c_i + P_i w_i` with bit permutations P_i:
///
/// 1. `r = P1^-1 f1 - P2^-1 f2`
/// 2. `G_i = P_i^-1 G`, `H~` spanning the annihilator of `(G1 | G2)`
/// 3. first `e` of weight <= b with `H~ (r - e) = 0`
/// 4. solve `(G1 | G2) (m1 | -m2) = r - e`, `c_i* = G m_i`
/// 5. `w_i* = P_i^-1 (f_i - c_i*)`
pub fn modified_decodability_attack(
    g: &FieldMatrix,
    rec1: (&FieldVector, &TransformDescriptor),
    rec2: (&FieldVector, &TransformDescriptor),
    hashes: Option<(&HashBinding, &HashBinding)>,
    options: &AttackOptions,
) -> Result<AttackOutcome, AttackError> {
    let n = g.nrows();
    let (f1, t1) = rec1;
    let (f2, t2) = rec2;
    for f in [f1, f2] {
        if f.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, found: f.len() }.into());
        }
    }
    let inv1 = inverse_permutation(t1, n)?;
    let inv2 = inverse_permutation(t2, n)?;
    let r = f1.select(&inv1).sub(&f2.select(&inv2))?;
    let g1 = g.select_rows(&inv1);
    let g2 = g.select_rows(&inv2);
    scan_and_recover(&g1, &g2, &r, hashes, options, |m1, m2| {
        let c1 = g.mul_vec(m1)?;
        let c2 = g.mul_vec(m2)?;
        Ok(Candidates { w1: f1.sub(&c1)?.select(&inv1), w2: f2.sub(&c2)?.select(&inv2), c1, c2 })
    })
}

/// Linear decodability attack: the generalized attack on the offset
/// `Q f1 - R f2` in the code generated by `(Q G | R G)`, with candidates
/// `w1* = Q (f1 - G m1)` and `w2* = R (f2 - G m2)`.
pub fn linear_decodability_attack(
    g: &FieldMatrix,
    f1: &FieldVector,
    f2: &FieldVector,
    q: &FieldMatrix,
    r: &FieldMatrix,
    hashes: Option<(&HashBinding, &HashBinding)>,
    options: &AttackOptions,
) -> Result<AttackOutcome, AttackError> {
    q.inverse()?;
    r.inverse()?;
    let offset = q.mul_vec(f1)?.sub(&r.mul_vec(f2)?)?;
    let g1 = q.mul(g)?;
    let g2 = r.mul(g)?;
    scan_and_recover(&g1, &g2, &offset, hashes, options, |m1, m2| {
        let c1 = g.mul_vec(m1)?;
        let c2 = g.mul_vec(m2)?;
        Ok(Candidates { w1: q.mul_vec(&f1.sub(&c1)?)?, w2: r.mul_vec(&f2.sub(&c2)?)?, c1, c2 })
    })
}

/// How a record's transform is undone before a linear attack: the
/// commitment with any constant shift removed, and the matrix Q.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub commitment: FieldVector,
    pub q: FieldMatrix,
    /// False when the transform has no linear reduction (a non-affine field
    /// permutation) and Q = I is used as is.
    pub exact: bool,
}

/// Reduction of a record to the linear attack setting. A bit permutation P
/// gives Q = P^-1. An affine field permutation `x -> a x + b` gives
/// `f - b (1..1)` and `Q = a^-1 I`, since `a^-1 c` is again a codeword.
pub fn reduce_record(commitment: &FieldVector, transform: &TransformDescriptor) -> Result<Reduction, AttackError> {
    let field = commitment.field();
    let n = commitment.len();
    match transform {
        TransformDescriptor::Identity {} => {
            Ok(Reduction { commitment: commitment.clone(), q: FieldMatrix::identity(field, n), exact: true })
        }
        TransformDescriptor::BitPermutation { .. } => {
            let q = transform.inverse(n, field)?.as_matrix(n, field)?;
            Ok(Reduction { commitment: commitment.clone(), q, exact: true })
        }
        TransformDescriptor::FieldPermutation { sigma } => match detect_affine(field, sigma) {
            Ok((a, b)) => {
                let shifted = commitment.sub(&FieldVector::constant(field, n, b))?;
                let a_inv = field.inv(a).expect("affine slope is non-zero");
                Ok(Reduction { commitment: shifted, q: FieldMatrix::identity(field, n).scale(a_inv), exact: true })
            }
            Err(TransformError::NotAffine) => {
                Ok(Reduction { commitment: commitment.clone(), q: FieldMatrix::identity(field, n), exact: false })
            }
            Err(e) => Err(e.into()),
        },
    }
}

/// Which attack [`attack_records`] ran.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Both transforms are bit permutations or the identity.
    Modified,
    /// Both transforms reduce exactly to a linear attack.
    LinearReduction,
    /// At least one transform has no linear reduction; Q = R = I on it.
    LinearIdentity,
}

/// Runs the strongest applicable attack on two records under one code.
pub fn attack_records(
    code: &LinearCode,
    rec1: &Record,
    rec2: &Record,
    use_hashes: bool,
    options: &AttackOptions,
) -> Result<(Strategy, AttackOutcome), AttackError> {
    let hashes = match (use_hashes, &rec1.hash, &rec2.hash) {
        (true, Some(h1), Some(h2)) => Some((h1, h2)),
        _ => None,
    };
    let g = code.generator();
    let is_perm = |t: &TransformDescriptor| !matches!(t, TransformDescriptor::FieldPermutation { .. });
    if is_perm(&rec1.transform) && is_perm(&rec2.transform) {
        let outcome = modified_decodability_attack(
            g,
            (&rec1.commitment, &rec1.transform),
            (&rec2.commitment, &rec2.transform),
            hashes,
            options,
        )?;
        return Ok((Strategy::Modified, outcome));
    }
    let red1 = reduce_record(&rec1.commitment, &rec1.transform)?;
    let red2 = reduce_record(&rec2.commitment, &rec2.transform)?;
    let strategy = if red1.exact && red2.exact { Strategy::LinearReduction } else { Strategy::LinearIdentity };
    let outcome = linear_decodability_attack(g, &red1.commitment, &red2.commitment, &red1.q, &red2.q, hashes, options)?;
    Ok((strategy, outcome))
}

/// Rank of `(G1 | G2)` and a full-rank `H~` with `H~ (G1 | G2) = 0`.
pub fn combined_check_matrix(g1: &FieldMatrix, g2: &FieldMatrix) -> Result<(FieldMatrix, usize), AttackError> {
    let gt = g1.concat_cols(g2)?;
    let rank = gt.rank();
    Ok((gt.transpose().kernel_basis().transpose(), rank))
}

fn scan_and_recover(
    g1: &FieldMatrix,
    g2: &FieldMatrix,
    r: &FieldVector,
    hashes: Option<(&HashBinding, &HashBinding)>,
    options: &AttackOptions,
    recover: impl Fn(&FieldVector, &FieldVector) -> Result<Candidates, LinalgError> + Sync,
) -> Result<AttackOutcome, AttackError> {
    let start = Instant::now();
    let n = g1.nrows();
    if r.len() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, found: r.len() }.into());
    }
    let k1 = g1.ncols();
    let gt = g1.concat_cols(g2)?;
    let rank = gt.rank();
    let check = gt.transpose().kernel_basis().transpose();
    let nullity = gt.ncols() - rank;
    let space = PatternSpace::new(n, r.field().order(), options.b)?;
    let scanner = SyndromeScanner::new(&check, r)?;

    let accept = |e: &FieldVector| -> Option<(Candidates, bool)> {
        let y = r.sub(e).ok()?;
        let solution = gt.solve_affine(&y).ok()?;
        let split = |m: &FieldVector| {
            let m1 = m.slice(0, k1);
            let m2 = m.slice(k1, m.len()).neg();
            recover(&m1, &m2).ok()
        };
        match hashes {
            None => split(&solution.particular).map(|c| (c, false)),
            Some((h1, h2)) => solution
                .iter()
                .take(usize::try_from(options.max_coset).unwrap_or(usize::MAX))
                .filter_map(|m| split(&m))
                .find(|c| h1.matches(&c.c1) && h2.matches(&c.c2))
                .map(|c| (c, true)),
        }
    };

    let hit = scanner.first_hit(&space, options.parallel, accept);
    let hits = match options.mode {
        ScanMode::FirstHit => None,
        ScanMode::AllHits => Some(scanner.count_hits(&space, options.parallel)),
    };
    let patterns_scanned = match (&hit, options.mode) {
        (Some(h), ScanMode::FirstHit) => h.index + 1,
        _ => space.total(),
    };
    let all_solutions = u128::from(r.field().order()).checked_pow(nullity as u32);
    let outcome = match hit {
        Some(h) => AttackOutcome {
            verdict: Verdict::Related,
            error_pattern: Some(h.pattern.to_vector(r.field(), n)),
            pattern_index: Some(h.index),
            candidates: Some(h.payload.0),
            hash_verified: h.payload.1,
            all_solutions,
            nullity,
            rank,
            patterns_scanned,
            hits,
            degenerate: rank == n,
            elapsed: start.elapsed(),
        },
        None => AttackOutcome {
            verdict: Verdict::NonRelated,
            candidates: None,
            all_solutions,
            nullity,
            rank,
            hash_verified: false,
            error_pattern: None,
            pattern_index: None,
            patterns_scanned,
            hits,
            degenerate: rank == n,
            elapsed: start.elapsed(),
        },
    };
    Ok(outcome)
}
