//! Linear codes: narrow-sense primitive binary BCH codes and generic codes
//! given by a generator matrix, both with bounded-distance decoding.
//!
//! Generator matrices are n x k and codewords are `G * m`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attacks::engine::{PatternSpace, SyndromeScanner};
use crate::error::CodeError;
use crate::field::{Field, FieldSpec};
use crate::gf2::BitVec;
use crate::linalg::{FieldMatrix, FieldVector};

/// Longest block length the exhaustive decoder accepts.
pub const MAX_EXHAUSTIVE_N: usize = 24;

/// Pattern budget for computing the minimum distance of a generic code.
const DISTANCE_SEARCH_LIMIT: u64 = 50_000_000;

/// How a code is named in records and on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodeDescriptor {
    /// `bch:<n>:<t>`
    Bch { n: usize, t: usize },
    /// Inline generator matrix (n rows, k columns) with its minimum distance.
    Generator { field: FieldSpec, rows: Vec<Vec<u16>>, d: usize },
}

impl fmt::Display for CodeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeDescriptor::Bch { n, t } => write!(f, "bch:{n}:{t}"),
            CodeDescriptor::Generator { rows, d, .. } => {
                write!(f, "generator:{}x{}:{}", rows.len(), rows.first().map_or(0, Vec::len), d)
            }
        }
    }
}

impl FromStr for CodeDescriptor {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, CodeError> {
        let bad = || CodeError::BadDescriptor(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["bch", n, t] => {
                let n = n.parse().map_err(|_| bad())?;
                let t = t.parse().map_err(|_| bad())?;
                Ok(CodeDescriptor::Bch { n, t })
            }
            _ => Err(bad()),
        }
    }
}

impl CodeDescriptor {
    pub fn block_length(&self) -> usize {
        match self {
            CodeDescriptor::Bch { n, .. } => *n,
            CodeDescriptor::Generator { rows, .. } => rows.len(),
        }
    }

    pub fn build(&self) -> Result<LinearCode, CodeError> {
        match self {
            CodeDescriptor::Bch { n, t } => {
                let m = (2..=8u32).find(|&m| (1usize << m) - 1 == *n).ok_or_else(|| {
                    CodeError::BadDescriptor(format!("bch block length {n} is not 2^m - 1 for 2 <= m <= 8"))
                })?;
                bch_build(m, *t)
            }
            CodeDescriptor::Generator { field, rows, d } => {
                let field = Field::new(field.clone())?;
                let g = FieldMatrix::from_rows(&field, rows)?;
                LinearCode::from_generator(g, Some(*d))
            }
        }
    }
}

// Records carry the descriptor either as the `bch:n:t` string or as an
// inline {"generator": [...], "d": ...} object; the field comes from the
// record itself.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DescriptorFile {
    Tag(String),
    Inline { generator: Vec<Vec<u16>>, d: usize },
}

impl CodeDescriptor {
    pub(crate) fn to_file_value(&self) -> serde_json::Value {
        let file = match self {
            CodeDescriptor::Bch { .. } => DescriptorFile::Tag(self.to_string()),
            CodeDescriptor::Generator { rows, d, .. } => DescriptorFile::Inline { generator: rows.clone(), d: *d },
        };
        serde_json::to_value(file).expect("descriptor serializes")
    }

    pub(crate) fn from_file_value(value: serde_json::Value, field: &FieldSpec) -> Result<Self, String> {
        match serde_json::from_value(value).map_err(|e| e.to_string())? {
            DescriptorFile::Tag(s) => s.parse().map_err(|e: CodeError| e.to_string()),
            DescriptorFile::Inline { generator, d } => {
                Ok(CodeDescriptor::Generator { field: field.clone(), rows: generator, d })
            }
        }
    }
}

/// Parameters of a BCH code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BchParams {
    pub m: u32,
    pub t: usize,
    /// Coefficients over GF(2), lowest degree first.
    pub generator_polynomial: Vec<u8>,
}

#[derive(Clone, Debug)]
enum Decoder {
    Bch { gf: Field, t: usize },
    Exhaustive,
}

/// An (n, k, d) linear code with generator G (n x k) and check matrix
/// H ((n-k) x n).
#[derive(Clone, Debug)]
pub struct LinearCode {
    field: Field,
    n: usize,
    k: usize,
    d: usize,
    g: FieldMatrix,
    h: FieldMatrix,
    decoder: Decoder,
    descriptor: CodeDescriptor,
    bch: Option<BchParams>,
}

/// Product of the minimal polynomials of alpha^1..alpha^{2t}.
fn bch_generator_polynomial(gf: &Field, n: usize, t: usize) -> Vec<u8> {
    let mut covered = vec![false; n];
    // Polynomial with GF(2^m) coefficients, lowest degree first.
    let mut g: Vec<u16> = vec![1];
    for i in 1..=2 * t {
        if covered[i % n] {
            continue;
        }
        let mut j = i % n;
        loop {
            covered[j] = true;
            let root = gf.exp(j as u64);
            // g *= (x - root)
            let mut next = vec![0u16; g.len() + 1];
            for (deg, &c) in g.iter().enumerate() {
                next[deg + 1] = gf.add(next[deg + 1], c);
                next[deg] = gf.sub(next[deg], gf.mul(c, root));
            }
            g = next;
            j = (2 * j) % n;
            if j == i % n {
                break;
            }
        }
    }
    g.iter()
        .map(|&c| {
            debug_assert!(c <= 1, "minimal polynomials have binary coefficients");
            c as u8
        })
        .collect()
}

/// Narrow-sense primitive binary BCH code of length 2^m - 1 correcting `t`
/// errors.
pub fn bch_build(m: u32, t: usize) -> Result<LinearCode, CodeError> {
    if !(2..=8).contains(&m) {
        return Err(CodeError::DegreeOutOfRange(m));
    }
    let n = (1usize << m) - 1;
    if t == 0 || t >= 1 << (m - 1) {
        return Err(CodeError::CapabilityOutOfRange { n, t });
    }
    let gf = Field::new(FieldSpec::new(2, m)?)?;
    let poly = bch_generator_polynomial(&gf, n, t);
    let deg = poly.len() - 1;
    if deg >= n {
        return Err(CodeError::Degenerate);
    }
    let k = n - deg;
    let bin = Field::gf2();
    let mut g = FieldMatrix::zeros(&bin, n, k);
    for j in 0..k {
        for (i, &c) in poly.iter().enumerate() {
            if c == 1 {
                g.set(i + j, j, 1);
            }
        }
    }
    let h = g.transpose().kernel_basis().transpose();
    let code = LinearCode {
        field: bin,
        n,
        k,
        d: 2 * t + 1,
        g,
        h,
        decoder: Decoder::Bch { gf, t },
        descriptor: CodeDescriptor::Bch { n, t },
        bch: Some(BchParams { m, t, generator_polynomial: poly }),
    };
    code.check_duality()?;
    Ok(code)
}

impl LinearCode {
    /// Generic code from an n x k generator with exhaustive bounded-distance
    /// decoding. When `d` is `None` the minimum distance is computed by
    /// searching for the lightest non-zero `e` with `H e = 0`.
    pub fn from_generator(g: FieldMatrix, d: Option<usize>) -> Result<LinearCode, CodeError> {
        let (n, k) = (g.nrows(), g.ncols());
        if n > MAX_EXHAUSTIVE_N {
            return Err(CodeError::TooLongForExhaustive { n, max: MAX_EXHAUSTIVE_N });
        }
        let rank = g.rank();
        if rank != k || k == 0 {
            return Err(CodeError::RankDeficient { rank, k });
        }
        let field = g.field().clone();
        let h = g.transpose().kernel_basis().transpose();
        let d = match d {
            Some(d) => d,
            None => minimum_distance(&h)?,
        };
        let rows = (0..n).map(|r| g.row(r).elems()).collect();
        let code = LinearCode {
            descriptor: CodeDescriptor::Generator { field: field.spec().clone(), rows, d },
            field,
            n,
            k,
            d,
            g,
            h,
            decoder: Decoder::Exhaustive,
            bch: None,
        };
        code.check_duality()?;
        Ok(code)
    }

    fn check_duality(&self) -> Result<(), CodeError> {
        let hg = self.h.mul(&self.g)?;
        let h_rank = self.h.rank();
        if !hg.is_zero() || h_rank != self.n - self.k {
            return Err(CodeError::RankDeficient { rank: h_rank, k: self.n - self.k });
        }
        Ok(())
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Designed distance for BCH codes, true minimum distance otherwise.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Decoding radius floor((d-1)/2).
    pub fn radius(&self) -> usize {
        (self.d - 1) / 2
    }

    pub fn generator(&self) -> &FieldMatrix {
        &self.g
    }

    pub fn check_matrix(&self) -> &FieldMatrix {
        &self.h
    }

    pub fn descriptor(&self) -> &CodeDescriptor {
        &self.descriptor
    }

    pub fn bch_params(&self) -> Option<&BchParams> {
        self.bch.as_ref()
    }

    pub fn is_bch(&self) -> bool {
        matches!(self.decoder, Decoder::Bch { .. })
    }

    pub fn encode(&self, message: &FieldVector) -> Result<FieldVector, CodeError> {
        Ok(self.g.mul_vec(message)?)
    }

    pub fn random_codeword<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldVector {
        let m = FieldVector::random(&self.field, self.k, rng);
        self.g.mul_vec(&m).expect("message length matches k")
    }

    pub fn is_codeword(&self, v: &FieldVector) -> Result<bool, CodeError> {
        Ok(self.h.mul_vec(v)?.is_zero())
    }

    /// The unique codeword within distance `radius()` of `v`.
    pub fn decode_bounded(&self, v: &FieldVector) -> Result<FieldVector, CodeError> {
        if v.field() != &self.field {
            return Err(crate::error::LinalgError::FieldMismatch.into());
        }
        if v.len() != self.n {
            return Err(crate::error::LinalgError::DimensionMismatch { expected: self.n, found: v.len() }.into());
        }
        match &self.decoder {
            Decoder::Bch { gf, t } => {
                let bits = match v.bits() {
                    Some(b) => b.clone(),
                    None => BitVec::from_bools(&v.elems().iter().map(|&a| a == 1).collect::<Vec<_>>()),
                };
                let c = bch_decode(gf, self.n, *t, &bits).ok_or(CodeError::DecodeFailure)?;
                let c = FieldVector::from_bits(c);
                // Root count equal to the locator degree already bounds the
                // distance by t; the syndrome check guards against a locator
                // that splits into wrong positions.
                if !self.is_codeword(&c)? {
                    return Err(CodeError::DecodeFailure);
                }
                Ok(c)
            }
            Decoder::Exhaustive => self.decode_exhaustive(v),
        }
    }

    /// Scans error patterns of weight <= radius in enumeration order.
    pub fn decode_exhaustive(&self, v: &FieldVector) -> Result<FieldVector, CodeError> {
        if self.n > MAX_EXHAUSTIVE_N {
            return Err(CodeError::TooLongForExhaustive { n: self.n, max: MAX_EXHAUSTIVE_N });
        }
        let space =
            PatternSpace::new(self.n, self.field.order(), self.radius()).map_err(|_| CodeError::DecodeFailure)?;
        let scanner = SyndromeScanner::new(&self.h, v).map_err(|_| CodeError::DecodeFailure)?;
        let hit = scanner.first_hit(&space, false, |e| Some(e.clone())).ok_or(CodeError::DecodeFailure)?;
        Ok(v.sub(&hit.payload)?)
    }
}

/// Reed-Solomon code of length `n <= q - 1`: column j of G evaluates x^j at
/// the points alpha^0..alpha^(n-1). MDS, so d = n - k + 1.
pub fn reed_solomon(field: &Field, n: usize, k: usize) -> Result<LinearCode, CodeError> {
    if n == 0 || n >= field.order() as usize || k == 0 || k > n {
        return Err(CodeError::BadDescriptor(format!("rs n={n} k={k} over {}", field.spec())));
    }
    let mut g = FieldMatrix::zeros(field, n, k);
    for i in 0..n {
        let x = field.exp(i as u64);
        for j in 0..k {
            g.set(i, j, field.pow(x, j as u64));
        }
    }
    LinearCode::from_generator(g, Some(n - k + 1))
}

/// Lightest non-zero vector in the kernel of `h`.
fn minimum_distance(h: &FieldMatrix) -> Result<usize, CodeError> {
    let n = h.ncols();
    let zero = FieldVector::zeros(h.field(), n);
    let scanner = SyndromeScanner::new(h, &zero).map_err(|_| CodeError::DistanceSearchTooLarge)?;
    for b in 1..=n {
        let space = PatternSpace::new(n, h.field().order(), b).map_err(|_| CodeError::DistanceSearchTooLarge)?;
        if space.total() > DISTANCE_SEARCH_LIMIT {
            return Err(CodeError::DistanceSearchTooLarge);
        }
        // Skip the zero pattern; weights below b were already exhausted.
        let lightest = space.weight_offset(b);
        if scanner.first_hit(&space, false, |e| (!e.is_zero()).then_some(())).is_some_and(|hit| hit.index >= lightest) {
            return Ok(b);
        }
    }
    Ok(n + 1)
}

/// Syndromes S_1..S_2t of the received word in GF(2^m).
fn bch_syndromes(gf: &Field, t: usize, r: &BitVec) -> Vec<u16> {
    let mut s = vec![0u16; 2 * t];
    for i in r.iter_ones() {
        for (j, sj) in s.iter_mut().enumerate() {
            *sj ^= gf.exp((i * (j + 1)) as u64);
        }
    }
    s
}

/// Error locator via Berlekamp-Massey.
fn berlekamp_massey(gf: &Field, s: &[u16]) -> Vec<u16> {
    let mut c = vec![1u16];
    let mut b = vec![1u16];
    let mut l = 0usize;
    let mut shift = 1usize;
    let mut last = 1u16;
    for step in 0..s.len() {
        let mut delta = s[step];
        for i in 1..=l.min(c.len() - 1) {
            delta = gf.add(delta, gf.mul(c[i], s[step - i]));
        }
        if delta == 0 {
            shift += 1;
            continue;
        }
        let coef = gf.mul(delta, gf.inv(last).expect("last discrepancy is non-zero"));
        let mut next = c.clone();
        if next.len() < b.len() + shift {
            next.resize(b.len() + shift, 0);
        }
        for (i, &bi) in b.iter().enumerate() {
            next[i + shift] = gf.sub(next[i + shift], gf.mul(coef, bi));
        }
        if 2 * l <= step {
            b = c;
            l = step + 1 - l;
            last = delta;
            shift = 1;
        } else {
            shift += 1;
        }
        c = next;
    }
    c.truncate(l + 1);
    c.resize(l + 1, 0);
    c
}

fn bch_decode(gf: &Field, n: usize, t: usize, r: &BitVec) -> Option<BitVec> {
    let s = bch_syndromes(gf, t, r);
    if s.iter().all(|&x| x == 0) {
        return Some(r.clone());
    }
    let locator = berlekamp_massey(gf, &s);
    let degree = locator.len() - 1;
    if degree == 0 || degree > t || locator[degree] == 0 {
        return None;
    }
    // Chien search: position i is in error iff locator(alpha^{-i}) = 0.
    let mut out = r.clone();
    let mut found = 0;
    let order = (n) as u64;
    for i in 0..n {
        let x_inv = (order - i as u64 % order) % order;
        let mut acc = 0u16;
        for (j, &c) in locator.iter().enumerate() {
            if c != 0 {
                acc ^= gf.mul(c, gf.exp(x_inv * j as u64));
            }
        }
        if acc == 0 {
            out.flip(i);
            found += 1;
        }
    }
    (found == degree).then_some(out)
}
