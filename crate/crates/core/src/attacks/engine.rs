//! Error-pattern enumeration and incremental syndrome scanning.
//!
//! Patterns of weight <= b are ordered by weight, then lexicographically by
//! support, then lexicographically by value tuple (first position most
//! significant). Every pattern has a global index in `0..B`, so scans can be
//! split into contiguous index ranges and restarted anywhere.
//!
//! A scan looks for `e` with `H (r - e) = 0`. With `s = H r` and the columns
//! `h_j` of `H`, a weight-w pattern passes iff `s - sum v_i h_{j_i} = 0`; the
//! partial sums are kept per support position, so advancing the last
//! position costs one column update.

use std::ops::ControlFlow;

use rayon::prelude::*;

use crate::error::AttackError;
use crate::field::Field;
use crate::linalg::{FieldMatrix, FieldVector};

/// Patterns per work unit in parallel scans.
const CHUNK: u64 = 1 << 16;

/// The ordered set of all vectors in F^n of weight <= b.
#[derive(Clone, Debug)]
pub struct PatternSpace {
    n: usize,
    q: u32,
    b: usize,
    /// `offsets[w]` = number of patterns of weight < w; length b + 2.
    offsets: Vec<u64>,
    /// `binom[m][j]` = C(m, j) for m <= n, j <= b (saturating).
    binom: Vec<Vec<u64>>,
}

/// A single pattern: ascending support and the non-zero value at each
/// support position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub support: Vec<usize>,
    pub values: Vec<u16>,
}

impl Pattern {
    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn to_vector(&self, field: &Field, n: usize) -> FieldVector {
        let mut v = FieldVector::zeros(field, n);
        for (&i, &a) in self.support.iter().zip(&self.values) {
            v.set(i, a);
        }
        v
    }
}

impl PatternSpace {
    pub fn new(n: usize, q: u32, b: usize) -> Result<Self, AttackError> {
        if b > n {
            return Err(AttackError::BoundTooLarge { b, n });
        }
        let binom: Vec<Vec<u64>> = (0..=n)
            .map(|m| {
                let mut row = vec![0u64; b + 1];
                let mut c: u128 = 1;
                for (j, slot) in row.iter_mut().enumerate() {
                    if j > m {
                        break;
                    }
                    *slot = u64::try_from(c).unwrap_or(u64::MAX);
                    c = c * (m - j) as u128 / (j + 1) as u128;
                }
                row
            })
            .collect();
        let mut offsets = vec![0u64; b + 2];
        for w in 0..=b {
            let count = binom[n][w].saturating_mul(pow_sat(u64::from(q - 1), w));
            offsets[w + 1] = offsets[w].saturating_add(count);
        }
        Ok(PatternSpace { n, q, b, offsets, binom })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn bound(&self) -> usize {
        self.b
    }

    /// B = sum_{j<=b} C(n,j) (q-1)^j, saturating at `u64::MAX`.
    pub fn total(&self) -> u64 {
        self.offsets[self.b + 1]
    }

    /// Index of the first pattern of weight `w`.
    pub fn weight_offset(&self, w: usize) -> u64 {
        self.offsets[w.min(self.b + 1)]
    }

    pub fn unrank(&self, index: u64) -> Option<Pattern> {
        if index >= self.total() {
            return None;
        }
        let w = (0..=self.b).find(|&w| index < self.offsets[w + 1])?;
        let local = index - self.offsets[w];
        let per_support = pow_sat(u64::from(self.q - 1), w);
        let mut combo = local / per_support;
        let mut value_rank = local % per_support;
        let mut support = Vec::with_capacity(w);
        let mut start = 0;
        for i in 0..w {
            let mut c = start;
            loop {
                let count = self.binom[self.n - c - 1][w - i - 1];
                if combo < count {
                    break;
                }
                combo -= count;
                c += 1;
            }
            support.push(c);
            start = c + 1;
        }
        let mut values = vec![0u16; w];
        for slot in values.iter_mut().rev() {
            *slot = (value_rank % u64::from(self.q - 1)) as u16 + 1;
            value_rank /= u64::from(self.q - 1);
        }
        Some(Pattern { support, values })
    }

    pub fn rank(&self, pattern: &Pattern) -> u64 {
        let w = pattern.weight();
        let mut combo = 0u64;
        let mut start = 0;
        for (i, &c) in pattern.support.iter().enumerate() {
            for skipped in start..c {
                combo += self.binom[self.n - skipped - 1][w - i - 1];
            }
            start = c + 1;
        }
        let value_rank = pattern.values.iter().fold(0u64, |acc, &v| acc * u64::from(self.q - 1) + u64::from(v - 1));
        self.offsets[w] + combo * pow_sat(u64::from(self.q - 1), w) + value_rank
    }

    pub fn iter(&self) -> PatternEnumerator {
        PatternEnumerator::new(self.clone(), 0)
    }
}

fn pow_sat(base: u64, exp: usize) -> u64 {
    (0..exp).fold(1u64, |acc, _| acc.saturating_mul(base))
}

/// Mutable cursor over a [`PatternSpace`]; values are stored as indices
/// `value - 1`.
#[derive(Clone, Debug)]
struct Cursor {
    w: usize,
    support: Vec<usize>,
    values: Vec<u16>,
}

impl Cursor {
    fn at(space: &PatternSpace, index: u64) -> Option<Cursor> {
        let p = space.unrank(index)?;
        Some(Cursor { w: p.weight(), support: p.support, values: p.values.iter().map(|v| v - 1).collect() })
    }

    fn pattern(&self) -> Pattern {
        Pattern { support: self.support.clone(), values: self.values.iter().map(|v| v + 1).collect() }
    }

    /// Moves to the next pattern and returns the lowest support position
    /// whose (index, value) changed. The caller bounds-checks by index.
    #[inline]
    fn advance(&mut self, n: usize, q: u32) -> usize {
        let w = self.w;
        let max_value = (q - 2) as u16;
        for i in (0..w).rev() {
            if self.values[i] < max_value {
                self.values[i] += 1;
                for v in &mut self.values[i + 1..] {
                    *v = 0;
                }
                return i;
            }
        }
        // Every value rolls back to its first choice, so partial sums from
        // the first non-trivial value onwards go stale too.
        let reset_from = self.values.iter().position(|&v| v != 0).unwrap_or(w);
        for v in &mut self.values {
            *v = 0;
        }
        for i in (0..w).rev() {
            if self.support[i] < n - w + i {
                self.support[i] += 1;
                for j in i + 1..w {
                    self.support[j] = self.support[j - 1] + 1;
                }
                return i.min(reset_from);
            }
        }
        self.w = w + 1;
        self.support = (0..self.w).collect();
        self.values = vec![0; self.w];
        0
    }
}

/// Restartable, position-indexable iterator over a [`PatternSpace`].
#[derive(Clone, Debug)]
pub struct PatternEnumerator {
    space: PatternSpace,
    next_index: u64,
    cursor: Option<Cursor>,
}

impl PatternEnumerator {
    fn new(space: PatternSpace, index: u64) -> Self {
        let cursor = Cursor::at(&space, index);
        PatternEnumerator { space, next_index: index, cursor }
    }

    pub fn space(&self) -> &PatternSpace {
        &self.space
    }

    /// Index of the pattern the next call to `next` yields.
    pub fn position(&self) -> u64 {
        self.next_index
    }

    pub fn seek(&mut self, index: u64) {
        *self = PatternEnumerator::new(self.space.clone(), index);
    }

    pub fn restart(&mut self) {
        self.seek(0);
    }
}

impl Iterator for PatternEnumerator {
    type Item = Pattern;

    fn next(&mut self) -> Option<Pattern> {
        if self.next_index >= self.space.total() {
            return None;
        }
        let cursor = self.cursor.as_mut()?;
        let out = cursor.pattern();
        self.next_index += 1;
        if self.next_index < self.space.total() {
            cursor.advance(self.space.n, self.space.q);
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = usize::try_from(self.space.total() - self.next_index).unwrap_or(usize::MAX);
        (left, Some(left))
    }
}

/// All vectors of F_q^n with weight <= b in scan order.
pub fn enumerate_patterns(n: usize, q: u32, b: usize) -> Result<PatternEnumerator, AttackError> {
    Ok(PatternSpace::new(n, q, b)?.iter())
}

/// Syndrome arithmetic backing a scan.
trait Syndromes: Sync {
    type Word: Copy + Default + Send;
    fn stride(&self) -> usize;
    fn target(&self) -> &[Self::Word];
    /// `out = prev - value * h_col`
    fn step(&self, out: &mut [Self::Word], prev: &[Self::Word], col: usize, value: u16);
    fn is_zero(&self, s: &[Self::Word]) -> bool;
    /// First column `j` in `from..to` with `prev - h_j = 0`.
    fn find_column(&self, prev: &[Self::Word], from: usize, to: usize) -> Option<usize>;
}

struct BinarySyndromes {
    stride: usize,
    target: Vec<u64>,
    columns: Vec<u64>,
}

impl Syndromes for BinarySyndromes {
    type Word = u64;

    #[inline]
    fn stride(&self) -> usize {
        self.stride
    }

    fn target(&self) -> &[u64] {
        &self.target
    }

    #[inline]
    fn step(&self, out: &mut [u64], prev: &[u64], col: usize, _value: u16) {
        let h = &self.columns[col * self.stride..(col + 1) * self.stride];
        for ((o, p), c) in out.iter_mut().zip(prev).zip(h) {
            *o = p ^ c;
        }
    }

    #[inline]
    fn is_zero(&self, s: &[u64]) -> bool {
        s.iter().all(|&w| w == 0)
    }

    #[inline]
    fn find_column(&self, prev: &[u64], from: usize, to: usize) -> Option<usize> {
        if self.stride == 1 {
            let p = prev[0];
            return self.columns[from..to].iter().position(|&c| c == p).map(|j| from + j);
        }
        let s = self.stride;
        (from..to).find(|&j| self.columns[j * s..(j + 1) * s] == prev[..s])
    }
}

struct FieldSyndromes {
    field: Field,
    stride: usize,
    target: Vec<u16>,
    columns: Vec<u16>,
}

impl Syndromes for FieldSyndromes {
    type Word = u16;

    fn stride(&self) -> usize {
        self.stride
    }

    fn target(&self) -> &[u16] {
        &self.target
    }

    #[inline]
    fn step(&self, out: &mut [u16], prev: &[u16], col: usize, value: u16) {
        let h = &self.columns[col * self.stride..(col + 1) * self.stride];
        let f = &self.field;
        for ((o, &p), &c) in out.iter_mut().zip(prev).zip(h) {
            *o = f.sub(p, f.mul(value, c));
        }
    }

    fn is_zero(&self, s: &[u16]) -> bool {
        s.iter().all(|&w| w == 0)
    }

    fn find_column(&self, prev: &[u16], from: usize, to: usize) -> Option<usize> {
        let s = self.stride;
        (from..to).find(|&j| self.columns[j * s..(j + 1) * s] == prev[..s])
    }
}

/// Scans `[start, end)`; `visit` sees every syndrome hit as (index, cursor).
fn scan_range<S: Syndromes, T>(
    syn: &S,
    space: &PatternSpace,
    start: u64,
    end: u64,
    mut visit: impl FnMut(u64, &Pattern) -> ControlFlow<T>,
) -> Option<T> {
    let end = end.min(space.total());
    if start >= end {
        return None;
    }
    let stride = syn.stride();
    let levels = space.b + 1;
    let mut partial = vec![S::Word::default(); levels * stride];
    partial[..stride].copy_from_slice(syn.target());
    let mut cur = Cursor::at(space, start)?;
    let recompute = |partial: &mut [S::Word], cur: &Cursor, from: usize| {
        for l in from..cur.w {
            let (lo, hi) = partial.split_at_mut((l + 1) * stride);
            syn.step(&mut hi[..stride], &lo[l * stride..], cur.support[l], cur.values[l] + 1);
        }
    };
    recompute(&mut partial, &cur, 0);
    let mut index = start;
    loop {
        let w = cur.w;
        // With q = 2 every support position carries the value 1, so the
        // last position can sweep its remaining columns in one pass.
        if space.q == 2 && w > 0 {
            let last = w - 1;
            let from = cur.support[last];
            let to = space.n.min(from + usize::try_from(end - index).unwrap_or(usize::MAX));
            let prev = &partial[last * stride..w * stride];
            match syn.find_column(prev, from, to) {
                Some(j) => {
                    index += (j - from) as u64;
                    cur.support[last] = j;
                    recompute(&mut partial, &cur, last);
                    if let ControlFlow::Break(t) = visit(index, &cur.pattern()) {
                        return Some(t);
                    }
                }
                None => {
                    index += (to - from - 1) as u64;
                    cur.support[last] = to - 1;
                }
            }
            index += 1;
            if index >= end {
                return None;
            }
            let changed = cur.advance(space.n, space.q);
            recompute(&mut partial, &cur, changed);
            continue;
        }
        if syn.is_zero(&partial[w * stride..(w + 1) * stride]) {
            if let ControlFlow::Break(t) = visit(index, &cur.pattern()) {
                return Some(t);
            }
        }
        index += 1;
        if index >= end {
            return None;
        }
        let changed = cur.advance(space.n, space.q);
        recompute(&mut partial, &cur, changed);
    }
}

/// Result of a first-hit scan.
#[derive(Clone, Debug)]
pub struct ScanHit<T> {
    pub index: u64,
    pub pattern: Pattern,
    pub payload: T,
}

enum Backend {
    Binary(BinarySyndromes),
    General(FieldSyndromes),
}

/// Tests `H (r - e) = 0` for patterns `e` of a [`PatternSpace`].
pub struct SyndromeScanner {
    field: Field,
    n: usize,
    backend: Backend,
}

impl SyndromeScanner {
    /// `check` is H (rows x n), `offset` is r (length n).
    pub fn new(check: &FieldMatrix, offset: &FieldVector) -> Result<Self, AttackError> {
        let s = check.mul_vec(offset)?;
        let n = check.ncols();
        let field = check.field().clone();
        let backend = match (check.bits(), s.bits()) {
            (Some(h), Some(s)) => {
                let stride = h.nrows().div_ceil(64);
                let cols = h.transpose();
                let mut columns = Vec::with_capacity(n * stride);
                for j in 0..n {
                    columns.extend_from_slice(cols.row(j).words());
                }
                Backend::Binary(BinarySyndromes { stride, target: s.words().to_vec(), columns })
            }
            _ => {
                let stride = check.nrows();
                let mut columns = Vec::with_capacity(n * stride);
                for j in 0..n {
                    columns.extend(check.column(j).elems());
                }
                Backend::General(FieldSyndromes { field: field.clone(), stride, target: s.elems(), columns })
            }
        };
        Ok(SyndromeScanner { field, n, backend })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// First pattern (in scan order) whose syndrome matches and which
    /// `accept` turns into a payload. With `parallel`, index ranges are
    /// scanned concurrently and the smallest accepted index wins, so the
    /// result equals the sequential one.
    pub fn first_hit<T: Send>(
        &self,
        space: &PatternSpace,
        parallel: bool,
        accept: impl Fn(&FieldVector) -> Option<T> + Sync,
    ) -> Option<ScanHit<T>> {
        let visit = |index: u64, p: &Pattern| match accept(&p.to_vector(&self.field, self.n)) {
            Some(payload) => ControlFlow::Break(ScanHit { index, pattern: p.clone(), payload }),
            None => ControlFlow::Continue(()),
        };
        let total = space.total();
        if parallel && total > CHUNK {
            let chunks = total.div_ceil(CHUNK);
            (0..chunks).into_par_iter().find_map_first(|c| self.range(space, c * CHUNK, (c + 1) * CHUNK, visit))
        } else {
            self.range(space, 0, total, visit)
        }
    }

    /// Number of patterns whose syndrome matches.
    pub fn count_hits(&self, space: &PatternSpace, parallel: bool) -> u64 {
        let count = |start: u64, end: u64| {
            let mut hits = 0u64;
            self.range::<()>(space, start, end, |_, _| {
                hits += 1;
                ControlFlow::Continue(())
            });
            hits
        };
        let total = space.total();
        if parallel && total > CHUNK {
            (0..total.div_ceil(CHUNK)).into_par_iter().map(|c| count(c * CHUNK, (c + 1) * CHUNK)).sum()
        } else {
            count(0, total)
        }
    }

    fn range<T>(
        &self,
        space: &PatternSpace,
        start: u64,
        end: u64,
        visit: impl FnMut(u64, &Pattern) -> ControlFlow<T>,
    ) -> Option<T> {
        match &self.backend {
            Backend::Binary(s) => scan_range(s, space, start, end, visit),
            Backend::General(s) => scan_range(s, space, start, end, visit),
        }
    }
}

/// Reference scan: full `H (r - e)` product for every pattern.
pub fn naive_first_hit(
    check: &FieldMatrix,
    offset: &FieldVector,
    b: usize,
) -> Result<Option<FieldVector>, AttackError> {
    let field = check.field().clone();
    for p in enumerate_patterns(offset.len(), field.order(), b)? {
        let e = p.to_vector(&field, offset.len());
        if check.mul_vec(&offset.sub(&e)?)?.is_zero() {
            return Ok(Some(e));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomial_sums() {
        assert_eq!(PatternSpace::new(31, 2, 2).unwrap().total(), 1 + 31 + 465);
        assert_eq!(PatternSpace::new(5, 3, 1).unwrap().total(), 11);
        assert_eq!(PatternSpace::new(127, 2, 3).unwrap().total(), 1 + 127 + 8001 + 333_375);
        let zero: Vec<_> = enumerate_patterns(7, 2, 0).unwrap().collect();
        assert_eq!(zero, vec![Pattern { support: vec![], values: vec![] }]);
        assert!(PatternSpace::new(3, 2, 4).is_err());
    }

    #[test]
    fn order_is_weight_then_support_then_values() {
        let all: Vec<_> = enumerate_patterns(3, 3, 2).unwrap().collect();
        let expected: Vec<(Vec<usize>, Vec<u16>)> = vec![
            (vec![], vec![]),
            (vec![0], vec![1]),
            (vec![0], vec![2]),
            (vec![1], vec![1]),
            (vec![1], vec![2]),
            (vec![2], vec![1]),
            (vec![2], vec![2]),
            (vec![0, 1], vec![1, 1]),
            (vec![0, 1], vec![1, 2]),
            (vec![0, 1], vec![2, 1]),
            (vec![0, 1], vec![2, 2]),
            (vec![0, 2], vec![1, 1]),
        ];
        for (p, (s, v)) in all.iter().zip(&expected) {
            assert_eq!(&p.support, s);
            assert_eq!(&p.values, v);
        }
        assert_eq!(all.len(), 1 + 6 + 12);
    }

    #[test]
    fn rank_inverts_unrank() {
        let space = PatternSpace::new(9, 4, 3).unwrap();
        for (i, p) in space.iter().enumerate() {
            assert_eq!(space.rank(&p), i as u64);
            assert_eq!(space.unrank(i as u64).as_ref(), Some(&p));
        }
    }

    #[test]
    fn seek_resumes_mid_stream() {
        let mut it = enumerate_patterns(10, 2, 3).unwrap();
        let all: Vec<_> = it.clone().collect();
        it.seek(57);
        assert_eq!(it.next().as_ref(), Some(&all[57]));
        it.restart();
        assert_eq!(it.count(), all.len());
    }
}
