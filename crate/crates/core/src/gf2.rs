//! Bit-packed vectors and matrices over GF(2).
//!
//! Bit `i` of a vector lives in word `i / 64` at bit position `i % 64`.
//! Bits past `len` in the last word are always zero.

use crate::error::LinalgError;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { len, words: vec![0; words_for(len)] }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = BitVec::zeros(len);
        v.set(i, true);
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Inner product over GF(2).
    #[inline]
    pub fn dot(&self, other: &BitVec) -> bool {
        let ones: u32 = self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum();
        ones & 1 == 1
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    /// Packed big-endian bit string: bit 0 is the most significant bit of
    /// byte 0, zero-padded to a whole number of bytes.
    pub fn to_bytes_be(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for i in self.iter_ones() {
            out[i / 8] |= 0x80 >> (i % 8);
        }
        out
    }

    /// Inverse of [`BitVec::to_bytes_be`]; padding bits must be zero.
    pub fn from_bytes_be(bytes: &[u8], len: usize) -> Option<BitVec> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut v = BitVec::zeros(len);
        for (i, &byte) in bytes.iter().enumerate() {
            for bit in 0..8 {
                if byte & (0x80 >> bit) != 0 {
                    let idx = i * 8 + bit;
                    if idx >= len {
                        return None;
                    }
                    v.set(idx, true);
                }
            }
        }
        Some(v)
    }

    /// Concatenation `self | other`.
    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut v = BitVec::zeros(self.len + other.len);
        for i in self.iter_ones() {
            v.set(i, true);
        }
        for i in other.iter_ones() {
            v.set(self.len + i, true);
        }
        v
    }

    pub fn slice(&self, start: usize, end: usize) -> BitVec {
        let mut v = BitVec::zeros(end - start);
        for i in start..end {
            if self.get(i) {
                v.set(i - start, true);
            }
        }
        v
    }
}

/// Row-major matrix with bit-packed rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVec>,
}

/// Reduced row echelon form with the pivot column of each non-zero row.
pub struct Echelon {
    pub matrix: BitMatrix,
    pub pivots: Vec<usize>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix { cols, rows: vec![BitVec::zeros(cols); rows] }
    }

    pub fn identity(n: usize) -> Self {
        BitMatrix { cols: n, rows: (0..n).map(|i| BitVec::unit(n, i)).collect() }
    }

    pub fn from_rows(rows: Vec<BitVec>, cols: usize) -> Result<Self, LinalgError> {
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(LinalgError::DimensionMismatch { expected: cols, found: r.len() });
        }
        Ok(BitMatrix { cols, rows })
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.rows[r].set(c, v);
    }

    pub fn column(&self, c: usize) -> BitVec {
        let mut v = BitVec::zeros(self.nrows());
        for (i, row) in self.rows.iter().enumerate() {
            if row.get(c) {
                v.set(i, true);
            }
        }
        v
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.nrows());
        for (i, row) in self.rows.iter().enumerate() {
            for j in row.iter_ones() {
                t.rows[j].set(i, true);
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        debug_assert_eq!(v.len(), self.cols);
        let mut out = BitVec::zeros(self.nrows());
        for (i, row) in self.rows.iter().enumerate() {
            if row.dot(v) {
                out.set(i, true);
            }
        }
        out
    }

    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        debug_assert_eq!(self.cols, other.nrows());
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc = BitVec::zeros(other.cols);
                for j in row.iter_ones() {
                    acc.xor_assign(&other.rows[j]);
                }
                acc
            })
            .collect();
        BitMatrix { cols: other.cols, rows }
    }

    pub fn concat_cols(&self, other: &BitMatrix) -> BitMatrix {
        debug_assert_eq!(self.nrows(), other.nrows());
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a.concat(b)).collect();
        BitMatrix { cols: self.cols + other.cols, rows }
    }

    /// Rows reordered so that output row `i` is input row `order[i]`.
    pub fn select_rows(&self, order: &[usize]) -> BitMatrix {
        BitMatrix { cols: self.cols, rows: order.iter().map(|&i| self.rows[i].clone()).collect() }
    }

    /// Gauss-Jordan elimination restricted to the first `limit` columns.
    pub fn echelon_limited(&self, limit: usize) -> Echelon {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..limit {
            if r == m.nrows() {
                break;
            }
            let Some(p) = (r..m.nrows()).find(|&i| m.rows[i].get(c)) else {
                continue;
            };
            m.rows.swap(r, p);
            let pivot_row = m.rows[r].clone();
            for i in 0..m.nrows() {
                if i != r && m.rows[i].get(c) {
                    m.rows[i].xor_assign(&pivot_row);
                }
            }
            pivots.push(c);
            r += 1;
        }
        Echelon { matrix: m, pivots }
    }

    pub fn echelon(&self) -> Echelon {
        self.echelon_limited(self.cols)
    }

    pub fn rank(&self) -> usize {
        self.echelon().pivots.len()
    }

    /// Basis of the right kernel, one basis vector per column of the result.
    pub fn kernel_basis(&self) -> BitMatrix {
        let ech = self.echelon();
        kernel_from_echelon(&ech, self.cols)
    }

    /// One solution of `self * x = y` plus the kernel basis.
    pub fn solve_affine(&self, y: &BitVec) -> Result<(BitVec, BitMatrix), LinalgError> {
        if y.len() != self.nrows() {
            return Err(LinalgError::DimensionMismatch { expected: self.nrows(), found: y.len() });
        }
        let rhs = BitMatrix::from_rows(
            (0..y.len()).map(|i| if y.get(i) { BitVec::unit(1, 0) } else { BitVec::zeros(1) }).collect(),
            1,
        )?;
        let aug = self.concat_cols(&rhs);
        let ech = aug.echelon_limited(self.cols);
        let rank = ech.pivots.len();
        if ech.matrix.rows[rank..].iter().any(|row| row.get(self.cols)) {
            return Err(LinalgError::NoSolution);
        }
        let mut x = BitVec::zeros(self.cols);
        for (i, &pc) in ech.pivots.iter().enumerate() {
            if ech.matrix.rows[i].get(self.cols) {
                x.set(pc, true);
            }
        }
        Ok((x, kernel_from_echelon(&ech, self.cols)))
    }

    pub fn inverse(&self) -> Result<BitMatrix, LinalgError> {
        let n = self.nrows();
        if n != self.cols {
            return Err(LinalgError::NotSquare { rows: n, cols: self.cols });
        }
        let aug = self.concat_cols(&BitMatrix::identity(n));
        let ech = aug.echelon_limited(n);
        if ech.pivots.len() != n {
            return Err(LinalgError::Singular);
        }
        let rows = ech.matrix.rows.iter().map(|r| r.slice(n, 2 * n)).collect();
        Ok(BitMatrix { cols: n, rows })
    }
}

fn kernel_from_echelon(ech: &Echelon, cols: usize) -> BitMatrix {
    let mut is_pivot = vec![false; cols];
    for &p in &ech.pivots {
        is_pivot[p] = true;
    }
    let free: Vec<usize> = (0..cols).filter(|&c| !is_pivot[c]).collect();
    let mut basis = BitMatrix::zeros(cols, free.len());
    for (k, &f) in free.iter().enumerate() {
        basis.set(f, k, true);
        for (i, &pc) in ech.pivots.iter().enumerate() {
            if ech.matrix.rows[i].get(f) {
                basis.set(pc, k, true);
            }
        }
    }
    basis
}
