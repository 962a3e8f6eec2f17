//! Vectors and matrices over a [`Field`].
//!
//! GF(2) values are bit-packed by default and dispatch to [`crate::gf2`].
//! Everything else, and GF(2) values explicitly converted with
//! `into_dense_reference`, uses per-entry canonical integers. Mixed operands
//! fall back to the per-entry path.

use std::fmt;

use rand::Rng;

use crate::error::LinalgError;
use crate::field::Field;
use crate::gf2::{BitMatrix, BitVec};

#[derive(Clone)]
enum VecRepr {
    Packed(BitVec),
    Dense(Vec<u16>),
}

/// A column vector in F^n.
#[derive(Clone)]
pub struct FieldVector {
    field: Field,
    repr: VecRepr,
}

impl fmt::Debug for FieldVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.field, self.elems())
    }
}

impl PartialEq for FieldVector {
    fn eq(&self, other: &Self) -> bool {
        if self.field != other.field || self.len() != other.len() {
            return false;
        }
        match (&self.repr, &other.repr) {
            (VecRepr::Packed(a), VecRepr::Packed(b)) => a == b,
            _ => self.elems() == other.elems(),
        }
    }
}

impl Eq for FieldVector {}

fn check_len(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { expected, found })
    }
}

impl FieldVector {
    pub fn zeros(field: &Field, n: usize) -> Self {
        let repr = if field.is_binary() { VecRepr::Packed(BitVec::zeros(n)) } else { VecRepr::Dense(vec![0; n]) };
        FieldVector { field: field.clone(), repr }
    }

    pub fn unit(field: &Field, n: usize, i: usize) -> Self {
        let mut v = FieldVector::zeros(field, n);
        v.set(i, 1);
        v
    }

    pub fn from_elems(field: &Field, elems: Vec<u16>) -> Result<Self, LinalgError> {
        if let Some(&bad) = elems.iter().find(|&&a| !field.contains(a)) {
            return Err(LinalgError::InvalidElement(u32::from(bad)));
        }
        let repr = if field.is_binary() {
            VecRepr::Packed(BitVec::from_bools(&elems.iter().map(|&a| a == 1).collect::<Vec<_>>()))
        } else {
            VecRepr::Dense(elems)
        };
        Ok(FieldVector { field: field.clone(), repr })
    }

    pub fn from_bits(bits: BitVec) -> Self {
        FieldVector { field: Field::gf2(), repr: VecRepr::Packed(bits) }
    }

    /// Same vector in the per-entry representation.
    pub fn into_dense_reference(self) -> Self {
        let elems = self.elems();
        FieldVector { field: self.field, repr: VecRepr::Dense(elems) }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            VecRepr::Packed(b) => b.len(),
            VecRepr::Dense(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Packed bits, when this is a packed GF(2) vector.
    pub fn bits(&self) -> Option<&BitVec> {
        match &self.repr {
            VecRepr::Packed(b) => Some(b),
            VecRepr::Dense(_) => None,
        }
    }

    pub fn get(&self, i: usize) -> u16 {
        match &self.repr {
            VecRepr::Packed(b) => u16::from(b.get(i)),
            VecRepr::Dense(d) => d[i],
        }
    }

    pub fn set(&mut self, i: usize, value: u16) {
        debug_assert!(self.field.contains(value));
        match &mut self.repr {
            VecRepr::Packed(b) => b.set(i, value == 1),
            VecRepr::Dense(d) => d[i] = value,
        }
    }

    pub fn elems(&self) -> Vec<u16> {
        match &self.repr {
            VecRepr::Packed(b) => (0..b.len()).map(|i| u16::from(b.get(i))).collect(),
            VecRepr::Dense(d) => d.clone(),
        }
    }

    fn compatible(&self, other: &FieldVector) -> Result<(), LinalgError> {
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch);
        }
        check_len(self.len(), other.len())
    }

    fn zip_with(&self, other: &FieldVector, f: impl Fn(u16, u16) -> u16) -> Result<FieldVector, LinalgError> {
        self.compatible(other)?;
        let a = self.elems();
        let b = other.elems();
        let out: Vec<u16> = a.iter().zip(&b).map(|(&x, &y)| f(x, y)).collect();
        Ok(FieldVector { field: self.field.clone(), repr: VecRepr::Dense(out) })
    }

    pub fn add(&self, other: &FieldVector) -> Result<FieldVector, LinalgError> {
        if let (VecRepr::Packed(a), VecRepr::Packed(b)) = (&self.repr, &other.repr) {
            self.compatible(other)?;
            return Ok(FieldVector { field: self.field.clone(), repr: VecRepr::Packed(a.xor(b)) });
        }
        self.zip_with(other, |x, y| self.field.add(x, y))
    }

    pub fn sub(&self, other: &FieldVector) -> Result<FieldVector, LinalgError> {
        if let (VecRepr::Packed(a), VecRepr::Packed(b)) = (&self.repr, &other.repr) {
            self.compatible(other)?;
            return Ok(FieldVector { field: self.field.clone(), repr: VecRepr::Packed(a.xor(b)) });
        }
        self.zip_with(other, |x, y| self.field.sub(x, y))
    }

    pub fn neg(&self) -> FieldVector {
        match &self.repr {
            VecRepr::Packed(_) => self.clone(),
            VecRepr::Dense(d) => FieldVector {
                field: self.field.clone(),
                repr: VecRepr::Dense(d.iter().map(|&a| self.field.neg(a)).collect()),
            },
        }
    }

    pub fn scale(&self, a: u16) -> FieldVector {
        let mut out = self.clone();
        match &mut out.repr {
            VecRepr::Packed(b) => {
                if a == 0 {
                    *b = BitVec::zeros(b.len());
                }
            }
            VecRepr::Dense(d) => d.iter_mut().for_each(|x| *x = self.field.mul(a, *x)),
        }
        out
    }

    /// Constant vector with every entry equal to `a`.
    pub fn constant(field: &Field, n: usize, a: u16) -> FieldVector {
        let mut v = FieldVector::zeros(field, n);
        for i in 0..n {
            v.set(i, a);
        }
        v
    }

    pub fn weight(&self) -> usize {
        match &self.repr {
            VecRepr::Packed(b) => b.weight(),
            VecRepr::Dense(d) => d.iter().filter(|&&a| a != 0).count(),
        }
    }

    pub fn distance(&self, other: &FieldVector) -> Result<usize, LinalgError> {
        Ok(self.sub(other)?.weight())
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            VecRepr::Packed(b) => b.is_zero(),
            VecRepr::Dense(d) => d.iter().all(|&a| a == 0),
        }
    }

    /// Indices of the non-zero entries in ascending order.
    pub fn support(&self) -> Vec<usize> {
        match &self.repr {
            VecRepr::Packed(b) => b.iter_ones().collect(),
            VecRepr::Dense(d) => d.iter().enumerate().filter(|(_, &a)| a != 0).map(|(i, _)| i).collect(),
        }
    }

    pub fn slice(&self, start: usize, end: usize) -> FieldVector {
        match &self.repr {
            VecRepr::Packed(b) => FieldVector { field: self.field.clone(), repr: VecRepr::Packed(b.slice(start, end)) },
            VecRepr::Dense(d) => {
                FieldVector { field: self.field.clone(), repr: VecRepr::Dense(d[start..end].to_vec()) }
            }
        }
    }

    pub fn concat(&self, other: &FieldVector) -> Result<FieldVector, LinalgError> {
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch);
        }
        if let (VecRepr::Packed(a), VecRepr::Packed(b)) = (&self.repr, &other.repr) {
            return Ok(FieldVector { field: self.field.clone(), repr: VecRepr::Packed(a.concat(b)) });
        }
        let mut e = self.elems();
        e.extend(other.elems());
        Ok(FieldVector { field: self.field.clone(), repr: VecRepr::Dense(e) })
    }

    /// Output entry `i` is input entry `order[i]`.
    pub fn select(&self, order: &[usize]) -> FieldVector {
        let mut out = FieldVector::zeros(&self.field, order.len());
        if let VecRepr::Dense(_) = self.repr {
            out.repr = VecRepr::Dense(vec![0; order.len()]);
        }
        for (i, &j) in order.iter().enumerate() {
            out.set(i, self.get(j));
        }
        out
    }

    /// Uniform element of F^n.
    pub fn random<R: Rng + ?Sized>(field: &Field, n: usize, rng: &mut R) -> FieldVector {
        if field.is_binary() {
            let mut b = BitVec::zeros(n);
            for i in 0..n {
                if rng.random::<bool>() {
                    b.set(i, true);
                }
            }
            return FieldVector { field: field.clone(), repr: VecRepr::Packed(b) };
        }
        let q = field.order();
        let elems = (0..n).map(|_| rng.random_range(0..q) as u16).collect();
        FieldVector { field: field.clone(), repr: VecRepr::Dense(elems) }
    }

    /// Uniform over vectors of Hamming weight exactly `w`: uniform support,
    /// uniform non-zero values.
    pub fn random_weight<R: Rng + ?Sized>(
        field: &Field,
        n: usize,
        w: usize,
        rng: &mut R,
    ) -> Result<FieldVector, LinalgError> {
        if w > n {
            return Err(LinalgError::WeightTooLarge { weight: w, len: n });
        }
        let mut v = FieldVector::zeros(field, n);
        let q = field.order();
        for i in rand::seq::index::sample(rng, n, w) {
            let value = if q == 2 { 1 } else { rng.random_range(1..q) as u16 };
            v.set(i, value);
        }
        Ok(v)
    }
}

#[derive(Clone)]
enum MatRepr {
    Packed(BitMatrix),
    Dense(Vec<u16>),
}

/// A rows x cols matrix over a field.
#[derive(Clone)]
pub struct FieldMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    repr: MatRepr,
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:?} {}x{}", self.field, self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", (0..self.cols).map(|c| self.get(r, c)).collect::<Vec<_>>())?;
        }
        Ok(())
    }
}

impl PartialEq for FieldMatrix {
    fn eq(&self, other: &Self) -> bool {
        if self.field != other.field || self.rows != other.rows || self.cols != other.cols {
            return false;
        }
        match (&self.repr, &other.repr) {
            (MatRepr::Packed(a), MatRepr::Packed(b)) => a == b,
            _ => self.dense_data() == other.dense_data(),
        }
    }
}

impl Eq for FieldMatrix {}

/// Solution set `particular + span(kernel columns)` of a linear system.
#[derive(Clone, Debug)]
pub struct AffineSolution {
    pub particular: FieldVector,
    pub kernel: FieldMatrix,
}

impl AffineSolution {
    pub fn nullity(&self) -> usize {
        self.kernel.ncols()
    }

    /// q^nullity, or `None` if it does not fit in a u128.
    pub fn count(&self) -> Option<u128> {
        u128::from(self.particular.field().order()).checked_pow(self.nullity() as u32)
    }

    /// Every solution, ordered by the kernel coefficient odometer (first
    /// coefficient fastest). The particular solution comes first.
    pub fn iter(&self) -> impl Iterator<Item = FieldVector> + '_ {
        let q = self.particular.field().order() as u16;
        let k = self.nullity();
        let basis: Vec<FieldVector> = (0..k).map(|j| self.kernel.column(j)).collect();
        let mut coeffs = vec![0u16; k];
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let mut x = self.particular.clone();
            for (c, b) in coeffs.iter().zip(&basis) {
                if *c != 0 {
                    x = x.add(&b.scale(*c)).expect("kernel columns match the solution length");
                }
            }
            done = true;
            for c in coeffs.iter_mut() {
                *c += 1;
                if *c < q {
                    done = false;
                    break;
                }
                *c = 0;
            }
            Some(x)
        })
    }
}

struct DenseEchelon {
    data: Vec<u16>,
    pivots: Vec<usize>,
}

fn dense_echelon(field: &Field, mut data: Vec<u16>, rows: usize, cols: usize, limit: usize) -> DenseEchelon {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..limit {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| data[i * cols + c] != 0) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                data.swap(r * cols + j, p * cols + j);
            }
        }
        let inv = field.inv(data[r * cols + c]).expect("pivot is non-zero");
        for j in 0..cols {
            data[r * cols + j] = field.mul(inv, data[r * cols + j]);
        }
        for i in 0..rows {
            let factor = data[i * cols + c];
            if i == r || factor == 0 {
                continue;
            }
            for j in 0..cols {
                let t = field.mul(factor, data[r * cols + j]);
                data[i * cols + j] = field.sub(data[i * cols + j], t);
            }
        }
        pivots.push(c);
        r += 1;
    }
    DenseEchelon { data, pivots }
}

fn dense_kernel(field: &Field, ech: &DenseEchelon, stride: usize, cols: usize) -> FieldMatrix {
    let mut is_pivot = vec![false; cols];
    for &p in &ech.pivots {
        is_pivot[p] = true;
    }
    let free: Vec<usize> = (0..cols).filter(|&c| !is_pivot[c]).collect();
    let mut basis = FieldMatrix::dense_zeros(field, cols, free.len());
    for (k, &f) in free.iter().enumerate() {
        basis.set(f, k, 1);
        for (i, &pc) in ech.pivots.iter().enumerate() {
            let v = ech.data[i * stride + f];
            if v != 0 {
                basis.set(pc, k, field.neg(v));
            }
        }
    }
    basis
}

impl FieldMatrix {
    pub fn zeros(field: &Field, rows: usize, cols: usize) -> Self {
        if field.is_binary() {
            return FieldMatrix::from_bit_matrix(BitMatrix::zeros(rows, cols));
        }
        FieldMatrix::dense_zeros(field, rows, cols)
    }

    fn dense_zeros(field: &Field, rows: usize, cols: usize) -> Self {
        FieldMatrix { field: field.clone(), rows, cols, repr: MatRepr::Dense(vec![0; rows * cols]) }
    }

    pub fn identity(field: &Field, n: usize) -> Self {
        let mut m = FieldMatrix::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_bit_matrix(m: BitMatrix) -> Self {
        FieldMatrix { field: Field::gf2(), rows: m.nrows(), cols: m.ncols(), repr: MatRepr::Packed(m) }
    }

    pub fn from_rows(field: &Field, rows: &[Vec<u16>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::RaggedRows);
        }
        let mut m = FieldMatrix::zeros(field, rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if !field.contains(a) {
                    return Err(LinalgError::InvalidElement(u32::from(a)));
                }
                m.set(i, j, a);
            }
        }
        Ok(m)
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(field: &Field, rows: usize, columns: &[FieldVector]) -> Result<Self, LinalgError> {
        let mut m = FieldMatrix::zeros(field, rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.field() != field {
                return Err(LinalgError::FieldMismatch);
            }
            check_len(rows, c.len())?;
            for i in 0..rows {
                m.set(i, j, c.get(i));
            }
        }
        Ok(m)
    }

    pub fn into_dense_reference(self) -> Self {
        let data = self.dense_data();
        FieldMatrix { repr: MatRepr::Dense(data), ..self }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn bits(&self) -> Option<&BitMatrix> {
        match &self.repr {
            MatRepr::Packed(m) => Some(m),
            MatRepr::Dense(_) => None,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> u16 {
        match &self.repr {
            MatRepr::Packed(m) => u16::from(m.get(r, c)),
            MatRepr::Dense(d) => d[r * self.cols + c],
        }
    }

    pub fn set(&mut self, r: usize, c: usize, value: u16) {
        debug_assert!(self.field.contains(value));
        match &mut self.repr {
            MatRepr::Packed(m) => m.set(r, c, value == 1),
            MatRepr::Dense(d) => d[r * self.cols + c] = value,
        }
    }

    fn dense_data(&self) -> Vec<u16> {
        match &self.repr {
            MatRepr::Dense(d) => d.clone(),
            MatRepr::Packed(m) => {
                let mut out = vec![0; self.rows * self.cols];
                for (r, row) in m.rows().iter().enumerate() {
                    for c in row.iter_ones() {
                        out[r * self.cols + c] = 1;
                    }
                }
                out
            }
        }
    }

    fn with_dense(&self, rows: usize, cols: usize, data: Vec<u16>) -> FieldMatrix {
        FieldMatrix { field: self.field.clone(), rows, cols, repr: MatRepr::Dense(data) }
    }

    pub fn row(&self, r: usize) -> FieldVector {
        match &self.repr {
            MatRepr::Packed(m) => FieldVector::from_bits(m.row(r).clone()),
            MatRepr::Dense(d) => FieldVector {
                field: self.field.clone(),
                repr: VecRepr::Dense(d[r * self.cols..(r + 1) * self.cols].to_vec()),
            },
        }
    }

    pub fn column(&self, c: usize) -> FieldVector {
        match &self.repr {
            MatRepr::Packed(m) => FieldVector::from_bits(m.column(c)),
            MatRepr::Dense(d) => FieldVector {
                field: self.field.clone(),
                repr: VecRepr::Dense((0..self.rows).map(|r| d[r * self.cols + c]).collect()),
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            MatRepr::Packed(m) => m.rows().iter().all(BitVec::is_zero),
            MatRepr::Dense(d) => d.iter().all(|&a| a == 0),
        }
    }

    pub fn transpose(&self) -> FieldMatrix {
        match &self.repr {
            MatRepr::Packed(m) => FieldMatrix::from_bit_matrix(m.transpose()),
            MatRepr::Dense(d) => {
                let mut out = vec![0; d.len()];
                for r in 0..self.rows {
                    for c in 0..self.cols {
                        out[c * self.rows + r] = d[r * self.cols + c];
                    }
                }
                self.with_dense(self.cols, self.rows, out)
            }
        }
    }

    pub fn mul_vec(&self, v: &FieldVector) -> Result<FieldVector, LinalgError> {
        if self.field != *v.field() {
            return Err(LinalgError::FieldMismatch);
        }
        check_len(self.cols, v.len())?;
        if let (MatRepr::Packed(m), Some(b)) = (&self.repr, v.bits()) {
            return Ok(FieldVector::from_bits(m.mul_vec(b)));
        }
        let d = self.dense_data();
        let x = v.elems();
        let f = &self.field;
        let out = (0..self.rows)
            .map(|r| {
                d[r * self.cols..(r + 1) * self.cols].iter().zip(&x).fold(0u16, |acc, (&a, &b)| f.add(acc, f.mul(a, b)))
            })
            .collect();
        Ok(FieldVector { field: f.clone(), repr: VecRepr::Dense(out) })
    }

    pub fn mul(&self, other: &FieldMatrix) -> Result<FieldMatrix, LinalgError> {
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch);
        }
        check_len(self.cols, other.rows)?;
        if let (MatRepr::Packed(a), MatRepr::Packed(b)) = (&self.repr, &other.repr) {
            return Ok(FieldMatrix::from_bit_matrix(a.mul(b)));
        }
        let a = self.dense_data();
        let b = other.dense_data();
        let f = &self.field;
        let mut out = vec![0u16; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let x = a[i * self.cols + k];
                if x == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let t = f.mul(x, b[k * other.cols + j]);
                    out[i * other.cols + j] = f.add(out[i * other.cols + j], t);
                }
            }
        }
        Ok(self.with_dense(self.rows, other.cols, out))
    }

    pub fn concat_cols(&self, other: &FieldMatrix) -> Result<FieldMatrix, LinalgError> {
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch);
        }
        check_len(self.rows, other.rows)?;
        if let (MatRepr::Packed(a), MatRepr::Packed(b)) = (&self.repr, &other.repr) {
            return Ok(FieldMatrix::from_bit_matrix(a.concat_cols(b)));
        }
        let a = self.dense_data();
        let b = other.dense_data();
        let cols = self.cols + other.cols;
        let mut out = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            out.extend_from_slice(&a[r * self.cols..(r + 1) * self.cols]);
            out.extend_from_slice(&b[r * other.cols..(r + 1) * other.cols]);
        }
        Ok(self.with_dense(self.rows, cols, out))
    }

    /// Output row `i` is input row `order[i]`.
    pub fn select_rows(&self, order: &[usize]) -> FieldMatrix {
        match &self.repr {
            MatRepr::Packed(m) => FieldMatrix::from_bit_matrix(m.select_rows(order)),
            MatRepr::Dense(d) => {
                let mut out = Vec::with_capacity(order.len() * self.cols);
                for &r in order {
                    out.extend_from_slice(&d[r * self.cols..(r + 1) * self.cols]);
                }
                self.with_dense(order.len(), self.cols, out)
            }
        }
    }

    pub fn scale(&self, a: u16) -> FieldMatrix {
        let mut out = self.clone();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self.get(r, c);
                if v != 0 {
                    out.set(r, c, self.field.mul(a, v));
                }
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        match &self.repr {
            MatRepr::Packed(m) => m.rank(),
            MatRepr::Dense(d) => dense_echelon(&self.field, d.clone(), self.rows, self.cols, self.cols).pivots.len(),
        }
    }

    /// Columns form a basis of `{x : self * x = 0}`.
    pub fn kernel_basis(&self) -> FieldMatrix {
        match &self.repr {
            MatRepr::Packed(m) => FieldMatrix::from_bit_matrix(m.kernel_basis()),
            MatRepr::Dense(d) => {
                let ech = dense_echelon(&self.field, d.clone(), self.rows, self.cols, self.cols);
                dense_kernel(&self.field, &ech, self.cols, self.cols)
            }
        }
    }

    pub fn solve_affine(&self, y: &FieldVector) -> Result<AffineSolution, LinalgError> {
        if self.field != *y.field() {
            return Err(LinalgError::FieldMismatch);
        }
        check_len(self.rows, y.len())?;
        if let (MatRepr::Packed(m), Some(b)) = (&self.repr, y.bits()) {
            let (x, k) = m.solve_affine(b)?;
            return Ok(AffineSolution {
                particular: FieldVector::from_bits(x),
                kernel: FieldMatrix::from_bit_matrix(k),
            });
        }
        let stride = self.cols + 1;
        let d = self.dense_data();
        let rhs = y.elems();
        let mut aug = Vec::with_capacity(self.rows * stride);
        for r in 0..self.rows {
            aug.extend_from_slice(&d[r * self.cols..(r + 1) * self.cols]);
            aug.push(rhs[r]);
        }
        let ech = dense_echelon(&self.field, aug, self.rows, stride, self.cols);
        let rank = ech.pivots.len();
        if (rank..self.rows).any(|r| ech.data[r * stride + self.cols] != 0) {
            return Err(LinalgError::NoSolution);
        }
        let mut x = vec![0u16; self.cols];
        for (i, &pc) in ech.pivots.iter().enumerate() {
            x[pc] = ech.data[i * stride + self.cols];
        }
        Ok(AffineSolution {
            particular: FieldVector { field: self.field.clone(), repr: VecRepr::Dense(x) },
            kernel: dense_kernel(&self.field, &ech, stride, self.cols),
        })
    }

    pub fn inverse(&self) -> Result<FieldMatrix, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        if let MatRepr::Packed(m) = &self.repr {
            return Ok(FieldMatrix::from_bit_matrix(m.inverse()?));
        }
        let n = self.rows;
        let d = self.dense_data();
        let mut aug = vec![0u16; n * 2 * n];
        for r in 0..n {
            aug[r * 2 * n..r * 2 * n + n].copy_from_slice(&d[r * n..(r + 1) * n]);
            aug[r * 2 * n + n + r] = 1;
        }
        let ech = dense_echelon(&self.field, aug, n, 2 * n, n);
        if ech.pivots.len() != n {
            return Err(LinalgError::Singular);
        }
        let mut out = Vec::with_capacity(n * n);
        for r in 0..n {
            out.extend_from_slice(&ech.data[r * 2 * n + n..(r + 1) * 2 * n]);
        }
        Ok(self.with_dense(n, n, out))
    }

    pub fn random<R: Rng + ?Sized>(field: &Field, rows: usize, cols: usize, rng: &mut R) -> FieldMatrix {
        let mut m = FieldMatrix::zeros(field, rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, rng.random_range(0..field.order()) as u16);
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf5() -> Field {
        Field::with_order(5).unwrap()
    }

    #[test]
    fn binary_add_is_xor() {
        let f = Field::gf2();
        let a = FieldVector::from_elems(&f, vec![1, 0, 1, 1]).unwrap();
        let b = FieldVector::from_elems(&f, vec![0, 0, 1, 1]).unwrap();
        assert_eq!(a.add(&b).unwrap().elems(), vec![1, 0, 0, 0]);
        assert_eq!(a.add(&FieldVector::zeros(&f, 4)).unwrap(), a);
        assert_eq!(a.weight(), 3);
        assert_eq!(a.distance(&a).unwrap(), 0);
    }

    #[test]
    fn gf5_subtraction() {
        let f = gf5();
        let a = FieldVector::from_elems(&f, vec![3, 4]).unwrap();
        let b = FieldVector::from_elems(&f, vec![4, 4]).unwrap();
        assert_eq!(a.sub(&b).unwrap().elems(), vec![4, 0]);
    }

    #[test]
    fn mismatches_are_errors() {
        let f = Field::gf2();
        let a = FieldVector::zeros(&f, 3);
        let b = FieldVector::zeros(&f, 4);
        assert!(matches!(a.add(&b), Err(LinalgError::DimensionMismatch { .. })));
        let c = FieldVector::zeros(&gf5(), 3);
        assert_eq!(a.add(&c), Err(LinalgError::FieldMismatch));
        assert!(FieldVector::from_elems(&f, vec![2]).is_err());
        let m = FieldMatrix::identity(&f, 3);
        assert!(m.mul_vec(&b).is_err());
    }

    #[test]
    fn small_products() {
        let f = Field::gf2();
        let m = FieldMatrix::from_rows(&f, &[vec![1, 1], vec![0, 1]]).unwrap();
        let v = FieldVector::from_elems(&f, vec![1, 1]).unwrap();
        assert_eq!(m.mul_vec(&v).unwrap().elems(), vec![0, 1]);
        assert_eq!(FieldMatrix::identity(&f, 2).mul_vec(&v).unwrap(), v);
        assert!(FieldMatrix::zeros(&f, 2, 2).mul_vec(&v).unwrap().is_zero());
    }

    #[test]
    fn rank_and_kernel_of_trivial_matrices() {
        for f in [Field::gf2(), gf5()] {
            let id = FieldMatrix::identity(&f, 4);
            assert_eq!(id.rank(), 4);
            assert_eq!(id.kernel_basis().ncols(), 0);
            let z = FieldMatrix::zeros(&f, 2, 2);
            assert_eq!(z.rank(), 0);
            assert_eq!(z.kernel_basis().ncols(), 2);
        }
    }

    #[test]
    fn solve_identity_and_inconsistent() {
        let f = gf5();
        let id = FieldMatrix::identity(&f, 3);
        let y = FieldVector::from_elems(&f, vec![1, 2, 3]).unwrap();
        let s = id.solve_affine(&y).unwrap();
        assert_eq!(s.particular, y);
        assert_eq!(s.count(), Some(1));
        let m = FieldMatrix::from_rows(&f, &[vec![1, 2], vec![2, 4]]).unwrap();
        let y = FieldVector::from_elems(&f, vec![1, 1]).unwrap();
        assert_eq!(m.solve_affine(&y).unwrap_err(), LinalgError::NoSolution);
    }

    #[test]
    fn concat_identity_blocks() {
        let f = Field::gf2();
        let i2 = FieldMatrix::identity(&f, 2);
        let c = i2.concat_cols(&i2).unwrap();
        assert_eq!((c.nrows(), c.ncols()), (2, 4));
        assert_eq!(c, FieldMatrix::from_rows(&f, &[vec![1, 0, 1, 0], vec![0, 1, 0, 1]]).unwrap());
    }

    #[test]
    fn singular_inverse_fails() {
        let f = gf5();
        let m = FieldMatrix::from_rows(&f, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(m.inverse().unwrap_err(), LinalgError::Singular);
        assert!(matches!(FieldMatrix::zeros(&f, 2, 3).inverse(), Err(LinalgError::NotSquare { .. })));
    }

    #[test]
    fn random_weight_zero_and_too_large() {
        let mut rng = rand::rng();
        let f = gf5();
        assert!(FieldVector::random_weight(&f, 5, 0, &mut rng).unwrap().is_zero());
        assert!(FieldVector::random_weight(&f, 5, 6, &mut rng).is_err());
        for w in 0..=5 {
            assert_eq!(FieldVector::random_weight(&f, 5, w, &mut rng).unwrap().weight(), w);
        }
    }
}
