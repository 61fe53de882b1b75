use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Dense complex matrix stored row-major.
///
/// Serializes as `{"rows", "cols", "entries": [[re, im], ...]}` in row-major order.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MatrixWire", try_from = "MatrixWire")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl From<ComplexMatrix> for MatrixWire {
    fn from(m: ComplexMatrix) -> Self {
        Self {
            rows: m.rows,
            cols: m.cols,
            entries: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<MatrixWire> for ComplexMatrix {
    type Error = Error;

    fn try_from(w: MatrixWire) -> Result<Self> {
        let data = w.entries.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        ComplexMatrix::from_vec(w.rows, w.cols, data)
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { Complex64::new(diag[i], 0.0) } else { ZERO })
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    /// Column vector from a slice.
    pub fn column(v: &[Complex64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// `|i><j|` in dimension `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = ONE;
        m
    }

    /// `|u><v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn col(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[Complex64]) {
        for (i, z) in v.iter().enumerate() {
            self[(i, j)] = *z;
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )))
        }
    }

    pub fn ensure_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::ShapeMismatch(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )))
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| f(*z)).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖self − other‖_F`; shapes must agree.
    pub fn distance(&self, other: &Self) -> f64 {
        debug_assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖H − H*‖_F`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `(H + H*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.rows;
        Self::from_fn(n, n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, a) in row.iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * v` for a vector `v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Kronecker product `self ⊗ rhs`; the first factor indexes the outer blocks.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (r, c) = (self.rows * rhs.rows, self.cols * rhs.cols);
        Self::from_fn(r, c, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }

    /// The `bs × bs` block at block position `(bi, bj)`.
    pub fn block(&self, bs: usize, bi: usize, bj: usize) -> Self {
        Self::from_fn(bs, bs, |i, j| self[(bi * bs + i, bj * bs + j)])
    }

    pub fn set_block(&mut self, bs: usize, bi: usize, bj: usize, blk: &Self) {
        for i in 0..bs {
            for j in 0..bs {
                self[(bi * bs + i, bj * bs + j)] = blk[(i, j)];
            }
        }
    }

    /// Row-major vectorization, `vec(X)[i*cols + j] = X[i][j]`.
    pub fn vectorize(&self) -> Vec<Complex64> {
        self.data.clone()
    }

    pub fn unvectorize(rows: usize, cols: usize, v: &[Complex64]) -> Self {
        assert_eq!(v.len(), rows * cols);
        Self {
            rows,
            cols,
            data: v.to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

pub fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

macro_rules! elementwise {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;

            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                assert!(self.same_shape(rhs), "elementwise shape mismatch");
                ComplexMatrix {
                    rows: self.rows,
                    cols: self.cols,
                    data: self.data.iter().zip(&rhs.data).map(|(a, b)| a $op b).collect(),
                }
            }
        }

        impl $trait<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;

            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                (&self).$method(&rhs)
            }
        }

        impl $trait<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;

            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                (&self).$method(rhs)
            }
        }
    };
}

elementwise!(Add, add, +);
elementwise!(Sub, sub, -);

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert!(self.same_shape(rhs));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert!(self.same_shape(rhs));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul<ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        self.matmul(&rhs)
    }
}

impl Mul<&ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul<ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        self.matmul(&rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.map(|z| -z)
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_of_units_is_unit() {
        let a = ComplexMatrix::unit(2, 0, 1);
        let b = ComplexMatrix::unit(3, 2, 0);
        let k = a.kron(&b);
        assert_eq!(k, ComplexMatrix::unit(6, 2, 3));
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(ComplexMatrix::from_vec(2, 2, vec![ONE; 3]).is_err());
        assert!(matches!(
            ComplexMatrix::from_vec(1, 1, vec![Complex64::new(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn adjoint_of_product() {
        let a = ComplexMatrix::from_fn(2, 3, |i, j| Complex64::new(i as f64, j as f64 + 1.0));
        let b = ComplexMatrix::from_fn(3, 2, |i, j| Complex64::new(1.0 - j as f64, i as f64));
        let lhs = (&a * &b).adjoint();
        let rhs = b.adjoint() * a.adjoint();
        assert!(lhs.distance(&rhs) < 1e-14);
    }
}
