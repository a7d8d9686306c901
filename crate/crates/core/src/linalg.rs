//! Small dense complex matrices.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// A 2×2 complex matrix, indexed `[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[Complex; 2]; 2]);

impl Mat2 {
    pub fn new(a11: Complex, a12: Complex, a21: Complex, a22: Complex) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub fn from_real(a: [[f64; 2]; 2]) -> Self {
        Mat2([
            [Complex::new(a[0][0], 0.0), Complex::new(a[0][1], 0.0)],
            [Complex::new(a[1][0], 0.0), Complex::new(a[1][1], 0.0)],
        ])
    }

    pub fn identity() -> Self {
        Self::from_real([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn det(&self) -> Complex {
        det2(self)
    }

    /// The determinant-preserving entry swap `[[a22, a12], [a21, a11]]`.
    pub fn f2(&self) -> Mat2 {
        f2_map(self)
    }

    pub fn off_diagonal_max(&self) -> f64 {
        self.0[0][1].norm().max(self.0[1][0].norm())
    }
}

impl Index<(usize, usize)> for Mat2 {
    type Output = Complex;
    fn index(&self, (r, c): (usize, usize)) -> &Complex {
        &self.0[r][c]
    }
}

impl IndexMut<(usize, usize)> for Mat2 {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex {
        &mut self.0[r][c]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let mut out = Mat2::default();
        for r in 0..2 {
            for c in 0..2 {
                out.0[r][c] = self.0[r][0] * rhs.0[0][c] + self.0[r][1] * rhs.0[1][c];
            }
        }
        out
    }
}

pub fn det2(m: &Mat2) -> Complex {
    m.0[0][0] * m.0[1][1] - m.0[0][1] * m.0[1][0]
}

/// `F₂(A) = [[a22, a12], [a21, a11]]`, i.e. `F₂(A)[r][c] = A[1-c][1-r]`.
pub fn f2_map(m: &Mat2) -> Mat2 {
    let a = &m.0;
    Mat2([[a[1][1], a[0][1]], [a[1][0], a[0][0]]])
}

/// Row-major dense complex matrix of arbitrary shape.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(0.0, 0.0); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries for {rows}x{cols}", rows * cols),
                actual: format!("{} entries", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[Complex] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [Complex] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> Complex {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex) {
        self.data[r * self.cols + c] = v;
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("inner dimension {}", self.cols),
                actual: format!("{}", rhs.rows),
            });
        }
        Ok(CMatrix::from_fn(self.rows, rhs.cols, |r, c| (0..self.cols).map(|k| self.get(r, k) * rhs.get(k, c)).sum()))
    }

    pub fn add(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.dims() != rhs.dims() {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", self.dims()),
                actual: format!("{:?}", rhs.dims()),
            });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Ok(CMatrix { rows: self.rows, cols: self.cols, data })
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_mat2(&self) -> Result<Mat2> {
        if self.dims() != (2, 2) {
            return Err(Error::DimensionMismatch {
                expected: "2x2".into(),
                actual: format!("{}x{}", self.rows, self.cols),
            });
        }
        Ok(Mat2([[self.data[0], self.data[1]], [self.data[2], self.data[3]]]))
    }
}

impl From<Mat2> for CMatrix {
    fn from(m: Mat2) -> Self {
        CMatrix { rows: 2, cols: 2, data: vec![m.0[0][0], m.0[0][1], m.0[1][0], m.0[1][1]] }
    }
}
