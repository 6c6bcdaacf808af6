use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;

use crate::scalar::Scalar;

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix<S> {
    dim: usize,
    data: Vec<Complex<S>>,
}

impl<S: Scalar> CMatrix<S> {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![Complex::new(S::zero(), S::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::new(S::one(), S::zero());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<S>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        CMatrix { dim, data }
    }

    /// Builds from row-major complex entries; panics if `rows` is not square.
    pub fn from_rows(rows: &[Vec<Complex<S>>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix rows must be square");
        CMatrix {
            dim,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_real_rows(rows: &[Vec<S>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix rows must be square");
        CMatrix {
            dim,
            data: rows.iter().flatten().map(|&x| Complex::new(x, S::zero())).collect(),
        }
    }

    pub fn from_diagonal(diag: &[S]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, S::zero());
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex<S>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex<S> {
        (0..self.dim)
            .map(|i| self[(i, i)])
            .fold(Complex::new(S::zero(), S::zero()), |a, b| a + b)
    }

    pub fn scale(&self, s: S) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex<S>) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Kronecker product `self ⊗ other`; `self` acts on the more significant index.
    pub fn kron(&self, other: &Self) -> Self {
        let n = other.dim;
        Self::from_fn(self.dim * n, |i, j| self[(i / n, j / n)] * other[(i % n, j % n)])
    }

    /// `self · v`.
    pub fn apply(&self, v: &[Complex<S>]) -> Vec<Complex<S>> {
        assert_eq!(v.len(), self.dim, "vector length must match matrix dimension");
        (0..self.dim)
            .map(|i| {
                let row = &self.data[i * self.dim..(i + 1) * self.dim];
                row.iter()
                    .zip(v)
                    .fold(Complex::new(S::zero(), S::zero()), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        &(u * self) * &u.adjoint()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> S {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(S::zero(), S::max)
    }

    /// Largest |A_ij − conj(A_ji)|.
    pub fn hermitian_deviation(&self) -> S {
        let mut dev = S::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `(A + A†)/2`, with an exactly real diagonal.
    pub fn hermitian_part(&self) -> Self {
        let half = S::lit(0.5);
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    pub fn frobenius_norm(&self) -> S {
        self.data.iter().map(|z| z.norm_sqr()).sum::<S>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Real parts, row by row.
    pub fn real_rows(&self) -> Vec<Vec<S>> {
        self.data
            .chunks(self.dim)
            .map(|r| r.iter().map(|z| z.re).collect())
            .collect()
    }

    pub fn imag_rows(&self) -> Vec<Vec<S>> {
        self.data
            .chunks(self.dim)
            .map(|r| r.iter().map(|z| z.im).collect())
            .collect()
    }
}

impl<S> Index<(usize, usize)> for CMatrix<S> {
    type Output = Complex<S>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<S> {
        &self.data[i * self.dim + j]
    }
}

impl<S> IndexMut<(usize, usize)> for CMatrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<S> {
        &mut self.data[i * self.dim + j]
    }
}

impl<'a, S: Scalar> Mul<&'a CMatrix<S>> for &'a CMatrix<S> {
    type Output = CMatrix<S>;

    fn mul(self, rhs: &'a CMatrix<S>) -> CMatrix<S> {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions must agree");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == S::zero() && a.im == S::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl<'a, S: Scalar> Add<&'a CMatrix<S>> for &'a CMatrix<S> {
    type Output = CMatrix<S>;

    fn add(self, rhs: &'a CMatrix<S>) -> CMatrix<S> {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions must agree");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a, S: Scalar> Sub<&'a CMatrix<S>> for &'a CMatrix<S> {
    type Output = CMatrix<S>;

    fn sub(self, rhs: &'a CMatrix<S>) -> CMatrix<S> {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions must agree");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<S: fmt::Debug> fmt::Debug for CMatrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for row in self.data.chunks(self.dim.max(1)) {
            writeln!(f, "  {:?}", row)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn kron_orders_left_factor_as_high_bit() {
        let x = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let id = CMatrix::<f64>::identity(2);
        let xi = x.kron(&id);
        // X on the left qubit swaps |00> and |10>
        assert_eq!(xi[(2, 0)], c(1.0, 0.0));
        assert_eq!(xi[(1, 3)], c(1.0, 0.0));
        assert_eq!(xi[(1, 0)], c(0.0, 0.0));
    }

    #[test]
    fn adjoint_and_trace() {
        let m = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 2.0)], vec![c(3.0, -1.0), c(4.0, 0.5)]]);
        let a = m.adjoint();
        assert_eq!(a[(0, 1)], c(3.0, 1.0));
        assert_eq!(a[(1, 0)], c(0.0, -2.0));
        assert_eq!(m.trace(), c(5.0, 0.5));
        assert!(m.hermitian_deviation() > 1.0);
        assert!(m.hermitian_part().hermitian_deviation() == 0.0);
    }

    #[test]
    fn product_with_identity() {
        let m = CMatrix::from_fn(3, |i, j| c(i as f64, j as f64));
        let id = CMatrix::identity(3);
        assert_eq!(&m * &id, m);
        assert_eq!(&id * &m, m);
    }
}
