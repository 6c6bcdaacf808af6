//! Hermitian eigendecomposition by cyclic Jacobi rotations, and matrix
//! functions built on it.

use num_complex::Complex;

use super::matrix::CMatrix;
use super::state::{HermitianOperator, StateVector};
use crate::error::{Error, Result};
use crate::scalar::{NumericPolicy, Scalar};

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenSystem<S> {
    eigenvalues: Vec<S>,
    eigenvectors: Vec<StateVector<S>>,
}

impl<S: Scalar> EigenSystem<S> {
    pub fn eigenvalues(&self) -> &[S] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[StateVector<S>] {
        &self.eigenvectors
    }

    /// `Σ f(λ_i) |v_i><v_i|`.
    pub fn map_spectrum(&self, mut f: impl FnMut(S) -> S) -> CMatrix<S> {
        let n = self.eigenvalues.len();
        let mut out = CMatrix::zeros(n);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let w = f(*lambda);
            let a = v.amplitudes();
            for i in 0..n {
                let ai = a[i] * w;
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + ai * a[j].conj();
                }
            }
        }
        out
    }

    /// `Σ λ_i |v_i><v_i|`.
    pub fn reconstruct(&self) -> CMatrix<S> {
        self.map_spectrum(|l| l)
    }
}

/// Decomposes a Hermitian operator.
pub fn hermitian_eig<S: Scalar>(op: &HermitianOperator<S>) -> EigenSystem<S> {
    eigh_unchecked(op.matrix(), &S::default_policy())
}

/// Decomposes an arbitrary matrix after checking it is Hermitian.
pub fn eigh<S: Scalar>(m: &CMatrix<S>, policy: &NumericPolicy<S>) -> Result<EigenSystem<S>> {
    let dev = m.hermitian_deviation();
    if !(dev <= policy.hermitian_tol) {
        return Err(Error::NotHermitian {
            max_deviation: dev.to_f64_lossy(),
        });
    }
    Ok(eigh_unchecked(m, policy))
}

/// Cyclic Jacobi on the Hermitian part of `m`.
///
/// Each rotation first removes the phase of the pivot `a_pq`, then applies
/// the real symmetric Jacobi rotation that zeroes it.
pub(crate) fn eigh_unchecked<S: Scalar>(m: &CMatrix<S>, policy: &NumericPolicy<S>) -> EigenSystem<S> {
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = CMatrix::<S>::identity(n);
    let zero = Complex::new(S::zero(), S::zero());
    let scale = a.frobenius_norm().max(S::min_positive_value());
    let one = S::one();
    let two = S::lit(2.0);

    for _sweep in 0..policy.max_jacobi_sweeps {
        let mut off = S::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= policy.eig_tol * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                let g_abs = g.norm();
                if g_abs <= S::min_positive_value() {
                    continue;
                }
                let phase = g / g_abs;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (two * g_abs);
                let t = if theta >= S::zero() {
                    one / (theta + (theta * theta + one).sqrt())
                } else {
                    -one / (-theta + (theta * theta + one).sqrt())
                };
                let c = one / (t * t + one).sqrt();
                let s = t * c;
                // W = diag(1, conj(phase)) · [[c, s], [-s, c]]
                let pc = phase.conj();
                let w_pp = Complex::new(c, S::zero());
                let w_pq = Complex::new(s, S::zero());
                let w_qp = pc * (-s);
                let w_qq = pc * c;

                // A ← A W (columns p, q)
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * w_pp + akq * w_qp;
                    a[(k, q)] = akp * w_pq + akq * w_qq;
                }
                // A ← W† A (rows p, q)
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = w_pp.conj() * apk + w_qp.conj() * aqk;
                    a[(q, k)] = w_pq.conj() * apk + w_qq.conj() * aqk;
                }
                a[(p, q)] = zero;
                a[(q, p)] = zero;
                a[(p, p)] = Complex::new(a[(p, p)].re, S::zero());
                a[(q, q)] = Complex::new(a[(q, q)].re, S::zero());
                // V ← V W
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * w_pp + vkq * w_qp;
                    v[(k, q)] = vkp * w_pq + vkq * w_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .re
            .partial_cmp(&a[(j, j)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = order
        .iter()
        .map(|&i| {
            let col: Vec<Complex<S>> = (0..n).map(|k| v[(k, i)]).collect();
            StateVector::normalized(col).expect("Jacobi columns are unit vectors")
        })
        .collect();
    EigenSystem {
        eigenvalues,
        eigenvectors,
    }
}

/// `exp(scale · op)`.
pub fn matrix_exp_hermitian<S: Scalar>(op: &HermitianOperator<S>, scale: S) -> HermitianOperator<S> {
    let es = hermitian_eig(op);
    HermitianOperator::from_hermitian_unchecked(es.map_spectrum(|l| (scale * l).exp()))
}

/// Principal square root of a positive semidefinite matrix; slightly
/// negative eigenvalues from rounding are clamped to zero.
pub(crate) fn psd_sqrt<S: Scalar>(m: &CMatrix<S>, policy: &NumericPolicy<S>) -> CMatrix<S> {
    eigh_unchecked(m, policy).map_spectrum(|l| l.max(S::zero()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spectrum() {
        let op = HermitianOperator::new(CMatrix::<f64>::identity(4)).unwrap();
        let es = hermitian_eig(&op);
        assert_eq!(es.eigenvalues(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_is_already_solved() {
        let op = HermitianOperator::new(CMatrix::<f64>::from_diagonal(&[3.0, 1.0, 4.0, 2.0])).unwrap();
        let es = hermitian_eig(&op);
        assert_eq!(es.eigenvalues(), &[1.0, 2.0, 3.0, 4.0]);
        for (k, idx) in [1usize, 3, 0, 2].iter().enumerate() {
            let amp = es.eigenvectors()[k].amplitudes()[*idx];
            assert!((amp.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn complex_two_level() {
        // [[0, -i], [i, 0]] = σ_y has eigenvalues ±1
        let m = CMatrix::from_rows(&[
            vec![Complex::new(0.0, 0.0), Complex::new(0.0, -1.0)],
            vec![Complex::new(0.0, 1.0), Complex::new(0.0, 0.0)],
        ]);
        let es = eigh(&m, &f64::default_policy()).unwrap();
        assert!((es.eigenvalues()[0] + 1.0).abs() < 1e-14);
        assert!((es.eigenvalues()[1] - 1.0).abs() < 1e-14);
        assert!(es.reconstruct().max_abs_diff(&m) < 1e-14);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let m = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(eigh(&m, &f64::default_policy()).is_err());
    }

    #[test]
    fn exp_of_zero_and_diagonal() {
        let z = HermitianOperator::new(CMatrix::<f64>::zeros(4)).unwrap();
        assert!(
            matrix_exp_hermitian(&z, 1.0)
                .matrix()
                .max_abs_diff(&CMatrix::identity(4))
                < 1e-15
        );
        let beta = 0.7;
        let e = 2.5;
        let d = HermitianOperator::new(CMatrix::<f64>::from_diagonal(&[0.0, e])).unwrap();
        let ex = matrix_exp_hermitian(&d, -beta);
        assert!((ex.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((ex.matrix()[(1, 1)].re - (-beta * e).exp()).abs() < 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let m = CMatrix::<f32>::from_real_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let es = eigh(&m, &f32::default_policy()).unwrap();
        assert!((es.eigenvalues()[0] - 1.0).abs() < 1e-6);
        assert!((es.eigenvalues()[1] - 3.0).abs() < 1e-6);
    }
}
