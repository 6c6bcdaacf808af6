use num_complex::Complex;

use super::eig::eigh_unchecked;
use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::{NumericPolicy, Scalar};

/// Normalized pure state on the computational basis, qubit 0 as the most
/// significant bit (`|q0 q1>`, index `2*q0 + q1`).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<S> {
    amplitudes: Vec<Complex<S>>,
}

impl<S: Scalar> StateVector<S> {
    pub fn new(amplitudes: Vec<Complex<S>>) -> Result<Self> {
        Self::new_with(amplitudes, &S::default_policy())
    }

    pub fn new_with(amplitudes: Vec<Complex<S>>, policy: &NumericPolicy<S>) -> Result<Self> {
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm: S = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - S::one()).abs() > policy.norm_tol {
            return Err(Error::InvalidState(format!(
                "state norm {} differs from 1",
                norm.to_f64_lossy()
            )));
        }
        Ok(StateVector { amplitudes })
    }

    /// Rescales to unit norm; fails only for the zero vector.
    pub fn normalized(amplitudes: Vec<Complex<S>>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<S>().sqrt();
        if !(norm > S::zero()) || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize zero or non-finite vector".into()));
        }
        Ok(StateVector {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut amplitudes = vec![Complex::new(S::zero(), S::zero()); dim];
        amplitudes[index] = Complex::new(S::one(), S::zero());
        StateVector { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex<S>] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> S {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex<S> {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(Complex::new(S::zero(), S::zero()), |acc, (a, b)| acc + a.conj() * b)
    }

    /// `|self><self|`.
    pub fn projector(&self) -> CMatrix<S> {
        let a = &self.amplitudes;
        CMatrix::from_fn(a.len(), |i, j| a[i] * a[j].conj())
    }

    /// Applies a unitary; renormalizes to absorb rounding.
    pub fn evolve(&self, unitary: &CMatrix<S>) -> Self {
        let out = unitary.apply(&self.amplitudes);
        let norm = out.iter().map(|z| z.norm_sqr()).sum::<S>().sqrt();
        StateVector {
            amplitudes: out.into_iter().map(|z| z / norm).collect(),
        }
    }

    /// Born-rule probabilities on the computational basis.
    pub fn probabilities(&self) -> Vec<S> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Hermitian operator, e.g. a Hamiltonian in Kelvin (k_B = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator<S> {
    matrix: CMatrix<S>,
}

impl<S: Scalar> HermitianOperator<S> {
    pub fn new(matrix: CMatrix<S>) -> Result<Self> {
        Self::new_with(matrix, &S::default_policy())
    }

    pub fn new_with(matrix: CMatrix<S>, policy: &NumericPolicy<S>) -> Result<Self> {
        let dev = matrix.hermitian_deviation();
        if !(dev <= policy.hermitian_tol) {
            return Err(Error::NotHermitian {
                max_deviation: dev.to_f64_lossy(),
            });
        }
        Ok(HermitianOperator {
            matrix: matrix.hermitian_part(),
        })
    }

    /// Hermitizes without checking; callers guarantee the input is Hermitian
    /// up to rounding.
    pub(crate) fn from_hermitian_unchecked(matrix: CMatrix<S>) -> Self {
        HermitianOperator {
            matrix: matrix.hermitian_part(),
        }
    }

    pub fn matrix(&self) -> &CMatrix<S> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<S> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<S> {
    matrix: CMatrix<S>,
}

impl<S: Scalar> DensityMatrix<S> {
    pub fn new(matrix: CMatrix<S>) -> Result<Self> {
        Self::new_with(matrix, &S::default_policy())
    }

    pub fn new_with(matrix: CMatrix<S>, policy: &NumericPolicy<S>) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::InvalidState("non-finite density matrix entry".into()));
        }
        let dev = matrix.hermitian_deviation();
        if !(dev <= policy.hermitian_tol) {
            return Err(Error::NotHermitian {
                max_deviation: dev.to_f64_lossy(),
            });
        }
        let tr = matrix.trace();
        if (tr.re - S::one()).abs() > policy.trace_tol || tr.im.abs() > policy.trace_tol {
            return Err(Error::InvalidState(format!(
                "trace {}{:+}i differs from 1",
                tr.re.to_f64_lossy(),
                tr.im.to_f64_lossy()
            )));
        }
        let matrix = matrix.hermitian_part();
        let min_eig = eigh_unchecked(&matrix, policy)
            .eigenvalues()
            .iter()
            .copied()
            .fold(S::infinity(), S::min);
        if min_eig < -policy.psd_tol {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:e}",
                min_eig.to_f64_lossy()
            )));
        }
        Ok(DensityMatrix { matrix })
    }

    /// For matrices that are valid by construction (convex mixtures of
    /// projectors, CPTP images); only Hermitizes.
    pub(crate) fn from_valid_unchecked(matrix: CMatrix<S>) -> Self {
        DensityMatrix {
            matrix: matrix.hermitian_part(),
        }
    }

    pub fn pure(state: &StateVector<S>) -> Self {
        DensityMatrix {
            matrix: state.projector().hermitian_part(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            matrix: CMatrix::identity(dim).scale(S::one() / S::from_usize(dim).unwrap()),
        }
    }

    /// Diagonal state with the given probabilities.
    pub fn from_probabilities(probs: &[S]) -> Result<Self> {
        if probs.iter().any(|&p| !(p >= S::zero())) {
            return Err(Error::InvalidState("negative or NaN probability".into()));
        }
        let total: S = probs.iter().copied().sum();
        if (total - S::one()).abs() > S::default_policy().trace_tol {
            return Err(Error::InvalidState("probabilities do not sum to 1".into()));
        }
        Ok(DensityMatrix {
            matrix: CMatrix::from_diagonal(probs),
        })
    }

    /// `Σ_k w_k |ψ_k><ψ_k|` for non-negative weights summing to one.
    pub fn mixture<'a>(terms: impl IntoIterator<Item = (S, &'a StateVector<S>)>) -> Result<Self>
    where
        S: 'a,
    {
        let mut acc: Option<CMatrix<S>> = None;
        let mut total = S::zero();
        for (w, psi) in terms {
            if !(w >= S::zero()) {
                return Err(Error::InvalidState("negative mixture weight".into()));
            }
            total += w;
            let p = psi.projector().scale(w);
            acc = Some(match acc {
                None => p,
                Some(a) => &a + &p,
            });
        }
        let matrix = acc.ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        if (total - S::one()).abs() > S::default_policy().trace_tol {
            return Err(Error::InvalidState("mixture weights do not sum to 1".into()));
        }
        Ok(DensityMatrix {
            matrix: matrix.hermitian_part(),
        })
    }

    pub fn matrix(&self) -> &CMatrix<S> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `U ρ U†`.
    pub fn evolve(&self, unitary: &CMatrix<S>) -> Self {
        DensityMatrix::from_valid_unchecked(self.matrix.conjugate_by(unitary))
    }

    /// Real diagonal (computational-basis populations).
    pub fn populations(&self) -> Vec<S> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// `<ψ|ρ|ψ>`.
    pub fn population_of(&self, psi: &StateVector<S>) -> S {
        let v = self.matrix.apply(psi.amplitudes());
        psi.amplitudes()
            .iter()
            .zip(&v)
            .fold(Complex::new(S::zero(), S::zero()), |acc, (a, b)| acc + a.conj() * b)
            .re
    }
}
