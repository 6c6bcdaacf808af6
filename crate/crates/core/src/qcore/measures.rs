use super::eig::{eigh_unchecked, psd_sqrt};
use super::state::{DensityMatrix, HermitianOperator};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Von Neumann entropy in nats, with `0 ln 0 = 0`.
pub fn von_neumann_entropy<S: Scalar>(rho: &DensityMatrix<S>) -> Result<S> {
    let policy = S::default_policy();
    let es = eigh_unchecked(rho.matrix(), &policy);
    let mut s = S::zero();
    for &lambda in es.eigenvalues() {
        if lambda < -policy.psd_tol {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:e} in entropy",
                lambda.to_f64_lossy()
            )));
        }
        if lambda > S::zero() {
            s -= lambda * lambda.ln();
        }
    }
    Ok(s.max(S::zero()))
}

/// Shannon entropy of a probability vector in nats.
pub fn shannon_entropy<S: Scalar>(probs: &[S]) -> S {
    probs.iter().filter(|&&p| p > S::zero()).map(|&p| -p * p.ln()).sum()
}

/// Uhlmann (root) fidelity `tr sqrt(sqrt(a) b sqrt(a))`, clamped to [0, 1].
pub fn fidelity<S: Scalar>(a: &DensityMatrix<S>, b: &DensityMatrix<S>) -> S {
    let policy = S::default_policy();
    let sa = psd_sqrt(a.matrix(), &policy);
    let inner = &(&sa * b.matrix()) * &sa;
    let f: S = eigh_unchecked(&inner.hermitian_part(), &policy)
        .eigenvalues()
        .iter()
        .map(|&l| l.max(S::zero()).sqrt())
        .sum();
    f.max(S::zero()).min(S::one())
}

/// Quantum relative entropy `D(ρ‖σ) = tr ρ (ln ρ − ln σ)` in nats.
///
/// Infinite when the support of `rho` is not contained in that of `sigma`.
pub fn relative_entropy<S: Scalar>(rho: &DensityMatrix<S>, sigma: &DensityMatrix<S>) -> Result<S> {
    let policy = S::default_policy();
    let s_rho = von_neumann_entropy(rho)?;
    let es = eigh_unchecked(sigma.matrix(), &policy);
    let mut cross = S::zero();
    for (lambda, v) in es.eigenvalues().iter().zip(es.eigenvectors()) {
        let weight = rho.population_of(v);
        if weight <= policy.psd_tol {
            continue;
        }
        if *lambda <= S::zero() {
            return Ok(S::infinity());
        }
        cross += weight * lambda.ln();
    }
    Ok(-s_rho - cross)
}

/// `tr(ρ·op)`, checked to be real.
pub fn expectation<S: Scalar>(op: &HermitianOperator<S>, rho: &DensityMatrix<S>) -> Result<S> {
    if op.dim() != rho.dim() {
        return Err(Error::Dimension {
            expected: op.dim(),
            found: rho.dim(),
        });
    }
    let tr = (rho.matrix() * op.matrix()).trace();
    let scale = op.matrix().frobenius_norm().max(S::one());
    if tr.im.abs() > S::default_policy().imag_tol * scale {
        return Err(Error::NumericConsistency {
            residue: tr.im.to_f64_lossy(),
        });
    }
    Ok(tr.re)
}
