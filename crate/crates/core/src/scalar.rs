//! Floating-point scalar abstraction shared by the numeric core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the linear algebra, physics and optimizer are written against.
///
/// Implemented for `f32` and `f64`. Each type carries its own default
/// [`NumericPolicy`], since the tolerances that make sense for double
/// precision are unreachable in single precision.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Widens to `f64` for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn default_policy() -> NumericPolicy<Self>;
}

impl Scalar for f64 {
    fn default_policy() -> NumericPolicy<Self> {
        NumericPolicy {
            hermitian_tol: 1e-12,
            trace_tol: 1e-12,
            psd_tol: 1e-10,
            norm_tol: 1e-12,
            imag_tol: 1e-10,
            eig_tol: 1e-14,
            max_jacobi_sweeps: 64,
        }
    }
}

impl Scalar for f32 {
    fn default_policy() -> NumericPolicy<Self> {
        NumericPolicy {
            hermitian_tol: 1e-5,
            trace_tol: 1e-5,
            psd_tol: 1e-5,
            norm_tol: 1e-5,
            imag_tol: 1e-4,
            eig_tol: 1e-7,
            max_jacobi_sweeps: 64,
        }
    }
}

/// Every tolerance the numeric core checks against, in one record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy<S> {
    /// Max |A_ij - conj(A_ji)| accepted as Hermitian.
    pub hermitian_tol: S,
    /// Max |tr(rho) - 1| accepted for a density matrix.
    pub trace_tol: S,
    /// Most negative eigenvalue accepted for a density matrix.
    pub psd_tol: S,
    /// Max |<psi|psi> - 1| accepted for a state vector.
    pub norm_tol: S,
    /// Max imaginary residue discarded from a real-valued trace.
    pub imag_tol: S,
    /// Relative off-diagonal norm at which Jacobi iteration stops.
    pub eig_tol: S,
    pub max_jacobi_sweeps: usize,
}

impl<S: Scalar> Default for NumericPolicy<S> {
    fn default() -> Self {
        S::default_policy()
    }
}
