//! Heisenberg spin-½ dimer `H = J S_A·S_B`: Hamiltonian, Pauli
//! decomposition, exact Gibbs state and closed-form thermodynamics.
//!
//! Reduced units throughout: k_B = 1, energies and temperatures in Kelvin,
//! entropy in nats, specific heat in units of k_B per dimer. With J > 0 the
//! ground state is the singlet at −3J/4 and the triplet sits at +J/4.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{CMatrix, DensityMatrix, HermitianOperator, StateVector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimerModel<S> {
    /// Exchange coupling J/k_B in Kelvin.
    pub j_over_kb: S,
    /// Landé g-factor.
    pub g_factor: S,
}

impl<S: Scalar> DimerModel<S> {
    pub fn new(j_over_kb: S) -> Self {
        DimerModel {
            j_over_kb,
            g_factor: S::lit(2.0),
        }
    }

    pub fn with_g_factor(mut self, g: S) -> Result<Self> {
        if !(g > S::zero()) || !g.is_finite() {
            return Err(Error::Domain(format!("g-factor must be positive, got {g}")));
        }
        self.g_factor = g;
        Ok(self)
    }
}

/// Single-qubit Pauli operator label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix<S: Scalar>(self) -> CMatrix<S> {
        let o = S::zero();
        let l = S::one();
        let c = |re: S, im: S| Complex::new(re, im);
        let rows = match self {
            Pauli::I => [[c(l, o), c(o, o)], [c(o, o), c(l, o)]],
            Pauli::X => [[c(o, o), c(l, o)], [c(l, o), c(o, o)]],
            Pauli::Y => [[c(o, o), c(o, -l)], [c(o, l), c(o, o)]],
            Pauli::Z => [[c(l, o), c(o, o)], [c(o, o), c(-l, o)]],
        };
        CMatrix::from_rows(&[rows[0].to_vec(), rows[1].to_vec()])
    }
}

/// `coefficient · (axes[0] ⊗ axes[1])`, coefficient in Kelvin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm<S> {
    pub coefficient: S,
    pub axes: [Pauli; 2],
}

impl<S: Scalar> PauliTerm<S> {
    pub fn matrix(&self) -> CMatrix<S> {
        self.axes[0]
            .matrix::<S>()
            .kron(&self.axes[1].matrix())
            .scale(self.coefficient)
    }
}

/// CODATA 2018 exact/recommended values in SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// mol⁻¹
    pub n_avogadro: f64,
    /// J/T
    pub mu_bohr: f64,
    /// J/K
    pub k_boltzmann: f64,
    /// N/A²
    pub mu_0: f64,
}

pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    n_avogadro: 6.022_140_76e23,
    mu_bohr: 9.274_010_078_3e-24,
    k_boltzmann: 1.380_649e-23,
    mu_0: 1.256_637_062_12e-6,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA_2018
    }
}

/// Unit system for molar susceptibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    /// m³/mol
    Si,
    /// emu/mol (cm³/mol)
    #[default]
    Cgs,
}

impl PhysicalConstants {
    /// `2 N_A g² μ_B² / k_B` in (molar susceptibility units)·K.
    pub fn molar_prefactor(&self, g: f64, units: UnitSystem) -> f64 {
        let base = 2.0 * self.n_avogadro * (g * self.mu_bohr).powi(2) / self.k_boltzmann;
        match units {
            UnitSystem::Si => self.mu_0 * base,
            // μ_B: 1 J/T = 10³ erg/G; k_B: 1 J/K = 10⁷ erg/K
            UnitSystem::Cgs => base * 0.1,
        }
    }
}

/// Dimensionless `k_B T χ / (2 N_A g² μ_B²)`, equal to the population of
/// each triplet state.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ReducedSusceptibility<S>(S);

impl<S: Scalar> ReducedSusceptibility<S> {
    pub fn value(self) -> S {
        self.0
    }
}

fn check_temperature<S: Scalar>(t: S) -> Result<()> {
    if !(t > S::zero()) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "temperature must be positive and finite, got {t} K"
        )));
    }
    Ok(())
}

/// `(J/4)·[[1,0,0,0],[0,−1,2,0],[0,2,−1,0],[0,0,0,1]]` on `{|00>,|01>,|10>,|11>}`.
pub fn build_hamiltonian<S: Scalar>(m: &DimerModel<S>) -> HermitianOperator<S> {
    let q = m.j_over_kb / S::lit(4.0);
    let o = S::zero();
    let two = S::lit(2.0);
    let rows = vec![
        vec![q, o, o, o],
        vec![o, -q, two * q, o],
        vec![o, two * q, -q, o],
        vec![o, o, o, q],
    ];
    HermitianOperator::from_hermitian_unchecked(CMatrix::from_real_rows(&rows))
}

/// `S_A·S_B = ¼(XX + YY + ZZ)`, so `H = (J/4)(XX + YY + ZZ)`.
pub fn pauli_decomposition<S: Scalar>(m: &DimerModel<S>) -> Vec<PauliTerm<S>> {
    let c = m.j_over_kb / S::lit(4.0);
    [Pauli::X, Pauli::Y, Pauli::Z]
        .into_iter()
        .map(|p| PauliTerm {
            coefficient: c,
            axes: [p, p],
        })
        .collect()
}

/// Singlet `(|01> − |10>)/√2`.
pub fn singlet_state<S: Scalar>() -> StateVector<S> {
    let h = S::FRAC_1_SQRT_2();
    let z = Complex::new(S::zero(), S::zero());
    StateVector::new(vec![z, Complex::new(h, S::zero()), Complex::new(-h, S::zero()), z])
        .expect("singlet is normalized")
}

/// Triplet states `|00>`, `(|01> + |10>)/√2`, `|11>`.
pub fn triplet_states<S: Scalar>() -> [StateVector<S>; 3] {
    let h = S::FRAC_1_SQRT_2();
    let z = Complex::new(S::zero(), S::zero());
    [
        StateVector::basis(4, 0),
        StateVector::new(vec![z, Complex::new(h, S::zero()), Complex::new(h, S::zero()), z])
            .expect("triplet is normalized"),
        StateVector::basis(4, 3),
    ]
}

/// `Z = e^{3J/4T} + 3 e^{−J/4T}`. Overflows to infinity for J/T ≳ 900;
/// use [`log_partition_function`] there.
pub fn partition_function<S: Scalar>(m: &DimerModel<S>, t: S) -> Result<S> {
    check_temperature(t)?;
    let x = m.j_over_kb / t;
    let three = S::lit(3.0);
    Ok((three * x / S::lit(4.0)).exp() + three * (-x / S::lit(4.0)).exp())
}

/// `ln Z`, evaluated without overflow.
pub fn log_partition_function<S: Scalar>(m: &DimerModel<S>, t: S) -> Result<S> {
    check_temperature(t)?;
    let x = m.j_over_kb / t;
    let a = S::lit(0.75) * x;
    let b = S::lit(3.0).ln() - S::lit(0.25) * x;
    let hi = a.max(b);
    Ok(hi + ((a - hi).exp() + (b - hi).exp()).ln())
}

/// Population of each triplet state, `1 / (3 + e^{J/T})`.
fn triplet_population<S: Scalar>(x: S) -> S {
    S::one() / (S::lit(3.0) + x.exp())
}

/// Singlet population `1 − 3ϱ₁ = 1 / (1 + 3 e^{−J/T})`.
fn singlet_population<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + S::lit(3.0) * (-x).exp())
}

/// Exact Gibbs state `e^{−H/T}/Z`, assembled from its X-shaped closed form.
pub fn gibbs_state<S: Scalar>(m: &DimerModel<S>, t: S) -> Result<DensityMatrix<S>> {
    check_temperature(t)?;
    let x = m.j_over_kb / t;
    let trip = triplet_population(x);
    let sing = singlet_population(x);
    let half = S::lit(0.5);
    let o = S::zero();
    let mid = (trip + sing) * half;
    let off = (trip - sing) * half;
    let rows = vec![
        vec![trip, o, o, o],
        vec![o, mid, off, o],
        vec![o, off, mid, o],
        vec![o, o, o, trip],
    ];
    Ok(DensityMatrix::from_valid_unchecked(CMatrix::from_real_rows(&rows)))
}

/// Bleaney-Bowers reduced susceptibility `1 / (3 + e^{J/T})`.
pub fn chi_reduced<S: Scalar>(m: &DimerModel<S>, t: S) -> Result<ReducedSusceptibility<S>> {
    check_temperature(t)?;
    Ok(ReducedSusceptibility(triplet_population(m.j_over_kb / t)))
}

/// Molar susceptibility `χ = (2 N_A g² μ_B² / k_B T) · χ̃`.
pub fn chi_molar<S: Scalar>(m: &DimerModel<S>, t: S, c: &PhysicalConstants, units: UnitSystem) -> Result<S> {
    let reduced = chi_reduced(m, t)?.value();
    let pref = S::lit(c.molar_prefactor(m.g_factor.to_f64_lossy(), units));
    Ok(pref / t * reduced)
}

/// Inverts [`chi_molar`]: `χ̃ = χ T k_B / (2 N_A g² μ_B²)`.
pub fn reduce_chi_molar<S: Scalar>(chi: S, t: S, g: S, c: &PhysicalConstants, units: UnitSystem) -> S {
    chi * t / S::lit(c.molar_prefactor(g.to_f64_lossy(), units))
}

/// Magnetic entropy `−3ϱ₁ ln ϱ₁ − ϱ₄ ln ϱ₄` in nats.
pub fn magnetic_entropy<S: Scalar>(m: &DimerModel<S>, t: S) -> Result<S> {
    check_temperature(t)?;
    let x = m.j_over_kb / t;
    let xlnx = |p: S| if p > S::zero() { p * p.ln() } else { S::zero() };
    let trip = triplet_population(x);
    let sing = singlet_population(x);
    Ok(-(S::lit(3.0) * xlnx(trip) + xlnx(sing)))
}

/// Internal energy per dimer `tr(Hρ) = 3J(χ̃ − ¼)`, in Kelvin.
pub fn internal_energy<S: Scalar>(m: &DimerModel<S>, t: S) -> Result<S> {
    check_temperature(t)?;
    let j = m.j_over_kb;
    let x = j / t;
    // triplet energy J/4 (×3 states), singlet −3J/4
    Ok(S::lit(0.75) * j * (triplet_population(x) - singlet_population(x)))
}

/// Specific heat per dimer in units of k_B, `3 (J/T)² χ̃ (1 − 3χ̃)`.
pub fn specific_heat<S: Scalar>(m: &DimerModel<S>, t: S) -> Result<S> {
    check_temperature(t)?;
    let x = m.j_over_kb / t;
    if x == S::zero() {
        return Ok(S::zero());
    }
    Ok(S::lit(3.0) * x * x * triplet_population(x) * singlet_population(x))
}
