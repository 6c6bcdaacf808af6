//! Estimators of `<H>` under the ansatz state `U ρ_θ U†`.
//!
//! * exact: density-matrix expectation, no sampling;
//! * shots: one measured circuit per Pauli term, outcomes drawn from the
//!   Born distribution;
//! * noisy: as shots, but the circuit is simulated as a density matrix with
//!   depolarizing noise after every gate and bit-flip readout error.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::ansatz::{
    self, basis_rotation, build_unitary, latent_probability, latent_state, on_qubit, BasisState, CircuitParams,
    GateArity, LatentParams, MeasurementBasis, DIM, PARAMS_PER_LAYER,
};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, pauli_decomposition, DimerModel, Pauli};
use crate::qcore::{CMatrix, DensityMatrix};
use crate::rng::substream;
use crate::scalar::Scalar;

pub const DEFAULT_SHOTS: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorMode {
    #[default]
    Exact,
    Shots,
    Noisy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotConfig {
    pub shots_per_term: u64,
    pub seed: u64,
}

impl Default for ShotConfig {
    fn default() -> Self {
        ShotConfig {
            shots_per_term: DEFAULT_SHOTS,
            seed: 0,
        }
    }
}

impl ShotConfig {
    pub fn new(shots_per_term: u64, seed: u64) -> Result<Self> {
        if shots_per_term == 0 {
            return Err(Error::Config("shots_per_term must be at least 1".into()));
        }
        Ok(ShotConfig { shots_per_term, seed })
    }
}

/// Depolarizing and readout error rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p_depol_1q: f64,
    pub p_depol_2q: f64,
    pub p_readout_flip: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            p_depol_1q: 2e-4,
            p_depol_2q: 7e-3,
            p_readout_flip: 1e-2,
        }
    }
}

impl NoiseModel {
    pub fn new(p_depol_1q: f64, p_depol_2q: f64, p_readout_flip: f64) -> Result<Self> {
        for (name, p) in [
            ("p_depol_1q", p_depol_1q),
            ("p_depol_2q", p_depol_2q),
            ("p_readout_flip", p_readout_flip),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(NoiseModel {
            p_depol_1q,
            p_depol_2q,
            p_readout_flip,
        })
    }

    pub fn noiseless() -> Self {
        NoiseModel {
            p_depol_1q: 0.0,
            p_depol_2q: 0.0,
            p_readout_flip: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationEstimate<S> {
    /// Kelvin.
    pub value: S,
    /// Kelvin; zero exactly when `mode` is exact.
    pub std_error: S,
    pub mode: EstimatorMode,
}

/// Qubits a depolarizing channel acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Locus {
    Qubit(usize),
    Both,
}

/// `ρ → (1−p)ρ + p·(ρ with the locus qubits replaced by maximally mixed)`.
pub fn apply_depolarizing<S: Scalar>(rho: &DensityMatrix<S>, p: S, locus: Locus) -> DensityMatrix<S> {
    if p == S::zero() {
        return rho.clone();
    }
    let keep = rho.matrix().scale(S::one() - p);
    let replaced = match locus {
        Locus::Both => CMatrix::identity(DIM).scale(rho.matrix().trace().re / S::lit(DIM as f64)),
        Locus::Qubit(q) => {
            // (1/4) Σ_P P ρ P on one qubit is the partial-trace replacement
            let mut acc = CMatrix::zeros(DIM);
            for pauli in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
                let op = on_qubit(&pauli.matrix::<S>(), q);
                acc = &acc + &rho.matrix().conjugate_by(&op);
            }
            acc.scale(S::lit(0.25))
        }
    };
    DensityMatrix::from_valid_unchecked(&keep + &replaced.scale(p))
}

/// `Σ_b p_θ(b) <b|U† H U|b>`.
pub fn exact_expectation<S: Scalar>(
    lp: &LatentParams<S>,
    cp: &CircuitParams<S>,
    m: &DimerModel<S>,
) -> ExpectationEstimate<S> {
    let u = build_unitary(cp);
    let h = build_hamiltonian(m);
    let mut value = S::zero();
    for b in BasisState::all() {
        let p = latent_probability(lp, b);
        let col: Vec<Complex<S>> = (0..DIM).map(|k| u[(k, b.index())]).collect();
        let hcol = h.matrix().apply(&col);
        let e: S = col.iter().zip(&hcol).map(|(a, x)| (a.conj() * x).re).sum();
        value += p * e;
    }
    ExpectationEstimate {
        value,
        std_error: S::zero(),
        mode: EstimatorMode::Exact,
    }
}

/// Density matrix after the ansatz circuit, with gate noise if given.
fn circuit_output<S: Scalar>(
    lp: &LatentParams<S>,
    cp: &CircuitParams<S>,
    noise: Option<&NoiseModel>,
) -> DensityMatrix<S> {
    let rho0 = latent_state(lp);
    match noise {
        None => rho0.evolve(&build_unitary(cp)),
        Some(nm) => {
            let p1 = S::lit(nm.p_depol_1q);
            let p2 = S::lit(nm.p_depol_2q);
            let mut rho = rho0;
            for layer in cp.angles().chunks(PARAMS_PER_LAYER) {
                for (gate, arity) in ansatz::layer_gates(layer) {
                    rho = rho.evolve(&gate);
                    rho = match arity {
                        GateArity::One(q) => apply_depolarizing(&rho, p1, Locus::Qubit(q)),
                        GateArity::Two => apply_depolarizing(&rho, p2, Locus::Both),
                    };
                }
            }
            rho
        }
    }
}

/// Outcome distribution on the computational basis after rotating into `mb`.
fn measured_distribution<S: Scalar>(
    rho: &DensityMatrix<S>,
    mb: &MeasurementBasis,
    noise: Option<&NoiseModel>,
) -> [f64; DIM] {
    let rotated = match noise {
        None => rho.evolve(&basis_rotation(mb)),
        Some(nm) => {
            let p1 = S::lit(nm.p_depol_1q);
            let mut r = rho.clone();
            for (q, axis) in mb.axes.iter().enumerate() {
                if matches!(axis, Pauli::X | Pauli::Y) {
                    let single = MeasurementBasis {
                        axes: if q == 0 { [*axis, Pauli::Z] } else { [Pauli::Z, *axis] },
                    };
                    r = r.evolve(&basis_rotation(&single));
                    r = apply_depolarizing(&r, p1, Locus::Qubit(q));
                }
            }
            r
        }
    };
    let mut probs = [0.0f64; DIM];
    for (k, p) in probs.iter_mut().enumerate() {
        *p = rotated.matrix()[(k, k)].re.to_f64_lossy().max(0.0);
    }
    if let Some(nm) = noise {
        probs = readout_confusion(&probs, nm.p_readout_flip);
    }
    let total: f64 = probs.iter().sum();
    probs.map(|p| p / total)
}

/// Independent per-bit flips with probability `f`.
fn readout_confusion(probs: &[f64; DIM], f: f64) -> [f64; DIM] {
    let mut out = [0.0; DIM];
    for (actual, &p) in probs.iter().enumerate() {
        for (read, o) in out.iter_mut().enumerate() {
            let flips = (actual ^ read).count_ones() as i32;
            *o += p * f.powi(flips) * (1.0 - f).powi(2 - flips);
        }
    }
    out
}

/// Multinomial counts via sequential binomial draws.
fn draw_counts<R: Rng + ?Sized>(probs: &[f64; DIM], shots: u64, rng: &mut R) -> [u64; DIM] {
    let mut counts = [0u64; DIM];
    let mut remaining = shots;
    let mut mass = 1.0f64;
    for k in 0..DIM {
        if remaining == 0 {
            break;
        }
        if k == DIM - 1 || mass <= 0.0 {
            counts[k] = remaining;
            break;
        }
        let q = (probs[k] / mass).clamp(0.0, 1.0);
        let c = Binomial::new(remaining, q)
            .expect("binomial parameters valid")
            .sample(rng);
        counts[k] = c;
        remaining -= c;
        mass -= probs[k];
    }
    counts
}

/// Shot-based estimate of `<H>`; deterministic in `(sc.seed, iteration)`.
///
/// Each Pauli term gets its own measured circuit and its own random
/// substream keyed by (seed, term index, iteration). The per-term standard
/// error uses the Laplace-smoothed outcome frequency, so it stays positive
/// even when every shot agrees.
pub fn shot_expectation<S: Scalar>(
    lp: &LatentParams<S>,
    cp: &CircuitParams<S>,
    m: &DimerModel<S>,
    sc: &ShotConfig,
    nm: Option<&NoiseModel>,
    iteration: u64,
) -> ExpectationEstimate<S> {
    let n = sc.shots_per_term.max(1);
    let rho = circuit_output(lp, cp, nm);
    let mut value = 0.0f64;
    let mut var = 0.0f64;
    for (idx, term) in pauli_decomposition(m).iter().enumerate() {
        let mb = MeasurementBasis { axes: term.axes };
        let probs = measured_distribution(&rho, &mb, nm);
        let mut rng = substream(sc.seed, idx as u64, iteration);
        let counts = draw_counts(&probs, n, &mut rng);
        let plus: u64 = counts
            .iter()
            .enumerate()
            .filter(|(k, _)| mb.outcome_sign(*k) > 0)
            .map(|(_, c)| *c)
            .sum();
        let nf = n as f64;
        let mean = (2.0 * plus as f64 - nf) / nf;
        let p_smooth = (plus as f64 + 1.0) / (nf + 2.0);
        let var_one = 4.0 * p_smooth * (1.0 - p_smooth);
        let coeff = term.coefficient.to_f64_lossy();
        value += coeff * mean;
        var += coeff * coeff * var_one / nf;
    }
    ExpectationEstimate {
        value: S::lit(value),
        std_error: S::lit(var.sqrt()),
        mode: if nm.is_some() {
            EstimatorMode::Noisy
        } else {
            EstimatorMode::Shots
        },
    }
}

/// Estimator selection for the VQT cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Exact,
    Shots(ShotConfig),
    Noisy(ShotConfig, NoiseModel),
}

impl Estimator {
    pub fn mode(&self) -> EstimatorMode {
        match self {
            Estimator::Exact => EstimatorMode::Exact,
            Estimator::Shots(_) => EstimatorMode::Shots,
            Estimator::Noisy(..) => EstimatorMode::Noisy,
        }
    }

    pub fn estimate<S: Scalar>(
        &self,
        lp: &LatentParams<S>,
        cp: &CircuitParams<S>,
        m: &DimerModel<S>,
        iteration: u64,
    ) -> ExpectationEstimate<S> {
        match self {
            Estimator::Exact => exact_expectation(lp, cp, m),
            Estimator::Shots(sc) => shot_expectation(lp, cp, m, sc, None, iteration),
            Estimator::Noisy(sc, nm) => shot_expectation(lp, cp, m, sc, Some(nm), iteration),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{expectation, StateVector};

    #[test]
    fn exact_on_maximally_mixed_is_zero() {
        let lp = LatentParams::new([0.0f64, 0.0]);
        let cp = CircuitParams::zeros(2).unwrap();
        let e = exact_expectation(&lp, &cp, &DimerModel::new(1.0));
        assert!(e.value.abs() < 1e-15);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.mode, EstimatorMode::Exact);
    }

    #[test]
    fn exact_on_saturated_ground_bit_is_quarter_j() {
        let lp = LatentParams::new([40.0f64, 40.0]);
        let cp = CircuitParams::zeros(2).unwrap();
        let e = exact_expectation(&lp, &cp, &DimerModel::new(3.0));
        assert!((e.value - 0.75).abs() < 1e-12);
    }

    #[test]
    fn exact_matches_trace_formula() {
        let lp = LatentParams::new([0.4f64, -1.3]);
        let phi: Vec<f64> = (0..16).map(|k| (k as f64 * 1.7).sin() * 3.0).collect();
        let cp = CircuitParams::new(2, phi).unwrap();
        let m = DimerModel::new(2.5);
        let rho = ansatz::mixed_state(&lp, &cp);
        let tr = expectation(&build_hamiltonian(&m), &rho).unwrap();
        assert!((exact_expectation(&lp, &cp, &m).value - tr).abs() < 1e-12);
    }

    #[test]
    fn depolarizing_reference_actions() {
        let rho = DensityMatrix::pure(&StateVector::<f64>::basis(4, 0));
        assert_eq!(apply_depolarizing(&rho, 0.0, Locus::Qubit(0)), rho);
        let full = apply_depolarizing(&rho, 1.0, Locus::Both);
        assert!(full.matrix().max_abs_diff(DensityMatrix::maximally_mixed(4).matrix()) < 1e-15);
        let one = apply_depolarizing(&rho, 0.1, Locus::Qubit(0));
        let expect = CMatrix::from_diagonal(&[0.95, 0.0, 0.05, 0.0]);
        assert!(one.matrix().max_abs_diff(&expect) < 1e-15);
        let both_single = apply_depolarizing(&apply_depolarizing(&rho, 1.0, Locus::Qubit(0)), 1.0, Locus::Qubit(1));
        assert!(
            both_single
                .matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(4).matrix())
                < 1e-15
        );
    }

    #[test]
    fn readout_confusion_preserves_mass() {
        let out = readout_confusion(&[0.7, 0.1, 0.2, 0.0], 0.05);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let uniform = readout_confusion(&[1.0, 0.0, 0.0, 0.0], 0.5);
        assert!(uniform.iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn fully_random_readout_kills_correlations() {
        let lp = LatentParams::new([40.0f64, 40.0]);
        let cp = CircuitParams::zeros(1).unwrap();
        let m = DimerModel::new(4.0);
        let nm = NoiseModel::new(0.0, 0.0, 0.5).unwrap();
        let sc = ShotConfig::new(200_000, 5).unwrap();
        let e = shot_expectation(&lp, &cp, &m, &sc, Some(&nm), 0);
        assert!(e.value.abs() < 5.0 * e.std_error, "{e:?}");
        assert_eq!(e.mode, EstimatorMode::Noisy);
    }

    #[test]
    fn shots_on_maximally_mixed_zz_near_zero() {
        let lp = LatentParams::new([0.0f64, 0.0]);
        let cp = CircuitParams::zeros(2).unwrap();
        let m = DimerModel::new(1.0);
        for shots in [10, 1000, 8192] {
            let e = shot_expectation(&lp, &cp, &m, &ShotConfig::new(shots, 1).unwrap(), None, 0);
            assert!(e.value.abs() <= 5.0 * e.std_error + 1e-12, "{shots}: {e:?}");
            assert!(e.std_error > 0.0);
        }
    }

    #[test]
    fn many_shots_converge_to_exact() {
        let lp = LatentParams::new([1.2f64, -0.4]);
        let phi: Vec<f64> = (0..16).map(|k| (k as f64 * 0.9).cos() * 2.0).collect();
        let cp = CircuitParams::new(2, phi).unwrap();
        let m = DimerModel::new(1.0);
        let exact = exact_expectation(&lp, &cp, &m).value;
        let e = shot_expectation(&lp, &cp, &m, &ShotConfig::new(1_000_000, 9).unwrap(), None, 3);
        assert!(
            (e.value - exact).abs() <= 5.0 * e.std_error,
            "{} vs {exact} ± {}",
            e.value,
            e.std_error
        );
        assert_eq!(e.mode, EstimatorMode::Shots);
    }

    #[test]
    fn shots_are_seed_deterministic() {
        let lp = LatentParams::new([0.2f64, 0.1]);
        let cp = CircuitParams::zeros(1).unwrap();
        let m = DimerModel::new(1.0);
        let sc = ShotConfig::new(512, 77).unwrap();
        let a = shot_expectation(&lp, &cp, &m, &sc, Some(&NoiseModel::default()), 11);
        let b = shot_expectation(&lp, &cp, &m, &sc, Some(&NoiseModel::default()), 11);
        assert_eq!(a, b);
        let c = shot_expectation(&lp, &cp, &m, &sc, Some(&NoiseModel::default()), 12);
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn noise_model_validation() {
        assert!(NoiseModel::new(-0.1, 0.0, 0.0).is_err());
        assert!(NoiseModel::new(0.0, 1.5, 0.0).is_err());
        assert!(ShotConfig::new(0, 0).is_err());
    }

    #[test]
    fn noiseless_noise_model_matches_shots_distribution() {
        let lp = LatentParams::new([0.7f64, -0.2]);
        let phi: Vec<f64> = (0..8).map(|k| k as f64 * 0.3).collect();
        let cp = CircuitParams::new(1, phi).unwrap();
        let rho_a = circuit_output(&lp, &cp, None);
        let rho_b = circuit_output(&lp, &cp, Some(&NoiseModel::noiseless()));
        assert!(rho_a.matrix().max_abs_diff(rho_b.matrix()) < 1e-14);
        let mb = MeasurementBasis {
            axes: [Pauli::Y, Pauli::Y],
        };
        let pa = measured_distribution(&rho_a, &mb, None);
        let pb = measured_distribution(&rho_b, &mb, Some(&NoiseModel::noiseless()));
        for (a, b) in pa.iter().zip(pb) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    proptest::proptest! {
        #[test]
        fn readout_confusion_is_stochastic(raw in proptest::collection::vec(0.0f64..1.0, 4), f in 0.0f64..1.0) {
            let total: f64 = raw.iter().sum::<f64>() + 1e-9;
            let probs = [raw[0] / total, raw[1] / total, raw[2] / total, raw[3] / total];
            let out = readout_confusion(&probs, f);
            proptest::prop_assert!((out.iter().sum::<f64>() - probs.iter().sum::<f64>()).abs() < 1e-12);
            proptest::prop_assert!(out.iter().all(|&p| p >= 0.0));
        }
    }
}
