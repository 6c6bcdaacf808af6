//! Quantum-probabilistic ansatz: a factored Bernoulli distribution over
//! computational basis states followed by a layered two-qubit circuit.
//!
//! Circuit layer layout (8 angles, consumed in this order):
//! `RX, RY, RZ` on qubit 0, `RX, RY, RZ` on qubit 1, `CRX(0→1)`, `CRX(1→0)`.

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::Pauli;
use crate::qcore::{CMatrix, DensityMatrix, StateVector};
use crate::scalar::Scalar;

pub const NUM_QUBITS: usize = 2;
pub const DIM: usize = 4;
pub const PARAMS_PER_LAYER: usize = 8;

/// Per-qubit logits; `logistic(theta[i])` is the probability that qubit `i`
/// starts in `|0>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentParams<S> {
    pub theta: [S; NUM_QUBITS],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitParams<S> {
    phi: Vec<S>,
    layers: usize,
}

/// Computational basis state `|b0 b1>`; qubit 0 is the high bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub bits: [u8; NUM_QUBITS],
}

impl BasisState {
    pub fn from_index(index: usize) -> Self {
        assert!(index < DIM, "basis index out of range");
        BasisState {
            bits: [(index >> 1) as u8 & 1, index as u8 & 1],
        }
    }

    pub fn index(self) -> usize {
        ((self.bits[0] as usize) << 1) | self.bits[1] as usize
    }

    pub fn all() -> impl Iterator<Item = BasisState> {
        (0..DIM).map(BasisState::from_index)
    }
}

/// Pauli basis each qubit is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementBasis {
    pub axes: [Pauli; NUM_QUBITS],
}

pub(crate) fn logistic<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

/// Binary entropy of `logistic(x)` in nats, stable for large |x|.
fn logistic_entropy<S: Scalar>(x: S) -> S {
    let a = x.abs();
    let e = (-a).exp();
    e.ln_1p() + a * e / (S::one() + e)
}

impl<S: Scalar> LatentParams<S> {
    pub fn new(theta: [S; NUM_QUBITS]) -> Self {
        LatentParams { theta }
    }

    /// Marginal probabilities of `|0>` per qubit.
    pub fn marginals(&self) -> [S; NUM_QUBITS] {
        self.theta.map(logistic)
    }
}

/// Product of per-qubit Bernoulli probabilities.
pub fn latent_probability<S: Scalar>(lp: &LatentParams<S>, b: BasisState) -> S {
    lp.theta
        .iter()
        .zip(b.bits)
        .map(|(&t, bit)| if bit == 0 { logistic(t) } else { logistic(-t) })
        .fold(S::one(), |acc, p| acc * p)
}

/// Shannon entropy of the latent distribution in nats (sum of per-qubit
/// binary entropies).
pub fn latent_entropy<S: Scalar>(lp: &LatentParams<S>) -> S {
    lp.theta.iter().map(|&t| logistic_entropy(t)).sum()
}

pub fn enumerate_weighted_states<S: Scalar>(lp: &LatentParams<S>) -> Vec<(BasisState, S)> {
    BasisState::all().map(|b| (b, latent_probability(lp, b))).collect()
}

/// Draws one basis state; bits are independent.
pub fn sample_basis_state<S: Scalar, R: Rng + ?Sized>(lp: &LatentParams<S>, rng: &mut R) -> BasisState {
    let mut bits = [0u8; NUM_QUBITS];
    for (bit, &t) in bits.iter_mut().zip(&lp.theta) {
        let p0 = logistic(t).to_f64_lossy();
        *bit = if rng.gen::<f64>() < p0 { 0 } else { 1 };
    }
    BasisState { bits }
}

/// Diagonal `ρ_θ = Σ_b p(b) |b><b|`.
pub fn latent_state<S: Scalar>(lp: &LatentParams<S>) -> DensityMatrix<S> {
    let probs: Vec<S> = BasisState::all().map(|b| latent_probability(lp, b)).collect();
    DensityMatrix::from_valid_unchecked(CMatrix::from_diagonal(&probs))
}

impl<S: Scalar> CircuitParams<S> {
    pub fn new(layers: usize, phi: Vec<S>) -> Result<Self> {
        if layers == 0 {
            return Err(Error::Config("circuit needs at least one layer".into()));
        }
        if phi.len() != layers * PARAMS_PER_LAYER {
            return Err(Error::Config(format!(
                "{layers} layer(s) need {} angles, got {}",
                layers * PARAMS_PER_LAYER,
                phi.len()
            )));
        }
        if phi.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config("non-finite circuit angle".into()));
        }
        Ok(CircuitParams { phi, layers })
    }

    pub fn zeros(layers: usize) -> Result<Self> {
        Self::new(layers, vec![S::zero(); layers * PARAMS_PER_LAYER])
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn angles(&self) -> &[S] {
        &self.phi
    }

    /// Same circuit with `extra` identity layers appended.
    pub fn deepened(&self, extra: usize) -> Self {
        let mut phi = self.phi.clone();
        phi.extend(std::iter::repeat_n(S::zero(), extra * PARAMS_PER_LAYER));
        CircuitParams {
            phi,
            layers: self.layers + extra,
        }
    }
}

fn c<S: Scalar>(re: S, im: S) -> Complex<S> {
    Complex::new(re, im)
}

pub fn rx<S: Scalar>(angle: S) -> CMatrix<S> {
    let h = angle * S::lit(0.5);
    let (s, co) = h.sin_cos();
    let o = S::zero();
    CMatrix::from_rows(&[vec![c(co, o), c(o, -s)], vec![c(o, -s), c(co, o)]])
}

pub fn ry<S: Scalar>(angle: S) -> CMatrix<S> {
    let h = angle * S::lit(0.5);
    let (s, co) = h.sin_cos();
    let o = S::zero();
    CMatrix::from_rows(&[vec![c(co, o), c(-s, o)], vec![c(s, o), c(co, o)]])
}

pub fn rz<S: Scalar>(angle: S) -> CMatrix<S> {
    let h = angle * S::lit(0.5);
    let (s, co) = h.sin_cos();
    let o = S::zero();
    CMatrix::from_rows(&[vec![c(co, -s), c(o, o)], vec![c(o, o), c(co, s)]])
}

pub fn hadamard<S: Scalar>() -> CMatrix<S> {
    let h = S::FRAC_1_SQRT_2();
    CMatrix::from_real_rows(&[vec![h, h], vec![h, -h]])
}

/// Lifts a single-qubit gate onto `qubit` of the two-qubit register.
pub fn on_qubit<S: Scalar>(gate: &CMatrix<S>, qubit: usize) -> CMatrix<S> {
    let id = CMatrix::identity(2);
    match qubit {
        0 => gate.kron(&id),
        1 => id.kron(gate),
        _ => panic!("qubit index {qubit} out of range"),
    }
}

/// Controlled RX with the given control and target qubits.
pub fn crx<S: Scalar>(control: usize, target: usize, angle: S) -> CMatrix<S> {
    assert!(control < NUM_QUBITS && target < NUM_QUBITS && control != target);
    let r = rx(angle);
    let mut u = CMatrix::identity(DIM);
    let bit = |idx: usize, q: usize| (idx >> (NUM_QUBITS - 1 - q)) & 1;
    for i in 0..DIM {
        for j in 0..DIM {
            if bit(i, control) == 1 && bit(j, control) == 1 {
                u[(i, j)] = r[(bit(i, target), bit(j, target))];
            }
        }
    }
    u
}

/// Gates of one layer in application order.
pub(crate) fn layer_gates<S: Scalar>(angles: &[S]) -> [(CMatrix<S>, GateArity); 8] {
    [
        (on_qubit(&rx(angles[0]), 0), GateArity::One(0)),
        (on_qubit(&ry(angles[1]), 0), GateArity::One(0)),
        (on_qubit(&rz(angles[2]), 0), GateArity::One(0)),
        (on_qubit(&rx(angles[3]), 1), GateArity::One(1)),
        (on_qubit(&ry(angles[4]), 1), GateArity::One(1)),
        (on_qubit(&rz(angles[5]), 1), GateArity::One(1)),
        (crx(0, 1, angles[6]), GateArity::Two),
        (crx(1, 0, angles[7]), GateArity::Two),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GateArity {
    One(usize),
    Two,
}

/// Full circuit unitary `U(φ)`.
pub fn build_unitary<S: Scalar>(cp: &CircuitParams<S>) -> CMatrix<S> {
    let mut u = CMatrix::identity(DIM);
    for layer in cp.phi.chunks(PARAMS_PER_LAYER) {
        // single-qubit rotations on different qubits commute, so fold each
        // qubit's RZ·RY·RX into one 2x2 before lifting
        let q0 = &(&rz(layer[2]) * &ry(layer[1])) * &rx(layer[0]);
        let q1 = &(&rz(layer[5]) * &ry(layer[4])) * &rx(layer[3]);
        let singles = q0.kron(&q1);
        let ent = &crx(1, 0, layer[7]) * &crx(0, 1, layer[6]);
        u = &(&ent * &singles) * &u;
    }
    u
}

/// `U(φ)|b>`.
pub fn prepare_state<S: Scalar>(b: BasisState, cp: &CircuitParams<S>) -> StateVector<S> {
    StateVector::basis(DIM, b.index()).evolve(&build_unitary(cp))
}

/// `Σ_b p_θ(b) U|b><b|U†`.
pub fn mixed_state<S: Scalar>(lp: &LatentParams<S>, cp: &CircuitParams<S>) -> DensityMatrix<S> {
    latent_state(lp).evolve(&build_unitary(cp))
}

fn axis_rotation<S: Scalar>(axis: Pauli) -> CMatrix<S> {
    match axis {
        Pauli::I | Pauli::Z => CMatrix::identity(2),
        Pauli::X => hadamard(),
        Pauli::Y => rx(-S::FRAC_PI_2()),
    }
}

/// Pre-measurement rotation taking the chosen Pauli eigenbasis to the
/// computational basis. `RX(−π/2)` maps the Y axis onto −Z, so each Y axis
/// contributes a factor −1 to outcome signs (see [`MeasurementBasis::outcome_sign`]).
pub fn basis_rotation<S: Scalar>(mb: &MeasurementBasis) -> CMatrix<S> {
    axis_rotation::<S>(mb.axes[0]).kron(&axis_rotation(mb.axes[1]))
}

impl MeasurementBasis {
    /// Eigenvalue (±1) of the measured Pauli product for computational
    /// outcome `k` after [`basis_rotation`].
    pub fn outcome_sign(&self, k: usize) -> i8 {
        let b = BasisState::from_index(k);
        let mut sign = 1i8;
        for (axis, bit) in self.axes.iter().zip(b.bits) {
            match axis {
                Pauli::I => {}
                Pauli::Z | Pauli::X => {
                    if bit == 1 {
                        sign = -sign;
                    }
                }
                Pauli::Y => {
                    if bit == 0 {
                        sign = -sign;
                    }
                }
            }
        }
        sign
    }
}
