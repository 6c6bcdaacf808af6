//! The variational loop: free-energy cost, optimization, state
//! reconstruction and temperature sweeps.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::{latent_entropy, mixed_state, CircuitParams, LatentParams, NUM_QUBITS, PARAMS_PER_LAYER};
use crate::error::{Error, Result};
use crate::estimator::{Estimator, EstimatorMode};
use crate::model::{gibbs_state, DimerModel};
use crate::optimizer::{minimize, multistart, OptimizationTrace, OptimizerConfig};
use crate::qcore::{fidelity, DensityMatrix};
use crate::rng::StreamRng;
use crate::scalar::Scalar;

pub const DEFAULT_LAYERS: usize = 1;

/// Latent and circuit parameters, flattened as `[θ0, θ1, φ...]` for the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct VqtParams<S> {
    pub latent: LatentParams<S>,
    pub circuit: CircuitParams<S>,
}

impl<S: Scalar> VqtParams<S> {
    pub fn zeros(layers: usize) -> Result<Self> {
        Ok(VqtParams {
            latent: LatentParams::new([S::zero(); NUM_QUBITS]),
            circuit: CircuitParams::zeros(layers)?,
        })
    }

    pub fn to_vec(&self) -> Vec<S> {
        let mut v = self.latent.theta.to_vec();
        v.extend_from_slice(self.circuit.angles());
        v
    }

    pub fn from_slice(x: &[S], layers: usize) -> Result<Self> {
        if x.len() != NUM_QUBITS + layers * PARAMS_PER_LAYER {
            return Err(Error::Dimension {
                expected: NUM_QUBITS + layers * PARAMS_PER_LAYER,
                found: x.len(),
            });
        }
        Ok(VqtParams {
            latent: LatentParams::new([x[0], x[1]]),
            circuit: CircuitParams::new(layers, x[NUM_QUBITS..].to_vec())?,
        })
    }

    pub fn layers(&self) -> usize {
        self.circuit.layers()
    }

    /// The reconstructed mixed state `Σ_b p_θ(b) U|b><b|U†`.
    pub fn state(&self) -> DensityMatrix<S> {
        mixed_state(&self.latent, &self.circuit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnsatzConfig {
    pub layers: usize,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        AnsatzConfig { layers: DEFAULT_LAYERS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqtProblem<S> {
    pub model: DimerModel<S>,
    /// Kelvin; `β = 1/T` with `k_B = 1`.
    pub temperature: S,
    pub estimator: Estimator,
    pub ansatz: AnsatzConfig,
    pub optimizer: OptimizerConfig,
    /// Optional starting point, tried in addition to the random restarts.
    pub warm_start: Option<VqtParams<S>>,
}

impl<S: Scalar> VqtProblem<S> {
    pub fn new(model: DimerModel<S>, temperature: S) -> Result<Self> {
        let p = VqtProblem {
            model,
            temperature,
            estimator: Estimator::Exact,
            ansatz: AnsatzConfig::default(),
            optimizer: OptimizerConfig::default(),
            warm_start: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn beta(&self) -> S {
        S::one() / self.temperature
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > S::zero()) || !self.temperature.is_finite() {
            return Err(Error::Domain(format!(
                "temperature must be positive and finite, got {}",
                self.temperature
            )));
        }
        if self.ansatz.layers == 0 {
            return Err(Error::Config("ansatz needs at least one layer".into()));
        }
        if let Some(w) = &self.warm_start {
            if w.layers() != self.ansatz.layers {
                return Err(Error::Config(format!(
                    "warm start has {} layer(s), ansatz has {}",
                    w.layers(),
                    self.ansatz.layers
                )));
            }
        }
        self.optimizer.validate()
    }
}

/// `β<H> − S(θ)`, with `<H>` from the problem's estimator.
///
/// `iteration` keys the estimator's random streams; exact mode ignores it.
pub fn free_energy_cost_at<S: Scalar>(p: &VqtParams<S>, prob: &VqtProblem<S>, iteration: u64) -> S {
    let energy = prob
        .estimator
        .estimate(&p.latent, &p.circuit, &prob.model, iteration)
        .value;
    prob.beta() * energy - latent_entropy(&p.latent)
}

pub fn free_energy_cost<S: Scalar>(p: &VqtParams<S>, prob: &VqtProblem<S>) -> Result<S> {
    prob.validate()?;
    Ok(free_energy_cost_at(p, prob, 0))
}

#[derive(Debug, Clone)]
pub struct VqtResult<S> {
    pub params: VqtParams<S>,
    /// Best cost seen by the optimizer, as measured by the configured estimator.
    pub cost: S,
    pub state: DensityMatrix<S>,
    pub fidelity_vs_gibbs: S,
    pub trace: OptimizationTrace<S>,
    pub temperature: S,
    pub mode: EstimatorMode,
}

/// Factor between the optimizer's latent coordinates and the logits θ.
///
/// The optimal logits grow like `β|J|` as the state approaches a pure
/// ground state, so a fixed-size trust region would need many steps to
/// reach them. The optimizer sees `θ / κ` with `κ = sqrt(1 + β|J|)`.
pub fn latent_scale<S: Scalar>(prob: &VqtProblem<S>) -> S {
    (S::one() + prob.beta() * prob.model.j_over_kb.abs()).sqrt()
}

/// Initial point for a random restart, in parameter (not optimizer) coordinates.
pub fn sample_initial<S: Scalar>(rng: &mut StreamRng, layers: usize) -> Vec<S> {
    let mut x = Vec::with_capacity(NUM_QUBITS + layers * PARAMS_PER_LAYER);
    for _ in 0..NUM_QUBITS {
        x.push(S::lit(rng.gen_range(-2.0..=2.0)));
    }
    let pi = std::f64::consts::PI;
    for _ in 0..layers * PARAMS_PER_LAYER {
        x.push(S::lit(rng.gen_range(-pi..=pi)));
    }
    x
}

fn objective<S: Scalar>(prob: &VqtProblem<S>, start: usize) -> impl FnMut(&[S]) -> S + '_ {
    let layers = prob.ansatz.layers;
    let scale = latent_scale(prob);
    let mut calls: u64 = 0;
    move |x: &[S]| {
        calls += 1;
        let mut x = x.to_vec();
        x[0] *= scale;
        x[1] *= scale;
        match VqtParams::from_slice(&x, layers) {
            Ok(p) => free_energy_cost_at(&p, prob, ((start as u64) << 32) | calls),
            Err(_) => S::nan(),
        }
    }
}

/// Optimizes the free-energy cost and reconstructs the resulting state.
///
/// Runs `max(restarts, 1)` random starts plus the warm start, if any, and
/// keeps the lowest cost. Fidelity against the Gibbs state is computed for
/// the report only.
pub fn run_vqt<S: Scalar>(prob: &VqtProblem<S>) -> Result<VqtResult<S>> {
    prob.validate()?;
    let layers = prob.ansatz.layers;
    let cfg = &prob.optimizer;

    let ls = latent_scale(prob);
    let random = multistart(
        |r| objective(prob, r),
        cfg,
        |rng| {
            let mut x = sample_initial::<S>(rng, layers);
            x[0] /= ls;
            x[1] /= ls;
            x
        },
    );
    let warm = prob.warm_start.as_ref().map(|w| {
        let start = cfg.restarts.max(1);
        let mut x = w.to_vec();
        x[0] /= ls;
        x[1] /= ls;
        minimize(objective(prob, start), &x, cfg).map(|mut t| {
            t.restart = start;
            t
        })
    });
    let mut trace = match (random, warm) {
        (Ok(ms), Some(Ok(w))) => {
            if w.best_cost < ms.best.best_cost {
                w
            } else {
                ms.best
            }
        }
        (Ok(ms), _) => ms.best,
        (Err(_), Some(Ok(w))) => w,
        (Err(e), _) => return Err(e),
    };

    trace.best_params[0] *= ls;
    trace.best_params[1] *= ls;
    let params = VqtParams::from_slice(&trace.best_params, layers)?;
    let state = params.state();
    let gibbs = gibbs_state(&prob.model, prob.temperature)?;
    Ok(VqtResult {
        cost: trace.best_cost,
        fidelity_vs_gibbs: fidelity(&state, &gibbs),
        state,
        params,
        trace,
        temperature: prob.temperature,
        mode: prob.estimator.mode(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub estimator: Estimator,
    pub ansatz: AnsatzConfig,
    pub optimizer: OptimizerConfig,
    /// Feed each point's optimum to the next point as a warm start. Runs
    /// the points sequentially when set.
    pub warm_start_chain: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            estimator: Estimator::Exact,
            ansatz: AnsatzConfig::default(),
            optimizer: OptimizerConfig::default(),
            warm_start_chain: false,
        }
    }
}

/// One VQT run per temperature, in input order. A failing point yields an
/// `Err` in its slot; the others still run.
pub fn temperature_sweep<S: Scalar>(
    model: &DimerModel<S>,
    temps: &[S],
    cfg: &SweepConfig,
) -> Vec<Result<VqtResult<S>>> {
    let problem = |t: S, warm: Option<VqtParams<S>>| VqtProblem {
        model: *model,
        temperature: t,
        estimator: cfg.estimator,
        ansatz: cfg.ansatz,
        optimizer: cfg.optimizer,
        warm_start: warm,
    };
    if cfg.warm_start_chain {
        let mut out = Vec::with_capacity(temps.len());
        let mut warm = None;
        for &t in temps {
            let r = run_vqt(&problem(t, warm.take()));
            if let Ok(res) = &r {
                warm = Some(res.params.clone());
            }
            out.push(r);
        }
        out
    } else {
        temps.par_iter().map(|&t| run_vqt(&problem(t, None))).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamsReport {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub layers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateReport {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceSummary {
    pub evaluations: usize,
    pub best_cost: f64,
    pub final_radius: f64,
    pub converged: bool,
    pub restart: usize,
}

/// JSON-facing view of a [`VqtResult`].
#[derive(Debug, Clone, Serialize)]
pub struct VqtReport {
    pub temperature_k: f64,
    pub mode: EstimatorMode,
    pub params: ParamsReport,
    pub cost: f64,
    pub state: StateReport,
    pub fidelity_vs_gibbs: f64,
    pub trace: TraceSummary,
}

impl<S: Scalar> VqtResult<S> {
    pub fn report(&self) -> VqtReport {
        let f = |v: &S| v.to_f64_lossy();
        let rows = |m: Vec<Vec<S>>| m.into_iter().map(|r| r.iter().map(f).collect()).collect();
        VqtReport {
            temperature_k: f(&self.temperature),
            mode: self.mode,
            params: ParamsReport {
                theta: self.params.latent.theta.iter().map(f).collect(),
                phi: self.params.circuit.angles().iter().map(f).collect(),
                layers: self.params.layers(),
            },
            cost: f(&self.cost),
            state: StateReport {
                re: rows(self.state.matrix().real_rows()),
                im: rows(self.state.matrix().imag_rows()),
            },
            fidelity_vs_gibbs: f(&self.fidelity_vs_gibbs),
            trace: TraceSummary {
                evaluations: self.trace.evaluations,
                best_cost: f(&self.trace.best_cost),
                final_radius: f(&self.trace.final_radius),
                converged: self.trace.converged,
                restart: self.trace.restart,
            },
        }
    }
}
