//! Derivative-free minimization: a trust-region method built on linear
//! interpolation over a simplex (COBYLA family, no constraints), a
//! Nelder-Mead fallback, and seeded multistart.

mod linear;
mod simplex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, StreamRng};
use crate::scalar::Scalar;

const RESTART_STREAM: u64 = 0x5245_5354;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    LinearApprox,
    Simplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    /// Objective evaluations allowed per run.
    pub max_iterations: usize,
    /// Initial trust-region radius (or simplex edge), radians.
    pub initial_step: f64,
    /// Radius at which the run is declared converged.
    pub final_step: f64,
    /// Number of independent starts used by [`multistart`].
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            method: Method::LinearApprox,
            max_iterations: 400,
            initial_step: 0.5,
            final_step: 1e-4,
            restarts: 1,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.final_step > 0.0) || !(self.final_step < self.initial_step) || !self.initial_step.is_finite() {
            return Err(Error::Config(format!(
                "need 0 < final_step ({}) < initial_step ({})",
                self.final_step, self.initial_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord<S> {
    /// 1-based evaluation index.
    pub iteration: usize,
    /// Objective at the point evaluated in this iteration.
    pub cost: S,
    /// Lowest cost seen up to and including this iteration.
    pub best_cost: S,
    /// FNV-1a hash of the evaluated parameter bits.
    pub params_hash: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace<S> {
    pub records: Vec<IterationRecord<S>>,
    pub best_cost: S,
    pub best_params: Vec<S>,
    pub evaluations: usize,
    /// Trust-region radius (or simplex size) when the run stopped.
    pub final_radius: S,
    /// True when the radius criterion, not the budget, ended the run.
    pub converged: bool,
    /// Index of the start that produced this trace (multistart only).
    pub restart: usize,
}

impl<S: Scalar> OptimizationTrace<S> {
    /// `iteration,cost,best_cost` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,cost,best_cost\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.14e},{:.14e}\n",
                r.iteration,
                r.cost.to_f64_lossy(),
                r.best_cost.to_f64_lossy()
            ));
        }
        out
    }

    /// First iteration after which the recorded best never improves by more
    /// than `tol` again.
    pub fn plateau_iteration(&self, tol: S) -> usize {
        let final_best = self.best_cost;
        self.records
            .iter()
            .find(|r| r.best_cost - final_best <= tol)
            .map_or(self.evaluations, |r| r.iteration)
    }
}

fn fnv1a<S: Scalar>(x: &[S]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in x {
        for byte in v.to_f64_lossy().to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Evaluation bookkeeping shared by both methods.
pub(crate) struct Recorder<S, F> {
    objective: F,
    records: Vec<IterationRecord<S>>,
    best_cost: S,
    best_params: Vec<S>,
    budget: usize,
}

impl<S: Scalar, F: FnMut(&[S]) -> S> Recorder<S, F> {
    fn new(objective: F, dim: usize, budget: usize) -> Self {
        Recorder {
            objective,
            records: Vec::new(),
            best_cost: S::infinity(),
            best_params: vec![S::zero(); dim],
            budget,
        }
    }

    pub(crate) fn exhausted(&self) -> bool {
        self.records.len() >= self.budget
    }

    pub(crate) fn eval(&mut self, x: &[S]) -> Result<S> {
        let f = (self.objective)(x);
        if !f.is_finite() {
            return Err(Error::NonFiniteObjective {
                value: f.to_f64_lossy(),
                params: x.iter().map(|v| v.to_f64_lossy()).collect(),
            });
        }
        if f < self.best_cost {
            self.best_cost = f;
            self.best_params.clear();
            self.best_params.extend_from_slice(x);
        }
        self.records.push(IterationRecord {
            iteration: self.records.len() + 1,
            cost: f,
            best_cost: self.best_cost,
            params_hash: fnv1a(x),
        });
        Ok(f)
    }

    fn finish(self, final_radius: S, converged: bool) -> OptimizationTrace<S> {
        OptimizationTrace {
            evaluations: self.records.len(),
            records: self.records,
            best_cost: self.best_cost,
            best_params: self.best_params,
            final_radius,
            converged,
            restart: 0,
        }
    }
}

/// Minimizes `objective` from `initial`.
///
/// Deterministic for a deterministic objective. Fails if the objective
/// returns a non-finite value; the error names the offending parameters.
pub fn minimize<S: Scalar, F: FnMut(&[S]) -> S>(
    objective: F,
    initial: &[S],
    cfg: &OptimizerConfig,
) -> Result<OptimizationTrace<S>> {
    cfg.validate()?;
    if initial.is_empty() {
        return Err(Error::Config("cannot optimize over zero parameters".into()));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("initial point must be finite".into()));
    }
    let mut rec = Recorder::new(objective, initial.len(), cfg.max_iterations);
    let (radius, converged) = match cfg.method {
        Method::LinearApprox => linear::run(&mut rec, initial, S::lit(cfg.initial_step), S::lit(cfg.final_step))?,
        Method::Simplex => simplex::run(&mut rec, initial, S::lit(cfg.initial_step), S::lit(cfg.final_step))?,
    };
    Ok(rec.finish(radius, converged))
}

/// Outcome of a batch of independent starts.
#[derive(Debug)]
pub struct MultistartResult<S> {
    /// Trace with the lowest best cost.
    pub best: OptimizationTrace<S>,
    /// Best cost per start, in start order (`None` for failed starts).
    pub costs: Vec<Option<S>>,
    /// Failed starts with their errors.
    pub failures: Vec<(usize, Error)>,
}

/// Runs `max(cfg.restarts, 1)` independent starts concurrently.
///
/// Start `r` draws its initial point from `sampler` using its own substream
/// of `cfg.seed`, and gets a fresh objective from `make_objective(r)`, so
/// results do not depend on thread scheduling. Ties go to the lower start
/// index.
pub fn multistart<S, F, M, G>(make_objective: M, cfg: &OptimizerConfig, sampler: G) -> Result<MultistartResult<S>>
where
    S: Scalar,
    F: FnMut(&[S]) -> S,
    M: Fn(usize) -> F + Sync,
    G: Fn(&mut StreamRng) -> Vec<S> + Sync,
{
    cfg.validate()?;
    let runs = cfg.restarts.max(1);
    let outcomes: Vec<Result<OptimizationTrace<S>>> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(cfg.seed, RESTART_STREAM, r as u64);
            let x0 = sampler(&mut rng);
            minimize(make_objective(r), &x0, cfg).map(|mut t| {
                t.restart = r;
                t
            })
        })
        .collect();

    let mut best: Option<OptimizationTrace<S>> = None;
    let mut costs = Vec::with_capacity(runs);
    let mut failures = Vec::new();
    for (r, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(trace) => {
                costs.push(Some(trace.best_cost));
                if best.as_ref().is_none_or(|b| trace.best_cost < b.best_cost) {
                    best = Some(trace);
                }
            }
            Err(e) => {
                costs.push(None);
                failures.push((r, e));
            }
        }
    }
    match best {
        Some(best) => Ok(MultistartResult { best, costs, failures }),
        None => Err(failures.into_iter().next().map(|(_, e)| e).expect("at least one start")),
    }
}
