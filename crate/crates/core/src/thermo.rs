//! Thermodynamic property curves, experimental datasets and fits of the
//! exchange coupling.

use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimatorMode;
use crate::model::{
    build_hamiltonian, chi_reduced, internal_energy, magnetic_entropy, singlet_state, specific_heat, DimerModel,
    UnitSystem, CODATA_2018,
};
use crate::qcore::{expectation, von_neumann_entropy, DensityMatrix};
use crate::vqt::{temperature_sweep, SweepConfig, VqtResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Dimensionless `χ̃·T`, in Kelvin.
    #[serde(rename = "chi_reduced_times_T")]
    ChiReducedTimesT,
    /// Molar `χ·T`, in the dataset's unit system times Kelvin.
    #[serde(rename = "chi_molar_times_T")]
    ChiMolarTimesT,
    Entropy,
    SpecificHeat,
    InternalEnergy,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::ChiReducedTimesT => "chi_reduced_times_T",
            Quantity::ChiMolarTimesT => "chi_molar_times_T",
            Quantity::Entropy => "entropy",
            Quantity::SpecificHeat => "specific_heat",
            Quantity::InternalEnergy => "internal_energy",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "chi_reduced_times_T" => Quantity::ChiReducedTimesT,
            "chi_molar_times_T" => Quantity::ChiMolarTimesT,
            "entropy" => Quantity::Entropy,
            "specific_heat" => Quantity::SpecificHeat,
            "internal_energy" => Quantity::InternalEnergy,
            other => return Err(Error::Input(format!("unknown quantity '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    VqtExact,
    VqtShots,
    VqtNoisy,
    Analytic,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::VqtExact => "vqt_exact",
            Provenance::VqtShots => "vqt_shots",
            Provenance::VqtNoisy => "vqt_noisy",
            Provenance::Analytic => "analytic",
        }
    }
}

impl From<EstimatorMode> for Provenance {
    fn from(m: EstimatorMode) -> Self {
        match m {
            EstimatorMode::Exact => Provenance::VqtExact,
            EstimatorMode::Shots => Provenance::VqtShots,
            EstimatorMode::Noisy => Provenance::VqtNoisy,
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "vqt_exact" => Provenance::VqtExact,
            "vqt_shots" => Provenance::VqtShots,
            "vqt_noisy" => Provenance::VqtNoisy,
            "analytic" => Provenance::Analytic,
            other => return Err(Error::Input(format!("unknown provenance '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub temperature: f64,
    pub value: f64,
    pub uncertainty: Option<f64>,
}

/// A thermodynamic quantity sampled on a strictly increasing temperature grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCurve {
    quantity: Quantity,
    points: Vec<CurvePoint>,
    provenance: Provenance,
}

impl PropertyCurve {
    pub fn new(quantity: Quantity, points: Vec<CurvePoint>, provenance: Provenance) -> Result<Self> {
        for w in points.windows(2) {
            if !(w[1].temperature > w[0].temperature) {
                return Err(Error::Input(format!(
                    "temperatures must be strictly increasing ({} K then {} K)",
                    w[0].temperature, w[1].temperature
                )));
            }
        }
        for p in &points {
            if !p.value.is_finite() || !p.temperature.is_finite() || p.uncertainty.is_some_and(|u| !u.is_finite()) {
                return Err(Error::Input(format!("non-finite point at {} K", p.temperature)));
            }
        }
        Ok(PropertyCurve {
            quantity,
            points,
            provenance,
        })
    }

    pub fn quantity(&self) -> Quantity {
        self.quantity
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn temperatures(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.temperature).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// Point with the largest value.
    pub fn peak(&self) -> Option<CurvePoint> {
        self.points
            .iter()
            .copied()
            .fold(None, |best: Option<CurvePoint>, p| match best {
                Some(b) if b.value >= p.value => Some(b),
                _ => Some(p),
            })
    }

    /// Value at `t`, linear in `ln T` between grid points. `None` outside the grid.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        let pts = &self.points;
        if pts.is_empty() || t < pts[0].temperature || t > pts[pts.len() - 1].temperature {
            return None;
        }
        let k = pts.partition_point(|p| p.temperature < t);
        if pts[k].temperature == t {
            return Some(pts[k].value);
        }
        let (a, b) = (&pts[k - 1], &pts[k]);
        let w = (t.ln() - a.temperature.ln()) / (b.temperature.ln() - a.temperature.ln());
        Some(a.value + w * (b.value - a.value))
    }

    /// `T_K,value,uncertainty,provenance`, 15 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T_K,value,uncertainty,provenance\n");
        for p in &self.points {
            let u = p.uncertainty.map(|u| format!("{u:.14e}")).unwrap_or_default();
            out.push_str(&format!(
                "{:.14e},{:.14e},{},{}\n",
                p.temperature,
                p.value,
                u,
                self.provenance.as_str()
            ));
        }
        out
    }

    /// Parses the format written by [`PropertyCurve::to_csv`].
    pub fn from_csv(text: &str, quantity: Quantity, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut points = Vec::new();
        let mut provenance = None;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(origin, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            let field = |i: usize| rec.get(i).unwrap_or("");
            let num = |i: usize, name: &str| -> Result<f64> {
                field(i).parse().map_err(|_| Error::Parse {
                    path: origin.to_path_buf(),
                    line,
                    message: format!("bad {name} '{}'", field(i)),
                })
            };
            let uncertainty = if field(2).is_empty() {
                None
            } else {
                Some(num(2, "uncertainty")?)
            };
            let prov: Provenance = field(3).parse().map_err(|e: Error| Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
            if provenance.is_some_and(|p| p != prov) {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line,
                    message: "mixed provenance in one curve".into(),
                });
            }
            provenance = Some(prov);
            points.push(CurvePoint {
                temperature: num(0, "temperature")?,
                value: num(1, "value")?,
                uncertainty,
            });
        }
        PropertyCurve::new(quantity, points, provenance.unwrap_or(Provenance::Analytic))
    }
}

fn csv_error(origin: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        path: origin.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

/// Closed-form value of `quantity` for `model` at `t`.
pub fn analytic_value(model: &DimerModel<f64>, quantity: Quantity, t: f64, units: UnitSystem) -> Result<f64> {
    match quantity {
        Quantity::ChiReducedTimesT => Ok(chi_reduced(model, t)?.value() * t),
        Quantity::ChiMolarTimesT => {
            Ok(chi_reduced(model, t)?.value() * CODATA_2018.molar_prefactor(model.g_factor, units))
        }
        Quantity::Entropy => magnetic_entropy(model, t),
        Quantity::SpecificHeat => specific_heat(model, t),
        Quantity::InternalEnergy => internal_energy(model, t),
    }
}

pub fn analytic_curve(
    model: &DimerModel<f64>,
    quantity: Quantity,
    temps: &[f64],
    units: UnitSystem,
) -> Result<PropertyCurve> {
    let points = temps
        .iter()
        .map(|&t| {
            Ok(CurvePoint {
                temperature: t,
                value: analytic_value(model, quantity, t, units)?,
                uncertainty: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PropertyCurve::new(quantity, points, Provenance::Analytic)
}

/// Reduced susceptibility of a two-spin state: the mean triplet population
/// `(1 − <S|ρ|S>)/3`, with `|S>` the singlet.
///
/// For X-shaped thermal states this is `<00|ρ|00>`. Averaging over the
/// triplet keeps the estimate independent of how a variational state
/// distributes weight inside the degenerate triplet.
pub fn susceptibility_from_state(state: &DensityMatrix<f64>) -> f64 {
    (1.0 - state.population_of(&singlet_state())) / 3.0
}

/// Value of `quantity` read off a single state at temperature `t`.
/// Specific heat needs a temperature derivative and is rejected.
pub fn state_value(
    model: &DimerModel<f64>,
    quantity: Quantity,
    state: &DensityMatrix<f64>,
    t: f64,
    units: UnitSystem,
) -> Result<f64> {
    match quantity {
        Quantity::ChiReducedTimesT => Ok(susceptibility_from_state(state) * t),
        Quantity::ChiMolarTimesT => {
            Ok(susceptibility_from_state(state) * CODATA_2018.molar_prefactor(model.g_factor, units))
        }
        Quantity::Entropy => von_neumann_entropy(state),
        Quantity::InternalEnergy => expectation(&build_hamiltonian(model), state),
        Quantity::SpecificHeat => Err(Error::Input(
            "specific heat is not a single-state observable; derive it from an entropy curve".into(),
        )),
    }
}

/// Curve of `quantity` from VQT results (any order; sorted by temperature).
pub fn vqt_curve(
    model: &DimerModel<f64>,
    quantity: Quantity,
    results: &[VqtResult<f64>],
    units: UnitSystem,
) -> Result<PropertyCurve> {
    let mut sorted: Vec<&VqtResult<f64>> = results.iter().collect();
    sorted.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
    let provenance = sorted.first().map_or(Provenance::VqtExact, |r| r.mode.into());
    if quantity == Quantity::SpecificHeat {
        let entropy = vqt_curve(model, Quantity::Entropy, results, units)?;
        return specific_heat_from_entropy(&entropy);
    }
    let points = sorted
        .iter()
        .map(|r| {
            Ok(CurvePoint {
                temperature: r.temperature,
                value: state_value(model, quantity, &r.state, r.temperature, units)?,
                uncertainty: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PropertyCurve::new(quantity, points, provenance)
}

/// `c = T dS/dT = dS/d(ln T)` by centered differences in `ln T` (exactly
/// symmetric on log-spaced grids), one-sided at the ends.
pub fn specific_heat_from_entropy(curve: &PropertyCurve) -> Result<PropertyCurve> {
    if curve.quantity != Quantity::Entropy {
        return Err(Error::Input(format!(
            "expected an entropy curve, got {}",
            curve.quantity
        )));
    }
    let p = &curve.points;
    if p.len() < 3 {
        return Err(Error::Input(format!("need at least 3 points, got {}", p.len())));
    }
    if p.windows(2).any(|w| !(w[1].temperature > w[0].temperature)) {
        return Err(Error::Input("temperatures must be strictly increasing".into()));
    }
    let n = p.len();
    let u: Vec<f64> = p.iter().map(|q| q.temperature.ln()).collect();
    let s: Vec<f64> = p.iter().map(|q| q.value).collect();
    let points = (0..n)
        .map(|i| {
            let value = if i == 0 {
                (s[1] - s[0]) / (u[1] - u[0])
            } else if i == n - 1 {
                (s[n - 1] - s[n - 2]) / (u[n - 1] - u[n - 2])
            } else {
                // three-point derivative on a non-uniform grid
                let (hm, hp) = (u[i] - u[i - 1], u[i + 1] - u[i]);
                (hm * hm * s[i + 1] - hp * hp * s[i - 1] + (hp * hp - hm * hm) * s[i]) / (hm * hp * (hm + hp))
            };
            CurvePoint {
                temperature: p[i].temperature,
                value,
                uncertainty: None,
            }
        })
        .collect();
    PropertyCurve::new(Quantity::SpecificHeat, points, curve.provenance)
}

/// Largest `|a(T) − b(T)|` over the points of `a` inside `b`'s range, with
/// `b` interpolated linearly in `ln T`.
pub fn curve_residual(a: &PropertyCurve, b: &PropertyCurve) -> Result<f64> {
    if a.quantity != b.quantity {
        return Err(Error::Input(format!(
            "cannot compare {} with {}",
            a.quantity, b.quantity
        )));
    }
    let mut worst: Option<f64> = None;
    for p in &a.points {
        if let Some(v) = b.interpolate(p.temperature) {
            let d = (p.value - v).abs();
            worst = Some(worst.map_or(d, |w| w.max(d)));
        }
    }
    worst.ok_or_else(|| Error::Input("curves have disjoint temperature ranges".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataRecord {
    pub temperature: f64,
    pub value: f64,
    pub sigma: Option<f64>,
}

/// Measured (or synthetic) points of one quantity.
///
/// CSV layout: optional `# key: value` metadata lines (`quantity`, `units`,
/// `source`), then a `T_K,value,sigma` header; `sigma` may be absent or blank.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentalDataset {
    pub quantity: Quantity,
    pub units: UnitSystem,
    pub source: String,
    pub records: Vec<DataRecord>,
}

const BUNDLED_CHI_T: &str = include_str!("../data/dimer_chi_t_synthetic.csv");
pub const BUNDLED_NAME: &str = "dimer_chi_t_synthetic.csv";

/// Generator settings of the bundled dataset.
pub const BUNDLED_J: f64 = 5.0;
pub const BUNDLED_G: f64 = 2.0;
pub const BUNDLED_NOISE: f64 = 0.02;
pub const BUNDLED_SEED: u64 = 5;

pub fn bundled_temperatures() -> Vec<f64> {
    log_grid(2.0, 300.0, 40)
}

/// `n` points from `lo` to `hi` (inclusive), evenly spaced in `ln T`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

impl ExperimentalDataset {
    pub fn new(
        quantity: Quantity,
        units: UnitSystem,
        source: impl Into<String>,
        records: Vec<DataRecord>,
    ) -> Result<Self> {
        for r in &records {
            if !(r.temperature > 0.0) || !r.temperature.is_finite() {
                return Err(Error::Input(format!(
                    "temperature must be positive, got {}",
                    r.temperature
                )));
            }
            if !r.value.is_finite() {
                return Err(Error::Input(format!("non-finite value at {} K", r.temperature)));
            }
            if let Some(s) = r.sigma {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::Input(format!(
                        "sigma must be positive at {} K, got {s}",
                        r.temperature
                    )));
                }
            }
        }
        Ok(ExperimentalDataset {
            quantity,
            units,
            source: source.into(),
            records,
        })
    }

    /// The shipped synthetic `χT` dataset (Bleaney-Bowers at J = 5 K, g = 2,
    /// 2% Gaussian noise). Not measured data.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_CHI_T, Path::new(BUNDLED_NAME)).expect("bundled dataset parses")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let mut text = String::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses dataset CSV; `origin` labels errors.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut quantity = Quantity::ChiReducedTimesT;
        let mut units = UnitSystem::Cgs;
        let mut source = String::new();
        for (i, line) in text.lines().enumerate() {
            let Some(meta) = line.trim_start().strip_prefix('#') else {
                continue;
            };
            let Some((key, value)) = meta.split_once(':') else {
                continue;
            };
            let bad = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i as u64 + 1,
                message,
            };
            match key.trim() {
                "quantity" => quantity = value.parse().map_err(|e: Error| bad(e.to_string()))?,
                "units" => {
                    units = match value.trim() {
                        "cgs" => UnitSystem::Cgs,
                        "si" => UnitSystem::Si,
                        other => return Err(bad(format!("unknown units '{other}'"))),
                    }
                }
                "source" => source = value.trim().to_string(),
                _ => {}
            }
        }

        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| csv_error(origin, e))?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (Some(t_col), Some(v_col)) = (col("T_K"), col("value")) else {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: 1,
                message: format!(
                    "expected header T_K,value[,sigma], found '{}'",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        };
        let s_col = col("sigma");
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(origin, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line,
                message,
            };
            let num = |i: usize, name: &str| -> Result<f64> {
                let s = rec.get(i).unwrap_or("");
                s.parse::<f64>().map_err(|_| bad(format!("bad {name} '{s}'")))
            };
            let sigma = match s_col.and_then(|i| rec.get(i)) {
                Some(s) if !s.is_empty() => Some(num(s_col.unwrap_or_default(), "sigma")?),
                _ => None,
            };
            let r = DataRecord {
                temperature: num(t_col, "temperature")?,
                value: num(v_col, "value")?,
                sigma,
            };
            if !(r.temperature > 0.0) {
                return Err(bad(format!("temperature must be positive, got {}", r.temperature)));
            }
            if r.sigma.is_some_and(|s| !(s > 0.0)) {
                return Err(bad("sigma must be positive".into()));
            }
            records.push(r);
        }
        Self::new(quantity, units, source, records)
    }

    pub fn to_csv(&self) -> String {
        let units = match self.units {
            UnitSystem::Cgs => "cgs",
            UnitSystem::Si => "si",
        };
        let mut out = format!("# quantity: {}\n# units: {}\n", self.quantity, units);
        if !self.source.is_empty() {
            out.push_str(&format!("# source: {}\n", self.source));
        }
        out.push_str("T_K,value,sigma\n");
        for r in &self.records {
            let s = r.sigma.map(|s| format!("{s:.14e}")).unwrap_or_default();
            out.push_str(&format!("{:.14e},{:.14e},{}\n", r.temperature, r.value, s));
        }
        out
    }

    pub fn temperatures(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.temperature).collect()
    }
}

/// Closed-form data for `quantity` with multiplicative Gaussian noise of
/// relative size `rel_noise`; `sigma = rel_noise·|value|` of the noisy value.
pub fn synthetic_dataset(
    model: &DimerModel<f64>,
    quantity: Quantity,
    temps: &[f64],
    units: UnitSystem,
    rel_noise: f64,
    seed: u64,
) -> Result<ExperimentalDataset> {
    if !(rel_noise > 0.0) {
        return Err(Error::Config("relative noise must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, rel_noise).map_err(|e| Error::Config(e.to_string()))?;
    let records = temps
        .iter()
        .map(|&t| {
            let v = analytic_value(model, quantity, t, units)? * (1.0 + normal.sample(&mut rng));
            Ok(DataRecord {
                temperature: t,
                value: v,
                sigma: Some(rel_noise * v.abs()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let source = format!(
        "synthetic: Bleaney-Bowers {} at J = {} K, g = {}, {}% Gaussian noise, seed {}",
        quantity,
        model.j_over_kb,
        model.g_factor,
        rel_noise * 100.0,
        seed
    );
    ExperimentalDataset::new(quantity, units, source, records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Analytic,
    Vqt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Scan range for J, Kelvin. Log-spaced when `j_min > 0`.
    pub j_min: f64,
    pub j_max: f64,
    pub scan_points: usize,
    /// Absolute tolerance on J for the golden-section refinement, Kelvin.
    pub tolerance: f64,
    pub g_factor: f64,
    /// Settings for `engine = vqt`.
    pub sweep: SweepConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            j_min: 0.1,
            j_max: 100.0,
            scan_points: 40,
            tolerance: 1e-4,
            g_factor: 2.0,
            sweep: SweepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub j_over_kb: f64,
    /// `Σ((model − y)/σ)²`; records without σ count with σ = 1.
    pub residual: f64,
    pub curve: PropertyCurve,
    pub engine: Engine,
}

/// Relative temperature step for the entropy derivative used when a
/// specific-heat dataset is fitted with the VQT engine.
const HEAT_STEP: f64 = 0.02;

fn model_values(data: &ExperimentalDataset, j: f64, engine: Engine, cfg: &FitConfig) -> Result<Vec<f64>> {
    let model = DimerModel::new(j).with_g_factor(cfg.g_factor)?;
    let temps = data.temperatures();
    match engine {
        Engine::Analytic => temps
            .iter()
            .map(|&t| analytic_value(&model, data.quantity, t, data.units))
            .collect(),
        Engine::Vqt if data.quantity == Quantity::SpecificHeat => {
            let probe: Vec<f64> = temps
                .iter()
                .flat_map(|&t| [t * (1.0 - HEAT_STEP), t * (1.0 + HEAT_STEP)])
                .collect();
            let res = temperature_sweep(&model, &probe, &cfg.sweep);
            let entropy = |r: &Result<VqtResult<f64>>| -> Result<f64> {
                match r {
                    Ok(r) => von_neumann_entropy(&r.state),
                    Err(e) => Err(Error::Input(format!("VQT point failed: {e}"))),
                }
            };
            temps
                .iter()
                .zip(res.chunks(2))
                .map(|(&t, pair)| Ok(t * (entropy(&pair[1])? - entropy(&pair[0])?) / (2.0 * HEAT_STEP * t)))
                .collect()
        }
        Engine::Vqt => temperature_sweep(&model, &temps, &cfg.sweep)
            .into_iter()
            .zip(&temps)
            .map(|(r, &t)| {
                let r = r.map_err(|e| Error::Input(format!("VQT point at {t} K failed: {e}")))?;
                state_value(&model, data.quantity, &r.state, t, data.units)
            })
            .collect(),
    }
}

fn chi_square(data: &ExperimentalDataset, model: &[f64]) -> f64 {
    data.records
        .iter()
        .zip(model)
        .map(|(r, m)| ((m - r.value) / r.sigma.unwrap_or(1.0)).powi(2))
        .sum()
}

/// Least-squares fit of J by a bracketing scan and golden-section search.
pub fn fit_coupling(data: &ExperimentalDataset, engine: Engine, cfg: &FitConfig) -> Result<FitResult> {
    if data.records.len() < 3 {
        return Err(Error::Input(format!(
            "need at least 3 records to fit, got {}",
            data.records.len()
        )));
    }
    if !(cfg.j_max > cfg.j_min) || cfg.scan_points < 3 || !(cfg.tolerance > 0.0) {
        return Err(Error::Config(
            "fit needs j_min < j_max, at least 3 scan points and a positive tolerance".into(),
        ));
    }
    let objective = |j: f64| -> Result<f64> { Ok(chi_square(data, &model_values(data, j, engine, cfg)?)) };

    let grid = if cfg.j_min > 0.0 {
        log_grid(cfg.j_min, cfg.j_max, cfg.scan_points)
    } else {
        (0..cfg.scan_points)
            .map(|i| cfg.j_min + (cfg.j_max - cfg.j_min) * i as f64 / (cfg.scan_points - 1) as f64)
            .collect()
    };
    let scan = grid.iter().map(|&j| objective(j)).collect::<Result<Vec<_>>>()?;
    let k = scan
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v < scan[best] { i } else { best });
    if k == 0 || k == grid.len() - 1 {
        return Err(Error::FitRange {
            lo: cfg.j_min,
            hi: cfg.j_max,
        });
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (grid[k - 1], grid[k + 1]);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c)?, objective(d)?);
    while b - a > cfg.tolerance {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d)?;
        }
    }
    let (mut j, mut residual) = if fc <= fd { (c, fc) } else { (d, fd) };
    if scan[k] < residual {
        j = grid[k];
        residual = scan[k];
    }

    let values = model_values(data, j, engine, cfg)?;
    let mut points: Vec<CurvePoint> = data
        .records
        .iter()
        .zip(values)
        .map(|(r, v)| CurvePoint {
            temperature: r.temperature,
            value: v,
            uncertainty: None,
        })
        .collect();
    points.sort_by(|x, y| x.temperature.total_cmp(&y.temperature));
    let provenance = match engine {
        Engine::Analytic => Provenance::Analytic,
        Engine::Vqt => cfg.sweep.estimator.mode().into(),
    };
    Ok(FitResult {
        j_over_kb: j,
        residual,
        curve: PropertyCurve::new(data.quantity, points, provenance)?,
        engine,
    })
}

/// Default output location for a curve file.
pub fn curve_file_name(quantity: Quantity, provenance: Provenance) -> PathBuf {
    PathBuf::from(format!("{}_{}.csv", quantity, provenance.as_str()))
}
