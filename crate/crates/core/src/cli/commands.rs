use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::{CliError, OutputFormat, RunConfig};
use crate::error::Error;
use crate::estimator::{Estimator, EstimatorMode, ShotConfig};
use crate::model::{
    build_hamiltonian, chi_reduced, gibbs_state, internal_energy, log_partition_function, magnetic_entropy,
    singlet_state, specific_heat, triplet_states, DimerModel,
};
use crate::plot::{heatmap, Plot, Style};
use crate::thermo::{
    analytic_curve, curve_file_name, fit_coupling, vqt_curve, Engine, ExperimentalDataset, FitConfig, PropertyCurve,
    Provenance, Quantity,
};
use crate::vqt::{run_vqt, temperature_sweep, AnsatzConfig, SweepConfig, VqtProblem, VqtResult};

const BASIS: [&str; 4] = ["|00>", "|01>", "|10>", "|11>"];
const QUANTITIES: [Quantity; 5] = [
    Quantity::ChiReducedTimesT,
    Quantity::ChiMolarTimesT,
    Quantity::Entropy,
    Quantity::SpecificHeat,
    Quantity::InternalEnergy,
];
/// Fidelity below which a sweep point is flagged in the summary.
const LOW_FIDELITY: f64 = 0.99;

fn write(dir: &Path, name: impl AsRef<Path>, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output types serialize");
    s.push('\n');
    s
}

fn model_for(cfg: &RunConfig, j: f64) -> Result<DimerModel<f64>, CliError> {
    Ok(DimerModel::new(j).with_g_factor(cfg.g_factor)?)
}

fn estimator(cfg: &RunConfig) -> Result<Estimator, CliError> {
    Ok(match cfg.mode {
        EstimatorMode::Exact => Estimator::Exact,
        EstimatorMode::Shots => Estimator::Shots(ShotConfig::new(cfg.shots, cfg.seed)?),
        EstimatorMode::Noisy => Estimator::Noisy(ShotConfig::new(cfg.shots, cfg.seed)?, cfg.noise),
    })
}

fn sweep_config(cfg: &RunConfig) -> Result<SweepConfig, CliError> {
    Ok(SweepConfig {
        estimator: estimator(cfg)?,
        ansatz: AnsatzConfig { layers: cfg.depth },
        optimizer: cfg.optimizer,
        warm_start_chain: cfg.warm_start,
    })
}

fn j_dir(j: f64) -> String {
    format!("j_{j}")
}

fn curve_output(curve: &PropertyCurve, format: OutputFormat) -> (PathBuf, String) {
    let name = curve_file_name(curve.quantity(), curve.provenance());
    match format {
        OutputFormat::Csv => (name, curve.to_csv()),
        OutputFormat::Json => (name.with_extension("json"), to_json(curve)),
    }
}

pub fn cmd_gibbs(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let j = cfg.j_over_kb[0];
    let t = cfg.temperatures[0];
    let model = model_for(cfg, j)?;
    let rho = gibbs_state(&model, t)?;
    let h = build_hamiltonian(&model);
    let singlet = rho.population_of(&singlet_state());
    let triplet: Vec<f64> = triplet_states().iter().map(|s| rho.population_of(s)).collect();

    let out = json!({
        "config": cfg,
        "ln_z": log_partition_function(&model, t)?,
        "free_energy_over_t": -log_partition_function(&model, t)?,
        "populations": { "singlet": singlet, "triplet": triplet },
        "chi_reduced": chi_reduced(&model, t)?.value(),
        "entropy": magnetic_entropy(&model, t)?,
        "internal_energy": internal_energy(&model, t)?,
        "specific_heat": specific_heat(&model, t)?,
        "state": { "re": rho.matrix().real_rows(), "im": rho.matrix().imag_rows() },
        "hamiltonian": { "re": h.matrix().real_rows(), "im": h.matrix().imag_rows() },
    });
    Ok(vec![
        write(&cfg.out, "gibbs.json", &to_json(&out))?,
        write(
            &cfg.out,
            "gibbs_state.svg",
            &heatmap(
                &format!("Gibbs state, J = {j} K, T = {t} K (real part)"),
                &rho.matrix().real_rows(),
                &BASIS,
            ),
        )?,
        write(
            &cfg.out,
            "hamiltonian.svg",
            &heatmap(
                &format!("Hamiltonian, J = {j} K (real part)"),
                &h.matrix().real_rows(),
                &BASIS,
            ),
        )?,
    ])
}

pub fn cmd_thermalize(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let j = cfg.j_over_kb[0];
    let t = cfg.temperatures[0];
    let model = model_for(cfg, j)?;
    let problem = VqtProblem {
        model,
        temperature: t,
        estimator: estimator(cfg)?,
        ansatz: AnsatzConfig { layers: cfg.depth },
        optimizer: cfg.optimizer,
        warm_start: None,
    };
    let res = run_vqt(&problem)?;
    let bound = -log_partition_function(&model, t)?;
    let out = json!({
        "config": cfg,
        "result": res.report(),
        "free_energy_bound": bound,
        "cost_gap": res.cost - bound,
    });

    let mut files = vec![write(&cfg.out, "vqt_result.json", &to_json(&out))?];
    files.push(match cfg.format {
        OutputFormat::Csv => write(&cfg.out, "trace.csv", &res.trace.to_csv())?,
        OutputFormat::Json => {
            let rows: Vec<_> = res
                .trace
                .records
                .iter()
                .map(|r| json!({ "iteration": r.iteration, "cost": r.cost, "best_cost": r.best_cost }))
                .collect();
            write(&cfg.out, "trace.json", &to_json(&rows))?
        }
    });

    let mut plot = Plot::new(
        &format!("VQT convergence, J = {j} K, T = {t} K"),
        "evaluation",
        "beta F (cost)",
        false,
    );
    let recs = &res.trace.records;
    plot.add(
        "cost",
        recs.iter().map(|r| (r.iteration as f64, r.cost)).collect(),
        Style::Markers,
        0,
    );
    plot.add(
        "best",
        recs.iter().map(|r| (r.iteration as f64, r.best_cost)).collect(),
        Style::Line,
        1,
    );
    if let (Some(first), Some(last)) = (recs.first(), recs.last()) {
        plot.add(
            "-ln Z",
            vec![(first.iteration as f64, bound), (last.iteration as f64, bound)],
            Style::Dashed,
            2,
        );
    }
    files.push(write(&cfg.out, "trace.svg", &plot.to_svg())?);
    files.push(write(
        &cfg.out,
        "vqt_state.svg",
        &heatmap(
            &format!("VQT state, J = {j} K, T = {t} K (real part)"),
            &res.state.matrix().real_rows(),
            &BASIS,
        ),
    )?);
    Ok(files)
}

#[derive(Serialize)]
struct PointSummary {
    temperature_k: f64,
    ok: bool,
    error: Option<String>,
    cost: Option<f64>,
    free_energy_bound: f64,
    cost_gap: Option<f64>,
    fidelity_vs_gibbs: Option<f64>,
    evaluations: Option<usize>,
    converged: Option<bool>,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct CouplingSummary {
    j_over_kb: f64,
    points: Vec<PointSummary>,
    failed_points: usize,
    max_residual: Vec<(Quantity, Option<f64>)>,
}

fn summarize(model: &DimerModel<f64>, t: f64, r: &crate::Result<VqtResult<f64>>) -> Result<PointSummary, CliError> {
    let bound = -log_partition_function(model, t)?;
    Ok(match r {
        Ok(r) => {
            let mut notes = Vec::new();
            if !r.trace.converged {
                notes.push("iteration budget exhausted before convergence".to_string());
            }
            if r.fidelity_vs_gibbs < LOW_FIDELITY {
                notes.push(format!("fidelity below {LOW_FIDELITY}"));
            }
            if r.cost < bound && r.mode == EstimatorMode::Exact {
                notes.push("cost below -ln Z".to_string());
            }
            PointSummary {
                temperature_k: t,
                ok: true,
                error: None,
                cost: Some(r.cost),
                free_energy_bound: bound,
                cost_gap: Some(r.cost - bound),
                fidelity_vs_gibbs: Some(r.fidelity_vs_gibbs),
                evaluations: Some(r.trace.evaluations),
                converged: Some(r.trace.converged),
                notes,
            }
        }
        Err(e) => PointSummary {
            temperature_k: t,
            ok: false,
            error: Some(e.to_string()),
            cost: None,
            free_energy_bound: bound,
            cost_gap: None,
            fidelity_vs_gibbs: None,
            evaluations: None,
            converged: None,
            notes: Vec::new(),
        },
    })
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let sweep = sweep_config(cfg)?;
    let provenance = Provenance::from(cfg.mode);
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    let mut plots: Vec<Plot> = QUANTITIES
        .iter()
        .map(|q| {
            Plot::new(
                &format!("{q}: VQT (markers) vs exact (lines)"),
                "T (K)",
                q.as_str(),
                true,
            )
        })
        .collect();

    for (ji, &j) in cfg.j_over_kb.iter().enumerate() {
        let model = model_for(cfg, j)?;
        let results = temperature_sweep(&model, &cfg.temperatures, &sweep);
        let points = cfg
            .temperatures
            .iter()
            .zip(&results)
            .map(|(&t, r)| summarize(&model, t, r))
            .collect::<Result<Vec<_>, _>>()?;
        let ok: Vec<VqtResult<f64>> = results.into_iter().filter_map(|r| r.ok()).collect();
        let dir = cfg.out.join(j_dir(j));

        let mut residuals = Vec::new();
        for (qi, &q) in QUANTITIES.iter().enumerate() {
            let exact = analytic_curve(&model, q, &cfg.temperatures, cfg.units)?;
            let (name, text) = curve_output(&exact, cfg.format);
            files.push(write(&dir, name, &text)?);
            plots[qi].add(
                &format!("J = {j} K exact"),
                exact.temperatures().into_iter().zip(exact.values()).collect(),
                Style::Line,
                ji,
            );
            // Too few surviving points for a curve (or a derivative) is
            // reported in the summary rather than aborting the sweep.
            match vqt_curve(&model, q, &ok, cfg.units) {
                Ok(curve) if !curve.points().is_empty() => {
                    let (name, text) = curve_output(&curve, cfg.format);
                    files.push(write(&dir, name, &text)?);
                    plots[qi].add(
                        &format!("J = {j} K {}", provenance.as_str()),
                        curve.temperatures().into_iter().zip(curve.values()).collect(),
                        Style::Markers,
                        ji,
                    );
                    residuals.push((q, crate::thermo::curve_residual(&curve, &exact).ok()));
                }
                _ => residuals.push((q, None)),
            }
        }
        summaries.push(CouplingSummary {
            j_over_kb: j,
            failed_points: points.iter().filter(|p| !p.ok).count(),
            points,
            max_residual: residuals,
        });
    }

    for (q, plot) in QUANTITIES.iter().zip(&plots) {
        files.push(write(&cfg.out, format!("{q}.svg"), &plot.to_svg())?);
    }
    let summary = json!({ "config": cfg, "couplings": summaries });
    files.push(write(&cfg.out, "sweep_summary.json", &to_json(&summary))?);
    Ok(files)
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let data = match &cfg.data {
        Some(p) => ExperimentalDataset::from_path(p)?,
        None => ExperimentalDataset::bundled(),
    };
    let fit_cfg = FitConfig {
        j_min: cfg.j_range.0,
        j_max: cfg.j_range.1,
        g_factor: cfg.g_factor,
        sweep: sweep_config(cfg)?,
        ..FitConfig::default()
    };
    let fit = fit_coupling(&data, cfg.engine, &fit_cfg)?;
    let dof = data.records.len().saturating_sub(1).max(1);
    let out = json!({
        "config": cfg,
        "dataset": {
            "source": data.source,
            "quantity": data.quantity,
            "units": data.units,
            "records": data.records.len(),
        },
        "engine": fit.engine,
        "j_over_kb": fit.j_over_kb,
        "residual": fit.residual,
        "reduced_residual": fit.residual / dof as f64,
    });

    let mut files = vec![write(&cfg.out, "fit_result.json", &to_json(&out))?];
    files.push(match cfg.format {
        OutputFormat::Csv => write(&cfg.out, "fit_curve.csv", &fit.curve.to_csv())?,
        OutputFormat::Json => write(&cfg.out, "fit_curve.json", &to_json(&fit.curve))?,
    });

    let engine = match fit.engine {
        Engine::Analytic => "analytic",
        Engine::Vqt => "VQT",
    };
    let mut plot = Plot::new(
        &format!("Fit: J = {:.4} K ({engine})", fit.j_over_kb),
        "T (K)",
        data.quantity.as_str(),
        true,
    );
    plot.add(
        "data",
        data.records.iter().map(|r| (r.temperature, r.value)).collect(),
        Style::Markers,
        0,
    );
    plot.add(
        "fit",
        fit.curve.temperatures().into_iter().zip(fit.curve.values()).collect(),
        Style::Line,
        1,
    );
    files.push(write(&cfg.out, "fit.svg", &plot.to_svg())?);
    Ok(files)
}
