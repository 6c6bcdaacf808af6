//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed; exits with
//! status 1 if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dimer_vqt::ansatz::{CircuitParams, LatentParams};
use dimer_vqt::estimator::{exact_expectation, shot_expectation, Estimator, NoiseModel, ShotConfig, DEFAULT_SHOTS};
use dimer_vqt::model::{
    gibbs_state, internal_energy, log_partition_function, magnetic_entropy, partition_function, specific_heat,
    DimerModel,
};
use dimer_vqt::optimizer::OptimizerConfig;
use dimer_vqt::qcore::{von_neumann_entropy, CMatrix};
use dimer_vqt::thermo::{
    fit_coupling, log_grid, susceptibility_from_state, vqt_curve, Engine, ExperimentalDataset, FitConfig, Quantity,
    BUNDLED_J,
};
use dimer_vqt::vqt::{free_energy_cost, run_vqt, temperature_sweep, SweepConfig, VqtParams, VqtProblem, VqtResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let dt = start.elapsed();
    let within = dt <= limit;
    o.detail = format!("{}; {:.2} s (limit {} s)", o.detail, dt.as_secs_f64(), limit.as_secs());
    o.pass &= within;
    o
}

// Independent references: the dimer Hamiltonian written out entry by entry,
// a Taylor scaling-and-squaring exponential, and closed-form χ̃ and c.

fn dimer_h(j: f64) -> CMatrix<f64> {
    let q = j / 4.0;
    CMatrix::from_real_rows(&[
        vec![q, 0.0, 0.0, 0.0],
        vec![0.0, -q, 2.0 * q, 0.0],
        vec![0.0, 2.0 * q, -q, 0.0],
        vec![0.0, 0.0, 0.0, q],
    ])
}

fn expm(a: &CMatrix<f64>) -> CMatrix<f64> {
    let norm = a.frobenius_norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let b = a.scale(0.5f64.powi(squarings as i32));
    let mut term = CMatrix::identity(4);
    let mut sum = CMatrix::identity(4);
    for k in 1..30 {
        term = (&term * &b).scale(1.0 / k as f64);
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Gibbs state and ln Z by brute force, shifting H by a Gershgorin lower
/// bound on its spectrum so the exponential never overflows.
fn brute_gibbs(j: f64, t: f64) -> (CMatrix<f64>, f64) {
    let h = dimer_h(j);
    let shift = (0..4)
        .map(|i| h[(i, i)].re - (0..4).filter(|&k| k != i).map(|k| h[(i, k)].norm()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let shifted = &h - &CMatrix::identity(4).scale(shift);
    let e = expm(&shifted.scale(-1.0 / t));
    let tr = e.trace().re;
    (e.scale(1.0 / tr), tr.ln() - shift / t)
}

fn chi_ref(j: f64, t: f64) -> f64 {
    1.0 / (3.0 + (j / t).exp())
}

fn heat_ref(j: f64, t: f64) -> f64 {
    let x = j / t;
    let ex = (-x).exp();
    3.0 * x * x * ex / (1.0 + 3.0 * ex).powi(2)
}

fn c1_gibbs_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_entry, mut worst_z) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let j = rng.gen_range(-10.0..50.0);
        let t = 10f64.powf(rng.gen_range(-3.0..350f64.log10()));
        let m = DimerModel::new(j);
        let (rho, lnz) = brute_gibbs(j, t);
        worst_entry = worst_entry.max(gibbs_state(&m, t).unwrap().matrix().max_abs_diff(&rho));
        let z_err = match partition_function(&m, t) {
            Ok(z) if z.is_finite() => (z / lnz.exp() - 1.0).abs(),
            _ => (log_partition_function(&m, t).unwrap() - lnz).abs(),
        };
        worst_z = worst_z.max(z_err);
    }
    outcome(
        worst_entry <= 1e-9 && worst_z <= 1e-9,
        format!("max entry error {worst_entry:.2e}, max relative Z error {worst_z:.2e} (tol 1e-9)"),
    )
}

fn c2_closed_forms() -> Outcome {
    let (mut worst_s, mut worst_u, mut worst_ts) = (0.0f64, 0.0f64, 0.0f64);
    for j in [-5.0, 1.0, 4.2, 10.0, 50.0] {
        let m = DimerModel::new(j);
        for t in log_grid(1e-2, 350.0, 120) {
            let s = magnetic_entropy(&m, t).unwrap();
            worst_s = worst_s.max((s - von_neumann_entropy(&gibbs_state(&m, t).unwrap()).unwrap()).abs());
            let c = specific_heat(&m, t).unwrap();
            if c <= 0.01 {
                continue;
            }
            let h = 1e-4 * t;
            let du = (internal_energy(&m, t + h).unwrap() - internal_energy(&m, t - h).unwrap()) / (2.0 * h);
            let ds = (magnetic_entropy(&m, t + h).unwrap() - magnetic_entropy(&m, t - h).unwrap()) / (2.0 * h);
            worst_u = worst_u.max((du - c).abs() / c);
            worst_ts = worst_ts.max((t * ds - c).abs() / c);
        }
    }
    outcome(
        worst_s <= 1e-9 && worst_u <= 0.01 && worst_ts <= 0.01,
        format!(
            "entropy vs von Neumann {worst_s:.2e} (tol 1e-9); c vs dU/dT {worst_u:.2e}, vs T dS/dT {worst_ts:.2e} relative (tol 1e-2)"
        ),
    )
}

fn c3_convergence() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for t in [5e-4f64, 10.0, 20.0, 300.0] {
        let mut prob = VqtProblem::new(DimerModel::new(1.0f64), t).unwrap();
        prob.optimizer = OptimizerConfig {
            max_iterations: 400,
            restarts: 10,
            ..OptimizerConfig::default()
        };
        let r = run_vqt(&prob).unwrap();
        let gap = r.cost + log_partition_function(&prob.model, t).unwrap();
        let plateau = r.trace.plateau_iteration(1e-3);
        let ok = r.fidelity_vs_gibbs >= 0.99 && gap.abs() <= 1e-2 && r.trace.evaluations <= 400 && plateau <= 200;
        pass &= ok;
        parts.push(format!(
            "T={t}: F={:.5} gap={gap:.1e} plateau@{plateau}",
            r.fidelity_vs_gibbs
        ));
    }
    outcome(
        pass,
        format!("{} (need F>=0.99, |gap|<=1e-2, plateau<=200)", parts.join(", ")),
    )
}

fn chi_errors(j: f64, results: &[dimer_vqt::Result<VqtResult<f64>>]) -> (f64, f64, usize) {
    let mut worst = (0.0f64, 0.0f64);
    let mut bad = 0;
    for r in results {
        let r = r.as_ref().expect("sweep point failed");
        let err = (susceptibility_from_state(&r.state) - chi_ref(j, r.temperature)).abs();
        if err > 0.01 {
            bad += 1;
        }
        if err > worst.0 {
            worst = (err, r.temperature);
        }
    }
    (worst.0, worst.1, bad)
}

fn exact_sweep_config() -> SweepConfig {
    SweepConfig {
        optimizer: OptimizerConfig {
            restarts: 10,
            ..OptimizerConfig::default()
        },
        ..SweepConfig::default()
    }
}

fn c4_figure_sweep() -> Outcome {
    let temps = log_grid(5e-4, 350.0, 40);
    let cfg = exact_sweep_config();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut high_t = f64::NAN;
    for j in [1.0, 10.0, 25.0, 50.0] {
        let res = temperature_sweep(&DimerModel::new(j), &temps, &cfg);
        let (worst, at, bad) = chi_errors(j, &res);
        pass &= bad == 0;
        parts.push(format!(
            "J={j}: max |dchi|={worst:.4} at T={at:.3} ({bad}/40 over 0.01)"
        ));
        if j == 1.0 {
            let last = res.last().unwrap().as_ref().unwrap();
            high_t = (susceptibility_from_state(&last.state) - 0.25).abs();
        }
    }
    pass &= high_t <= 0.005;
    outcome(
        pass,
        format!("{}; |chi(350 K)-0.25|={high_t:.1e} (tol 5e-3)", parts.join(", ")),
    )
}

fn peak_of(points: &[(f64, f64)]) -> (usize, f64, f64) {
    let (i, &(t, c)) = points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    (i, t, c)
}

fn heat_points(j: f64, temps: &[f64], cfg: &SweepConfig) -> Vec<(f64, f64)> {
    let m = DimerModel::new(j);
    let ok: Vec<VqtResult<f64>> = temperature_sweep(&m, temps, cfg)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let curve = vqt_curve(&m, Quantity::SpecificHeat, &ok, Default::default()).unwrap();
    curve.temperatures().into_iter().zip(curve.values()).collect()
}

fn c5_schottky() -> Outcome {
    let temps = log_grid(0.3, 30.0, 60);
    let pts = heat_points(4.2, &temps, &exact_sweep_config());
    let (_, t_peak, c_peak) = peak_of(&pts);
    let exact: Vec<(f64, f64)> = temps.iter().map(|&t| (t, heat_ref(4.2, t))).collect();
    let (_, t_exact, _) = peak_of(&exact);
    outcome(
        (t_peak - 3.5).abs() <= 0.5,
        format!(
            "VQT specific-heat peak at T={t_peak:.3} K (c={c_peak:.3}); closed-form peak on the same grid at {t_exact:.3} K; target 3.5 +/- 0.5 K"
        ),
    )
}

fn c6_fit() -> Outcome {
    let data = ExperimentalDataset::bundled();
    let cfg = FitConfig::default();
    let vqt = fit_coupling(&data, Engine::Vqt, &cfg).unwrap();
    let ana = fit_coupling(&data, Engine::Analytic, &cfg).unwrap();
    let rel = (ana.j_over_kb - BUNDLED_J).abs() / BUNDLED_J;
    outcome(
        (4.25..=5.75).contains(&vqt.j_over_kb) && rel <= 0.02,
        format!(
            "engine=vqt J={:.4} K (need [4.25, 5.75]); engine=analytic J={:.4} K, {:.2}% off (tol 2%)",
            vqt.j_over_kb,
            ana.j_over_kb,
            100.0 * rel
        ),
    )
}

fn random_params(rng: &mut ChaCha8Rng) -> (LatentParams<f64>, CircuitParams<f64>) {
    let lp = LatentParams::new([rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
    let pi = std::f64::consts::PI;
    let cp = CircuitParams::new(1, (0..8).map(|_| rng.gen_range(-pi..pi)).collect()).unwrap();
    (lp, cp)
}

fn c7_shot_statistics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sc = ShotConfig::new(DEFAULT_SHOTS, 7).unwrap();
    let mut within = 0;
    for i in 0..500 {
        let (lp, cp) = random_params(&mut rng);
        let m = DimerModel::new(rng.gen_range(1.0..50.0));
        let exact = exact_expectation(&lp, &cp, &m).value;
        let est = shot_expectation(&lp, &cp, &m, &sc, None, i);
        if (est.value - exact).abs() <= 5.0 * est.std_error {
            within += 1;
        }
    }
    let frac = within as f64 / 500.0;

    let (lp, cp) = random_params(&mut rng);
    let m = DimerModel::new(1.0);
    let exact = exact_expectation(&lp, &cp, &m).value;
    let rms = |shots: u64| {
        let sc = ShotConfig::new(shots, 11).unwrap();
        let ss: f64 = (0..100)
            .map(|k| (shot_expectation(&lp, &cp, &m, &sc, None, k).value - exact).powi(2))
            .sum();
        (ss / 100.0).sqrt()
    };
    let ratio = rms(4 * DEFAULT_SHOTS) / rms(DEFAULT_SHOTS);
    outcome(
        frac >= 0.99 && (0.4..=0.6).contains(&ratio),
        format!(
            "{:.1}% within 5 std errors (need 99%); rms error ratio at 4x shots {ratio:.3} (need 0.5 +/- 20%)",
            100.0 * frac
        ),
    )
}

fn c8_noisy() -> Outcome {
    let cfg = SweepConfig {
        estimator: Estimator::Noisy(ShotConfig::new(DEFAULT_SHOTS, 8).unwrap(), NoiseModel::default()),
        ..exact_sweep_config()
    };
    let temps = log_grid(5e-4, 350.0, 40);
    let res = temperature_sweep(&DimerModel::new(1.0), &temps, &cfg);
    let (worst, at, _) = chi_errors(1.0, &res);

    let heat_temps = log_grid(0.3, 30.0, 60);
    let pts = heat_points(4.2, &heat_temps, &cfg);
    let (i, t_peak, c_peak) = peak_of(&pts);
    let edge = pts[0].1.max(pts[pts.len() - 1].1);
    let detectable = i > 0 && i < pts.len() - 1 && c_peak >= 2.0 * edge;
    outcome(
        worst <= 0.05 && detectable,
        format!(
            "J=1 K: max |dchi|={worst:.4} at T={at:.3} (tol 0.05); J=4.2 K: interior c peak {} at T={t_peak:.3} K (c={c_peak:.3}, edges {edge:.3})",
            if detectable { "found" } else { "missing" }
        ),
    )
}

fn c9_lower_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..1000 {
        let j = rng.gen_range(-10.0..50.0);
        let t = 10f64.powf(rng.gen_range(-3.0..350f64.log10()));
        let mut prob = VqtProblem::new(DimerModel::new(j), t).unwrap();
        prob.ansatz.layers = 2;
        let x: Vec<f64> = (0..18)
            .map(|k| {
                if k < 2 {
                    rng.gen_range(-10.0..10.0)
                } else {
                    rng.gen_range(-7.0..7.0)
                }
            })
            .collect();
        let cost = free_energy_cost(&VqtParams::from_slice(&x, 2).unwrap(), &prob).unwrap();
        let margin = cost + log_partition_function(&prob.model, t).unwrap();
        worst = worst.min(margin);
        if margin < -1e-9 {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{violations} of 1000 draws below -ln Z - 1e-9; smallest cost + ln Z = {worst:.2e}"),
    )
}

fn collect_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "json")) {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn c10_determinism() -> Outcome {
    let runs: [&[&str]; 4] = [
        &["gibbs", "--j-over-kb", "4.2", "--temp", "3"],
        &[
            "thermalize",
            "--j-over-kb",
            "1",
            "--temp",
            "1",
            "--mode",
            "shots",
            "--seed",
            "3",
        ],
        &[
            "sweep",
            "--j-over-kb",
            "1,10",
            "--temps",
            "0.1:100:12",
            "--mode",
            "noisy",
            "--shots",
            "2048",
            "--seed",
            "3",
            "--format",
            "json",
        ],
        &["fit", "--engine", "vqt", "--j-range", "1:20"],
    ];
    let root = tempfile::tempdir().unwrap();
    let mut files = 0;
    let mut mismatches = Vec::new();
    for (k, args) in runs.iter().enumerate() {
        let mut trees = Vec::new();
        for rep in 0..2 {
            let out = root.path().join(format!("{k}_{rep}"));
            let status = Command::new(env!("CARGO_BIN_EXE_vqt"))
                .args(*args)
                .arg("--out")
                .arg(&out)
                .env_remove("VQT_SEED")
                .output()
                .unwrap();
            if !status.status.success() {
                return outcome(
                    false,
                    format!(
                        "`vqt {}` failed: {}",
                        args.join(" "),
                        String::from_utf8_lossy(&status.stderr)
                    ),
                );
            }
            trees.push(collect_outputs(&out));
        }
        files += trees[0].len();
        if trees[0] != trees[1] || trees[0].is_empty() {
            mismatches.push(args[0]);
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("{files} CSV/JSON files compared across repeated runs; differing commands: {mismatches:?}"),
    )
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("Gibbs-oracle equivalence", 1, c1_gibbs_oracle),
        ("closed-form consistency", 5, c2_closed_forms),
        ("VQT convergence, exact mode", 60, c3_convergence),
        ("susceptibility sweep reproduction", 600, c4_figure_sweep),
        ("Schottky anomaly position", 120, c5_schottky),
        ("fit of the bundled dataset", 300, c6_fit),
        ("shot-mode statistics", 120, c7_shot_statistics),
        ("noisy-mode sanity", 600, c8_noisy),
        ("free-energy lower bound", 10, c9_lower_bound),
        ("determinism", 600, c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let o = timed(Duration::from_secs(*limit), f);
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
