//! The five experiment modes and the files they write.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fsir_core::edr::{fit_operators, project, sign_align, EdrFit};
use fsir_core::link::{fit_link, predict_link};
use fsir_core::metrics::{ivar_rate_ratio, projection_correlation, MonteCarloSummary, RateRatio};
use fsir_core::replicate::{run_once, summarize, Bandwidths, DataType, DesignSummary, ReplicationSettings, RunOutcome};
use fsir_core::simulation::{brownian_paths, derive_seed, simulate, true_beta};
use fsir_core::smoother::SmoothDiagnostics;
use fsir_core::{fit, FunctionOnGrid, Grid, LongitudinalDataset, SmootherSpec};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Mode};
use crate::error::{CliError, Result};
use crate::ingest::{ingest_csv, write_csv};
use crate::output::{sig6, write_json, write_rows};

/// Files written by a successful run.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub mode: Mode,
    pub files: Vec<PathBuf>,
    pub results: Value,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let config = config.resolved();
    config.validate()?;
    let mode = config.mode()?;
    let out = config.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(CliError::io(&out))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config("workers", e.to_string()))?;

    let mut files = Vec::new();
    let (bandwidths, results) = match mode {
        Mode::Simulate => run_simulate(&config, &out, &mut files)?,
        Mode::Fit => run_fit(&config, &out, &mut files)?,
        Mode::ReplicateTable1 => pool.install(|| run_table1(&config, &out, &mut files))?,
        Mode::RateCheck => pool.install(|| run_rate_check(&config, &out, &mut files))?,
        Mode::Link => run_link(&config, &out, &mut files)?,
    };

    let doc = json!({
        "software": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "timestamp": SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        "mode": mode.name(),
        "seed": config.seed,
        "config": config,
        "bandwidths": bandwidths,
        "results": results,
    });
    let path = out.join("results.json");
    write_json(&path, &doc)?;
    files.push(path);
    Ok(Report { mode, files, results })
}

fn spec_json(spec: &SmootherSpec) -> Value {
    json!({
        "kernel": format!("{:?}", spec.kernel.k_t.shape()).to_lowercase(),
        "support_radius": spec.kernel.k_t.support_radius(),
        "h_t": spec.h_t,
        "h_y": spec.h_y,
        "h_mu": spec.h_mu,
        "h_phi": spec.h_phi,
    })
}

fn smoothing_json(d: &SmoothDiagnostics) -> Value {
    json!({ "evaluations": d.evaluations, "widened": d.widened, "degenerate": d.degenerate })
}

fn resolve(bandwidths: Bandwidths, data: &LongitudinalDataset) -> Result<SmootherSpec> {
    Ok(match bandwidths {
        Bandwidths::Fixed(spec) => spec,
        Bandwidths::Auto(rule) => rule.resolve(data)?,
    })
}

fn grid(config: &ExperimentConfig) -> Result<Grid> {
    Ok(Grid::new(config.interval[0], config.interval[1], config.grid_size)?)
}

fn seed(config: &ExperimentConfig) -> u64 {
    config.seed.unwrap_or(0)
}

fn run_simulate(config: &ExperimentConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<(Value, Value)> {
    let sim = simulate(&config.sim_config(config.sim.n, config.sim.sparse, seed(config)))?;
    let path = out.join("data.csv");
    write_csv(&path, &sim.dataset)?;
    files.push(path);
    let results = json!({
        "n_subjects": sim.dataset.n_subjects(),
        "total_observations": sim.dataset.total_observations(),
        "mean_observations": sim.dataset.mean_observations(),
    });
    Ok((Value::Null, results))
}

/// Observed data plus, when simulated, the full trajectories and true direction.
struct Sample {
    data: LongitudinalDataset,
    trajectories: Vec<FunctionOnGrid>,
    truth: Option<FunctionOnGrid>,
}

fn load_sample(config: &ExperimentConfig, grid: &Grid) -> Result<Sample> {
    match &config.input {
        Some(path) => {
            let data = ingest_csv(path, (config.interval[0], config.interval[1]))?;
            let trajectories = data
                .subjects()
                .iter()
                .map(|s| interpolate(grid, &s.times, &s.values))
                .collect();
            Ok(Sample {
                data,
                trajectories,
                truth: None,
            })
        }
        None => {
            let sim = simulate(&config.sim_config(config.sim.n, config.sim.sparse, seed(config)))?;
            Ok(Sample {
                data: sim.dataset,
                trajectories: sim.trajectories,
                truth: Some(sim.model.beta),
            })
        }
    }
}

/// Piecewise linear interpolation onto the grid, constant beyond the first
/// and last observation.
fn interpolate(grid: &Grid, times: &[f64], values: &[f64]) -> FunctionOnGrid {
    FunctionOnGrid::from_fn(*grid, |t| {
        let j = times.partition_point(|&s| s <= t);
        if j == 0 {
            values[0]
        } else if j == times.len() {
            values[j - 1]
        } else {
            let (t0, t1) = (times[j - 1], times[j]);
            let w = (t - t0) / (t1 - t0);
            values[j - 1] + w * (values[j] - values[j - 1])
        }
    })
}

fn fit_json(f: &EdrFit) -> Value {
    json!({
        "k": f.k,
        "eigenvalues": f.eigenvalues,
        "m_eigenvalues": f.m_eigenvalues,
        "m_fve": f.diagnostics.m_fve,
        "retained_rank": f.retained_rank,
        "fve": f.fve,
        "fve_threshold": f.fve_threshold,
        "gamma_condition": f.diagnostics.gamma_condition,
        "eta_orthonormality_error": f.eta_orthonormality_error(),
        "beta_gamma_orthonormality_error": f.beta_gamma_orthonormality_error(),
        "gamma_smoothing": smoothing_json(&f.diagnostics.gamma_smoothing),
        "gamma_e_smoothing": smoothing_json(&f.diagnostics.gamma_e_smoothing),
    })
}

fn run_fit(config: &ExperimentConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<(Value, Value)> {
    let grid = grid(config)?;
    let sample = load_sample(config, &grid)?;
    let spec = resolve(config.smoother.bandwidths()?, &sample.data)?;
    let mut fitted = fit(&sample.data, &spec, &grid, config.fve(), config.k)?;
    if let Some(truth) = &sample.truth {
        fitted = sign_align(&fitted, truth, 0)?;
    }
    let mut results = fit_json(&fitted);
    results["n_subjects"] = json!(sample.data.n_subjects());
    results["total_observations"] = json!(sample.data.total_observations());
    if let Some(truth) = &sample.truth {
        let paths = brownian_paths(grid, config.eval_paths, derive_seed(seed(config), u64::MAX))?;
        results["true_correlation"] = json!(projection_correlation(&fitted.normalized_beta(0), truth, &paths)?);
    }
    results["fve_sweep"] = config
        .fve_sweep
        .iter()
        .map(
            |&f| match fit_operators(fitted.gamma.clone(), fitted.gamma_e.clone(), f, config.k) {
                Ok(s) => json!({
                    "fve_threshold": f,
                    "retained_rank": s.retained_rank,
                    "fve": s.fve,
                    "eigenvalues": s.eigenvalues,
                }),
                Err(e) => json!({ "fve_threshold": f, "error": e.kind(), "message": e.to_string() }),
            },
        )
        .collect();

    let mut header = vec!["t".to_string()];
    header.extend((1..=fitted.k).map(|j| format!("beta_{j}")));
    header.extend((1..=fitted.k).map(|j| format!("eta_{j}")));
    let rows = grid.points().into_iter().enumerate().map(|(i, t)| {
        let mut row = vec![sig6(t)];
        row.extend(fitted.beta.iter().map(|b| sig6(b.values()[i])));
        row.extend(fitted.eta.iter().map(|e| sig6(e.values()[i])));
        row
    });
    let path = out.join("directions.csv");
    write_rows(&path, &header, rows)?;
    files.push(path);
    Ok((spec_json(&spec), results))
}

/// Runs `0..n_runs` on the current pool and returns them in run order; the
/// first failing run (by index) aborts the design.
fn run_design(
    settings: &ReplicationSettings,
    n: usize,
    data_type: DataType,
    n_runs: usize,
    eval_paths: &[FunctionOnGrid],
) -> Result<Vec<RunOutcome>> {
    let outcomes: Vec<_> = (0..n_runs)
        .into_par_iter()
        .map(|run| run_once(settings, n, data_type, run, eval_paths))
        .collect();
    Ok(outcomes.into_iter().collect::<fsir_core::Result<Vec<_>>>()?)
}

fn summary_json(s: &MonteCarloSummary) -> Value {
    json!({
        "correlation": s.mean_abs_correlation,
        "isb": s.isb,
        "ivar": s.ivar,
        "imse": s.imse,
    })
}

fn design_json(summary: &DesignSummary, outcomes: &[RunOutcome]) -> Value {
    json!({
        "n": summary.n,
        "data_type": summary.data_type.label(),
        "n_runs": outcomes.len(),
        "beta": summary_json(&summary.beta),
        "eta": summary_json(&summary.eta),
        "correlations": summary.beta.per_run_correlations,
        "retained_rank": outcomes.iter().map(|o| o.retained_rank).collect::<Vec<_>>(),
        "eigenvalue": outcomes.iter().map(|o| o.eigenvalue).collect::<Vec<_>>(),
    })
}

fn run_table1(config: &ExperimentConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<(Value, Value)> {
    let settings = config.replication_settings()?;
    let eval_paths = settings.evaluation_paths()?;
    let mut summaries = Vec::new();
    let mut designs = Vec::new();
    let mut bandwidths = Vec::new();
    for &n in &config.sample_sizes() {
        for data_type in [DataType::Complete, DataType::Sparse] {
            let outcomes = run_design(&settings, n, data_type, config.n_runs, &eval_paths)?;
            let summary = summarize(n, data_type, &outcomes, config.grid_size)?;
            designs.push(design_json(&summary, &outcomes));
            bandwidths.push(json!({
                "n": n,
                "data_type": data_type.label(),
                "per_run": outcomes.iter().map(|o| spec_json(&o.spec)).collect::<Vec<_>>(),
            }));
            summaries.push(summary);
        }
    }

    // Full precision here: the row identity IMSE = ISB + IVAR must survive the
    // round trip through text.
    let header = ["n", "data_type", "correlation", "ISB", "IVAR", "IMSE"].map(String::from);
    let rows = summaries.iter().map(|s| {
        vec![
            s.n.to_string(),
            s.data_type.label().to_string(),
            s.beta.mean_abs_correlation.to_string(),
            s.beta.isb.to_string(),
            s.beta.ivar.to_string(),
            s.beta.imse.to_string(),
        ]
    });
    let path = out.join("table1.csv");
    write_rows(&path, &header, rows)?;
    files.push(path);

    let grid = Grid::unit(config.grid_size)?;
    let truth = true_beta(grid);
    let mut header = vec!["t".to_string(), "true_beta".to_string()];
    header.extend(
        summaries
            .iter()
            .map(|s| format!("{}_{}", s.data_type.label().to_lowercase(), s.n)),
    );
    let rows = grid.points().into_iter().enumerate().map(|(i, t)| {
        let mut row = vec![sig6(t), sig6(truth.values()[i])];
        row.extend(summaries.iter().map(|s| sig6(s.beta.mean_estimate.values()[i])));
        row
    });
    let path = out.join("beta_mean.csv");
    write_rows(&path, &header, rows)?;
    files.push(path);

    Ok((json!(bandwidths), json!({ "designs": designs })))
}

fn ratios_json(ratios: &[RateRatio]) -> Value {
    ratios
        .iter()
        .map(|r| json!({ "n_small": r.n_small, "n_large": r.n_large, "ratio": r.ratio, "expected": r.expected }))
        .collect()
}

fn run_rate_check(config: &ExperimentConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<(Value, Value)> {
    let mut settings = config.replication_settings()?;
    let sizes = config.sample_sizes();
    // One set of bandwidths for every n, so the variance ratios reflect the
    // sample size alone.
    let pilot = match settings.bandwidths {
        Bandwidths::Fixed(spec) => spec,
        Bandwidths::Auto(_) => settings.resolve_spec(sizes[0], DataType::Sparse, 0)?,
    };
    settings.bandwidths = Bandwidths::Fixed(pilot);
    let eval_paths = settings.evaluation_paths()?;

    let mut designs = Vec::new();
    let (mut eta_ivar, mut beta_ivar) = (Vec::new(), Vec::new());
    for &n in &sizes {
        let outcomes = run_design(&settings, n, DataType::Sparse, config.n_runs, &eval_paths)?;
        let summary = summarize(n, DataType::Sparse, &outcomes, config.grid_size)?;
        eta_ivar.push((n, summary.eta.ivar));
        beta_ivar.push((n, summary.beta.ivar));
        designs.push(design_json(&summary, &outcomes));
    }
    let eta_ratios = ivar_rate_ratio(&eta_ivar)?;
    let beta_ratios = ivar_rate_ratio(&beta_ivar)?;

    let header = ["n_small", "n_large", "ratio", "expected"].map(String::from);
    let rows = eta_ratios.iter().map(|r| {
        vec![
            r.n_small.to_string(),
            r.n_large.to_string(),
            sig6(r.ratio),
            sig6(r.expected),
        ]
    });
    let path = out.join("ratios.csv");
    write_rows(&path, &header, rows)?;
    files.push(path);

    let results = json!({
        "designs": designs,
        "eta_ratios": ratios_json(&eta_ratios),
        "beta_ratios": ratios_json(&beta_ratios),
    });
    Ok((spec_json(&pilot), results))
}

fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect()
}

fn run_link(config: &ExperimentConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<(Value, Value)> {
    let grid = grid(config)?;
    let sample = load_sample(config, &grid)?;
    let spec = resolve(config.smoother.bandwidths()?, &sample.data)?;
    let mut fitted = fit(&sample.data, &spec, &grid, config.fve(), config.k)?;
    if let Some(truth) = &sample.truth {
        fitted = sign_align(&fitted, truth, 0)?;
    }
    let indices = sample
        .trajectories
        .iter()
        .map(|x| project(&fitted, x))
        .collect::<fsir_core::Result<Vec<_>>>()?;
    let link = fit_link(&indices, &sample.data.responses(), None)?;

    let axes: Vec<Vec<f64>> = (0..config.k)
        .map(|j| {
            let (lo, hi) = indices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[j]), hi.max(r[j]))
            });
            linspace(lo, hi, config.probe_grid)
        })
        .collect();
    let probes: Vec<Vec<f64>> = match config.k {
        1 => axes[0].iter().map(|&a| vec![a]).collect(),
        _ => axes[0]
            .iter()
            .flat_map(|&a| axes[1].iter().map(move |&b| vec![a, b]))
            .collect(),
    };
    let surface = predict_link(&link, &probes)?;

    let mut header: Vec<String> = (1..=config.k).map(|j| format!("index{j}")).collect();
    header.push("fitted".into());
    let rows = probes.iter().zip(&surface.values).map(|(p, v)| {
        let mut row: Vec<String> = p.iter().map(|&x| sig6(x)).collect();
        row.push(sig6(*v));
        row
    });
    let path = out.join("surface.csv");
    write_rows(&path, &header, rows)?;
    files.push(path);

    let results = json!({
        "directions": fit_json(&fitted),
        "n_subjects": sample.data.n_subjects(),
        "fitted_error": link.fitted_error,
        "link_bandwidths": link.bandwidths,
        "link_smoothing": smoothing_json(&link.diagnostics),
        "probe_points": probes.len(),
        "extrapolated_probes": surface.extrapolated.iter().filter(|&&e| e).count(),
    });
    Ok((spec_json(&spec), results))
}
