//! Command implementations. Every command prints one machine-readable JSON
//! document on standard output and, given `--out`, writes its artifacts into
//! that directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use percotree::analytics::{self, AnalyzeOptions};
use percotree::model::EnvironmentModel;
use percotree::oracle::{self, EnumerationBudget};
use percotree::simulate::{
    self, DimensionEstimate, EmptinessFrequency, ReplicaConfig, SimBudget,
};

use crate::io::{write_atomic, Csv};
use crate::CliError;

pub fn load_model(path: &str) -> Result<EnvironmentModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    EnvironmentModel::from_json_str(&text).map_err(|e| CliError::Validation(e.to_string()))
}

#[derive(Debug, Serialize)]
pub struct ValidateSummary<'a> {
    pub command: &'static str,
    pub model: &'a str,
    pub valid: bool,
    pub report: percotree::model::ValidationReport,
}

pub fn validate(model_path: &str) -> Result<(String, bool), CliError> {
    let text = std::fs::read_to_string(model_path)
        .map_err(|e| CliError::Input(format!("{model_path}: {e}")))?;
    // surface structural problems as validation output rather than errors
    match EnvironmentModel::from_json_str(&text) {
        Ok(model) => {
            let report = model.validate();
            let valid = report.is_ok();
            let summary = ValidateSummary {
                command: "validate",
                model: model_path,
                valid,
                report,
            };
            Ok((serde_json::to_string_pretty(&summary).unwrap(), valid))
        }
        Err(e) => {
            let doc = serde_json::json!({
                "command": "validate",
                "model": model_path,
                "valid": false,
                "error": e.to_string(),
            });
            Ok((serde_json::to_string_pretty(&doc).unwrap(), false))
        }
    }
}

pub fn analyze(
    model_path: &str,
    depth: usize,
    tol: f64,
    horizon: Option<usize>,
    out: Option<&Path>,
) -> Result<String, CliError> {
    let model = load_model(model_path)?;
    let opts = AnalyzeOptions {
        j_max: depth,
        root_tol: tol,
        rho_horizon: horizon,
        ..AnalyzeOptions::default()
    };
    let report = analytics::analyze(&model, &opts)?;
    let json = serde_json::to_string_pretty(&report).unwrap();
    if let Some(dir) = out {
        write_atomic(&dir.join("analysis.json"), json.as_bytes())?;
        write_atomic(&dir.join("analysis.csv"), report.to_csv().as_bytes())?;
    }
    Ok(json)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub command: String,
    pub model: String,
    pub depth: usize,
    pub replicas: usize,
    pub seed: u64,
    pub s: f64,
    pub workers: usize,
    pub emptiness: EmptinessFrequency,
    /// Fraction of replicas whose truncated flow at the requested exponent is
    /// exactly zero.
    pub flow_zero_frequency: f64,
    /// Mean of the normalized weighted survivor sum at the truncation depth
    /// over on-root replicas; absent when the normalizer is undefined.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_mean_at_depth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

pub fn simulate(
    model_path: &str,
    depth: usize,
    replicas: usize,
    seed: u64,
    s: f64,
    workers: usize,
    out: Option<&Path>,
) -> Result<String, CliError> {
    let model = load_model(model_path)?;
    let budget = SimBudget::default();
    let cfg = ReplicaConfig {
        depth,
        replicas,
        seed,
        s_grid: vec![s],
        workers,
        budget,
    };
    let stats = simulate::run_replicas(&model, &cfg)?;
    let emptiness = simulate::monte_carlo_emptiness(&model, depth, replicas, seed, workers, &budget)?;

    let normalizers = simulate::moran_normalizers(&model, s, depth).ok();
    let flow_zero = stats.iter().filter(|r| r.flow[0] == 0.0).count() as f64 / replicas as f64;
    let w_mean = normalizers.as_ref().map(|norms| {
        let on: Vec<f64> = stats
            .iter()
            .filter(|r| r.root_on)
            .map(|r| r.tau_weights[0][depth] / norms[depth])
            .collect();
        if on.is_empty() {
            0.0
        } else {
            on.iter().sum::<f64>() / on.len() as f64
        }
    });

    let csv_path = if let Some(dir) = out {
        let mut csv = Csv::new("replica,generation,count,flow,w");
        for stat in &stats {
            for g in 0..=depth {
                let flow_cell = if g == depth {
                    stat.flow[0].to_string()
                } else {
                    String::new()
                };
                let w_cell = normalizers
                    .as_ref()
                    .map(|n| (stat.tau_weights[0][g] / n[g]).to_string())
                    .unwrap_or_default();
                csv.row(&[
                    stat.replica.to_string(),
                    g.to_string(),
                    stat.counts[g].to_string(),
                    flow_cell,
                    w_cell,
                ]);
            }
        }
        let path = dir.join("trajectories.csv");
        write_atomic(&path, &csv.into_bytes())?;
        Some(path.display().to_string())
    } else {
        None
    };

    let summary = SimulateSummary {
        command: "simulate".into(),
        model: model_path.into(),
        depth,
        replicas,
        seed,
        s,
        workers,
        emptiness,
        flow_zero_frequency: flow_zero,
        w_mean_at_depth: w_mean,
        csv: csv_path,
    };
    let json = serde_json::to_string_pretty(&summary).unwrap();
    if let Some(dir) = out {
        write_atomic(&dir.join("simulate.json"), json.as_bytes())?;
    }
    Ok(json)
}

#[derive(Debug, Serialize)]
struct EstimateDimSummary {
    command: &'static str,
    model: String,
    seed: u64,
    estimate: DimensionEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    csv: Option<String>,
}

pub fn estimate_dim(
    model_path: &str,
    depth: usize,
    replicas: usize,
    seed: u64,
    workers: usize,
    out: Option<&Path>,
) -> Result<String, CliError> {
    let model = load_model(model_path)?;
    if model.geometry != Some(percotree::model::GeometryRule::CubeSubdivision) {
        return Err(percotree::simulate::SimError::WrongGeometry(
            "box counting requires cube-subdivision geometry".into(),
        )
        .into());
    }
    let budget = SimBudget::default();
    let cfg = ReplicaConfig {
        depth,
        replicas,
        seed,
        s_grid: vec![],
        workers,
        budget,
    };
    let stats = simulate::run_replicas(&model, &cfg)?;
    let estimate = simulate::box_count_from_stats(&model, depth, &stats)?;

    let csv_path = if let Some(dir) = out {
        let mut csv = Csv::new("replica,generation,count");
        for stat in &stats {
            for g in 0..=depth {
                csv.row(&[
                    stat.replica.to_string(),
                    g.to_string(),
                    stat.counts[g].to_string(),
                ]);
            }
        }
        let path = dir.join("counts.csv");
        write_atomic(&path, &csv.into_bytes())?;
        Some(path.display().to_string())
    } else {
        None
    };

    let summary = EstimateDimSummary {
        command: "estimate-dim",
        model: model_path.into(),
        seed,
        estimate,
        csv: csv_path,
    };
    let json = serde_json::to_string_pretty(&summary).unwrap();
    if let Some(dir) = out {
        // keep the raw estimate separately for the report command
        write_atomic(
            &dir.join("dimension.json"),
            serde_json::to_string_pretty(&summary.estimate).unwrap().as_bytes(),
        )?;
    }
    Ok(json)
}

pub fn render(
    model_path: &str,
    depth: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<String, CliError> {
    let model = load_model(model_path)?;
    let tree = simulate::sample_tree(&model, depth, seed, &SimBudget::default())?;
    let image = tree.render_2d(&model, depth)?;
    let dir = out.map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    let path = dir.join("render.pgm");
    write_atomic(&path, &image.to_bytes())?;
    let doc = serde_json::json!({
        "command": "render",
        "model": model_path,
        "depth": depth,
        "seed": seed,
        "width": image.width,
        "height": image.height,
        "black_pixels": image.black_pixels(),
        "pgm": path.display().to_string(),
    });
    Ok(serde_json::to_string_pretty(&doc).unwrap())
}

pub fn report(model_path: &str, out: &Path) -> Result<String, CliError> {
    let consolidated = crate::report::build_report(model_path, out)?;
    let json = serde_json::to_string_pretty(&consolidated).unwrap();
    write_atomic(&out.join("report.json"), json.as_bytes())?;
    Ok(json)
}

pub fn oracle_cmd(
    model_path: &str,
    depth: usize,
    z: f64,
    s: f64,
) -> Result<String, CliError> {
    let model = load_model(model_path)?;
    let budget = EnumerationBudget::default();
    let pgf = oracle::exact_generating_function(&model, depth, z, &budget)
        .map(Some)
        .unwrap_or(None);
    let min_cut = oracle::exact_min_cut(&model, s, depth, &budget)
        .map(Some)
        .unwrap_or(None);
    let doc = serde_json::json!({
        "command": "oracle",
        "model": model_path,
        "depth": depth,
        "z": z,
        "s": s,
        "generating_function": pgf,
        "extinction_by": oracle::exact_extinction_by(&model, 0, depth),
        "min_cut_distribution": min_cut,
    });
    Ok(serde_json::to_string_pretty(&doc).unwrap())
}
