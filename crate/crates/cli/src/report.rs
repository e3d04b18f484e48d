//! Consolidated report: merges the analytic report with simulation artifacts
//! and evaluates the cross-checks between them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use percotree::analytics::AnalysisReport;
use percotree::simulate::DimensionEstimate;

use crate::commands::SimulateSummary;
use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct CrossCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConsolidatedReport {
    pub model: String,
    /// "threshold", or the almost-surely-empty marker when it is negative.
    pub dimension: DimensionSection,
    /// Best available emptiness estimate and where it came from.
    pub emptiness_estimate: EmptinessEstimate,
    pub analysis: AnalysisReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulateSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension_estimate: Option<DimensionEstimate>,
    pub checks: Vec<CrossCheck>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmptinessEstimate {
    /// "analytic", "monte_carlo" (recursion undefined, simulation used), or
    /// "unavailable".
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket_high: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DimensionSection {
    /// None encodes a negative threshold: the set is empty almost surely and
    /// its dimension is reported as minus infinity.
    pub d_star: Option<f64>,
    pub note: String,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::MissingArtifact(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::MissingArtifact(format!("{}: {e}", path.display())))
}

pub fn build_report(model_path: &str, out_dir: &Path) -> Result<ConsolidatedReport, CliError> {
    let analysis: AnalysisReport = read_json(&out_dir.join("analysis.json"))?;
    let simulation: Option<SimulateSummary> = read_json(&out_dir.join("simulate.json")).ok();
    let dimension_estimate: Option<DimensionEstimate> =
        read_json(&out_dir.join("dimension.json")).ok();

    let mut checks = Vec::new();

    // extinction probabilities sit inside their odds-bound sandwich
    let mut sandwich_ok = true;
    let mut sandwich_detail = String::from("all generations inside bounds");
    for entry in &analysis.extinction {
        if let Some(sig) = analysis.sigma.iter().find(|s| s.j == entry.j) {
            let low = sig.lower.map_or(1.0, |l| 1.0 - 1.0 / l);
            let high = sig.upper.map_or(1.0, |u| 1.0 - 1.0 / u);
            if !(low - 1e-9 <= entry.probability && entry.probability <= high + 1e-9) {
                sandwich_ok = false;
                sandwich_detail = format!(
                    "generation {}: f = {} outside [{low}, {high}]",
                    entry.j, entry.probability
                );
                break;
            }
        }
    }
    checks.push(CrossCheck {
        name: "extinction_bounds_sandwich".into(),
        pass: sandwich_ok,
        detail: sandwich_detail,
    });

    // the emptiness sequence decreases toward its limit
    let mut monotone_ok = true;
    let mut monotone_detail = String::from("sequence nonincreasing");
    for w in analysis.emptiness_sequence.windows(2) {
        if w[1].value > w[0].value + 1e-10 {
            monotone_ok = false;
            monotone_detail = format!(
                "increases from {} at j={} to {} at j={}",
                w[0].value, w[0].j, w[1].value, w[1].j
            );
            break;
        }
    }
    checks.push(CrossCheck {
        name: "emptiness_sequence_monotone".into(),
        pass: monotone_ok,
        detail: monotone_detail,
    });

    if let (Some(sim), Some(analytic)) = (&simulation, analysis.emptiness.probability) {
        let freq = &sim.emptiness;
        // the truncated frequency estimates a lower bound; with the residual
        // it brackets the analytic value up to Monte Carlo error. The error
        // scale comes from the analytic probability as well as the observed
        // frequency, since the latter degenerates at zero observations.
        let n = freq.replicas.max(1) as f64;
        let spread = (freq.frequency * (1.0 - freq.frequency))
            .max(analytic * (1.0 - analytic))
            .max(1.0 / n);
        let slack = 3.0 * (spread / n).sqrt() + 1e-9;
        let pass = freq.frequency <= analytic + slack
            && analytic <= freq.frequency + freq.residual.unwrap_or(1.0) + slack;
        checks.push(CrossCheck {
            name: "simulated_emptiness_brackets_analytic".into(),
            pass,
            detail: format!(
                "frequency {} (residual {:?}) vs analytic {analytic}",
                freq.frequency, freq.residual
            ),
        });
    }

    if let (Some(est), Some(d)) = (&dimension_estimate, analysis.d_star) {
        let tolerance = 0.15 + 3.0 * est.stderr;
        let pass = (est.slope - d).abs() <= tolerance;
        checks.push(CrossCheck {
            name: "boxcount_matches_threshold".into(),
            pass,
            detail: format!("slope {} vs threshold {d} (tolerance {tolerance})", est.slope),
        });
    }

    let dimension = match analysis.d_star {
        Some(d) if d >= 0.0 => DimensionSection {
            d_star: Some(d),
            note: "conditional on nonemptiness, the dimension equals the threshold".into(),
        },
        _ => DimensionSection {
            d_star: None,
            note: "threshold negative: the set is empty almost surely (dimension minus infinity)"
                .into(),
        },
    };

    let emptiness_estimate = match analysis.emptiness.probability {
        Some(v) => EmptinessEstimate {
            source: "analytic".into(),
            value: Some(v),
            bracket_high: None,
        },
        None => match &simulation {
            // the pgf recursion was undefined for this model; fall back to
            // the truncated Monte Carlo bracket
            Some(sim) => EmptinessEstimate {
                source: "monte_carlo".into(),
                value: Some(sim.emptiness.frequency),
                bracket_high: sim.emptiness.bracket_high,
            },
            None => EmptinessEstimate {
                source: "unavailable".into(),
                value: None,
                bracket_high: None,
            },
        },
    };

    Ok(ConsolidatedReport {
        model: model_path.to_string(),
        dimension,
        emptiness_estimate,
        analysis,
        simulation,
        dimension_estimate,
        checks,
    })
}
