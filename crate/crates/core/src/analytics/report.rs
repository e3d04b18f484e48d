//! Assembly of the full analytic report for one model: threshold, diagnostic
//! roots, extinction table, odds bounds, emptiness probability and the
//! criterion verdicts, in a JSON- and CSV-friendly shape.

use serde::{Deserialize, Serialize};

use crate::model::EnvironmentModel;

use super::binary::{binary_dyadic_classification, BinaryAnalysis};
use super::{
    certain_emptiness_criterion, d_j_sequence, d_star, emptiness_probability,
    extinction_probabilities, positive_emptiness_criterion, sigma_bounds, AnalyticsError,
    EmptinessRoute, Verdict, DEFAULT_DEPTH_CAP, DEFAULT_FIXED_POINT_TOL, DEFAULT_ROOT_TOL,
};

#[derive(Debug, Clone, Copy)]
pub struct AnalyzeOptions {
    /// Largest generation for the diagnostic tables and the emptiness limit.
    pub j_max: usize,
    pub root_tol: f64,
    pub fixed_point_tol: f64,
    pub depth_cap: usize,
    /// When set, also evaluate the averaged log Moran sum in truncated mode
    /// at the threshold exponent, as a finite-horizon diagnostic.
    pub rho_horizon: Option<usize>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            j_max: 20,
            root_tol: DEFAULT_ROOT_TOL,
            fixed_point_tol: DEFAULT_FIXED_POINT_TOL,
            depth_cap: DEFAULT_DEPTH_CAP,
            rho_horizon: None,
        }
    }
}

/// Finite-horizon check of the averaged log Moran sum against its exact
/// periodic value, at the threshold exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoTruncationDiagnostic {
    pub horizon: usize,
    pub s: f64,
    /// Running minimum of the partial averages up to the horizon.
    pub truncated: f64,
    /// Exact periodic-tail value (zero at the threshold by definition).
    pub exact: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionPoint {
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionEntry {
    pub j: usize,
    pub probability: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaEntry {
    pub j: usize,
    /// None encodes an infinite bound.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequencePoint {
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmptinessSummary {
    /// None when the pgf recursion is undefined for this model; consumers
    /// should fall back to a Monte Carlo estimate.
    pub probability: Option<f64>,
    pub error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<EmptinessRoute>,
    /// Generation at which the pgf recursion became undefined, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pgf_undefined_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub verdict: String,
    pub reason: String,
}

impl CriterionOutcome {
    fn from_result(res: Result<super::Criterion, AnalyticsError>) -> CriterionOutcome {
        match res {
            Ok(c) => CriterionOutcome {
                verdict: match c.verdict {
                    Verdict::Holds => "holds".into(),
                    Verdict::Fails => "fails".into(),
                    Verdict::Inconclusive => "inconclusive".into(),
                },
                reason: c.reason,
            },
            Err(e) => CriterionOutcome {
                verdict: "not_applicable".into(),
                reason: e.to_string(),
            },
        }
    }
}

/// The complete analytic output for one model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// None encodes minus infinity (the set is almost surely empty).
    pub d_star: Option<f64>,
    pub activity_threshold: Option<usize>,
    pub d_diagnostics: Vec<DimensionPoint>,
    pub extinction: Vec<ExtinctionEntry>,
    pub sigma: Vec<SigmaEntry>,
    /// The nonincreasing sequence of survivor-pgf values at the extinction
    /// probabilities; its limit is the emptiness probability.
    pub emptiness_sequence: Vec<SequencePoint>,
    pub emptiness: EmptinessSummary,
    /// Verdict for "empty with positive probability".
    pub positive_emptiness: CriterionOutcome,
    /// Verdict for "empty with probability one".
    pub certain_emptiness: CriterionOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binary: Option<BinaryAnalysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_truncation: Option<RhoTruncationDiagnostic>,
    /// Normalization convention used for the averaged log Moran sum and the
    /// diagnostic roots.
    pub convention: String,
}

/// Run the full analytic pipeline.
pub fn analyze(
    model: &EnvironmentModel,
    opts: &AnalyzeOptions,
) -> Result<AnalysisReport, AnalyticsError> {
    let threshold = super::activity_threshold(model);
    let d_star_value = d_star(model, opts.root_tol)?;
    let d_diagnostics = d_j_sequence(model, opts.j_max, opts.root_tol)?;
    let fs = extinction_probabilities(model, opts.j_max, opts.fixed_point_tol, opts.depth_cap);
    let extinction: Vec<ExtinctionEntry> = fs
        .iter()
        .enumerate()
        .map(|(j, e)| ExtinctionEntry {
            j,
            probability: e.probability,
            error: e.error,
        })
        .collect();
    let sigma: Vec<SigmaEntry> = (0..=opts.j_max)
        .map(|j| {
            let b = sigma_bounds(model, j);
            SigmaEntry {
                j,
                lower: b.lower.is_finite().then_some(b.lower),
                upper: b.upper.is_finite().then_some(b.upper),
            }
        })
        .collect();
    let (emptiness_summary, emptiness_sequence) =
        match emptiness_probability(model, opts.j_max, opts.fixed_point_tol) {
            Ok(e) => (
                EmptinessSummary {
                    probability: Some(e.value),
                    error: e.error,
                    route: Some(e.route),
                    pgf_undefined_at: e.pgf_undefined_at,
                },
                e.sequence
                    .iter()
                    .map(|&(j, value)| SequencePoint { j, value })
                    .collect(),
            ),
            Err(AnalyticsError::DivisionByZero { generation }) => (
                EmptinessSummary {
                    probability: None,
                    error: 0.0,
                    route: None,
                    pgf_undefined_at: Some(generation),
                },
                Vec::new(),
            ),
            Err(e) => return Err(e),
        };
    let binary = binary_dyadic_classification(model).ok();
    let rho_truncation = match (opts.rho_horizon, d_star_value) {
        (Some(h), Some(s)) => {
            let truncated = super::log_growth(model, s, Some(h))?;
            let exact = super::log_growth(model, s, None)?;
            Some(RhoTruncationDiagnostic {
                horizon: h,
                s,
                truncated: truncated.value,
                exact: exact.value,
            })
        }
        _ => None,
    };

    Ok(AnalysisReport {
        d_star: d_star_value,
        activity_threshold: threshold,
        d_diagnostics,
        extinction,
        sigma,
        emptiness_sequence,
        emptiness: emptiness_summary,
        positive_emptiness: CriterionOutcome::from_result(positive_emptiness_criterion(model)),
        certain_emptiness: CriterionOutcome::from_result(certain_emptiness_criterion(model)),
        binary,
        rho_truncation,
        convention: "averaged log Moran sums are normalized by the generation index j itself; \
                     diagnostic roots d_j solve the unnormalized partial log sum over \
                     [activity_threshold, j), whose zero is normalization-independent"
            .into(),
    })
}

impl AnalysisReport {
    /// CSV table (j, d_j, f_j, phi_f, sigma_lower, sigma_upper); infinite
    /// bounds print as `inf`, missing diagnostics as empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,d_j,f_j,phi_f,sigma_lower,sigma_upper\n");
        let max_j = self.extinction.len();
        for j in 0..max_j {
            let d_j = self
                .d_diagnostics
                .iter()
                .find(|p| p.j == j)
                .map(|p| p.value.to_string())
                .unwrap_or_default();
            let f_j = self
                .extinction
                .get(j)
                .map(|e| e.probability.to_string())
                .unwrap_or_default();
            let phi_f = self
                .emptiness_sequence
                .iter()
                .find(|p| p.j == j)
                .map(|p| p.value.to_string())
                .unwrap_or_default();
            let (lo, hi) = self
                .sigma
                .get(j)
                .map(|s| {
                    (
                        s.lower.map_or("inf".into(), |v| v.to_string()),
                        s.upper.map_or("inf".into(), |v| v.to_string()),
                    )
                })
                .unwrap_or_default();
            out.push_str(&format!("{j},{d_j},{f_j},{phi_f},{lo},{hi}\n"));
        }
        out
    }
}
