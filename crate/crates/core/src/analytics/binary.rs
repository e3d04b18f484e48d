//! The binary dyadic case: ambient dimension one with two children per
//! vertex. Here the transition laws reduce to a handful of scalar
//! probabilities and the sufficient/necessary emptiness criteria close into a
//! complete classification.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::model::{EnvironmentModel, State};

use super::series::{period_growth_sign, periodic_series};
use super::{
    activity_threshold, survivor_count_pgf, threshold_sign, AnalyticsError,
};

/// Scalar summary of one stage: eta is the chance an off-parent recolors at
/// least one child on, gamma the mean number of on-children of an on-parent,
/// and varsigma the odds-bound series from this generation on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryStageRow {
    pub j: usize,
    pub eta: f64,
    pub gamma: f64,
    pub both_on_prob: f64,
    /// None encodes an infinite series.
    pub varsigma: Option<f64>,
}

/// Complete emptiness classification for the binary dyadic case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum BinaryClassification {
    /// Negative dimension threshold: empty with probability one.
    AlmostSurelyEmpty,
    /// On-parents eventually always keep a child on; the emptiness
    /// probability telescopes into an exact product.
    ProductFormula { emptiness: f64 },
    /// On-parents can die out infinitely often but recoloring mass is
    /// summable against the doubling generations; emptiness has positive
    /// probability, and is certain exactly when the flag is set.
    LightRecoloring { almost_surely_empty: bool },
    /// Recoloring mass diverges with a positive threshold; emptiness is not
    /// certain, and has probability zero exactly when the flag is set.
    HeavyRecoloring { emptiness_zero: bool },
    /// The threshold sits exactly at zero with divergent recoloring mass;
    /// the criteria do not decide this boundary.
    Unclassified { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryAnalysis {
    pub rows: Vec<BinaryStageRow>,
    /// Threshold from the binary formula: period average of log gamma over
    /// log 2. None encodes minus infinity.
    pub d_star: Option<f64>,
    pub classification: BinaryClassification,
}

fn varsigma(model: &EnvironmentModel, j: usize) -> f64 {
    // For m = 2 the factorial second moment is exactly twice the both-on mass.
    periodic_series(
        model,
        j,
        |st| st.offspring_factorial2(State::One),
        |st| st.offspring_mean(State::One),
    )
    .sum
}

/// Classify a binary dyadic model.
pub fn binary_dyadic_classification(
    model: &EnvironmentModel,
) -> Result<BinaryAnalysis, AnalyticsError> {
    if model.ambient_dim != 1 {
        return Err(AnalyticsError::WrongShape(format!(
            "binary dyadic case needs ambient dimension 1, got {}",
            model.ambient_dim
        )));
    }
    if model
        .prefix
        .iter()
        .chain(model.period())
        .any(|st| st.m != 2)
    {
        return Err(AnalyticsError::WrongShape(
            "binary dyadic case needs two children at every stage".into(),
        ));
    }

    let prefix_len = model.prefix_len();
    let period_len = model.period().len();
    let rows: Vec<BinaryStageRow> = (0..prefix_len + period_len)
        .map(|j| {
            let stage = model.stage(j);
            let off_dist = stage.offspring_distribution(State::Zero);
            let on_dist = stage.offspring_distribution(State::One);
            let vs = varsigma(model, j);
            BinaryStageRow {
                j,
                eta: 1.0 - off_dist[0],
                gamma: stage.offspring_mean(State::One),
                both_on_prob: on_dist[2],
                varsigma: vs.is_finite().then_some(vs),
            }
        })
        .collect();

    let d_star = activity_threshold(model).map(|_| {
        let period = model.period();
        let avg = period
            .iter()
            .map(|st| st.offspring_mean(State::One).ln())
            .sum::<f64>()
            / period.len() as f64;
        avg / 2.0f64.ln()
    });

    let sign = threshold_sign(model);
    if sign.is_none() || sign == Some(Ordering::Less) {
        return Ok(BinaryAnalysis {
            rows,
            d_star,
            classification: BinaryClassification::AlmostSurelyEmpty,
        });
    }
    let threshold = activity_threshold(model).expect("sign known");

    let tail_never_childless = model
        .period()
        .iter()
        .all(|st| st.offspring_never_none(State::One));
    if tail_never_childless {
        let mut from = 0;
        for (i, st) in model.prefix.iter().enumerate() {
            if !st.offspring_never_none(State::One) {
                from = i + 1;
            }
        }
        let base = survivor_count_pgf(model, from, 0.0)?;
        let mut log_product = 0.0f64;
        for g in from..prefix_len {
            let keep_off = model.stage(g).offspring_pgf(State::Zero, 0.0); // 1 - eta_g
            if keep_off == 0.0 {
                log_product = f64::NEG_INFINITY;
                break;
            }
            log_product += model.generation_size(g) * keep_off.ln();
        }
        if log_product.is_finite()
            && !model
                .period()
                .iter()
                .all(|st| st.offspring_certainly_none(State::Zero))
        {
            log_product = f64::NEG_INFINITY;
        }
        return Ok(BinaryAnalysis {
            rows,
            d_star,
            classification: BinaryClassification::ProductFormula {
                emptiness: base * log_product.exp(),
            },
        });
    }

    let tail_eta_zero = model
        .period()
        .iter()
        .all(|st| st.offspring_certainly_none(State::Zero));
    if tail_eta_zero {
        // recoloring mass sums: criterion for certain emptiness
        let vs = varsigma(model, threshold);
        let gamma_products_vanish =
            period_growth_sign(model, |st| st.offspring_mean(State::One)) == Ordering::Less;
        let eta_zero_onward = (threshold..prefix_len)
            .all(|g| model.stage(g).offspring_certainly_none(State::Zero));
        let no_on_vertex = survivor_count_pgf(model, threshold, 0.0)? == 1.0;
        let almost_surely_empty =
            vs.is_infinite() || gamma_products_vanish || (no_on_vertex && eta_zero_onward);
        return Ok(BinaryAnalysis {
            rows,
            d_star,
            classification: BinaryClassification::LightRecoloring { almost_surely_empty },
        });
    }

    if sign == Some(Ordering::Greater) {
        // the weighted recoloring series diverges iff some repeating stage
        // recolors with positive probability against a finite odds series
        let emptiness_zero = (0..period_len).any(|i| {
            let g = prefix_len + i;
            !model.stage(g).offspring_certainly_none(State::Zero)
                && varsigma(model, g + 1).is_finite()
        });
        return Ok(BinaryAnalysis {
            rows,
            d_star,
            classification: BinaryClassification::HeavyRecoloring { emptiness_zero },
        });
    }

    Ok(BinaryAnalysis {
        rows,
        d_star,
        classification: BinaryClassification::Unclassified {
            reason: "threshold is exactly zero while the weighted recoloring series diverges"
                .into(),
        },
    })
}
