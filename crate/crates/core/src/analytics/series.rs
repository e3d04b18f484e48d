//! Exact evaluation of the tail series that bound extinction probabilities.
//!
//! All of the bound sequences used here share one shape:
//!
//!   S(j) = sum_{n >= j} A_n / (B_n * prod_{l=j}^{n} B_l)
//!
//! together with the limsup / liminf of 1 / prod_{l=j}^{n} B_l as n grows.
//! Because stages are eventually periodic, the tail of the series is exactly
//! geometric: one period's worth of terms scales by the reciprocal of the
//! period product at every repetition. That makes the sum, the limsup and the
//! liminf exactly computable — no truncation is involved.

use crate::model::{EnvironmentModel, StageSpec};

/// Period products within this tolerance of one are treated as exactly one.
const PERIOD_PRODUCT_TOLERANCE: f64 = 1e-12;

/// Per-stage values within this tolerance of their symbolic targets (a zero
/// numerator, a unit mean) are snapped there, so that one-ulp residue from
/// weight arithmetic cannot flip a convergence verdict.
const STAGE_SNAP: f64 = 1e-12;

fn snap_numerator(a: f64) -> f64 {
    if a.abs() <= STAGE_SNAP { 0.0 } else { a.max(0.0) }
}

fn snap_denominator(b: f64) -> f64 {
    if (b - 1.0).abs() <= STAGE_SNAP { 1.0 } else { b }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TailSeries {
    /// The series sum; `f64::INFINITY` when it diverges.
    pub sum: f64,
    /// limsup of the reciprocal running product.
    pub limsup_inv: f64,
    /// liminf of the reciprocal running product.
    pub liminf_inv: f64,
}

impl TailSeries {
    fn diverged() -> TailSeries {
        TailSeries {
            sum: f64::INFINITY,
            limsup_inv: f64::INFINITY,
            liminf_inv: f64::INFINITY,
        }
    }
}

/// Decide how the period product of `den` over the tail compares to one.
/// Positive means growth (reciprocal products vanish), negative means decay
/// (reciprocal products blow up), zero means exactly periodic products.
pub(crate) fn period_growth_sign(
    model: &EnvironmentModel,
    den: impl Fn(&StageSpec) -> f64,
) -> std::cmp::Ordering {
    let g: f64 = model.period().iter().map(den).product();
    if g > 1.0 + PERIOD_PRODUCT_TOLERANCE {
        std::cmp::Ordering::Greater
    } else if g < 1.0 - PERIOD_PRODUCT_TOLERANCE {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Equal
    }
}

/// Evaluate S(start) for nonnegative per-stage numerators and denominators.
pub(crate) fn periodic_series(
    model: &EnvironmentModel,
    start: usize,
    num: impl Fn(&StageSpec) -> f64,
    den: impl Fn(&StageSpec) -> f64,
) -> TailSeries {
    let head_end = start.max(model.prefix_len());
    let mut running = 1.0f64;
    let mut sum = 0.0f64;
    for n in start..head_end {
        let stage = model.stage(n);
        let b = snap_denominator(den(stage));
        if b == 0.0 {
            return TailSeries::diverged();
        }
        running *= b;
        sum += snap_numerator(num(stage)) / (b * running);
    }

    let period_len = model.period().len();
    let mut period_product = 1.0f64;
    let mut first_period_sum = 0.0f64;
    let mut q = running;
    let mut q_min = f64::INFINITY;
    let mut q_max = 0.0f64;
    for i in 0..period_len {
        let stage = model.stage(head_end + i);
        let b = snap_denominator(den(stage));
        if b == 0.0 {
            return TailSeries::diverged();
        }
        period_product *= b;
        q *= b;
        first_period_sum += snap_numerator(num(stage)) / (b * q);
        q_min = q_min.min(q);
        q_max = q_max.max(q);
    }

    if period_product > 1.0 + PERIOD_PRODUCT_TOLERANCE {
        TailSeries {
            sum: sum + first_period_sum * period_product / (period_product - 1.0),
            limsup_inv: 0.0,
            liminf_inv: 0.0,
        }
    } else if period_product < 1.0 - PERIOD_PRODUCT_TOLERANCE {
        TailSeries::diverged()
    } else {
        // exactly periodic running products
        TailSeries {
            sum: if first_period_sum > 0.0 {
                f64::INFINITY
            } else {
                sum
            },
            limsup_inv: 1.0 / q_min,
            liminf_inv: 1.0 / q_max,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::measures::{RatioLaw, State, TransitionLaw};
    use crate::model::{StageKind, StageSpec, TailRule};

    fn bernoulli_model(p: f64, m: usize) -> EnvironmentModel {
        EnvironmentModel {
            initial_one_prob: 1.0,
            ambient_dim: 1,
            prefix: vec![],
            tail: TailRule::Constant {
                stage: StageSpec {
                    m,
                    c: None,
                    kind: StageKind::Separated {
                        ratio_law: RatioLaw::PointMass { ratios: vec![0.5; m] },
                        trans0: TransitionLaw::ProductBernoulli { p: 0.0 },
                        trans1: TransitionLaw::ProductBernoulli { p },
                    },
                },
            },
            geometry: None,
        }
    }

    #[test]
    fn geometric_series_closed_form() {
        // m=2, p=0.9: mean 1.8, phi''(1) = 2 * 0.81 = 1.62.
        // sum_{n>=0} 1.62 / (1.8 * 1.8^{n+1}) = (1.62/1.8) * (1/0.8) = 1.125
        let model = bernoulli_model(0.9, 2);
        let ts = periodic_series(
            &model,
            0,
            |st| st.offspring_factorial2(State::One),
            |st| st.offspring_mean(State::One),
        );
        assert!((ts.sum - 1.125).abs() < 1e-12);
        assert_eq!(ts.limsup_inv, 0.0);
        assert_eq!(ts.liminf_inv, 0.0);
    }

    #[test]
    fn subcritical_tail_diverges() {
        let model = bernoulli_model(0.4, 2); // mean 0.8 < 1
        let ts = periodic_series(
            &model,
            0,
            |st| st.offspring_factorial2(State::One),
            |st| st.offspring_mean(State::One),
        );
        assert!(ts.sum.is_infinite());
        assert!(ts.limsup_inv.is_infinite());
    }

    #[test]
    fn critical_deterministic_line() {
        // a single child with certainty: mean 1, factorial2 = 0
        let model = EnvironmentModel {
            initial_one_prob: 1.0,
            ambient_dim: 1,
            prefix: vec![],
            tail: TailRule::Constant {
                stage: StageSpec {
                    m: 2,
                    c: None,
                    kind: StageKind::Separated {
                        ratio_law: RatioLaw::PointMass { ratios: vec![0.5, 0.5] },
                        trans0: TransitionLaw::ProductBernoulli { p: 0.0 },
                        trans1: TransitionLaw::Microcanonical { count: 1 },
                    },
                },
            },
            geometry: None,
        };
        let ts = periodic_series(
            &model,
            0,
            |st| st.offspring_factorial2(State::One),
            |st| st.offspring_mean(State::One),
        );
        assert_eq!(ts.sum, 0.0);
        assert_eq!(ts.limsup_inv, 1.0);
        assert_eq!(ts.liminf_inv, 1.0);
    }
}
