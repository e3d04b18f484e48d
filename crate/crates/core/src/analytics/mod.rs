//! Closed-form analytics for the tree-indexed construction: the dimension
//! threshold `d_star`, extinction probabilities of the associated branching
//! processes in varying environment, the survivor-count pgf recursion, series
//! bounds on extinction odds, the emptiness probability, and the
//! emptiness-criterion classifications.

mod binary;
mod report;
mod series;

pub use binary::{
    binary_dyadic_classification, BinaryAnalysis, BinaryClassification, BinaryStageRow,
};
pub use report::{
    analyze, AnalysisReport, AnalyzeOptions, CriterionOutcome, DimensionPoint, EmptinessSummary,
    ExtinctionEntry, SequencePoint, SigmaEntry,
};

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EnvironmentModel, State};
use series::{period_growth_sign, periodic_series};

/// Default absolute tolerance for root finding.
pub const DEFAULT_ROOT_TOL: f64 = 1e-9;
/// Default tolerance for fixed-point iterations.
pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-12;
/// Cap on fixed-point iteration depth.
pub const DEFAULT_DEPTH_CAP: usize = 10_000;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("bisection bracket expansion exceeded 2^10 doublings (degenerate model)")]
    NonBracketed,
    #[error("pgf recursion undefined at generation {generation}: off-state pgf vanishes while on-state pgf does not")]
    DivisionByZero { generation: usize },
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("exponent s = {s} outside (0, d_star)")]
    OutOfRange { s: f64 },
    #[error("horizon {horizon} shorter than prefix plus one period ({min})")]
    HorizonTooShort { horizon: usize, min: usize },
    #[error("model has the wrong shape: {0}")]
    WrongShape(String),
}

/// alpha_{s,j}: the expected Moran sum at generation `j`.
pub fn moran_sum(model: &EnvironmentModel, s: f64, j: usize) -> f64 {
    model.stage(j).moran_sum(s)
}

/// Least generation from which the mean number of on-children stays positive
/// forever; `None` when no such generation exists (some tail stage kills
/// every line, so the construction dies with certainty).
pub fn activity_threshold(model: &EnvironmentModel) -> Option<usize> {
    if model
        .period()
        .iter()
        .any(|st| st.offspring_mean(State::One) == 0.0)
    {
        return None;
    }
    let mut threshold = 0;
    for (i, st) in model.prefix.iter().enumerate() {
        if st.offspring_mean(State::One) == 0.0 {
            threshold = i + 1;
        }
    }
    Some(threshold)
}

/// How the averaged log Moran sum was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RhoMode {
    /// Periodic-tail average; the liminf is attained exactly.
    Exact,
    /// Running minimum of partial averages up to a horizon.
    Truncated { horizon: usize },
    /// The activity threshold is infinite; the value is minus infinity.
    Degenerate,
}

/// Value of the averaged log Moran sum at one exponent.
#[derive(Debug, Clone, Copy)]
pub struct RhoEvaluation {
    pub s: f64,
    pub value: f64,
    pub mode: RhoMode,
    pub activity_threshold: Option<usize>,
}

/// rho(s): the Cesaro liminf of log alpha_{s,n}. With an eventually periodic
/// environment the liminf equals the period average of the logs (the prefix
/// washes out of the average), so `horizon: None` evaluates it exactly.
/// `horizon: Some(h)` instead reports the running minimum of the partial
/// averages up to `h`.
pub fn log_growth(
    model: &EnvironmentModel,
    s: f64,
    horizon: Option<usize>,
) -> Result<RhoEvaluation, AnalyticsError> {
    let Some(threshold) = activity_threshold(model) else {
        return Ok(RhoEvaluation {
            s,
            value: f64::NEG_INFINITY,
            mode: RhoMode::Degenerate,
            activity_threshold: None,
        });
    };
    match horizon {
        None => {
            let period = model.period();
            let avg = period
                .iter()
                .map(|st| st.moran_sum(s).ln())
                .sum::<f64>()
                / period.len() as f64;
            Ok(RhoEvaluation {
                s,
                value: avg,
                mode: RhoMode::Exact,
                activity_threshold: Some(threshold),
            })
        }
        Some(h) => {
            let min_h = model.prefix_len() + model.period().len();
            if h < min_h {
                return Err(AnalyticsError::HorizonTooShort {
                    horizon: h,
                    min: min_h,
                });
            }
            let mut acc = 0.0;
            let mut best = f64::INFINITY;
            for n in threshold..h {
                acc += moran_sum(model, s, n).ln();
                best = best.min(acc / (n + 1) as f64);
            }
            Ok(RhoEvaluation {
                s,
                value: best,
                mode: RhoMode::Truncated { horizon: h },
                activity_threshold: Some(threshold),
            })
        }
    }
}

/// Sign of the dimension threshold, decided from the period product of the
/// mean Moran sums rather than from a bisected root, so that criticality is
/// recognized exactly.
pub(crate) fn threshold_sign(model: &EnvironmentModel) -> Option<Ordering> {
    activity_threshold(model)?;
    // the Moran sum at s = 0 is exactly the mean number of on-children
    Some(period_growth_sign(model, |st| st.offspring_mean(State::One)))
}

fn bisect_decreasing(
    f: impl Fn(f64) -> f64,
    tol: f64,
) -> Result<f64, AnalyticsError> {
    let mut lo = -64.0f64;
    let mut hi = 64.0f64;
    let mut doublings = 0;
    while f(lo) <= 0.0 {
        lo *= 2.0;
        doublings += 1;
        if doublings > 10 {
            return Err(AnalyticsError::NonBracketed);
        }
    }
    while f(hi) >= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 10 {
            return Err(AnalyticsError::NonBracketed);
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// d_star: the unique zero of `rho`, or `None` for minus infinity (the
/// construction is almost surely empty by the dimension dichotomy).
pub fn d_star(model: &EnvironmentModel, tol: f64) -> Result<Option<f64>, AnalyticsError> {
    if activity_threshold(model).is_none() {
        return Ok(None);
    }
    // rho is affine-like and strictly decreasing in s; the exact period
    // average keeps the bisection noise-free.
    let value = bisect_decreasing(
        |s| log_growth(model, s, None).expect("threshold checked").value,
        tol,
    )?;
    Ok(Some(value))
}

/// Diagnostic roots d_j: for each j past the activity threshold, the zero of
/// the partial log sum over generations [threshold, j). Their liminf is
/// d_star; finite-j values show how fast the environment settles.
pub fn d_j_sequence(
    model: &EnvironmentModel,
    j_max: usize,
    tol: f64,
) -> Result<Vec<DimensionPoint>, AnalyticsError> {
    let Some(threshold) = activity_threshold(model) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for j in (threshold + 1)..=j_max {
        let root = bisect_decreasing(
            |s| {
                (threshold..j)
                    .map(|n| moran_sum(model, s, n).ln())
                    .sum::<f64>()
            },
            tol,
        )?;
        out.push(DimensionPoint { j, value: root });
    }
    Ok(out)
}

/// phi_{t,j}(z): pgf of the number of on-children of a generation-j parent.
pub fn offspring_pgf(model: &EnvironmentModel, t: State, j: usize, z: f64) -> f64 {
    model.stage(j).offspring_pgf(t, z)
}

/// First and second derivatives of phi_{t,j} at z = 1, in closed form.
pub fn offspring_pgf_derivatives(model: &EnvironmentModel, t: State, j: usize) -> (f64, f64) {
    let stage = model.stage(j);
    (stage.offspring_mean(t), stage.offspring_factorial2(t))
}

/// Series bounds on the extinction odds 1/(1 - f_j); both may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaBounds {
    pub lower: f64,
    pub upper: f64,
}

impl SigmaBounds {
    /// The extinction-probability sandwich implied by the odds bounds:
    /// 1 - 1/lower <= f_j <= 1 - 1/upper.
    pub fn f_low(&self) -> f64 {
        1.0 - 1.0 / self.lower
    }

    pub fn f_high(&self) -> f64 {
        if self.upper.is_infinite() {
            1.0
        } else {
            1.0 - 1.0 / self.upper
        }
    }
}

/// Evaluate the two odds-bound series at generation `j`, exactly (the tail
/// contribution is a geometric sum over periods; the limsup/liminf terms are
/// zero when the period product of means exceeds one, infinite when it is
/// below one, and cycle over one period when it equals one).
pub fn sigma_bounds(model: &EnvironmentModel, j: usize) -> SigmaBounds {
    let mean = |st: &crate::model::StageSpec| st.offspring_mean(State::One);
    let lower_series = periodic_series(
        model,
        j,
        |st| st.offspring_mean(State::One) + st.offspring_pgf(State::One, 0.0) - 1.0,
        mean,
    );
    let upper_series = periodic_series(model, j, |st| st.offspring_factorial2(State::One), mean);
    SigmaBounds {
        lower: 1.0f64.max(lower_series.sum + lower_series.limsup_inv),
        upper: upper_series.sum + upper_series.liminf_inv,
    }
}

/// One extinction probability with its certified error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extinction {
    pub probability: f64,
    pub error: f64,
}

/// Least generation from which the on-state law never produces an all-off
/// child vector, so extinction from there is impossible (f = 0 exactly);
/// `None` when the on-chain can die out at infinitely many generations.
pub fn extinction_zero_from(model: &EnvironmentModel) -> Option<usize> {
    if !model.period().iter().all(|st| st.offspring_never_none(State::One)) {
        return None;
    }
    let mut from = 0;
    for (i, st) in model.prefix.iter().enumerate() {
        if !st.offspring_never_none(State::One) {
            from = i + 1;
        }
    }
    Some(from)
}

/// f_j for j in [0, j_max]: extinction probabilities of the branching process
/// in varying environment started at generation j, computed as the monotone
/// limit of composed pgfs at zero. Exact shortcuts: f_j = 1 whenever the
/// lower odds bound is infinite, and f_j = 0 when no on-state law from j on
/// can produce a childless vertex.
pub fn extinction_probabilities(
    model: &EnvironmentModel,
    j_max: usize,
    tol: f64,
    depth_cap: usize,
) -> Vec<Extinction> {
    let prefix_len = model.prefix_len();
    let period_len = model.period().len();

    // Tail values, one per phase. The three regimes are phase-uniform.
    let tail_sigma_lower_infinite = sigma_bounds(model, prefix_len).lower.is_infinite();
    let tail_never_childless = model
        .period()
        .iter()
        .all(|st| st.offspring_never_none(State::One));

    let mut tail = vec![0.0f64; period_len];
    let mut stop_delta = 0.0f64;
    // the symbolic zero takes precedence: it is exact, and the series
    // shortcut could only disagree through rounding noise
    if tail_never_childless {
        // composed pgfs at zero stay exactly zero
    } else if tail_sigma_lower_infinite {
        tail.fill(1.0);
    } else {
        // The phase-0 value is the smallest fixed point of the one-period
        // pgf composition. Bisection stays uniformly accurate however close
        // the period product sits to one, where plain functional iteration
        // stalls; the remaining phases follow by the one-step recurrence.
        let compose = |z: f64| {
            let mut v = z;
            for i in (0..period_len).rev() {
                v = model.stage(prefix_len + i).offspring_pgf(State::One, v);
            }
            v
        };
        let mut upper = None;
        for k in 1..=60 {
            let hi = 1.0 - 0.5f64.powi(k);
            if compose(hi) < hi {
                upper = Some(hi);
                break;
            }
        }
        match upper {
            // the fixed point is within a rounding error of one
            None => tail.fill(1.0),
            Some(mut hi) => {
                let mut lo = 0.0f64;
                let mut iterations = 0;
                while hi - lo > tol.min(1e-15) && iterations < depth_cap {
                    let mid = 0.5 * (lo + hi);
                    if compose(mid) > mid {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    iterations += 1;
                }
                tail[0] = 0.5 * (lo + hi);
                for i in (1..period_len).rev() {
                    let stage = model.stage(prefix_len + i);
                    tail[i] = stage.offspring_pgf(State::One, tail[(i + 1) % period_len]);
                }
                stop_delta = (hi - lo).max(1e-15);
            }
        }
    }

    // Prefix values by the one-step recurrence f_j = phi_{1,j}(f_{j+1}).
    let len = (j_max + 1).max(prefix_len + 1);
    let mut all = vec![0.0f64; len];
    for (j, slot) in all.iter_mut().enumerate().skip(prefix_len) {
        *slot = tail[(j - prefix_len) % period_len];
    }
    for j in (0..prefix_len).rev() {
        all[j] = model.stage(j).offspring_pgf(State::One, all[j + 1]);
    }

    (0..=j_max)
        .map(|j| {
            let bounds = sigma_bounds(model, j);
            let probability = if bounds.lower.is_infinite() {
                1.0
            } else {
                all[j]
            };
            let gap = (bounds.f_high() - bounds.f_low()).max(0.0);
            Extinction {
                probability,
                error: stop_delta.min(gap),
            }
        })
        .collect()
}

/// P(the branching process started at generation j is dead after n more
/// generations): the n-fold pgf composition at zero.
pub fn extinction_by(model: &EnvironmentModel, j: usize, n: usize) -> f64 {
    let mut z = 0.0;
    for g in (j..j + n).rev() {
        z = model.stage(g).offspring_pgf(State::One, z);
    }
    z
}

/// Phi_j(z): pgf of the number of on-vertices in generation j, computed by
/// the downward recursion with generation sizes kept in log space.
///
/// The ratio form divides by the off-state pgf; when that vanishes, or when
/// off-parents out-produce on-parents and the ratio argument escapes the
/// unit interval (which loses the factorization's cancellation), evaluation
/// switches to the subtree-pair recursion, which computes the same function
/// without ratios or generation-sized exponents and stays stable for any
/// z in [0, 1].
pub fn survivor_count_pgf(
    model: &EnvironmentModel,
    j: usize,
    z: f64,
) -> Result<f64, AnalyticsError> {
    let in_unit = (0.0..=1.0).contains(&z);
    let mut u = z;
    let mut log_total = 0.0f64;
    for g in (0..j).rev() {
        let stage = model.stage(g);
        let phi0 = stage.offspring_pgf(State::Zero, u);
        let phi1 = stage.offspring_pgf(State::One, u);
        if phi0 == 0.0 {
            // every term of E[phi1^{#S} phi0^{count-#S}] carries a zero factor
            if phi1 == 0.0 && log_total.is_finite() {
                return Ok(0.0);
            }
            if in_unit {
                return Ok(survivor_count_pgf_pairs(model, j, z));
            }
            return Err(AnalyticsError::DivisionByZero { generation: g });
        }
        if phi0 != 1.0 {
            log_total += model.generation_size(g) * phi0.ln();
        }
        u = phi1 / phi0;
        if u > 1.0 && in_unit {
            return Ok(survivor_count_pgf_pairs(model, j, z));
        }
    }
    let base = (1.0 - model.initial_one_prob) + model.initial_one_prob * u;
    if base == 0.0 {
        return Ok(0.0);
    }
    if log_total == 0.0 {
        return Ok(base);
    }
    Ok((log_total + base.ln()).exp())
}

/// Phi_j(z) for z in [0, 1] by the subtree-pair recursion: carry the log of
/// the conditional pgf of the generation-j on-count below one on vertex and
/// below one off vertex; each upward step is a log-sum-exp over the
/// offspring-count distribution. Every term is nonpositive, so there is no
/// cancellation and no division.
fn survivor_count_pgf_pairs(model: &EnvironmentModel, j: usize, z: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&z));
    // k * l with the convention 0 * (-inf) = 0
    fn scale(k: usize, l: f64) -> f64 {
        if k == 0 { 0.0 } else { k as f64 * l }
    }
    fn step(dist: &[f64], m: usize, log_on: f64, log_off: f64) -> f64 {
        let mut max_term = f64::NEG_INFINITY;
        for (k, &w) in dist.iter().enumerate() {
            if w > 0.0 {
                let t = w.ln() + scale(k, log_on) + scale(m - k, log_off);
                max_term = max_term.max(t);
            }
        }
        if max_term == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let mut acc = 0.0f64;
        for (k, &w) in dist.iter().enumerate() {
            if w > 0.0 {
                acc += (w.ln() + scale(k, log_on) + scale(m - k, log_off) - max_term).exp();
            }
        }
        max_term + acc.ln()
    }

    let mut log_on = if z > 0.0 { z.ln() } else { f64::NEG_INFINITY };
    let mut log_off = 0.0f64;
    for g in (0..j).rev() {
        let stage = model.stage(g);
        let next_on = step(&stage.offspring_distribution(State::One), stage.m, log_on, log_off);
        let next_off = step(&stage.offspring_distribution(State::Zero), stage.m, log_on, log_off);
        log_on = next_on;
        log_off = next_off;
    }
    let pi = model.initial_one_prob;
    let on_part = if pi > 0.0 { pi * log_on.exp() } else { 0.0 };
    let off_part = if pi < 1.0 { (1.0 - pi) * log_off.exp() } else { 0.0 };
    on_part + off_part
}

/// How the emptiness probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptinessRoute {
    /// Negative dimension threshold: empty with probability one.
    ThresholdNegative,
    /// Some f_{j*} = 0: the telescoped product formula, evaluated exactly.
    ClosedFormProduct,
    /// The decreasing limit of Phi_j(f_j).
    LimitSequence,
}

#[derive(Debug, Clone)]
pub struct EmptinessProbability {
    pub value: f64,
    pub error: f64,
    pub route: EmptinessRoute,
    /// The decreasing sequence (j, Phi_j(f_j)), where computable.
    pub sequence: Vec<(usize, f64)>,
    /// Set when some Phi_j(f_j) could not be evaluated by the recursion.
    pub pgf_undefined_at: Option<usize>,
}

/// P(the limit set is empty). For a negative threshold the answer is one; when
/// some f_{j*} vanishes the telescoped product formula applies and is exact
/// for periodic tails (the log series is zero when every tail stage keeps
/// off-parents childless, minus infinity otherwise); in all remaining cases
/// the decreasing sequence Phi_j(f_j) is evaluated up to `j_max`.
pub fn emptiness_probability(
    model: &EnvironmentModel,
    j_max: usize,
    tol: f64,
) -> Result<EmptinessProbability, AnalyticsError> {
    if activity_threshold(model).is_none() || threshold_sign(model) == Some(Ordering::Less) {
        return Ok(EmptinessProbability {
            value: 1.0,
            error: 0.0,
            route: EmptinessRoute::ThresholdNegative,
            sequence: Vec::new(),
            pgf_undefined_at: None,
        });
    }

    let fs = extinction_probabilities(model, j_max, tol, DEFAULT_DEPTH_CAP);
    let mut sequence = Vec::with_capacity(j_max + 1);
    let mut pgf_undefined_at = None;
    for (j, f) in fs.iter().enumerate().take(j_max + 1) {
        match survivor_count_pgf(model, j, f.probability) {
            Ok(v) => sequence.push((j, v)),
            Err(AnalyticsError::DivisionByZero { .. }) => {
                pgf_undefined_at = Some(j);
                break;
            }
            Err(e) => return Err(e),
        }
    }

    if let Some(from) = extinction_zero_from(model) {
        // Phi_{j*}(0) * prod_{g >= j*} phi_{0,g}(0)^{generation size}
        let base = survivor_count_pgf(model, from, 0.0)?;
        let mut log_product = 0.0f64;
        for g in from..model.prefix_len() {
            let v = model.stage(g).offspring_pgf(State::Zero, 0.0);
            if v == 0.0 {
                log_product = f64::NEG_INFINITY;
                break;
            }
            log_product += model.generation_size(g) * v.ln();
        }
        if log_product.is_finite()
            && !model
                .period()
                .iter()
                .all(|st| st.offspring_certainly_none(State::Zero))
        {
            // some repeating stage re-creates on-vertices with positive
            // probability; the product over ever-growing generations is zero
            log_product = f64::NEG_INFINITY;
        }
        return Ok(EmptinessProbability {
            value: base * log_product.exp(),
            error: 0.0,
            route: EmptinessRoute::ClosedFormProduct,
            sequence,
            pgf_undefined_at,
        });
    }

    let value = sequence
        .last()
        .map(|&(_, v)| v)
        .ok_or(AnalyticsError::DivisionByZero {
            generation: pgf_undefined_at.unwrap_or(0),
        })?;
    let error = if sequence.len() >= 2 {
        (sequence[sequence.len() - 2].1 - value).abs()
    } else {
        tol
    };
    Ok(EmptinessProbability {
        value,
        error,
        route: EmptinessRoute::LimitSequence,
        sequence,
        pgf_undefined_at,
    })
}

/// Verdict of a sufficient/necessary criterion pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub verdict: Verdict,
    pub reason: String,
}

fn criteria_preconditions(model: &EnvironmentModel) -> Result<(), AnalyticsError> {
    match threshold_sign(model) {
        None | Some(Ordering::Less) => Err(AnalyticsError::PreconditionUnmet(
            "dimension threshold is negative; the set is empty with probability one".into(),
        )),
        _ => {
            if extinction_zero_from(model).is_some() {
                Err(AnalyticsError::PreconditionUnmet(
                    "some extinction probability vanishes; the closed-form product applies instead".into(),
                ))
            } else {
                Ok(())
            }
        }
    }
}

/// Criterion for P(empty) > 0. The sufficient side asks for convergence of
/// the series of -generation_size * log phi_0 evaluated at the lower
/// extinction sandwich; against geometrically growing generation sizes the
/// tail terms must vanish exactly, which is decidable per stage. The
/// necessary side does the same with the upper sandwich and is decisive only
/// for a strictly positive threshold.
pub fn positive_emptiness_criterion(
    model: &EnvironmentModel,
) -> Result<Criterion, AnalyticsError> {
    criteria_preconditions(model)?;
    let prefix_len = model.prefix_len();
    let period_len = model.period().len();

    let term_vanishes = |g: usize, lower: bool| -> bool {
        let stage = model.stage(g);
        if stage.offspring_certainly_none(State::Zero) {
            return true;
        }
        let bounds = sigma_bounds(model, g + 1);
        let sigma = if lower { bounds.lower } else { bounds.upper };
        sigma.is_infinite()
    };

    let sufficient = (0..period_len).all(|i| term_vanishes(prefix_len + i, true));
    if sufficient {
        return Ok(Criterion {
            verdict: Verdict::Holds,
            reason: "sufficient series converges: every repeating stage keeps off-parents childless or has an infinite lower odds bound".into(),
        });
    }
    let necessary_diverges = (0..period_len).any(|i| !term_vanishes(prefix_len + i, false));
    if threshold_sign(model) == Some(Ordering::Greater) && necessary_diverges {
        return Ok(Criterion {
            verdict: Verdict::Fails,
            reason: "necessary series diverges with a positive threshold: the set is empty with probability zero".into(),
        });
    }
    Ok(Criterion {
        verdict: Verdict::Inconclusive,
        reason: if threshold_sign(model) == Some(Ordering::Equal) {
            "threshold is exactly zero: the necessary side degenerates".into()
        } else {
            "neither series side is decisive".into()
        },
    })
}

/// Criterion for P(empty) = 1: holds when the lower odds bound at the
/// activity threshold is infinite, or when no on-vertex can ever appear
/// (Phi at zero equals one and off-parents stay childless forever); fails
/// when the upper odds bound is finite and on-vertices appear with positive
/// probability.
pub fn certain_emptiness_criterion(
    model: &EnvironmentModel,
) -> Result<Criterion, AnalyticsError> {
    criteria_preconditions(model)?;
    let threshold = activity_threshold(model).expect("checked by preconditions");
    let bounds = sigma_bounds(model, threshold);

    let all_off_stay_off = (threshold..model.prefix_len())
        .all(|g| model.stage(g).offspring_certainly_none(State::Zero))
        && model
            .period()
            .iter()
            .all(|st| st.offspring_certainly_none(State::Zero));
    let no_on_vertex = match survivor_count_pgf(model, threshold, 0.0) {
        Ok(v) => Some(v == 1.0),
        Err(AnalyticsError::DivisionByZero { .. }) => None,
        Err(e) => return Err(e),
    };
    let bracket = no_on_vertex.map(|b| b && all_off_stay_off);

    if bounds.lower.is_infinite() || bracket == Some(true) {
        return Ok(Criterion {
            verdict: Verdict::Holds,
            reason: "every line dies: infinite lower odds bound, or no on-vertex is ever created".into(),
        });
    }
    if bounds.upper.is_finite() && bracket == Some(false) {
        return Ok(Criterion {
            verdict: Verdict::Fails,
            reason: "finite upper odds bound and on-vertices appear with positive probability".into(),
        });
    }
    Ok(Criterion {
        verdict: Verdict::Inconclusive,
        reason: "odds bounds disagree about divergence".into(),
    })
}

/// Bound on the probability that the ratio-weighted flow vanishes, valid for
/// exponents strictly between 0 and d_star.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowVanishingBound {
    pub s: f64,
    pub j: usize,
    /// The series value; the vanishing probability is at most 1 - 1/varsigma.
    pub varsigma: f64,
    pub bound: f64,
}

/// varsigma_{s,j}: the odds-bound series built from the percolation pgf
/// derivatives (first derivative at one equals the Moran sum).
pub fn flow_vanishing_bound(
    model: &EnvironmentModel,
    s: f64,
    j: usize,
) -> Result<FlowVanishingBound, AnalyticsError> {
    if s <= 0.0 {
        return Err(AnalyticsError::OutOfRange { s });
    }
    let growth = log_growth(model, s, None)?;
    // negated so that a NaN growth value is rejected as out of range
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(growth.value > 0.0) {
        // rho(s) <= 0 means s >= d_star
        return Err(AnalyticsError::OutOfRange { s });
    }
    let series = periodic_series(
        model,
        j,
        |st| st.moran_pair_sum(s),
        |st| st.moran_sum(s),
    );
    let varsigma = series.sum;
    Ok(FlowVanishingBound {
        s,
        j,
        varsigma,
        bound: if varsigma.is_infinite() {
            1.0
        } else {
            1.0 - 1.0 / varsigma
        },
    })
}

/// Unique root of `sum_k ratios[k]^s = 1`: the similarity exponent of a
/// deterministic construction with these contraction ratios.
pub fn moran_exponent(ratios: &[f64], tol: f64) -> Result<f64, AnalyticsError> {
    if ratios.is_empty() || ratios.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(AnalyticsError::WrongShape(
            "ratios must be a nonempty vector with entries in (0,1)".into(),
        ));
    }
    if ratios.len() == 1 {
        return Ok(0.0);
    }
    bisect_decreasing(
        |s| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0,
        tol,
    )
}
