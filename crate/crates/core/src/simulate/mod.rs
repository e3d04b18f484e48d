//! Monte Carlo engine: reproducible sampling of the tree-indexed chain,
//! truncated min-cut flows, martingale diagnostics, emptiness frequencies and
//! box-counting dimension estimates.
//!
//! Determinism contract: identical (model, seed, depth) produce bit-identical
//! results regardless of worker count or traversal order, because every
//! vertex draws from a stream keyed by its path from the root. Replicas are
//! independent work items; aggregation is order-independent.

mod branching;
mod draw;
pub mod rng;
mod tree;

pub use branching::{branching_sample, branching_sample_with_rng, BranchingSample, POPULATION_CAP};
pub use tree::{sample_tree, sample_tree_replica, CubeSet, FlowEstimate, NodeId, Pgm, SampledTree};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics;
use crate::model::{EnvironmentModel, GeometryRule, State};

use draw::draw_children;
use rng::{child_seed, root_seed, vertex_rng};

/// Most exponents a single streaming pass can track.
pub const MAX_S_GRID: usize = 4;

/// Resource guard expressed in visited vertices per replica.
#[derive(Debug, Clone, Copy)]
pub struct SimBudget {
    pub max_nodes: u64,
}

impl Default for SimBudget {
    fn default() -> Self {
        SimBudget {
            max_nodes: 100_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("node budget exceeded: {required} nodes requested, budget {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("wrong geometry: {0}")]
    WrongGeometry(String),
    #[error("every replica died before the regression window")]
    AllExtinct,
    #[error("martingale normalizer vanishes at generation {generation}")]
    UndefinedNormalizer { generation: usize },
    #[error("at most {MAX_S_GRID} exponents per pass")]
    TooManyExponents,
}

/// Configuration of a replicated streaming run.
#[derive(Debug, Clone)]
pub struct ReplicaConfig {
    pub depth: usize,
    pub replicas: usize,
    pub seed: u64,
    /// Exponents for flow and weighted-survivor tracking (may be empty).
    pub s_grid: Vec<f64>,
    pub workers: usize,
    pub budget: SimBudget,
}

/// Per-replica statistics from one streaming pass.
#[derive(Debug, Clone)]
pub struct ReplicaStats {
    pub replica: usize,
    pub root_on: bool,
    /// Number of on-vertices per generation (all ancestries).
    pub counts: Vec<u64>,
    /// Per exponent, per generation: the sum over the on-subtree of the path
    /// ratio products to that power (the unnormalized martingale numerator).
    pub tau_weights: Vec<Vec<f64>>,
    /// Per exponent: the truncated min-cut flow at the full depth.
    pub flow: Vec<f64>,
}

impl ReplicaStats {
    pub fn empty_at_depth(&self) -> bool {
        *self.counts.last().unwrap() == 0
    }
}

/// Dead vertices can be skipped exactly when off-parents never recolor a
/// child on anywhere in the environment.
pub fn can_prune_dead(model: &EnvironmentModel) -> bool {
    model
        .prefix
        .iter()
        .chain(model.period())
        .all(|st| st.offspring_certainly_none(State::Zero))
}

struct Walker<'a> {
    model: &'a EnvironmentModel,
    depth: usize,
    s_grid: &'a [f64],
    prune_dead: bool,
    max_nodes: u64,
    visited: u64,
    counts: Vec<u64>,
    tau: Vec<Vec<f64>>,
    child_states: Vec<Vec<u8>>,
    child_ratios: Vec<Vec<f64>>,
}

impl<'a> Walker<'a> {
    fn new(
        model: &'a EnvironmentModel,
        depth: usize,
        s_grid: &'a [f64],
        prune_dead: bool,
        max_nodes: u64,
    ) -> Walker<'a> {
        Walker {
            model,
            depth,
            s_grid,
            prune_dead,
            max_nodes,
            visited: 0,
            counts: vec![0; depth + 1],
            tau: vec![vec![0.0; depth + 1]; s_grid.len()],
            child_states: vec![Vec::new(); depth + 1],
            child_ratios: vec![Vec::new(); depth + 1],
        }
    }

    fn walk(
        &mut self,
        g: usize,
        seed: u64,
        state: u8,
        in_tau: bool,
        path_pow: &[f64; MAX_S_GRID],
    ) -> Result<[f64; MAX_S_GRID], SimError> {
        self.visited += 1;
        if self.visited > self.max_nodes {
            return Err(SimError::BudgetExceeded {
                required: self.visited as u128,
                budget: self.max_nodes,
            });
        }
        let ns = self.s_grid.len();
        if state == 1 {
            self.counts[g] += 1;
            if in_tau {
                for si in 0..ns {
                    self.tau[si][g] += path_pow[si];
                }
            }
        }
        if g == self.depth {
            return Ok(if in_tau { [1.0; MAX_S_GRID] } else { [0.0; MAX_S_GRID] });
        }
        let stage = self.model.stage(g);
        let mut sbuf = std::mem::take(&mut self.child_states[g]);
        let mut rbuf = std::mem::take(&mut self.child_ratios[g]);
        sbuf.clear();
        rbuf.clear();
        let mut rng = vertex_rng(seed);
        if g == 0 {
            // the root stream already supplied the root state
            let _: f64 = rng.random();
        }
        draw_children(stage, State::from_bit(state), &mut rng, &mut sbuf, &mut rbuf);

        let mut acc = [0.0f64; MAX_S_GRID];
        for k in 0..stage.m {
            let x = sbuf[k];
            if x == 0 && self.prune_dead {
                continue;
            }
            let l = rbuf[k];
            let child_in_tau = in_tau && x == 1;
            let mut lpow = [0.0f64; MAX_S_GRID];
            let mut child_pow = [0.0f64; MAX_S_GRID];
            for si in 0..ns {
                // powf(l, 0) = 1 and powf(l, 1) = l exactly
                let s = self.s_grid[si];
                lpow[si] = if s == 0.0 {
                    1.0
                } else if s == 1.0 {
                    l
                } else {
                    l.powf(s)
                };
                child_pow[si] = path_pow[si] * lpow[si];
            }
            let child_flow = self.walk(g + 1, child_seed(seed, k), x, child_in_tau, &child_pow)?;
            if child_in_tau {
                for si in 0..ns {
                    acc[si] += lpow[si] * child_flow[si];
                }
            }
        }
        self.child_states[g] = sbuf;
        self.child_ratios[g] = rbuf;

        let mut out = [0.0f64; MAX_S_GRID];
        if in_tau {
            for si in 0..ns {
                out[si] = acc[si].min(1.0);
            }
        }
        Ok(out)
    }
}

fn run_one(
    model: &EnvironmentModel,
    cfg: &ReplicaConfig,
    prune_dead: bool,
    replica: usize,
) -> Result<ReplicaStats, SimError> {
    let replica_seed = root_seed(cfg.seed, replica as u64);
    let mut rng = vertex_rng(replica_seed);
    let state = (rng.random::<f64>() < model.initial_one_prob) as u8;
    let mut walker = Walker::new(model, cfg.depth, &cfg.s_grid, prune_dead, cfg.budget.max_nodes);
    let root_pow = [1.0f64; MAX_S_GRID];
    let flow = walker.walk(0, replica_seed, state, state == 1, &root_pow)?;
    Ok(ReplicaStats {
        replica,
        root_on: state == 1,
        counts: std::mem::take(&mut walker.counts),
        tau_weights: std::mem::take(&mut walker.tau),
        flow: flow[..cfg.s_grid.len()].to_vec(),
    })
}

/// Run all replicas, split across a worker pool. Output is indexed by
/// replica and independent of the worker count.
pub fn run_replicas(
    model: &EnvironmentModel,
    cfg: &ReplicaConfig,
) -> Result<Vec<ReplicaStats>, SimError> {
    if cfg.s_grid.len() > MAX_S_GRID {
        return Err(SimError::TooManyExponents);
    }
    let prune_dead = can_prune_dead(model);
    let workers = cfg.workers.max(1).min(cfg.replicas.max(1));
    let mut results: Vec<Option<Result<ReplicaStats, SimError>>> = Vec::new();
    results.resize_with(cfg.replicas, || None);
    let chunk_size = cfg.replicas.div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        for (chunk_idx, chunk) in results.chunks_mut(chunk_size).enumerate() {
            let base = chunk_idx * chunk_size;
            scope.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(run_one(model, cfg, prune_dead, base + i));
                }
            });
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("worker filled every slot"))
        .collect()
}

/// Running products of the Moran sums, used to normalize the weighted
/// survivor sums into martingales: entry j is the product over l < j.
pub fn moran_normalizers(
    model: &EnvironmentModel,
    s: f64,
    depth: usize,
) -> Result<Vec<f64>, SimError> {
    let mut out = Vec::with_capacity(depth + 1);
    let mut acc = 1.0f64;
    out.push(1.0);
    for l in 0..depth {
        let a = analytics::moran_sum(model, s, l);
        if a == 0.0 {
            return Err(SimError::UndefinedNormalizer { generation: l });
        }
        acc *= a;
        out.push(acc);
    }
    Ok(out)
}

/// Estimated frequency of "no on-vertex at the truncation depth", a lower
/// bound on the eventual-emptiness probability that converges upward in the
/// depth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmptinessFrequency {
    pub depth: usize,
    pub replicas: usize,
    pub empty_count: usize,
    pub frequency: f64,
    pub stderr: f64,
    /// Three standard errors around the frequency, clamped to [0, 1].
    pub ci_low: f64,
    pub ci_high: f64,
    /// Analytic mass of lines that die only after the truncation depth; the
    /// eventual-emptiness probability lies within [frequency, frequency +
    /// residual] up to Monte Carlo error. None when the analytics are
    /// unavailable for this model.
    pub residual: Option<f64>,
    pub bracket_high: Option<f64>,
    /// What the frequency estimates, spelled out for report consumers.
    pub interpretation: String,
}

#[allow(clippy::too_many_arguments)]
fn exists_on_at_depth(
    model: &EnvironmentModel,
    depth: usize,
    prune_dead: bool,
    g: usize,
    seed: u64,
    state: u8,
    visited: &mut u64,
    max_nodes: u64,
    sbuf: &mut Vec<Vec<u8>>,
    rbuf: &mut Vec<Vec<f64>>,
) -> Result<bool, SimError> {
    *visited += 1;
    if *visited > max_nodes {
        return Err(SimError::BudgetExceeded {
            required: *visited as u128,
            budget: max_nodes,
        });
    }
    if g == depth {
        return Ok(state == 1);
    }
    if prune_dead && state == 0 {
        return Ok(false);
    }
    let stage = model.stage(g);
    let mut states = std::mem::take(&mut sbuf[g]);
    let mut ratios = std::mem::take(&mut rbuf[g]);
    states.clear();
    ratios.clear();
    let mut rng = vertex_rng(seed);
    if g == 0 {
        let _: f64 = rng.random();
    }
    draw_children(stage, State::from_bit(state), &mut rng, &mut states, &mut ratios);
    let mut found = false;
    for k in 0..stage.m {
        if exists_on_at_depth(
            model,
            depth,
            prune_dead,
            g + 1,
            child_seed(seed, k),
            states[k],
            visited,
            max_nodes,
            sbuf,
            rbuf,
        )? {
            found = true;
            break;
        }
    }
    sbuf[g] = states;
    rbuf[g] = ratios;
    Ok(found)
}

/// Monte Carlo estimate of P(no on-vertex at the truncation depth).
pub fn monte_carlo_emptiness(
    model: &EnvironmentModel,
    depth: usize,
    replicas: usize,
    seed: u64,
    workers: usize,
    budget: &SimBudget,
) -> Result<EmptinessFrequency, SimError> {
    let prune_dead = can_prune_dead(model);
    let workers = workers.max(1).min(replicas.max(1));
    let mut results: Vec<Option<Result<bool, SimError>>> = Vec::new();
    results.resize_with(replicas, || None);
    let chunk_size = replicas.div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        for (chunk_idx, chunk) in results.chunks_mut(chunk_size).enumerate() {
            let base = chunk_idx * chunk_size;
            scope.spawn(move || {
                let mut sbuf = vec![Vec::new(); depth + 1];
                let mut rbuf = vec![Vec::new(); depth + 1];
                for (i, slot) in chunk.iter_mut().enumerate() {
                    let replica_seed = root_seed(seed, (base + i) as u64);
                    let mut rng = vertex_rng(replica_seed);
                    let state = (rng.random::<f64>() < model.initial_one_prob) as u8;
                    let mut visited = 0u64;
                    *slot = Some(
                        exists_on_at_depth(
                            model,
                            depth,
                            prune_dead,
                            0,
                            replica_seed,
                            state,
                            &mut visited,
                            budget.max_nodes,
                            &mut sbuf,
                            &mut rbuf,
                        )
                        .map(|found| !found),
                    );
                }
            });
        }
    });
    let mut empty_count = 0usize;
    for r in results {
        if r.expect("worker filled every slot")? {
            empty_count += 1;
        }
    }
    let frequency = empty_count as f64 / replicas as f64;
    let stderr = (frequency * (1.0 - frequency) / replicas as f64).sqrt();
    let residual = analytics::emptiness_probability(model, 30, 1e-12)
        .ok()
        .and_then(|e| {
            analytics::survivor_count_pgf(model, depth, 0.0)
                .ok()
                .map(|phi| (e.value - phi).max(0.0))
        });
    Ok(EmptinessFrequency {
        depth,
        replicas,
        empty_count,
        frequency,
        stderr,
        ci_low: (frequency - 3.0 * stderr).max(0.0),
        ci_high: (frequency + 3.0 * stderr).min(1.0),
        residual,
        bracket_high: residual.map(|r| (frequency + r).min(1.0)),
        interpretation: "frequency of no on-vertex at the truncation depth: a lower-bound \
                         estimate of the eventual-emptiness probability, converging upward \
                         in the depth; the residual bounds the gap"
            .into(),
    })
}

/// Box-count regression output, paired with the analytic threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub depth: usize,
    pub window_low: usize,
    pub window_high: usize,
    pub replicas_requested: usize,
    /// Replicas with at least four populated generations in the window.
    pub replicas_used: usize,
    pub slope: f64,
    pub stderr: f64,
    pub analytic_d_star: Option<f64>,
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Estimate the box-counting slope: regress log on-cube counts against log
/// scale over the window [ceil(depth/2), depth], per replica, then aggregate
/// across replicas that survived the window. A desk-scale proxy for the
/// dimension threshold, reported alongside the analytic value.
pub fn box_count(
    model: &EnvironmentModel,
    depth: usize,
    replicas: usize,
    seed: u64,
    workers: usize,
    budget: &SimBudget,
) -> Result<DimensionEstimate, SimError> {
    let cfg = ReplicaConfig {
        depth,
        replicas,
        seed,
        s_grid: Vec::new(),
        workers,
        budget: *budget,
    };
    if model.geometry != Some(GeometryRule::CubeSubdivision) {
        return Err(SimError::WrongGeometry(
            "box counting requires cube-subdivision geometry".into(),
        ));
    }
    let stats = run_replicas(model, &cfg)?;
    box_count_from_stats(model, depth, &stats)
}

/// Same regression on an existing replica sweep (replicas sampled with the
/// per-replica streams of [`run_replicas`]).
pub fn box_count_from_stats(
    model: &EnvironmentModel,
    depth: usize,
    stats: &[ReplicaStats],
) -> Result<DimensionEstimate, SimError> {
    if model.geometry != Some(GeometryRule::CubeSubdivision) {
        return Err(SimError::WrongGeometry(
            "box counting requires cube-subdivision geometry".into(),
        ));
    }
    // log of cells-per-side at each generation
    let mut log_scale = Vec::with_capacity(depth + 1);
    let mut acc = 0.0f64;
    log_scale.push(0.0);
    for g in 0..depth {
        acc += (model.stage(g).c.expect("validated cube geometry") as f64).ln();
        log_scale.push(acc);
    }

    let window_low = depth.div_ceil(2);
    let mut slopes = Vec::new();
    for stat in stats {
        let points: Vec<(f64, f64)> = (window_low..=depth)
            .filter(|&j| stat.counts[j] > 0)
            .map(|j| (log_scale[j], (stat.counts[j] as f64).ln()))
            .collect();
        if points.len() >= 4 {
            slopes.push(least_squares_slope(&points));
        }
    }
    if slopes.is_empty() {
        return Err(SimError::AllExtinct);
    }
    let n = slopes.len() as f64;
    let mean = slopes.iter().sum::<f64>() / n;
    let var = slopes.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(DimensionEstimate {
        depth,
        window_low,
        window_high: depth,
        replicas_requested: stats.len(),
        replicas_used: slopes.len(),
        slope: mean,
        stderr: (var / n).sqrt(),
        analytic_d_star: analytics::d_star(model, 1e-9).ok().flatten(),
    })
}

#[cfg(test)]
mod tests;
