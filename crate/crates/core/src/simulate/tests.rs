use super::*;
use crate::model::measures::TransitionLaw;
use crate::model::{StageKind, TailRule};
use crate::zoo;

fn budget() -> SimBudget {
    SimBudget::default()
}

/// All-on deterministic model: every vertex keeps all children on.
fn all_on() -> EnvironmentModel {
    zoo::bernoulli_cube(2, 2, 1.0, 1.0, 0.0)
}

#[test]
fn deterministic_kernels_fill_tree() {
    let tree = sample_tree(&all_on(), 5, 3, &budget()).unwrap();
    for g in 0..=5 {
        assert_eq!(tree.survivor_counts()[g], 4u64.pow(g as u32));
    }
}

#[test]
fn absorbing_zero_tree() {
    let model = zoo::bernoulli_cube(2, 2, 0.0, 0.5, 0.0);
    let tree = sample_tree(&model, 4, 9, &budget()).unwrap();
    assert!(tree.survivor_counts().iter().all(|&c| c == 0));
}

#[test]
fn sample_tree_is_deterministic() {
    let model = zoo::bernoulli_cube(2, 2, 1.0, 0.6, 0.0);
    let a = sample_tree(&model, 6, 77, &budget()).unwrap();
    let b = sample_tree(&model, 6, 77, &budget()).unwrap();
    assert_eq!(a.survivor_counts(), b.survivor_counts());
    for n in 0..a.node_count() {
        assert_eq!(a.state(n), b.state(n));
        assert_eq!(a.ratio(n).to_bits(), b.ratio(n).to_bits());
    }
    let c = sample_tree(&model, 6, 78, &budget()).unwrap();
    assert_ne!(a.survivor_counts(), c.survivor_counts());
}

#[test]
fn deeper_tree_extends_shallower_one() {
    let model = zoo::interval_split(0.8);
    let shallow = sample_tree(&model, 4, 5, &budget()).unwrap();
    let deep = sample_tree(&model, 7, 5, &budget()).unwrap();
    assert_eq!(
        &deep.survivor_counts()[..=4],
        shallow.survivor_counts()
    );
    for n in 0..shallow.node_count() {
        assert_eq!(shallow.state(n), deep.state(n));
        assert_eq!(shallow.ratio(n).to_bits(), deep.ratio(n).to_bits());
    }
}

#[test]
fn budget_is_enforced() {
    let model = zoo::bernoulli_cube(2, 2, 1.0, 0.5, 0.0);
    let tiny = SimBudget { max_nodes: 100 };
    assert!(matches!(
        sample_tree(&model, 8, 1, &tiny),
        Err(SimError::BudgetExceeded { .. })
    ));
}

#[test]
fn mean_survivor_count_matches_expectation() {
    // E[number of on-vertices at depth] = pi * prod alpha_{0,n}; here 2^6
    let model = zoo::bernoulli_cube(2, 2, 1.0, 0.5, 0.0);
    let cfg = ReplicaConfig {
        depth: 6,
        replicas: 4000,
        seed: 11,
        s_grid: vec![],
        workers: 2,
        budget: budget(),
    };
    let stats = run_replicas(&model, &cfg).unwrap();
    let mean: f64 = stats.iter().map(|r| r.counts[6] as f64).sum::<f64>() / 4000.0;
    let var: f64 = stats
        .iter()
        .map(|r| (r.counts[6] as f64 - mean).powi(2))
        .sum::<f64>()
        / 3999.0;
    let se = (var / 4000.0).sqrt();
    assert!(
        (mean - 64.0).abs() <= 3.0 * se,
        "mean {mean} vs 64 (se {se})"
    );
}

#[test]
fn survivor_process_examples() {
    let tree = sample_tree(&all_on(), 3, 1, &budget()).unwrap();
    assert_eq!(tree.survivor_process(tree.root()), vec![1, 4, 16, 64]);

    // an off vertex yields the zero trajectory
    let dead = sample_tree(&zoo::bernoulli_cube(2, 2, 0.0, 0.5, 0.0), 3, 1, &budget()).unwrap();
    assert_eq!(dead.survivor_process(dead.root()), vec![0, 0, 0, 0]);
}

#[test]
fn flow_examples() {
    // dead root: zero flow
    let dead = sample_tree(&zoo::bernoulli_cube(2, 2, 0.0, 0.5, 0.0), 3, 1, &budget()).unwrap();
    assert_eq!(dead.flow(1.0, dead.root()).value, 0.0);

    // deterministic halving, all on, s = 1: every cut sums to one
    let moran = sample_tree(&zoo::moran_halves(), 6, 2, &budget()).unwrap();
    for cut in 1..=6 {
        assert_eq!(moran.flow_truncated(1.0, moran.root(), cut).value, 1.0);
    }
}

#[test]
fn flow_nonincreasing_in_truncation_depth() {
    let model = zoo::bernoulli_cube(2, 2, 1.0, 0.7, 0.0);
    for seed in 0..20 {
        let tree = sample_tree(&model, 7, seed, &budget()).unwrap();
        let mut prev = f64::INFINITY;
        for cut in 0..=7 {
            let v = tree.flow_truncated(1.3, tree.root(), cut).value;
            assert!(v <= prev + 1e-15, "seed {seed}: flow increased at cut {cut}");
            prev = v;
        }
    }
}

#[test]
fn flow_zero_iff_no_survivor_at_cut() {
    // structural equivalence of truncated extinction and zero flow
    let model = zoo::bernoulli_cube(2, 2, 1.0, 0.45, 0.0);
    for seed in 0..200 {
        let tree = sample_tree(&model, 4, seed, &budget()).unwrap();
        let extinct = *tree.survivor_process(tree.root()).last().unwrap() == 0;
        for s in [0.5, 1.0, 1.7] {
            let zero_flow = tree.flow(s, tree.root()).value == 0.0;
            assert_eq!(zero_flow, extinct, "seed {seed} s {s}");
        }
    }
}

#[test]
fn martingale_series_zero_exponent_reduces_to_counts() {
    let model = zoo::bernoulli_cube(2, 2, 1.0, 0.7, 0.0);
    let tree = sample_tree(&model, 5, 4, &budget()).unwrap();
    let w = tree.martingale_series(&model, 0.0, tree.root()).unwrap();
    let z = tree.survivor_process(tree.root());
    for (j, &wj) in w.iter().enumerate() {
        let mean = 2.8f64.powi(j as i32); // (4 * 0.7)^j
        assert!((wj - z[j] as f64 / mean).abs() < 1e-12);
    }
}

#[test]
fn martingale_series_dead_root_is_zero() {
    let model = zoo::bernoulli_cube(2, 2, 0.0, 0.7, 0.0);
    let tree = sample_tree(&model, 4, 4, &budget()).unwrap();
    let w = tree.martingale_series(&model, 1.0, tree.root()).unwrap();
    assert!(w.iter().all(|&x| x == 0.0));
}

#[test]
fn martingale_normalizer_guard() {
    let model = zoo::microcanonical_cube(2, 2, 1.0, 0, 0);
    let tree = sample_tree(&model, 3, 4, &budget()).unwrap();
    assert!(matches!(
        tree.martingale_series(&model, 1.0, tree.root()),
        Err(SimError::UndefinedNormalizer { .. })
    ));
}

#[test]
fn martingale_mean_is_one() {
    // E[W_{s, root, depth} | root on] = 1 within 3 standard errors
    let model = zoo::bernoulli_cube(2, 2, 1.0, 0.9, 0.0);
    let cfg = ReplicaConfig {
        depth: 5,
        replicas: 3000,
        seed: 21,
        s_grid: vec![0.0, 1.0],
        workers: 2,
        budget: budget(),
    };
    let stats = run_replicas(&model, &cfg).unwrap();
    for (si, s) in [0.0, 1.0].iter().enumerate() {
        let normalizers = moran_normalizers(&model, *s, 5).unwrap();
        let ws: Vec<f64> = stats
            .iter()
            .filter(|r| r.root_on)
            .map(|r| r.tau_weights[si][5] / normalizers[5])
            .collect();
        let n = ws.len() as f64;
        let mean = ws.iter().sum::<f64>() / n;
        let var = ws.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(
            (mean - 1.0).abs() <= 3.0 * se,
            "s={s}: W mean {mean} (se {se})"
        );
    }
}

#[test]
fn streaming_agrees_with_stored_tree() {
    for model in [
        zoo::bernoulli_cube(2, 2, 1.0, 0.6, 0.0),
        zoo::binary_heavy_recoloring(),
        zoo::interval_split(0.8),
        zoo::joint_correlated(),
    ] {
        let depth = 6;
        let cfg = ReplicaConfig {
            depth,
            replicas: 1,
            seed: 99,
            s_grid: vec![1.0],
            workers: 1,
            budget: budget(),
        };
        let stats = run_replicas(&model, &cfg).unwrap();
        let tree = sample_tree(&model, depth, 99, &budget()).unwrap();
        assert_eq!(stats[0].counts, tree.survivor_counts());
        let dp = tree.flow(1.0, tree.root()).value;
        assert_eq!(stats[0].flow[0].to_bits(), dp.to_bits());
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let model = zoo::bernoulli_cube(2, 2, 1.0, 0.7, 0.0);
    let mk = |workers| ReplicaConfig {
        depth: 5,
        replicas: 64,
        seed: 7,
        s_grid: vec![1.0],
        workers,
        budget: budget(),
    };
    let one = run_replicas(&model, &mk(1)).unwrap();
    let eight = run_replicas(&model, &mk(8)).unwrap();
    assert_eq!(one.len(), eight.len());
    for (a, b) in one.iter().zip(&eight) {
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.flow[0].to_bits(), b.flow[0].to_bits());
        for (x, y) in a.tau_weights[0].iter().zip(&b.tau_weights[0]) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn realize_cubes_examples() {
    let tree = sample_tree(&all_on(), 2, 1, &budget()).unwrap();
    let model = all_on();
    let c0 = tree.realize_cubes(&model, 0).unwrap();
    assert_eq!(c0.len(), 1);
    assert_eq!(c0.cells().next().unwrap(), &[0, 0]);
    let c2 = tree.realize_cubes(&model, 2).unwrap();
    assert_eq!(c2.len(), 16);
    assert_eq!(c2.side, 4);
    let mut seen: Vec<Vec<u64>> = c2.cells().map(|c| c.to_vec()).collect();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 16, "cells are distinct and cover the grid");

    let abstract_model = zoo::joint_correlated();
    let tree = sample_tree(&abstract_model, 2, 1, &budget()).unwrap();
    assert!(matches!(
        tree.realize_cubes(&abstract_model, 1),
        Err(SimError::WrongGeometry(_))
    ));
}

#[test]
fn render_examples() {
    let model = all_on();
    let tree = sample_tree(&model, 3, 1, &budget()).unwrap();
    let img = tree.render_2d(&model, 3).unwrap();
    assert_eq!((img.width, img.height), (8, 8));
    assert!(img.pixels.iter().all(|&p| p == 0));
    assert_eq!(img.black_pixels(), tree.realize_cubes(&model, 3).unwrap().len());
    let bytes = img.to_bytes();
    assert!(bytes.starts_with(b"P5\n8 8\n255\n"));
    assert_eq!(bytes.len(), 11 + 64);

    let off = zoo::bernoulli_cube(2, 2, 0.0, 0.5, 0.0);
    let tree = sample_tree(&off, 3, 1, &budget()).unwrap();
    let img = tree.render_2d(&off, 3).unwrap();
    assert!(img.pixels.iter().all(|&p| p == 255));
}

#[test]
fn box_count_deterministic_full_subdivision() {
    let est = box_count(&all_on(), 8, 3, 5, 1, &budget()).unwrap();
    assert!((est.slope - 2.0).abs() < 1e-12);
    assert_eq!(est.replicas_used, 3);
}

#[test]
fn box_count_subcritical_all_extinct() {
    // deeply subcritical: no replica reaches the regression window
    let model = zoo::bernoulli_cube(2, 2, 1.0, 0.05, 0.0);
    assert!(matches!(
        box_count(&model, 10, 20, 3, 2, &budget()),
        Err(SimError::AllExtinct)
    ));
}

#[test]
fn box_count_requires_geometry() {
    assert!(matches!(
        box_count(&zoo::joint_correlated(), 8, 10, 3, 1, &budget()),
        Err(SimError::WrongGeometry(_))
    ));
}

#[test]
fn emptiness_trivial_cases() {
    // all transitions absorb to zero: always empty at depth
    let dead = zoo::bernoulli_cube(2, 2, 0.0, 0.0, 0.0);
    let e = monte_carlo_emptiness(&dead, 4, 200, 3, 2, &budget()).unwrap();
    assert_eq!(e.frequency, 1.0);

    let alive = all_on();
    let e = monte_carlo_emptiness(&alive, 4, 200, 3, 2, &budget()).unwrap();
    assert_eq!(e.frequency, 0.0);
}

#[test]
fn emptiness_frequency_tracks_analytics() {
    // interval splitting at p = 0.8: eventual emptiness 0.0625; at depth 12
    // the truncated frequency sits slightly above and within the bracket
    let model = zoo::interval_split(0.8);
    let e = monte_carlo_emptiness(&model, 12, 4000, 5, 2, &budget()).unwrap();
    assert!((e.frequency - 0.0625).abs() < 0.02, "frequency {}", e.frequency);
    assert!(e.residual.is_some());
    assert!(e.frequency >= 0.0625 - 3.0 * e.stderr - e.residual.unwrap());
}

#[test]
fn emptiness_deep_truncation_near_limit() {
    // at depth 25 the extinction-after-truncation mass is below 1e-3, so the
    // frequency over 10^4 replicas lands within 3 standard errors of 0.0625
    let model = zoo::interval_split(0.8);
    let e = monte_carlo_emptiness(&model, 25, 10_000, 7, 4, &budget()).unwrap();
    let expected = 0.0625f64;
    let se = (expected * (1.0 - expected) / 10_000.0).sqrt();
    assert!(
        (e.frequency - expected).abs() <= 3.0 * se + e.residual.unwrap(),
        "frequency {} vs {expected} (se {se}, residual {:?})",
        e.frequency,
        e.residual
    );
    assert!(e.residual.unwrap() < 1e-3);
}

#[test]
fn emptiness_deterministic_across_workers() {
    let model = zoo::bernoulli_cube(2, 2, 1.0, 0.3, 0.0);
    let a = monte_carlo_emptiness(&model, 6, 500, 7, 1, &budget()).unwrap();
    let b = monte_carlo_emptiness(&model, 6, 500, 7, 8, &budget()).unwrap();
    assert_eq!(a.empty_count, b.empty_count);
}

#[test]
fn sibling_subtrees_conditionally_independent() {
    // chi-square independence of the two children's survivor counts at the
    // bottom generation, conditional on both children being on. 4x4 bins,
    // df = 9, critical value at the 1e-3 level is 27.877.
    let model = zoo::bernoulli_cube(2, 1, 1.0, 0.7, 0.0);
    let replicas = 100_000usize;
    let cap = 3usize;
    let mut table = [[0f64; 4]; 4];
    let mut kept = 0usize;
    for r in 0..replicas {
        let tree = sample_tree_replica(&model, 4, 1234, r as u64, &budget()).unwrap();
        let (first, m) = tree.children(tree.root()).unwrap();
        assert_eq!(m, 2);
        if tree.state(first) == 1 && tree.state(first + 1) == 1 {
            let za = *tree.survivor_process(first).last().unwrap() as usize;
            let zb = *tree.survivor_process(first + 1).last().unwrap() as usize;
            table[za.min(cap)][zb.min(cap)] += 1.0;
            kept += 1;
        }
    }
    let n = kept as f64;
    let row: Vec<f64> = (0..4).map(|i| table[i].iter().sum()).collect();
    let col: Vec<f64> = (0..4).map(|j| (0..4).map(|i| table[i][j]).sum()).collect();
    let mut chi2 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let expected = row[i] * col[j] / n;
            if expected > 0.0 {
                let d = table[i][j] - expected;
                chi2 += d * d / expected;
            }
        }
    }
    assert!(chi2 < 27.877, "chi-square statistic {chi2} rejects independence");
}

#[test]
fn flow_zero_frequency_within_analytic_bounds() {
    // empirical P(truncated flow = 0) sits between the extinct-by-depth mass
    // and the vanishing-probability bound, up to Monte Carlo error
    let model = zoo::bernoulli_cube(2, 1, 1.0, 0.9, 0.0);
    let s = 0.5;
    let depth = 12;
    let replicas = 10_000;
    let cfg = ReplicaConfig {
        depth,
        replicas,
        seed: 1717,
        s_grid: vec![s],
        workers: 4,
        budget: budget(),
    };
    let stats = run_replicas(&model, &cfg).unwrap();
    let freq = stats.iter().filter(|r| r.flow[0] == 0.0).count() as f64 / replicas as f64;
    let lower = crate::analytics::extinction_by(&model, 0, depth);
    let upper = crate::analytics::flow_vanishing_bound(&model, s, 0)
        .unwrap()
        .bound;
    let se = (freq * (1.0 - freq) / replicas as f64).sqrt();
    assert!(
        freq >= lower - 3.0 * se && freq <= upper + 3.0 * se,
        "flow-zero frequency {freq} outside [{lower}, {upper}] (se {se})"
    );
}

#[test]
fn survivor_counts_match_branching_distribution() {
    // two-sample chi-square: the root survivor count at depth 6 against the
    // population of the varying-environment branching process, both given an
    // on root. Bins {0,1,2,3,4,>=5}, df = 5, critical value at the 1e-3
    // level is 20.515.
    let model = zoo::bernoulli_cube(2, 1, 1.0, 0.7, 0.0);
    let n = 5000usize;
    let depth = 6usize;
    let mut tree_bins = [0f64; 6];
    let mut bp_bins = [0f64; 6];
    for r in 0..n {
        let tree = sample_tree_replica(&model, depth, 900, r as u64, &budget()).unwrap();
        let z = *tree.survivor_process(tree.root()).last().unwrap() as usize;
        tree_bins[z.min(5)] += 1.0;
        let sample = branching_sample(&model, 0, depth, 7000 + r as u64).unwrap();
        let z = *sample.trajectory.last().unwrap() as usize;
        bp_bins[z.min(5)] += 1.0;
    }
    let mut chi2 = 0.0;
    for k in 0..6 {
        let pooled = (tree_bins[k] + bp_bins[k]) / 2.0;
        if pooled > 0.0 {
            chi2 += (tree_bins[k] - pooled).powi(2) / pooled;
            chi2 += (bp_bins[k] - pooled).powi(2) / pooled;
        }
    }
    assert!(chi2 < 20.515, "two-sample chi-square {chi2} rejects agreement");
}

#[test]
fn too_many_exponents_rejected() {
    let cfg = ReplicaConfig {
        depth: 2,
        replicas: 1,
        seed: 0,
        s_grid: vec![0.0, 0.5, 1.0, 1.5, 2.0],
        workers: 1,
        budget: budget(),
    };
    assert!(matches!(
        run_replicas(&all_on(), &cfg),
        Err(SimError::TooManyExponents)
    ));
}

#[test]
fn prune_detection() {
    assert!(can_prune_dead(&zoo::interval_split(0.8)));
    assert!(!can_prune_dead(&zoo::binary_heavy_recoloring()));
    // a finite-discrete off-law concentrated on the zero vector still prunes
    let mut model = zoo::interval_split(0.8);
    if let TailRule::Constant { stage } = &mut model.tail
        && let StageKind::Separated { trans0, .. } = &mut stage.kind {
            *trans0 = TransitionLaw::FiniteDiscrete {
                atoms: vec![crate::model::measures::StateAtom {
                    states: vec![0, 0],
                    weight: 1.0,
                }],
            };
        }
    assert!(can_prune_dead(&model));
}
