//! Brute-force verifiers on tiny instances. These enumerate every joint
//! outcome of the construction (and, for the min-cut check, every cut)
//! with no pruning or factorization, deliberately staying independent of the
//! optimized recursions they validate.

use thiserror::Error;

use crate::model::measures::{JointAtom, State, StateAtom};
use crate::model::EnvironmentModel;
use crate::simulate::SampledTree;

/// Ceiling on the number of enumerated outcomes.
#[derive(Debug, Clone, Copy)]
pub struct EnumerationBudget {
    pub max_outcomes: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_outcomes: 1 << 22,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration budget exceeded: about {required} outcomes, budget {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
}

struct Shape {
    /// Branching factor per generation 0..depth.
    ms: Vec<usize>,
    /// Start offset of each generation, last entry = node count.
    offsets: Vec<usize>,
}

fn shape(model: &EnvironmentModel, depth: usize) -> Shape {
    let ms: Vec<usize> = (0..depth).map(|g| model.branching(g)).collect();
    let mut offsets = vec![0usize];
    let mut total = 0usize;
    let mut size = 1usize;
    for g in 0..=depth {
        total += size;
        offsets.push(total);
        if g < depth {
            size *= ms[g];
        }
    }
    Shape { ms, offsets }
}

fn generation_of(shape: &Shape, node: usize) -> usize {
    match shape.offsets.binary_search(&node) {
        Ok(g) => g,
        Err(g) => g - 1,
    }
}

fn check_budget(
    model: &EnvironmentModel,
    shape: &Shape,
    atoms_per_state: &dyn Fn(usize) -> (u64, u64),
    budget: &EnumerationBudget,
) -> Result<(), OracleError> {
    let _ = model;
    let mut outcomes: u128 = 2; // root state
    let internal = shape.offsets[shape.ms.len()];
    for node in 0..internal {
        let g = generation_of(shape, node);
        let (a0, a1) = atoms_per_state(g);
        outcomes = outcomes.saturating_mul(a0.max(a1) as u128);
        if outcomes > budget.max_outcomes as u128 {
            return Err(OracleError::BudgetExceeded {
                required: outcomes,
                budget: budget.max_outcomes,
            });
        }
    }
    Ok(())
}

/// E[z^{number of on-vertices at generation `depth`}] by full enumeration of
/// every transition draw of every vertex above that generation.
pub fn exact_generating_function(
    model: &EnvironmentModel,
    depth: usize,
    z: f64,
    budget: &EnumerationBudget,
) -> Result<f64, OracleError> {
    let sh = shape(model, depth);
    // materialized state-vector atoms per (generation, parent state); ratio
    // draws are irrelevant to survivor counts and are not expanded
    let mut atoms: Vec<[Vec<StateAtom>; 2]> = Vec::new();
    for g in 0..depth {
        let stage = model.stage(g);
        let table = |t: State| -> Vec<StateAtom> {
            match (stage.transition(t), stage.joint(t)) {
                (Some(trans), _) => trans.materialize(stage.m).unwrap_or_default(),
                (None, Some(joint)) => joint
                    .atoms
                    .iter()
                    .map(|a| StateAtom {
                        states: a.states.clone(),
                        weight: a.weight,
                    })
                    .collect(),
                (None, None) => unreachable!("stage is separated or joint"),
            }
        };
        atoms.push([table(State::Zero), table(State::One)]);
    }
    check_budget(
        model,
        &sh,
        &|g| (atoms[g][0].len() as u64, atoms[g][1].len() as u64),
        budget,
    )?;

    let internal = sh.offsets[depth];
    let node_count = sh.offsets[depth + 1];
    let mut states = vec![0u8; node_count];
    let mut total = 0.0f64;

    #[allow(clippy::too_many_arguments)]
    fn rec(
        node: usize,
        weight: f64,
        internal: usize,
        depth: usize,
        sh: &Shape,
        atoms: &[[Vec<StateAtom>; 2]],
        states: &mut Vec<u8>,
        z: f64,
        total: &mut f64,
    ) {
        if node == internal {
            let ones = states[sh.offsets[depth]..sh.offsets[depth + 1]]
                .iter()
                .map(|&x| x as i32)
                .sum::<i32>();
            *total += weight * z.powi(ones);
            return;
        }
        let g = generation_of(sh, node);
        let within = node - sh.offsets[g];
        let child_base = sh.offsets[g + 1] + within * sh.ms[g];
        let table = &atoms[g][states[node] as usize];
        for atom in table {
            for (k, &x) in atom.states.iter().enumerate() {
                states[child_base + k] = x;
            }
            rec(
                node + 1,
                weight * atom.weight,
                internal,
                depth,
                sh,
                atoms,
                states,
                z,
                total,
            );
        }
    }

    for (root_state, root_weight) in [
        (0u8, 1.0 - model.initial_one_prob),
        (1u8, model.initial_one_prob),
    ] {
        if root_weight == 0.0 {
            continue;
        }
        states[0] = root_state;
        if depth == 0 {
            total += root_weight * z.powi(root_state as i32);
            continue;
        }
        rec(0, root_weight, internal, depth, &sh, &atoms, &mut states, z, &mut total);
    }
    Ok(total)
}

/// P(the process started at generation j is dead after n more generations),
/// by composing the offspring pgfs at zero.
pub fn exact_extinction_by(model: &EnvironmentModel, j: usize, n: usize) -> f64 {
    let mut z = 0.0f64;
    for g in (j..j + n).rev() {
        z = model.stage(g).offspring_pgf(State::One, z);
    }
    z
}

/// Exact distribution over outcomes of the truncated min-cut flow. For every
/// joint state/ratio outcome, every cut of the on-subtree is enumerated
/// explicitly and evaluated in the same factored child-index order as the
/// simulator's dynamic program, so the per-outcome values agree bit for bit.
/// Returns (flow value, probability) pairs merged by exact value.
pub fn exact_min_cut(
    model: &EnvironmentModel,
    s: f64,
    depth: usize,
    budget: &EnumerationBudget,
) -> Result<Vec<(f64, f64)>, OracleError> {
    let sh = shape(model, depth);
    let mut atoms: Vec<[Vec<JointAtom>; 2]> = Vec::new();
    for g in 0..depth {
        let stage = model.stage(g);
        let grab = |t: State| stage.as_joint(t).map(|j| j.atoms).unwrap_or_default();
        atoms.push([grab(State::Zero), grab(State::One)]);
    }
    check_budget(
        model,
        &sh,
        &|g| (atoms[g][0].len() as u64, atoms[g][1].len() as u64),
        budget,
    )?;

    let internal = sh.offsets[depth];
    let node_count = sh.offsets[depth + 1];
    let mut states = vec![0u8; node_count];
    let mut ratios = vec![1.0f64; node_count];
    let mut dist: Vec<(f64, f64)> = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn rec(
        node: usize,
        weight: f64,
        internal: usize,
        depth: usize,
        s: f64,
        sh: &Shape,
        atoms: &[[Vec<JointAtom>; 2]],
        states: &mut Vec<u8>,
        ratios: &mut Vec<f64>,
        dist: &mut Vec<(f64, f64)>,
    ) {
        if node == internal {
            let value = min_cut_by_enumeration(sh, states, ratios, s, depth);
            match dist.iter_mut().find(|(v, _)| v.to_bits() == value.to_bits()) {
                Some(entry) => entry.1 += weight,
                None => dist.push((value, weight)),
            }
            return;
        }
        let g = generation_of(sh, node);
        let within = node - sh.offsets[g];
        let child_base = sh.offsets[g + 1] + within * sh.ms[g];
        let table = &atoms[g][states[node] as usize];
        for atom in table {
            let m = sh.ms[g];
            states[child_base..child_base + m].copy_from_slice(&atom.states);
            ratios[child_base..child_base + m].copy_from_slice(&atom.ratios);
            rec(
                node + 1,
                weight * atom.weight,
                internal,
                depth,
                s,
                sh,
                atoms,
                states,
                ratios,
                dist,
            );
        }
    }

    for (root_state, root_weight) in [
        (0u8, 1.0 - model.initial_one_prob),
        (1u8, model.initial_one_prob),
    ] {
        if root_weight == 0.0 {
            continue;
        }
        states[0] = root_state;
        if depth == 0 {
            let value: f64 = if root_state == 1 { 1.0 } else { 0.0 };
            match dist.iter_mut().find(|(v, _)| v.to_bits() == value.to_bits()) {
                Some(entry) => entry.1 += root_weight,
                None => dist.push((value, root_weight)),
            }
            continue;
        }
        rec(
            0,
            root_weight,
            internal,
            depth,
            s,
            &sh,
            &atoms,
            &mut states,
            &mut ratios,
            &mut dist,
        );
    }
    dist.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(dist)
}

/// Build the sampled-tree view of one enumerated outcome, for comparing the
/// simulator's dynamic program against the explicit cut enumeration.
pub fn outcome_tree(ms: Vec<usize>, states: Vec<u8>, ratios: Vec<f64>) -> SampledTree {
    SampledTree::from_parts(ms, states, ratios)
}

fn children_of(sh: &Shape, node: usize, g: usize) -> (usize, usize) {
    let within = node - sh.offsets[g];
    (sh.offsets[g + 1] + within * sh.ms[g], sh.ms[g])
}

/// Does the on-subtree below `node` (inclusive) reach the cut depth?
fn reaches(sh: &Shape, states: &[u8], node: usize, g: usize, depth: usize) -> bool {
    if states[node] == 0 {
        return false;
    }
    if g == depth {
        return true;
    }
    let (base, m) = children_of(sh, node, g);
    (0..m).any(|k| reaches(sh, states, base + k, g + 1, depth))
}

/// All cuts of the on-subtree rooted at `node`: at the cut depth the vertex
/// itself; above it, either the singleton {node} (when the subtree reaches
/// the cut depth) or one cut per surviving child, united. Dead-end subtrees
/// contribute the empty cut.
fn enumerate_cuts(
    sh: &Shape,
    states: &[u8],
    node: usize,
    g: usize,
    depth: usize,
) -> Vec<Vec<usize>> {
    if g == depth {
        return vec![vec![node]];
    }
    let (base, m) = children_of(sh, node, g);
    let live: Vec<usize> = (0..m).map(|k| base + k).filter(|&c| states[c] == 1).collect();
    let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
    for child in live {
        let child_cuts = enumerate_cuts(sh, states, child, g + 1, depth);
        let mut next = Vec::with_capacity(combos.len() * child_cuts.len());
        for existing in &combos {
            for cut in &child_cuts {
                let mut merged = existing.clone();
                merged.extend_from_slice(cut);
                next.push(merged);
            }
        }
        combos = next;
    }
    if reaches(sh, states, node, g, depth) {
        combos.push(vec![node]);
    }
    combos
}

/// Evaluate one cut with the factored recursion (children in index order,
/// ratio power times child value), mirroring the dynamic program's
/// arithmetic exactly.
#[allow(clippy::too_many_arguments)]
fn evaluate_cut(
    sh: &Shape,
    states: &[u8],
    ratios: &[f64],
    cut: &[usize],
    node: usize,
    g: usize,
    depth: usize,
    s: f64,
) -> f64 {
    if cut.contains(&node) {
        return 1.0;
    }
    if g == depth {
        return 0.0;
    }
    let (base, m) = children_of(sh, node, g);
    let mut acc = 0.0;
    for k in 0..m {
        let child = base + k;
        if states[child] == 1 {
            acc += ratios[child].powf(s) * evaluate_cut(sh, states, ratios, cut, child, g + 1, depth, s);
        }
    }
    acc
}

fn min_cut_by_enumeration(
    sh: &Shape,
    states: &[u8],
    ratios: &[f64],
    s: f64,
    depth: usize,
) -> f64 {
    if states[0] == 0 {
        return 0.0;
    }
    let cuts = enumerate_cuts(sh, states, 0, 0, depth);
    let mut best = f64::INFINITY;
    for cut in &cuts {
        let v = evaluate_cut(sh, states, ratios, cut, 0, 0, depth, s);
        best = best.min(v);
    }
    best
}

/// Enumerate every joint outcome and hand (weight, tree) to a visitor; used
/// by the equivalence tests to compare the dynamic program per outcome.
pub fn for_each_outcome(
    model: &EnvironmentModel,
    depth: usize,
    budget: &EnumerationBudget,
    mut visit: impl FnMut(f64, &SampledTree),
) -> Result<(), OracleError> {
    let sh = shape(model, depth);
    let mut atoms: Vec<[Vec<JointAtom>; 2]> = Vec::new();
    for g in 0..depth {
        let stage = model.stage(g);
        let grab = |t: State| stage.as_joint(t).map(|j| j.atoms).unwrap_or_default();
        atoms.push([grab(State::Zero), grab(State::One)]);
    }
    check_budget(
        model,
        &sh,
        &|g| (atoms[g][0].len() as u64, atoms[g][1].len() as u64),
        budget,
    )?;

    let internal = sh.offsets[depth];
    let node_count = sh.offsets[depth + 1];
    let ms: Vec<usize> = sh.ms.clone();
    let mut states = vec![0u8; node_count];
    let mut ratios = vec![1.0f64; node_count];

    #[allow(clippy::too_many_arguments)]
    fn rec(
        node: usize,
        weight: f64,
        internal: usize,
        sh: &Shape,
        ms: &[usize],
        atoms: &[[Vec<JointAtom>; 2]],
        states: &mut Vec<u8>,
        ratios: &mut Vec<f64>,
        visit: &mut dyn FnMut(f64, &SampledTree),
    ) {
        if node == internal {
            let tree = SampledTree::from_parts(ms.to_vec(), states.clone(), ratios.clone());
            visit(weight, &tree);
            return;
        }
        let g = generation_of(sh, node);
        let within = node - sh.offsets[g];
        let child_base = sh.offsets[g + 1] + within * sh.ms[g];
        let table = &atoms[g][states[node] as usize];
        for atom in table {
            let m = sh.ms[g];
            states[child_base..child_base + m].copy_from_slice(&atom.states);
            ratios[child_base..child_base + m].copy_from_slice(&atom.ratios);
            rec(node + 1, weight * atom.weight, internal, sh, ms, atoms, states, ratios, visit);
        }
    }

    for (root_state, root_weight) in [
        (0u8, 1.0 - model.initial_one_prob),
        (1u8, model.initial_one_prob),
    ] {
        if root_weight == 0.0 {
            continue;
        }
        states[0] = root_state;
        rec(
            0,
            root_weight,
            internal,
            &sh,
            &ms,
            &atoms,
            &mut states,
            &mut ratios,
            &mut visit,
        );
    }
    Ok(())
}
