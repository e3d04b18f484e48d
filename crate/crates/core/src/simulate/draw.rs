//! Drawing child-state and ratio vectors from stage laws. Every draw consumes
//! a fixed, documented pattern of variates from the caller's stream so that
//! stored and streaming tree walks reproduce each other bit for bit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::measures::{JointLaw, RatioLaw, TransitionLaw};
use crate::model::{StageKind, StageSpec, State};

fn draw_transition(
    law: &TransitionLaw,
    m: usize,
    rng: &mut ChaCha8Rng,
    states: &mut Vec<u8>,
) {
    match law {
        TransitionLaw::ProductBernoulli { p } => {
            for _ in 0..m {
                states.push((rng.random::<f64>() < *p) as u8);
            }
        }
        TransitionLaw::Microcanonical { count } => {
            // sequential sampling: uniform over all position subsets of size `count`
            let mut left = *count;
            for k in 0..m {
                let take = rng.random::<f64>() * ((m - k) as f64) < left as f64;
                if take {
                    states.push(1);
                    left -= 1;
                } else {
                    states.push(0);
                }
            }
        }
        TransitionLaw::FiniteDiscrete { atoms } => {
            let mut u = rng.random::<f64>();
            let mut chosen = atoms.len() - 1;
            for (i, atom) in atoms.iter().enumerate() {
                if u < atom.weight {
                    chosen = i;
                    break;
                }
                u -= atom.weight;
            }
            states.extend_from_slice(&atoms[chosen].states);
        }
    }
}

fn draw_ratio(law: &RatioLaw, rng: &mut ChaCha8Rng, ratios: &mut Vec<f64>) {
    match law {
        RatioLaw::PointMass { ratios: r } => ratios.extend_from_slice(r),
        RatioLaw::FiniteDiscrete { atoms } => {
            let mut u = rng.random::<f64>();
            let mut chosen = atoms.len() - 1;
            for (i, atom) in atoms.iter().enumerate() {
                if u < atom.weight {
                    chosen = i;
                    break;
                }
                u -= atom.weight;
            }
            ratios.extend_from_slice(&atoms[chosen].ratios);
        }
        RatioLaw::ProductDiscrete { coords } => {
            for law in coords {
                let mut u = rng.random::<f64>();
                let mut chosen = law.len() - 1;
                for (i, atom) in law.iter().enumerate() {
                    if u < atom.weight {
                        chosen = i;
                        break;
                    }
                    u -= atom.weight;
                }
                ratios.push(law[chosen].value);
            }
        }
    }
}

fn draw_joint(law: &JointLaw, rng: &mut ChaCha8Rng, states: &mut Vec<u8>, ratios: &mut Vec<f64>) {
    let mut u = rng.random::<f64>();
    let mut chosen = law.atoms.len() - 1;
    for (i, atom) in law.atoms.iter().enumerate() {
        if u < atom.weight {
            chosen = i;
            break;
        }
        u -= atom.weight;
    }
    states.extend_from_slice(&law.atoms[chosen].states);
    ratios.extend_from_slice(&law.atoms[chosen].ratios);
}

/// Draw the children's states and ratios of a vertex in `parent_state`.
/// Output vectors are appended to (callers clear them).
pub(crate) fn draw_children(
    stage: &StageSpec,
    parent_state: State,
    rng: &mut ChaCha8Rng,
    states: &mut Vec<u8>,
    ratios: &mut Vec<f64>,
) {
    match &stage.kind {
        StageKind::Separated {
            ratio_law,
            trans0,
            trans1,
        } => {
            let trans = match parent_state {
                State::Zero => trans0,
                State::One => trans1,
            };
            draw_transition(trans, stage.m, rng, states);
            draw_ratio(ratio_law, rng, ratios);
        }
        StageKind::Joint { joint0, joint1 } => {
            let law = match parent_state {
                State::Zero => joint0,
                State::One => joint1,
            };
            draw_joint(law, rng, states, ratios);
        }
    }
}
