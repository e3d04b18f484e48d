//! Finitely supported measures: contraction-ratio laws, child-state transition
//! laws, and joint state/ratio laws.
//!
//! Every law here has finite support, so all expectations reduce to finite
//! sums. Product-form laws (`ProductBernoulli`, `Microcanonical`,
//! `ProductDiscrete`) stay factored; atom lists are materialized only on
//! demand and refuse to expand past [`MATERIALIZE_CAP`] atoms.

use serde::{Deserialize, Serialize};

/// Hard ceiling on the number of atoms a factored law may expand to.
pub const MATERIALIZE_CAP: u64 = 1 << 20;

/// Probability weights must sum to one within this tolerance; they are then
/// renormalized exactly on load.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Parent state of the chain: every vertex is either off (white) or on (black).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum State {
    Zero,
    One,
}

impl State {
    pub fn from_bit(bit: u8) -> State {
        if bit == 0 { State::Zero } else { State::One }
    }
}

/// One weighted ratio vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioAtom {
    pub ratios: Vec<f64>,
    pub weight: f64,
}

/// One weighted point of a scalar law on (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarAtom {
    pub value: f64,
    pub weight: f64,
}

/// Law of the vector of contraction ratios a vertex hands to its children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RatioLaw {
    /// Deterministic ratios.
    PointMass { ratios: Vec<f64> },
    /// Finitely many weighted ratio vectors.
    FiniteDiscrete { atoms: Vec<RatioAtom> },
    /// Independent coordinates, each with its own finite scalar law.
    ProductDiscrete { coords: Vec<Vec<ScalarAtom>> },
}

/// One weighted child-state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateAtom {
    pub states: Vec<u8>,
    pub weight: f64,
}

/// Law of the children's state vector given the parent state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TransitionLaw {
    /// Each child is on independently with probability `p`.
    ProductBernoulli { p: f64 },
    /// Exactly `count` children are on, positions uniform.
    Microcanonical { count: usize },
    /// Finitely many weighted {0,1}-vectors.
    FiniteDiscrete { atoms: Vec<StateAtom> },
}

/// One weighted (state vector, ratio vector) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointAtom {
    pub states: Vec<u8>,
    pub ratios: Vec<f64>,
    pub weight: f64,
}

/// Joint law of the children's states and ratios, for stages where the two
/// are correlated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointLaw {
    pub atoms: Vec<JointAtom>,
}

/// Scale weights to total one, then pin the last weight to one minus the
/// left-to-right sum of the others. The recomputed left-to-right total is
/// then exactly 1.0, so loading a saved model is the identity and derived
/// sums (means of indicator coordinates, pgf values at one) hit their
/// targets without one-ulp residue.
fn normalize_weights(weights: &mut [&mut f64]) {
    let sum: f64 = weights.iter().map(|w| **w).sum();
    if sum.is_nan() || sum <= 0.0 {
        return;
    }
    for w in weights.iter_mut() {
        **w /= sum;
    }
    if let Some((last, others)) = weights.split_last_mut() {
        let head: f64 = others.iter().map(|w| **w).sum();
        let adjusted = 1.0 - head;
        if adjusted > 0.0 {
            **last = adjusted;
        }
    }
}

impl RatioLaw {
    /// E[sum_k l_k^s] under this law.
    pub fn sum_pow_mean(&self, s: f64) -> f64 {
        match self {
            RatioLaw::PointMass { ratios } => ratios.iter().map(|r| r.powf(s)).sum(),
            RatioLaw::FiniteDiscrete { atoms } => atoms
                .iter()
                .map(|a| a.weight * a.ratios.iter().map(|r| r.powf(s)).sum::<f64>())
                .sum(),
            RatioLaw::ProductDiscrete { coords } => coords
                .iter()
                .map(|law| law.iter().map(|a| a.weight * a.value.powf(s)).sum::<f64>())
                .sum(),
        }
    }

    /// E[sum_{k != i} l_k^s l_i^s] under this law.
    pub fn pair_pow_mean(&self, s: f64) -> f64 {
        fn pair_of_vector(ratios: &[f64], s: f64) -> f64 {
            let t1: f64 = ratios.iter().map(|r| r.powf(s)).sum();
            let t2: f64 = ratios.iter().map(|r| r.powf(2.0 * s)).sum();
            t1 * t1 - t2
        }
        match self {
            RatioLaw::PointMass { ratios } => pair_of_vector(ratios, s),
            RatioLaw::FiniteDiscrete { atoms } => atoms
                .iter()
                .map(|a| a.weight * pair_of_vector(&a.ratios, s))
                .sum(),
            RatioLaw::ProductDiscrete { coords } => {
                let means: Vec<f64> = coords
                    .iter()
                    .map(|law| law.iter().map(|a| a.weight * a.value.powf(s)).sum::<f64>())
                    .collect();
                let t1: f64 = means.iter().sum();
                let t2: f64 = means.iter().map(|e| e * e).sum();
                t1 * t1 - t2
            }
        }
    }

    /// E[l_k^s] for one coordinate.
    pub fn coord_pow_mean(&self, k: usize, s: f64) -> f64 {
        match self {
            RatioLaw::PointMass { ratios } => ratios[k].powf(s),
            RatioLaw::FiniteDiscrete { atoms } => {
                atoms.iter().map(|a| a.weight * a.ratios[k].powf(s)).sum()
            }
            RatioLaw::ProductDiscrete { coords } => {
                coords[k].iter().map(|a| a.weight * a.value.powf(s)).sum()
            }
        }
    }

    /// E[l_k^s l_i^s] for a pair of distinct coordinates.
    pub fn coord_pair_pow_mean(&self, k: usize, i: usize, s: f64) -> f64 {
        match self {
            RatioLaw::PointMass { ratios } => (ratios[k] * ratios[i]).powf(s),
            RatioLaw::FiniteDiscrete { atoms } => atoms
                .iter()
                .map(|a| a.weight * (a.ratios[k] * a.ratios[i]).powf(s))
                .sum(),
            RatioLaw::ProductDiscrete { .. } => self.coord_pow_mean(k, s) * self.coord_pow_mean(i, s),
        }
    }

    /// Smallest and largest ratio coordinate over the whole support.
    pub fn support_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut feed = |r: f64| {
            lo = lo.min(r);
            hi = hi.max(r);
        };
        match self {
            RatioLaw::PointMass { ratios } => ratios.iter().copied().for_each(&mut feed),
            RatioLaw::FiniteDiscrete { atoms } => {
                for a in atoms {
                    a.ratios.iter().copied().for_each(&mut feed);
                }
            }
            RatioLaw::ProductDiscrete { coords } => {
                for law in coords {
                    law.iter().map(|a| a.value).for_each(&mut feed);
                }
            }
        }
        (lo, hi)
    }

    /// Number of atoms a full materialization would produce.
    pub fn atom_count(&self) -> u64 {
        match self {
            RatioLaw::PointMass { .. } => 1,
            RatioLaw::FiniteDiscrete { atoms } => atoms.len() as u64,
            RatioLaw::ProductDiscrete { coords } => coords
                .iter()
                .fold(1u64, |acc, law| acc.saturating_mul(law.len() as u64)),
        }
    }

    /// Expand to an explicit atom list, refusing past [`MATERIALIZE_CAP`].
    pub fn materialize(&self) -> Option<Vec<RatioAtom>> {
        if self.atom_count() > MATERIALIZE_CAP {
            return None;
        }
        match self {
            RatioLaw::PointMass { ratios } => Some(vec![RatioAtom {
                ratios: ratios.clone(),
                weight: 1.0,
            }]),
            RatioLaw::FiniteDiscrete { atoms } => Some(atoms.clone()),
            RatioLaw::ProductDiscrete { coords } => {
                let mut out = vec![RatioAtom {
                    ratios: Vec::new(),
                    weight: 1.0,
                }];
                for law in coords {
                    let mut next = Vec::with_capacity(out.len() * law.len());
                    for partial in &out {
                        for atom in law {
                            let mut ratios = partial.ratios.clone();
                            ratios.push(atom.value);
                            next.push(RatioAtom {
                                ratios,
                                weight: partial.weight * atom.weight,
                            });
                        }
                    }
                    out = next;
                }
                Some(out)
            }
        }
    }

    pub(crate) fn renormalize(&mut self) {
        match self {
            RatioLaw::PointMass { .. } => {}
            RatioLaw::FiniteDiscrete { atoms } => {
                atoms.retain(|a| a.weight != 0.0);
                let mut refs: Vec<&mut f64> = atoms.iter_mut().map(|a| &mut a.weight).collect();
                normalize_weights(&mut refs);
            }
            RatioLaw::ProductDiscrete { coords } => {
                for law in coords {
                    law.retain(|a| a.weight != 0.0);
                    let mut refs: Vec<&mut f64> = law.iter_mut().map(|a| &mut a.weight).collect();
                    normalize_weights(&mut refs);
                }
            }
        }
    }
}

fn binomial_coefficient(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

impl TransitionLaw {
    /// pgf of the number of on-children: phi(z) = E[z^{x_1+...+x_m}].
    pub fn pgf(&self, m: usize, z: f64) -> f64 {
        match self {
            TransitionLaw::ProductBernoulli { p } => (1.0 - p + p * z).powi(m as i32),
            TransitionLaw::Microcanonical { count } => z.powi(*count as i32),
            TransitionLaw::FiniteDiscrete { atoms } => atoms
                .iter()
                .map(|a| a.weight * z.powi(a.states.iter().map(|&x| x as i32).sum()))
                .sum(),
        }
    }

    /// phi'(1): mean number of on-children.
    pub fn pgf_d1(&self, m: usize) -> f64 {
        match self {
            TransitionLaw::ProductBernoulli { p } => m as f64 * p,
            TransitionLaw::Microcanonical { count } => *count as f64,
            TransitionLaw::FiniteDiscrete { atoms } => atoms
                .iter()
                .map(|a| a.weight * a.states.iter().map(|&x| x as f64).sum::<f64>())
                .sum(),
        }
    }

    /// phi''(1): factorial second moment of the number of on-children.
    pub fn pgf_d2(&self, m: usize) -> f64 {
        match self {
            TransitionLaw::ProductBernoulli { p } => (m * (m.saturating_sub(1))) as f64 * p * p,
            TransitionLaw::Microcanonical { count } => (*count * count.saturating_sub(1)) as f64,
            TransitionLaw::FiniteDiscrete { atoms } => atoms
                .iter()
                .map(|a| {
                    let k = a.states.iter().map(|&x| x as f64).sum::<f64>();
                    a.weight * k * (k - 1.0)
                })
                .sum(),
        }
    }

    /// Mean of coordinate `k`: P(x_k = 1).
    pub fn coord_mean(&self, m: usize, k: usize) -> f64 {
        match self {
            TransitionLaw::ProductBernoulli { p } => *p,
            TransitionLaw::Microcanonical { count } => *count as f64 / m as f64,
            TransitionLaw::FiniteDiscrete { atoms } => atoms
                .iter()
                .map(|a| a.weight * a.states[k] as f64)
                .sum(),
        }
    }

    /// P(x_k = 1 and x_i = 1) for distinct coordinates.
    pub fn coord_pair_mean(&self, m: usize, k: usize, i: usize) -> f64 {
        match self {
            TransitionLaw::ProductBernoulli { p } => p * p,
            TransitionLaw::Microcanonical { count } => {
                if m < 2 {
                    0.0
                } else {
                    (*count as f64 * (*count as f64 - 1.0)) / (m as f64 * (m as f64 - 1.0))
                }
            }
            TransitionLaw::FiniteDiscrete { atoms } => atoms
                .iter()
                .map(|a| a.weight * (a.states[k] & a.states[i]) as f64)
                .sum(),
        }
    }

    /// Distribution of the number of on-children as a vector indexed by count.
    pub fn sum_distribution(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m + 1];
        match self {
            TransitionLaw::ProductBernoulli { p } => {
                for (k, slot) in out.iter_mut().enumerate() {
                    *slot = binomial_coefficient(m, k)
                        * p.powi(k as i32)
                        * (1.0 - p).powi((m - k) as i32);
                }
            }
            TransitionLaw::Microcanonical { count } => out[*count] = 1.0,
            TransitionLaw::FiniteDiscrete { atoms } => {
                for a in atoms {
                    let k: usize = a.states.iter().map(|&x| x as usize).sum();
                    out[k] += a.weight;
                }
            }
        }
        out
    }

    /// True when the law gives all its mass to the all-zero vector, decided
    /// symbolically rather than by comparing floats against one.
    pub fn certainly_all_zero(&self) -> bool {
        match self {
            TransitionLaw::ProductBernoulli { p } => *p == 0.0,
            TransitionLaw::Microcanonical { count } => *count == 0,
            TransitionLaw::FiniteDiscrete { atoms } => atoms
                .iter()
                .all(|a| a.weight == 0.0 || a.states.iter().all(|&x| x == 0)),
        }
    }

    /// True when the all-zero vector has mass zero, decided symbolically.
    pub fn never_all_zero(&self, m: usize) -> bool {
        match self {
            TransitionLaw::ProductBernoulli { p } => *p == 1.0 && m > 0,
            TransitionLaw::Microcanonical { count } => *count >= 1,
            TransitionLaw::FiniteDiscrete { atoms } => !atoms
                .iter()
                .any(|a| a.weight > 0.0 && a.states.iter().all(|&x| x == 0)),
        }
    }

    pub fn atom_count(&self, m: usize) -> u64 {
        match self {
            TransitionLaw::ProductBernoulli { .. } => 1u64.checked_shl(m as u32).unwrap_or(u64::MAX),
            TransitionLaw::Microcanonical { count } => {
                let mut acc = 1u64;
                let k = (*count).min(m - *count.min(&m));
                for i in 0..k {
                    acc = acc.saturating_mul((m - i) as u64) / (i as u64 + 1);
                }
                acc
            }
            TransitionLaw::FiniteDiscrete { atoms } => atoms.len() as u64,
        }
    }

    /// Expand to an explicit atom list, refusing past [`MATERIALIZE_CAP`].
    pub fn materialize(&self, m: usize) -> Option<Vec<StateAtom>> {
        if self.atom_count(m) > MATERIALIZE_CAP {
            return None;
        }
        match self {
            TransitionLaw::ProductBernoulli { p } => {
                let mut out = Vec::with_capacity(1 << m);
                for mask in 0u64..(1 << m) {
                    let states: Vec<u8> = (0..m).map(|k| ((mask >> k) & 1) as u8).collect();
                    let ones = mask.count_ones() as i32;
                    let weight = p.powi(ones) * (1.0 - p).powi(m as i32 - ones);
                    if weight != 0.0 {
                        out.push(StateAtom { states, weight });
                    }
                }
                Some(out)
            }
            TransitionLaw::Microcanonical { count } => {
                let mut out = Vec::new();
                let weight = 1.0 / self.atom_count(m) as f64;
                let mut chosen = vec![false; m];
                fn rec(
                    start: usize,
                    left: usize,
                    m: usize,
                    chosen: &mut Vec<bool>,
                    weight: f64,
                    out: &mut Vec<StateAtom>,
                ) {
                    if left == 0 {
                        out.push(StateAtom {
                            states: chosen.iter().map(|&b| b as u8).collect(),
                            weight,
                        });
                        return;
                    }
                    for k in start..=(m - left) {
                        chosen[k] = true;
                        rec(k + 1, left - 1, m, chosen, weight, out);
                        chosen[k] = false;
                    }
                }
                rec(0, *count, m, &mut chosen, weight, &mut out);
                Some(out)
            }
            TransitionLaw::FiniteDiscrete { atoms } => Some(atoms.clone()),
        }
    }

    pub(crate) fn renormalize(&mut self) {
        if let TransitionLaw::FiniteDiscrete { atoms } = self {
            atoms.retain(|a| a.weight != 0.0);
            let mut refs: Vec<&mut f64> = atoms.iter_mut().map(|a| &mut a.weight).collect();
            normalize_weights(&mut refs);
        }
    }
}

impl JointLaw {
    pub fn pgf(&self, z: f64) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.weight * z.powi(a.states.iter().map(|&x| x as i32).sum()))
            .sum()
    }

    pub fn pgf_d1(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.weight * a.states.iter().map(|&x| x as f64).sum::<f64>())
            .sum()
    }

    pub fn pgf_d2(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let k = a.states.iter().map(|&x| x as f64).sum::<f64>();
                a.weight * k * (k - 1.0)
            })
            .sum()
    }

    /// E[sum_k l_k^s x_k].
    pub fn moran_sum(&self, s: f64) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                a.weight
                    * a.ratios
                        .iter()
                        .zip(&a.states)
                        .map(|(l, &x)| if x == 1 { l.powf(s) } else { 0.0 })
                        .sum::<f64>()
            })
            .sum()
    }

    /// E[sum_{k != i} l_k^s l_i^s x_k x_i].
    pub fn moran_pair_sum(&self, s: f64) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let t1: f64 = a
                    .ratios
                    .iter()
                    .zip(&a.states)
                    .map(|(l, &x)| if x == 1 { l.powf(s) } else { 0.0 })
                    .sum();
                let t2: f64 = a
                    .ratios
                    .iter()
                    .zip(&a.states)
                    .map(|(l, &x)| if x == 1 { l.powf(2.0 * s) } else { 0.0 })
                    .sum();
                a.weight * (t1 * t1 - t2)
            })
            .sum()
    }

    pub fn sum_distribution(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m + 1];
        for a in &self.atoms {
            let k: usize = a.states.iter().map(|&x| x as usize).sum();
            out[k] += a.weight;
        }
        out
    }

    pub fn certainly_all_zero(&self) -> bool {
        self.atoms
            .iter()
            .all(|a| a.weight == 0.0 || a.states.iter().all(|&x| x == 0))
    }

    pub fn never_all_zero(&self) -> bool {
        !self
            .atoms
            .iter()
            .any(|a| a.weight > 0.0 && a.states.iter().all(|&x| x == 0))
    }

    pub fn support_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in &self.atoms {
            for &r in &a.ratios {
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        (lo, hi)
    }

    pub(crate) fn renormalize(&mut self) {
        self.atoms.retain(|a| a.weight != 0.0);
        let mut refs: Vec<&mut f64> = self.atoms.iter_mut().map(|a| &mut a.weight).collect();
        normalize_weights(&mut refs);
    }
}
