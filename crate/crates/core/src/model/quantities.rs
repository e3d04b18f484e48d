//! Per-stage scalar quantities: child-count pgfs and their derivatives at one,
//! Moran sums, and the second factorial moment of ratio-weighted percolation.
//!
//! Everything is evaluated in closed form for product laws and by finite atom
//! sums otherwise; nothing here ever materializes a product law.

use super::measures::{State, TransitionLaw};
use super::{StageKind, StageSpec};

impl StageSpec {
    /// phi_{t,j}(z): pgf of the number of children in state one, given the
    /// parent state.
    pub fn offspring_pgf(&self, t: State, z: f64) -> f64 {
        match &self.kind {
            StageKind::Separated { .. } => self.transition(t).unwrap().pgf(self.m, z),
            StageKind::Joint { .. } => self.joint(t).unwrap().pgf(z),
        }
    }

    /// phi'_{t,j}(1): mean number of children in state one.
    pub fn offspring_mean(&self, t: State) -> f64 {
        match &self.kind {
            StageKind::Separated { .. } => self.transition(t).unwrap().pgf_d1(self.m),
            StageKind::Joint { .. } => self.joint(t).unwrap().pgf_d1(),
        }
    }

    /// phi''_{t,j}(1): second factorial moment of the number of on-children.
    pub fn offspring_factorial2(&self, t: State) -> f64 {
        match &self.kind {
            StageKind::Separated { .. } => self.transition(t).unwrap().pgf_d2(self.m),
            StageKind::Joint { .. } => self.joint(t).unwrap().pgf_d2(),
        }
    }

    /// Distribution of the number of on-children, indexed by count.
    pub fn offspring_distribution(&self, t: State) -> Vec<f64> {
        match &self.kind {
            StageKind::Separated { .. } => self.transition(t).unwrap().sum_distribution(self.m),
            StageKind::Joint { .. } => self.joint(t).unwrap().sum_distribution(self.m),
        }
    }

    /// Whether the children are all in state zero with probability one,
    /// decided symbolically (equivalently, phi_{t,j}(0) = 1).
    pub fn offspring_certainly_none(&self, t: State) -> bool {
        match &self.kind {
            StageKind::Separated { .. } => self.transition(t).unwrap().certainly_all_zero(),
            StageKind::Joint { .. } => self.joint(t).unwrap().certainly_all_zero(),
        }
    }

    /// Whether at least one child is in state one with probability one,
    /// decided symbolically (equivalently, phi_{t,j}(0) = 0).
    pub fn offspring_never_none(&self, t: State) -> bool {
        match &self.kind {
            StageKind::Separated { .. } => self.transition(t).unwrap().never_all_zero(self.m),
            StageKind::Joint { .. } => self.joint(t).unwrap().never_all_zero(),
        }
    }

    /// alpha_{s,j} = E[sum_k L_k^s X_k] under the state-one law: the
    /// varying-environment generalization of the Moran equation's left side.
    pub fn moran_sum(&self, s: f64) -> f64 {
        match &self.kind {
            StageKind::Separated {
                ratio_law, trans1, ..
            } => match trans1 {
                TransitionLaw::ProductBernoulli { p } => p * ratio_law.sum_pow_mean(s),
                TransitionLaw::Microcanonical { count } => {
                    *count as f64 / self.m as f64 * ratio_law.sum_pow_mean(s)
                }
                TransitionLaw::FiniteDiscrete { .. } => (0..self.m)
                    .map(|k| {
                        trans1.coord_mean(self.m, k) * ratio_law.coord_pow_mean(k, s)
                    })
                    .sum(),
            },
            StageKind::Joint { joint1, .. } => joint1.moran_sum(s),
        }
    }

    /// Second factorial moment at one of the ratio-weighted percolation pgf:
    /// E[sum_{k != i} L_k^s L_i^s X_k X_i]. Its first moment is `moran_sum`.
    pub fn moran_pair_sum(&self, s: f64) -> f64 {
        match &self.kind {
            StageKind::Separated {
                ratio_law, trans1, ..
            } => match trans1 {
                TransitionLaw::ProductBernoulli { p } => p * p * ratio_law.pair_pow_mean(s),
                TransitionLaw::Microcanonical { count } => {
                    if self.m < 2 {
                        0.0
                    } else {
                        let a = *count as f64;
                        let m = self.m as f64;
                        a * (a - 1.0) / (m * (m - 1.0)) * ratio_law.pair_pow_mean(s)
                    }
                }
                TransitionLaw::FiniteDiscrete { .. } => {
                    let mut acc = 0.0;
                    for k in 0..self.m {
                        for i in 0..self.m {
                            if k != i {
                                acc += trans1.coord_pair_mean(self.m, k, i)
                                    * ratio_law.coord_pair_pow_mean(k, i, s);
                            }
                        }
                    }
                    acc
                }
            },
            StageKind::Joint { joint1, .. } => joint1.moran_pair_sum(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::measures::{JointAtom, JointLaw, RatioLaw};

    fn stage(m: usize, p: f64, ratio: f64) -> StageSpec {
        StageSpec {
            m,
            c: None,
            kind: StageKind::Separated {
                ratio_law: RatioLaw::PointMass {
                    ratios: vec![ratio; m],
                },
                trans0: TransitionLaw::ProductBernoulli { p: 0.0 },
                trans1: TransitionLaw::ProductBernoulli { p },
            },
        }
    }

    #[test]
    fn moran_sum_bernoulli_percolation() {
        // 4 children, survival 0.5, ratio 1/2 at s = 1: 4 * 0.5 * 0.5 = 1
        assert!((stage(4, 0.5, 0.5).moran_sum(1.0) - 1.0).abs() < 1e-15);
        // s = 0 reduces to the mean offspring count
        assert!((stage(4, 0.5, 0.5).moran_sum(0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn moran_sum_zero_when_children_certainly_off() {
        let st = stage(4, 0.0, 0.5);
        for &s in &[-1.0, 0.0, 1.0, 2.5] {
            assert_eq!(st.moran_sum(s), 0.0);
        }
    }

    #[test]
    fn deterministic_moran_equation_at_one() {
        // m = 2, ratios (1/2, 1/2), all children on: sum L^s at s = 1 is 1
        assert!((stage(2, 1.0, 0.5).moran_sum(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moments_agree_with_materialized_joint() {
        // factored closed forms checked against brute-force atom sums
        let st = stage(3, 0.7, 0.4);
        let joint = st.as_joint(State::One).unwrap();
        for &s in &[0.0, 0.5, 1.7] {
            assert!((st.moran_sum(s) - joint.moran_sum(s)).abs() < 1e-13);
            assert!((st.moran_pair_sum(s) - joint.moran_pair_sum(s)).abs() < 1e-13);
        }
        assert!((st.offspring_mean(State::One) - joint.pgf_d1()).abs() < 1e-13);
        assert!((st.offspring_factorial2(State::One) - joint.pgf_d2()).abs() < 1e-13);
        for &z in &[0.0, 0.3, 1.0] {
            assert!((st.offspring_pgf(State::One, z) - joint.pgf(z)).abs() < 1e-13);
        }
    }

    #[test]
    fn joint_stage_quantities() {
        let joint1 = JointLaw {
            atoms: vec![
                JointAtom { states: vec![1, 1], ratios: vec![0.3, 0.6], weight: 0.5 },
                JointAtom { states: vec![1, 0], ratios: vec![0.5, 0.5], weight: 0.5 },
            ],
        };
        let st = StageSpec {
            m: 2,
            c: None,
            kind: StageKind::Joint {
                joint0: JointLaw {
                    atoms: vec![JointAtom { states: vec![0, 0], ratios: vec![0.5, 0.5], weight: 1.0 }],
                },
                joint1,
            },
        };
        // alpha at s=1: 0.5*(0.3+0.6) + 0.5*0.5 = 0.7
        assert!((st.moran_sum(1.0) - 0.7).abs() < 1e-15);
        // pair sum at s=1: only the (1,1) atom contributes 2*0.3*0.6
        assert!((st.moran_pair_sum(1.0) - 0.5 * 2.0 * 0.18).abs() < 1e-15);
        assert!(st.offspring_certainly_none(State::Zero));
        assert!(st.offspring_never_none(State::One));
    }
}
