//! Model validation: every invariant violation is reported with a path to the
//! offending field rather than raised as an exception.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::measures::{JointLaw, RatioLaw, TransitionLaw, WEIGHT_TOLERANCE};
use super::{EnvironmentModel, GeometryRule, StageKind, StageSpec, TailRule};

/// One violated invariant, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

/// Outcome of validating a model. `summary` records the quantities the rest
/// of the pipeline relies on (bounded branching, ratio support inside (0,1)).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub summary: ValidationSummary,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub max_branching: usize,
    pub ratio_lower: f64,
    pub ratio_upper: f64,
    pub stage_count: usize,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            write!(f, "ok")
        } else {
            for v in &self.violations {
                writeln!(f, "{}: {}", v.path, v.message)?;
            }
            Ok(())
        }
    }
}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    fn check_weight_sum(&mut self, path: &str, sum: f64) {
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            self.push(path, format!("weights sum to {sum}, expected 1 within {WEIGHT_TOLERANCE:e}"));
        }
    }

    // negated comparisons so that NaN coordinates fail both checks
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn check_ratio_coord(&mut self, path: &str, r: f64) {
        if !(r > 0.0) {
            self.push(path, format!("ratio {r} must be > 0"));
        }
        if !(r < 1.0) {
            self.push(path, format!("ratio {r} must be < 1"));
        }
    }

    fn check_ratio_law(&mut self, path: &str, law: &RatioLaw, m: usize) {
        match law {
            RatioLaw::PointMass { ratios } => {
                if ratios.len() != m {
                    self.push(path, format!("ratio vector has length {}, stage has m = {m}", ratios.len()));
                }
                for (k, &r) in ratios.iter().enumerate() {
                    self.check_ratio_coord(&format!("{path}.ratios[{k}]"), r);
                }
            }
            RatioLaw::FiniteDiscrete { atoms } => {
                if atoms.is_empty() {
                    self.push(path, "finite discrete ratio law has no atoms");
                }
                for (i, atom) in atoms.iter().enumerate() {
                    if atom.ratios.len() != m {
                        self.push(
                            format!("{path}.atoms[{i}]"),
                            format!("ratio vector has length {}, stage has m = {m}", atom.ratios.len()),
                        );
                    }
                    if atom.weight < 0.0 {
                        self.push(format!("{path}.atoms[{i}].weight"), "weight must be nonnegative");
                    }
                    for (k, &r) in atom.ratios.iter().enumerate() {
                        self.check_ratio_coord(&format!("{path}.atoms[{i}].ratios[{k}]"), r);
                    }
                }
                self.check_weight_sum(path, atoms.iter().map(|a| a.weight).sum());
            }
            RatioLaw::ProductDiscrete { coords } => {
                if coords.len() != m {
                    self.push(path, format!("product law has {} coordinates, stage has m = {m}", coords.len()));
                }
                for (k, coord) in coords.iter().enumerate() {
                    if coord.is_empty() {
                        self.push(format!("{path}.coords[{k}]"), "coordinate law has no atoms");
                    }
                    for (i, atom) in coord.iter().enumerate() {
                        if atom.weight < 0.0 {
                            self.push(format!("{path}.coords[{k}][{i}].weight"), "weight must be nonnegative");
                        }
                        self.check_ratio_coord(&format!("{path}.coords[{k}][{i}].value"), atom.value);
                    }
                    self.check_weight_sum(
                        &format!("{path}.coords[{k}]"),
                        coord.iter().map(|a| a.weight).sum(),
                    );
                }
            }
        }
    }

    fn check_transition(&mut self, path: &str, law: &TransitionLaw, m: usize) {
        match law {
            TransitionLaw::ProductBernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    self.push(format!("{path}.p"), format!("probability {p} outside [0,1]"));
                }
            }
            TransitionLaw::Microcanonical { count } => {
                if *count > m {
                    self.push(format!("{path}.count"), format!("count {count} exceeds m = {m}"));
                }
            }
            TransitionLaw::FiniteDiscrete { atoms } => {
                if atoms.is_empty() {
                    self.push(path, "finite discrete transition law has no atoms");
                }
                for (i, atom) in atoms.iter().enumerate() {
                    if atom.states.len() != m {
                        self.push(
                            format!("{path}.atoms[{i}]"),
                            format!("state vector has length {}, stage has m = {m}", atom.states.len()),
                        );
                    }
                    if atom.weight < 0.0 {
                        self.push(format!("{path}.atoms[{i}].weight"), "weight must be nonnegative");
                    }
                    if atom.states.iter().any(|&x| x > 1) {
                        self.push(format!("{path}.atoms[{i}].states"), "states must be 0 or 1");
                    }
                }
                self.check_weight_sum(path, atoms.iter().map(|a| a.weight).sum());
            }
        }
    }

    fn check_joint(&mut self, path: &str, law: &JointLaw, m: usize) {
        if law.atoms.is_empty() {
            self.push(path, "joint law has no atoms");
        }
        for (i, atom) in law.atoms.iter().enumerate() {
            if atom.states.len() != m || atom.ratios.len() != m {
                self.push(
                    format!("{path}.atoms[{i}]"),
                    format!(
                        "state/ratio vectors have lengths {}/{}, stage has m = {m}",
                        atom.states.len(),
                        atom.ratios.len()
                    ),
                );
            }
            if atom.weight < 0.0 {
                self.push(format!("{path}.atoms[{i}].weight"), "weight must be nonnegative");
            }
            if atom.states.iter().any(|&x| x > 1) {
                self.push(format!("{path}.atoms[{i}].states"), "states must be 0 or 1");
            }
            for (k, &r) in atom.ratios.iter().enumerate() {
                self.check_ratio_coord(&format!("{path}.atoms[{i}].ratios[{k}]"), r);
            }
        }
        self.check_weight_sum(path, law.atoms.iter().map(|a| a.weight).sum());
    }

    fn check_stage(&mut self, path: &str, stage: &StageSpec, geometry: Option<GeometryRule>, d: usize) {
        if stage.m < 2 {
            self.push(format!("{path}.m"), format!("branching factor {} must be >= 2", stage.m));
        }
        match &stage.kind {
            StageKind::Separated {
                ratio_law,
                trans0,
                trans1,
            } => {
                self.check_ratio_law(&format!("{path}.ratio_law"), ratio_law, stage.m);
                self.check_transition(&format!("{path}.trans0"), trans0, stage.m);
                self.check_transition(&format!("{path}.trans1"), trans1, stage.m);
            }
            StageKind::Joint { joint0, joint1 } => {
                self.check_joint(&format!("{path}.joint0"), joint0, stage.m);
                self.check_joint(&format!("{path}.joint1"), joint1, stage.m);
            }
        }
        match geometry {
            Some(GeometryRule::CubeSubdivision) => {
                let Some(c) = stage.c else {
                    self.push(format!("{path}.c"), "cube subdivision requires cells-per-side c on every stage");
                    return;
                };
                if c < 2 {
                    self.push(format!("{path}.c"), format!("cells per side {c} must be >= 2"));
                    return;
                }
                let expected_m = (c as u128).pow(d as u32);
                if stage.m as u128 != expected_m {
                    self.push(
                        format!("{path}.m"),
                        format!("m = {} but geometry requires m = c^d = {expected_m}", stage.m),
                    );
                }
                let target = 1.0 / c as f64;
                match &stage.kind {
                    StageKind::Separated {
                        ratio_law: RatioLaw::PointMass { ratios },
                        ..
                    } if ratios.iter().all(|r| (r - target).abs() <= 1e-12) => {}
                    _ => self.push(
                        format!("{path}.ratio_law"),
                        format!("cube subdivision requires point-mass ratios 1/c = {target}"),
                    ),
                }
            }
            Some(GeometryRule::IntervalSplit) => {
                if stage.m != 2 {
                    self.push(format!("{path}.m"), "interval splitting requires m = 2");
                }
                let check_atom_sum = |checker: &mut Checker, apath: String, ratios: &[f64]| {
                    if ratios.len() == 2 && (ratios[0] + ratios[1] - 1.0).abs() > 1e-12 {
                        checker.push(apath, format!("interval split ratios must sum to 1, got {} + {}", ratios[0], ratios[1]));
                    }
                };
                match &stage.kind {
                    StageKind::Separated { ratio_law, .. } => match ratio_law {
                        RatioLaw::PointMass { ratios } => {
                            check_atom_sum(self, format!("{path}.ratio_law"), ratios)
                        }
                        RatioLaw::FiniteDiscrete { atoms } => {
                            for (i, a) in atoms.iter().enumerate() {
                                check_atom_sum(self, format!("{path}.ratio_law.atoms[{i}]"), &a.ratios);
                            }
                        }
                        RatioLaw::ProductDiscrete { .. } => self.push(
                            format!("{path}.ratio_law"),
                            "interval splitting needs complementary ratios; independent coordinates cannot guarantee that",
                        ),
                    },
                    StageKind::Joint { joint0, joint1 } => {
                        for (name, law) in [("joint0", joint0), ("joint1", joint1)] {
                            for (i, a) in law.atoms.iter().enumerate() {
                                check_atom_sum(self, format!("{path}.{name}.atoms[{i}]"), &a.ratios);
                            }
                        }
                    }
                }
            }
            None => {}
        }
    }
}

impl EnvironmentModel {
    /// Check every invariant; returns a report listing all violations found
    /// (empty report = valid model).
    pub fn validate(&self) -> ValidationReport {
        let mut checker = Checker {
            violations: Vec::new(),
        };
        if !(0.0..=1.0).contains(&self.initial_one_prob) {
            checker.push(
                "initial_one_prob",
                format!("probability {} outside [0,1]", self.initial_one_prob),
            );
        }
        if self.ambient_dim == 0 {
            checker.push("ambient_dim", "ambient dimension must be >= 1");
        }
        if let TailRule::Periodic { stages } = &self.tail
            && stages.is_empty() {
                checker.push("tail.stages", "periodic tail must be nonempty");
            }
        for (i, stage) in self.prefix.iter().enumerate() {
            checker.check_stage(&format!("prefix[{i}]"), stage, self.geometry, self.ambient_dim);
        }
        match &self.tail {
            TailRule::Constant { stage } => {
                checker.check_stage("tail.stage", stage, self.geometry, self.ambient_dim)
            }
            TailRule::Periodic { stages } => {
                for (i, stage) in stages.iter().enumerate() {
                    checker.check_stage(
                        &format!("tail.stages[{i}]"),
                        stage,
                        self.geometry,
                        self.ambient_dim,
                    );
                }
            }
        }
        let (lo, hi) = self.ratio_bounds();
        let summary = ValidationSummary {
            max_branching: self.max_branching(),
            ratio_lower: lo,
            ratio_upper: hi,
            stage_count: self.prefix.len() + self.period().len(),
        };
        ValidationReport {
            violations: checker.violations,
            summary,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::measures::{RatioAtom, StateAtom};

    fn mandelbrot(p: f64) -> EnvironmentModel {
        EnvironmentModel {
            initial_one_prob: 1.0,
            ambient_dim: 2,
            prefix: vec![],
            tail: TailRule::Constant {
                stage: StageSpec {
                    m: 4,
                    c: Some(2),
                    kind: StageKind::Separated {
                        ratio_law: RatioLaw::PointMass { ratios: vec![0.5; 4] },
                        trans0: TransitionLaw::ProductBernoulli { p: 0.0 },
                        trans1: TransitionLaw::ProductBernoulli { p },
                    },
                },
            },
            geometry: Some(GeometryRule::CubeSubdivision),
        }
    }

    #[test]
    fn mandelbrot_model_is_valid() {
        let report = mandelbrot(0.5).validate();
        assert!(report.is_ok(), "{report}");
        assert_eq!(report.summary.max_branching, 4);
        assert_eq!(report.summary.ratio_lower, 0.5);
    }

    #[test]
    fn ratio_of_one_is_rejected() {
        let mut model = mandelbrot(0.5);
        model.geometry = None;
        if let TailRule::Constant { stage } = &mut model.tail {
            stage.kind = StageKind::Separated {
                ratio_law: RatioLaw::FiniteDiscrete {
                    atoms: vec![RatioAtom { ratios: vec![1.0, 0.5, 0.5, 0.5], weight: 1.0 }],
                },
                trans0: TransitionLaw::ProductBernoulli { p: 0.0 },
                trans1: TransitionLaw::ProductBernoulli { p: 0.5 },
            };
        }
        let report = model.validate();
        assert!(!report.is_ok());
        assert!(report.violations.iter().any(|v| v.message.contains("must be < 1")));
    }

    #[test]
    fn cube_geometry_m_mismatch() {
        let mut model = mandelbrot(0.5);
        if let TailRule::Constant { stage } = &mut model.tail {
            stage.m = 5;
            stage.kind = StageKind::Separated {
                ratio_law: RatioLaw::PointMass { ratios: vec![0.5; 5] },
                trans0: TransitionLaw::ProductBernoulli { p: 0.0 },
                trans1: TransitionLaw::ProductBernoulli { p: 0.5 },
            };
        }
        let report = model.validate();
        assert!(report.violations.iter().any(|v| v.message.contains("m = c^d")));
    }

    #[test]
    fn weight_sum_off_is_rejected() {
        let mut model = mandelbrot(0.5);
        model.geometry = None;
        if let TailRule::Constant { stage } = &mut model.tail {
            stage.kind = StageKind::Separated {
                ratio_law: RatioLaw::PointMass { ratios: vec![0.5; 4] },
                trans0: TransitionLaw::ProductBernoulli { p: 0.0 },
                trans1: TransitionLaw::FiniteDiscrete {
                    atoms: vec![StateAtom { states: vec![1, 1, 0, 0], weight: 0.9 }],
                },
            };
        }
        let report = model.validate();
        assert!(report.violations.iter().any(|v| v.message.contains("weights sum")));
    }
}
