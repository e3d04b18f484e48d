//! Environment model: the full description of a random recursive construction
//! driven by a tree-indexed Markov chain in a varying environment.
//!
//! A model fixes, per generation `j`, a branching factor `m_j`, a law for the
//! children's contraction ratios, and a pair of child-state transition laws
//! (one per parent state) — or a joint state/ratio law when the two are
//! correlated. The infinite sequence of generations is represented as a finite
//! prefix followed by an eventually constant or periodic tail, which keeps
//! every liminf/limsup over generations exactly computable.

pub mod measures;
mod quantities;
mod validate;

pub use measures::{
    JointAtom, JointLaw, RatioAtom, RatioLaw, ScalarAtom, State, StateAtom, TransitionLaw,
    MATERIALIZE_CAP, WEIGHT_TOLERANCE,
};
pub use validate::{ValidationReport, Violation};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Supported model-file schema version.
pub const MODEL_FILE_VERSION: u64 = 1;

/// Either separated (independent ratio and transition laws) or joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StageKind {
    Separated {
        ratio_law: RatioLaw,
        trans0: TransitionLaw,
        trans1: TransitionLaw,
    },
    Joint {
        joint0: JointLaw,
        joint1: JointLaw,
    },
}

/// Everything one generation of the construction needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    /// Branching factor m_j; every vertex of this generation has m children.
    pub m: usize,
    /// Cells per side for cube-subdivision geometry (m = c^d), when geometric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<u32>,
    #[serde(flatten)]
    pub kind: StageKind,
}

/// How the stage sequence continues past the prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TailRule {
    Constant { stage: StageSpec },
    Periodic { stages: Vec<StageSpec> },
}

impl TailRule {
    pub fn period(&self) -> &[StageSpec] {
        match self {
            TailRule::Constant { stage } => std::slice::from_ref(stage),
            TailRule::Periodic { stages } => stages,
        }
    }
}

/// Optional geometric realization of the abstract construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GeometryRule {
    /// `[0,1]^d` subdivided into `c_j^d` congruent subcubes at stage j.
    CubeSubdivision,
    /// `[0,1]` split into two complementary subintervals (d = 1, m = 2, each
    /// ratio atom sums to one).
    IntervalSplit,
}

/// The full environment specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentModel {
    /// P(root state = 1).
    pub initial_one_prob: f64,
    /// Ambient dimension d.
    pub ambient_dim: usize,
    pub prefix: Vec<StageSpec>,
    pub tail: TailRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryRule>,
}

/// Wire format of a model file.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    version: u64,
    #[serde(flatten)]
    model: EnvironmentModel,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model file parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported model file version {found} (expected {MODEL_FILE_VERSION})")]
    Version { found: u64 },
    #[error("invalid model:\n{0}")]
    Invalid(ValidationReport),
    #[error("stage {path} must be either separated (ratio_law/trans0/trans1) or joint (joint0/joint1), not a mixture")]
    AmbiguousStage { path: String },
}

impl EnvironmentModel {
    /// Parse, structurally check, validate, and renormalize a model file.
    pub fn from_json_str(text: &str) -> Result<EnvironmentModel, ModelError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0);
        if version != MODEL_FILE_VERSION {
            return Err(ModelError::Version { found: version });
        }
        check_stage_shapes(&value)?;
        let file: ModelFile = serde_json::from_value(value)?;
        let mut model = file.model;
        let report = model.validate();
        if !report.is_ok() {
            return Err(ModelError::Invalid(report));
        }
        model.renormalize();
        Ok(model)
    }

    /// Serialize back to the versioned file format. Loading the output yields
    /// a structure identical to `self` (weights are already normalized).
    pub fn to_json_string(&self) -> String {
        let file = serde_json::json!({ "version": MODEL_FILE_VERSION });
        let mut doc = serde_json::to_value(self).expect("model serializes");
        if let (serde_json::Value::Object(target), serde_json::Value::Object(head)) =
            (&mut doc, file)
        {
            for (k, v) in head {
                target.insert(k, v);
            }
        }
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    /// Stage governing generation `j`: prefix lookup, then the tail resolved
    /// by index modulo the period.
    pub fn stage(&self, j: usize) -> &StageSpec {
        if j < self.prefix.len() {
            &self.prefix[j]
        } else {
            let period = self.tail.period();
            &period[(j - self.prefix.len()) % period.len()]
        }
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix.len()
    }

    /// The repeating tail stages (a constant tail has period one).
    pub fn period(&self) -> &[StageSpec] {
        self.tail.period()
    }

    pub fn branching(&self, j: usize) -> usize {
        self.stage(j).m
    }

    /// Number of generation-`j` vertices, m_0 * ... * m_{j-1}, as a float
    /// (exact until 2^53, then correctly rounded; these counts only ever
    /// enter log-space exponents).
    pub fn generation_size(&self, j: usize) -> f64 {
        (0..j).map(|l| self.branching(l) as f64).product()
    }

    /// All stages up to generation `j_hi` (exclusive), unrolled.
    pub fn stages_to(&self, j_hi: usize) -> impl Iterator<Item = &StageSpec> {
        (0..j_hi).map(|j| self.stage(j))
    }

    /// Global bounds on the ratio support: the smallest and largest ratio
    /// coordinate appearing anywhere in the model.
    pub fn ratio_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for stage in self.prefix.iter().chain(self.period()) {
            let (a, b) = match &stage.kind {
                StageKind::Separated { ratio_law, .. } => ratio_law.support_bounds(),
                StageKind::Joint { joint0, joint1 } => {
                    let (a0, b0) = joint0.support_bounds();
                    let (a1, b1) = joint1.support_bounds();
                    (a0.min(a1), b0.max(b1))
                }
            };
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }

    /// Largest branching factor over all stages.
    pub fn max_branching(&self) -> usize {
        self.prefix
            .iter()
            .chain(self.period())
            .map(|s| s.m)
            .max()
            .unwrap_or(0)
    }

    fn renormalize(&mut self) {
        let fix = |stage: &mut StageSpec| match &mut stage.kind {
            StageKind::Separated {
                ratio_law,
                trans0,
                trans1,
            } => {
                ratio_law.renormalize();
                trans0.renormalize();
                trans1.renormalize();
            }
            StageKind::Joint { joint0, joint1 } => {
                joint0.renormalize();
                joint1.renormalize();
            }
        };
        self.prefix.iter_mut().for_each(fix);
        match &mut self.tail {
            TailRule::Constant { stage } => fix(stage),
            TailRule::Periodic { stages } => stages.iter_mut().for_each(fix),
        }
    }
}

impl StageSpec {
    /// Canonical joint state/ratio law for parent state `t`: the product of
    /// the transition and ratio laws for separated stages, the joint law
    /// itself otherwise. Returns `None` when materialization would exceed
    /// [`MATERIALIZE_CAP`] atoms.
    pub fn as_joint(&self, t: State) -> Option<JointLaw> {
        match &self.kind {
            StageKind::Joint { joint0, joint1 } => Some(match t {
                State::Zero => joint0.clone(),
                State::One => joint1.clone(),
            }),
            StageKind::Separated {
                ratio_law,
                trans0,
                trans1,
            } => {
                let trans = match t {
                    State::Zero => trans0,
                    State::One => trans1,
                };
                let total = trans
                    .atom_count(self.m)
                    .saturating_mul(ratio_law.atom_count());
                if total > MATERIALIZE_CAP {
                    return None;
                }
                let states = trans.materialize(self.m)?;
                let ratios = ratio_law.materialize()?;
                let mut atoms = Vec::with_capacity(states.len() * ratios.len());
                for sa in &states {
                    for ra in &ratios {
                        atoms.push(JointAtom {
                            states: sa.states.clone(),
                            ratios: ra.ratios.clone(),
                            weight: sa.weight * ra.weight,
                        });
                    }
                }
                Some(JointLaw { atoms })
            }
        }
    }

    pub fn transition(&self, t: State) -> Option<&TransitionLaw> {
        match &self.kind {
            StageKind::Separated { trans0, trans1, .. } => Some(match t {
                State::Zero => trans0,
                State::One => trans1,
            }),
            StageKind::Joint { .. } => None,
        }
    }

    pub fn joint(&self, t: State) -> Option<&JointLaw> {
        match &self.kind {
            StageKind::Joint { joint0, joint1 } => Some(match t {
                State::Zero => joint0,
                State::One => joint1,
            }),
            StageKind::Separated { .. } => None,
        }
    }
}

/// Stages must be separated XOR joint; serde's untagged decoding would
/// silently drop the extra keys, so the mixture is rejected on the raw value.
fn check_stage_shapes(value: &serde_json::Value) -> Result<(), ModelError> {
    fn check_one(stage: &serde_json::Value, path: String) -> Result<(), ModelError> {
        let has = |k: &str| stage.get(k).is_some();
        let separated = has("ratio_law") || has("trans0") || has("trans1");
        let joint = has("joint0") || has("joint1");
        if separated && joint {
            return Err(ModelError::AmbiguousStage { path });
        }
        Ok(())
    }
    if let Some(prefix) = value.get("prefix").and_then(|p| p.as_array()) {
        for (i, stage) in prefix.iter().enumerate() {
            check_one(stage, format!("prefix[{i}]"))?;
        }
    }
    if let Some(tail) = value.get("tail") {
        if let Some(stage) = tail.get("stage") {
            check_one(stage, "tail.stage".into())?;
        }
        if let Some(stages) = tail.get("stages").and_then(|p| p.as_array()) {
            for (i, stage) in stages.iter().enumerate() {
                check_one(stage, format!("tail.stages[{i}]"))?;
            }
        }
    }
    Ok(())
}
