//! Bundled example models: the generalized Bernoulli and microcanonical cube
//! percolations, the binary dyadic fixtures, and the random interval-splitting
//! construction. The `zoo/` directory at the repository root ships the same
//! models as JSON files; an integration test keeps files and builders in sync.

use crate::model::measures::{
    JointAtom, JointLaw, RatioAtom, RatioLaw, StateAtom, TransitionLaw,
};
use crate::model::{EnvironmentModel, GeometryRule, StageKind, StageSpec, TailRule};

/// Homogeneous cube percolation: unit cube split into c^d subcubes, black
/// cells keep children black with probability `p`, white cells recolor
/// children black with probability `q`, root black with probability `pi`.
pub fn bernoulli_cube(c: u32, d: usize, pi: f64, p: f64, q: f64) -> EnvironmentModel {
    EnvironmentModel {
        initial_one_prob: pi,
        ambient_dim: d,
        prefix: vec![],
        tail: TailRule::Constant {
            stage: bernoulli_cube_stage(c, d, p, q),
        },
        geometry: Some(GeometryRule::CubeSubdivision),
    }
}

pub fn bernoulli_cube_stage(c: u32, d: usize, p: f64, q: f64) -> StageSpec {
    let m = (c as usize).pow(d as u32);
    StageSpec {
        m,
        c: Some(c),
        kind: StageKind::Separated {
            ratio_law: RatioLaw::PointMass {
                ratios: vec![1.0 / c as f64; m],
            },
            trans0: TransitionLaw::ProductBernoulli { p: q },
            trans1: TransitionLaw::ProductBernoulli { p },
        },
    }
}

/// Microcanonical cube percolation: black cells keep exactly `a` children
/// black, white cells exactly `b`, positions uniform.
pub fn microcanonical_cube(c: u32, d: usize, pi: f64, a: usize, b: usize) -> EnvironmentModel {
    let m = (c as usize).pow(d as u32);
    EnvironmentModel {
        initial_one_prob: pi,
        ambient_dim: d,
        prefix: vec![],
        tail: TailRule::Constant {
            stage: StageSpec {
                m,
                c: Some(c),
                kind: StageKind::Separated {
                    ratio_law: RatioLaw::PointMass {
                        ratios: vec![1.0 / c as f64; m],
                    },
                    trans0: TransitionLaw::Microcanonical { count: b },
                    trans1: TransitionLaw::Microcanonical { count: a },
                },
            },
        },
        geometry: Some(GeometryRule::CubeSubdivision),
    }
}

/// Varying-environment Bernoulli cube percolation with a two-stage prefix and
/// a period-two tail that recolors white cells at one of the two phases.
pub fn bernoulli_varying() -> EnvironmentModel {
    EnvironmentModel {
        initial_one_prob: 1.0,
        ambient_dim: 2,
        prefix: vec![
            bernoulli_cube_stage(2, 2, 0.7, 0.05),
            bernoulli_cube_stage(2, 2, 0.85, 0.02),
        ],
        tail: TailRule::Periodic {
            stages: vec![
                bernoulli_cube_stage(2, 2, 0.9, 0.01),
                bernoulli_cube_stage(2, 2, 0.8, 0.0),
            ],
        },
        geometry: Some(GeometryRule::CubeSubdivision),
    }
}

fn dyadic_stage(trans0: TransitionLaw, trans1: TransitionLaw) -> StageSpec {
    StageSpec {
        m: 2,
        c: Some(2),
        kind: StageKind::Separated {
            ratio_law: RatioLaw::PointMass {
                ratios: vec![0.5, 0.5],
            },
            trans0,
            trans1,
        },
    }
}

/// Binary dyadic fixture where on-parents eventually always keep a child on:
/// a Bernoulli prefix stage followed by a keep-exactly-one tail.
pub fn binary_product_formula() -> EnvironmentModel {
    EnvironmentModel {
        initial_one_prob: 0.9,
        ambient_dim: 1,
        prefix: vec![dyadic_stage(
            TransitionLaw::ProductBernoulli { p: 0.0 },
            TransitionLaw::ProductBernoulli { p: 0.7 },
        )],
        tail: TailRule::Constant {
            stage: dyadic_stage(
                TransitionLaw::ProductBernoulli { p: 0.0 },
                TransitionLaw::Microcanonical { count: 1 },
            ),
        },
        geometry: Some(GeometryRule::CubeSubdivision),
    }
}

/// Binary dyadic fixture with childless on-parents at every stage and no
/// recoloring: supercritical Bernoulli survival.
pub fn binary_light_recoloring() -> EnvironmentModel {
    EnvironmentModel {
        initial_one_prob: 1.0,
        ambient_dim: 1,
        prefix: vec![],
        tail: TailRule::Constant {
            stage: dyadic_stage(
                TransitionLaw::ProductBernoulli { p: 0.0 },
                TransitionLaw::ProductBernoulli { p: 0.55 },
            ),
        },
        geometry: Some(GeometryRule::CubeSubdivision),
    }
}

/// Binary dyadic fixture whose white cells recolor children on with positive
/// probability at every stage.
pub fn binary_heavy_recoloring() -> EnvironmentModel {
    EnvironmentModel {
        initial_one_prob: 1.0,
        ambient_dim: 1,
        prefix: vec![],
        tail: TailRule::Constant {
            stage: dyadic_stage(
                TransitionLaw::ProductBernoulli { p: 0.05 },
                TransitionLaw::ProductBernoulli { p: 0.8 },
            ),
        },
        geometry: Some(GeometryRule::CubeSubdivision),
    }
}

/// Random interval splitting: `[0,1]` is split at a random point Y, the two
/// pieces are kept independently with probability `p`. The splitting law is a
/// three-point discretization of a law supported inside (0,1); any law
/// supported in a proper subinterval works, this concrete choice is
/// illustrative.
pub fn interval_split(p: f64) -> EnvironmentModel {
    let atoms = [0.4, 0.5, 0.6]
        .iter()
        .map(|&y| RatioAtom {
            ratios: vec![y, 1.0 - y],
            weight: 1.0 / 3.0,
        })
        .collect();
    EnvironmentModel {
        initial_one_prob: 1.0,
        ambient_dim: 1,
        prefix: vec![],
        tail: TailRule::Constant {
            stage: StageSpec {
                m: 2,
                c: None,
                kind: StageKind::Separated {
                    ratio_law: RatioLaw::FiniteDiscrete { atoms },
                    trans0: TransitionLaw::ProductBernoulli { p: 0.0 },
                    trans1: TransitionLaw::ProductBernoulli { p },
                },
            },
        },
        geometry: Some(GeometryRule::IntervalSplit),
    }
}

/// Deterministic halving with all vertices on: the plain middle-split Moran
/// construction of dimension one.
pub fn moran_halves() -> EnvironmentModel {
    EnvironmentModel {
        initial_one_prob: 1.0,
        ambient_dim: 1,
        prefix: vec![],
        tail: TailRule::Constant {
            stage: dyadic_stage(
                TransitionLaw::ProductBernoulli { p: 0.0 },
                TransitionLaw::ProductBernoulli { p: 1.0 },
            ),
        },
        geometry: Some(GeometryRule::CubeSubdivision),
    }
}

/// A stage with genuinely correlated states and ratios, exercising the joint
/// law path.
pub fn joint_correlated() -> EnvironmentModel {
    let joint0 = JointLaw {
        atoms: vec![JointAtom {
            states: vec![0, 0],
            ratios: vec![0.5, 0.5],
            weight: 1.0,
        }],
    };
    let joint1 = JointLaw {
        atoms: vec![
            JointAtom { states: vec![1, 1], ratios: vec![0.3, 0.3], weight: 0.5 },
            JointAtom { states: vec![1, 0], ratios: vec![0.6, 0.5], weight: 0.3 },
            JointAtom { states: vec![0, 0], ratios: vec![0.5, 0.5], weight: 0.2 },
        ],
    };
    EnvironmentModel {
        initial_one_prob: 1.0,
        ambient_dim: 1,
        prefix: vec![],
        tail: TailRule::Constant {
            stage: StageSpec {
                m: 2,
                c: None,
                kind: StageKind::Joint { joint0, joint1 },
            },
        },
        geometry: None,
    }
}

/// A varying microcanonical model whose prefix kills every on-line once,
/// pushing the activity threshold past zero.
pub fn delayed_activity() -> EnvironmentModel {
    let m = 4;
    let stage = |a: usize| StageSpec {
        m,
        c: Some(2),
        kind: StageKind::Separated {
            ratio_law: RatioLaw::PointMass { ratios: vec![0.5; m] },
            trans0: TransitionLaw::Microcanonical { count: 0 },
            trans1: TransitionLaw::Microcanonical { count: a },
        },
    };
    EnvironmentModel {
        initial_one_prob: 1.0,
        ambient_dim: 2,
        prefix: vec![stage(0)],
        tail: TailRule::Constant { stage: stage(2) },
        geometry: Some(GeometryRule::CubeSubdivision),
    }
}

/// A finite-discrete transition fixture (neither product-Bernoulli nor
/// microcanonical) for exercising the atom-sum code paths.
pub fn discrete_pair() -> EnvironmentModel {
    let trans1 = TransitionLaw::FiniteDiscrete {
        atoms: vec![
            StateAtom { states: vec![1, 1], weight: 0.45 },
            StateAtom { states: vec![1, 0], weight: 0.2 },
            StateAtom { states: vec![0, 1], weight: 0.2 },
            StateAtom { states: vec![0, 0], weight: 0.15 },
        ],
    };
    EnvironmentModel {
        initial_one_prob: 1.0,
        ambient_dim: 1,
        prefix: vec![],
        tail: TailRule::Constant {
            stage: StageSpec {
                m: 2,
                c: Some(2),
                kind: StageKind::Separated {
                    ratio_law: RatioLaw::PointMass { ratios: vec![0.5, 0.5] },
                    trans0: TransitionLaw::ProductBernoulli { p: 0.0 },
                    trans1,
                },
            },
        },
        geometry: Some(GeometryRule::CubeSubdivision),
    }
}

/// Every bundled model with its zoo file stem.
pub fn all() -> Vec<(&'static str, EnvironmentModel)> {
    vec![
        ("mandelbrot_p02", bernoulli_cube(2, 2, 1.0, 0.2, 0.0)),
        ("mandelbrot_critical", bernoulli_cube(2, 2, 1.0, 0.25, 0.0)),
        ("mandelbrot_p05", bernoulli_cube(2, 2, 1.0, 0.5, 0.0)),
        ("mandelbrot_p09", bernoulli_cube(2, 2, 1.0, 0.9, 0.0)),
        ("mandelbrot_c3_p05", bernoulli_cube(3, 2, 1.0, 0.5, 0.0)),
        ("bernoulli_varying", bernoulli_varying()),
        ("microcanonical_a2", microcanonical_cube(2, 2, 0.7, 2, 0)),
        ("microcanonical_recolor", microcanonical_cube(2, 2, 0.7, 2, 1)),
        ("binary_case1", binary_product_formula()),
        ("binary_case2", binary_light_recoloring()),
        ("binary_case3", binary_heavy_recoloring()),
        ("interval_p06", interval_split(0.6)),
        ("interval_p08", interval_split(0.8)),
        ("interval_p09", interval_split(0.9)),
        ("moran_halves", moran_halves()),
        ("joint_correlated", joint_correlated()),
        ("delayed_activity", delayed_activity()),
        ("discrete_pair", discrete_pair()),
    ]
}
