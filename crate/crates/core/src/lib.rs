//! Random fractals driven by tree-indexed Markov chains in varying
//! environments: analytic dimension thresholds and emptiness probabilities,
//! plus Monte Carlo simulation of the underlying tree process and its
//! geometric realizations (generalized fractal percolation).
//!
//! The crate is organized around four pieces:
//!
//! - [`model`]: the environment description (branching factors, ratio laws,
//!   state-transition laws, eventually periodic tail) and its validation;
//! - [`analytics`]: closed-form quantities — the dimension threshold
//!   `d_star`, extinction probabilities, survivor-count pgfs, series bounds,
//!   emptiness probability, and criterion classifications;
//! - [`simulate`]: reproducible Monte Carlo sampling of the chain, min-cut
//!   flows, martingale diagnostics, box-counting dimension estimates, and
//!   geometric rendering;
//! - [`oracle`]: brute-force enumeration checks on tiny instances, used by
//!   the test suite to validate the fast paths.
//!
//! ```
//! use percotree::{analytics, zoo};
//!
//! // plane percolation: 2x2 subdivision, cells kept with probability 0.9
//! let model = zoo::bernoulli_cube(2, 2, 1.0, 0.9, 0.0);
//! let d = analytics::d_star(&model, 1e-10).unwrap().unwrap();
//! assert!((d - (2.0 + 0.9f64.ln() / 2.0f64.ln())).abs() < 1e-8);
//!
//! let emptiness = analytics::emptiness_probability(&model, 20, 1e-12).unwrap();
//! assert!(emptiness.value < 1e-3);
//! ```

pub mod analytics;
pub mod model;
pub mod oracle;
pub mod simulate;
pub mod zoo;
