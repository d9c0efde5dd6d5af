// SPDX-License-Identifier: Apache-2.0

//! Moment-matching model reduction for LTI plants sampled aperiodically
//! over a finite set of intervals.
//!
//! A sampled-data system (continuous plant plus interval grid) is turned
//! into a discrete-time linear switched model with one mode per interval
//! ([`discretize`]). Reduced models are obtained either by reducing the
//! plant and discretizing the result, or by reducing the switched model
//! directly ([`pipelines`]). Both preserve Markov parameters up to a chosen
//! horizon ([`mm_lti`], [`mm_ls`]), and with the Lyapunov-weighted left
//! inverse both keep a common quadratic Lyapunov function ([`stability`]).
//! [`simulate`] compares the models on random input and switching
//! sequences.
//!
//! ```
//! use sdmor::{approach_two, LeftInverseChoice, ReductionRequest};
//! use sdmor::generate::random_stable_plant;
//! use sdmor::systems::{SampledDataSystem, SamplingGrid};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let plant = random_stable_plant(&mut rng, 10, 1, 1);
//! let grid = SamplingGrid::new(vec![0.1, 0.15, 0.2, 0.3]).unwrap();
//! let sd = SampledDataSystem::new(plant, grid).unwrap();
//! let red = approach_two(&sd, ReductionRequest::MaxOrder(4), LeftInverseChoice::Auto).unwrap();
//! assert_eq!(red.report.r, 4);
//! assert!(red.report.certificate.is_some());
//! ```

pub mod discretize;
pub mod error;
pub mod generate;
pub mod matops;
pub mod mm_ls;
pub mod mm_lti;
pub mod pipelines;
pub mod simulate;
pub mod stability;
pub mod systems;

pub use error::{Error, Result};
pub use matops::Matrix;
pub use mm_lti::{LeftInverseKind, ProjectionReduction, ReductionRequest};
pub use pipelines::{approach_one, approach_two, LeftInverseChoice, Reduction, ReductionReport};
pub use systems::{ContinuousLtiSystem, SampledDataSystem, SamplingGrid, SwitchedLinearSystem};
