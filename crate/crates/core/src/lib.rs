//! Laboratory for adaptive weighted discriminator training of GANs.
//!
//! The discriminator loss of a GAN is a sum of a real part and a fake part.
//! This crate implements the weighted variant `w_r * L_r + w_f * L_f` where
//! the weights are chosen per step from the geometry of the two component
//! gradients, together with everything needed to study it end to end on a
//! synthetic task:
//!
//! - [`autodiff`]: minimal reverse-mode differentiation over dense arrays
//! - [`nn`]: MLPs, parameter flattening, Adam, learning-rate schedules
//! - [`losses`]: cross-entropy / hinge loss pairs and the discrete-support
//!   optimality results for the weighted objective
//! - [`awweights`]: gradient geometry, closed-form weight constructions and
//!   the five-branch selection ladder
//! - [`synthdata`]: the eight-mode Gaussian ring and coverage metrics
//! - [`trainer`]: the training loop with separate real/fake backward sweeps
//!   and the counterfactual stepping protocol
//! - [`diagnostics`]: batch studies over run logs with CSV and SVG outputs
//! - [`verify`]: independent oracles (grid search, finite differences) and
//!   the property suites built on them

pub mod autodiff;
pub mod awweights;
pub mod diagnostics;
pub mod losses;
pub mod nn;
pub mod synthdata;
pub mod trainer;
pub mod verify;

pub use autodiff::{Array, Bindings, Graph, GradientMap, NodeId};
pub use awweights::{AwConfig, AwWeights, Branch, GradientPair, ScoreStats};
pub use nn::{Activation, AdamState, LrSchedule, Mlp, ParamVector};
pub use synthdata::RingMixture;
pub use trainer::{RunLog, StepRecord, TrainConfig, Trainer, WeightMode};
