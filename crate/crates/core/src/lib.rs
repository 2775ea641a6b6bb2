//! Contextual route-choice modelling through knowledge distillation.
//!
//! A large teacher MLP is trained on individual stated-choice records that
//! carry contextual and demographic variables. Its temperature-softened
//! predictions then guide a small student MLP trained on aggregate "basic"
//! records, where those variables are absent.
//!
//! The numeric core ([`matrix`], [`nn`], [`gmm`], [`distill`], [`eval`]) is
//! generic over [`Scalar`] (`f32` / `f64`); the aliases below fix it to `f64`,
//! which is what the pipeline uses.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod data;
pub mod distill;
pub mod error;
pub mod eval;
pub mod gmm;
pub mod matrix;
pub mod nn;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = matrix::Matrix<f64>;
pub type Mlp = nn::Mlp<f64>;
pub type Gradients = nn::Gradients<f64>;
pub type Sgd = nn::Sgd<f64>;
pub type GmmModel = gmm::GmmModel<f64>;
pub type Encoded = data::Encoded<f64>;

/// Number of exits, and therefore output classes, in every model here.
pub const NUM_EXITS: usize = 4;

/// Width of an encoded record: eleven contextual codes plus travel time.
pub const NUM_FEATURES: usize = 12;
