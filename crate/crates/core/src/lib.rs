//! Variational bounds on the information bottleneck for stochastic classifiers.
//!
//! The crate has three layers:
//!
//! - an exact layer ([`oracle`]) that computes mutual information, the IB
//!   functional and its variational upper bounds (VIB and the tighter VUB)
//!   on finite distributions, where everything is a finite sum and the bound
//!   chain `L_IB <= L_VUB <= L_VIB` can be checked to floating-point accuracy;
//! - an empirical layer ([`net`], [`losses`], [`train`]) implementing the
//!   stochastic classifier (diagonal-gaussian encoder, reparameterized latent,
//!   softmax head) with explicit forward/backward passes and the VIB/VUB
//!   Monte Carlo objectives;
//! - an evaluation layer ([`attack`], [`data`]) with FGS and targeted-L2
//!   adversarial sweeps over embedding inputs plus dataset plumbing.
//!
//! Core math is generic over the scalar type via [`Scalar`] (`f32` or `f64`);
//! the `*64` aliases below pin the default precision used by the CLI and the
//! file formats. All information quantities are in nats.

pub mod attack;
pub mod checks;
pub mod data;
pub mod error;
pub mod losses;
pub mod mat;
pub mod model_io;
pub mod net;
pub mod opt;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod train;

pub use error::{Error, Result};
pub use scalar::{real, Scalar};

/// Probabilities are clamped to at least this value before any logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

pub type Matrix64 = mat::Matrix<f64>;
pub type Model64 = net::Model<f64>;
pub type GaussianParams64 = net::GaussianParams<f64>;
pub type ForwardRecord64 = net::ForwardRecord<f64>;
pub type Gradients64 = net::Gradients<f64>;
pub type LossBreakdown64 = losses::LossBreakdown<f64>;
pub type Dataset64 = data::Dataset<f64>;
pub type DiscreteInstance64 = oracle::DiscreteInstance<f64>;
pub type TrainConfig64 = train::TrainConfig<f64>;
