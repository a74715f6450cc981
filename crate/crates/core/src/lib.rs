//! Percentage-based multiple instance learning.
//!
//! Every instance of a bag is scored by a small network, the scores are
//! sorted, and the bag score is a Bernstein polynomial estimate of a
//! quantile of those scores. The quantile level is trained jointly with the
//! network, so the fraction of positive instances that makes a bag positive
//! is learned from bag labels alone.
//!
//! Modules:
//! - [`bernstein`]: the quantile estimator and its gradients
//! - [`net`]: the instance classifier
//! - [`heads`]: quantile, max and mean bag scores and the decision rule
//! - [`train`]: bag cost, Adam and the training loop
//! - [`bagdata`]: synthetic and MNIST bag datasets, IDX files, splits
//! - [`metrics`]: AUC and balanced accuracy
//! - [`config`], [`sweep`], [`cli`]: the experiment tool

pub mod bagdata;
pub mod cli;
pub mod config;
pub mod bernstein;
pub mod error;
pub mod heads;
pub mod metrics;
pub mod model;
pub mod net;
pub mod pipeline;
pub mod sweep;
pub mod train;

pub use error::{Error, Result};
