//! Two-stage group recommender for implicit feedback.
//!
//! Stage one infers, per user and topic, an inherent-interest value and a
//! social-influence value from binary interaction records, using a logistic
//! selection model with Gaussian priors trained by stochastic gradient
//! descent. Stage two plays a non-cooperative game among the members of a
//! group: each member picks a topic as their strategy, profits from their
//! normalized interest diluted by congestion, pays a cost for committing
//! against social pressure, and the resulting Nash equilibrium is read out
//! as a topic-ratio recommendation for the whole group.
//!
//! The crate also ships dataset ingestion for tab-separated interaction /
//! social / topic files, group construction under a social-density
//! constraint, two frequency baselines, six distribution distances, and a
//! synthetic-data harness whose known ground truth exercises the full
//! pipeline end to end.

pub mod cbn;
pub mod data;
pub mod error;
pub mod eval;
pub mod game;
pub mod matrix;
pub mod pipeline;

pub use error::{Error, Result};
pub use matrix::Matrix;
