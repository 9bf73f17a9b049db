//! Reward-model score calibration against arena Elo ratings.
//!
//! A reward model that systematically over-scores one policy model produces
//! preference data that inherits the bias. This crate measures the gap
//! between the win rate implied by reward scores (mean sigmoid of score
//! differences) and the win rate implied by arena Elo ratings, solves for
//! the score offset that closes it, and rebuilds pairwise preference data
//! with the corrected scores.
//!
//! Modules:
//!
//! - [`ingest`]: score tables and Elo tables, with validation.
//! - [`elo`]: the Elo win-probability model and an online rating fit.
//! - [`calibrator`]: empirical win rates, offset solvers, mismatch degree.
//! - [`prefs`]: chosen/rejected dataset construction and Bradley-Terry loss.
//! - [`style`]: surface pattern statistics and z-score style analysis.
//! - [`sim`]: seeded synthetic tournaments and biased score tables.
//! - [`report`]: line-delimited report records shared with the CLI.

pub mod calibrator;
pub mod elo;
mod error;
pub mod ingest;
pub mod math;
pub mod prefs;
pub mod report;
pub mod sim;
pub mod style;

pub use error::{Error, ErrorClass, Result};
