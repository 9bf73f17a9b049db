use serde::{Deserialize, Serialize};

use super::{empirical_win_rate, PairwiseScores};
use crate::elo::expected_win_rate;
use crate::ingest::EloTable;
use crate::Result;

/// Sign of `empirical - expected` for the over-valued model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    OverValued,
    UnderValued,
    Aligned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchReport {
    pub over_valued: String,
    pub reference: String,
    pub n: usize,
    /// Offset applied to the over-valued model's scores.
    pub offset: f64,
    pub empirical: f64,
    pub expected: f64,
    pub md: f64,
    pub direction: Direction,
}

/// `|empirical - expected| / max(expected, 1 - expected)`.
///
/// The denominator is at least 0.5, so the value is at most
/// `2 |empirical - expected|`.
pub fn mismatch_degree_value(empirical: f64, expected: f64) -> f64 {
    (empirical - expected).abs() / expected.max(1.0 - expected)
}

impl MismatchReport {
    pub fn from_rates(
        over_valued: impl Into<String>,
        reference: impl Into<String>,
        n: usize,
        offset: f64,
        empirical: f64,
        expected: f64,
    ) -> Self {
        let direction = if empirical > expected {
            Direction::OverValued
        } else if empirical < expected {
            Direction::UnderValued
        } else {
            Direction::Aligned
        };
        MismatchReport {
            over_valued: over_valued.into(),
            reference: reference.into(),
            n,
            offset,
            empirical,
            expected,
            md: mismatch_degree_value(empirical, expected),
            direction,
        }
    }
}

/// Mismatch degree of the pair with `offset` applied to the over-valued side.
pub fn mismatch_degree(scores: &PairwiseScores, elo: &EloTable, offset: f64) -> Result<MismatchReport> {
    let expected = expected_win_rate(elo.get(scores.over_valued())?, elo.get(scores.reference())?)?.value();
    let empirical = empirical_win_rate(scores, offset);
    Ok(MismatchReport::from_rates(
        scores.over_valued(),
        scores.reference(),
        scores.len(),
        offset,
        empirical,
        expected,
    ))
}
