//! Empirical win rates, offset solvers, and the mismatch-degree diagnostic.
//!
//! The empirical win rate of an over-valued model O against a reference R is
//! the mean sigmoid of their score differences over shared prompts. Adding
//! an offset Δ to O's scores moves that rate monotonically, so the offset
//! that matches the Elo-implied rate is a one-dimensional root. With more
//! than two models the offsets are fitted jointly to the whole pairwise
//! win-rate matrix, one model pinned at zero.

mod category;
mod joint;
mod mismatch;
mod solver;
mod winrate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::elo::expected_win_rate;
use crate::ingest::{EloTable, ScoreTable};
use crate::{Error, Result};

pub use category::{calibrate_per_category, prompt_category, CategoryCalibration, CategoryReport, OTHERS};
pub use joint::{solve_offsets_joint, JointOptions, JointProblem};
pub use mismatch::{mismatch_degree, mismatch_degree_value, Direction, MismatchReport};
pub use solver::{solve_offset, DEFAULT_TOLERANCE, OFFSET_LIMIT};
pub use winrate::{empirical_win_rate, mse_loss};

/// Score differences `s_O - s_R` over the prompts both models answered.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseScores {
    over_valued: String,
    reference: String,
    prompt_ids: Vec<String>,
    diffs: Vec<f64>,
}

impl PairwiseScores {
    /// Builds a pair from raw differences; prompt ids are synthesized.
    pub fn new(over_valued: impl Into<String>, reference: impl Into<String>, diffs: Vec<f64>) -> Result<Self> {
        let prompt_ids = (0..diffs.len()).map(|i| format!("{i:08}")).collect();
        Self::with_prompts(over_valued, reference, prompt_ids, diffs)
    }

    pub fn with_prompts(
        over_valued: impl Into<String>,
        reference: impl Into<String>,
        prompt_ids: Vec<String>,
        diffs: Vec<f64>,
    ) -> Result<Self> {
        let over_valued = over_valued.into();
        let reference = reference.into();
        if diffs.is_empty() {
            return Err(Error::NoSharedPrompts {
                a: over_valued,
                b: reference,
            });
        }
        if prompt_ids.len() != diffs.len() {
            return Err(Error::invalid("prompt ids and diffs differ in length"));
        }
        if let Some(i) = diffs.iter().position(|d| !d.is_finite()) {
            return Err(Error::invalid(format!(
                "score difference for prompt {:?} is not finite",
                prompt_ids[i]
            )));
        }
        Ok(PairwiseScores {
            over_valued,
            reference,
            prompt_ids,
            diffs,
        })
    }

    /// Differences over the shared prompts of two models in `table`.
    pub fn from_table(table: &ScoreTable, over_valued: &str, reference: &str) -> Result<Self> {
        Self::from_table_filtered(table, over_valued, reference, |_| true)
    }

    pub(crate) fn from_table_filtered(
        table: &ScoreTable,
        over_valued: &str,
        reference: &str,
        mut keep: impl FnMut(&str) -> bool,
    ) -> Result<Self> {
        if over_valued == reference {
            return Err(Error::invalid(format!(
                "over-valued and reference model are both {over_valued:?}"
            )));
        }
        let shared = table.require_shared(over_valued, reference)?;
        let mut prompt_ids = Vec::with_capacity(shared.len());
        let mut diffs = Vec::with_capacity(shared.len());
        for p in shared.into_iter().filter(|p| keep(p)) {
            let so = table.score(p, over_valued).expect("shared prompt");
            let sr = table.score(p, reference).expect("shared prompt");
            prompt_ids.push(p.to_string());
            diffs.push(so - sr);
        }
        Self::with_prompts(over_valued, reference, prompt_ids, diffs)
    }

    pub fn over_valued(&self) -> &str {
        &self.over_valued
    }

    pub fn reference(&self) -> &str {
        &self.reference
    }

    pub fn prompt_ids(&self) -> &[String] {
        &self.prompt_ids
    }

    pub fn diffs(&self) -> &[f64] {
        &self.diffs
    }

    pub fn len(&self) -> usize {
        self.diffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }

    /// Same pair with `delta` added to every difference.
    pub fn shifted(&self, delta: f64) -> Result<Self> {
        Self::with_prompts(
            self.over_valued.clone(),
            self.reference.clone(),
            self.prompt_ids.clone(),
            self.diffs.iter().map(|d| d + delta).collect(),
        )
    }

    /// Roles swapped: differences negated.
    pub fn swapped(&self) -> Self {
        PairwiseScores {
            over_valued: self.reference.clone(),
            reference: self.over_valued.clone(),
            prompt_ids: self.prompt_ids.clone(),
            diffs: self.diffs.iter().map(|d| -d).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    Pair,
    Joint,
}

/// Win rates before and after calibration, alongside the Elo targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum WinRates {
    Pair {
        over_valued: String,
        reference: String,
        n: usize,
        initial: f64,
        achieved: f64,
        target: f64,
    },
    /// Row model vs. column model. Diagonal entries are 0.5 and take no
    /// part in the loss.
    Matrix {
        models: Vec<String>,
        initial: Vec<Vec<f64>>,
        achieved: Vec<Vec<f64>>,
        target: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub mode: CalibrationMode,
    /// Offset added to each model's scores; the anchor is always 0.
    pub offsets: BTreeMap<String, f64>,
    pub anchor: String,
    pub win_rates: WinRates,
    pub residual_loss: f64,
    pub tolerance: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CalibrationResult {
    pub fn offset(&self, model: &str) -> f64 {
        self.offsets.get(model).copied().unwrap_or(0.0)
    }

    /// `(achieved, target)` in pair mode.
    pub fn pair_rates(&self) -> Option<(f64, f64)> {
        match &self.win_rates {
            WinRates::Pair { achieved, target, .. } => Some((*achieved, *target)),
            WinRates::Matrix { .. } => None,
        }
    }

    /// Offset of the non-anchor model in pair mode.
    pub fn pair_offset(&self) -> Option<f64> {
        match &self.win_rates {
            WinRates::Pair { over_valued, .. } => Some(self.offset(over_valued)),
            WinRates::Matrix { .. } => None,
        }
    }
}

/// One calibrated pair with its mismatch before and after.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCalibration {
    pub result: CalibrationResult,
    pub before: MismatchReport,
    pub after: MismatchReport,
}

/// Solves the offset for `over_valued` against `reference` using the
/// Elo-implied target, and reports mismatch before and after.
pub fn calibrate_pair(
    table: &ScoreTable,
    elo: &EloTable,
    over_valued: &str,
    reference: &str,
    tol: f64,
) -> Result<PairCalibration> {
    let scores = PairwiseScores::from_table(table, over_valued, reference)?;
    calibrate_scores(&scores, elo, tol)
}

pub(crate) fn calibrate_scores(scores: &PairwiseScores, elo: &EloTable, tol: f64) -> Result<PairCalibration> {
    let target = expected_win_rate(elo.get(scores.over_valued())?, elo.get(scores.reference())?)?.value();
    let before = mismatch_degree(scores, elo, 0.0)?;
    let result = solve_offset(scores, target, tol)?;
    let after = mismatch_degree(scores, elo, result.offset(scores.over_valued()))?;
    Ok(PairCalibration { result, before, after })
}
