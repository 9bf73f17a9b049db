use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{calibrate_scores, CalibrationResult, MismatchReport, PairwiseScores};
use crate::ingest::{EloTable, ScoreTable};
use crate::Result;

/// Bucket for prompts that carry no category label.
pub const OTHERS: &str = "Others";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCalibration {
    pub category: String,
    pub n: usize,
    pub result: CalibrationResult,
    pub before: MismatchReport,
    pub after: MismatchReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub over_valued: String,
    pub reference: String,
    pub categories: Vec<CategoryCalibration>,
    /// Categories of prompts scored by either model that have no shared prompt.
    pub skipped: Vec<String>,
}

impl CategoryReport {
    pub fn get(&self, category: &str) -> Option<&CategoryCalibration> {
        self.categories.iter().find(|c| c.category == category)
    }
}

/// Category of a prompt: the over-valued model's label, else the
/// reference's, else [`OTHERS`].
pub fn prompt_category<'a>(table: &'a ScoreTable, prompt: &str, over_valued: &str, reference: &str) -> &'a str {
    [over_valued, reference]
        .iter()
        .filter_map(|m| table.record(prompt, m))
        .find_map(|r| r.category.as_deref().filter(|c| !c.is_empty()))
        .unwrap_or(OTHERS)
}

/// Runs the scalar offset solve separately inside each prompt category,
/// all against the same Elo-implied target.
pub fn calibrate_per_category(
    table: &ScoreTable,
    elo: &EloTable,
    over_valued: &str,
    reference: &str,
    tol: f64,
) -> Result<CategoryReport> {
    let all = PairwiseScores::from_table(table, over_valued, reference)?;

    let mut buckets: BTreeMap<&str, (Vec<String>, Vec<f64>)> = BTreeMap::new();
    for (p, d) in all.prompt_ids().iter().zip(all.diffs()) {
        let entry = buckets
            .entry(prompt_category(table, p, over_valued, reference))
            .or_default();
        entry.0.push(p.clone());
        entry.1.push(*d);
    }

    let mut seen = BTreeSet::new();
    for m in [over_valued, reference] {
        for r in table.model_records(m)? {
            seen.insert(prompt_category(table, &r.prompt_id, over_valued, reference));
        }
    }
    let skipped: Vec<String> = seen
        .into_iter()
        .filter(|c| !buckets.contains_key(c))
        .map(str::to_string)
        .collect();
    for c in &skipped {
        log::warn!("category {c:?} has no prompt shared by {over_valued:?} and {reference:?}; skipped");
    }

    let mut categories = Vec::with_capacity(buckets.len());
    for (category, (prompts, diffs)) in buckets {
        let scores = PairwiseScores::with_prompts(over_valued, reference, prompts, diffs)?;
        let cal = calibrate_scores(&scores, elo, tol)?;
        categories.push(CategoryCalibration {
            category: category.to_string(),
            n: scores.len(),
            result: cal.result,
            before: cal.before,
            after: cal.after,
        });
    }
    Ok(CategoryReport {
        over_valued: over_valued.to_string(),
        reference: reference.to_string(),
        categories,
        skipped,
    })
}
