//! Chosen/rejected preference datasets built from (optionally offset) reward
//! scores, and Bradley-Terry loss evaluation on them.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibrator::prompt_category;
use crate::ingest::ScoreTable;
use crate::math::neg_log_sigmoid;
use crate::{Error, Result};

/// What to do when the calibrated scores of a prompt's candidates are equal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Skip the prompt and count it in `dropped_ties`.
    #[default]
    Drop,
    /// Emit the pair with the reference model as the chosen side.
    PreferReference,
}

impl FromStr for TiePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop" => Ok(TiePolicy::Drop),
            "prefer-reference" | "prefer_reference" => Ok(TiePolicy::PreferReference),
            other => Err(Error::invalid(format!("unknown tie policy {other:?}"))),
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub prompt_id: String,
    pub chosen_model: String,
    pub rejected_model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected_text: Option<String>,
    /// Raw reward scores, before offsets.
    pub chosen_score: f64,
    pub rejected_score: f64,
    pub applied_offsets: BTreeMap<String, f64>,
    pub calibrated: bool,
    /// Set when the calibrated scores were equal and the pair was kept by
    /// [`TiePolicy::PreferReference`].
    #[serde(default, skip_serializing_if = "is_false")]
    pub tie: bool,
}

impl PreferencePair {
    fn offset(&self, model: &str) -> f64 {
        self.applied_offsets.get(model).copied().unwrap_or(0.0)
    }

    pub fn chosen_calibrated(&self) -> f64 {
        self.chosen_score + self.offset(&self.chosen_model)
    }

    pub fn rejected_calibrated(&self) -> f64 {
        self.rejected_score + self.offset(&self.rejected_model)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreferenceDataset {
    pub pairs: Vec<PreferencePair>,
    pub dropped_ties: usize,
    pub source_models: BTreeSet<String>,
    pub tie_policy: TiePolicy,
    /// Offsets used to build the dataset. Per-category builds leave this
    /// empty and fill `category_offsets`.
    pub offsets: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub category_offsets: BTreeMap<String, f64>,
}

impl PreferenceDataset {
    /// Prompts that were considered: emitted pairs plus dropped ties.
    pub fn considered(&self) -> usize {
        self.pairs.len() + self.dropped_ties
    }

    /// Fraction of pairs in which `model` is the chosen side.
    pub fn win_fraction(&self, model: &str) -> f64 {
        if self.pairs.is_empty() {
            return 0.0;
        }
        let wins = self.pairs.iter().filter(|p| p.chosen_model == model).count();
        wins as f64 / self.pairs.len() as f64
    }

    pub fn chosen_count(&self, model: &str) -> usize {
        self.pairs.iter().filter(|p| p.chosen_model == model).count()
    }
}

/// Number of prompts present in both datasets whose chosen model differs.
pub fn flip_count(a: &PreferenceDataset, b: &PreferenceDataset) -> usize {
    let chosen: BTreeMap<&str, &str> = a
        .pairs
        .iter()
        .map(|p| (p.prompt_id.as_str(), p.chosen_model.as_str()))
        .collect();
    b.pairs
        .iter()
        .filter(|p| chosen.get(p.prompt_id.as_str()).is_some_and(|c| *c != p.chosen_model))
        .count()
}

/// Pairs the over-valued and reference responses on every shared prompt;
/// the side with the larger `score + offset` is chosen. `offset` applies
/// to the over-valued model only, so `offset = 0` is the uncalibrated data.
pub fn build_pairs(
    table: &ScoreTable,
    over_valued: &str,
    reference: &str,
    offset: f64,
    tie_policy: TiePolicy,
) -> Result<PreferenceDataset> {
    let mut ds = build_two(table, over_valued, reference, |_| offset, tie_policy)?;
    ds.offsets = two_offsets(over_valued, reference, offset);
    Ok(ds)
}

/// Like [`build_pairs`], with a separate offset per prompt category.
/// Categories missing from `offsets` use an offset of 0.
pub fn build_pairs_by_category(
    table: &ScoreTable,
    over_valued: &str,
    reference: &str,
    offsets: &BTreeMap<String, f64>,
    tie_policy: TiePolicy,
) -> Result<PreferenceDataset> {
    let offset_of = |p: &str| {
        offsets
            .get(prompt_category(table, p, over_valued, reference))
            .copied()
            .unwrap_or(0.0)
    };
    let mut ds = build_two(table, over_valued, reference, offset_of, tie_policy)?;
    ds.category_offsets = offsets.clone();
    Ok(ds)
}

fn two_offsets(over_valued: &str, reference: &str, offset: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([(over_valued.to_string(), offset), (reference.to_string(), 0.0)])
}

fn build_two(
    table: &ScoreTable,
    over_valued: &str,
    reference: &str,
    offset_of: impl Fn(&str) -> f64,
    tie_policy: TiePolicy,
) -> Result<PreferenceDataset> {
    if over_valued == reference {
        return Err(Error::invalid("over-valued and reference model must differ"));
    }
    let shared = table.require_shared(over_valued, reference)?;
    let mut ds = PreferenceDataset {
        source_models: [over_valued.to_string(), reference.to_string()].into(),
        tie_policy,
        ..Default::default()
    };
    for p in shared {
        let o = table.record(p, over_valued).expect("shared");
        let r = table.record(p, reference).expect("shared");
        let offset = offset_of(p);
        let (co, cr) = (o.score + offset, r.score);
        let (chosen, rejected, tie) = if co > cr {
            (o, r, false)
        } else if co < cr {
            (r, o, false)
        } else {
            match tie_policy {
                TiePolicy::Drop => {
                    ds.dropped_ties += 1;
                    continue;
                }
                TiePolicy::PreferReference => (r, o, true),
            }
        };
        ds.pairs.push(PreferencePair {
            prompt_id: p.to_string(),
            chosen_model: chosen.model_id.clone(),
            rejected_model: rejected.model_id.clone(),
            chosen_text: chosen.response_text.clone(),
            rejected_text: rejected.response_text.clone(),
            chosen_score: chosen.score,
            rejected_score: rejected.score,
            applied_offsets: two_offsets(over_valued, reference, offset),
            calibrated: offset != 0.0,
            tie,
        });
    }
    Ok(ds)
}

/// One pair per prompt across several models: the highest calibrated score
/// is chosen and the lowest rejected. Prompts answered by fewer than two of
/// the models are skipped. Among equal scores the earlier model in `models`
/// wins, except that [`TiePolicy::PreferReference`] favours `reference`.
pub fn build_pairs_multi(
    table: &ScoreTable,
    models: &[&str],
    offsets: &BTreeMap<String, f64>,
    tie_policy: TiePolicy,
    reference: Option<&str>,
) -> Result<PreferenceDataset> {
    if models.len() < 2 {
        return Err(Error::invalid("need at least two models"));
    }
    for (i, m) in models.iter().enumerate() {
        if models[..i].contains(m) {
            return Err(Error::invalid(format!("model {m:?} listed twice")));
        }
        if !table.contains_model(m) {
            return Err(Error::UnknownModel(m.to_string()));
        }
    }
    if tie_policy == TiePolicy::PreferReference && !reference.is_some_and(|r| models.contains(&r)) {
        return Err(Error::invalid("prefer-reference needs a reference among the models"));
    }
    let offset = |m: &str| offsets.get(m).copied().unwrap_or(0.0);

    let mut ds = PreferenceDataset {
        source_models: models.iter().map(|m| m.to_string()).collect(),
        tie_policy,
        offsets: models.iter().map(|m| (m.to_string(), offset(m))).collect(),
        ..Default::default()
    };
    let mut any = false;
    for p in table.prompts() {
        let candidates: Vec<_> = models
            .iter()
            .filter_map(|m| table.record(p, m).map(|r| (r, r.score + offset(m))))
            .collect();
        if candidates.len() < 2 {
            continue;
        }
        any = true;
        let top = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        let bottom = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let is_ref = |m: &str| reference == Some(m);
        let prefers_ref = tie_policy == TiePolicy::PreferReference;

        let pick_top = |allow: &dyn Fn(&str) -> bool| {
            let group: Vec<_> = candidates
                .iter()
                .filter(|c| c.1 == top && allow(&c.0.model_id))
                .collect();
            group
                .iter()
                .find(|c| prefers_ref && is_ref(&c.0.model_id))
                .or(group.first())
                .map(|c| c.0)
        };
        let (chosen, rejected, tie) = if top > bottom {
            let chosen = pick_top(&|_| true).expect("non-empty");
            let rejected = candidates.iter().find(|c| c.1 == bottom).expect("non-empty").0;
            (chosen, rejected, false)
        } else {
            match tie_policy {
                TiePolicy::Drop => {
                    ds.dropped_ties += 1;
                    continue;
                }
                TiePolicy::PreferReference => {
                    let Some(chosen) = candidates.iter().find(|c| is_ref(&c.0.model_id)).map(|c| c.0) else {
                        ds.dropped_ties += 1;
                        continue;
                    };
                    let rejected = candidates
                        .iter()
                        .find(|c| c.0.model_id != chosen.model_id)
                        .expect("two candidates")
                        .0;
                    (chosen, rejected, true)
                }
            }
        };
        let applied: BTreeMap<String, f64> = [&chosen.model_id, &rejected.model_id]
            .into_iter()
            .map(|m| (m.clone(), offset(m)))
            .collect();
        ds.pairs.push(PreferencePair {
            prompt_id: p.clone(),
            chosen_model: chosen.model_id.clone(),
            rejected_model: rejected.model_id.clone(),
            chosen_text: chosen.response_text.clone(),
            rejected_text: rejected.response_text.clone(),
            chosen_score: chosen.score,
            rejected_score: rejected.score,
            calibrated: applied.values().any(|o| *o != 0.0),
            applied_offsets: applied,
            tie,
        });
    }
    if !any {
        return Err(Error::invalid("no prompt has scores from at least two of the models"));
    }
    Ok(ds)
}

/// Mean Bradley-Terry negative log-likelihood `-ln σ(s_chosen - s_rejected)`
/// of a score assignment over the dataset's pairs.
pub fn bt_loss(dataset: &PreferenceDataset, scorer: impl Fn(&str, &str) -> Option<f64>) -> Result<f64> {
    if dataset.pairs.is_empty() {
        return Err(Error::invalid("dataset has no pairs"));
    }
    let lookup = |p: &str, m: &str| {
        scorer(p, m).ok_or_else(|| Error::MissingScore {
            prompt_id: p.to_string(),
            model_id: m.to_string(),
        })
    };
    let mut total = 0.0;
    for pair in &dataset.pairs {
        let c = lookup(&pair.prompt_id, &pair.chosen_model)?;
        let r = lookup(&pair.prompt_id, &pair.rejected_model)?;
        total += neg_log_sigmoid(c - r);
    }
    Ok(total / dataset.pairs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DatasetHeader {
    source_models: BTreeSet<String>,
    tie_policy: TiePolicy,
    offsets: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    category_offsets: BTreeMap<String, f64>,
    pairs: usize,
    dropped_ties: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifest: Option<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum DatasetLine {
    Header(DatasetHeader),
    Pair(PreferencePair),
}

/// Writes a summary header line followed by one line per pair.
pub fn write_dataset(
    dataset: &PreferenceDataset,
    manifest: Option<&serde_json::Value>,
    mut writer: impl Write,
) -> std::io::Result<()> {
    let header = DatasetLine::Header(DatasetHeader {
        source_models: dataset.source_models.clone(),
        tie_policy: dataset.tie_policy,
        offsets: dataset.offsets.clone(),
        category_offsets: dataset.category_offsets.clone(),
        pairs: dataset.pairs.len(),
        dropped_ties: dataset.dropped_ties,
        manifest: manifest.cloned(),
    });
    serde_json::to_writer(&mut writer, &header)?;
    writer.write_all(b"\n")?;
    for p in &dataset.pairs {
        serde_json::to_writer(&mut writer, &DatasetLine::Pair(p.clone()))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a dataset written by [`write_dataset`]; returns the embedded
/// manifest, if any.
pub fn read_dataset(reader: impl BufRead) -> Result<(PreferenceDataset, Option<serde_json::Value>)> {
    let mut header: Option<DatasetHeader> = None;
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let malformed = |message: String| Error::Malformed { line: idx + 1, message };
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))? {
            DatasetLine::Header(h) if header.is_none() => header = Some(h),
            DatasetLine::Header(_) => return Err(malformed("second header record".into())),
            DatasetLine::Pair(p) => pairs.push(p),
        }
    }
    let header = header.ok_or_else(|| Error::Malformed {
        line: 1,
        message: "missing header record".into(),
    })?;
    if header.pairs != pairs.len() {
        return Err(Error::Malformed {
            line: 1,
            message: format!("header announces {} pairs, found {}", header.pairs, pairs.len()),
        });
    }
    Ok((
        PreferenceDataset {
            pairs,
            dropped_ties: header.dropped_ties,
            source_models: header.source_models,
            tie_policy: header.tie_policy,
            offsets: header.offsets,
            category_offsets: header.category_offsets,
        },
        header.manifest,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ScoreRecord;
    use proptest::prelude::*;

    fn one_prompt(so: f64, sr: f64) -> ScoreTable {
        ScoreTable::from_records(vec![
            ScoreRecord::new("p", "O", so).with_text("over"),
            ScoreRecord::new("p", "R", sr).with_text("ref"),
        ])
        .unwrap()
    }

    #[test]
    fn argmax_picks_the_higher_score() {
        let ds = build_pairs(&one_prompt(2.0, 1.0), "O", "R", 0.0, TiePolicy::Drop).unwrap();
        assert_eq!(ds.pairs[0].chosen_model, "O");
        assert_eq!(ds.pairs[0].chosen_text.as_deref(), Some("over"));
        assert!(!ds.pairs[0].calibrated);
    }

    #[test]
    fn negative_offset_flips_the_pair() {
        let ds = build_pairs(&one_prompt(2.0, 1.0), "O", "R", -1.5, TiePolicy::Drop).unwrap();
        let p = &ds.pairs[0];
        assert_eq!(p.chosen_model, "R");
        assert_eq!(p.rejected_model, "O");
        assert!(p.calibrated);
        assert_eq!(p.chosen_score, 1.0);
        assert_eq!(p.rejected_calibrated(), 0.5);
    }

    #[test]
    fn ties_follow_policy() {
        let t = one_prompt(1.0, 1.0);
        let dropped = build_pairs(&t, "O", "R", 0.0, TiePolicy::Drop).unwrap();
        assert!(dropped.pairs.is_empty());
        assert_eq!(dropped.dropped_ties, 1);
        assert_eq!(dropped.considered(), 1);
        let kept = build_pairs(&t, "O", "R", 0.0, TiePolicy::PreferReference).unwrap();
        assert_eq!(kept.pairs[0].chosen_model, "R");
        assert!(kept.pairs[0].tie);
    }

    #[test]
    fn build_errors() {
        let t = one_prompt(1.0, 0.0);
        assert!(matches!(
            build_pairs(&t, "O", "X", 0.0, TiePolicy::Drop),
            Err(Error::UnknownModel(_))
        ));
        assert!(build_pairs(&t, "O", "O", 0.0, TiePolicy::Drop).is_err());
        let disjoint =
            ScoreTable::from_records(vec![ScoreRecord::new("a", "O", 1.0), ScoreRecord::new("b", "R", 1.0)]).unwrap();
        assert!(matches!(
            build_pairs(&disjoint, "O", "R", 0.0, TiePolicy::Drop),
            Err(Error::NoSharedPrompts { .. })
        ));
        assert!(build_pairs_multi(&disjoint, &["O", "R"], &BTreeMap::new(), TiePolicy::Drop, None).is_err());
    }

    #[test]
    fn multi_picks_max_and_min() {
        let t = ScoreTable::from_records(vec![
            ScoreRecord::new("p", "a", 3.0),
            ScoreRecord::new("p", "b", 1.0),
            ScoreRecord::new("p", "c", 2.0),
            ScoreRecord::new("p", "d", 0.0),
        ])
        .unwrap();
        let ds = build_pairs_multi(&t, &["a", "b", "c", "d"], &BTreeMap::new(), TiePolicy::Drop, None).unwrap();
        assert_eq!(ds.pairs.len(), 1);
        assert_eq!(ds.pairs[0].chosen_model, "a");
        assert_eq!(ds.pairs[0].rejected_model, "d");
    }

    #[test]
    fn multi_tie_policies() {
        let t = ScoreTable::from_records(vec![
            ScoreRecord::new("p", "a", 1.0),
            ScoreRecord::new("p", "b", 1.0),
            ScoreRecord::new("p", "c", 1.0),
        ])
        .unwrap();
        let none = BTreeMap::new();
        let ds = build_pairs_multi(&t, &["a", "b", "c"], &none, TiePolicy::Drop, None).unwrap();
        assert_eq!(ds.dropped_ties, 1);
        let ds = build_pairs_multi(&t, &["a", "b", "c"], &none, TiePolicy::PreferReference, Some("c")).unwrap();
        assert_eq!(ds.pairs[0].chosen_model, "c");
        assert_eq!(ds.pairs[0].rejected_model, "a");
        assert!(build_pairs_multi(&t, &["a", "b"], &none, TiePolicy::PreferReference, None).is_err());
    }

    #[test]
    fn bt_loss_examples() {
        let equal = build_pairs(&one_prompt(1.0, 1.0), "O", "R", 0.0, TiePolicy::PreferReference).unwrap();
        let l = bt_loss(&equal, |_, _| Some(0.25)).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() <= 1e-12);

        let t = one_prompt(1001.0, 1.0);
        let ds = build_pairs(&t, "O", "R", 0.0, TiePolicy::Drop).unwrap();
        assert!(bt_loss(&ds, |p, m| t.score(p, m)).unwrap() <= 1e-9);

        let t = one_prompt(1.0, 0.0);
        let ds = build_pairs(&t, "O", "R", 0.0, TiePolicy::Drop).unwrap();
        // -ln σ(1), 30-digit reference 0.3132616875182228
        let l = bt_loss(&ds, |p, m| t.score(p, m)).unwrap();
        assert!((l - 0.3132616875182228).abs() <= 1e-12);

        assert!(matches!(bt_loss(&ds, |_, _| None), Err(Error::MissingScore { .. })));
        assert!(bt_loss(&PreferenceDataset::default(), |_, _| Some(0.0)).is_err());
    }

    #[test]
    fn dataset_file_round_trips() {
        let t = one_prompt(2.0, 1.0);
        let ds = build_pairs(&t, "O", "R", -0.25, TiePolicy::Drop).unwrap();
        let manifest = serde_json::json!({"subcommand": "build-prefs"});
        let mut buf = Vec::new();
        write_dataset(&ds, Some(&manifest), &mut buf).unwrap();
        let first = String::from_utf8(buf.clone()).unwrap();
        assert!(first.starts_with("{\"kind\":\"header\""));
        let (back, m) = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
        assert_eq!(m, Some(manifest));
    }

    fn table_from(so: &[f64], sr: &[f64]) -> ScoreTable {
        let recs = so
            .iter()
            .zip(sr)
            .enumerate()
            .flat_map(|(i, (a, b))| {
                let p = format!("p{i:04}");
                [ScoreRecord::new(p.clone(), "O", *a), ScoreRecord::new(p, "R", *b)]
            })
            .collect();
        ScoreTable::from_records(recs).unwrap()
    }

    proptest! {
        #[test]
        fn common_shift_of_offsets_changes_nothing(
            scores in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64), 1..30),
            shift in -2.0..2.0f64,
        ) {
            let recs = scores.iter().enumerate().flat_map(|(i, (a, b, c))| {
                let p = format!("p{i:03}");
                [ScoreRecord::new(p.clone(), "a", *a), ScoreRecord::new(p.clone(), "b", *b), ScoreRecord::new(p, "c", *c)]
            }).collect();
            let t = ScoreTable::from_records(recs).unwrap();
            let base = BTreeMap::from([("a".to_string(), 0.5), ("b".to_string(), -0.25), ("c".to_string(), 0.0)]);
            let moved: BTreeMap<_, _> = base.iter().map(|(k, v)| (k.clone(), v + shift)).collect();
            let d0 = build_pairs_multi(&t, &["a", "b", "c"], &base, TiePolicy::Drop, None).unwrap();
            let d1 = build_pairs_multi(&t, &["a", "b", "c"], &moved, TiePolicy::Drop, None).unwrap();
            let key = |d: &PreferenceDataset| d.pairs.iter().map(|p| (p.prompt_id.clone(), p.chosen_model.clone(), p.rejected_model.clone())).collect::<Vec<_>>();
            prop_assert_eq!(key(&d0), key(&d1));
        }

        #[test]
        fn two_model_multi_matches_pairwise(
            scores in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 1..40),
            delta in -2.0..2.0f64,
        ) {
            let (so, sr): (Vec<f64>, Vec<f64>) = scores.into_iter().unzip();
            let t = table_from(&so, &sr);
            let pairwise = build_pairs(&t, "O", "R", delta, TiePolicy::Drop).unwrap();
            let offsets = BTreeMap::from([("O".to_string(), delta), ("R".to_string(), 0.0)]);
            let multi = build_pairs_multi(&t, &["O", "R"], &offsets, TiePolicy::Drop, None).unwrap();
            prop_assert_eq!(pairwise.pairs, multi.pairs);
            prop_assert_eq!(pairwise.dropped_ties, multi.dropped_ties);
        }

        #[test]
        fn flips_are_monotone_in_offset(
            scores in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 1..40),
        ) {
            let (so, sr): (Vec<f64>, Vec<f64>) = scores.into_iter().unzip();
            let t = table_from(&so, &sr);
            let mut prev = 0;
            for k in -20..=20 {
                let ds = build_pairs(&t, "O", "R", k as f64 * 0.3, TiePolicy::Drop).unwrap();
                let wins = ds.chosen_count("O");
                prop_assert!(wins >= prev);
                prev = wins;
            }
        }

        #[test]
        fn bt_loss_ignores_per_prompt_constants(
            scores in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -5.0..5.0f64), 1..30),
        ) {
            let so: Vec<f64> = scores.iter().map(|s| s.0).collect();
            let sr: Vec<f64> = scores.iter().map(|s| s.1).collect();
            let t = table_from(&so, &sr);
            let ds = build_pairs(&t, "O", "R", 0.0, TiePolicy::PreferReference).unwrap();
            let shift: BTreeMap<String, f64> = scores.iter().enumerate().map(|(i, s)| (format!("p{i:04}"), s.2)).collect();
            let plain = bt_loss(&ds, |p, m| t.score(p, m)).unwrap();
            let moved = bt_loss(&ds, |p, m| t.score(p, m).map(|s| s + shift[p])).unwrap();
            prop_assert!((plain - moved).abs() <= 1e-12);
        }
    }
}
