//! Surface-style statistics of preference data.
//!
//! Five patterns are tracked: emoji, length, bold, exclamation and list.
//! Four are counted per occurrence in a text; length is pairwise (which side
//! of a pair is longer). The preference ratio of a pattern is its count on
//! chosen responses over its count on rejected responses.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::prefs::PreferenceDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Emoji,
    Length,
    Bold,
    Exclamation,
    List,
}

impl Pattern {
    pub const ALL: [Pattern; 5] = [
        Pattern::Emoji,
        Pattern::Length,
        Pattern::Bold,
        Pattern::Exclamation,
        Pattern::List,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Pattern::Emoji => "Emoji",
            Pattern::Length => "Length",
            Pattern::Bold => "Bold",
            Pattern::Exclamation => "Excl.",
            Pattern::List => "List",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-text occurrence counts. Length is not a per-text count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternCounts {
    pub emoji: u64,
    pub bold: u64,
    pub exclamation: u64,
    pub list: u64,
}

impl PatternCounts {
    pub fn get(&self, pattern: Pattern) -> Option<u64> {
        match pattern {
            Pattern::Emoji => Some(self.emoji),
            Pattern::Bold => Some(self.bold),
            Pattern::Exclamation => Some(self.exclamation),
            Pattern::List => Some(self.list),
            Pattern::Length => None,
        }
    }
}

/// Emoji code points: Misc Symbols (2600–26FF), Dingbats (2700–27BF),
/// regional indicators (1F1E6–1F1FF), Misc Symbols and Pictographs,
/// Emoticons, Transport and Map (1F300–1F6FF), Supplemental Symbols and
/// Pictographs (1F900–1F9FF), Symbols and Pictographs Extended-A
/// (1FA70–1FAFF). Joiners and variation selectors are not counted.
pub fn is_emoji(c: char) -> bool {
    matches!(
        c as u32,
        0x2600..=0x27BF | 0x1F1E6..=0x1F1FF | 0x1F300..=0x1F6FF | 0x1F900..=0x1F9FF | 0x1FA70..=0x1FAFF
    )
}

static BOLD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\*\*[^\n]+?\*\*|__[^\n]+?__").unwrap());

/// Line starting (after spaces or tabs) with `-`, `*`, `•`, or digits followed
/// by `.` or `)`, the marker then followed by whitespace or end of line.
static LIST_ITEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^[ \t]*(?:[-*•]|[0-9]+[.)])(?:[ \t]|$)").unwrap());

pub fn detect_patterns(text: &str) -> PatternCounts {
    PatternCounts {
        emoji: text.chars().filter(|&c| is_emoji(c)).count() as u64,
        bold: BOLD.find_iter(text).count() as u64,
        exclamation: text.chars().filter(|&c| c == '!').count() as u64,
        list: text
            .split('\n')
            .filter(|line| LIST_ITEM.is_match(line.trim_end_matches('\r')))
            .count() as u64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternStats {
    pub pattern: Pattern,
    pub chosen_count: u64,
    pub rejected_count: u64,
    /// `None` when the rejected count is zero.
    pub preference_ratio: Option<f64>,
}

impl PatternStats {
    pub fn new(pattern: Pattern, chosen_count: u64, rejected_count: u64) -> Self {
        let preference_ratio = (rejected_count > 0).then(|| chosen_count as f64 / rejected_count as f64);
        PatternStats {
            pattern,
            chosen_count,
            rejected_count,
            preference_ratio,
        }
    }

    /// Ratio cut (not rounded) to two decimals, computed in integers:
    /// `floor(100 · chosen / rejected)`.
    pub fn ratio_hundredths(&self) -> Option<u64> {
        (self.rejected_count > 0).then(|| 100 * self.chosen_count / self.rejected_count)
    }

    /// Two-decimal ratio as printed in pattern tables, or `"undef"`.
    pub fn ratio_label(&self) -> String {
        match self.ratio_hundredths() {
            Some(h) => format!("{}.{:02}", h / 100, h % 100),
            None => "undef".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub stats: Vec<PatternStats>,
    pub pairs_analyzed: usize,
    /// Pairs with a missing chosen or rejected text.
    pub pairs_skipped: usize,
}

impl PatternReport {
    pub fn get(&self, pattern: Pattern) -> Option<&PatternStats> {
        self.stats.iter().find(|s| s.pattern == pattern)
    }
}

/// Sums pattern counts over the chosen and rejected sides of every pair.
pub fn pattern_stats(dataset: &PreferenceDataset) -> PatternReport {
    let mut chosen = PatternCounts::default();
    let mut rejected = PatternCounts::default();
    let (mut longer_chosen, mut longer_rejected) = (0u64, 0u64);
    let (mut analyzed, mut skipped) = (0, 0);
    for pair in &dataset.pairs {
        let (Some(c), Some(r)) = (pair.chosen_text.as_deref(), pair.rejected_text.as_deref()) else {
            skipped += 1;
            continue;
        };
        analyzed += 1;
        add(&mut chosen, detect_patterns(c));
        add(&mut rejected, detect_patterns(r));
        let (lc, lr) = (c.chars().count(), r.chars().count());
        if lc > lr {
            longer_chosen += 1;
        } else if lr > lc {
            longer_rejected += 1;
        }
    }
    let stats = Pattern::ALL
        .iter()
        .map(|&p| match p {
            Pattern::Length => PatternStats::new(p, longer_chosen, longer_rejected),
            _ => PatternStats::new(p, chosen.get(p).unwrap(), rejected.get(p).unwrap()),
        })
        .collect();
    PatternReport {
        stats,
        pairs_analyzed: analyzed,
        pairs_skipped: skipped,
    }
}

fn add(total: &mut PatternCounts, c: PatternCounts) {
    total.emoji += c.emoji;
    total.bold += c.bold;
    total.exclamation += c.exclamation;
    total.list += c.list;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleGroupStats {
    pub group_label: String,
    pub mean_z: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScoreReport {
    pub groups: Vec<StyleGroupStats>,
    /// Population variance of the group mean z-scores.
    pub variance_across_groups: f64,
    /// All scores were equal; every z-score is 0.
    pub degenerate: bool,
}

/// Z-normalizes all scores together (population standard deviation), then
/// averages per group label.
pub fn style_zscores<S: AsRef<str>>(records: &[(f64, S)]) -> Result<ZScoreReport> {
    if records.len() < 2 {
        return Err(Error::invalid("z-score analysis needs at least two records"));
    }
    if records.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let n = records.len() as f64;
    let mean = records.iter().map(|(s, _)| s).sum::<f64>() / n;
    let var = records.iter().map(|(s, _)| (s - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    let degenerate = records.iter().all(|(s, _)| *s == records[0].0);

    let mut groups: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (s, g) in records {
        let z = if degenerate { 0.0 } else { (s - mean) / sd };
        let e = groups.entry(g.as_ref()).or_default();
        e.0 += z;
        e.1 += 1;
    }
    let groups: Vec<StyleGroupStats> = groups
        .into_iter()
        .map(|(label, (sum, count))| StyleGroupStats {
            group_label: label.to_string(),
            mean_z: sum / count as f64,
            count,
        })
        .collect();
    let k = groups.len() as f64;
    let grand = groups.iter().map(|g| g.mean_z).sum::<f64>() / k;
    let variance_across_groups = groups.iter().map(|g| (g.mean_z - grand).powi(2)).sum::<f64>() / k;
    Ok(ZScoreReport {
        groups,
        variance_across_groups,
        degenerate,
    })
}

/// Z-scores of `scores` (population standard deviation); all zero if the
/// scores are constant.
pub fn zscores(scores: &[f64]) -> Vec<f64> {
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    let constant = scores.iter().all(|s| *s == scores[0]);
    scores
        .iter()
        .map(|s| if constant { 0.0 } else { (s - mean) / sd })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::PreferencePair;
    use proptest::prelude::*;

    #[test]
    fn mixed_example() {
        let c = detect_patterns("Hello **world**! 😀");
        assert_eq!(
            c,
            PatternCounts {
                emoji: 1,
                bold: 1,
                exclamation: 1,
                list: 0
            }
        );
    }

    #[test]
    fn empty_text() {
        assert_eq!(detect_patterns(""), PatternCounts::default());
    }

    #[test]
    fn list_lines() {
        assert_eq!(detect_patterns("- a\n- b\n1. c").list, 3);
        assert_eq!(detect_patterns("  * x\n\t• y\n12) z\n").list, 3);
        // bold at line start, a decimal, and a rule are not list items
        assert_eq!(detect_patterns("**Note** here\n3.14 is pi\n---\n").list, 0);
    }

    #[test]
    fn bold_spans_do_not_overlap() {
        assert_eq!(detect_patterns("**a** and __b__ and **c**").bold, 3);
        assert_eq!(detect_patterns("**unclosed").bold, 0);
        assert_eq!(detect_patterns("****").bold, 0);
    }

    #[test]
    fn emoji_blocks() {
        assert_eq!(detect_patterns("🚀✨🧠🫠☀").emoji, 5);
        // flag = two regional indicators; ZWJ and VS16 are not counted
        assert_eq!(detect_patterns("🇨🇭").emoji, 2);
        assert_eq!(detect_patterns("❤\u{FE0F}").emoji, 1);
        assert_eq!(detect_patterns("plain ascii :)").emoji, 0);
    }

    #[test]
    fn ratio_is_cut_to_two_decimals() {
        let s = PatternStats::new(Pattern::Emoji, 357, 150);
        assert_eq!(s.ratio_label(), "2.38");
        assert_eq!(
            PatternStats::new(Pattern::Exclamation, 5541, 4705).ratio_label(),
            "1.17"
        );
        assert_eq!(PatternStats::new(Pattern::Bold, 1, 0).ratio_label(), "undef");
        assert_eq!(PatternStats::new(Pattern::Bold, 1, 0).preference_ratio, None);
    }

    fn pair(chosen: Option<&str>, rejected: Option<&str>) -> PreferencePair {
        PreferencePair {
            prompt_id: "p".into(),
            chosen_model: "a".into(),
            rejected_model: "b".into(),
            chosen_text: chosen.map(str::to_string),
            rejected_text: rejected.map(str::to_string),
            chosen_score: 1.0,
            rejected_score: 0.0,
            applied_offsets: BTreeMap::new(),
            calibrated: false,
            tie: false,
        }
    }

    fn dataset(pairs: Vec<PreferencePair>) -> PreferenceDataset {
        PreferenceDataset {
            pairs,
            ..Default::default()
        }
    }

    #[test]
    fn identical_sides_give_unit_ratios() {
        let t = "**Hi**! 😀\n- one\n- two";
        let r = pattern_stats(&dataset(vec![
            pair(Some(t), Some(t)),
            pair(Some("longer text"), Some("longer text")),
        ]));
        for s in &r.stats {
            match s.pattern {
                Pattern::Length => assert_eq!((s.chosen_count, s.rejected_count), (0, 0)),
                _ => assert_eq!(s.preference_ratio, Some(1.0), "{:?}", s.pattern),
            }
        }
    }

    #[test]
    fn length_counts_longer_side_and_missing_text_is_skipped() {
        let r = pattern_stats(&dataset(vec![
            pair(Some("long answer"), Some("short")),
            pair(Some("tiny"), Some("much longer")),
            pair(Some("x!"), Some("y!")),
            pair(None, Some("z")),
        ]));
        let len = r.get(Pattern::Length).unwrap();
        assert_eq!((len.chosen_count, len.rejected_count), (1, 1));
        assert_eq!(r.pairs_skipped, 1);
        assert_eq!(r.pairs_analyzed, 3);
        assert_eq!(r.get(Pattern::Exclamation).unwrap().chosen_count, 1);
    }

    #[test]
    fn six_number_zscore_case() {
        // mean 3.5, population variance 35/12; group means ∓1.5/sqrt(35/12);
        // variance of the two group means = 2.25 / (35/12) = 27/35.
        let recs = [(1.0, "a"), (2.0, "a"), (3.0, "a"), (4.0, "b"), (5.0, "b"), (6.0, "b")];
        let r = style_zscores(&recs).unwrap();
        let sd = (35.0f64 / 12.0).sqrt();
        assert!((r.groups[0].mean_z + 1.5 / sd).abs() < 1e-12);
        assert!((r.groups[1].mean_z - 1.5 / sd).abs() < 1e-12);
        assert!((r.variance_across_groups - 27.0 / 35.0).abs() < 1e-12);
        assert!(!r.degenerate);
        assert_eq!(r.groups.iter().map(|g| g.count).sum::<usize>(), 6);
    }

    #[test]
    fn identical_group_distributions_have_zero_variance() {
        let recs = [(1.0, "x"), (5.0, "x"), (1.0, "y"), (5.0, "y")];
        let r = style_zscores(&recs).unwrap();
        assert_eq!(r.variance_across_groups, 0.0);
    }

    #[test]
    fn constant_scores_are_degenerate() {
        let r = style_zscores(&[(2.0, "a"), (2.0, "b"), (2.0, "b")]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.variance_across_groups, 0.0);
        assert!(r.groups.iter().all(|g| g.mean_z == 0.0));
        assert!(style_zscores(&[(1.0, "a")]).is_err());
        assert!(style_zscores(&[(1.0, "a"), (f64::NAN, "b")]).is_err());
    }

    proptest! {
        #[test]
        fn zscores_are_standardized(scores in proptest::collection::vec(-50.0..50.0f64, 2..200)) {
            let z = zscores(&scores);
            prop_assume!(z.iter().any(|v| *v != 0.0));
            let n = z.len() as f64;
            let mean = z.iter().sum::<f64>() / n;
            let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() <= 1e-9);
            prop_assert!((sd - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn trailing_whitespace_does_not_matter(text in "[-*•0-9. a-z!\n]{0,60}", pad in "[ \t\n]{0,5}") {
            prop_assert_eq!(detect_patterns(&text), detect_patterns(&format!("{text}{pad}")));
        }

        #[test]
        fn swapping_sides_inverts_ratios(texts in proptest::collection::vec(("[a-z!*\n-]{0,20}", "[a-z!*\n-]{0,20}"), 1..20)) {
            let pairs: Vec<_> = texts.iter().map(|(c, r)| pair(Some(c), Some(r))).collect();
            let swapped: Vec<_> = texts.iter().map(|(c, r)| pair(Some(r), Some(c))).collect();
            let a = pattern_stats(&dataset(pairs));
            let b = pattern_stats(&dataset(swapped));
            for (x, y) in a.stats.iter().zip(&b.stats) {
                if let (Some(rx), Some(ry)) = (x.preference_ratio, y.preference_ratio) {
                    prop_assert!((rx * ry - 1.0).abs() <= 1e-12);
                }
            }
        }
    }
}
