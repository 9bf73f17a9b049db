//! Elo win-probability model and an online rating fit for simulated battles.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::ingest::EloTable;
use crate::{Error, Result};

/// Rating points per factor of ten in odds.
pub const ELO_SCALE: f64 = 400.0;
pub const ELO_BASE: f64 = 10.0;

pub const DEFAULT_K_FACTOR: f64 = 32.0;
pub const DEFAULT_INITIAL_RATING: f64 = 1000.0;

/// Probability that one side beats the other, ties counted as half a win.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExpectedWinRate(f64);

impl ExpectedWinRate {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<ExpectedWinRate> for f64 {
    fn from(p: ExpectedWinRate) -> f64 {
        p.0
    }
}

/// Expected win rate of a player rated `elo_o` against one rated `elo_r`:
/// `1 / (1 + 10^((elo_r - elo_o) / 400))`.
pub fn expected_win_rate(elo_o: f64, elo_r: f64) -> Result<ExpectedWinRate> {
    if !elo_o.is_finite() || !elo_r.is_finite() {
        return Err(Error::invalid(format!("ratings must be finite (got {elo_o}, {elo_r})")));
    }
    Ok(ExpectedWinRate(expected_unchecked(elo_o, elo_r)))
}

#[inline]
pub(crate) fn expected_unchecked(elo_o: f64, elo_r: f64) -> f64 {
    1.0 / (1.0 + ELO_BASE.powf((elo_r - elo_o) / ELO_SCALE))
}

/// Folds a tie probability into an effective win probability by crediting
/// half of every tie to each side.
pub fn split_ties(p_win: f64, p_tie: f64) -> Result<ExpectedWinRate> {
    let in_unit = |p: f64| (0.0..=1.0).contains(&p);
    if !in_unit(p_win) || !in_unit(p_tie) || p_win + p_tie > 1.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "need p_win, p_tie >= 0 and p_win + p_tie <= 1 (got {p_win}, {p_tie})"
        )));
    }
    Ok(ExpectedWinRate(p_win + 0.5 * p_tie))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BattleResult {
    AWins,
    BWins,
    Tie,
}

impl BattleResult {
    /// Score credited to side A: 1, 0.5 or 0.
    pub fn score_a(self) -> f64 {
        match self {
            BattleResult::AWins => 1.0,
            BattleResult::Tie => 0.5,
            BattleResult::BWins => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BattleOutcome {
    pub model_a: String,
    pub model_b: String,
    pub result: BattleResult,
}

impl BattleOutcome {
    pub fn new(model_a: impl Into<String>, model_b: impl Into<String>, result: BattleResult) -> Self {
        BattleOutcome {
            model_a: model_a.into(),
            model_b: model_b.into(),
            result,
        }
    }
}

/// Replays battles in order with the two-player update
/// `R <- R + K (S - E)`; every model starts at `initial`.
pub fn fit_elo(battles: &[BattleOutcome], k_factor: f64, initial: f64) -> Result<EloTable> {
    if !(k_factor > 0.0 && k_factor.is_finite()) {
        return Err(Error::invalid(format!("k_factor must be positive (got {k_factor})")));
    }
    if !initial.is_finite() {
        return Err(Error::invalid("initial rating must be finite"));
    }
    if battles.is_empty() {
        return Err(Error::invalid("no battles to fit"));
    }

    let mut ratings: BTreeMap<&str, f64> = BTreeMap::new();
    for (i, b) in battles.iter().enumerate() {
        if b.model_a == b.model_b {
            return Err(Error::invalid(format!(
                "battle {} pits {:?} against itself",
                i + 1,
                b.model_a
            )));
        }
        let ra = *ratings.entry(&b.model_a).or_insert(initial);
        let rb = *ratings.entry(&b.model_b).or_insert(initial);
        let delta = k_factor * (b.result.score_a() - expected_unchecked(ra, rb));
        ratings.insert(&b.model_a, ra + delta);
        ratings.insert(&b.model_b, rb - delta);
    }
    EloTable::from_entries(ratings.into_iter().map(|(m, r)| (m.to_string(), r)))
}

pub fn read_battles(reader: impl BufRead) -> Result<Vec<BattleOutcome>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Malformed {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let battle: BattleOutcome = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if battle.model_a == battle.model_b {
            return Err(Error::Malformed {
                line: idx + 1,
                message: "model_a and model_b must differ".into(),
            });
        }
        out.push(battle);
    }
    Ok(out)
}

pub fn write_battles(battles: &[BattleOutcome], mut writer: impl Write) -> std::io::Result<()> {
    for b in battles {
        serde_json::to_writer(&mut writer, b)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn arena_pair_expected_rate() {
        // 1 / (1 + 10^(56/400)), rounded from 30-digit arithmetic
        let p = expected_win_rate(1216.0, 1272.0).unwrap().value();
        assert!((p - 0.4201002396421185).abs() < 1e-14, "{p}");
    }

    #[test]
    fn equal_ratings_give_one_half() {
        assert_eq!(expected_win_rate(1234.5, 1234.5).unwrap().value(), 0.5);
    }

    #[test]
    fn four_hundred_points_is_ten_to_one() {
        let p = expected_win_rate(1400.0, 1000.0).unwrap().value();
        assert!((p - 10.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_ratings_are_errors() {
        assert!(expected_win_rate(f64::NAN, 1.0).is_err());
        assert!(expected_win_rate(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn tie_splitting() {
        assert_eq!(split_ties(0.4, 0.2).unwrap().value(), 0.5);
        assert_eq!(split_ties(0.42009, 0.0).unwrap().value(), 0.42009);
        assert_eq!(split_ties(0.0, 1.0).unwrap().value(), 0.5);
        assert!(split_ties(0.8, 0.3).is_err());
        assert!(split_ties(-0.1, 0.3).is_err());
    }

    #[test]
    fn one_win_from_equal_ratings_moves_sixteen_points() {
        let t = fit_elo(&[BattleOutcome::new("a", "b", BattleResult::AWins)], 32.0, 1000.0).unwrap();
        assert_eq!(t.get("a").unwrap(), 1016.0);
        assert_eq!(t.get("b").unwrap(), 984.0);
    }

    #[test]
    fn ties_between_equals_change_nothing() {
        let battles = vec![BattleOutcome::new("a", "b", BattleResult::Tie); 50];
        let t = fit_elo(&battles, 32.0, 1000.0).unwrap();
        assert_eq!(t.get("a").unwrap(), 1000.0);
        assert_eq!(t.get("b").unwrap(), 1000.0);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_elo(&[], 32.0, 1000.0).is_err());
        assert!(fit_elo(&[BattleOutcome::new("a", "a", BattleResult::Tie)], 32.0, 1000.0).is_err());
        assert!(fit_elo(&[BattleOutcome::new("a", "b", BattleResult::Tie)], 0.0, 1000.0).is_err());
    }

    #[test]
    fn battle_log_round_trips() {
        let battles = vec![
            BattleOutcome::new("x", "y", BattleResult::AWins),
            BattleOutcome::new("y", "z", BattleResult::Tie),
        ];
        let mut buf = Vec::new();
        write_battles(&battles, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).contains("\"result\":\"a_wins\""));
        assert_eq!(read_battles(buf.as_slice()).unwrap(), battles);
    }

    proptest! {
        #[test]
        fn symmetric_and_translation_invariant(a in -3000.0..3000.0f64, b in -3000.0..3000.0f64, c in -1e4..1e4f64) {
            let p = expected_win_rate(a, b).unwrap().value();
            let q = expected_win_rate(b, a).unwrap().value();
            prop_assert!((p + q - 1.0).abs() <= 1e-12);
            let shifted = expected_win_rate(a + c, b + c).unwrap().value();
            prop_assert!((p - shifted).abs() <= 1e-12);
        }

        #[test]
        fn strictly_monotone(a in -2000.0..2000.0f64, b in -2000.0..2000.0f64, step in 1.0..100.0f64) {
            let p = expected_win_rate(a, b).unwrap().value();
            prop_assert!(expected_win_rate(a + step, b).unwrap().value() > p);
            prop_assert!(expected_win_rate(a, b + step).unwrap().value() < p);
        }

        #[test]
        fn fit_conserves_total_rating(results in proptest::collection::vec((0usize..4, 0usize..4, 0u8..3), 1..200)) {
            let names = ["a", "b", "c", "d"];
            let battles: Vec<_> = results
                .into_iter()
                .filter(|(i, j, _)| i != j)
                .map(|(i, j, r)| {
                    let r = match r { 0 => BattleResult::AWins, 1 => BattleResult::BWins, _ => BattleResult::Tie };
                    BattleOutcome::new(names[i], names[j], r)
                })
                .collect();
            prop_assume!(!battles.is_empty());
            let t = fit_elo(&battles, 32.0, 1000.0).unwrap();
            let total: f64 = t.iter().map(|(_, r)| r).sum();
            prop_assert!((total - 1000.0 * t.len() as f64).abs() <= 1e-9);
        }
    }
}
