//! Synthetic tournaments and biased score tables with known ground truth.
//!
//! Battles and scores draw from separate ChaCha8 streams of the same seed, so
//! changing `n_battles` leaves the simulated scores untouched and vice versa.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::calibrator::{calibrate_scores, solve_offsets_joint, JointOptions, PairwiseScores, DEFAULT_TOLERANCE};
use crate::elo::{
    expected_win_rate, fit_elo, split_ties, BattleOutcome, BattleResult, DEFAULT_INITIAL_RATING, DEFAULT_K_FACTOR,
};
use crate::ingest::{EloTable, ScoreRecord, ScoreTable};
use crate::{Error, Result};

const BATTLE_STREAM: u64 = 0;
const SCORE_STREAM: u64 = 1;

/// Score units per Elo point: `ln 10 / 400`. With this map and no noise,
/// `sigmoid(skill_a - skill_b)` equals the Elo expected win rate.
pub fn skill(elo: f64) -> f64 {
    (elo - DEFAULT_INITIAL_RATING) / 400.0 * std::f64::consts::LN_10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModelSpec {
    pub model_id: String,
    pub true_elo: f64,
    /// Added to every score of this model.
    #[serde(default)]
    pub bias: f64,
    #[serde(default)]
    pub score_noise_std: f64,
}

impl SyntheticModelSpec {
    pub fn new(model_id: impl Into<String>, true_elo: f64, bias: f64, score_noise_std: f64) -> Self {
        SyntheticModelSpec {
            model_id: model_id.into(),
            true_elo,
            bias,
            score_noise_std,
        }
    }
}

fn default_k() -> f64 {
    DEFAULT_K_FACTOR
}
fn default_initial() -> f64 {
    DEFAULT_INITIAL_RATING
}
fn default_tol() -> f64 {
    DEFAULT_TOLERANCE
}
fn default_offset_tolerance() -> f64 {
    0.15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub n_prompts: usize,
    pub n_battles: usize,
    #[serde(default)]
    pub p_tie: f64,
    pub models: Vec<SyntheticModelSpec>,
    /// K-factor for the rating fit in [`run_recovery_suite`].
    #[serde(default = "default_k")]
    pub k_factor: f64,
    #[serde(default = "default_initial")]
    pub initial_rating: f64,
    /// Joint-calibration anchor; defaults to the model with the highest true Elo.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
    /// Win-rate tolerance of the pairwise offset solves.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Largest accepted error of a recovered joint offset, in score units.
    #[serde(default = "default_offset_tolerance")]
    pub offset_tolerance: f64,
}

impl SimConfig {
    pub fn new(seed: u64, n_prompts: usize, n_battles: usize, models: Vec<SyntheticModelSpec>) -> Self {
        SimConfig {
            seed,
            n_prompts,
            n_battles,
            p_tie: 0.0,
            models,
            k_factor: DEFAULT_K_FACTOR,
            initial_rating: DEFAULT_INITIAL_RATING,
            anchor: None,
            tol: DEFAULT_TOLERANCE,
            offset_tolerance: default_offset_tolerance(),
        }
    }

    /// The bundled recovery configuration: five models 100 Elo apart, three
    /// of them biased.
    pub fn default_recovery() -> Self {
        serde_json::from_str(include_str!("../data/recovery.json")).expect("bundled config parses")
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.len() < 2 {
            return Err(Error::invalid(format!(
                "simulation needs at least two models, got {}",
                self.models.len()
            )));
        }
        let mut seen = BTreeMap::new();
        for m in &self.models {
            if seen.insert(m.model_id.as_str(), ()).is_some() {
                return Err(Error::DuplicateModel(m.model_id.clone()));
            }
            if !m.true_elo.is_finite() || !m.bias.is_finite() {
                return Err(Error::invalid(format!(
                    "model {:?}: elo and bias must be finite",
                    m.model_id
                )));
            }
            if !(m.score_noise_std >= 0.0 && m.score_noise_std.is_finite()) {
                return Err(Error::invalid(format!(
                    "model {:?}: score_noise_std must be finite and >= 0",
                    m.model_id
                )));
            }
        }
        if !(0.0..1.0).contains(&self.p_tie) {
            return Err(Error::invalid(format!("p_tie must be in [0, 1), got {}", self.p_tie)));
        }
        if let Some(a) = &self.anchor {
            if !seen.contains_key(a.as_str()) {
                return Err(Error::UnknownModel(a.clone()));
            }
        }
        if [self.tol, self.offset_tolerance]
            .iter()
            .any(|t| t.is_nan() || *t <= 0.0)
        {
            return Err(Error::invalid("tol and offset_tolerance must be positive"));
        }
        Ok(())
    }

    pub fn true_elo(&self) -> Result<EloTable> {
        EloTable::from_entries(self.models.iter().map(|m| (m.model_id.clone(), m.true_elo)))
    }

    pub fn anchor(&self) -> &str {
        match &self.anchor {
            Some(a) => a,
            None => {
                let mut best = &self.models[0];
                for m in &self.models[1..] {
                    if m.true_elo > best.true_elo || (m.true_elo == best.true_elo && m.model_id < best.model_id) {
                        best = m;
                    }
                }
                &best.model_id
            }
        }
    }

    /// Same config with every bias set to zero.
    pub fn unbiased(&self) -> Self {
        let mut c = self.clone();
        for m in &mut c.models {
            m.bias = 0.0;
        }
        c
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Effective score expectation of side A: ties occur with probability
/// `p_tie` independently of the ratings; otherwise A wins with the Elo
/// probability. Ties count half.
pub fn battle_expectation(elo_a: f64, elo_b: f64, p_tie: f64) -> Result<f64> {
    let p = expected_win_rate(elo_a, elo_b)?.value();
    Ok(split_ties((1.0 - p_tie) * p, p_tie)?.value())
}

/// Samples battles between uniformly drawn ordered pairs of distinct models.
pub fn simulate_battles(config: &SimConfig) -> Result<Vec<BattleOutcome>> {
    config.validate()?;
    if config.n_battles == 0 {
        return Err(Error::invalid("n_battles must be at least 1"));
    }
    let n = config.models.len();
    let mut rng = rng(config.seed, BATTLE_STREAM);
    let mut out = Vec::with_capacity(config.n_battles);
    for _ in 0..config.n_battles {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (&config.models[i], &config.models[j]);
        let p = expected_win_rate(a.true_elo, b.true_elo)?.value();
        let result = if rng.random::<f64>() < config.p_tie {
            BattleResult::Tie
        } else if rng.random::<f64>() < p {
            BattleResult::AWins
        } else {
            BattleResult::BWins
        };
        out.push(BattleOutcome::new(&a.model_id, &b.model_id, result));
    }
    Ok(out)
}

/// Scores `u + skill(elo) + bias + noise` with a shared per-prompt `u ~ N(0,1)`
/// and `noise ~ N(0, score_noise_std)`. Noise is drawn even when its scale is
/// zero so that the random stream does not depend on the noise settings.
pub fn simulate_scores(config: &SimConfig) -> Result<ScoreTable> {
    config.validate()?;
    if config.n_prompts == 0 {
        return Err(Error::invalid("n_prompts must be at least 1"));
    }
    let width = config.n_prompts.saturating_sub(1).to_string().len();
    let mut rng = rng(config.seed, SCORE_STREAM);
    let mut records = Vec::with_capacity(config.n_prompts * config.models.len());
    for p in 0..config.n_prompts {
        let prompt = format!("p{p:0width$}");
        let u: f64 = rng.sample(StandardNormal);
        for m in &config.models {
            let z: f64 = rng.sample(StandardNormal);
            let score = u + skill(m.true_elo) + m.bias + m.score_noise_std * z;
            records.push(ScoreRecord::new(prompt.clone(), m.model_id.clone(), score));
        }
    }
    ScoreTable::from_records(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    pub model: String,
    pub true_elo: f64,
    pub recovered_elo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinFractionCheck {
    pub model_a: String,
    pub model_b: String,
    pub battles: usize,
    /// Mean score of A, ties counted half.
    pub observed: f64,
    pub expected: f64,
    /// Three binomial standard errors.
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetRow {
    pub model: String,
    pub bias: f64,
    pub offset: f64,
    /// Offset from the same simulation with all biases removed.
    pub baseline_offset: f64,
    /// `-(bias - bias_anchor)`.
    pub expected_shift: f64,
    /// `|offset - baseline_offset - expected_shift|`.
    pub shift_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRecovery {
    pub anchor: String,
    pub rows: Vec<OffsetRow>,
    pub residual_loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMismatch {
    pub over_valued: String,
    pub reference: String,
    pub n: usize,
    pub offset: f64,
    pub pre_md: f64,
    pub post_md: f64,
    /// `max(2 * tol, 1 / n)`.
    pub post_bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub seed: u64,
    pub ratings: Vec<RatingRow>,
    pub win_fractions: Vec<WinFractionCheck>,
    pub joint: JointRecovery,
    pub mismatch: Vec<PairMismatch>,
    pub checks: Vec<OracleCheck>,
}

impl RecoveryReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for RecoveryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {:>10} {:>12}", "model", "true_elo", "recovered")?;
        for r in &self.ratings {
            writeln!(f, "{:<16} {:>10.1} {:>12.1}", r.model, r.true_elo, r.recovered_elo)?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "{:<16} {:>8} {:>10} {:>10} {:>12}",
            "model", "bias", "offset", "baseline", "shift_err"
        )?;
        for r in &self.joint.rows {
            writeln!(
                f,
                "{:<16} {:>8.3} {:>10.4} {:>10.4} {:>12.2e}",
                r.model, r.bias, r.offset, r.baseline_offset, r.shift_error
            )?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "{:<16} {:<16} {:>10} {:>10}",
            "over_valued", "reference", "pre_md", "post_md"
        )?;
        for m in &self.mismatch {
            writeln!(
                f,
                "{:<16} {:<16} {:>10.4} {:>10.2e}",
                m.over_valued, m.reference, m.pre_md, m.post_md
            )?;
        }
        writeln!(f)?;
        for c in &self.checks {
            writeln!(
                f,
                "[{}] {}: {}",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// Mean A-side score per unordered pair, oriented by config order.
fn win_fraction_checks(config: &SimConfig, battles: &[BattleOutcome]) -> Result<Vec<WinFractionCheck>> {
    let index: BTreeMap<&str, usize> = config
        .models
        .iter()
        .enumerate()
        .map(|(i, m)| (m.model_id.as_str(), i))
        .collect();
    let mut tally: BTreeMap<(usize, usize), (usize, f64)> = BTreeMap::new();
    for b in battles {
        let (i, j) = (index[b.model_a.as_str()], index[b.model_b.as_str()]);
        let (key, s) = if i < j {
            ((i, j), b.result.score_a())
        } else {
            ((j, i), 1.0 - b.result.score_a())
        };
        let e = tally.entry(key).or_default();
        e.0 += 1;
        e.1 += s;
    }
    let pt = config.p_tie;
    let mut out = Vec::new();
    for ((i, j), (count, total)) in tally {
        let (a, b) = (&config.models[i], &config.models[j]);
        let expected = battle_expectation(a.true_elo, b.true_elo, pt)?;
        // score in {1, 0.5, 0}: E[s^2] = P(win) + P(tie) / 4
        let p = expected_win_rate(a.true_elo, b.true_elo)?.value();
        let second_moment = (1.0 - pt) * p + pt / 4.0;
        let var = (second_moment - expected * expected).max(0.0);
        let observed = total / count as f64;
        let bound = 3.0 * (var / count as f64).sqrt();
        out.push(WinFractionCheck {
            model_a: a.model_id.clone(),
            model_b: b.model_id.clone(),
            battles: count,
            observed,
            expected,
            bound,
            passed: (observed - expected).abs() <= bound,
        });
    }
    Ok(out)
}

/// Simulates battles and scores, then checks that the rating fit recovers the
/// true order, that win fractions follow the Elo model, that joint offsets
/// move by exactly the injected biases, and that pairwise calibration removes
/// the mismatch of every biased pair.
pub fn run_recovery_suite(config: &SimConfig) -> Result<RecoveryReport> {
    config.validate()?;
    let mut checks = Vec::new();

    let battles = simulate_battles(config)?;
    let fitted = fit_elo(&battles, config.k_factor, config.initial_rating)?;
    let ratings: Vec<RatingRow> = config
        .models
        .iter()
        .map(|m| {
            Ok(RatingRow {
                model: m.model_id.clone(),
                true_elo: m.true_elo,
                recovered_elo: fitted.get(&m.model_id)?,
            })
        })
        .collect::<Result<_>>()?;
    let order_ok = ratings.iter().enumerate().all(|(i, a)| {
        ratings[i + 1..]
            .iter()
            .all(|b| a.true_elo == b.true_elo || (a.true_elo < b.true_elo) == (a.recovered_elo < b.recovered_elo))
    });
    checks.push(OracleCheck {
        name: "rating_order".into(),
        passed: order_ok,
        detail: format!("{} models, {} battles", ratings.len(), battles.len()),
    });

    let win_fractions = win_fraction_checks(config, &battles)?;
    let wf_fail = win_fractions.iter().filter(|w| !w.passed).count();
    checks.push(OracleCheck {
        name: "win_fractions".into(),
        passed: wf_fail == 0,
        detail: format!("{wf_fail} of {} pairs outside 3 sigma", win_fractions.len()),
    });

    let elo = config.true_elo()?;
    let anchor = config.anchor().to_string();
    let models: Vec<&str> = config.models.iter().map(|m| m.model_id.as_str()).collect();
    let biased_table = simulate_scores(config)?;
    let baseline_table = simulate_scores(&config.unbiased())?;
    let opts = JointOptions::default();
    let joint = solve_offsets_joint(&biased_table, &elo, &models, &anchor, opts)?;
    let baseline = solve_offsets_joint(&baseline_table, &elo, &models, &anchor, opts)?;
    let anchor_bias = config
        .models
        .iter()
        .find(|m| m.model_id == anchor)
        .map_or(0.0, |m| m.bias);
    let rows: Vec<OffsetRow> = config
        .models
        .iter()
        .map(|m| {
            let offset = joint.offset(&m.model_id);
            let baseline_offset = baseline.offset(&m.model_id);
            let expected_shift = -(m.bias - anchor_bias);
            OffsetRow {
                model: m.model_id.clone(),
                bias: m.bias,
                offset,
                baseline_offset,
                expected_shift,
                shift_error: (offset - baseline_offset - expected_shift).abs(),
            }
        })
        .collect();
    let worst = rows.iter().map(|r| r.shift_error).fold(0.0, f64::max);
    checks.push(OracleCheck {
        name: "joint_offset_recovery".into(),
        passed: worst <= config.offset_tolerance,
        detail: format!("max shift error {worst:.3e} (limit {})", config.offset_tolerance),
    });

    let mut mismatch = Vec::new();
    for (i, a) in config.models.iter().enumerate() {
        for b in &config.models[i + 1..] {
            if a.bias == b.bias {
                continue;
            }
            let (over, reference) = if a.bias > b.bias { (a, b) } else { (b, a) };
            let scores = PairwiseScores::from_table(&biased_table, &over.model_id, &reference.model_id)?;
            let cal = calibrate_scores(&scores, &elo, config.tol)?;
            let post_bound = (2.0 * config.tol).max(1.0 / scores.len() as f64);
            mismatch.push(PairMismatch {
                over_valued: over.model_id.clone(),
                reference: reference.model_id.clone(),
                n: scores.len(),
                offset: cal.result.offset(&over.model_id),
                pre_md: cal.before.md,
                post_md: cal.after.md,
                post_bound,
                passed: cal.after.md <= cal.before.md && cal.after.md <= post_bound,
            });
        }
    }
    let md_fail = mismatch.iter().filter(|m| !m.passed).count();
    checks.push(OracleCheck {
        name: "md_reduction".into(),
        passed: md_fail == 0,
        detail: format!("{md_fail} of {} biased pairs failed", mismatch.len()),
    });

    Ok(RecoveryReport {
        seed: config.seed,
        ratings,
        win_fractions,
        joint: JointRecovery {
            anchor,
            rows,
            residual_loss: joint.residual_loss,
            iterations: joint.iterations,
            converged: joint.converged,
        },
        mismatch,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrator::{empirical_win_rate, mismatch_degree, solve_offset};

    fn two(elo_a: f64, elo_b: f64, n_battles: usize) -> SimConfig {
        SimConfig::new(
            7,
            10,
            n_battles,
            vec![
                SyntheticModelSpec::new("a", elo_a, 0.0, 0.0),
                SyntheticModelSpec::new("b", elo_b, 0.0, 0.0),
            ],
        )
    }

    #[test]
    fn skill_map_reproduces_elo_rate() {
        let d = skill(1272.0) - skill(1216.0);
        let p = crate::math::sigmoid(d);
        let e = expected_win_rate(1272.0, 1216.0).unwrap().value();
        assert!((p - e).abs() < 1e-15);
    }

    #[test]
    fn equal_elos_give_half_within_three_sigma() {
        let cfg = two(1000.0, 1000.0, 10_000);
        let checks = win_fraction_checks(&cfg, &simulate_battles(&cfg).unwrap()).unwrap();
        assert_eq!(checks.len(), 1);
        assert_eq!(checks[0].battles, 10_000);
        assert_eq!(checks[0].expected, 0.5);
        assert!(checks[0].passed, "{:?}", checks[0]);
    }

    #[test]
    fn four_hundred_point_gap_gives_ten_to_one() {
        let cfg = two(1400.0, 1000.0, 10_000);
        let c = &win_fraction_checks(&cfg, &simulate_battles(&cfg).unwrap()).unwrap()[0];
        assert!((c.expected - 10.0 / 11.0).abs() < 1e-15);
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn ties_follow_split_semantics() {
        let mut cfg = two(1200.0, 1000.0, 20_000);
        cfg.p_tie = 0.3;
        let battles = simulate_battles(&cfg).unwrap();
        let ties = battles.iter().filter(|b| b.result == BattleResult::Tie).count() as f64;
        let sigma = (0.3 * 0.7 / 20_000.0f64).sqrt();
        assert!((ties / 20_000.0 - 0.3).abs() <= 3.0 * sigma);
        assert!(win_fraction_checks(&cfg, &battles).unwrap()[0].passed);
    }

    #[test]
    fn same_seed_same_output() {
        let cfg = SimConfig::default_recovery();
        assert_eq!(simulate_battles(&cfg).unwrap(), simulate_battles(&cfg).unwrap());
        let small = SimConfig {
            n_prompts: 50,
            ..cfg.clone()
        };
        assert_eq!(simulate_scores(&small).unwrap(), simulate_scores(&small).unwrap());
        let other = SimConfig {
            seed: cfg.seed + 1,
            ..small.clone()
        };
        assert_ne!(simulate_scores(&small).unwrap(), simulate_scores(&other).unwrap());
    }

    #[test]
    fn streams_are_independent() {
        let cfg = SimConfig {
            n_prompts: 30,
            ..SimConfig::default_recovery()
        };
        let more = SimConfig {
            n_battles: 5,
            ..cfg.clone()
        };
        assert_eq!(simulate_scores(&cfg).unwrap(), simulate_scores(&more).unwrap());
    }

    #[test]
    fn noiseless_equal_models_have_zero_diffs() {
        let cfg = two(1100.0, 1100.0, 1);
        let t = simulate_scores(&cfg).unwrap();
        let s = PairwiseScores::from_table(&t, "a", "b").unwrap();
        assert!(s.diffs().iter().all(|d| *d == 0.0));
        assert_eq!(empirical_win_rate(&s, 0.0), 0.5);
    }

    #[test]
    fn bias_is_recovered_by_shift() {
        let mut cfg = SimConfig::new(
            3,
            500,
            1,
            vec![
                SyntheticModelSpec::new("a", 1216.0, 0.0, 1.0),
                SyntheticModelSpec::new("b", 1272.0, 0.0, 1.0),
            ],
        );
        let target = expected_win_rate(1216.0, 1272.0).unwrap().value();
        let base = PairwiseScores::from_table(&simulate_scores(&cfg).unwrap(), "a", "b").unwrap();
        let d0 = solve_offset(&base, target, 1e-12).unwrap().offset("a");
        cfg.models[0].bias = 1.5;
        let biased = PairwiseScores::from_table(&simulate_scores(&cfg).unwrap(), "a", "b").unwrap();
        let d1 = solve_offset(&biased, target, 1e-12).unwrap().offset("a");
        assert!((d1 - (d0 - 1.5)).abs() < 1e-6, "{d0} {d1}");
    }

    #[test]
    fn md_grows_with_bias() {
        let mut last = -1.0;
        for bias in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let cfg = SimConfig::new(
                11,
                2000,
                1,
                vec![
                    SyntheticModelSpec::new("a", 1216.0, bias, 1.0),
                    SyntheticModelSpec::new("b", 1272.0, 0.0, 1.0),
                ],
            );
            let s = PairwiseScores::from_table(&simulate_scores(&cfg).unwrap(), "a", "b").unwrap();
            let md = mismatch_degree(&s, &cfg.true_elo().unwrap(), 0.0).unwrap().md;
            assert!(md > last, "bias {bias}: md {md} <= {last}");
            last = md;
        }
    }

    #[test]
    fn invalid_configs() {
        let one = SimConfig::new(1, 10, 10, vec![SyntheticModelSpec::new("a", 1000.0, 0.0, 0.0)]);
        assert!(simulate_battles(&one).is_err());
        let mut cfg = two(1000.0, 1000.0, 10);
        cfg.p_tie = 1.0;
        assert!(simulate_battles(&cfg).is_err());
        let mut cfg = two(1000.0, 1000.0, 10);
        cfg.models[1].score_noise_std = -1.0;
        assert!(simulate_scores(&cfg).is_err());
        let mut cfg = two(1000.0, 1000.0, 10);
        cfg.models[1].model_id = "a".into();
        assert!(matches!(cfg.validate(), Err(Error::DuplicateModel(_))));
        assert!(simulate_battles(&two(1000.0, 1000.0, 0)).is_err());
    }

    #[test]
    fn config_parses_with_defaults() {
        let cfg: SimConfig = serde_json::from_str(
            r#"{"seed":1,"n_prompts":5,"n_battles":5,
                "models":[{"model_id":"a","true_elo":1000},{"model_id":"b","true_elo":1100,"bias":0.5}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.k_factor, DEFAULT_K_FACTOR);
        assert_eq!(cfg.p_tie, 0.0);
        assert_eq!(cfg.anchor(), "b");
        assert!(
            serde_json::from_str::<SimConfig>(r#"{"seed":1,"n_prompts":5,"n_battles":5,"models":[],"extra":1}"#)
                .is_err()
        );
    }

    #[test]
    fn default_suite_passes() {
        let report = run_recovery_suite(&SimConfig::default_recovery()).unwrap();
        assert!(report.all_passed(), "{report}");
        assert!(!report.mismatch.is_empty());
    }
}
