use super::PairwiseScores;
use crate::math::sigmoid;
use crate::{Error, Result};

/// Mean of `σ(d_i + offset)` over the pair's differences.
///
/// With `offset = 0` this is the uncalibrated win rate of the over-valued
/// model as judged by the reward scores.
pub fn empirical_win_rate(scores: &PairwiseScores, offset: f64) -> f64 {
    mean_sigmoid(scores.diffs(), offset)
}

pub(crate) fn mean_sigmoid(diffs: &[f64], offset: f64) -> f64 {
    let sum: f64 = diffs.iter().map(|d| sigmoid(d + offset)).sum();
    sum / diffs.len() as f64
}

/// Squared gap between the offset win rate and `target`.
pub fn mse_loss(scores: &PairwiseScores, offset: f64, target: f64) -> Result<f64> {
    check_target(target)?;
    let r = empirical_win_rate(scores, offset) - target;
    Ok(r * r)
}

pub(crate) fn check_target(target: f64) -> Result<()> {
    if target > 0.0 && target < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "target win rate must lie in (0, 1), got {target}"
        )))
    }
}
