//! Scalar offset solve: bracket outward from zero, then bisect.
//!
//! `Δ ↦ mean σ(d_i + Δ)` is continuous and strictly increasing from 0 to 1,
//! so the squared residual against a target in (0, 1) has a unique zero.

use std::collections::BTreeMap;

use super::winrate::{check_target, empirical_win_rate};
use super::{CalibrationMode, CalibrationResult, PairwiseScores, WinRates};
use crate::{Error, Result};

/// Default tolerance on the win-rate residual.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Largest |Δ| the bracket search will try.
pub const OFFSET_LIMIT: f64 = 1e9;

/// Finds Δ with `|empirical_win_rate(scores, Δ) - target| <= tol`.
pub fn solve_offset(scores: &PairwiseScores, target: f64, tol: f64) -> Result<CalibrationResult> {
    check_target(target)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let residual = |delta: f64| empirical_win_rate(scores, delta) - target;

    let initial = empirical_win_rate(scores, 0.0);
    let mut iterations = 0;
    let (delta, r) = if (initial - target).abs() <= tol {
        (0.0, initial - target)
    } else {
        let (mut lo, mut hi) = bracket(residual, initial - target, target, &mut iterations)?;
        loop {
            let mid = 0.5 * (lo + hi);
            let r = residual(mid);
            iterations += 1;
            if r.abs() <= tol || mid <= lo || mid >= hi {
                break (mid, r);
            }
            if r < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    };

    let achieved = empirical_win_rate(scores, delta);
    let mut offsets = BTreeMap::new();
    offsets.insert(scores.over_valued().to_string(), delta);
    offsets.insert(scores.reference().to_string(), 0.0);
    Ok(CalibrationResult {
        mode: CalibrationMode::Pair,
        offsets,
        anchor: scores.reference().to_string(),
        win_rates: WinRates::Pair {
            over_valued: scores.over_valued().to_string(),
            reference: scores.reference().to_string(),
            n: scores.len(),
            initial,
            achieved,
            target,
        },
        residual_loss: r * r,
        tolerance: tol,
        iterations,
        converged: r.abs() <= tol,
    })
}

/// Doubles outward from 0 until the residual changes sign.
fn bracket(residual: impl Fn(f64) -> f64, r0: f64, target: f64, iterations: &mut usize) -> Result<(f64, f64)> {
    let direction = if r0 < 0.0 { 1.0 } else { -1.0 };
    let mut inner = 0.0;
    let mut outer = direction;
    loop {
        *iterations += 1;
        let r = residual(outer);
        if (r < 0.0) != (r0 < 0.0) || r == 0.0 {
            break;
        }
        inner = outer;
        outer *= 2.0;
        if outer.abs() > OFFSET_LIMIT {
            return Err(Error::BracketExceeded {
                limit: OFFSET_LIMIT,
                target,
            });
        }
    }
    Ok(if direction > 0.0 {
        (inner, outer)
    } else {
        (outer, inner)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrator::mse_loss;
    use proptest::prelude::*;

    fn pair(diffs: Vec<f64>) -> PairwiseScores {
        PairwiseScores::new("o", "r", diffs).unwrap()
    }

    #[test]
    fn symmetric_diffs_at_one_half_need_no_offset() {
        let res = solve_offset(&pair(vec![-2.0, -0.5, 0.5, 2.0]), 0.5, 1e-10).unwrap();
        assert_eq!(res.offset("o"), 0.0);
        assert!(res.converged);
        assert_eq!(res.offset("r"), 0.0);
    }

    #[test]
    fn fixed_point_returns_zero() {
        let p = pair(vec![0.3, -1.2, 2.5]);
        let target = empirical_win_rate(&p, 0.0);
        assert_eq!(solve_offset(&p, target, 1e-12).unwrap().offset("o"), 0.0);
    }

    #[test]
    fn single_diff_has_closed_form_root() {
        // σ(1 + Δ) = 0.25  =>  Δ = ln(1/3) - 1
        let res = solve_offset(&pair(vec![1.0]), 0.25, 1e-13).unwrap();
        let expected = (1.0f64 / 3.0).ln() - 1.0;
        assert!((res.offset("o") - expected).abs() < 1e-11);
        assert!(res.residual_loss <= 1e-26);
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = pair(vec![0.0]);
        assert!(solve_offset(&p, 0.0, 1e-10).is_err());
        assert!(solve_offset(&p, 1.0, 1e-10).is_err());
        assert!(solve_offset(&p, 0.5, 0.0).is_err());
    }

    #[test]
    fn saturated_inputs_still_bracket() {
        let res = solve_offset(&pair(vec![500.0, 700.0]), 0.3, 1e-10).unwrap();
        assert!(res.converged);
        assert!(res.offset("o") < -500.0);
    }

    #[test]
    fn absurd_spread_exceeds_bracket() {
        let err = solve_offset(&pair(vec![-1e12]), 0.5, 1e-10).unwrap_err();
        assert!(matches!(err, Error::BracketExceeded { .. }));
    }

    proptest! {
        #[test]
        fn solution_hits_target_and_beats_neighbours(
            diffs in proptest::collection::vec(-4.0..4.0f64, 1..60),
            target in 0.05..0.95f64,
        ) {
            let p = pair(diffs);
            let res = solve_offset(&p, target, 1e-10).unwrap();
            let d = res.offset("o");
            let (achieved, t) = res.pair_rates().unwrap();
            prop_assert!((achieved - t).abs() <= 1e-10);
            prop_assert!((empirical_win_rate(&p, d) - target).abs() <= 1e-10);
            let here = mse_loss(&p, d, target).unwrap();
            prop_assert!(here <= mse_loss(&p, d + 1e-3, target).unwrap());
            prop_assert!(here <= mse_loss(&p, d - 1e-3, target).unwrap());
        }

        #[test]
        fn shift_moves_solution_by_minus_shift(
            diffs in proptest::collection::vec(-3.0..3.0f64, 5..60),
            target in 0.1..0.9f64,
            delta in -4.0..4.0f64,
        ) {
            let p = pair(diffs);
            let base = solve_offset(&p, target, 1e-12).unwrap().offset("o");
            let moved = solve_offset(&p.shifted(delta).unwrap(), target, 1e-12).unwrap().offset("o");
            prop_assert!((moved - (base - delta)).abs() <= 1e-8);
        }
    }
}
