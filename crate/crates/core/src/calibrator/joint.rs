//! Joint offsets for several models against the full Elo win-rate matrix.
//!
//! Win rates depend only on offset differences, so adding a constant to
//! every offset changes nothing. One model (the anchor) is pinned at zero.

use std::collections::BTreeMap;

use super::winrate::mean_sigmoid;
use super::{CalibrationMode, CalibrationResult, WinRates};
use crate::elo::expected_win_rate;
use crate::ingest::{EloTable, ScoreTable};
use crate::math::{sigmoid, sigmoid_derivative};
use crate::{Error, Result};

/// Gradient-descent settings for [`solve_offsets_joint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOptions {
    /// Initial step size.
    pub step: f64,
    pub max_iters: usize,
    /// Stop once an accepted step improves the loss by no more than this.
    pub tol: f64,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions {
            step: 0.5,
            max_iters: 10_000,
            tol: 1e-12,
        }
    }
}

/// Steps shrink by half on rejection and never below `step * MIN_STEP_FRACTION`.
const MIN_STEP_FRACTION: f64 = 1e-6;
const MAX_STEP_FRACTION: f64 = 1e6;
const STEP_GROWTH: f64 = 1.5;
const DIVERGENCE_PATIENCE: usize = 10;
/// Below this gradient magnitude the loss is flat to working precision.
const GRADIENT_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone)]
struct PairBlock {
    row: usize,
    col: usize,
    /// `s_row - s_col` over the pair's shared prompts.
    diffs: Vec<f64>,
}

/// Precomputed score differences and Elo targets for a set of models.
#[derive(Debug, Clone)]
pub struct JointProblem {
    models: Vec<String>,
    blocks: Vec<PairBlock>,
    target: Vec<Vec<f64>>,
}

impl JointProblem {
    pub fn new(table: &ScoreTable, elo: &EloTable, models: &[&str]) -> Result<Self> {
        if models.len() < 2 {
            return Err(Error::invalid("joint calibration needs at least two models"));
        }
        for (i, m) in models.iter().enumerate() {
            if models[..i].contains(m) {
                return Err(Error::invalid(format!("model {m:?} listed twice")));
            }
        }
        let n = models.len();
        let mut target = vec![vec![0.5; n]; n];
        let mut blocks = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let shared = table.require_shared(models[i], models[j])?;
                let diffs = shared
                    .iter()
                    .map(|p| table.score(p, models[i]).unwrap() - table.score(p, models[j]).unwrap())
                    .collect();
                blocks.push(PairBlock { row: i, col: j, diffs });
                let t = expected_win_rate(elo.get(models[i])?, elo.get(models[j])?)?.value();
                target[i][j] = t;
                target[j][i] = 1.0 - t;
            }
        }
        Ok(JointProblem {
            models: models.iter().map(|m| m.to_string()).collect(),
            blocks,
            target,
        })
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn target_matrix(&self) -> &[Vec<f64>] {
        &self.target
    }

    /// Number of shared prompts behind each off-diagonal entry.
    pub fn pair_counts(&self) -> Vec<Vec<usize>> {
        let n = self.models.len();
        let mut out = vec![vec![0; n]; n];
        for b in &self.blocks {
            out[b.row][b.col] = b.diffs.len();
            out[b.col][b.row] = b.diffs.len();
        }
        out
    }

    /// `M(i, j) = mean σ(s_i + Δ_i - s_j - Δ_j)`; the diagonal is 0.5.
    pub fn win_rate_matrix(&self, offsets: &[f64]) -> Vec<Vec<f64>> {
        let n = self.models.len();
        let mut m = vec![vec![0.5; n]; n];
        for b in &self.blocks {
            let shift = offsets[b.row] - offsets[b.col];
            m[b.row][b.col] = mean_sigmoid(&b.diffs, shift);
            m[b.col][b.row] = mean_sigmoid_negated(&b.diffs, shift);
        }
        m
    }

    /// Mean squared error over the off-diagonal entries.
    pub fn loss(&self, offsets: &[f64]) -> f64 {
        self.loss_and_gradient(offsets).0
    }

    /// Loss and its analytic gradient with respect to every offset.
    pub fn loss_and_gradient(&self, offsets: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(offsets.len(), self.models.len(), "one offset per model");
        let n = self.models.len();
        let entries = (n * (n - 1)) as f64;
        let mut sq = 0.0;
        let mut grad = vec![0.0; n];
        for b in &self.blocks {
            let shift = offsets[b.row] - offsets[b.col];
            let (mut s, mut ds) = (0.0, 0.0);
            for d in &b.diffs {
                let x = d + shift;
                s += sigmoid(x);
                ds += sigmoid_derivative(x);
            }
            let len = b.diffs.len() as f64;
            let upper = s / len - self.target[b.row][b.col];
            let lower = mean_sigmoid_negated(&b.diffs, shift) - self.target[b.col][b.row];
            sq += upper * upper + lower * lower;
            // d(upper)/dΔ_row = g, d(lower)/dΔ_row = -g
            let g = ds / len;
            let pull = 2.0 * (upper - lower) * g / entries;
            grad[b.row] += pull;
            grad[b.col] -= pull;
        }
        (sq / entries, grad)
    }

    /// Gradient descent with the anchor's offset held at zero.
    ///
    /// The step grows after each accepted move and halves after a rejected
    /// one. Ten consecutive rejections at the minimum step are reported as
    /// [`Error::Divergence`].
    pub fn solve(&self, anchor: &str, opts: JointOptions) -> Result<CalibrationResult> {
        let anchor_idx = self
            .models
            .iter()
            .position(|m| m == anchor)
            .ok_or_else(|| Error::invalid(format!("anchor {anchor:?} is not among the models")))?;
        if !(opts.step > 0.0 && opts.step.is_finite()) {
            return Err(Error::invalid(format!("step must be positive, got {}", opts.step)));
        }
        if opts.tol.is_nan() || opts.tol < 0.0 {
            return Err(Error::invalid(format!(
                "tolerance must be non-negative, got {}",
                opts.tol
            )));
        }

        let n = self.models.len();
        let min_step = opts.step * MIN_STEP_FRACTION;
        let max_step = opts.step * MAX_STEP_FRACTION;
        let mut step = opts.step;
        let mut offsets = vec![0.0; n];
        let (mut loss, mut grad) = self.loss_and_gradient(&offsets);
        let mut stalled = 0;
        let mut converged = false;
        let mut iterations = 0;

        while iterations < opts.max_iters {
            grad[anchor_idx] = 0.0;
            if grad.iter().all(|g| g.abs() <= GRADIENT_FLOOR) {
                converged = true;
                break;
            }
            iterations += 1;
            let candidate: Vec<f64> = offsets.iter().zip(&grad).map(|(o, g)| o - step * g).collect();
            let (next_loss, next_grad) = self.loss_and_gradient(&candidate);
            if next_loss <= loss {
                let improvement = loss - next_loss;
                offsets = candidate;
                loss = next_loss;
                grad = next_grad;
                stalled = 0;
                step = (step * STEP_GROWTH).min(max_step);
                if improvement <= opts.tol {
                    converged = true;
                    break;
                }
            } else if step <= min_step {
                stalled += 1;
                if stalled >= DIVERGENCE_PATIENCE {
                    return Err(Error::Divergence { iterations, loss });
                }
            } else {
                step = (step * 0.5).max(min_step);
            }
        }

        let offsets_map: BTreeMap<String, f64> = self.models.iter().cloned().zip(offsets.iter().copied()).collect();
        Ok(CalibrationResult {
            mode: CalibrationMode::Joint,
            offsets: offsets_map,
            anchor: anchor.to_string(),
            win_rates: WinRates::Matrix {
                models: self.models.clone(),
                initial: self.win_rate_matrix(&vec![0.0; n]),
                achieved: self.win_rate_matrix(&offsets),
                target: self.target.clone(),
            },
            residual_loss: loss,
            tolerance: opts.tol,
            iterations,
            converged,
        })
    }
}

fn mean_sigmoid_negated(diffs: &[f64], shift: f64) -> f64 {
    let sum: f64 = diffs.iter().map(|d| sigmoid(-(d + shift))).sum();
    sum / diffs.len() as f64
}

/// Fits one offset per model so the pairwise win-rate matrix of the
/// calibrated scores matches the Elo-implied matrix, `anchor` fixed at 0.
pub fn solve_offsets_joint(
    table: &ScoreTable,
    elo: &EloTable,
    models: &[&str],
    anchor: &str,
    opts: JointOptions,
) -> Result<CalibrationResult> {
    JointProblem::new(table, elo, models)?.solve(anchor, opts)
}
