use rand::Rng;

use super::RlError;
use crate::neural::{Tensor, ACTION_CLASSES};
use crate::sim::ActionMatrix;

/// One categorical draw per (node, type) row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledAction {
    /// Class per row: 0 = scale-in, 1 = keep, 2 = scale-out.
    pub classes: Vec<usize>,
    /// Σ over rows of the chosen class log-probability.
    pub log_prob: f64,
}

impl SampledAction {
    pub fn to_matrix(&self, nodes: usize) -> Result<ActionMatrix, RlError> {
        Ok(ActionMatrix::from_classes(nodes, &self.classes)?)
    }
}

fn check_rows(probs: &Tensor) -> Result<(), RlError> {
    if probs.cols() != ACTION_CLASSES {
        return Err(RlError::Probabilities(format!(
            "expected {ACTION_CLASSES} columns, got {}",
            probs.cols()
        )));
    }
    for r in 0..probs.rows() {
        let row = probs.row(r);
        let s: f64 = row.iter().sum();
        if row.iter().any(|p| !(*p >= 0.0)) || (s - 1.0).abs() > 1e-6 {
            return Err(RlError::Probabilities(format!(
                "row {r} = {row:?} is not a distribution"
            )));
        }
    }
    Ok(())
}

/// Samples an action from per-row probabilities (`rows × 3`).
pub fn sample_action<R: Rng + ?Sized>(
    probs: &Tensor,
    rng: &mut R,
) -> Result<SampledAction, RlError> {
    check_rows(probs)?;
    let mut classes = Vec::with_capacity(probs.rows());
    let mut log_prob = 0.0;
    for r in 0..probs.rows() {
        let row = probs.row(r);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = None;
        for (c, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc && p > 0.0 {
                pick = Some(c);
                break;
            }
        }
        // rounding can leave u just above the final cumulative sum
        let c = pick.unwrap_or_else(|| row.iter().rposition(|&p| p > 0.0).expect("row has mass"));
        log_prob += row[c].ln();
        classes.push(c);
    }
    Ok(SampledAction { classes, log_prob })
}

/// Argmax per row; ties go to the lowest class (in, keep, out).
pub fn greedy_classes(scores: &Tensor) -> Vec<usize> {
    (0..scores.rows())
        .map(|r| {
            let row = scores.row(r);
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}
