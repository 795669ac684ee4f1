//! Quadratic weighted kappa over a score grid.
//!
//! Scores are mapped to grid indices `0..k`. With observed counts `O`,
//! expected counts `E = outer(row marginals, column marginals) / n` and
//! weights `w_ij = (i - j)^2 / (k - 1)^2`, kappa is `1 - sum(w O) / sum(w E)`.
//!
//! Degenerate cases: when both raters give one constant score, kappa is 1.0
//! if the constants agree and -1.0 otherwise. A one-point grid always gives 1.0.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::corpus::ScoreRange;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QwkError {
    #[error("length mismatch: {pred} predictions vs {gold} gold scores")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("no scores")]
    Empty,
    #[error("score {score} is off the grid at position {index}")]
    OffGrid { index: usize, score: f64 },
}

fn indices(scores: &[f64], grid: &ScoreRange) -> Result<Vec<usize>, QwkError> {
    scores
        .iter()
        .enumerate()
        .map(|(index, &score)| grid.index_of(score).ok_or(QwkError::OffGrid { index, score }))
        .collect()
}

pub fn qwk(pred: &[f64], gold: &[f64], grid: &ScoreRange) -> Result<f64, QwkError> {
    if pred.len() != gold.len() {
        return Err(QwkError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    if pred.is_empty() {
        return Err(QwkError::Empty);
    }
    let a = indices(pred, grid)?;
    let b = indices(gold, grid)?;
    Ok(qwk_indices(&a, &b, grid.levels()))
}

/// Kappa on precomputed indices in `0..k`.
pub fn qwk_indices(a: &[usize], b: &[usize], k: usize) -> f64 {
    let n = a.len();
    let constant = |v: &[usize]| v.iter().all(|&x| x == v[0]);
    if k <= 1 {
        return 1.0;
    }
    if constant(a) && constant(b) {
        return if a[0] == b[0] { 1.0 } else { -1.0 };
    }
    let mut observed = vec![0.0f64; k * k];
    let mut rows = vec![0.0f64; k];
    let mut cols = vec![0.0f64; k];
    for (&i, &j) in a.iter().zip(b) {
        observed[i * k + j] += 1.0;
        rows[i] += 1.0;
        cols[j] += 1.0;
    }
    let denom = ((k - 1) * (k - 1)) as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..k {
        for j in 0..k {
            let d = i as f64 - j as f64;
            let w = d * d / denom;
            num += w * observed[i * k + j];
            den += w * rows[i] * cols[j] / n as f64;
        }
    }
    if den == 0.0 {
        return if num == 0.0 { 1.0 } else { -1.0 };
    }
    1.0 - num / den
}
