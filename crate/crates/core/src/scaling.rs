//! Grade-aware score scaling and train-only min-max normalization.
//!
//! The highest grade tier of a dataset maps onto `[0, 6]`; each lower tier
//! loses one point of range. Tiers are the distinct grade levels present, so
//! a dataset with grades {7, 8, 10} gets `[0, 4]`, `[0, 5]` and `[0, 6]`.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ScoreRange;
use crate::features::{FeatureMatrix, MatrixError};

pub const TOP_TARGET_MAX: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    /// Grade-tier ranges.
    #[default]
    GradeTiers,
    /// Plain min-max onto `[0, 6]` for every prompt.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub raw_min: f64,
    pub raw_max: f64,
    pub raw_step: f64,
    pub grade_level: u32,
    pub max_grade_in_dataset: u32,
    pub target_max: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScaleError {
    #[error("score {score} outside [{min}, {max}]")]
    OutOfRange { score: f64, min: f64, max: f64 },
    #[error("score {score} is not on the {step} grid")]
    OffGrid { score: f64, step: f64 },
}

impl ScaleSpec {
    /// Spec for a prompt of `grade` in a dataset whose prompts have `dataset_grades`.
    pub fn new(range: ScoreRange, grade: u32, dataset_grades: &[u32], mode: ScalingMode) -> Self {
        let max_grade = dataset_grades.iter().copied().max().unwrap_or(grade).max(grade);
        let target_max = match mode {
            ScalingMode::Uniform => TOP_TARGET_MAX,
            ScalingMode::GradeTiers => {
                let mut above: Vec<u32> = dataset_grades.iter().copied().filter(|&g| g > grade).collect();
                above.sort_unstable();
                above.dedup();
                (TOP_TARGET_MAX - above.len() as f64).max(1.0)
            }
        };
        ScaleSpec {
            raw_min: range.min,
            raw_max: range.max,
            raw_step: range.step,
            grade_level: grade,
            max_grade_in_dataset: max_grade,
            target_max,
        }
    }

    pub fn range(&self) -> ScoreRange {
        ScoreRange::new(self.raw_min, self.raw_max, self.raw_step)
    }

    pub fn scale(&self, raw: f64) -> Result<f64, ScaleError> {
        let range = self.range();
        if !range.contains(raw) {
            return Err(ScaleError::OutOfRange {
                score: raw,
                min: self.raw_min,
                max: self.raw_max,
            });
        }
        let Some(k) = range.index_of(raw) else {
            return Err(ScaleError::OffGrid {
                score: raw,
                step: self.raw_step,
            });
        };
        let snapped = self.raw_min + k as f64 * self.raw_step;
        Ok((snapped - self.raw_min) / (self.raw_max - self.raw_min) * self.target_max)
    }

    /// Inverse map, rounded half away from zero to the raw grid, then clamped.
    pub fn unscale(&self, value: f64) -> f64 {
        let raw = if value.is_finite() {
            self.raw_min + value / self.target_max * (self.raw_max - self.raw_min)
        } else if value > 0.0 {
            self.raw_max
        } else {
            self.raw_min
        };
        let k = libm::round((raw - self.raw_min) / self.raw_step);
        let max_k = (self.range().levels() - 1) as f64;
        self.raw_min + k.clamp(0.0, max_k) * self.raw_step
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub columns: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    /// Per-column min and max over every row of `train`.
    pub fn fit(train: &FeatureMatrix) -> Self {
        let n = train.n_cols();
        let mut min = alloc::vec![f64::INFINITY; n];
        let mut max = alloc::vec![f64::NEG_INFINITY; n];
        for row in train.rows() {
            for (c, &v) in row.iter().enumerate() {
                min[c] = min[c].min(v);
                max[c] = max[c].max(v);
            }
        }
        if train.n_rows() == 0 {
            min.iter_mut().for_each(|v| *v = 0.0);
            max.iter_mut().for_each(|v| *v = 0.0);
        }
        Normalizer {
            columns: train.column_names(),
            min,
            max,
        }
    }

    pub fn is_constant(&self, col: usize) -> bool {
        !(self.max[col] > self.min[col])
    }

    pub fn normalize_value(&self, col: usize, x: f64) -> f64 {
        if self.is_constant(col) {
            return 0.0;
        }
        ((x - self.min[col]) / (self.max[col] - self.min[col])).clamp(0.0, 1.0)
    }

    pub fn normalize_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(c, &x)| self.normalize_value(c, x)).collect()
    }

    pub fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix, MatrixError> {
        m.check_columns(&self.columns)?;
        let mut out = m.clone();
        for i in 0..out.n_rows() {
            let row = self.normalize_row(m.row(i));
            out.row_mut(i).copy_from_slice(&row);
        }
        Ok(out)
    }
}
