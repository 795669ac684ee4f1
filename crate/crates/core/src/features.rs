//! Named, categorized feature matrices.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::GenericCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureCategory {
    TraitSpecific,
    PromptSpecific,
    Length,
    Readability,
    Complexity,
    Variation,
    Sentiment,
}

impl FeatureCategory {
    /// Ablation order.
    pub const ALL: [FeatureCategory; 7] = [
        FeatureCategory::TraitSpecific,
        FeatureCategory::PromptSpecific,
        FeatureCategory::Length,
        FeatureCategory::Readability,
        FeatureCategory::Complexity,
        FeatureCategory::Variation,
        FeatureCategory::Sentiment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureCategory::TraitSpecific => "trait_specific",
            FeatureCategory::PromptSpecific => "prompt_specific",
            FeatureCategory::Length => "length",
            FeatureCategory::Readability => "readability",
            FeatureCategory::Complexity => "complexity",
            FeatureCategory::Variation => "variation",
            FeatureCategory::Sentiment => "sentiment",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl From<GenericCategory> for FeatureCategory {
    fn from(c: GenericCategory) -> Self {
        match c {
            GenericCategory::Length => FeatureCategory::Length,
            GenericCategory::Readability => FeatureCategory::Readability,
            GenericCategory::Complexity => FeatureCategory::Complexity,
            GenericCategory::Variation => FeatureCategory::Variation,
            GenericCategory::Sentiment => FeatureCategory::Sentiment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub category: FeatureCategory,
}

impl FeatureColumn {
    pub fn new(name: impl Into<String>, category: FeatureCategory) -> Self {
        FeatureColumn {
            name: name.into(),
            category,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("row {row_id} has {found} values, expected {expected}")]
    RowWidth {
        row_id: String,
        expected: usize,
        found: usize,
    },
    #[error("row ids differ at position {index}: {left} vs {right}")]
    RowMismatch { index: usize, left: String, right: String },
    #[error("row count differs: {left} vs {right}")]
    RowCount { left: usize, right: usize },
    #[error("columns differ: {0}")]
    ColumnMismatch(String),
}

/// Row-major matrix with one id per row and one named column per feature.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub row_ids: Vec<String>,
    pub columns: Vec<FeatureColumn>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(columns: Vec<FeatureColumn>) -> Self {
        FeatureMatrix {
            row_ids: Vec::new(),
            columns,
            values: Vec::new(),
        }
    }

    pub fn from_rows(columns: Vec<FeatureColumn>, rows: Vec<(String, Vec<f64>)>) -> Result<Self, MatrixError> {
        let mut m = Self::new(columns);
        for (id, row) in rows {
            m.push_row(id, &row)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row_id: impl Into<String>, row: &[f64]) -> Result<(), MatrixError> {
        let row_id = row_id.into();
        if row.len() != self.columns.len() {
            return Err(MatrixError::RowWidth {
                row_id,
                expected: self.columns.len(),
                found: row.len(),
            });
        }
        self.row_ids.push(row_id);
        self.values.extend_from_slice(row);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.n_cols();
        &mut self.values[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn row_index(&self, row_id: &str) -> Option<usize> {
        self.row_ids.iter().position(|r| r == row_id)
    }

    /// Columns of `self` followed by columns of `other`; rows must align by id.
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix, MatrixError> {
        if self.n_rows() != other.n_rows() {
            return Err(MatrixError::RowCount {
                left: self.n_rows(),
                right: other.n_rows(),
            });
        }
        for (i, (a, b)) in self.row_ids.iter().zip(&other.row_ids).enumerate() {
            if a != b {
                return Err(MatrixError::RowMismatch {
                    index: i,
                    left: a.clone(),
                    right: b.clone(),
                });
            }
        }
        let mut columns = self.columns.clone();
        columns.extend(other.columns.iter().cloned());
        let mut out = FeatureMatrix::new(columns);
        for i in 0..self.n_rows() {
            let mut row = self.row(i).to_vec();
            row.extend_from_slice(other.row(i));
            out.push_row(self.row_ids[i].clone(), &row)?;
        }
        Ok(out)
    }

    /// Keeps columns whose category passes `keep`.
    pub fn select_categories(&self, keep: impl Fn(FeatureCategory) -> bool) -> FeatureMatrix {
        let idx: Vec<usize> = (0..self.n_cols()).filter(|&c| keep(self.columns[c].category)).collect();
        self.select_columns(&idx)
    }

    pub fn select_columns(&self, idx: &[usize]) -> FeatureMatrix {
        let columns = idx.iter().map(|&c| self.columns[c].clone()).collect();
        let mut out = FeatureMatrix::new(columns);
        for i in 0..self.n_rows() {
            let row: Vec<f64> = idx.iter().map(|&c| self.get(i, c)).collect();
            out.row_ids.push(self.row_ids[i].clone());
            out.values.extend(row);
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut out = FeatureMatrix::new(self.columns.clone());
        for &i in idx {
            out.row_ids.push(self.row_ids[i].clone());
            out.values.extend_from_slice(self.row(i));
        }
        out
    }

    pub fn check_columns(&self, names: &[String]) -> Result<(), MatrixError> {
        if self.n_cols() != names.len() {
            return Err(MatrixError::ColumnMismatch(alloc::format!(
                "expected {} columns, found {}",
                names.len(),
                self.n_cols()
            )));
        }
        for (c, n) in self.columns.iter().zip(names) {
            if &c.name != n {
                return Err(MatrixError::ColumnMismatch(alloc::format!("expected {n}, found {}", c.name)));
            }
        }
        Ok(())
    }

    pub fn category_counts(&self) -> Vec<(FeatureCategory, usize)> {
        FeatureCategory::ALL
            .into_iter()
            .map(|cat| (cat, self.columns.iter().filter(|c| c.category == cat).count()))
            .filter(|(_, n)| *n > 0)
            .collect()
    }
}

/// Column names for `n` trait questions.
pub fn question_columns(trait_name: &str, n: usize) -> Vec<FeatureColumn> {
    (1..=n)
        .map(|i| FeatureColumn::new(alloc::format!("{trait_name}_q{i}"), FeatureCategory::TraitSpecific))
        .collect()
}

pub fn prompt_columns() -> Vec<FeatureColumn> {
    crate::corpus::PROMPT_FEATURE_NAMES
        .iter()
        .map(|n| FeatureColumn::new(n.to_string(), FeatureCategory::PromptSpecific))
        .collect()
}

pub fn generic_columns() -> Vec<FeatureColumn> {
    crate::text::registry()
        .into_iter()
        .map(|e| FeatureColumn::new(e.name, e.category.into()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn m() -> FeatureMatrix {
        FeatureMatrix::from_rows(
            vec![
                FeatureColumn::new("a", FeatureCategory::TraitSpecific),
                FeatureColumn::new("b", FeatureCategory::Length),
            ],
            vec![("x".into(), vec![1.0, 2.0]), ("y".into(), vec![3.0, 4.0])],
        )
        .unwrap()
    }

    #[test]
    fn stacking_and_selection() {
        let a = m();
        let b = a.select_categories(|c| c == FeatureCategory::Length);
        assert_eq!(b.row(1), &[4.0]);
        let s = a.hstack(&b).unwrap();
        assert_eq!(s.row(0), &[1.0, 2.0, 2.0]);
        assert_eq!(a.select_rows(&[1]).row_ids, vec!["y".to_string()]);
    }

    #[test]
    fn misaligned_rows_rejected() {
        let a = m();
        let b = a.select_rows(&[1, 0]);
        assert!(matches!(a.hstack(&b), Err(MatrixError::RowMismatch { .. })));
        let mut c = FeatureMatrix::new(a.columns.clone());
        assert!(c.push_row("z", &[1.0]).is_err());
    }
}
