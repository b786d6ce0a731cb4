//! Serializable building blocks shared by the report types.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// `lhs ≤ rhs` checked with an absolute tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative values are violations before tolerance.
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Inequality {
    pub fn le(lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        Self {
            lhs,
            rhs,
            margin,
            tolerance,
            pass: margin >= -tolerance,
        }
    }

    /// `|lhs - rhs| ≤ tolerance`, reported with the same fields.
    pub fn eq(lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        Self {
            lhs,
            rhs,
            margin,
            tolerance,
            pass: margin.abs() <= tolerance,
        }
    }

    /// `lhs < rhs` with no tolerance.
    pub fn lt(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            margin: rhs - lhs,
            tolerance: 0.0,
            pass: lhs < rhs,
        }
    }
}

/// Row-major dense matrix for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixData {
    fn from(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)]))
            .collect();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl From<&MatrixData> for DMatrix<f64> {
    fn from(m: &MatrixData) -> Self {
        DMatrix::from_row_slice(m.rows, m.cols, &m.data)
    }
}
