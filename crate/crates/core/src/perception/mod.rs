//! Multi-head puzzle perception: the model contract, evidence aggregation,
//! and the flattening of evidence into agent features.
//!
//! A perception model answers four kinds of queries about the *current
//! placement*, each as a likelihood in `[0,1]`: are two fragments
//! horizontal neighbors, vertical neighbors, do four fragments form a true
//! 2x2 block, and does the whole board look solved. [`aggregate_evidence`]
//! runs every local query plus the global one and combines them with
//! nonnegative weights into a single evidence scalar.

mod oracle;
mod pixelstat;

pub use oracle::OracleModel;
pub use pixelstat::PixelStatModel;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::puzzle::{BoardDims, Permutation, PuzzleSpec};

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("model built for {model_rows}x{model_cols} queried with a {rows}x{cols} board")]
    DimensionMismatch {
        model_rows: usize,
        model_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("{head} head returned {value}, outside [0,1]")]
    ScoreOutOfRange { head: &'static str, value: f64 },
    #[error("corruption probability must be in [0, 0.5), got {0}")]
    InvalidCorruption(f64),
    #[error("invalid evidence weights: {0}")]
    InvalidWeights(String),
}

/// Dense row-major grid of scores or weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    /// Row-major view of the values.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn dims_match(&self, rows: usize, cols: usize) -> bool {
        self.rows == rows && self.cols == cols
    }
}

/// Behavior contract of a perception model. Implementations are immutable
/// after construction and safe to query from many threads.
///
/// Fragments are identified by their ground-truth index; implementations
/// that score pixels resolve indices against the puzzle they were built from.
pub trait PerceptionModel: Send + Sync {
    /// Board geometry the model was built for.
    fn dims(&self) -> BoardDims;

    /// Likelihood that `left` sits immediately left of `right` in the
    /// solved puzzle.
    fn score_h(&self, left: usize, right: usize) -> f64;

    /// Likelihood that `top` sits immediately above `bottom`.
    fn score_v(&self, top: usize, bottom: usize) -> f64;

    /// Likelihood that `[top_left, top_right, bottom_left, bottom_right]`
    /// form a correctly assembled 2x2 block.
    fn score_q(&self, block: [usize; 4]) -> f64;

    /// Likelihood that the whole placement is the solved puzzle.
    fn score_global(&self, placement: &Permutation) -> f64;
}

/// Nonnegative weights for the evidence combination: one global weight and
/// one weight per local puzzlet location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceWeights {
    pub lambda_g: f64,
    pub lambda_h: Grid,
    pub lambda_v: Grid,
    pub lambda_q: Grid,
}

impl EvidenceWeights {
    /// Unit weights everywhere (the default configuration).
    pub fn uniform(dims: BoardDims) -> Self {
        Self {
            lambda_g: 1.0,
            lambda_h: Grid::filled(dims.rows, dims.cols - 1, 1.0),
            lambda_v: Grid::filled(dims.rows - 1, dims.cols, 1.0),
            lambda_q: Grid::filled(dims.rows - 1, dims.cols - 1, 1.0),
        }
    }

    /// Global term only; local grids zeroed.
    pub fn global_only(dims: BoardDims) -> Self {
        let mut w = Self::uniform(dims);
        w.lambda_h = Grid::filled(dims.rows, dims.cols - 1, 0.0);
        w.lambda_v = Grid::filled(dims.rows - 1, dims.cols, 0.0);
        w.lambda_q = Grid::filled(dims.rows - 1, dims.cols - 1, 0.0);
        w
    }

    pub fn validate(&self, dims: BoardDims) -> Result<(), PerceptionError> {
        let grids = [
            ("lambda_h", &self.lambda_h, dims.rows, dims.cols - 1),
            ("lambda_v", &self.lambda_v, dims.rows - 1, dims.cols),
            ("lambda_q", &self.lambda_q, dims.rows - 1, dims.cols - 1),
        ];
        for (name, grid, rows, cols) in grids {
            if !grid.dims_match(rows, cols) {
                return Err(PerceptionError::InvalidWeights(format!(
                    "{name} is {}x{}, expected {rows}x{cols}",
                    grid.rows(),
                    grid.cols()
                )));
            }
            if grid.as_slice().iter().any(|&w| w < 0.0 || !w.is_finite()) {
                return Err(PerceptionError::InvalidWeights(format!(
                    "{name} contains a negative or non-finite weight"
                )));
            }
        }
        if self.lambda_g < 0.0 || !self.lambda_g.is_finite() {
            return Err(PerceptionError::InvalidWeights(
                "lambda_g is negative or non-finite".into(),
            ));
        }
        let any_positive = self.lambda_g > 0.0
            || [&self.lambda_h, &self.lambda_v, &self.lambda_q]
                .iter()
                .any(|g| g.as_slice().iter().any(|&w| w > 0.0));
        if !any_positive {
            return Err(PerceptionError::InvalidWeights(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Every head score for one placement plus their weighted combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub global_e: f64,
    pub h_grid: Grid,
    pub v_grid: Grid,
    pub q_grid: Grid,
    pub aggregate: f64,
}

fn checked(head: &'static str, value: f64) -> Result<f64, PerceptionError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(PerceptionError::ScoreOutOfRange { head, value });
    }
    Ok(value)
}

/// Query the model for every adjacent pair and every 2x2 window of the
/// current placement, plus the global head, and combine them under the
/// given weights.
pub fn aggregate_evidence(
    state: &Permutation,
    spec: &PuzzleSpec,
    model: &dyn PerceptionModel,
    weights: &EvidenceWeights,
) -> Result<EvidenceReport, PerceptionError> {
    let dims = spec.dims();
    let mdims = model.dims();
    if mdims != dims {
        return Err(PerceptionError::DimensionMismatch {
            model_rows: mdims.rows,
            model_cols: mdims.cols,
            rows: dims.rows,
            cols: dims.cols,
        });
    }
    weights.validate(dims)?;

    let frag = |r: usize, c: usize| state.fragment_at(dims.pos(r, c));
    let mut h_grid = Grid::filled(dims.rows, dims.cols - 1, 0.0);
    for r in 0..dims.rows {
        for c in 0..dims.cols - 1 {
            h_grid.set(
                r,
                c,
                checked("horizontal", model.score_h(frag(r, c), frag(r, c + 1)))?,
            );
        }
    }
    let mut v_grid = Grid::filled(dims.rows - 1, dims.cols, 0.0);
    for r in 0..dims.rows - 1 {
        for c in 0..dims.cols {
            v_grid.set(
                r,
                c,
                checked("vertical", model.score_v(frag(r, c), frag(r + 1, c)))?,
            );
        }
    }
    let mut q_grid = Grid::filled(dims.rows - 1, dims.cols - 1, 0.0);
    for r in 0..dims.rows - 1 {
        for c in 0..dims.cols - 1 {
            let block = [
                frag(r, c),
                frag(r, c + 1),
                frag(r + 1, c),
                frag(r + 1, c + 1),
            ];
            q_grid.set(r, c, checked("quad", model.score_q(block))?);
        }
    }
    let global_e = checked("global", model.score_global(state))?;

    let weighted_sum = |scores: &Grid, lambda: &Grid| -> f64 {
        scores
            .as_slice()
            .iter()
            .zip(lambda.as_slice())
            .map(|(s, w)| s * w)
            .sum()
    };
    let aggregate = weights.lambda_g * global_e
        + weighted_sum(&h_grid, &weights.lambda_h)
        + weighted_sum(&v_grid, &weights.lambda_v)
        + weighted_sum(&q_grid, &weights.lambda_q);

    Ok(EvidenceReport {
        global_e,
        h_grid,
        v_grid,
        q_grid,
        aggregate,
    })
}

/// Length of the flattened feature vector for a board.
pub fn feature_len(dims: BoardDims) -> usize {
    1 + dims.rows * (dims.cols - 1)
        + (dims.rows - 1) * dims.cols
        + (dims.rows - 1) * (dims.cols - 1)
}

/// Deterministic flattening of a report:
/// `[global, h row-major, v row-major, q row-major]`.
pub fn state_features(report: &EvidenceReport) -> Vec<f64> {
    let mut out = Vec::with_capacity(
        1 + report.h_grid.as_slice().len()
            + report.v_grid.as_slice().len()
            + report.q_grid.as_slice().len(),
    );
    out.push(report.global_e);
    out.extend_from_slice(report.h_grid.as_slice());
    out.extend_from_slice(report.v_grid.as_slice());
    out.extend_from_slice(report.q_grid.as_slice());
    out
}
