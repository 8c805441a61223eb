//! Ground-truth oracle with a configurable corruption channel.
//!
//! Head answers are the ground-truth indicators, each independently
//! flipped with probability `corruption`. The flip is a deterministic
//! function of (query, seed), never fresh randomness, so repeated queries
//! are always consistent — search over a corrupted oracle sees a fixed
//! noisy landscape rather than chasing noise.

use crate::perception::{PerceptionError, PerceptionModel};
use crate::puzzle::{BoardDims, Permutation, PuzzleSpec};

const TAG_H: u64 = 0x68;
const TAG_V: u64 = 0x76;
const TAG_Q: u64 = 0x71;
const TAG_G: u64 = 0x67;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(seed ^ 0xA076_1D64_78BD_642F);
    for &p in parts {
        state = splitmix64(state ^ p);
    }
    state
}

#[derive(Debug, Clone)]
pub struct OracleModel {
    dims: BoardDims,
    corruption: f64,
    seed: u64,
}

impl OracleModel {
    pub fn new(dims: BoardDims, corruption: f64, seed: u64) -> Result<Self, PerceptionError> {
        if !(0.0..0.5).contains(&corruption) {
            return Err(PerceptionError::InvalidCorruption(corruption));
        }
        Ok(Self {
            dims,
            corruption,
            seed,
        })
    }

    pub fn for_spec(
        spec: &PuzzleSpec,
        corruption: f64,
        seed: u64,
    ) -> Result<Self, PerceptionError> {
        Self::new(spec.dims(), corruption, seed)
    }

    pub fn corruption(&self) -> f64 {
        self.corruption
    }

    fn corrupt(&self, truth: bool, query: u64) -> f64 {
        let flip = if self.corruption > 0.0 {
            let u = mix(self.seed, &[query]) as f64 / u64::MAX as f64;
            u < self.corruption
        } else {
            false
        };
        if truth != flip {
            1.0
        } else {
            0.0
        }
    }
}

impl PerceptionModel for OracleModel {
    fn dims(&self) -> BoardDims {
        self.dims
    }

    fn score_h(&self, left: usize, right: usize) -> f64 {
        let cols = self.dims.cols;
        let truth = right == left + 1 && left % cols != cols - 1;
        self.corrupt(truth, mix(TAG_H, &[left as u64, right as u64]))
    }

    fn score_v(&self, top: usize, bottom: usize) -> f64 {
        let truth = bottom == top + self.dims.cols;
        self.corrupt(truth, mix(TAG_V, &[top as u64, bottom as u64]))
    }

    fn score_q(&self, block: [usize; 4]) -> f64 {
        let cols = self.dims.cols;
        let [tl, tr, bl, br] = block;
        let (r, c) = self.dims.rc(tl);
        let truth = r + 1 < self.dims.rows
            && c + 1 < cols
            && tr == tl + 1
            && bl == tl + cols
            && br == tl + cols + 1;
        self.corrupt(
            truth,
            mix(TAG_Q, &[tl as u64, tr as u64, bl as u64, br as u64]),
        )
    }

    fn score_global(&self, placement: &Permutation) -> f64 {
        let truth = placement.is_identity();
        let parts: Vec<u64> = placement.as_slice().iter().map(|&f| f as u64).collect();
        self.corrupt(truth, mix(TAG_G, &parts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_indicators() {
        let dims = BoardDims::new(5, 5);
        let model = OracleModel::new(dims, 0.0, 0).unwrap();
        assert_eq!(model.score_h(0, 1), 1.0);
        assert_eq!(model.score_h(1, 0), 0.0);
        assert_eq!(model.score_h(4, 5), 0.0); // row wrap is not a neighbor
        assert_eq!(model.score_v(0, 5), 1.0);
        assert_eq!(model.score_v(0, 6), 0.0);
        assert_eq!(model.score_q([0, 1, 5, 6]), 1.0);
        assert_eq!(model.score_q([1, 0, 5, 6]), 0.0);
        assert_eq!(model.score_q([4, 5, 9, 10]), 0.0); // anchor in last column
        assert_eq!(model.score_global(&Permutation::identity(25)), 1.0);
        let shuffled = Permutation::from_vec(vec![
            1, 0, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23,
            24,
        ])
        .unwrap();
        assert_eq!(model.score_global(&shuffled), 0.0);
    }

    #[test]
    fn corruption_rate_is_calibrated() {
        // 10,000 distinct true-neighbor queries on a 100x101 board.
        let dims = BoardDims::new(100, 101);
        let model = OracleModel::new(dims, 0.1, 42).unwrap();
        let mut flips = 0u32;
        let mut total = 0u32;
        for r in 0..100 {
            for c in 0..100 {
                let left = r * 101 + c;
                if model.score_h(left, left + 1) == 0.0 {
                    flips += 1;
                }
                total += 1;
            }
        }
        assert_eq!(total, 10_000);
        let rate = flips as f64 / total as f64;
        assert!((rate - 0.1).abs() <= 0.01, "flip rate {rate}");
    }

    #[test]
    fn corrupted_queries_are_repeatable() {
        let dims = BoardDims::new(4, 4);
        let model = OracleModel::new(dims, 0.3, 7).unwrap();
        for left in 0..16 {
            for right in 0..16 {
                assert_eq!(model.score_h(left, right), model.score_h(left, right));
                assert_eq!(model.score_v(left, right), model.score_v(left, right));
            }
        }
        // Different seeds give a different noise pattern somewhere.
        let other = OracleModel::new(dims, 0.3, 8).unwrap();
        let differs = (0..16)
            .flat_map(|l| (0..16).map(move |r| (l, r)))
            .any(|(l, r)| model.score_h(l, r) != other.score_h(l, r));
        assert!(differs);
    }

    #[test]
    fn corruption_range_is_enforced() {
        let dims = BoardDims::new(2, 2);
        assert!(OracleModel::new(dims, 0.5, 0).is_err());
        assert!(OracleModel::new(dims, -0.0001, 0).is_err());
        assert!(OracleModel::new(dims, 0.49, 0).is_ok());
    }
}
