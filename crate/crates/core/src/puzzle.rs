//! Deterministic puzzle environment: permutation state, swap actions,
//! reward, and evaluation metrics.
//!
//! The ground truth is always the identity permutation: fragment `i`
//! belongs at board position `i` (row-major). Shuffled instances carry
//! their own placement, so "perfectly reassembled" is a plain identity
//! check.

use image::RgbImage;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PuzzleError {
    #[error("position {pos} is off a {rows}x{cols} board")]
    PositionOffBoard {
        pos: usize,
        rows: usize,
        cols: usize,
    },
    #[error("action positions must be pairwise distinct")]
    DuplicatePosition,
    #[error("position {pos} is not a valid 2x2 anchor on a {rows}x{cols} board")]
    InvalidAnchor {
        pos: usize,
        rows: usize,
        cols: usize,
    },
    #[error("2x2 blocks anchored at {a} and {b} overlap")]
    OverlappingBlocks { a: usize, b: usize },
    #[error("placement of length {len} is not a bijection")]
    NotBijection { len: usize },
    #[error("permutation has {perm} entries but the board has {cells} cells")]
    LengthMismatch { perm: usize, cells: usize },
    #[error("invalid puzzle spec: {0}")]
    InvalidSpec(String),
    #[error("invalid reward params: {0}")]
    InvalidParams(String),
}

/// Board geometry handle, cheap to copy around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardDims {
    pub rows: usize,
    pub cols: usize,
}

impl BoardDims {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    /// Total number of board cells.
    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn pos(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn rc(&self, pos: usize) -> (usize, usize) {
        (pos / self.cols, pos % self.cols)
    }

    fn check_pos(&self, pos: usize) -> Result<(), PuzzleError> {
        if pos >= self.cells() {
            return Err(PuzzleError::PositionOffBoard {
                pos,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    /// True if `pos` can anchor a 2x2 block (top-left corner on the board,
    /// block fully inside it).
    pub fn is_anchor(&self, pos: usize) -> bool {
        let (r, c) = self.rc(pos);
        pos < self.cells() && r + 1 < self.rows && c + 1 < self.cols
    }

    /// All valid 2x2 anchor positions.
    pub fn anchors(&self) -> Vec<usize> {
        (0..self.cells()).filter(|&p| self.is_anchor(p)).collect()
    }

    /// Whether the 2x2 blocks at anchors `a` and `b` share no cell.
    pub fn blocks_disjoint(&self, a: usize, b: usize) -> bool {
        let (ra, ca) = self.rc(a);
        let (rb, cb) = self.rc(b);
        ra.abs_diff(rb) >= 2 || ca.abs_diff(cb) >= 2
    }

    /// Anchors that have at least one disjoint partner block.
    pub fn pairable_anchors(&self) -> Vec<usize> {
        let anchors = self.anchors();
        anchors
            .iter()
            .copied()
            .filter(|&a| anchors.iter().any(|&b| self.blocks_disjoint(a, b)))
            .collect()
    }

    /// True when the board admits at least one puzzlet swap.
    pub fn puzzlet_swap_available(&self) -> bool {
        !self.pairable_anchors().is_empty()
    }

    fn block_cells(&self, anchor: usize) -> [usize; 4] {
        [
            anchor,
            anchor + 1,
            anchor + self.cols,
            anchor + self.cols + 1,
        ]
    }
}

/// Current placement: `placement[p]` is the fragment sitting at board
/// position `p` (row-major). Always a bijection on `0..len`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    placement: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            placement: (0..n).collect(),
        }
    }

    pub fn from_vec(placement: Vec<usize>) -> Result<Self, PuzzleError> {
        let n = placement.len();
        let mut seen = vec![false; n];
        for &f in &placement {
            if f >= n || seen[f] {
                return Err(PuzzleError::NotBijection { len: n });
            }
            seen[f] = true;
        }
        Ok(Self { placement })
    }

    /// Uniformly random permutation.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut placement: Vec<usize> = (0..n).collect();
        placement.shuffle(rng);
        Self { placement }
    }

    pub fn len(&self) -> usize {
        self.placement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placement.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.placement.iter().enumerate().all(|(p, &f)| p == f)
    }

    /// Fragment currently at board position `pos`.
    pub fn fragment_at(&self, pos: usize) -> usize {
        self.placement[pos]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.placement
    }
}

impl Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.placement.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(deserializer)?;
        Permutation::from_vec(v).map_err(serde::de::Error::custom)
    }
}

/// Orientation of a 3-cycle: `Forward` moves the content of the first
/// listed position to the second, the second to the third, and the third
/// back to the first. `Backward` is the inverse cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleDir {
    Forward,
    Backward,
}

/// A swap action over board positions.
///
/// Variant order matters: the derived `Ord` is the canonical action
/// ordering used for deterministic tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    /// Exchange the fragments at two positions.
    Swap2 { a: usize, b: usize },
    /// Cycle the fragments at three positions.
    Swap3 {
        a: usize,
        b: usize,
        c: usize,
        dir: CycleDir,
    },
    /// Exchange two disjoint 2x2 blocks, cell by cell. Positions are the
    /// top-left anchors.
    SwapPuzzlet { a: usize, b: usize },
}

/// Action kind tag, used for policy heads and mix statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Swap2,
    Swap3,
    SwapPuzzlet,
}

impl ActionKind {
    pub const ALL: [ActionKind; 3] = [
        ActionKind::Swap2,
        ActionKind::Swap3,
        ActionKind::SwapPuzzlet,
    ];

    pub fn index(self) -> usize {
        match self {
            ActionKind::Swap2 => 0,
            ActionKind::Swap3 => 1,
            ActionKind::SwapPuzzlet => 2,
        }
    }
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Swap2 { .. } => ActionKind::Swap2,
            Action::Swap3 { .. } => ActionKind::Swap3,
            Action::SwapPuzzlet { .. } => ActionKind::SwapPuzzlet,
        }
    }

    /// Positions referenced by the action, in slot order.
    pub fn positions(&self) -> Vec<usize> {
        match *self {
            Action::Swap2 { a, b } => vec![a, b],
            Action::Swap3 { a, b, c, .. } => vec![a, b, c],
            Action::SwapPuzzlet { a, b } => vec![a, b],
        }
    }

    /// Canonical encoding: `Swap2`/`SwapPuzzlet` with sorted positions,
    /// `Swap3` rotated so the smallest position comes first and rewritten
    /// as a forward cycle. Canonical forms are what the policy scores and
    /// what tie-breaking compares.
    pub fn canonical(self) -> Action {
        match self {
            Action::Swap2 { a, b } => Action::Swap2 {
                a: a.min(b),
                b: a.max(b),
            },
            Action::SwapPuzzlet { a, b } => Action::SwapPuzzlet {
                a: a.min(b),
                b: a.max(b),
            },
            Action::Swap3 { a, b, c, dir } => {
                // Normalize to a forward cycle first: (a,b,c) backward is the
                // same mapping as (a,c,b) forward.
                let (a, b, c) = match dir {
                    CycleDir::Forward => (a, b, c),
                    CycleDir::Backward => (a, c, b),
                };
                // Rotate the smallest position to the front; rotation does not
                // change the cycle.
                let (a, b, c) = if a < b && a < c {
                    (a, b, c)
                } else if b < a && b < c {
                    (b, c, a)
                } else {
                    (c, a, b)
                };
                Action::Swap3 {
                    a,
                    b,
                    c,
                    dir: CycleDir::Forward,
                }
            }
        }
    }

    /// Validate the action against a board (see the per-variant rules).
    pub fn validate(&self, dims: BoardDims) -> Result<(), PuzzleError> {
        match *self {
            Action::Swap2 { a, b } => {
                dims.check_pos(a)?;
                dims.check_pos(b)?;
                if a == b {
                    return Err(PuzzleError::DuplicatePosition);
                }
            }
            Action::Swap3 { a, b, c, .. } => {
                dims.check_pos(a)?;
                dims.check_pos(b)?;
                dims.check_pos(c)?;
                if a == b || b == c || a == c {
                    return Err(PuzzleError::DuplicatePosition);
                }
            }
            Action::SwapPuzzlet { a, b } => {
                for p in [a, b] {
                    dims.check_pos(p)?;
                    if !dims.is_anchor(p) {
                        return Err(PuzzleError::InvalidAnchor {
                            pos: p,
                            rows: dims.rows,
                            cols: dims.cols,
                        });
                    }
                }
                if a == b {
                    return Err(PuzzleError::DuplicatePosition);
                }
                if !dims.blocks_disjoint(a, b) {
                    return Err(PuzzleError::OverlappingBlocks { a, b });
                }
            }
        }
        Ok(())
    }
}

/// Apply a validated action, returning the successor permutation.
pub fn apply_action(
    state: &Permutation,
    action: &Action,
    dims: BoardDims,
) -> Result<Permutation, PuzzleError> {
    if state.len() != dims.cells() {
        return Err(PuzzleError::LengthMismatch {
            perm: state.len(),
            cells: dims.cells(),
        });
    }
    action.validate(dims)?;
    let mut placement = state.placement.clone();
    match *action {
        Action::Swap2 { a, b } => placement.swap(a, b),
        Action::Swap3 { a, b, c, dir } => match dir {
            // Forward: content of a -> b -> c -> a.
            CycleDir::Forward => {
                let tmp = placement[c];
                placement[c] = placement[b];
                placement[b] = placement[a];
                placement[a] = tmp;
            }
            CycleDir::Backward => {
                let tmp = placement[a];
                placement[a] = placement[b];
                placement[b] = placement[c];
                placement[c] = tmp;
            }
        },
        Action::SwapPuzzlet { a, b } => {
            let ca = dims.block_cells(a);
            let cb = dims.block_cells(b);
            for i in 0..4 {
                placement.swap(ca[i], cb[i]);
            }
        }
    }
    Ok(Permutation { placement })
}

/// Reassembly quality of a placement against the identity ground truth.
///
/// Fractions are normalized to `[0,1]`; the raw counts they were computed
/// from are exposed alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub perfect: bool,
    pub absolute_frac: f64,
    pub horizontal_frac: f64,
    pub vertical_frac: f64,
    /// Pair-count-weighted mean of the horizontal and vertical fractions.
    pub neighbor_frac: f64,
    pub absolute_count: usize,
    pub horizontal_count: usize,
    pub vertical_count: usize,
    pub horizontal_total: usize,
    pub vertical_total: usize,
}

/// Score a placement: absolute positions, correct horizontal/vertical
/// adjacencies (in order), and the perfect flag.
pub fn metrics(state: &Permutation, dims: BoardDims) -> MetricsReport {
    debug_assert_eq!(state.len(), dims.cells());
    let n = dims.cells();
    let cols = dims.cols;
    let absolute_count = (0..n).filter(|&p| state.fragment_at(p) == p).count();

    // A horizontal board pair (p, p+1) is correct when its fragments are
    // horizontal neighbors in the ground truth, left before right.
    let mut horizontal_count = 0;
    for r in 0..dims.rows {
        for c in 0..cols - 1 {
            let left = state.fragment_at(dims.pos(r, c));
            let right = state.fragment_at(dims.pos(r, c + 1));
            if right == left + 1 && left % cols != cols - 1 {
                horizontal_count += 1;
            }
        }
    }
    let mut vertical_count = 0;
    for r in 0..dims.rows - 1 {
        for c in 0..cols {
            let top = state.fragment_at(dims.pos(r, c));
            let bottom = state.fragment_at(dims.pos(r + 1, c));
            if bottom == top + cols {
                vertical_count += 1;
            }
        }
    }

    let horizontal_total = dims.rows * (cols - 1);
    let vertical_total = (dims.rows - 1) * cols;
    MetricsReport {
        perfect: state.is_identity(),
        absolute_frac: absolute_count as f64 / n as f64,
        horizontal_frac: horizontal_count as f64 / horizontal_total as f64,
        vertical_frac: vertical_count as f64 / vertical_total as f64,
        neighbor_frac: (horizontal_count + vertical_count) as f64
            / (horizontal_total + vertical_total) as f64,
        absolute_count,
        horizontal_count,
        vertical_count,
        horizontal_total,
        vertical_total,
    }
}

/// Reward weights: `alpha` trades the absolute term against the neighbor
/// term, `step_penalty` is charged on every non-terminal step, and
/// `perfect_bonus` pays out once on perfect reassembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardParams {
    pub alpha: f64,
    pub step_penalty: f64,
    pub perfect_bonus: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            step_penalty: 1.0,
            perfect_bonus: 1000.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), PuzzleError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(PuzzleError::InvalidParams(format!(
                "alpha must be in [0,1], got {}",
                self.alpha
            )));
        }
        if self.step_penalty < 0.0 {
            return Err(PuzzleError::InvalidParams(format!(
                "step_penalty must be nonnegative, got {}",
                self.step_penalty
            )));
        }
        if self.perfect_bonus <= 0.0 {
            return Err(PuzzleError::InvalidParams(format!(
                "perfect_bonus must be positive, got {}",
                self.perfect_bonus
            )));
        }
        Ok(())
    }
}

/// Reward of the transition that produced `next`. The absolute and
/// neighbor terms are fractions of `next`, the perfect bonus pays on the
/// identity, and the step penalty is charged whenever `next` is not the
/// identity.
pub fn reward(
    _prev: &Permutation,
    next: &Permutation,
    dims: BoardDims,
    params: &RewardParams,
) -> f64 {
    let m = metrics(next, dims);
    let terminal = m.perfect;
    let bonus = if terminal { params.perfect_bonus } else { 0.0 };
    let penalty = if terminal { 0.0 } else { -params.step_penalty };
    params.alpha * m.absolute_frac + (1.0 - params.alpha) * m.neighbor_frac + bonus + penalty
}

/// Sizes of the three action families on a board.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpaceCounts {
    pub swap2: u64,
    pub swap3: u64,
    pub swap_puzzlet: u64,
}

impl ActionSpaceCounts {
    pub fn total(&self) -> u64 {
        self.swap2 + self.swap3 + self.swap_puzzlet
    }
}

/// Count the action space: `C(n,2)` transpositions, `2*C(n,3)` directed
/// 3-cycles, and the unordered disjoint 2x2 anchor pairs.
pub fn enumerate_action_space(dims: BoardDims) -> ActionSpaceCounts {
    let n = dims.cells() as u64;
    let swap2 = n * (n - 1) / 2;
    let swap3 = if n >= 3 { n * (n - 1) * (n - 2) / 3 } else { 0 };
    let anchors = dims.anchors();
    let mut swap_puzzlet = 0u64;
    for (i, &a) in anchors.iter().enumerate() {
        for &b in &anchors[i + 1..] {
            if dims.blocks_disjoint(a, b) {
                swap_puzzlet += 1;
            }
        }
    }
    ActionSpaceCounts {
        swap2,
        swap3,
        swap_puzzlet,
    }
}

/// Enumerate every valid action in canonical form. Intended for small
/// boards (exhaustive search and tests); the count grows cubically.
pub fn enumerate_all_actions(dims: BoardDims) -> Vec<Action> {
    let n = dims.cells();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            out.push(Action::Swap2 { a, b });
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                // Both distinct 3-cycles over {a,b,c}, smallest first.
                out.push(Action::Swap3 {
                    a,
                    b,
                    c,
                    dir: CycleDir::Forward,
                });
                out.push(Action::Swap3 {
                    a,
                    b: c,
                    c: b,
                    dir: CycleDir::Forward,
                });
            }
        }
    }
    let anchors = dims.anchors();
    for (i, &a) in anchors.iter().enumerate() {
        for &b in &anchors[i + 1..] {
            if dims.blocks_disjoint(a, b) {
                out.push(Action::SwapPuzzlet { a, b });
            }
        }
    }
    out
}

/// Selection-sort decomposition: a sequence of at most `n-1` transpositions
/// that takes `state` to the identity.
pub fn swap2_solving_sequence(state: &Permutation) -> Vec<Action> {
    let mut placement = state.placement.clone();
    let mut seq = Vec::new();
    for p in 0..placement.len() {
        if placement[p] != p {
            // Fragment p currently sits at some later position; bring it home.
            let q = (p + 1..placement.len())
                .find(|&q| placement[q] == p)
                .expect("bijection");
            placement.swap(p, q);
            seq.push(Action::Swap2 { a: p, b: q });
        }
    }
    seq
}

/// Full puzzle description: geometry plus the fragment rasters, row-major
/// by ground-truth position.
#[derive(Debug, Clone)]
pub struct PuzzleSpec {
    rows: usize,
    cols: usize,
    fragment_px: u32,
    gap_px: u32,
    fragments: Vec<RgbImage>,
}

impl PuzzleSpec {
    pub fn new(
        rows: usize,
        cols: usize,
        fragment_px: u32,
        gap_px: u32,
        fragments: Vec<RgbImage>,
    ) -> Result<Self, PuzzleError> {
        if rows < 2 || cols < 2 {
            return Err(PuzzleError::InvalidSpec(format!(
                "board must be at least 2x2, got {rows}x{cols}"
            )));
        }
        if fragment_px < 8 {
            return Err(PuzzleError::InvalidSpec(format!(
                "fragments must be at least 8px, got {fragment_px}"
            )));
        }
        if fragments.len() != rows * cols {
            return Err(PuzzleError::InvalidSpec(format!(
                "expected {} fragments, got {}",
                rows * cols,
                fragments.len()
            )));
        }
        for (i, f) in fragments.iter().enumerate() {
            if f.width() != fragment_px || f.height() != fragment_px {
                return Err(PuzzleError::InvalidSpec(format!(
                    "fragment {i} is {}x{}, expected {fragment_px}x{fragment_px}",
                    f.width(),
                    f.height()
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            fragment_px,
            gap_px,
            fragments,
        })
    }

    /// Spec with identical solid-color fragments. Pixel content is
    /// irrelevant for oracle-backed workloads; this keeps them cheap.
    pub fn solid(
        rows: usize,
        cols: usize,
        fragment_px: u32,
        gap_px: u32,
        rgb: [u8; 3],
    ) -> Result<Self, PuzzleError> {
        let tile = RgbImage::from_pixel(fragment_px, fragment_px, image::Rgb(rgb));
        Self::new(rows, cols, fragment_px, gap_px, vec![tile; rows * cols])
    }

    pub fn dims(&self) -> BoardDims {
        BoardDims::new(self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn fragment_px(&self) -> u32 {
        self.fragment_px
    }

    pub fn gap_px(&self) -> u32 {
        self.gap_px
    }

    /// Fragment raster by ground-truth index.
    pub fn fragment(&self, index: usize) -> &RgbImage {
        &self.fragments[index]
    }

    pub fn fragments(&self) -> &[RgbImage] {
        &self.fragments
    }

    /// Same fragments and board, different gap metadata.
    pub fn with_gap_px(mut self, gap_px: u32) -> Self {
        self.gap_px = gap_px;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn perm(v: &[usize]) -> Permutation {
        Permutation::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn swap2_on_2x2_matches_transposition() {
        let dims = BoardDims::new(2, 2);
        let s = Permutation::identity(4);
        let next = apply_action(&s, &Action::Swap2 { a: 0, b: 3 }, dims).unwrap();
        assert_eq!(next.as_slice(), &[3, 1, 2, 0]);
        // Input untouched.
        assert!(s.is_identity());
    }

    #[test]
    fn swap3_forward_cycle_on_3x3() {
        let dims = BoardDims::new(3, 3);
        let s = Permutation::identity(9);
        let next = apply_action(
            &s,
            &Action::Swap3 {
                a: 0,
                b: 1,
                c: 2,
                dir: CycleDir::Forward,
            },
            dims,
        )
        .unwrap();
        assert_eq!(next.as_slice(), &[2, 0, 1, 3, 4, 5, 6, 7, 8]);
    }

    #[test]
    fn swap_puzzlet_exchanges_blocks_cellwise() {
        let dims = BoardDims::new(2, 4);
        let s = Permutation::identity(8);
        let next = apply_action(&s, &Action::SwapPuzzlet { a: 0, b: 2 }, dims).unwrap();
        assert_eq!(next.as_slice(), &[2, 3, 0, 1, 6, 7, 4, 5]);
    }

    #[test]
    fn invalid_actions_are_rejected() {
        let dims = BoardDims::new(3, 3);
        let s = Permutation::identity(9);
        assert!(matches!(
            apply_action(&s, &Action::Swap2 { a: 0, b: 9 }, dims),
            Err(PuzzleError::PositionOffBoard { pos: 9, .. })
        ));
        assert_eq!(
            apply_action(&s, &Action::Swap2 { a: 2, b: 2 }, dims),
            Err(PuzzleError::DuplicatePosition)
        );
        assert!(matches!(
            apply_action(&s, &Action::SwapPuzzlet { a: 2, b: 4 }, dims),
            Err(PuzzleError::InvalidAnchor { pos: 2, .. })
        ));
        // 3x3 anchors all pairwise overlap.
        assert_eq!(
            apply_action(&s, &Action::SwapPuzzlet { a: 0, b: 4 }, dims),
            Err(PuzzleError::OverlappingBlocks { a: 0, b: 4 })
        );
        assert!(matches!(
            apply_action(
                &s,
                &Action::Swap3 {
                    a: 0,
                    b: 0,
                    c: 1,
                    dir: CycleDir::Forward
                },
                dims
            ),
            Err(PuzzleError::DuplicatePosition)
        ));
    }

    #[test]
    fn swap3_canonicalization_identifies_equal_cycles() {
        // (1,5,3) backward is the same mapping as (1,3,5) forward.
        let a = Action::Swap3 {
            a: 1,
            b: 5,
            c: 3,
            dir: CycleDir::Backward,
        };
        let b = Action::Swap3 {
            a: 5,
            b: 1,
            c: 3,
            dir: CycleDir::Forward,
        };
        assert_eq!(a.canonical(), b.canonical());
        let dims = BoardDims::new(3, 3);
        let s = Permutation::random(9, &mut ChaCha12Rng::seed_from_u64(3));
        assert_eq!(
            apply_action(&s, &a, dims).unwrap(),
            apply_action(&s, &a.canonical(), dims).unwrap()
        );
    }

    #[test]
    fn metrics_identity_is_perfect() {
        let m = metrics(&Permutation::identity(25), BoardDims::new(5, 5));
        assert!(m.perfect);
        assert_eq!(m.absolute_frac, 1.0);
        assert_eq!(m.horizontal_frac, 1.0);
        assert_eq!(m.vertical_frac, 1.0);
        assert_eq!(m.neighbor_frac, 1.0);
    }

    /// Independent pair scan used as the metrics oracle: walks every pair of
    /// board cells by coordinates instead of index arithmetic.
    fn brute_force_metrics(state: &Permutation, dims: BoardDims) -> (usize, usize, usize) {
        let mut abs = 0;
        let mut hor = 0;
        let mut ver = 0;
        for r in 0..dims.rows {
            for c in 0..dims.cols {
                let f = state.fragment_at(dims.pos(r, c));
                let (fr, fc) = dims.rc(f);
                if (fr, fc) == (r, c) {
                    abs += 1;
                }
                if c + 1 < dims.cols {
                    let g = state.fragment_at(dims.pos(r, c + 1));
                    let (gr, gc) = dims.rc(g);
                    if gr == fr && gc == fc + 1 {
                        hor += 1;
                    }
                }
                if r + 1 < dims.rows {
                    let g = state.fragment_at(dims.pos(r + 1, c));
                    let (gr, gc) = dims.rc(g);
                    if gc == fc && gr == fr + 1 {
                        ver += 1;
                    }
                }
            }
        }
        (abs, hor, ver)
    }

    #[test]
    fn metrics_five_by_five_two_swapped() {
        let dims = BoardDims::new(5, 5);
        let mut v: Vec<usize> = (0..25).collect();
        v.swap(0, 1);
        let s = perm(&v);
        let m = metrics(&s, dims);
        assert_eq!(m.absolute_count, 23);
        assert!((m.absolute_frac - 23.0 / 25.0).abs() < 1e-15);
        let (abs, hor, ver) = brute_force_metrics(&s, dims);
        assert_eq!(abs, 23);
        assert_eq!(m.horizontal_count, hor);
        assert_eq!(m.vertical_count, ver);
        assert!(!m.perfect);
    }

    #[test]
    fn metrics_full_reversal_2x2() {
        let dims = BoardDims::new(2, 2);
        let s = perm(&[3, 2, 1, 0]);
        let m = metrics(&s, dims);
        assert_eq!(m.absolute_frac, 0.0);
        let (abs, hor, ver) = brute_force_metrics(&s, dims);
        assert_eq!(abs, 0);
        assert_eq!(m.horizontal_count, hor);
        assert_eq!(m.vertical_count, ver);
    }

    #[test]
    fn metrics_neighbor_is_pair_weighted_mean() {
        let dims = BoardDims::new(3, 4);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..100 {
            let s = Permutation::random(12, &mut rng);
            let m = metrics(&s, dims);
            let expected = (m.horizontal_frac * m.horizontal_total as f64
                + m.vertical_frac * m.vertical_total as f64)
                / (m.horizontal_total + m.vertical_total) as f64;
            assert!((m.neighbor_frac - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn reward_perfect_placement() {
        let dims = BoardDims::new(2, 2);
        let params = RewardParams::default();
        let prev = perm(&[1, 0, 2, 3]);
        let next = Permutation::identity(4);
        assert_eq!(reward(&prev, &next, dims, &params), 1001.0);
    }

    #[test]
    fn reward_zero_signal_derangement() {
        let dims = BoardDims::new(2, 2);
        let params = RewardParams::default();
        let next = perm(&[3, 2, 1, 0]);
        let prev = Permutation::identity(4);
        assert_eq!(reward(&prev, &next, dims, &params), -1.0);
    }

    #[test]
    fn reward_composite_five_by_five() {
        let dims = BoardDims::new(5, 5);
        let params = RewardParams::default();
        let mut v: Vec<usize> = (0..25).collect();
        v.swap(0, 1);
        let next = perm(&v);
        let m = metrics(&next, dims);
        let expected = 0.8 * (23.0 / 25.0) + 0.2 * m.neighbor_frac - 1.0;
        let got = reward(&Permutation::identity(25), &next, dims, &params);
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn reward_bounds_and_perfect_gap() {
        let dims = BoardDims::new(3, 3);
        let params = RewardParams::default();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..500 {
            let s = Permutation::random(9, &mut rng);
            let r = reward(&s, &s, dims, &params);
            assert!(r >= -params.step_penalty - 1e-12);
            assert!(r <= 1.0 + params.perfect_bonus + 1e-12);
            if s.is_identity() {
                assert_eq!(r, 1.0 + params.perfect_bonus);
            } else {
                assert!(r < 1.0);
            }
        }
    }

    #[test]
    fn action_space_counts_fixtures() {
        let c22 = enumerate_action_space(BoardDims::new(2, 2));
        assert_eq!((c22.swap2, c22.swap3, c22.swap_puzzlet), (6, 8, 0));
        let c33 = enumerate_action_space(BoardDims::new(3, 3));
        assert_eq!((c33.swap2, c33.swap3), (36, 168));
        assert_eq!(c33.swap_puzzlet, 0);
        let c55 = enumerate_action_space(BoardDims::new(5, 5));
        assert_eq!(c55.swap2, 300);
    }

    #[test]
    fn action_space_counts_match_enumeration() {
        for (rows, cols) in [(2, 2), (2, 3), (3, 3), (2, 4), (4, 4), (3, 5)] {
            let dims = BoardDims::new(rows, cols);
            let counts = enumerate_action_space(dims);
            let all = enumerate_all_actions(dims);
            // Every enumerated action is valid, canonical, and unique.
            let mut seen = std::collections::HashSet::new();
            for a in &all {
                a.validate(dims).unwrap();
                assert_eq!(*a, a.canonical());
                assert!(seen.insert(*a));
            }
            let swap2 = all.iter().filter(|a| a.kind() == ActionKind::Swap2).count() as u64;
            let swap3 = all.iter().filter(|a| a.kind() == ActionKind::Swap3).count() as u64;
            let puzzlet = all
                .iter()
                .filter(|a| a.kind() == ActionKind::SwapPuzzlet)
                .count() as u64;
            assert_eq!(
                (swap2, swap3, puzzlet),
                (counts.swap2, counts.swap3, counts.swap_puzzlet)
            );
        }
    }

    #[test]
    fn solving_sequence_reaches_identity_within_bound() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..200 {
            let dims = BoardDims::new(3, 4);
            let s = Permutation::random(12, &mut rng);
            let seq = swap2_solving_sequence(&s);
            assert!(seq.len() <= 11);
            let mut cur = s.clone();
            for a in &seq {
                cur = apply_action(&cur, a, dims).unwrap();
            }
            assert!(cur.is_identity());
        }
    }

    #[test]
    fn puzzle_spec_validation() {
        assert!(PuzzleSpec::solid(1, 5, 16, 2, [0, 0, 0]).is_err());
        assert!(PuzzleSpec::solid(2, 2, 4, 2, [0, 0, 0]).is_err());
        let spec = PuzzleSpec::solid(2, 2, 8, 2, [10, 20, 30]).unwrap();
        assert_eq!(spec.dims().cells(), 4);
        let mut frags = spec.fragments().to_vec();
        frags.pop();
        assert!(PuzzleSpec::new(2, 2, 8, 2, frags).is_err());
    }

    proptest! {
        #[test]
        fn apply_action_preserves_bijection(seed in 0u64..500) {
            let dims = BoardDims::new(3, 4);
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let s = Permutation::random(12, &mut rng);
            let all = enumerate_all_actions(dims);
            use rand::seq::IndexedRandom;
            let a = all.choose(&mut rng).unwrap();
            let next = apply_action(&s, a, dims).unwrap();
            prop_assert!(Permutation::from_vec(next.as_slice().to_vec()).is_ok());
            // No action is the identity mapping.
            prop_assert_ne!(next, s);
        }

        #[test]
        fn swap2_and_puzzlet_are_involutions(seed in 0u64..200) {
            let dims = BoardDims::new(4, 4);
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let s = Permutation::random(16, &mut rng);
            use rand::seq::IndexedRandom;
            let swaps: Vec<Action> = enumerate_all_actions(dims)
                .into_iter()
                .filter(|a| a.kind() != ActionKind::Swap3)
                .collect();
            let a = swaps.choose(&mut rng).unwrap();
            let twice = apply_action(&apply_action(&s, a, dims).unwrap(), a, dims).unwrap();
            prop_assert_eq!(twice, s);
        }

        #[test]
        fn swap3_forward_then_backward_is_identity(seed in 0u64..200) {
            let dims = BoardDims::new(3, 3);
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let s = Permutation::random(9, &mut rng);
            let fwd = Action::Swap3 { a: 1, b: 4, c: 7, dir: CycleDir::Forward };
            let bwd = Action::Swap3 { a: 1, b: 4, c: 7, dir: CycleDir::Backward };
            let back = apply_action(&apply_action(&s, &fwd, dims).unwrap(), &bwd, dims).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
