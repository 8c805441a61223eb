//! Learned-free perception from low-order color statistics.
//!
//! For every fragment edge we keep the per-channel mean of the strip
//! nearest the gap and the outward gradient (outer strip mean minus the
//! strip behind it). Two fragments look like neighbors when the facing
//! edge means agree and the intensity trend continues across the seam.
//! The statistics come from fragment interiors only, so the gap width
//! never enters the score.

use image::RgbImage;

use crate::perception::{PerceptionError, PerceptionModel};
use crate::puzzle::{BoardDims, Permutation, PuzzleSpec};

/// Distance-to-likelihood squashing scale, in 8-bit intensity units.
/// Calibrated so that typical same-image neighbor distances land well
/// above random-pair distances.
const SQUASH_SCALE: f64 = 20.0;

#[derive(Debug, Clone, Copy, Default)]
struct EdgeStats {
    mean: [f64; 3],
    grad: [f64; 3],
}

#[derive(Debug, Clone, Copy, Default)]
struct FragmentStats {
    left: EdgeStats,
    right: EdgeStats,
    top: EdgeStats,
    bottom: EdgeStats,
}

#[derive(Debug, Clone)]
pub struct PixelStatModel {
    dims: BoardDims,
    stats: Vec<FragmentStats>,
}

fn strip_mean(img: &RgbImage, x0: u32, y0: u32, w: u32, h: u32) -> [f64; 3] {
    let mut sum = [0.0f64; 3];
    for y in y0..y0 + h {
        for x in x0..x0 + w {
            let p = img.get_pixel(x, y);
            for (s, &v) in sum.iter_mut().zip(&p.0) {
                *s += v as f64;
            }
        }
    }
    let n = (w * h) as f64;
    [sum[0] / n, sum[1] / n, sum[2] / n]
}

fn edge_stats(outer: [f64; 3], inner: [f64; 3]) -> EdgeStats {
    EdgeStats {
        mean: outer,
        grad: [
            outer[0] - inner[0],
            outer[1] - inner[1],
            outer[2] - inner[2],
        ],
    }
}

fn fragment_stats(img: &RgbImage) -> FragmentStats {
    let px = img.width();
    let w = (px / 8).clamp(2, 4);
    let left = edge_stats(strip_mean(img, 0, 0, w, px), strip_mean(img, w, 0, w, px));
    let right = edge_stats(
        strip_mean(img, px - w, 0, w, px),
        strip_mean(img, px - 2 * w, 0, w, px),
    );
    let top = edge_stats(strip_mean(img, 0, 0, px, w), strip_mean(img, 0, w, px, w));
    let bottom = edge_stats(
        strip_mean(img, 0, px - w, px, w),
        strip_mean(img, 0, px - 2 * w, px, w),
    );
    FragmentStats {
        left,
        right,
        top,
        bottom,
    }
}

fn rms(d: [f64; 3]) -> f64 {
    ((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / 3.0).sqrt()
}

/// Seam score between two facing edges: mean agreement plus gradient
/// continuity (the outward trends should cancel across the seam).
fn seam_score(a: EdgeStats, b: EdgeStats) -> f64 {
    let dm = [
        b.mean[0] - a.mean[0],
        b.mean[1] - a.mean[1],
        b.mean[2] - a.mean[2],
    ];
    let dg = [
        a.grad[0] + b.grad[0],
        a.grad[1] + b.grad[1],
        a.grad[2] + b.grad[2],
    ];
    let dist = rms(dm) + 0.5 * rms(dg);
    (-dist / SQUASH_SCALE).exp()
}

impl PixelStatModel {
    pub fn new(spec: &PuzzleSpec) -> Result<Self, PerceptionError> {
        // fragment_px >= 8 is a spec invariant, which keeps both strips inside
        // the fragment.
        let stats = spec.fragments().iter().map(fragment_stats).collect();
        Ok(Self {
            dims: spec.dims(),
            stats,
        })
    }
}

impl PerceptionModel for PixelStatModel {
    fn dims(&self) -> BoardDims {
        self.dims
    }

    fn score_h(&self, left: usize, right: usize) -> f64 {
        seam_score(self.stats[left].right, self.stats[right].left)
    }

    fn score_v(&self, top: usize, bottom: usize) -> f64 {
        seam_score(self.stats[top].bottom, self.stats[bottom].top)
    }

    fn score_q(&self, block: [usize; 4]) -> f64 {
        let [tl, tr, bl, br] = block;
        (self.score_h(tl, tr) + self.score_h(bl, br) + self.score_v(tl, bl) + self.score_v(tr, br))
            / 4.0
    }

    fn score_global(&self, placement: &Permutation) -> f64 {
        let dims = self.dims;
        let frag = |r: usize, c: usize| placement.fragment_at(dims.pos(r, c));
        let mut sum = 0.0;
        let mut count = 0usize;
        for r in 0..dims.rows {
            for c in 0..dims.cols - 1 {
                sum += self.score_h(frag(r, c), frag(r, c + 1));
                count += 1;
            }
        }
        for r in 0..dims.rows - 1 {
            for c in 0..dims.cols {
                sum += self.score_v(frag(r, c), frag(r + 1, c));
                count += 1;
            }
        }
        sum / count as f64
    }
}
