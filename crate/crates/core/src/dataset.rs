//! Puzzle generation and the on-disk instance format.
//!
//! Slicing erodes the gap: the `gap_px` pixel bands between adjacent
//! fragments are discarded and appear in no fragment, so boundary matching
//! is impossible by construction. An instance directory holds a JSON
//! manifest plus one lossless PNG per fragment, named by ground-truth
//! index; per-fragment checksums make load failures attributable.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::puzzle::{Permutation, PuzzleError, PuzzleSpec};

/// Gap fill for rendered boards, mid-gray.
pub const GAP_FILL: Rgb<u8> = Rgb([128, 128, 128]);

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("image {width}x{height} too small for {rows}x{cols} fragments of {fragment_px}px with {gap_px}px gaps")]
    ImageTooSmall {
        width: u32,
        height: u32,
        rows: usize,
        cols: usize,
        fragment_px: u32,
        gap_px: u32,
    },
    #[error("fragment {index} failed its checksum")]
    ChecksumMismatch { index: usize },
    #[error("fragment file missing: {path}")]
    MissingFragment { path: PathBuf },
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error(transparent)]
    Puzzle(#[from] PuzzleError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Largest square fragment size that fits `rows x cols` pieces with
/// `gap_px` gaps into a `width x height` image: the floor rule; the
/// residue is center-cropped away.
pub fn fit_fragment_px(width: u32, height: u32, rows: usize, cols: usize, gap_px: u32) -> u32 {
    let fit = |side: u32, n: usize| -> u32 {
        let gaps = gap_px * (n as u32 - 1);
        if side <= gaps {
            0
        } else {
            (side - gaps) / n as u32
        }
    };
    fit(width, cols).min(fit(height, rows))
}

/// Pixel span needed by a slicing along one axis.
pub fn required_span(n: usize, fragment_px: u32, gap_px: u32) -> u32 {
    n as u32 * fragment_px + (n as u32 - 1) * gap_px
}

/// Cut an image into `rows x cols` gapped fragments. The needed span is
/// centered in the image (the residue is cropped symmetrically, floor on
/// the leading edge) and the gap bands are discarded.
pub fn slice(
    image: &RgbImage,
    rows: usize,
    cols: usize,
    fragment_px: u32,
    gap_px: u32,
) -> Result<PuzzleSpec, DatasetError> {
    let need_w = required_span(cols, fragment_px, gap_px);
    let need_h = required_span(rows, fragment_px, gap_px);
    if image.width() < need_w || image.height() < need_h {
        return Err(DatasetError::ImageTooSmall {
            width: image.width(),
            height: image.height(),
            rows,
            cols,
            fragment_px,
            gap_px,
        });
    }
    let off_x = (image.width() - need_w) / 2;
    let off_y = (image.height() - need_h) / 2;
    let mut fragments = Vec::with_capacity(rows * cols);
    for r in 0..rows as u32 {
        for c in 0..cols as u32 {
            let x0 = off_x + c * (fragment_px + gap_px);
            let y0 = off_y + r * (fragment_px + gap_px);
            fragments.push(
                image::imageops::crop_imm(image, x0, y0, fragment_px, fragment_px).to_image(),
            );
        }
    }
    Ok(PuzzleSpec::new(rows, cols, fragment_px, gap_px, fragments)?)
}

/// Uniformly random non-identity permutation from a seeded generator.
pub fn shuffle(spec: &PuzzleSpec, seed: u64) -> Permutation {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    loop {
        let p = Permutation::random(spec.dims().cells(), &mut rng);
        if !p.is_identity() {
            return p;
        }
    }
}

/// Render a placement as one raster with the gaps filled mid-gray.
pub fn render_placement(spec: &PuzzleSpec, placement: &Permutation) -> RgbImage {
    let px = spec.fragment_px();
    let gap = spec.gap_px();
    let width = required_span(spec.cols(), px, gap);
    let height = required_span(spec.rows(), px, gap);
    let mut canvas = RgbImage::from_pixel(width, height, GAP_FILL);
    for r in 0..spec.rows() as u32 {
        for c in 0..spec.cols() as u32 {
            let pos = r as usize * spec.cols() + c as usize;
            let fragment = spec.fragment(placement.fragment_at(pos));
            let x0 = c * (px + gap);
            let y0 = r * (px + gap);
            image::imageops::replace(&mut canvas, fragment, x0 as i64, y0 as i64);
        }
    }
    canvas
}

/// Smooth deterministic test image built from low-frequency color waves;
/// spatially coherent enough for statistics-based perception to latch on.
pub fn synthetic_image(width: u32, height: u32, seed: u64) -> RgbImage {
    use rand::Rng;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut waves = Vec::new();
    for _ in 0..8 {
        let fx: f64 = rng.random_range(0.004..0.06);
        let fy: f64 = rng.random_range(0.004..0.06);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let amp: f64 = rng.random_range(8.0..42.0);
        let channel = rng.random_range(0..3usize);
        waves.push((fx, fy, phase, amp, channel));
    }
    let (gx, gy): (f64, f64) = (rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
    RgbImage::from_fn(width, height, |x, y| {
        let base = 128.0 + gx * x as f64 + gy * y as f64;
        let mut px = [base; 3];
        for &(fx, fy, phase, amp, ch) in &waves {
            px[ch] += amp * (fx * x as f64 + fy * y as f64 + phase).sin();
        }
        Rgb([
            px[0].clamp(0.0, 255.0) as u8,
            px[1].clamp(0.0, 255.0) as u8,
            px[2].clamp(0.0, 255.0) as u8,
        ])
    })
}

/// Instance metadata stored as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuzzleManifest {
    pub format_version: u32,
    pub image_id: String,
    pub rows: usize,
    pub cols: usize,
    pub fragment_px: u32,
    pub gap_px: u32,
    pub shuffle_seed: u64,
    /// The shuffled start placement.
    pub placement: Permutation,
    /// Hex SHA-256 of each fragment's raw RGB bytes, by ground-truth index.
    pub fragment_checksums: Vec<String>,
}

/// A loaded puzzle instance.
#[derive(Debug, Clone)]
pub struct PuzzleInstance {
    pub manifest: PuzzleManifest,
    pub spec: PuzzleSpec,
    pub start: Permutation,
}

fn fragment_checksum(fragment: &RgbImage) -> String {
    let mut hasher = Sha256::new();
    hasher.update(fragment.as_raw());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn fragment_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("fragments").join(format!("frag_{index:04}.png"))
}

/// Write an instance directory: `manifest.json` plus lossless fragment
/// files named by ground-truth index.
pub fn save_instance(
    dir: &Path,
    spec: &PuzzleSpec,
    start: &Permutation,
    image_id: &str,
    shuffle_seed: u64,
) -> Result<PuzzleManifest, DatasetError> {
    let frag_dir = dir.join("fragments");
    fs::create_dir_all(&frag_dir).map_err(io_err(&frag_dir))?;
    let mut checksums = Vec::with_capacity(spec.fragments().len());
    for (i, fragment) in spec.fragments().iter().enumerate() {
        let path = fragment_path(dir, i);
        fragment.save(&path).map_err(|source| DatasetError::Image {
            path: path.clone(),
            source,
        })?;
        checksums.push(fragment_checksum(fragment));
    }
    let manifest = PuzzleManifest {
        format_version: 1,
        image_id: image_id.to_string(),
        rows: spec.rows(),
        cols: spec.cols(),
        fragment_px: spec.fragment_px(),
        gap_px: spec.gap_px(),
        shuffle_seed,
        placement: start.clone(),
        fragment_checksums: checksums,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| DatasetError::MalformedManifest(e.to_string()))?;
    fs::write(&path, json).map_err(io_err(&path))?;
    Ok(manifest)
}

/// Load and verify an instance directory. Validation happens before any
/// value is returned: manifest schema, placement length, per-fragment
/// checksums.
pub fn load_instance(dir: &Path) -> Result<PuzzleInstance, DatasetError> {
    let manifest_path = dir.join("manifest.json");
    let bytes = fs::read(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: PuzzleManifest = serde_json::from_slice(&bytes)
        .map_err(|e| DatasetError::MalformedManifest(e.to_string()))?;
    let cells = manifest.rows * manifest.cols;
    if manifest.placement.len() != cells {
        return Err(DatasetError::MalformedManifest(format!(
            "placement has {} entries for a {}x{} board",
            manifest.placement.len(),
            manifest.rows,
            manifest.cols
        )));
    }
    if manifest.fragment_checksums.len() != cells {
        return Err(DatasetError::MalformedManifest(format!(
            "{} checksums for {} fragments",
            manifest.fragment_checksums.len(),
            cells
        )));
    }
    let mut fragments = Vec::with_capacity(cells);
    for i in 0..cells {
        let path = fragment_path(dir, i);
        if !path.exists() {
            return Err(DatasetError::MissingFragment { path });
        }
        let fragment = image::open(&path)
            .map_err(|source| DatasetError::Image {
                path: path.clone(),
                source,
            })?
            .to_rgb8();
        if fragment_checksum(&fragment) != manifest.fragment_checksums[i] {
            return Err(DatasetError::ChecksumMismatch { index: i });
        }
        fragments.push(fragment);
    }
    let spec = PuzzleSpec::new(
        manifest.rows,
        manifest.cols,
        manifest.fragment_px,
        manifest.gap_px,
        fragments,
    )?;
    let start = manifest.placement.clone();
    Ok(PuzzleInstance {
        manifest,
        spec,
        start,
    })
}
