//! `gapsaw generate`: slice every corpus image into shuffled instances,
//! one directory per (image, geometry, seed).

use std::path::PathBuf;

use image::imageops::FilterType;
use image::RgbImage;

use gapsaw_core::dataset::{fit_fragment_px, required_span, save_instance, shuffle, slice};

use crate::config::{ExperimentConfig, GeometryConfig};
use crate::CliError;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

fn corpus_images(dir: &PathBuf) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("cannot read image dir {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|x| x.to_str())
                .is_some_and(|x| IMAGE_EXTENSIONS.contains(&x.to_lowercase().as_str()))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Fragment size for a geometry on an image, applying the floor fit rule
/// when the config leaves it open.
fn fragment_px_for(geometry: &GeometryConfig, image: &RgbImage) -> u32 {
    geometry.fragment_px.unwrap_or_else(|| {
        fit_fragment_px(
            image.width(),
            image.height(),
            geometry.rows,
            geometry.cols,
            geometry.gap_px,
        )
    })
}

/// Scale the image up just enough to cover the required span, preserving
/// aspect ratio; slicing center-crops the excess.
fn resize_to_fit(image: &RgbImage, need_w: u32, need_h: u32) -> RgbImage {
    let sx = need_w as f64 / image.width() as f64;
    let sy = need_h as f64 / image.height() as f64;
    let scale = sx.max(sy);
    let w = (image.width() as f64 * scale).ceil() as u32;
    let h = (image.height() as f64 * scale).ceil() as u32;
    image::imageops::resize(image, w.max(need_w), h.max(need_h), FilterType::Triangle)
}

pub fn run(config: &ExperimentConfig) -> Result<(), CliError> {
    let images = corpus_images(&config.generate.image_dir)?;
    if images.is_empty() {
        return Err(CliError::Data(format!(
            "no inputs: {} contains no images",
            config.generate.image_dir.display()
        )));
    }
    let instances_dir = config.instances_dir();
    std::fs::create_dir_all(&instances_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", instances_dir.display())))?;

    let mut generated = 0usize;
    let mut skipped: Vec<String> = Vec::new();
    for path in &images {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".into());
        let image = match image::open(path) {
            Ok(img) => img.to_rgb8(),
            Err(e) => {
                skipped.push(format!("{stem}: unreadable image ({e})"));
                continue;
            }
        };
        for geometry in &config.geometries {
            let fragment_px = fragment_px_for(geometry, &image);
            if fragment_px < 8 {
                skipped.push(format!(
                    "{stem} {}x{}: fragments would be {fragment_px}px (< 8px minimum)",
                    geometry.rows, geometry.cols
                ));
                continue;
            }
            let need_w = required_span(geometry.cols, fragment_px, geometry.gap_px);
            let need_h = required_span(geometry.rows, fragment_px, geometry.gap_px);
            let prepared = if image.width() < need_w || image.height() < need_h {
                if config.generate.resize {
                    resize_to_fit(&image, need_w, need_h)
                } else {
                    skipped.push(format!(
                        "{stem} {}x{}: image {}x{} smaller than required {need_w}x{need_h}",
                        geometry.rows,
                        geometry.cols,
                        image.width(),
                        image.height()
                    ));
                    continue;
                }
            } else {
                image.clone()
            };
            let spec = match slice(
                &prepared,
                geometry.rows,
                geometry.cols,
                fragment_px,
                geometry.gap_px,
            ) {
                Ok(spec) => spec,
                Err(e) => {
                    skipped.push(format!("{stem}: {e}"));
                    continue;
                }
            };
            for &seed in &config.seeds {
                let start = shuffle(&spec, seed);
                let dir = instances_dir.join(format!(
                    "{stem}_r{}x{}_g{}_s{seed}",
                    geometry.rows, geometry.cols, geometry.gap_px
                ));
                std::fs::create_dir_all(&dir)
                    .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
                save_instance(&dir, &spec, &start, &stem, seed)
                    .map_err(|e| CliError::Data(format!("{stem}: {e}")))?;
                generated += 1;
            }
        }
    }

    println!(
        "generated {generated} instances into {} ({} skipped)",
        instances_dir.display(),
        skipped.len()
    );
    for s in &skipped {
        eprintln!("skipped: {s}");
    }
    if generated == 0 {
        return Err(CliError::Data(
            "no inputs survived generation; every image was skipped".into(),
        ));
    }
    Ok(())
}
