pub mod benchmark;
pub mod generate;
pub mod solve;
pub mod train;

use std::path::{Path, PathBuf};

use gapsaw_core::dataset::{load_instance, PuzzleInstance};

use crate::CliError;

/// Deterministic sub-seed derivation for independent jobs.
pub fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    let mut state = base ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        state = splitmix64(state ^ p);
    }
    state
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Load every instance directory under `dir`, sorted by name for
/// reproducible ordering.
pub fn load_instances(dir: &Path) -> Result<Vec<(String, PuzzleInstance)>, CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("cannot read instances dir {}: {e}", dir.display())))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join("manifest.json").exists())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Data(format!(
            "no puzzle instances under {}",
            dir.display()
        )));
    }
    let mut out = Vec::with_capacity(dirs.len());
    for path in dirs {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let instance = load_instance(&path).map_err(|e| CliError::Data(format!("{name}: {e}")))?;
        out.push((name, instance));
    }
    Ok(out)
}
