//! Shared scaffolding for CLI tests: a synthetic corpus, a small config,
//! and binary invocation helpers.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn gapsaw() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gapsaw"))
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = gapsaw().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "gapsaw {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Write `count` deterministic corpus images.
pub fn write_corpus(dir: &Path, count: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        let img = gapsaw_core::dataset::synthetic_image(140, 140, 100 + i);
        img.save(dir.join(format!("img_{i:02}.png"))).unwrap();
    }
}

/// Small 3x3 experiment config pointing at `root`; fast enough for tests.
pub fn small_config(root: &Path, extra: &str) -> PathBuf {
    let corpus = root.join("corpus");
    let out = root.join("out");
    let text = format!(
        r#"
out_dir = "{out}"
seeds = [0, 1]

[[geometries]]
rows = 3
cols = 3
gap_px = 2

[generate]
image_dir = "{corpus}"
resize = true

[perception]
kind = "oracle"
corruption = 0.0
seed = 7

[train]
iterations = 6
max_swaps = 40
hidden = [16]
batch_size = 16

[evolution]
iterations = 2
population = 8
sample_count = 4
historical_count = 2

[solve]
max_swaps = 60

[benchmark]
solvers = ["evorl", "greedy", "ga"]
{extra}
"#,
        out = out.display(),
        corpus = corpus.display(),
    );
    let path = root.join("gapsaw.toml");
    std::fs::write(&path, text).unwrap();
    path
}
