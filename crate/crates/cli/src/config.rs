//! Declarative experiment configuration (TOML) and its validation.
//!
//! One config file drives every subcommand; selected flags override fields
//! (`--seed`, `--out`, `--solver`). The full schema with defaults is
//! documented in the repository README.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gapsaw_core::agent::{EvoConfig, TrainConfig};
use gapsaw_core::baselines::{GaConfig, TabuConfig};
use gapsaw_core::perception::{EvidenceWeights, OracleModel, PerceptionModel, PixelStatModel};
use gapsaw_core::puzzle::{BoardDims, PuzzleSpec, RewardParams};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub geometries: Vec<GeometryConfig>,
    pub generate: GenerateConfig,
    pub perception: PerceptionConfig,
    pub reward: RewardParams,
    pub train: TrainConfig,
    pub evolution: EvoConfig,
    pub solve: SolveConfig,
    pub benchmark: BenchmarkConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("runs/default"),
            seeds: vec![0],
            geometries: vec![GeometryConfig::default()],
            generate: GenerateConfig::default(),
            perception: PerceptionConfig::default(),
            reward: RewardParams::default(),
            train: TrainConfig::default(),
            evolution: EvoConfig::default(),
            solve: SolveConfig::default(),
            benchmark: BenchmarkConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub rows: usize,
    pub cols: usize,
    pub gap_px: u32,
    /// Square fragment side; derived by the floor fit rule when omitted.
    pub fragment_px: Option<u32>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 4,
            gap_px: 2,
            fragment_px: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    /// Directory of source images (png/jpeg).
    pub image_dir: PathBuf,
    /// Upscale undersized images to fit instead of skipping them.
    pub resize: bool,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            image_dir: PathBuf::from("corpus"),
            resize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerceptionKind {
    Oracle,
    Pixelstat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptionConfig {
    pub kind: PerceptionKind,
    /// Oracle head flip probability, in [0, 0.5).
    pub corruption: f64,
    /// Oracle corruption pattern seed.
    pub seed: u64,
    /// Weight of the global head in the evidence combination.
    pub lambda_g: f64,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self {
            kind: PerceptionKind::Oracle,
            corruption: 0.0,
            seed: 0,
            lambda_g: 1.0,
        }
    }
}

impl PerceptionConfig {
    /// Short row label for result tables.
    pub fn label(&self) -> String {
        match self.kind {
            PerceptionKind::Oracle => format!("oracle_p{:.2}", self.corruption),
            PerceptionKind::Pixelstat => "pixelstat".to_string(),
        }
    }

    pub fn build(&self, spec: &PuzzleSpec) -> Result<Box<dyn PerceptionModel>, CliError> {
        Ok(match self.kind {
            PerceptionKind::Oracle => Box::new(
                OracleModel::for_spec(spec, self.corruption, self.seed)
                    .map_err(|e| CliError::Config(e.to_string()))?,
            ),
            PerceptionKind::Pixelstat => {
                Box::new(PixelStatModel::new(spec).map_err(|e| CliError::Config(e.to_string()))?)
            }
        })
    }

    pub fn weights(&self, dims: BoardDims) -> EvidenceWeights {
        let mut weights = EvidenceWeights::uniform(dims);
        weights.lambda_g = self.lambda_g;
        weights
    }

    fn validate(&self) -> Result<(), String> {
        if !(0.0..0.5).contains(&self.corruption) {
            return Err(format!(
                "perception.corruption must be in [0, 0.5), got {}",
                self.corruption
            ));
        }
        if self.lambda_g < 0.0 || !self.lambda_g.is_finite() {
            return Err("perception.lambda_g must be a nonnegative number".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub max_swaps: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { max_swaps: 500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Evorl,
    Greedy,
    Tabu,
    Ga,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Evorl => "evorl",
            SolverKind::Greedy => "greedy",
            SolverKind::Tabu => "tabu",
            SolverKind::Ga => "ga",
        }
    }

    pub fn parse(name: &str) -> Option<SolverKind> {
        match name {
            "evorl" => Some(SolverKind::Evorl),
            "greedy" => Some(SolverKind::Greedy),
            "tabu" => Some(SolverKind::Tabu),
            "ga" => Some(SolverKind::Ga),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub solvers: Vec<SolverKind>,
    /// Perception variants for ablation grids; defaults to the experiment's
    /// single `[perception]` when omitted.
    pub perceptions: Option<Vec<PerceptionConfig>>,
    /// Grant each baseline the evidence budget the agent spent per
    /// instance (requires `evorl` among the solvers).
    pub match_budget: bool,
    /// Evidence budget when no agent run sets one.
    pub fallback_budget: u64,
    pub emit_images: bool,
    pub tabu: TabuConfig,
    pub ga: GaConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            solvers: vec![
                SolverKind::Evorl,
                SolverKind::Greedy,
                SolverKind::Tabu,
                SolverKind::Ga,
            ],
            perceptions: None,
            match_budget: true,
            fallback_budget: 20_000,
            emit_images: false,
            tabu: TabuConfig::default(),
            ga: GaConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.seeds.is_empty() {
            return fail("seeds must be non-empty".into());
        }
        if self.geometries.is_empty() {
            return fail("at least one [[geometries]] entry is required".into());
        }
        for g in &self.geometries {
            if g.rows < 2 || g.cols < 2 {
                return fail(format!(
                    "geometry {}x{} is smaller than 2x2",
                    g.rows, g.cols
                ));
            }
            if let Some(px) = g.fragment_px {
                if px < 8 {
                    return fail(format!("fragment_px {px} is below the 8px minimum"));
                }
            }
        }
        self.perception.validate().or_else(&fail)?;
        if let Some(ps) = &self.benchmark.perceptions {
            if ps.is_empty() {
                return fail("benchmark.perceptions must be non-empty when present".into());
            }
            for p in ps {
                p.validate().or_else(&fail)?;
            }
        }
        if self.benchmark.solvers.is_empty() {
            return fail("benchmark.solvers must be non-empty".into());
        }
        self.reward
            .validate()
            .or_else(|e| fail(format!("reward: {e}")))?;
        self.train
            .validate()
            .or_else(|e| fail(format!("train: {e}")))?;
        self.evolution
            .validate()
            .or_else(|e| fail(format!("evolution: {e}")))?;
        self.benchmark
            .tabu
            .validate()
            .or_else(|e| fail(format!("benchmark.tabu: {e}")))?;
        self.benchmark
            .ga
            .validate()
            .or_else(|e| fail(format!("benchmark.ga: {e}")))?;
        if self.solve.max_swaps == 0 {
            return fail("solve.max_swaps must be >= 1".into());
        }
        Ok(())
    }

    /// Default locations inside the output directory.
    pub fn instances_dir(&self) -> PathBuf {
        self.out_dir.join("instances")
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.out_dir.join("checkpoint.bin")
    }

    pub fn train_log_path(&self) -> PathBuf {
        self.out_dir.join("train_log.ndjson")
    }
}
