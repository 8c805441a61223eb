//! `gapsaw solve`: reassemble one instance with a chosen solver and write
//! the reassembled raster plus a JSON report.

use std::path::{Path, PathBuf};

use serde::Serialize;

use gapsaw_core::agent::{solve, AgentParams};
use gapsaw_core::baselines::{ga_solve, greedy_solve, tabu_solve};
use gapsaw_core::dataset::{load_instance, render_placement};
use gapsaw_core::puzzle::{metrics, MetricsReport, Permutation};

use crate::commands::mix_seed;
use crate::config::{ExperimentConfig, SolverKind};
use crate::CliError;

#[derive(Serialize)]
struct SolveReport {
    instance: String,
    solver: String,
    perception: String,
    metrics: MetricsReport,
    steps: u64,
    evidence_evals: u64,
}

pub fn run(
    config: &ExperimentConfig,
    instance_dir: &Path,
    checkpoint: Option<PathBuf>,
    solver: Option<&str>,
) -> Result<(), CliError> {
    let solver = match solver {
        None => SolverKind::Evorl,
        Some(name) => SolverKind::parse(name)
            .ok_or_else(|| CliError::Config(format!("unknown solver '{name}'")))?,
    };
    let name = instance_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into());
    let instance = load_instance(instance_dir).map_err(|e| CliError::Data(e.to_string()))?;
    let spec = &instance.spec;
    let model = config.perception.build(spec)?;
    let weights = config.perception.weights(spec.dims());
    let seed = mix_seed(config.seeds[0], &[0x501E, 0]);

    let (final_state, steps, evals): (Permutation, u64, u64) = match solver {
        SolverKind::Evorl => {
            let path = checkpoint.unwrap_or_else(|| config.checkpoint_path());
            let agent = AgentParams::load(&path).map_err(|e| {
                CliError::Data(format!("missing checkpoint {}: {e}", path.display()))
            })?;
            let out = solve(
                spec,
                &instance.start,
                &agent,
                model.as_ref(),
                &weights,
                &config.reward,
                &config.evolution,
                config.train.discount,
                config.solve.max_swaps,
                seed,
            )
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            (
                out.final_state,
                out.actions.len() as u64,
                out.evidence_evals,
            )
        }
        SolverKind::Greedy => {
            let out = greedy_solve(spec, &instance.start, model.as_ref(), &weights)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            (out.final_state, out.iterations as u64, out.evidence_evals)
        }
        SolverKind::Tabu => {
            let mut cfg = config.benchmark.tabu.clone();
            cfg.seed = seed;
            let out = tabu_solve(spec, &instance.start, model.as_ref(), &weights, &cfg)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            (out.final_state, out.iterations as u64, out.evidence_evals)
        }
        SolverKind::Ga => {
            let mut cfg = config.benchmark.ga.clone();
            cfg.seed = seed;
            let out = ga_solve(spec, &instance.start, model.as_ref(), &weights, &cfg)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            (out.final_state, out.iterations as u64, out.evidence_evals)
        }
    };

    let report = SolveReport {
        instance: name.clone(),
        solver: solver.name().to_string(),
        perception: config.perception.label(),
        metrics: metrics(&final_state, spec.dims()),
        steps,
        evidence_evals: evals,
    };
    let out_dir = config.out_dir.join("solve").join(&name);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out_dir.display())))?;
    render_placement(spec, &final_state)
        .save(out_dir.join("solved.png"))
        .map_err(|e| CliError::Data(format!("cannot write image: {e}")))?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(format!("report serialization: {e}")))?;
    std::fs::write(out_dir.join("report.json"), json)
        .map_err(|e| CliError::Data(format!("cannot write report: {e}")))?;

    println!(
        "{name} via {}: perfect={}, absolute={:.3}, steps={steps}, evidence evals={evals}",
        solver.name(),
        report.metrics.perfect,
        report.metrics.absolute_frac
    );
    Ok(())
}
