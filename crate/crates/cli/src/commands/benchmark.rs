//! `gapsaw benchmark`: run every configured (perception, solver) pair over
//! every instance, with per-instance evidence budgets matched to the
//! agent's spend, and emit per-instance and aggregate tables as CSV and
//! JSON (identical numbers) plus optional reassembled images.
//!
//! Instances run in a worker pool; results are merged by job index, so
//! output files are byte-stable across thread schedules.

use std::path::PathBuf;

use serde::Serialize;

use gapsaw_core::agent::{solve, AgentParams};
use gapsaw_core::baselines::{ga_solve, greedy_solve, tabu_solve};
use gapsaw_core::dataset::{render_placement, PuzzleInstance};
use gapsaw_core::par;
use gapsaw_core::puzzle::metrics;

use crate::commands::{load_instances, mix_seed};
use crate::config::{ExperimentConfig, PerceptionConfig, SolverKind};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
struct InstanceRow {
    instance: String,
    solver: String,
    perception: String,
    perf: bool,
    abs: f64,
    hori: f64,
    vert: f64,
    neig: f64,
    steps: u64,
    evidence_evals: u64,
    budget: u64,
}

#[derive(Debug, Clone, Serialize)]
struct AggregateRow {
    solver: String,
    perception: String,
    instances: u64,
    perf_pct: f64,
    abs_pct: f64,
    hori_pct: f64,
    vert_pct: f64,
    neig_pct: f64,
    mean_evals: f64,
}

#[derive(Serialize)]
struct Results {
    per_instance: Vec<InstanceRow>,
    aggregates: Vec<AggregateRow>,
}

struct Job<'a> {
    perception_idx: usize,
    perception: &'a PerceptionConfig,
    instance_idx: usize,
    name: &'a str,
    instance: &'a PuzzleInstance,
}

fn run_job(
    job: &Job,
    config: &ExperimentConfig,
    solvers: &[SolverKind],
    agent: Option<&AgentParams>,
    images_dir: Option<&PathBuf>,
) -> Result<Vec<InstanceRow>, CliError> {
    let spec = &job.instance.spec;
    let start = &job.instance.start;
    let dims = spec.dims();
    let model = job.perception.build(spec)?;
    let weights = job.perception.weights(dims);
    let perception_label = job.perception.label();
    let seed_for = |solver_tag: u64| {
        mix_seed(
            config.seeds[0],
            &[
                job.perception_idx as u64,
                job.instance_idx as u64,
                solver_tag,
            ],
        )
    };

    let mut rows = Vec::with_capacity(solvers.len());
    let mut budget = config.benchmark.fallback_budget;
    let emit = |solver: SolverKind,
                final_state: &gapsaw_core::puzzle::Permutation,
                steps: u64,
                evals: u64,
                budget: u64,
                rows: &mut Vec<InstanceRow>|
     -> Result<(), CliError> {
        let m = metrics(final_state, dims);
        if let Some(dir) = images_dir {
            let path = dir.join(format!(
                "{}__{}__{}.png",
                job.name,
                solver.name(),
                perception_label
            ));
            render_placement(spec, final_state)
                .save(&path)
                .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        }
        rows.push(InstanceRow {
            instance: job.name.to_string(),
            solver: solver.name().to_string(),
            perception: perception_label.clone(),
            perf: m.perfect,
            abs: m.absolute_frac,
            hori: m.horizontal_frac,
            vert: m.vertical_frac,
            neig: m.neighbor_frac,
            steps,
            evidence_evals: evals,
            budget,
        });
        Ok(())
    };

    // The agent runs first so its per-instance spend can serve as the
    // baselines' budget.
    if solvers.contains(&SolverKind::Evorl) {
        let agent = agent.expect("checked before dispatch");
        let out = solve(
            spec,
            start,
            agent,
            model.as_ref(),
            &weights,
            &config.reward,
            &config.evolution,
            config.train.discount,
            config.solve.max_swaps,
            seed_for(0),
        )
        .map_err(|e| CliError::Runtime(format!("{}: {e}", job.name)))?;
        if config.benchmark.match_budget {
            budget = out.evidence_evals.max(1);
        }
        emit(
            SolverKind::Evorl,
            &out.final_state,
            out.actions.len() as u64,
            out.evidence_evals,
            budget,
            &mut rows,
        )?;
    }
    for &solver in solvers {
        match solver {
            SolverKind::Evorl => {} // already ran
            SolverKind::Greedy => {
                let out = greedy_solve(spec, start, model.as_ref(), &weights)
                    .map_err(|e| CliError::Runtime(format!("{}: {e}", job.name)))?;
                emit(
                    solver,
                    &out.final_state,
                    out.iterations as u64,
                    out.evidence_evals,
                    budget,
                    &mut rows,
                )?;
            }
            SolverKind::Tabu => {
                let mut cfg = config.benchmark.tabu.clone();
                let per_iteration = (dims.cells() * (dims.cells() - 1) / 2) as u64;
                cfg.max_iterations = cfg
                    .max_iterations
                    .min((budget.saturating_sub(1) / per_iteration.max(1)).max(1) as usize);
                cfg.seed = seed_for(2);
                let out = tabu_solve(spec, start, model.as_ref(), &weights, &cfg)
                    .map_err(|e| CliError::Runtime(format!("{}: {e}", job.name)))?;
                emit(
                    solver,
                    &out.final_state,
                    out.iterations as u64,
                    out.evidence_evals,
                    budget,
                    &mut rows,
                )?;
            }
            SolverKind::Ga => {
                let mut cfg = config.benchmark.ga.clone();
                cfg.generations = cfg.generations.min(cfg.generations_for_budget(budget));
                cfg.seed = seed_for(3);
                let out = ga_solve(spec, start, model.as_ref(), &weights, &cfg)
                    .map_err(|e| CliError::Runtime(format!("{}: {e}", job.name)))?;
                emit(
                    solver,
                    &out.final_state,
                    out.iterations as u64,
                    out.evidence_evals,
                    budget,
                    &mut rows,
                )?;
            }
        }
    }
    Ok(rows)
}

fn aggregates(
    rows: &[InstanceRow],
    solvers: &[SolverKind],
    perceptions: &[PerceptionConfig],
) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    for perception in perceptions {
        let label = perception.label();
        for solver in solvers {
            let group: Vec<&InstanceRow> = rows
                .iter()
                .filter(|r| r.solver == solver.name() && r.perception == label)
                .collect();
            if group.is_empty() {
                continue;
            }
            let n = group.len() as f64;
            let mean =
                |f: &dyn Fn(&InstanceRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
            out.push(AggregateRow {
                solver: solver.name().to_string(),
                perception: label.clone(),
                instances: group.len() as u64,
                perf_pct: 100.0 * group.iter().filter(|r| r.perf).count() as f64 / n,
                abs_pct: 100.0 * mean(&|r| r.abs),
                hori_pct: 100.0 * mean(&|r| r.hori),
                vert_pct: 100.0 * mean(&|r| r.vert),
                neig_pct: 100.0 * mean(&|r| r.neig),
                mean_evals: mean(&|r| r.evidence_evals as f64),
            });
        }
    }
    out
}

fn write_csv<T: Serialize>(path: &PathBuf, rows: &[T]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::Data(format!("csv row: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Data(format!("csv flush: {e}")))?;
    Ok(())
}

pub fn run(
    config: &ExperimentConfig,
    checkpoint: Option<PathBuf>,
    solver_filter: Option<&str>,
) -> Result<(), CliError> {
    let solvers: Vec<SolverKind> = match solver_filter {
        None => config.benchmark.solvers.clone(),
        Some(name) => {
            let kind = SolverKind::parse(name)
                .ok_or_else(|| CliError::Config(format!("unknown solver '{name}'")))?;
            vec![kind]
        }
    };
    let default_perceptions = vec![config.perception.clone()];
    let perceptions = config
        .benchmark
        .perceptions
        .as_ref()
        .unwrap_or(&default_perceptions);

    let agent = if solvers.contains(&SolverKind::Evorl) {
        let path = checkpoint.unwrap_or_else(|| config.checkpoint_path());
        Some(AgentParams::load(&path).map_err(|e| {
            CliError::Data(format!(
                "missing checkpoint for the evorl solver at {}: {e}",
                path.display()
            ))
        })?)
    } else {
        None
    };

    let instances = load_instances(&config.instances_dir())?;
    if let Some(agent) = &agent {
        for (name, instance) in &instances {
            if instance.spec.dims() != agent.dims {
                return Err(CliError::Data(format!(
                    "instance {name} is {}x{} but the checkpoint was trained on {}x{}",
                    instance.spec.rows(),
                    instance.spec.cols(),
                    agent.dims.rows,
                    agent.dims.cols
                )));
            }
        }
    }

    let images_dir = if config.benchmark.emit_images {
        let dir = config.out_dir.join("images");
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
        Some(dir)
    } else {
        None
    };

    let jobs: Vec<Job> = perceptions
        .iter()
        .enumerate()
        .flat_map(|(pi, perception)| {
            instances
                .iter()
                .enumerate()
                .map(move |(ii, (name, instance))| Job {
                    perception_idx: pi,
                    perception,
                    instance_idx: ii,
                    name,
                    instance,
                })
        })
        .collect();
    let results = par::map_collect(&jobs, |job| {
        run_job(job, config, &solvers, agent.as_ref(), images_dir.as_ref())
    });
    let mut rows = Vec::new();
    for result in results {
        rows.extend(result?);
    }
    let aggregate_rows = aggregates(&rows, &solvers, perceptions);

    write_csv(&config.out_dir.join("results.csv"), &rows)?;
    write_csv(&config.out_dir.join("summary.csv"), &aggregate_rows)?;
    let results = Results {
        per_instance: rows,
        aggregates: aggregate_rows,
    };
    let json = serde_json::to_string_pretty(&results)
        .map_err(|e| CliError::Runtime(format!("results serialization: {e}")))?;
    std::fs::write(config.out_dir.join("results.json"), json)
        .map_err(|e| CliError::Data(format!("cannot write results.json: {e}")))?;

    for agg in &results.aggregates {
        println!(
            "{:<8} {:<14} n={:<4} perf={:6.1}% abs={:6.1}% hori={:6.1}% vert={:6.1}% neig={:6.1}% evals={:.0}",
            agg.solver,
            agg.perception,
            agg.instances,
            agg.perf_pct,
            agg.abs_pct,
            agg.hori_pct,
            agg.vert_pct,
            agg.neig_pct,
            agg.mean_evals
        );
    }
    println!(
        "wrote results.csv, summary.csv, results.json to {}",
        config.out_dir.display()
    );
    Ok(())
}
