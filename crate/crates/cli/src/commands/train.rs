//! `gapsaw train`: run the training loop over the generated instances,
//! appending one NDJSON record per episode and checkpointing the full
//! trainer state. `--resume` continues an interrupted run; because the
//! checkpoint captures the RNG position, the buffer, and the optimizer
//! moments, the appended log matches an uninterrupted run byte for byte.

use std::fs::OpenOptions;
use std::io::Write;

use gapsaw_core::agent::{TrainPuzzle, Trainer};
use gapsaw_core::perception::PerceptionModel;

use crate::commands::load_instances;
use crate::config::ExperimentConfig;
use crate::CliError;

pub fn run(
    config: &ExperimentConfig,
    resume: bool,
    episodes: Option<usize>,
) -> Result<(), CliError> {
    let instances = load_instances(&config.instances_dir())?;
    let dims = instances[0].1.spec.dims();
    for (name, instance) in &instances {
        if instance.spec.dims() != dims {
            return Err(CliError::Config(format!(
                "training needs one geometry, but {name} is {}x{}",
                instance.spec.rows(),
                instance.spec.cols()
            )));
        }
    }

    let puzzles: Vec<TrainPuzzle> = instances
        .iter()
        .map(|(_, i)| TrainPuzzle {
            spec: i.spec.clone(),
            start: i.start.clone(),
        })
        .collect();
    let models: Vec<Box<dyn PerceptionModel>> = instances
        .iter()
        .map(|(_, i)| config.perception.build(&i.spec))
        .collect::<Result<_, _>>()?;
    let model_refs: Vec<&dyn PerceptionModel> = models.iter().map(|m| m.as_ref()).collect();
    let weights = config.perception.weights(dims);

    let checkpoint = config.checkpoint_path();
    let log_path = config.train_log_path();
    let seed = config.seeds[0];
    let mut trainer = if resume {
        let trainer = Trainer::load(&checkpoint).map_err(|e| {
            CliError::Data(format!("cannot resume from {}: {e}", checkpoint.display()))
        })?;
        if trainer.dims() != dims {
            return Err(CliError::Config(
                "checkpoint board does not match the instances".into(),
            ));
        }
        trainer
    } else {
        Trainer::new(
            dims,
            config.train.clone(),
            config.evolution.clone(),
            config.reward,
            seed,
        )
        .map_err(|e| CliError::Config(e.to_string()))?
    };

    let target = config.train.iterations;
    let done = trainer.episodes_done();
    if done >= target {
        println!("checkpoint already has {done} episodes (target {target}); nothing to do");
        return Ok(());
    }
    let remaining = target - done;
    let to_run = episodes.map_or(remaining, |n| n.min(remaining));
    let records = trainer
        .run_with_models(&puzzles, &model_refs, &weights, to_run)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut log = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", log_path.display())))?;
    for record in &records {
        let line = serde_json::to_string(record)
            .map_err(|e| CliError::Runtime(format!("log serialization: {e}")))?;
        writeln!(log, "{line}").map_err(|e| CliError::Data(format!("log write: {e}")))?;
    }
    trainer
        .save(&checkpoint)
        .map_err(|e| CliError::Data(format!("cannot write checkpoint: {e}")))?;

    let perfect = records.iter().filter(|r| r.perfect).count();
    println!(
        "trained {} episodes ({perfect} perfect) on {} instances; checkpoint {}",
        records.len(),
        puzzles.len(),
        checkpoint.display()
    );
    Ok(())
}
