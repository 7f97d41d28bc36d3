use std::path::{Path, PathBuf};

use lve_core::cmaes::CmaConfig;
use lve_core::engine::{
    evolve_masterprint, resume_masterprint, EvolveSettings, FitnessKind, CHECKPOINT_FILE, HISTORY_FILE,
};
use lve_core::gallery::{enroll, MatchThreshold};
use lve_core::generator::format::load_generator_file;
use lve_core::Error;

use super::{check_fmr, create_dir, matcher, percent_label, require, threshold_path, BuiltGallery};
use crate::cli::EvolveArgs;
use crate::manifest::io_error;
use crate::{CliError, Ctx};

fn fitness_kind(name: &str) -> Result<FitnessKind, CliError> {
    serde_json::from_value(serde_json::Value::String(name.into()))
        .map_err(|_| CliError::Usage(format!("unknown fitness {name:?}; expected count or smoothed")))
}

/// Checkpoint file named by `--resume`, given either it or its directory.
fn checkpoint_file(resume: &Path) -> Result<PathBuf, CliError> {
    let file = if resume.is_dir() { resume.join(CHECKPOINT_FILE) } else { resume.to_path_buf() };
    if !file.is_file() {
        return Err(Error::Config(format!("no checkpoint at {}", file.display())).into());
    }
    Ok(file)
}

pub fn run(args: &EvolveArgs, ctx: &Ctx) -> Result<(), CliError> {
    let gallery_dir = require(&args.gallery, "gallery")?;
    let weights = require(&args.weights, "weights")?;
    let thresholds = require(&args.thresholds, "thresholds")?;
    let out = require(&args.out, "out")?;
    let matcher = matcher(&args.matcher)?;
    check_fmr(args.fmr)?;
    let kind = fitness_kind(&args.fitness)?;
    if args.lambda.is_some_and(|l| l < 2) {
        return Err(CliError::Usage("--lambda must be at least 2".into()));
    }

    // every input is checked before any compute
    let thr_path = threshold_path(thresholds, &matcher.id, &args.split, args.fmr);
    if !thr_path.is_file() {
        return Err(Error::Config(format!(
            "threshold file {} not found; run `lve calibrate --matcher {} --split {} --fmr {}` first",
            thr_path.display(),
            matcher.id,
            args.split,
            args.fmr
        ))
        .into());
    }
    let threshold = MatchThreshold::load(&thr_path)?;
    let checkpoint = args.resume.as_deref().map(checkpoint_file).transpose()?;
    let model = load_generator_file(weights)?;
    let built = BuiltGallery::load(gallery_dir)?;
    let gallery = built.subset(&args.split)?;

    let settings = EvolveSettings {
        cmaes: CmaConfig { sigma0: args.sigma0, lambda: args.lambda, ..CmaConfig::default() },
        budget: args.budget,
        seed: ctx.seed,
        fitness: kind,
    };
    let prepared = enroll(&gallery, ctx.execution).prepare(&matcher, ctx.execution);
    eprintln!(
        "evolving against {} {} identities at FMR {} (threshold {}), budget {}",
        prepared.len(),
        args.split,
        percent_label(threshold.fmr),
        threshold.score,
        args.budget
    );

    create_dir(out)?;
    let mut progress = |row: &lve_core::cmaes::HistoryRow| {
        eprintln!(
            "gen {:>5}  evals {:>6}  best {:>9.3}  sigma {:.4}  cond {:.2e}",
            row.generation, row.evals, row.best_f, row.sigma, row.condition
        );
    };
    let mut copied = None;
    let result = match &checkpoint {
        None => evolve_masterprint(&model, &prepared, &threshold, &settings, Some(out), ctx.execution, &mut progress)?,
        Some(file) => {
            let from = file.parent().unwrap_or(Path::new("."));
            if !same_dir(from, out) {
                for (src, name) in [(file.clone(), CHECKPOINT_FILE), (from.join(HISTORY_FILE), HISTORY_FILE)] {
                    let dst = out.join(name);
                    std::fs::copy(&src, &dst).map_err(|e| io_error(&src, e))?;
                }
                copied = Some(file);
            }
            resume_masterprint(&model, &prepared, &threshold, &settings, out, ctx.execution, &mut progress)?
        }
    };
    result.write(out)?;
    println!(
        "matched {}/{} {} identities at FMR {} (threshold {}); stopped on {} after {} generations",
        result.fitness_train,
        result.identities,
        args.split,
        percent_label(threshold.fmr),
        threshold.score,
        result.stop,
        result.history.len()
    );

    let mut inputs: Vec<&Path> = vec![gallery_dir, weights, &thr_path];
    // a checkpoint inside `out` has been overwritten by now
    if let Some(file) = copied {
        inputs.push(file);
    }
    ctx.finish(out, &inputs)
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}
