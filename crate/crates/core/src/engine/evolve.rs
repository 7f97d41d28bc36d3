use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Fitness, FitnessKind};
use crate::cmaes::{history_csv, CmaConfig, CmaState, HistoryRow, Optimizer, StopReason};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gallery::{MatchThreshold, PreparedGallery};
use crate::generator::{GeneratorModel, LatentVector};
use crate::raster::GrayImage;

pub const CHECKPOINT_FILE: &str = "checkpoint.lvec";
pub const HISTORY_FILE: &str = "history.csv";

/// Optimizer settings of one evolution run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSettings {
    pub cmaes: CmaConfig,
    pub budget: u64,
    pub seed: u64,
    pub fitness: FitnessKind,
}

impl Default for EvolveSettings {
    fn default() -> Self {
        EvolveSettings {
            cmaes: CmaConfig::default(),
            budget: 5_000,
            seed: 0,
            fitness: FitnessKind::Count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub best_latent: LatentVector,
    pub best_image: GrayImage,
    /// Identities of the optimization gallery matched by `best_image`.
    pub fitness_train: usize,
    /// Objective value of the best candidate under `settings.fitness`.
    pub best_fitness: f64,
    pub identities: usize,
    pub history: Vec<HistoryRow>,
    pub thresholds: Vec<MatchThreshold>,
    pub stop: StopReason,
    pub settings: EvolveSettings,
}

#[derive(Serialize)]
struct Summary<'a> {
    fitness_train: usize,
    identities: usize,
    best_fitness: f64,
    fitness_kind: FitnessKind,
    stop: String,
    generations: usize,
    evaluations: u64,
    settings: &'a EvolveSettings,
    thresholds: &'a [MatchThreshold],
}

impl EvolutionResult {
    /// Writes `best.png`, `best.pgm`, `best_latent.csv`, `history.csv` and
    /// `result.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.best_image.save_png(&dir.join("best.png"))?;
        self.best_image.save_pgm(&dir.join("best.pgm"))?;
        write_file(&dir.join("best_latent.csv"), &self.best_latent.to_csv())?;
        write_file(&dir.join(HISTORY_FILE), &history_csv(&self.history))?;
        let summary = Summary {
            fitness_train: self.fitness_train,
            identities: self.identities,
            best_fitness: self.best_fitness,
            fitness_kind: self.settings.fitness,
            stop: self.stop.to_string(),
            generations: self.history.len(),
            evaluations: self.history.last().map_or(0, |r| r.evals),
            settings: &self.settings,
            thresholds: &self.thresholds,
        };
        write_file(&dir.join("result.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn checkpoint(dir: &Path, opt: &Optimizer) -> Result<()> {
    write_file(&dir.join(HISTORY_FILE), &history_csv(opt.history()))?;
    opt.state().save_checkpoint(&dir.join(CHECKPOINT_FILE))
}

/// Maximizes the identity count of generated images over `gallery`.
///
/// The run ends at the budget, on stagnation, or once every identity is
/// matched.
/// With `out_dir`, the CMA-ES state and history are checkpointed there
/// after every generation, so a failed run can be resumed with
/// [`resume_masterprint`]. `progress` sees every history row.
pub fn evolve_masterprint(
    model: &GeneratorModel,
    gallery: &PreparedGallery,
    threshold: &MatchThreshold,
    settings: &EvolveSettings,
    out_dir: Option<&Path>,
    execution: Execution,
    progress: &mut dyn FnMut(&HistoryRow),
) -> Result<EvolutionResult> {
    let state = CmaState::new(model.latent_dim(), &settings.cmaes, settings.seed)?;
    let optimizer = Optimizer::new(state, settings.budget)?.with_target(gallery.len() as f64);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    run(model, gallery, threshold, settings, optimizer, out_dir, execution, progress)
}

/// Continues a run from the checkpoint and history in `dir`.
pub fn resume_masterprint(
    model: &GeneratorModel,
    gallery: &PreparedGallery,
    threshold: &MatchThreshold,
    settings: &EvolveSettings,
    dir: &Path,
    execution: Execution,
    progress: &mut dyn FnMut(&HistoryRow),
) -> Result<EvolutionResult> {
    let state = CmaState::load_checkpoint(&dir.join(CHECKPOINT_FILE))?;
    if state.dim() != model.latent_dim() {
        return Err(Error::Config(format!(
            "checkpoint has dimension {} but the generator expects {}",
            state.dim(),
            model.latent_dim()
        )));
    }
    let history_path = dir.join(HISTORY_FILE);
    let text = std::fs::read_to_string(&history_path).map_err(|e| Error::io(&history_path, e))?;
    let mut history = HistoryRow::parse_csv(&text)?;
    // the history is written first, so it may hold one generation more
    if (history.len() as u64) < state.generation() {
        return Err(Error::Corruption(format!(
            "history has {} rows, checkpoint is at generation {}",
            history.len(),
            state.generation()
        )));
    }
    history.truncate(state.generation() as usize);
    let optimizer =
        Optimizer::resume(state, history, settings.budget)?.with_target(gallery.len() as f64);
    run(model, gallery, threshold, settings, optimizer, Some(dir), execution, progress)
}

#[allow(clippy::too_many_arguments)]
fn run(
    model: &GeneratorModel,
    gallery: &PreparedGallery,
    threshold: &MatchThreshold,
    settings: &EvolveSettings,
    mut optimizer: Optimizer,
    out_dir: Option<&Path>,
    execution: Execution,
    progress: &mut dyn FnMut(&HistoryRow),
) -> Result<EvolutionResult> {
    let fitness = Fitness::new(model, gallery, threshold, settings.fitness)?;
    let stop = optimizer.run(
        |population| {
            execution
                .map_slice(population, |z| fitness.evaluate(z))
                .into_iter()
                .collect()
        },
        |opt| {
            if let Some(dir) = out_dir {
                checkpoint(dir, opt)?;
            }
            if let Some(row) = opt.history().last() {
                progress(row);
            }
            Ok(())
        },
    )?;
    let result = optimizer.result(stop);
    let best_latent = LatentVector::new(result.best_x)?;
    let best_image = fitness.image(best_latent.values())?;
    let counted = Fitness::new(model, gallery, threshold, FitnessKind::Count)?;
    Ok(EvolutionResult {
        fitness_train: counted.of_image(&best_image) as usize,
        best_fitness: result.best_f,
        identities: gallery.len(),
        best_latent,
        best_image,
        history: result.history,
        thresholds: vec![threshold.clone()],
        stop,
        settings: *settings,
    })
}
