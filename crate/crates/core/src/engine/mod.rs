//! Latent variable evolution: the identity-count fitness, evolution runs,
//! held-out evaluation and the random-latent baseline.

mod evolve;
mod report;

pub use evolve::{
    evolve_masterprint, resume_masterprint, EvolutionResult, EvolveSettings, CHECKPOINT_FILE,
    HISTORY_FILE,
};
pub use report::{evaluate_masterprint, random_baseline, BaselineSummary, ReportRow};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gallery::{MatchThreshold, PreparedGallery};
use crate::generator::{generate, GeneratorModel, LatentVector};
use crate::matcher::{is_match, PreparedTemplate};
use crate::minutiae::extract;
use crate::raster::GrayImage;

/// Weight of the tie-break term in [`FitnessKind::Smoothed`].
pub const SMOOTHING_WEIGHT: f64 = 1e-3;

/// Which objective drives evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessKind {
    /// Number of identities matched.
    #[default]
    Count,
    /// Identity count plus `1e-3 · mean_i s_i / (s_i + t)` over each
    /// identity's best score `s_i` at threshold `t`; stays below count + 1e-3.
    Smoothed,
}

fn check_matcher(gallery: &PreparedGallery, threshold: &MatchThreshold) -> Result<()> {
    if threshold.matcher_id != gallery.matcher.id {
        return Err(Error::Config(format!(
            "threshold is for matcher {:?} but the gallery uses {:?}",
            threshold.matcher_id, gallery.matcher.id
        )));
    }
    Ok(())
}

/// Identities with at least one partial matching `probe`, stopping at the
/// first match within each identity.
pub fn count_matches(probe: &PreparedTemplate, gallery: &PreparedGallery, threshold: &MatchThreshold) -> usize {
    let matcher = &gallery.matcher;
    gallery
        .identities
        .iter()
        .filter(|(_, partials)| {
            partials
                .iter()
                .any(|t| is_match(matcher.score(probe, t), threshold))
        })
        .count()
}

/// Extracts `img` once and counts the identities it matches.
pub fn matching_score(img: &GrayImage, gallery: &PreparedGallery, threshold: &MatchThreshold) -> Result<usize> {
    check_matcher(gallery, threshold)?;
    let probe = gallery.matcher.prepare(&extract(img));
    Ok(count_matches(&probe, gallery, threshold))
}

fn smoothed(probe: &PreparedTemplate, gallery: &PreparedGallery, threshold: &MatchThreshold) -> f64 {
    if gallery.is_empty() {
        return 0.0;
    }
    let matcher = &gallery.matcher;
    let t = threshold.score as f64;
    let mut count = 0usize;
    let mut closeness = 0.0;
    for (_, partials) in &gallery.identities {
        let best = partials.iter().map(|p| matcher.score(probe, p).0).max().unwrap_or(0);
        if best >= threshold.score {
            count += 1;
        }
        let s = best as f64;
        if s + t > 0.0 {
            closeness += s / (s + t);
        }
    }
    count as f64 + SMOOTHING_WEIGHT * closeness / gallery.len() as f64
}

/// The fitness of a latent vector against one gallery at one threshold.
#[derive(Debug, Clone)]
pub struct Fitness<'a> {
    pub model: &'a GeneratorModel,
    pub gallery: &'a PreparedGallery,
    pub threshold: &'a MatchThreshold,
    pub kind: FitnessKind,
}

impl<'a> Fitness<'a> {
    pub fn new(
        model: &'a GeneratorModel,
        gallery: &'a PreparedGallery,
        threshold: &'a MatchThreshold,
        kind: FitnessKind,
    ) -> Result<Self> {
        check_matcher(gallery, threshold)?;
        Ok(Fitness {
            model,
            gallery,
            threshold,
            kind,
        })
    }

    pub fn image(&self, z: &[f64]) -> Result<GrayImage> {
        generate(self.model, &LatentVector::new(z.to_vec())?)
    }

    pub fn of_image(&self, img: &GrayImage) -> f64 {
        let probe = self.gallery.matcher.prepare(&extract(img));
        match self.kind {
            FitnessKind::Count => count_matches(&probe, self.gallery, self.threshold) as f64,
            FitnessKind::Smoothed => smoothed(&probe, self.gallery, self.threshold),
        }
    }

    pub fn evaluate(&self, z: &[f64]) -> Result<f64> {
        Ok(self.of_image(&self.image(z)?))
    }
}
