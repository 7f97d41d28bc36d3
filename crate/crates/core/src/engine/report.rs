use serde::{Deserialize, Serialize};

use super::{check_matcher, count_matches, Fitness, FitnessKind};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gallery::{MatchThreshold, PreparedGallery};
use crate::generator::{random_latents, GeneratorModel};
use crate::minutiae::extract;
use crate::raster::GrayImage;

/// Identities matched at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub matcher_id: String,
    pub fmr: f64,
    pub threshold: u32,
    pub matched: usize,
    pub identities: usize,
    pub percent: f64,
}

impl ReportRow {
    pub const CSV_HEADER: &'static str = "matcher_id,fmr,threshold,matched,identities,percent";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:.2}",
            self.matcher_id, self.fmr, self.threshold, self.matched, self.identities, self.percent
        )
    }
}

/// Percentage of `gallery` identities matched by `img` at each threshold.
pub fn evaluate_masterprint(
    img: &GrayImage,
    gallery: &PreparedGallery,
    thresholds: &[MatchThreshold],
) -> Result<Vec<ReportRow>> {
    for thr in thresholds {
        check_matcher(gallery, thr)?;
    }
    let probe = gallery.matcher.prepare(&extract(img));
    Ok(thresholds
        .iter()
        .map(|thr| {
            let matched = count_matches(&probe, gallery, thr);
            let identities = gallery.len();
            ReportRow {
                matcher_id: thr.matcher_id.clone(),
                fmr: thr.fmr,
                threshold: thr.score,
                matched,
                identities,
                percent: if identities == 0 {
                    0.0
                } else {
                    100.0 * matched as f64 / identities as f64
                },
            }
        })
        .collect())
}

/// Fitness distribution of random `N(0, I)` latents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub samples: usize,
    pub min: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
    pub mean: f64,
    /// In sampling order.
    pub values: Vec<f64>,
}

/// Linearly interpolated quantile of ascending `sorted`.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl BaselineSummary {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("baseline needs at least one sample".into()));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(BaselineSummary {
            samples: values.len(),
            min: sorted[0],
            median: quantile(&sorted, 0.5),
            p95: quantile(&sorted, 0.95),
            max: sorted[sorted.len() - 1],
            mean: values.iter().sum::<f64>() / values.len() as f64,
            values,
        })
    }
}

/// Fitness of `samples` seeded random latents.
pub fn random_baseline(
    model: &GeneratorModel,
    gallery: &PreparedGallery,
    threshold: &MatchThreshold,
    samples: usize,
    seed: u64,
    kind: FitnessKind,
    execution: Execution,
) -> Result<BaselineSummary> {
    let fitness = Fitness::new(model, gallery, threshold, kind)?;
    let latents = random_latents(model.latent_dim(), samples, seed);
    let values = execution
        .map_slice(&latents, |z| fitness.evaluate(z.values()))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    BaselineSummary::from_values(values)
}
