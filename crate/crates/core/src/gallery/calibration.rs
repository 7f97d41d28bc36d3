use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PreparedGallery;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matcher::{is_match, MatchScore};

/// Impostor pairs sampled when calibrating, capped by the pairs available.
pub const DEFAULT_CALIBRATION_PAIRS: usize = 50_000;

/// A calibrated decision threshold for one matcher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchThreshold {
    pub fmr: f64,
    pub score: u32,
    pub matcher_id: String,
    pub calibration_pairs: u64,
    /// Pass rate of the calibration sample at `score`.
    pub empirical_fmr: f64,
}

impl MatchThreshold {
    /// Fewer than `10 / fmr` calibration pairs back this threshold.
    pub fn low_confidence(&self) -> bool {
        (self.calibration_pairs as f64) < 10.0 / self.fmr
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let thr: MatchThreshold = serde_json::from_str(&text)?;
        if !(thr.fmr > 0.0 && thr.fmr <= 1.0) {
            return Err(Error::Calibration(format!("{}: fmr {} outside (0, 1]", path.display(), thr.fmr)));
        }
        Ok(thr)
    }
}

/// Scores of sampled cross-identity template pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpostorSample {
    /// Ascending.
    pub scores: Vec<MatchScore>,
    /// Cross-identity pairs available in the gallery.
    pub total_pairs: u64,
}

impl ImpostorSample {
    /// Fraction of the sample at or above `threshold`.
    pub fn pass_rate(&self, threshold: u32) -> f64 {
        pass_rate(&self.scores, threshold)
    }
}

fn pass_rate(sorted: &[MatchScore], threshold: u32) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let below = sorted.partition_point(|s| s.0 < threshold);
    (sorted.len() - below) as f64 / sorted.len() as f64
}

/// Unordered cross-identity template pairs, addressed by a flat index.
///
/// Templates are grouped by identity, so the partners of template `u` that
/// come after it are exactly those from the end of its identity onwards.
struct PairIndex {
    /// Start of the block of pairs whose first template is `u`.
    offsets: Vec<u64>,
    /// End of each template's identity block.
    identity_end: Vec<usize>,
}

impl PairIndex {
    fn new(gallery: &PreparedGallery) -> Self {
        let n = gallery.template_count();
        let mut identity_end = Vec::with_capacity(n);
        let mut end = 0;
        for (_, templates) in &gallery.identities {
            end += templates.len();
            identity_end.extend(std::iter::repeat_n(end, templates.len()));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0u64);
        for u in 0..n {
            offsets.push(offsets[u] + (n - identity_end[u]) as u64);
        }
        PairIndex { offsets, identity_end }
    }

    fn total(&self) -> u64 {
        *self.offsets.last().unwrap_or(&0)
    }

    fn decode(&self, p: u64) -> (usize, usize) {
        let u = self.offsets.partition_point(|&o| o <= p) - 1;
        (u, self.identity_end[u] + (p - self.offsets[u]) as usize)
    }
}

/// Scores `sample_pairs` cross-identity pairs drawn uniformly without
/// replacement, or every pair when fewer exist.
pub fn impostor_scores(
    gallery: &PreparedGallery,
    sample_pairs: usize,
    seed: u64,
    execution: Execution,
) -> Result<ImpostorSample> {
    let index = PairIndex::new(gallery);
    let total = index.total();
    if total == 0 {
        return Err(Error::Calibration(
            "impostor scoring needs templates from at least two identities".into(),
        ));
    }
    let pairs: Vec<u64> = if sample_pairs as u64 >= total {
        (0..total).collect()
    } else {
        let total = usize::try_from(total)
            .map_err(|_| Error::Calibration("too many template pairs to sample".into()))?;
        let mut picked: Vec<u64> =
            rand::seq::index::sample(&mut ChaCha8Rng::seed_from_u64(seed), total, sample_pairs)
                .into_iter()
                .map(|p| p as u64)
                .collect();
        picked.sort_unstable();
        picked
    };
    let templates: Vec<_> = gallery.identities.iter().flat_map(|(_, t)| t.iter()).collect();
    let matcher = &gallery.matcher;
    let mut scores = execution.map_slice(&pairs, |&p| {
        let (u, v) = index.decode(p);
        matcher.score(templates[u], templates[v])
    });
    scores.sort_unstable();
    Ok(ImpostorSample { scores, total_pairs: total })
}

/// Smallest observed score `t` (or `max + 1`) whose pass rate is at most
/// `fmr`.
pub fn threshold_for_fmr(scores: &[MatchScore], fmr: f64, matcher_id: &str) -> Result<MatchThreshold> {
    if !(fmr > 0.0 && fmr <= 1.0) {
        return Err(Error::Argument(format!("fmr must lie in (0, 1], got {fmr}")));
    }
    if scores.is_empty() {
        return Err(Error::Calibration("no impostor scores to calibrate on".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let allowed = (fmr * n as f64 + 1e-9).floor() as usize;
    let mut score = sorted[n - 1].0 + 1;
    let mut start = 0;
    while start < n {
        let t = sorted[start].0;
        if n - start <= allowed {
            score = t;
            break;
        }
        start += sorted[start..].partition_point(|s| s.0 == t);
    }
    Ok(MatchThreshold {
        fmr,
        score,
        matcher_id: matcher_id.to_string(),
        calibration_pairs: n as u64,
        empirical_fmr: pass_rate(&sorted, score),
    })
}

/// Fraction of sampled cross-identity pairs accepted at `threshold`.
pub fn empirical_fmr(
    gallery: &PreparedGallery,
    threshold: &MatchThreshold,
    sample_pairs: usize,
    seed: u64,
    execution: Execution,
) -> Result<f64> {
    if threshold.matcher_id != gallery.matcher.id {
        return Err(Error::Calibration(format!(
            "threshold calibrated for matcher {:?}, gallery prepared for {:?}",
            threshold.matcher_id, gallery.matcher.id
        )));
    }
    let sample = impostor_scores(gallery, sample_pairs, seed, execution)?;
    let accepted = sample.scores.iter().filter(|s| is_match(**s, threshold)).count();
    Ok(accepted as f64 / sample.scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{enroll, Gallery};
    use crate::matcher::Matcher;

    fn scores(v: &[u32]) -> Vec<MatchScore> {
        v.iter().copied().map(MatchScore).collect()
    }

    #[test]
    fn order_statistic_rule() {
        let s = scores(&[0, 0, 0, 0, 0, 0, 0, 0, 0, 10]);
        let t = threshold_for_fmr(&s, 0.1, "default").unwrap();
        assert_eq!(t.score, 10);
        assert_eq!(t.empirical_fmr, 0.1);
        assert_eq!(threshold_for_fmr(&s, 1.0, "default").unwrap().score, 0);
        assert_eq!(threshold_for_fmr(&s, 0.05, "default").unwrap().score, 11);
    }

    #[test]
    fn fmr_one_is_minimum() {
        let s = scores(&[4, 9, 7, 5]);
        assert_eq!(threshold_for_fmr(&s, 1.0, "x").unwrap().score, 4);
    }

    #[test]
    fn bad_inputs() {
        assert!(threshold_for_fmr(&[], 0.1, "x").is_err());
        assert!(threshold_for_fmr(&scores(&[1]), 0.0, "x").is_err());
        assert!(threshold_for_fmr(&scores(&[1]), 1.5, "x").is_err());
    }

    #[test]
    fn low_confidence_flag() {
        let mut t = threshold_for_fmr(&scores(&vec![1; 999]), 0.01, "x").unwrap();
        assert!(t.low_confidence());
        t.calibration_pairs = 1000;
        assert!(!t.low_confidence());
    }

    #[test]
    fn pair_index_enumerates_cross_pairs() {
        let tg = enroll(&Gallery::synthetic(3, 2, 1), Execution::Sequential);
        let pg = tg.prepare(&Matcher::default(), Execution::Sequential);
        let index = PairIndex::new(&pg);
        assert_eq!(index.total(), 12);
        let pairs: Vec<_> = (0..12).map(|p| index.decode(p)).collect();
        assert!(pairs.iter().all(|&(u, v)| u < v && u / 2 != v / 2));
        let unique: std::collections::HashSet<_> = pairs.iter().collect();
        assert_eq!(unique.len(), 12);
    }

    #[test]
    fn sampling_counts_and_determinism() {
        let tg = enroll(&Gallery::synthetic(4, 2, 1), Execution::Sequential);
        let pg = tg.prepare(&Matcher::default(), Execution::Sequential);
        let all = impostor_scores(&pg, 1000, 0, Execution::Sequential).unwrap();
        assert_eq!((all.scores.len(), all.total_pairs), (24, 24));
        let a = impostor_scores(&pg, 10, 3, Execution::Sequential).unwrap();
        let b = impostor_scores(&pg, 10, 3, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.scores.len(), 10);
    }

    #[test]
    fn single_pair_and_single_identity() {
        let tg = enroll(&Gallery::synthetic(2, 1, 1), Execution::Sequential);
        let pg = tg.prepare(&Matcher::default(), Execution::Sequential);
        assert_eq!(impostor_scores(&pg, 50, 0, Execution::Sequential).unwrap().scores.len(), 1);
        let one = enroll(&Gallery::synthetic(1, 3, 1), Execution::Sequential)
            .prepare(&Matcher::default(), Execution::Sequential);
        assert!(matches!(impostor_scores(&one, 50, 0, Execution::Sequential), Err(Error::Calibration(_))));
    }

    #[test]
    fn empirical_fmr_extremes_and_matcher_check() {
        let tg = enroll(&Gallery::synthetic(3, 2, 1), Execution::Sequential);
        let pg = tg.prepare(&Matcher::default(), Execution::Sequential);
        let mut thr = threshold_for_fmr(&scores(&[0]), 1.0, "default").unwrap();
        assert_eq!(empirical_fmr(&pg, &thr, 100, 0, Execution::Sequential).unwrap(), 1.0);
        thr.score = 100_000;
        assert_eq!(empirical_fmr(&pg, &thr, 100, 0, Execution::Sequential).unwrap(), 0.0);
        thr.matcher_id = "strict".into();
        assert!(empirical_fmr(&pg, &thr, 100, 0, Execution::Sequential).is_err());
    }

    #[test]
    fn threshold_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = threshold_for_fmr(&scores(&[1, 2, 3, 4]), 0.25, "strict").unwrap();
        let path = dir.path().join("t.json");
        t.save(&path).unwrap();
        assert_eq!(MatchThreshold::load(&path).unwrap(), t);
        let text = std::fs::read_to_string(&path).unwrap();
        for key in ["fmr", "score", "matcher_id", "calibration_pairs", "empirical_fmr"] {
            assert!(text.contains(key));
        }
    }
}
