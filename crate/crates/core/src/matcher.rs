//! Rotation- and translation-invariant minutiae matching on edge tables.
//!
//! Each template is reduced to an [`EdgeTable`] of minutia pairs described
//! by length and the two minutia directions relative to the connecting
//! segment. Two edges are compatible when those features agree within
//! tolerance; each compatible edge pair implies a rigid motion (rotation
//! from the segment directions, translation from the segment midpoints).
//! Every compatible pair seeds a cluster of the pairs whose implied motion
//! agrees with the seed's, and the score is the size of the largest cluster
//! counted as `min(distinct edges of a, distinct edges of b)`.
//!
//! Scores only shrink when pairs are removed, which makes the score
//! monotone under minutia deletion, and a template's self-score is exactly
//! its edge count.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gallery::MatchThreshold;
use crate::minutiae::MinutiaeTemplate;

/// Matcher tolerances. Serialized as the matcher parameter file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatcherConfig {
    /// Longest edge kept in an edge table.
    pub d_max_px: f64,
    /// Absolute edge-length tolerance.
    pub dist_tol_px: f64,
    /// Relative edge-length tolerance (fraction of the first edge's length).
    pub dist_tol_rel: f64,
    /// Tolerance on each relative minutia angle.
    pub angle_tol_deg: f64,
    /// Allowed spread of implied rotations within one cluster.
    pub rotation_tol_deg: f64,
    /// Allowed displacement of an edge midpoint under a cluster's motion.
    #[serde(default = "default_position_tol")]
    pub position_tol_px: f64,
}

fn default_position_tol() -> f64 {
    10.0
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            d_max_px: 75.0,
            dist_tol_px: 4.0,
            dist_tol_rel: 0.08,
            angle_tol_deg: 11.25,
            rotation_tol_deg: 22.5,
            position_tol_px: default_position_tol(),
        }
    }
}

impl MatcherConfig {
    /// Same edge range, every tolerance halved.
    pub fn strict() -> Self {
        let d = MatcherConfig::default();
        MatcherConfig {
            dist_tol_px: d.dist_tol_px / 2.0,
            dist_tol_rel: d.dist_tol_rel / 2.0,
            angle_tol_deg: d.angle_tol_deg / 2.0,
            rotation_tol_deg: d.rotation_tol_deg / 2.0,
            position_tol_px: d.position_tol_px / 2.0,
            ..d
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("d_max_px", self.d_max_px),
            ("dist_tol_px", self.dist_tol_px),
            ("dist_tol_rel", self.dist_tol_rel),
            ("angle_tol_deg", self.angle_tol_deg),
            ("rotation_tol_deg", self.rotation_tol_deg),
            ("position_tol_px", self.position_tol_px),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be a non-negative number")));
            }
        }
        if self.d_max_px <= 0.0 {
            return Err(Error::Config("d_max_px must be positive".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: MatcherConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Similarity of two templates: size of the largest consistent cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatchScore(pub u32);

/// One minutia pair of a template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub d: f64,
    /// Direction of minutia `i` relative to the segment `i → j`, `[0, 2π)`.
    pub beta1: f64,
    /// Direction of minutia `j` relative to the segment `i → j`, `[0, 2π)`.
    pub beta2: f64,
    /// Direction of the segment `i → j`.
    pub phi: f64,
    pub mid: (f64, f64),
}

/// Edges of one template, ascending by length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeTable {
    pub entries: Vec<Edge>,
}

impl EdgeTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Builds the edge table of all pairs no longer than `d_max`.
pub fn build_edge_table(t: &MinutiaeTemplate, d_max: f64) -> EdgeTable {
    let m = &t.minutiae;
    let mut entries = Vec::new();
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            let (dx, dy) = (m[j].x - m[i].x, m[j].y - m[i].y);
            let d = (dx * dx + dy * dy).sqrt();
            if d > d_max {
                continue;
            }
            let phi = dy.atan2(dx);
            entries.push(Edge {
                i,
                j,
                d,
                beta1: (m[i].theta - phi).rem_euclid(TAU),
                beta2: (m[j].theta - phi).rem_euclid(TAU),
                phi,
                mid: ((m[i].x + m[j].x) / 2.0, (m[i].y + m[j].y) / 2.0),
            });
        }
    }
    entries.sort_by(|a, b| a.d.total_cmp(&b.d).then(a.i.cmp(&b.i)).then(a.j.cmp(&b.j)));
    EdgeTable { entries }
}

/// Absolute difference of two angles on the circle, `[0, π]`.
#[inline]
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// [`angle_diff`] for two angles already in `[0, 2π)`.
#[inline]
fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// `a + π` wrapped into `[0, 2π)`, for `a` in `[0, 2π)`.
#[inline]
fn half_turn(a: f64) -> f64 {
    if a >= PI {
        a - PI
    } else {
        a + PI
    }
}

/// A template with its edge table, ready for repeated matching.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreparedTemplate {
    pub template: MinutiaeTemplate,
    pub edges: EdgeTable,
}

/// A compatible edge pair and the rigid motion it implies.
#[derive(Debug, Clone, Copy)]
struct Correspondence {
    a: u32,
    b: u32,
    /// Rotation taking the `a` segment onto the `b` segment, `(-π, π]`.
    rot: f64,
    mid_a: (f64, f64),
    mid_b: (f64, f64),
    /// Length test passes with tolerance relative to the `a` edge.
    forward: bool,
    /// Length test passes with tolerance relative to the `b` edge.
    backward: bool,
}

/// A configured matcher variant.
#[derive(Debug, Clone, PartialEq)]
pub struct Matcher {
    pub id: String,
    pub config: MatcherConfig,
}

/// Identifiers accepted by [`Matcher::by_id`].
pub const MATCHER_IDS: [&str; 2] = ["default", "strict"];

impl Default for Matcher {
    fn default() -> Self {
        Matcher {
            id: "default".into(),
            config: MatcherConfig::default(),
        }
    }
}

impl Matcher {
    pub fn new(id: impl Into<String>, config: MatcherConfig) -> Result<Self> {
        config.validate()?;
        Ok(Matcher {
            id: id.into(),
            config,
        })
    }

    pub fn strict() -> Self {
        Matcher {
            id: "strict".into(),
            config: MatcherConfig::strict(),
        }
    }

    pub fn by_id(id: &str) -> Result<Self> {
        match id {
            "default" => Ok(Matcher::default()),
            "strict" => Ok(Matcher::strict()),
            other => Err(Error::Config(format!(
                "unknown matcher {other:?}; available: {}",
                MATCHER_IDS.join(", ")
            ))),
        }
    }

    pub fn prepare(&self, template: &MinutiaeTemplate) -> PreparedTemplate {
        PreparedTemplate {
            edges: build_edge_table(template, self.config.d_max_px),
            template: template.clone(),
        }
    }

    pub fn match_templates(&self, a: &MinutiaeTemplate, b: &MinutiaeTemplate) -> MatchScore {
        self.score(&self.prepare(a), &self.prepare(b))
    }

    /// Symmetric similarity score of two prepared templates.
    pub fn score(&self, a: &PreparedTemplate, b: &PreparedTemplate) -> MatchScore {
        let pairs = self.correspondences(&a.edges, &b.edges);
        if pairs.is_empty() {
            return MatchScore(0);
        }
        let (na, nb) = (a.edges.len(), b.edges.len());
        if pairs.iter().all(|p| p.forward && p.backward) {
            // both directed scores are computed over the same pair set
            return MatchScore(self.largest_cluster(&pairs, na, nb));
        }
        let forward: Vec<_> = pairs.iter().copied().filter(|p| p.forward).collect();
        let backward: Vec<_> = pairs.iter().copied().filter(|p| p.backward).collect();
        MatchScore(
            self.largest_cluster(&forward, na, nb)
                .max(self.largest_cluster(&backward, na, nb)),
        )
    }

    fn correspondences(&self, a: &EdgeTable, b: &EdgeTable) -> Vec<Correspondence> {
        let cfg = &self.config;
        let angle_tol = cfg.angle_tol_deg.to_radians();
        let mut out = Vec::new();
        for (ia, ea) in a.entries.iter().enumerate() {
            // widest gap either direction accepts: rel·dB ≥ gap with
            // dB ≤ dA + gap gives gap ≤ rel·dA / (1 − rel)
            let reach = if cfg.dist_tol_rel < 1.0 {
                cfg.dist_tol_px.max(cfg.dist_tol_rel * ea.d / (1.0 - cfg.dist_tol_rel))
            } else {
                f64::INFINITY
            };
            let lo = ea.d - reach;
            let start = b.entries.partition_point(|e| e.d < lo);
            for (ib, eb) in b.entries.iter().enumerate().skip(start) {
                if eb.d > ea.d + reach {
                    break;
                }
                let gap = (ea.d - eb.d).abs();
                let forward = gap <= cfg.dist_tol_px.max(cfg.dist_tol_rel * ea.d);
                let backward = gap <= cfg.dist_tol_px.max(cfg.dist_tol_rel * eb.d);
                if !forward && !backward {
                    continue;
                }
                // b traversed i -> j, then j -> i
                let orientations = [
                    (eb.beta1, eb.beta2, eb.phi),
                    (half_turn(eb.beta2), half_turn(eb.beta1), eb.phi + PI),
                ];
                for (b1, b2, phi) in orientations {
                    if circular_gap(ea.beta1, b1) <= angle_tol && circular_gap(ea.beta2, b2) <= angle_tol {
                        let mut rot = phi - ea.phi;
                        while rot > PI {
                            rot -= TAU;
                        }
                        while rot <= -PI {
                            rot += TAU;
                        }
                        out.push(Correspondence {
                            a: ia as u32,
                            b: ib as u32,
                            rot,
                            mid_a: ea.mid,
                            mid_b: eb.mid,
                            forward,
                            backward,
                        });
                    }
                }
            }
        }
        out
    }

    /// Largest `min(distinct a edges, distinct b edges)` over clusters seeded
    /// by each correspondence.
    fn largest_cluster(&self, pairs: &[Correspondence], na: usize, nb: usize) -> u32 {
        if pairs.is_empty() {
            return 0;
        }
        let rot_tol = self.config.rotation_tol_deg.to_radians();
        let pos_tol2 = self.config.position_tol_px * self.config.position_tol_px;
        let mut sorted = pairs.to_vec();
        sorted.sort_by(|x, y| x.rot.total_cmp(&y.rot).then(x.a.cmp(&y.a)).then(x.b.cmp(&y.b)));
        let rots: Vec<f64> = sorted.iter().map(|p| p.rot).collect();
        let n = sorted.len();
        let cap = na.min(nb) as u32;

        let mut stamp_a = vec![u32::MAX; na];
        let mut stamp_b = vec![u32::MAX; nb];
        let mut best = 0u32;
        for (s, seed) in sorted.iter().enumerate() {
            let (sin, cos) = seed.rot.sin_cos();
            let (tx, ty) = (
                seed.mid_b.0 - (cos * seed.mid_a.0 - sin * seed.mid_a.1),
                seed.mid_b.1 - (sin * seed.mid_a.0 + cos * seed.mid_a.1),
            );
            let (mut count_a, mut count_b) = (0u32, 0u32);
            let mut visit = |q: &Correspondence| {
                let gap = (q.rot - seed.rot).abs();
                if gap.min(TAU - gap) > rot_tol {
                    return;
                }
                let px = cos * q.mid_a.0 - sin * q.mid_a.1 + tx - q.mid_b.0;
                let py = sin * q.mid_a.0 + cos * q.mid_a.1 + ty - q.mid_b.1;
                if px * px + py * py > pos_tol2 {
                    return;
                }
                if stamp_a[q.a as usize] != s as u32 {
                    stamp_a[q.a as usize] = s as u32;
                    count_a += 1;
                }
                if stamp_b[q.b as usize] != s as u32 {
                    stamp_b[q.b as usize] = s as u32;
                    count_b += 1;
                }
            };
            // rotation window [rot - tol, rot + tol], wrapping around ±π
            let lo = seed.rot - rot_tol;
            let hi = seed.rot + rot_tol;
            let first = rots.partition_point(|r| *r < lo.max(-PI));
            let last = rots.partition_point(|r| *r <= hi.min(PI));
            for q in &sorted[first..last] {
                visit(q);
            }
            if lo < -PI {
                let from = rots.partition_point(|r| *r < lo + TAU).max(last);
                for q in &sorted[from..n] {
                    visit(q);
                }
            }
            if hi > PI {
                let to = rots.partition_point(|r| *r <= hi - TAU).min(first);
                for q in &sorted[..to] {
                    visit(q);
                }
            }
            best = best.max(count_a.min(count_b));
            if best == cap {
                break;
            }
        }
        best
    }
}

/// Decision rule: a score at or above the calibrated threshold matches.
#[inline]
pub fn is_match(score: MatchScore, threshold: &MatchThreshold) -> bool {
    score.0 >= threshold.score
}

/// Score of two templates under the default matcher.
pub fn match_score(a: &MinutiaeTemplate, b: &MinutiaeTemplate) -> MatchScore {
    Matcher::default().match_templates(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minutiae::{Minutia, MinutiaKind};

    fn template(points: &[(f64, f64, f64)]) -> MinutiaeTemplate {
        MinutiaeTemplate::new(
            points
                .iter()
                .map(|&(x, y, t)| Minutia::new(x, y, t, MinutiaKind::Ending, 1.0))
                .collect(),
            200,
            200,
        )
    }

    #[test]
    fn tiny_templates_have_empty_tables() {
        assert!(build_edge_table(&template(&[]), 75.0).is_empty());
        assert!(build_edge_table(&template(&[(5.0, 5.0, 1.0)]), 75.0).is_empty());
    }

    #[test]
    fn aligned_pair_has_zero_betas() {
        let t = template(&[(10.0, 10.0, 0.0), (20.0, 10.0, 0.0)]);
        let e = build_edge_table(&t, 75.0);
        assert_eq!(e.len(), 1);
        assert_eq!(e.entries[0].d, 10.0);
        assert_eq!((e.entries[0].beta1, e.entries[0].beta2), (0.0, 0.0));
    }

    #[test]
    fn four_close_minutiae_give_six_edges() {
        let t = template(&[(0.0, 0.0, 0.1), (30.0, 5.0, 2.0), (12.0, 40.0, 4.0), (44.0, 33.0, 5.5)]);
        let e = build_edge_table(&t, 75.0);
        assert_eq!(e.len(), 6);
        assert!(e.entries.windows(2).all(|w| w[0].d <= w[1].d));
    }

    #[test]
    fn long_pairs_are_dropped() {
        let t = template(&[(0.0, 0.0, 0.0), (80.0, 0.0, 0.0)]);
        assert!(build_edge_table(&t, 75.0).is_empty());
    }

    #[test]
    fn self_score_and_empty() {
        let t = template(&[(10.0, 10.0, 0.3), (40.0, 12.0, 2.0), (25.0, 50.0, 4.1), (60.0, 45.0, 1.0)]);
        let edges = build_edge_table(&t, 75.0).len() as u32;
        assert_eq!(match_score(&t, &t), MatchScore(edges));
        assert_eq!(match_score(&t, &template(&[])), MatchScore(0));
        assert_eq!(match_score(&template(&[]), &t), MatchScore(0));
    }

    #[test]
    fn threshold_is_inclusive() {
        let thr = MatchThreshold {
            fmr: 0.01,
            score: 12,
            matcher_id: "default".into(),
            calibration_pairs: 1000,
            empirical_fmr: 0.01,
        };
        assert!(is_match(MatchScore(12), &thr));
        assert!(!is_match(MatchScore(11), &thr));
    }

    #[test]
    fn unknown_matcher_lists_alternatives() {
        let err = Matcher::by_id("veri").unwrap_err().to_string();
        assert!(err.contains("default") && err.contains("strict"));
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = MatcherConfig::strict();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<MatcherConfig>(&text).unwrap(), cfg);
        let legacy = r#"{"d_max_px":75,"dist_tol_px":4,"dist_tol_rel":0.08,"angle_tol_deg":11.25,"rotation_tol_deg":22.5}"#;
        assert_eq!(serde_json::from_str::<MatcherConfig>(legacy).unwrap(), MatcherConfig::default());
    }
}
