use std::f64::consts::PI;

use super::orientation::OrientationField;
use super::skeleton::{transitions, BinaryImage, NEIGHBOURS};
use super::{Minutia, MinutiaKind, MinutiaeTemplate};

/// Minutiae closer than this to background or the image edge are dropped.
pub const BORDER_MARGIN: f64 = 10.0;
/// Opposite-type pairs closer than this are bridge/spur artifacts.
pub const SPUR_RADIUS: f64 = 6.0;
/// No two kept minutiae are closer than this.
pub const DUPLICATE_RADIUS: f64 = 6.0;
/// Blocks below this coherence are background.
pub const MIN_COHERENCE: f64 = 0.25;
/// Blocks below this intensity variance are background.
pub const MIN_VARIANCE: f64 = 200.0;
/// Geodesic length, in pixels, of the branch walk used to orient minutiae.
const TRACE_LEN: usize = 8;

/// Foreground mask per block.
pub fn segment(field: &OrientationField) -> Vec<bool> {
    field
        .coherence
        .iter()
        .zip(&field.variance)
        .map(|(c, v)| *c >= MIN_COHERENCE && *v >= MIN_VARIANCE)
        .collect()
}

struct Candidate {
    x: usize,
    y: usize,
    kind: MinutiaKind,
}

fn near_background(
    x: usize,
    y: usize,
    width: usize,
    height: usize,
    field: &OrientationField,
    foreground: &[bool],
) -> bool {
    let r = BORDER_MARGIN as isize;
    for dy in -r..=r {
        for dx in -r..=r {
            if ((dx * dx + dy * dy) as f64) >= BORDER_MARGIN * BORDER_MARGIN {
                continue;
            }
            let (px, py) = (x as isize + dx, y as isize + dy);
            if px < 0 || py < 0 || px >= width as isize || py >= height as isize {
                return true;
            }
            if !foreground[field.block_of(px as usize, py as usize)] {
                return true;
            }
        }
    }
    false
}

/// Mean offset from `(x, y)` to the skeleton pixels reachable within
/// [`TRACE_LEN`] steps through each branch, summed over branches as unit
/// vectors.
fn branch_vectors(sk: &BinaryImage, x: usize, y: usize) -> Vec<(f64, f64)> {
    let idx = |px: isize, py: isize| py as usize * sk.width + px as usize;
    let (cx, cy) = (x as isize, y as isize);
    let ring = sk.ring(x, y);
    let at = |k: usize| (cx + NEIGHBOURS[k].0, cy + NEIGHBOURS[k].1);

    // each circular run of on-neighbours starts one branch
    let mut runs: Vec<Vec<(isize, isize)>> = Vec::new();
    if let Some(off) = (0..8).find(|&k| !ring[k]) {
        for step in 1..=8 {
            let k = (off + step) % 8;
            if !ring[k] {
                continue;
            }
            if ring[(k + 7) % 8] && !runs.is_empty() {
                runs.last_mut().unwrap().push(at(k));
            } else {
                runs.push(vec![at(k)]);
            }
        }
    } else {
        runs.push((0..8).map(at).collect());
    }

    let mut visited = std::collections::HashSet::new();
    visited.insert(idx(cx, cy));
    for run in &runs {
        for &(px, py) in run {
            visited.insert(idx(px, py));
        }
    }
    let mut branches = Vec::with_capacity(runs.len());
    for run in runs {
        let mut frontier = run;
        let (mut sx, mut sy) = (0.0, 0.0);
        for _ in 0..TRACE_LEN {
            let mut next = Vec::new();
            for (px, py) in frontier {
                sx += (px - cx) as f64;
                sy += (py - cy) as f64;
                for (dx, dy) in NEIGHBOURS {
                    let (qx, qy) = (px + dx, py + dy);
                    if sk.get(qx, qy) && visited.insert(idx(qx, qy)) {
                        next.push((qx, qy));
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        let norm = (sx * sx + sy * sy).sqrt();
        if norm > 0.0 {
            branches.push((sx / norm, sy / norm));
        }
    }
    branches
}

/// Direction the minutia points along its ridge.
///
/// Endings point into their ridge. Bifurcations point away from the stem,
/// the branch outside the closest pair of branches.
fn branch_direction(sk: &BinaryImage, x: usize, y: usize, kind: MinutiaKind) -> (f64, f64) {
    let branches = branch_vectors(sk, x, y);
    if kind == MinutiaKind::Bifurcation && branches.len() == 3 {
        let dot = |a: (f64, f64), b: (f64, f64)| a.0 * b.0 + a.1 * b.1;
        let stem = (0..3)
            .max_by(|&p, &q| {
                let arms = |k: usize| dot(branches[(k + 1) % 3], branches[(k + 2) % 3]);
                arms(p).total_cmp(&arms(q))
            })
            .unwrap_or(0);
        return (-branches[stem].0, -branches[stem].1);
    }
    branches
        .iter()
        .fold((0.0, 0.0), |acc, b| (acc.0 + b.0, acc.1 + b.1))
}

/// Crossing-number minutiae detection with spurious-minutiae filtering.
///
/// Skeleton pixels with crossing number 1 are ridge endings and 3 are
/// bifurcations. Candidates in background blocks or within
/// [`BORDER_MARGIN`] of background or the image edge are dropped, opposite
/// type pairs closer than [`SPUR_RADIUS`] are removed together, and the
/// remainder is thinned to a [`DUPLICATE_RADIUS`] spacing.
///
/// The orientation of each minutia is the block ridge orientation, pointed
/// along the ridge: into the ridge for endings, toward the fork for
/// bifurcations.
pub fn detect_minutiae(skeleton: &BinaryImage, field: &OrientationField) -> MinutiaeTemplate {
    let (w, h) = (skeleton.width, skeleton.height);
    let foreground = segment(field);

    let mut candidates = Vec::new();
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            if !skeleton.data[y * w + x] {
                continue;
            }
            let kind = match transitions(&skeleton.ring(x, y)) {
                1 => MinutiaKind::Ending,
                3 => MinutiaKind::Bifurcation,
                _ => continue,
            };
            if near_background(x, y, w, h, field, &foreground) {
                continue;
            }
            candidates.push(Candidate { x, y, kind });
        }
    }

    let dist2 = |a: &Candidate, b: &Candidate| {
        let (dx, dy) = (a.x as f64 - b.x as f64, a.y as f64 - b.y as f64);
        dx * dx + dy * dy
    };
    let mut spurious = vec![false; candidates.len()];
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            if candidates[i].kind != candidates[j].kind
                && dist2(&candidates[i], &candidates[j]) < SPUR_RADIUS * SPUR_RADIUS
            {
                spurious[i] = true;
                spurious[j] = true;
            }
        }
    }

    let mut kept: Vec<&Candidate> = Vec::new();
    for (c, _) in candidates.iter().zip(&spurious).filter(|(_, s)| !**s) {
        if kept
            .iter()
            .all(|k| dist2(k, c) >= DUPLICATE_RADIUS * DUPLICATE_RADIUS)
        {
            kept.push(c);
        }
    }

    let minutiae = kept
        .into_iter()
        .map(|c| {
            let ridge = field.angle_at(c.x, c.y);
            let (dx, dy) = branch_direction(skeleton, c.x, c.y, c.kind);
            let theta = if ridge.cos() * dx + ridge.sin() * dy >= 0.0 {
                ridge
            } else {
                ridge + PI
            };
            Minutia::new(
                c.x as f64,
                c.y as f64,
                theta,
                c.kind,
                field.coherence_at(c.x, c.y),
            )
        })
        .collect();
    MinutiaeTemplate::new(minutiae, h, w)
}
