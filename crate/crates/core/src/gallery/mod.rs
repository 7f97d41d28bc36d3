//! Identity-organized partial-print galleries.
//!
//! A gallery directory holds one subdirectory per identity with 8-bit
//! grayscale PNG or PGM partials. An optional `manifest` file in the root
//! overrides the grouping with lines `identity_id<TAB>relative/path`.

mod calibration;
mod enroll;
mod split;

pub use calibration::{
    empirical_fmr, impostor_scores, threshold_for_fmr, ImpostorSample, MatchThreshold,
    DEFAULT_CALIBRATION_PAIRS,
};
pub use enroll::{enroll, EnrolledIdentity, PreparedGallery, TemplateGallery};
pub use split::{Split, SplitRole};

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::raster::{is_image_path, GrayImage};
use crate::synth;

/// Name of the grouping override file inside a gallery root.
pub const MANIFEST_FILE: &str = "manifest";

/// One enrolled finger and its partial prints.
#[derive(Debug, Clone, PartialEq)]
pub struct Identity {
    pub id: String,
    pub partials: Vec<GrayImage>,
    /// Source file of each partial; empty for generated galleries.
    pub sources: Vec<PathBuf>,
}

/// Partial prints grouped by identity. Identity ids are unique and every
/// identity has at least one partial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gallery {
    identities: Vec<Identity>,
}

impl Gallery {
    pub fn new(identities: Vec<Identity>) -> Result<Self> {
        let mut seen = HashSet::new();
        for identity in &identities {
            if !seen.insert(identity.id.as_str()) {
                return Err(Error::Ingestion(format!("duplicate identity {:?}", identity.id)));
            }
            if identity.partials.is_empty() {
                return Err(Error::Ingestion(format!("identity {:?} has no partials", identity.id)));
            }
        }
        Ok(Gallery { identities })
    }

    /// Seeded synthetic gallery: `identities` fingers with `k` partials each.
    pub fn synthetic(identities: usize, k: usize, seed: u64) -> Self {
        let k = k.max(1);
        let identities = synth::synthetic_gallery(identities, k, seed)
            .into_iter()
            .enumerate()
            .map(|(i, s)| Identity {
                id: format!("synth{i:04}"),
                partials: s.partials,
                sources: Vec::new(),
            })
            .collect();
        Gallery { identities }
    }

    pub fn identities(&self) -> &[Identity] {
        &self.identities
    }

    pub fn len(&self) -> usize {
        self.identities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.identities.iter().map(|i| i.id.clone()).collect()
    }

    pub fn partial_count(&self) -> usize {
        self.identities.iter().map(|i| i.partials.len()).sum()
    }

    /// The identities named in `ids`, in gallery order.
    pub fn subset(&self, ids: &[String]) -> Result<Gallery> {
        let wanted: HashSet<&str> = ids.iter().map(String::as_str).collect();
        let known: HashSet<&str> = self.identities.iter().map(|i| i.id.as_str()).collect();
        if let Some(missing) = wanted.iter().find(|id| !known.contains(*id)) {
            return Err(Error::Ingestion(format!("identity {missing:?} not in gallery")));
        }
        Ok(Gallery {
            identities: self
                .identities
                .iter()
                .filter(|i| wanted.contains(i.id.as_str()))
                .cloned()
                .collect(),
        })
    }

    /// Writes the gallery as `root/<id>/<nn>.png`.
    pub fn save(&self, root: &Path) -> Result<()> {
        for identity in &self.identities {
            let dir = root.join(&identity.id);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for (n, img) in identity.partials.iter().enumerate() {
                img.save_png(&dir.join(format!("{n:02}.png")))?;
            }
        }
        Ok(())
    }
}

/// Options for [`ingest`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestOptions {
    /// Side of a seeded random square crop taken from every image.
    pub crop: Option<usize>,
    pub seed: u64,
    pub execution: Execution,
}


/// Result of [`ingest`]: the gallery plus files that could not be used.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub gallery: Gallery,
    pub failures: Vec<(PathBuf, String)>,
    /// Files inside identity directories that are not PNG or PGM images.
    pub skipped: Vec<PathBuf>,
}

impl IngestReport {
    pub fn summary(&self) -> String {
        format!(
            "{} identities, {} partials, {} unreadable files, {} non-image files skipped",
            self.gallery.len(),
            self.gallery.partial_count(),
            self.failures.len(),
            self.skipped.len()
        )
    }
}

/// Loads a gallery directory.
///
/// Unreadable images are collected in the report and skipped; an identity
/// left without partials is dropped with a failure entry. Crops are drawn
/// from a stream keyed by `(identity, file)` position, so they do not depend
/// on which other files fail.
pub fn ingest(root: &Path, options: &IngestOptions) -> Result<IngestReport> {
    if !root.is_dir() {
        return Err(Error::Ingestion(format!("gallery root {} is not a directory", root.display())));
    }
    let (groups, skipped) = list_identities(root)?;

    let jobs: Vec<(usize, usize, &PathBuf)> = groups
        .iter()
        .enumerate()
        .flat_map(|(i, (_, files))| files.iter().enumerate().map(move |(j, f)| (i, j, f)))
        .collect();
    let loaded = options.execution.map_slice(&jobs, |&(i, j, path)| {
        let img = GrayImage::load(path)?;
        match options.crop {
            None => Ok(img),
            Some(size) => random_crop(&img, size, options.seed, i, j),
        }
    });

    let mut identities: Vec<Identity> = groups
        .iter()
        .map(|(id, _)| Identity {
            id: id.clone(),
            partials: Vec::new(),
            sources: Vec::new(),
        })
        .collect();
    let mut failures = Vec::new();
    for ((i, _, path), result) in jobs.iter().zip(loaded) {
        match result {
            Ok(img) => {
                identities[*i].partials.push(img);
                identities[*i].sources.push((*path).clone());
            }
            Err(e) => failures.push(((*path).clone(), e.to_string())),
        }
    }
    identities.retain(|identity| {
        if identity.partials.is_empty() {
            failures.push((root.join(&identity.id), "identity has no readable partials".into()));
            false
        } else {
            true
        }
    });
    if identities.is_empty() {
        return Err(Error::Ingestion(format!("no readable identities under {}", root.display())));
    }
    Ok(IngestReport {
        gallery: Gallery::new(identities)?,
        failures,
        skipped,
    })
}

type Groups = Vec<(String, Vec<PathBuf>)>;

fn list_identities(root: &Path) -> Result<(Groups, Vec<PathBuf>)> {
    let manifest = root.join(MANIFEST_FILE);
    if manifest.is_file() {
        return Ok((read_manifest(root, &manifest)?, Vec::new()));
    }
    let mut dirs: Vec<PathBuf> = read_dir_sorted(root)?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::Ingestion(format!("no identity directories under {}", root.display())));
    }
    let mut skipped = Vec::new();
    let mut groups = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let id = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::Ingestion(format!("non-UTF-8 identity directory {}", dir.display())))?
            .to_string();
        let (files, other): (Vec<PathBuf>, Vec<PathBuf>) = read_dir_sorted(&dir)?
            .into_iter()
            .filter(|p| p.is_file())
            .partition(|p| is_image_path(p));
        skipped.extend(other);
        groups.push((id, files));
    }
    Ok((groups, skipped))
}

fn read_manifest(root: &Path, manifest: &Path) -> Result<Groups> {
    let text = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let mut groups: Groups = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, rel) = line.split_once('\t').ok_or_else(|| {
            Error::Ingestion(format!("{}:{}: expected identity<TAB>path", manifest.display(), n + 1))
        })?;
        let path = root.join(rel.trim());
        if let Some(parent) = path.parent() {
            if !parent.is_dir() {
                return Err(Error::Ingestion(format!(
                    "missing identity directory {} (manifest line {})",
                    parent.display(),
                    n + 1
                )));
            }
        }
        match groups.iter_mut().find(|(g, _)| g == id) {
            Some((_, files)) => files.push(path),
            None => groups.push((id.to_string(), vec![path])),
        }
    }
    if groups.is_empty() {
        return Err(Error::Ingestion(format!("{} lists no images", manifest.display())));
    }
    Ok(groups)
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

fn random_crop(img: &GrayImage, size: usize, seed: u64, identity: usize, file: usize) -> Result<GrayImage> {
    if img.width() < size || img.height() < size {
        return Err(Error::Ingestion(format!(
            "{}x{} image is smaller than the {size}x{size} crop",
            img.width(), img.height()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((identity as u64) << 32) | file as u64);
    let x0 = rng.random_range(0..=img.width() - size);
    let y0 = rng.random_range(0..=img.height() - size);
    img.crop(x0, y0, size, size)
}
