pub mod calibrate;
pub mod evaluate;
pub mod evolve;
pub mod gallery;
pub mod generator;

use std::path::{Path, PathBuf};

use lve_core::gallery::{ingest, Gallery, IngestOptions, Split};
use lve_core::matcher::{Matcher, MATCHER_IDS};
use lve_core::Error;

use crate::manifest::io_error;
use crate::CliError;

/// Image directory inside a built gallery.
pub const IMAGES_DIR: &str = "images";
pub const SPLIT_FILE: &str = "split.tsv";
pub const INDEX_FILE: &str = "index.tsv";

pub fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    value
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("missing --{flag} (flag or config key {flag:?})")))
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

pub fn matcher(id: &str) -> Result<Matcher, CliError> {
    Matcher::by_id(id).map_err(|_| {
        CliError::Usage(format!("unknown matcher {id:?}; available: {}", MATCHER_IDS.join(", ")))
    })
}

pub fn check_fmr(fmr: f64) -> Result<(), CliError> {
    if fmr > 0.0 && fmr <= 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--fmr {fmr} is not a fraction in (0, 1]")))
    }
}

/// `{matcher}_{split}_fmr{fmr}.json`.
pub fn threshold_path(dir: &Path, matcher: &str, split: &str, fmr: f64) -> PathBuf {
    dir.join(format!("{matcher}_{split}_fmr{fmr}.json"))
}

/// An FMR fraction as a percentage label: 0.001 -> "0.1%".
pub fn percent_label(fmr: f64) -> String {
    let s = format!("{:.6}", fmr * 100.0);
    format!("{}%", s.trim_end_matches('0').trim_end_matches('.'))
}

/// A gallery directory written by `lve gallery`.
pub struct BuiltGallery {
    pub gallery: Gallery,
    pub split: Split,
}

impl BuiltGallery {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let images = dir.join(IMAGES_DIR);
        let split_file = dir.join(SPLIT_FILE);
        if !images.is_dir() || !split_file.is_file() {
            return Err(Error::Ingestion(format!(
                "{} is not a gallery built by `lve gallery` (expected {IMAGES_DIR}/ and {SPLIT_FILE})",
                dir.display()
            ))
            .into());
        }
        let report = ingest(&images, &IngestOptions { crop: None, ..IngestOptions::default() })?;
        if let Some((path, why)) = report.failures.first() {
            return Err(Error::Ingestion(format!("{}: {why}", path.display())).into());
        }
        Ok(BuiltGallery { gallery: report.gallery, split: Split::load(&split_file)? })
    }

    /// Identities of `train`, `test` or `all`.
    pub fn ids(&self, split: &str) -> Result<Vec<String>, CliError> {
        match split {
            "all" => Ok(self.gallery.ids()),
            other => {
                let role = other
                    .parse()
                    .map_err(|_| CliError::Usage(format!("unknown split {other:?}; expected train, test or all")))?;
                Ok(self.split.ids(role))
            }
        }
    }

    pub fn subset(&self, split: &str) -> Result<Gallery, CliError> {
        Ok(self.gallery.subset(&self.ids(split)?)?)
    }
}
