use std::path::Path;

use super::Gallery;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matcher::{Matcher, PreparedTemplate};
use crate::minutiae::{extract, MinutiaeTemplate};

#[derive(Debug, Clone, PartialEq)]
pub struct EnrolledIdentity {
    pub id: String,
    pub templates: Vec<MinutiaeTemplate>,
}

/// Minutiae templates parallel in structure to their source [`Gallery`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TemplateGallery {
    pub identities: Vec<EnrolledIdentity>,
}

/// Extracts every partial. Empty templates are kept; they never match.
pub fn enroll(gallery: &Gallery, execution: Execution) -> TemplateGallery {
    let flat: Vec<_> = gallery
        .identities()
        .iter()
        .flat_map(|i| i.partials.iter())
        .collect();
    let mut templates = execution.map_slice(&flat, |img| extract(img)).into_iter();
    TemplateGallery {
        identities: gallery
            .identities()
            .iter()
            .map(|i| EnrolledIdentity {
                id: i.id.clone(),
                templates: templates.by_ref().take(i.partials.len()).collect(),
            })
            .collect(),
    }
}

impl TemplateGallery {
    pub fn len(&self) -> usize {
        self.identities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }

    pub fn template_count(&self) -> usize {
        self.identities.iter().map(|i| i.templates.len()).sum()
    }

    pub fn mean_minutiae(&self) -> f64 {
        let n = self.template_count();
        if n == 0 {
            return 0.0;
        }
        let total: usize = self
            .identities
            .iter()
            .flat_map(|i| &i.templates)
            .map(|t| t.len())
            .sum();
        total as f64 / n as f64
    }

    /// The identities named in `ids`, in gallery order.
    pub fn subset(&self, ids: &[String]) -> Result<TemplateGallery> {
        for id in ids {
            if !self.identities.iter().any(|i| &i.id == id) {
                return Err(Error::Ingestion(format!("identity {id:?} not in gallery")));
            }
        }
        Ok(TemplateGallery {
            identities: self
                .identities
                .iter()
                .filter(|i| ids.contains(&i.id))
                .cloned()
                .collect(),
        })
    }

    /// All templates as one text document: a `# <id> <n>` header before
    /// each template's `.mnt` body.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for identity in &self.identities {
            for (n, t) in identity.templates.iter().enumerate() {
                out.push_str(&format!("# {} {n}\n", identity.id));
                out.push_str(&t.to_mnt());
            }
        }
        out
    }

    /// Writes `root/<id>/<nn>.mnt`.
    pub fn save(&self, root: &Path) -> Result<()> {
        for identity in &self.identities {
            let dir = root.join(&identity.id);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for (n, t) in identity.templates.iter().enumerate() {
                t.save(&dir.join(format!("{n:02}.mnt")))?;
            }
        }
        Ok(())
    }

    pub fn prepare(&self, matcher: &Matcher, execution: Execution) -> PreparedGallery {
        let flat: Vec<_> = self.identities.iter().flat_map(|i| i.templates.iter()).collect();
        let mut prepared = execution.map_slice(&flat, |t| matcher.prepare(t)).into_iter();
        PreparedGallery {
            matcher: matcher.clone(),
            identities: self
                .identities
                .iter()
                .map(|i| (i.id.clone(), prepared.by_ref().take(i.templates.len()).collect()))
                .collect(),
        }
    }
}

/// A template gallery with edge tables built for one matcher.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedGallery {
    pub matcher: Matcher,
    pub identities: Vec<(String, Vec<PreparedTemplate>)>,
}

impl PreparedGallery {
    pub fn len(&self) -> usize {
        self.identities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }

    pub fn template_count(&self) -> usize {
        self.identities.iter().map(|(_, t)| t.len()).sum()
    }
}
