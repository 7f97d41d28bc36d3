use std::path::Path;

use lve_core::gallery::{ingest, Gallery, IngestOptions, Split};

use super::{create_dir, require, IMAGES_DIR, INDEX_FILE, SPLIT_FILE};
use crate::cli::{BuildArgs, SynthArgs};
use crate::manifest::io_error;
use crate::{CliError, Ctx};

pub fn build(args: &BuildArgs, ctx: &Ctx) -> Result<(), CliError> {
    let source = require(&args.source, "source")?;
    let out = require(&args.out, "out")?;
    let options = IngestOptions { crop: args.crop, seed: ctx.seed, execution: ctx.execution };
    let report = ingest(source, &options)?;
    for path in &report.skipped {
        eprintln!("warning: skipped non-image file {}", path.display());
    }
    for (path, why) in &report.failures {
        eprintln!("warning: skipped {}: {why}", path.display());
    }
    eprintln!("ingested {}", report.summary());
    let sources: Vec<Vec<String>> = report
        .gallery
        .identities()
        .iter()
        .map(|i| i.sources.iter().map(|p| p.display().to_string()).collect())
        .collect();
    write(&report.gallery, &sources, args.ratio, ctx.seed, out)?;
    ctx.finish(out, &[source])
}

pub fn synth(args: &SynthArgs, ctx: &Ctx) -> Result<(), CliError> {
    let out = require(&args.out, "out")?;
    if args.identities == 0 || args.partials == 0 {
        return Err(CliError::Usage("--identities and --partials must be positive".into()));
    }
    let gallery = Gallery::synthetic(args.identities, args.partials, ctx.seed);
    let sources = vec![vec!["synthetic".to_string(); args.partials]; args.identities];
    write(&gallery, &sources, args.ratio, ctx.seed, out)?;
    ctx.finish(out, &[])
}

/// Writes `images/<id>/<nn>.png`, the split and an index of sources.
fn write(gallery: &Gallery, sources: &[Vec<String>], ratio: f64, seed: u64, out: &Path) -> Result<(), CliError> {
    let split = Split::with_ratio(&gallery.ids(), ratio, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    create_dir(out)?;
    let images = out.join(IMAGES_DIR);
    if images.exists() {
        std::fs::remove_dir_all(&images).map_err(|e| io_error(&images, e))?;
    }
    gallery.save(&images)?;
    split.save(&out.join(SPLIT_FILE))?;

    let mut index = String::from("identity\tpartial\tsource\n");
    for (identity, srcs) in gallery.identities().iter().zip(sources) {
        for (n, src) in srcs.iter().enumerate() {
            index.push_str(&format!("{}\t{IMAGES_DIR}/{}/{n:02}.png\t{src}\n", identity.id, identity.id));
        }
    }
    let path = out.join(INDEX_FILE);
    std::fs::write(&path, index).map_err(|e| io_error(&path, e))?;
    println!(
        "gallery: {} identities ({} train / {} test), {} partials -> {}",
        gallery.len(),
        split.train().len(),
        split.test().len(),
        gallery.partial_count(),
        out.display()
    );
    Ok(())
}
