use std::fmt::Write as _;

use lve_core::engine::{evaluate_masterprint, ReportRow};
use lve_core::gallery::{enroll, MatchThreshold};
use lve_core::{Error, GrayImage};

use super::{check_fmr, create_dir, matcher, percent_label, require, threshold_path, BuiltGallery};
use crate::cli::EvaluateArgs;
use crate::manifest::io_error;
use crate::{CliError, Ctx};

pub fn run(args: &EvaluateArgs, ctx: &Ctx) -> Result<(), CliError> {
    let gallery_dir = require(&args.gallery, "gallery")?;
    let thresholds = require(&args.thresholds, "thresholds")?;
    let out = require(&args.out, "out")?;
    let image_path = match (&args.image, &args.result) {
        (Some(image), _) => image.clone(),
        (None, Some(result)) => result.join("best.png"),
        (None, None) => return Err(CliError::Usage("one of --image or --result is required".into())),
    };
    let matchers = args.matchers.iter().map(|id| matcher(id)).collect::<Result<Vec<_>, _>>()?;
    args.fmr.iter().try_for_each(|&f| check_fmr(f))?;
    if matchers.is_empty() || args.splits.is_empty() || args.fmr.is_empty() {
        return Err(CliError::Usage("--matchers, --splits and --fmr need at least one value".into()));
    }

    let mut threshold_files = Vec::new();
    for split in &args.splits {
        for m in &matchers {
            for &fmr in &args.fmr {
                let path = threshold_path(thresholds, &m.id, split, fmr);
                if !path.is_file() {
                    return Err(Error::Config(format!(
                        "threshold file {} not found; run `lve calibrate --matcher {} --split {split} --fmr {fmr}`",
                        path.display(),
                        m.id
                    ))
                    .into());
                }
                threshold_files.push(path);
            }
        }
    }
    let image = GrayImage::load(&image_path)?;
    let built = BuiltGallery::load(gallery_dir)?;
    let enrolled = enroll(&built.gallery, ctx.execution);

    let mut rows: Vec<(String, ReportRow)> = Vec::new();
    let mut files = threshold_files.iter();
    for split in &args.splits {
        let subset = enrolled.subset(&built.ids(split)?)?;
        for m in &matchers {
            let prepared = subset.prepare(m, ctx.execution);
            let thr = args
                .fmr
                .iter()
                .map(|_| MatchThreshold::load(files.next().expect("one file per row")))
                .collect::<Result<Vec<_>, _>>()?;
            for row in evaluate_masterprint(&image, &prepared, &thr)? {
                rows.push((split.clone(), row));
            }
        }
    }

    let table = render(&rows);
    print!("{table}");
    create_dir(out)?;
    let mut csv = format!("split,{}\n", ReportRow::CSV_HEADER);
    for (split, row) in &rows {
        let _ = writeln!(csv, "{split},{}", row.to_csv());
    }
    for (name, text) in [("report.txt", &table), ("report.csv", &csv)] {
        let path = out.join(name);
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    }
    let mut inputs = vec![image_path.as_path(), gallery_dir];
    inputs.extend(threshold_files.iter().map(|p| p.as_path()));
    ctx.finish(out, &inputs)
}

/// Plain-text table, one row per (split, matcher, FMR).
fn render(rows: &[(String, ReportRow)]) -> String {
    let mut out = format!(
        "{:<6} {:<8} {:>6} {:>9} {:>11} {:>8}\n",
        "split", "matcher", "FMR", "threshold", "matched", "percent"
    );
    for (split, r) in rows {
        let _ = writeln!(
            out,
            "{:<6} {:<8} {:>6} {:>9} {:>11} {:>7.2}%",
            split,
            r.matcher_id,
            percent_label(r.fmr),
            r.threshold,
            format!("{}/{}", r.matched, r.identities),
            r.percent
        );
    }
    out
}
