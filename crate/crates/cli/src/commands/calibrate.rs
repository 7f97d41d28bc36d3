use lve_core::gallery::{enroll, impostor_scores, threshold_for_fmr};

use super::{check_fmr, create_dir, matcher, percent_label, require, threshold_path, BuiltGallery};
use crate::cli::CalibrateArgs;
use crate::manifest::io_error;
use crate::{CliError, Ctx};

pub fn run(args: &CalibrateArgs, ctx: &Ctx) -> Result<(), CliError> {
    let gallery_dir = require(&args.gallery, "gallery")?;
    let out = require(&args.out, "out")?;
    let matcher = matcher(&args.matcher)?;
    if args.fmr.is_empty() {
        return Err(CliError::Usage("at least one --fmr is required".into()));
    }
    args.fmr.iter().try_for_each(|&f| check_fmr(f))?;
    if args.pairs == 0 {
        return Err(CliError::Usage("--pairs must be positive".into()));
    }

    let built = BuiltGallery::load(gallery_dir)?;
    let gallery = built.subset(&args.split)?;
    let prepared = enroll(&gallery, ctx.execution).prepare(&matcher, ctx.execution);
    let sample = impostor_scores(&prepared, args.pairs, ctx.seed, ctx.execution)?;
    eprintln!(
        "scored {} of {} impostor pairs over {} identities",
        sample.scores.len(),
        sample.total_pairs,
        prepared.len()
    );

    create_dir(out)?;
    let mut histogram = String::from("score,count\n");
    let mut at = 0;
    while at < sample.scores.len() {
        let s = sample.scores[at];
        let run = sample.scores[at..].iter().take_while(|&&v| v == s).count();
        histogram.push_str(&format!("{},{run}\n", s.0));
        at += run;
    }
    let hist_path = out.join(format!("{}_{}_impostor_scores.csv", matcher.id, args.split));
    std::fs::write(&hist_path, histogram).map_err(|e| io_error(&hist_path, e))?;

    println!("{:<8} {:>9} {:>12} {:>8}", "FMR", "threshold", "empirical", "pairs");
    for &fmr in &args.fmr {
        let thr = threshold_for_fmr(&sample.scores, fmr, &matcher.id)?;
        thr.save(&threshold_path(out, &matcher.id, &args.split, fmr))?;
        println!(
            "{:<8} {:>9} {:>12} {:>8}",
            percent_label(fmr),
            thr.score,
            percent_label(thr.empirical_fmr),
            thr.calibration_pairs
        );
        if thr.low_confidence() {
            eprintln!(
                "warning: {} calibration pairs are fewer than 10/FMR = {:.0}; the {} threshold is low-confidence",
                thr.calibration_pairs,
                10.0 / fmr,
                percent_label(fmr)
            );
        }
    }
    ctx.finish(out, &[gallery_dir])
}
