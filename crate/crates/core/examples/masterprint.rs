//! Evolves one masterprint against a synthetic gallery through the library
//! API and compares it with random latents.
//!
//! `cargo run --release --example masterprint -- [identities] [seed]`

use lve_core::engine::{evolve_masterprint, random_baseline, EvolveSettings, FitnessKind};
use lve_core::exec::Execution;
use lve_core::gallery::{enroll, impostor_scores, threshold_for_fmr, Gallery};
use lve_core::generator::fixtures;
use lve_core::matcher::Matcher;

fn main() -> lve_core::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("integer argument"));
    let identities = args.next().unwrap_or(100) as usize;
    let seed = args.next().unwrap_or(0);

    let gallery = Gallery::synthetic(identities, 12, 2024);
    let prepared = enroll(&gallery, Execution::Parallel).prepare(&Matcher::default(), Execution::Parallel);
    let impostors = impostor_scores(&prepared, 50_000, 1, Execution::Parallel)?;
    let threshold = threshold_for_fmr(&impostors.scores, 0.01, "default")?;
    println!("threshold {} (empirical FMR {:.4})", threshold.score, threshold.empirical_fmr);

    let model = fixtures::ridge_generator(1, 128);
    let base = random_baseline(&model, &prepared, &threshold, 1_000, 99, FitnessKind::Count, Execution::Parallel)?;
    println!("random latents: median {} p95 {} max {}", base.median, base.p95, base.max);

    let settings = EvolveSettings { seed, ..EvolveSettings::default() };
    let result = evolve_masterprint(&model, &prepared, &threshold, &settings, None, Execution::Parallel, &mut |row| {
        if row.generation % 25 == 0 {
            eprintln!("gen {:>4} best {}", row.generation, row.best_f);
        }
    })?;
    println!(
        "evolved: {}/{} identities after {} generations ({})",
        result.fitness_train,
        result.identities,
        result.history.len(),
        result.stop
    );
    result.write(std::path::Path::new("masterprint-out"))
}
