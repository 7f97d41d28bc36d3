use lve_core::engine::{
    count_matches, evaluate_masterprint, evolve_masterprint, matching_score, random_baseline,
    resume_masterprint, EvolveSettings, FitnessKind, CHECKPOINT_FILE, HISTORY_FILE,
};
use lve_core::exec::Execution;
use lve_core::gallery::{enroll, impostor_scores, threshold_for_fmr, Gallery, MatchThreshold, PreparedGallery};
use lve_core::generator::fixtures;
use lve_core::matcher::Matcher;
use lve_core::minutiae::{extract, MinutiaeTemplate};
use lve_core::{GrayImage, Error};
use rand::{Rng, SeedableRng};

fn threshold(score: u32) -> MatchThreshold {
    MatchThreshold {
        fmr: 0.01,
        score,
        matcher_id: "default".into(),
        calibration_pairs: 10_000,
        empirical_fmr: 0.01,
    }
}

fn prepared(identities: Vec<(String, Vec<MinutiaeTemplate>)>) -> PreparedGallery {
    let m = Matcher::default();
    PreparedGallery {
        identities: identities
            .into_iter()
            .map(|(id, ts)| (id, ts.iter().map(|t| m.prepare(t)).collect()))
            .collect(),
        matcher: m,
    }
}

/// Scores every probe/partial pair from raw templates and counts identities
/// with any accepted pair.
fn brute_force(probe: &MinutiaeTemplate, gallery: &[(String, Vec<MinutiaeTemplate>)], t: u32) -> usize {
    let m = Matcher::default();
    let mut matched = 0;
    for (_, partials) in gallery {
        let mut any = false;
        for p in partials {
            if m.match_templates(probe, p).0 >= t {
                any = true;
            }
        }
        if any {
            matched += 1;
        }
    }
    matched
}

#[test]
fn early_break_count_equals_brute_force() {
    let pool: Vec<MinutiaeTemplate> = Gallery::synthetic(12, 4, 31)
        .identities()
        .iter()
        .flat_map(|i| i.partials.iter().map(extract).collect::<Vec<_>>())
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.random_range(0..8);
        let gallery: Vec<(String, Vec<MinutiaeTemplate>)> = (0..n)
            .map(|i| {
                let k = rng.random_range(1..6);
                (format!("id{i}"), (0..k).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect())
            })
            .collect();
        let probe = &pool[rng.random_range(0..pool.len())];
        let t = rng.random_range(0..40);
        let fast = count_matches(&Matcher::default().prepare(probe), &prepared(gallery.clone()), &threshold(t));
        assert_eq!(fast, brute_force(probe, &gallery, t));
    }
}

#[test]
fn identity_level_counting() {
    let g = Gallery::synthetic(6, 3, 8);
    let tg = enroll(&g, Execution::Sequential);
    let mut base: Vec<(String, Vec<MinutiaeTemplate>)> =
        tg.identities.iter().map(|i| (i.id.clone(), i.templates.clone())).collect();
    let probe = Matcher::default().prepare(&base[1].1[0]);
    for t in [3, 6, 10, 20] {
        let score = count_matches(&probe, &prepared(base.clone()), &threshold(t));
        let mut dup = base.clone();
        let extra = dup[1].1[0].clone();
        dup[1].1.push(extra);
        assert_eq!(count_matches(&probe, &prepared(dup), &threshold(t)), score);
        assert!(count_matches(&probe, &prepared(base.clone()), &threshold(t.saturating_sub(2))) >= score);
        assert!(score <= base.len());
    }
    let before = count_matches(&probe, &prepared(base.clone()), &threshold(6));
    base.push(("new".into(), vec![tg.identities[0].templates[2].clone()]));
    assert!(count_matches(&probe, &prepared(base), &threshold(6)) >= before);
}

fn toy() -> (PreparedGallery, MatchThreshold) {
    let pg = enroll(&Gallery::synthetic(5, 3, 4), Execution::Sequential)
        .prepare(&Matcher::default(), Execution::Sequential);
    let imp = impostor_scores(&pg, 10_000, 0, Execution::Sequential).unwrap();
    let thr = threshold_for_fmr(&imp.scores, 0.01, "default").unwrap();
    (pg, thr)
}

#[test]
fn one_generation_run_is_well_formed() {
    let (pg, thr) = toy();
    let model = fixtures::ridge_generator(1, 128);
    let settings = EvolveSettings {
        budget: 17,
        ..EvolveSettings::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let mut rows = 0;
    let r = evolve_masterprint(&model, &pg, &thr, &settings, Some(dir.path()), Execution::Sequential, &mut |_| rows += 1)
        .unwrap();
    assert_eq!((r.history.len(), rows), (1, 1));
    assert_eq!(r.best_latent.len(), 100);
    assert!(r.fitness_train <= 5);
    assert_eq!(r.fitness_train as f64, r.best_fitness);
    assert_eq!(matching_score(&r.best_image, &pg, &thr).unwrap(), r.fitness_train);
    r.write(dir.path()).unwrap();
    for f in ["best.png", "best.pgm", "best_latent.csv", "history.csv", "result.json", CHECKPOINT_FILE] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let (pg, mut thr) = toy();
    // out of reach, so neither run stops on the target
    thr.score = 1_000;
    let model = fixtures::ridge_generator(2, 128);
    let full = EvolveSettings {
        budget: 17 * 5,
        seed: 11,
        fitness: FitnessKind::Smoothed,
        ..EvolveSettings::default()
    };
    let straight = evolve_masterprint(&model, &pg, &thr, &full, None, Execution::Sequential, &mut |_| {}).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let partial = EvolveSettings { budget: 17 * 2, ..full };
    evolve_masterprint(&model, &pg, &thr, &partial, Some(dir.path()), Execution::Sequential, &mut |_| {}).unwrap();
    let resumed = resume_masterprint(&model, &pg, &thr, &full, dir.path(), Execution::Sequential, &mut |_| {}).unwrap();
    assert_eq!(resumed, straight);
}

#[test]
fn resume_tolerates_history_written_ahead_of_checkpoint() {
    let (pg, mut thr) = toy();
    thr.score = 1_000;
    let model = fixtures::ridge_generator(2, 128);
    let full = EvolveSettings {
        budget: 17 * 3,
        seed: 2,
        ..EvolveSettings::default()
    };
    let straight = evolve_masterprint(&model, &pg, &thr, &full, None, Execution::Sequential, &mut |_| {}).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let first = EvolveSettings { budget: 17, ..full };
    evolve_masterprint(&model, &pg, &thr, &first, Some(dir.path()), Execution::Sequential, &mut |_| {}).unwrap();
    let checkpoint = std::fs::read(dir.path().join(CHECKPOINT_FILE)).unwrap();
    let second = EvolveSettings { budget: 34, ..full };
    resume_masterprint(&model, &pg, &thr, &second, dir.path(), Execution::Sequential, &mut |_| {}).unwrap();
    // crash after the history write but before the checkpoint write
    std::fs::write(dir.path().join(CHECKPOINT_FILE), checkpoint).unwrap();
    let history = std::fs::read_to_string(dir.path().join(HISTORY_FILE)).unwrap();
    assert_eq!(history.lines().count(), 3);
    let resumed = resume_masterprint(&model, &pg, &thr, &full, dir.path(), Execution::Sequential, &mut |_| {}).unwrap();
    assert_eq!(resumed, straight);
}

#[test]
fn evaluation_reports() {
    let g = Gallery::synthetic(5, 3, 4);
    let pg = enroll(&g, Execution::Sequential).prepare(&Matcher::default(), Execution::Sequential);
    let imp = impostor_scores(&pg, 10_000, 0, Execution::Sequential).unwrap();
    let thresholds: Vec<MatchThreshold> = [1.0, 0.01, 0.001]
        .iter()
        .map(|&f| threshold_for_fmr(&imp.scores, f, "default").unwrap())
        .collect();

    let black = GrayImage::filled(128, 128, 0);
    let rows = evaluate_masterprint(&black, &pg, &thresholds).unwrap();
    assert_eq!(rows.len(), 3);
    if thresholds[0].score > 0 {
        assert_eq!(rows[0].percent, 0.0);
    }
    assert!(rows[1..].iter().all(|r| r.matched == 0));

    let own = &g.identities()[0].partials[0];
    let rows = evaluate_masterprint(own, &pg, &thresholds).unwrap();
    let permissive = &rows[0];
    let expected = pg
        .identities
        .iter()
        .filter(|(_, ps)| ps.iter().any(|p| pg.matcher.score(&pg.matcher.prepare(&extract(own)), p).0 >= permissive.threshold))
        .count();
    assert_eq!(permissive.matched, expected);
    assert!(permissive.matched >= 1);
    assert!(rows.windows(2).all(|w| w[0].matched >= w[1].matched));

    let other = PreparedGallery {
        matcher: Matcher::strict(),
        identities: pg.identities.clone(),
    };
    assert!(matches!(evaluate_masterprint(own, &other, &thresholds), Err(Error::Config(_))));
}

#[test]
fn baseline_is_seeded() {
    let (pg, thr) = toy();
    let model = fixtures::ridge_generator(1, 128);
    let a = random_baseline(&model, &pg, &thr, 6, 5, FitnessKind::Count, Execution::Sequential).unwrap();
    let b = random_baseline(&model, &pg, &thr, 6, 5, FitnessKind::Count, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    let one = random_baseline(&model, &pg, &thr, 1, 5, FitnessKind::Count, Execution::Sequential).unwrap();
    assert_eq!([one.min, one.median, one.p95], [one.max; 3]);
}
