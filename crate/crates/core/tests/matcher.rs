use lve_core::matcher::{build_edge_table, match_score, Matcher, MatchScore};
use lve_core::minutiae::{Minutia, MinutiaKind, MinutiaeTemplate};
use proptest::prelude::*;

fn arb_minutia() -> impl Strategy<Value = Minutia> {
    (0u32..128, 0u32..128, 0.0..std::f64::consts::TAU, any::<bool>()).prop_map(|(x, y, t, bif)| {
        let kind = if bif { MinutiaKind::Bifurcation } else { MinutiaKind::Ending };
        Minutia::new(x as f64, y as f64, t, kind, 0.8)
    })
}

fn arb_template(max: usize) -> impl Strategy<Value = MinutiaeTemplate> {
    prop::collection::vec(arb_minutia(), 0..max).prop_map(|m| MinutiaeTemplate::new(m, 128, 128))
}

fn moved(t: &MinutiaeTemplate, angle: f64, tx: f64, ty: f64) -> MinutiaeTemplate {
    let (s, c) = angle.sin_cos();
    let m = t
        .minutiae
        .iter()
        .map(|p| {
            let (x, y) = (p.x - 64.0, p.y - 64.0);
            Minutia::new(c * x - s * y + 64.0 + tx, s * x + c * y + 64.0 + ty, p.theta + angle, p.kind, p.quality)
        })
        .collect();
    MinutiaeTemplate::new(m, t.height, t.width)
}

fn edges(t: &MinutiaeTemplate) -> u32 {
    build_edge_table(t, Matcher::default().config.d_max_px).len() as u32
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn score_is_symmetric(a in arb_template(25), b in arb_template(25)) {
        for m in [Matcher::default(), Matcher::strict()] {
            prop_assert_eq!(m.match_templates(&a, &b), m.match_templates(&b, &a));
        }
    }

    #[test]
    fn self_score_is_edge_count(a in arb_template(25)) {
        prop_assert_eq!(match_score(&a, &a), MatchScore(edges(&a)));
    }

    #[test]
    fn score_bounded_by_smaller_table(a in arb_template(25), b in arb_template(25)) {
        prop_assert!(match_score(&a, &b).0 <= edges(&a).min(edges(&b)));
    }

    #[test]
    fn deleting_minutiae_never_raises_score(
        a in arb_template(20),
        b in arb_template(20),
        keep in prop::collection::vec(any::<bool>(), 20),
    ) {
        // b shares half of a so scores are not trivially zero
        let mut merged = b.minutiae.clone();
        merged.extend(a.minutiae.iter().step_by(2).cloned());
        let full = MinutiaeTemplate::new(merged, 128, 128);
        let thinned = MinutiaeTemplate::new(
            full.minutiae.iter().zip(keep.iter().cycle()).filter(|(_, k)| **k).map(|(m, _)| *m).collect(),
            128,
            128,
        );
        prop_assert!(match_score(&a, &thinned) <= match_score(&a, &full));
    }

    #[test]
    fn rigid_motion_keeps_most_of_self_score(
        a in prop::collection::vec(arb_minutia(), 12..25),
        angle in 0.0..std::f64::consts::TAU,
        tx in -40.0..40.0f64,
        ty in -40.0..40.0f64,
    ) {
        let a = MinutiaeTemplate::new(a, 128, 128);
        let own = match_score(&a, &a).0 as f64;
        let score = match_score(&a, &moved(&a, angle, tx, ty)).0 as f64;
        prop_assert!(score >= 0.9 * own, "score {score} self {own}");
    }
}

#[test]
fn unrelated_template_scores_low() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let random = |rng: &mut rand_chacha::ChaCha8Rng| {
        let m = (0..20)
            .map(|_| {
                Minutia::new(
                    rng.random_range(0.0..128.0),
                    rng.random_range(0.0..128.0),
                    rng.random_range(0.0..std::f64::consts::TAU),
                    MinutiaKind::Ending,
                    1.0,
                )
            })
            .collect();
        MinutiaeTemplate::new(m, 128, 128)
    };
    for _ in 0..50 {
        let a = random(&mut rng);
        let b = random(&mut rng);
        let own = match_score(&a, &a).0;
        assert!(match_score(&a, &b).0 as f64 <= 0.2 * own as f64);
    }
}
