use lve_core::exec::Execution;
use lve_core::gallery::{enroll, impostor_scores, threshold_for_fmr, Gallery};
use lve_core::matcher::{Matcher, MatchScore};
use proptest::prelude::*;

fn pass_rate(scores: &[MatchScore], t: u32) -> f64 {
    scores.iter().filter(|s| s.0 >= t).count() as f64 / scores.len() as f64
}

proptest! {
    #[test]
    fn threshold_is_monotone_in_fmr(
        raw in prop::collection::vec(0u32..40, 1..400),
        a in 0.0001f64..1.0,
        b in 0.0001f64..1.0,
    ) {
        let scores: Vec<_> = raw.into_iter().map(MatchScore).collect();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let t_lo = threshold_for_fmr(&scores, lo, "default").unwrap();
        let t_hi = threshold_for_fmr(&scores, hi, "default").unwrap();
        prop_assert!(t_lo.score >= t_hi.score);
    }

    #[test]
    fn threshold_is_tight_over_observed_scores(
        raw in prop::collection::vec(0u32..40, 1..400),
        fmr in 0.0001f64..=1.0,
    ) {
        let scores: Vec<_> = raw.into_iter().map(MatchScore).collect();
        let t = threshold_for_fmr(&scores, fmr, "default").unwrap();
        let rate = pass_rate(&scores, t.score);
        prop_assert!(rate <= fmr + 1e-12);
        prop_assert_eq!(rate, t.empirical_fmr);
        // the next lower observed score would exceed the target
        if let Some(prev) = scores.iter().map(|s| s.0).filter(|&s| s < t.score).max() {
            prop_assert!(pass_rate(&scores, prev) > fmr);
        }
    }
}

#[test]
fn impostor_sample_repeats_under_seed() {
    let g = Gallery::synthetic(50, 2, 21);
    let pg = enroll(&g, Execution::default()).prepare(&Matcher::default(), Execution::default());
    let a = impostor_scores(&pg, 2_000, 3, Execution::Sequential).unwrap();
    let b = impostor_scores(&pg, 2_000, 3, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.scores.len(), 2_000);
    assert_eq!(a.total_pairs, 50 * 49 / 2 * 4);
    assert_ne!(impostor_scores(&pg, 2_000, 4, Execution::Parallel).unwrap(), a);
}
