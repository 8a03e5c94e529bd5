use artic_core::chamfer::ChamferVariant;
use artic_core::search::{search_with, SearchConfig};
use artic_core::synth::{generate_suite, SuiteConfig};

/// The winning candidate should not depend on squaring the nearest-neighbour distances.
#[test]
fn best_candidate_is_stable_under_unsquared_chamfer() {
    let suite = generate_suite(&SuiteConfig {
        count: 10,
        points_per_part: 300,
        frames: 4,
        seed: 21,
        ..SuiteConfig::default()
    })
    .unwrap();
    for obj in &suite {
        let seq = &obj.object.sequence;
        let squared = search_with(seq, &SearchConfig::default()).unwrap();
        let euclidean = search_with(
            seq,
            &SearchConfig {
                variant: ChamferVariant::Euclidean,
                ..SearchConfig::default()
            },
        )
        .unwrap();
        assert_eq!(squared.best.candidate, euclidean.best.candidate, "{}", obj.id);
    }
}
