mod common;

use common::{cone_trial, cover_trial, inclusion_case, Trial};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100_000))]
    #[test]
    fn interval_ops_enclose_exact_results(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        if let Err(e) = inclusion_case(&mut rng) {
            prop_assert!(false, "{}", e);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]
    #[test]
    fn cone_certificates_hold_on_samples(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        if let Err(e) = cone_trial(&mut rng) {
            prop_assert!(false, "{}", e);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]
    #[test]
    fn covering_certificates_hold_on_samples(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        if let Err(e) = cover_trial(&mut rng) {
            prop_assert!(false, "{}", e);
        }
    }
}

/// The random families exercise both verdicts.
#[test]
fn trials_are_not_one_sided() {
    let mut rng = StdRng::seed_from_u64(7);
    let (mut cones, mut covers) = (0, 0);
    for _ in 0..1000 {
        cones += usize::from(cone_trial(&mut rng).unwrap() == Trial::Certified);
    }
    for _ in 0..300 {
        covers += usize::from(cover_trial(&mut rng).unwrap() == Trial::Certified);
    }
    assert!((100..900).contains(&cones), "cones certified {cones}/1000");
    assert!((20..280).contains(&covers), "covers certified {covers}/300");
}
