mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::random_curve;
use tsn_minplus::{convolve, horizontal_deviation, vertical_deviation, Curve, CurveError, Q};

fn curves(seed: u64, n: usize) -> Vec<Curve> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_curve(&mut rng, 5_000, 5, 1)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_commutes(seed in any::<u64>()) {
        let c = curves(seed, 2);
        prop_assert_eq!(convolve(&c[0], &c[1]).unwrap(), convolve(&c[1], &c[0]).unwrap());
    }

    #[test]
    fn convolution_associates(seed in any::<u64>()) {
        let c = curves(seed, 3);
        let left = convolve(&convolve(&c[0], &c[1]).unwrap(), &c[2]).unwrap();
        let right = convolve(&c[0], &convolve(&c[1], &c[2]).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn dominating_service_has_no_delay(seed in any::<u64>()) {
        let c = curves(seed, 2);
        let beta = c[0].max(&c[1]);
        prop_assert_eq!(horizontal_deviation(&c[0], &beta).unwrap(), Q::from(0));
        prop_assert_eq!(vertical_deviation(&c[0], &beta).unwrap(), Q::from(0));
    }

    #[test]
    fn more_service_never_hurts(seed in any::<u64>()) {
        let c = curves(seed, 3);
        let (alpha, beta) = (&c[0], &c[1]);
        let bigger = beta.max(&c[2]);
        prop_assert!(vertical_deviation(alpha, &bigger).unwrap() <= vertical_deviation(alpha, beta).unwrap());
        match horizontal_deviation(alpha, beta) {
            Ok(h) => prop_assert!(horizontal_deviation(alpha, &bigger).unwrap() <= h),
            Err(CurveError::HorizonExhausted { .. }) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
