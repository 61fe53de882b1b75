use proptest::prelude::*;

use decomap::linalg::{random, ZERO};
use decomap::maps;
use decomap::stormer::{self, FaceSpec};

fn random_face(seed: u64) -> FaceSpec {
    let mut rng = random::rng(seed);
    FaceSpec::new(random::unit_vector(2, &mut rng), random::unit_vector(2, &mut rng)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rho_is_a_jordan_morphism(seed in any::<u64>(), face_path in any::<bool>()) {
        let phi = maps::random_unital_positive_m2(seed);
        let data = if face_path {
            let face = random_face(seed);
            stormer::build_face_decomposition(&stormer::sample_face_map(&face, 3, seed).unwrap(), &face).unwrap()
        } else {
            stormer::build_local_decomposition(&phi, &random::unit_vector(2, &mut random::rng(seed))).unwrap()
        };
        let j = stormer::check_jordan(&data, 10, seed).unwrap();
        prop_assert!(j.jordan_residual <= 1e-9 && j.unit_residual <= 1e-9, "{j:?}");
        prop_assert!(j.left_multiplicative_residual <= 1e-9, "{j:?}");
        prop_assert!(j.right_antimultiplicative_residual <= 1e-9, "{j:?}");
    }

    #[test]
    fn local_decomposition_holds(seed in any::<u64>(), family in 0usize..3) {
        let phi = match family {
            0 => maps::random_unital_positive_m2(seed),
            1 => stormer::sample_face_map(&random_face(seed), 2, seed).unwrap(),
            _ => maps::random_unitary_mixture(3, seed),
        };
        let eta = random::unit_vector(phi.dim_in, &mut random::rng(seed ^ 3));
        let r = stormer::verify_locdec(&phi, &eta, 10, seed, 1e-9).unwrap();
        prop_assert!(r.passed, "residual {}", r.max_residual);
        prop_assert!(r.v_norm.is_finite());
    }

    #[test]
    fn face_maps_have_the_v_matrix_shape(seed in any::<u64>(), terms in 1usize..5) {
        let face = random_face(seed);
        let phi = stormer::sample_face_map(&face, terms, seed).unwrap();
        let r = stormer::check_prop41(&phi, &face, 1e-9).unwrap();
        prop_assert!(!r.inconsistent);
        prop_assert_eq!(r.conditions_hold, r.equality_holds);
        for (i, j) in [(0, 0), (0, 1), (1, 2), (1, 3)] {
            prop_assert!((r.v_matrix[(i, j)] - ZERO).norm() <= 1e-10);
        }
    }
}

#[test]
fn v_norm_stays_bounded_on_face_families() {
    let mut worst: f64 = 0.0;
    for s in 0..100u64 {
        let face = random_face(s);
        let phi = stormer::sample_face_map(&face, 1 + (s % 4) as usize, s).unwrap();
        let data = stormer::build_face_decomposition(&phi, &face).unwrap();
        assert!(data.v_norm.is_finite());
        worst = worst.max(data.v_norm);
    }
    println!("largest ‖V_η‖ over 100 face maps: {worst:.4}");
    assert!(worst.is_finite());
}
