use proptest::prelude::*;

use decomap::cones::{self, ConeSpec};
use decomap::linalg::{self, random};
use decomap::modular::{self, ModularData, ModularOperatorKind as K};

fn state(n: usize, seed: u64) -> ModularData {
    let mut rng = random::rng(seed);
    modular::build_modular(&random::faithful_density(n, 0.02, &mut rng)).unwrap()
}

fn tensor_state(m: usize, n: usize, seed: u64) -> ModularData {
    modular::tensor_modular(&state(m, seed), &state(n, seed ^ 0xabc))
}

fn beta() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.0, 0.125, 0.25, 0.375, 0.5])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn u_maps_vbeta_onto_its_complement(n in 2usize..6, b in beta(), seed in any::<u64>()) {
        let md = state(n, seed);
        let u = |x| modular::apply_modular(&md, K::TranspositionUnitary, x).unwrap();
        let xi = cones::sample_cone(&md, &ConeSpec::vbeta(b), seed).unwrap();
        let r = cones::cone_membership(&md, &ConeSpec::vbeta(0.5 - b), &u(&xi), 1e-8).unwrap();
        prop_assert!(r.inside, "residual {}", r.residual);
        // onto: a sample of V_{1/2-β} is U of a member of V_β
        let eta = cones::sample_cone(&md, &ConeSpec::vbeta(0.5 - b), seed ^ 1).unwrap();
        let r = cones::cone_membership(&md, &ConeSpec::vbeta(b), &u(&eta), 1e-8).unwrap();
        prop_assert!(r.inside, "residual {}", r.residual);
    }

    #[test]
    fn tau_preserves_v0(n in 2usize..6, seed in any::<u64>()) {
        let md = state(n, seed);
        let xi = cones::sample_cone(&md, &ConeSpec::vbeta(0.0), seed).unwrap();
        let t = modular::apply_modular(&md, K::Tau, &xi).unwrap();
        let r = cones::cone_membership(&md, &ConeSpec::vbeta(0.0), &t, 1e-8).unwrap();
        prop_assert!(r.inside, "residual {}", r.residual);
    }

    #[test]
    fn hull_and_intersection_pair_nonnegatively(m in 2usize..4, n in 2usize..4, seed in any::<u64>()) {
        let md = tensor_state(m, n, seed);
        let u = cones::sample_hull(&md, &[m, n], seed).unwrap();
        let v = cones::sample_cone(&md, &ConeSpec::intersection(m, n), seed ^ 7).unwrap();
        let ip = linalg::hs_inner(&cones::natural_reduction(&md, &u), &cones::natural_reduction(&md, &v)).unwrap();
        prop_assert!(ip.re >= -1e-8, "pairing {}", ip.re);
    }

    #[test]
    fn samples_are_members(kind in 0usize..5, m in 1usize..4, n in 1usize..4, b in beta(), seed in any::<u64>()) {
        let (md, spec) = match kind {
            0 => (state(m + 1, seed), ConeSpec::vbeta(b)),
            1 => (state(m + 1, seed), ConeSpec::natural()),
            2 => (tensor_state(m, n, seed), ConeSpec::natural_tensor(m, n)),
            3 => (tensor_state(m, n, seed), ConeSpec::transposed_tensor(m, n)),
            _ => (tensor_state(m, n, seed), ConeSpec::intersection(m, n)),
        };
        let xi = cones::sample_cone(&md, &spec, seed).unwrap();
        let r = cones::cone_membership(&md, &spec, &xi, 1e-8).unwrap();
        prop_assert!(r.inside, "{spec:?}: residual {}", r.residual);
    }

    #[test]
    fn hull_samples_are_found_inside(m in 2usize..4, seed in any::<u64>()) {
        let md = tensor_state(m, 2, seed);
        let xi = cones::sample_hull(&md, &[m, 2], seed).unwrap();
        let h = cones::hull_membership(&md, &xi, &linalg::TensorLayout::bipartite(m, 2), 1e-8, 5000).unwrap();
        prop_assert!(h.result.inside, "residual {}", h.result.residual);
    }
}

#[test]
fn five_hundred_membership_cases() {
    let mut rng = random::rng(77);
    use rand::Rng;
    for s in 0..500u64 {
        let m = rng.random_range(1..4usize);
        let n = rng.random_range(1..4usize);
        let spec = match s % 5 {
            0 => ConeSpec::vbeta([0.0, 0.125, 0.25, 0.375, 0.5][rng.random_range(0..5)]),
            1 => ConeSpec::natural(),
            2 => ConeSpec::natural_tensor(m, n),
            3 => ConeSpec::transposed_tensor(m, n),
            _ => ConeSpec::intersection(m, n),
        };
        let md = if spec.dims().is_some() { tensor_state(m, n, s) } else { state(m + 1, s) };
        let xi = cones::sample_cone(&md, &spec, s).unwrap();
        assert!(cones::cone_membership(&md, &spec, &xi, 1e-8).unwrap().inside, "case {s}: {spec:?}");
    }
}
