//! Cross-module invariants on seeded random models.

use proptest::prelude::*;
use selftest_core::dilations::{compose_witnesses, find_local_dilation, naimark_dilate, verify_local_dilation};
use selftest_core::fixtures;
use selftest_core::models::{correlation_of, AnyModel, Scenario};
use selftest_core::random::{random_povm, rng_for};
use selftest_core::representations::{cyclic_restrict, states_equal};
use selftest_core::schmidt_support::{is_centrally_supported_via_transfer, schmidt_decompose, support_of};
use selftest_core::special::{binary_round, verify_tilted_sos};
use selftest_core::Tolerance;

fn tol() -> Tolerance {
    Tolerance::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn local_frames_preserve_correlation_rank_and_state(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut rng = rng_for(seed, 0);
        let m = fixtures::random_model(&mut rng, Scenario::new(2, 2, 2, 3).unwrap(), da, db, false);
        let f = fixtures::random_local_frame(&mut rng, &m);
        let p = correlation_of(&m, tol()).unwrap();
        let q = correlation_of(&f, tol()).unwrap();
        prop_assert!(p.max_abs_diff(&q) < 1e-10);
        let r1 = schmidt_decompose(&m.psi, da, db, tol()).unwrap().rank;
        let r2 = schmidt_decompose(&f.psi, da, db, tol()).unwrap().rank;
        prop_assert_eq!(r1, r2);
        let cmp = states_equal(&AnyModel::Tensor(m), &AnyModel::Tensor(f), tol()).unwrap();
        prop_assert!(cmp.equal);
    }

    #[test]
    fn central_support_criteria_agree(seed in any::<u64>(), da in 2usize..5, db in 2usize..5) {
        let m = fixtures::support_mixing_model(&mut rng_for(seed, 1), da, db);
        let comm = support_of(&m, tol()).unwrap().centrally_supported;
        let (transfer, _) = is_centrally_supported_via_transfer(&m, tol());
        prop_assert_eq!(comm, transfer);
        prop_assert!(!comm);
    }

    #[test]
    fn naimark_reproduces_povm(seed in any::<u64>(), d in 1usize..6, k in 1usize..5) {
        let povm = random_povm(&mut rng_for(seed, 2), d, k);
        let nd = naimark_dilate(&povm, tol()).unwrap();
        prop_assert!(nd.isometry_residual() < 1e-10);
        prop_assert!(nd.reproduction_residual(&povm) < 1e-10);
    }

    #[test]
    fn junk_and_frames_dilate_to_ideal(seed in any::<u64>(), ja in 0usize..3, jb in 0usize..3) {
        let mut rng = rng_for(seed, 3);
        let ideal = fixtures::chsh_ideal();
        let padded = fixtures::with_junk_blocks(&mut rng, &ideal, ja, jb);
        let s = fixtures::random_local_frame(&mut rng, &padded);
        let w = find_local_dilation(&s, &ideal, seed, tol()).unwrap();
        let report = verify_local_dilation(&s, &ideal, &w, tol()).unwrap();
        prop_assert!(report.passed);
        prop_assert!(report.max_residual < 1e-8);
    }

    #[test]
    fn rounding_leaves_projective_models_alone(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut rng = rng_for(seed, 4);
        let m = fixtures::random_model(&mut rng, Scenario::binary(2, 2), da, db, true);
        let out = binary_round(&m, false, tol()).unwrap();
        for (f, g) in m.m.iter().chain(&m.n).zip(out.model.m.iter().chain(&out.model.n)) {
            for (e, p) in f.iter().zip(g) {
                prop_assert!((e - p).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn sos_identities_hold_on_any_binary_model(seed in any::<u64>(), alpha in 0.0f64..1.99) {
        let m = fixtures::random_binary_model(&mut rng_for(seed, 5), 2, 3);
        let cert = verify_tilted_sos(&m, alpha, tol()).unwrap();
        prop_assert!(cert.max_identity_defect() < 1e-8);
    }
}

#[test]
fn dilations_compose() {
    let ideal = fixtures::chsh_ideal();
    let mut rng = rng_for(6, 0);
    let mid = fixtures::random_local_frame(&mut rng, &ideal);
    let top = fixtures::with_junk_blocks(&mut rng, &mid, 1, 2);
    let first = find_local_dilation(&top, &mid, 0, tol()).unwrap();
    let second = find_local_dilation(&mid, &ideal, 0, tol()).unwrap();
    let both = compose_witnesses(&first, &second);
    assert!(verify_local_dilation(&top, &ideal, &both, tol()).unwrap().passed);
}

#[test]
fn cyclic_restriction_keeps_correlation() {
    let m = fixtures::with_junk_blocks(&mut rng_for(7, 0), &fixtures::chsh_ideal(), 2, 2);
    let p = correlation_of(&m, tol()).unwrap();
    let cyc = cyclic_restrict(&AnyModel::Tensor(m), tol()).unwrap();
    assert_eq!(cyc.dim(), 4);
    let q = correlation_of(cyc.model.as_dyn(), tol()).unwrap();
    assert!(p.max_abs_diff(&q) < 1e-10);
}
