//! The shipped fixture corpus, generated from the core fixtures so files and
//! code cannot drift apart (see `tests/corpus.rs`).

use selftest_core::dilations::DilationWitness;
use selftest_core::fixtures;
use selftest_core::models::{correlation_of, AnyModel, Correlation};
use selftest_core::random::rng_for;
use selftest_core::Tolerance;

use crate::canonical;
use crate::io::{CorrelationFile, DecompositionComponent, DecompositionFile, ModelFile, WitnessFile};

fn model(m: impl Into<AnyModel>) -> String {
    canonical::to_string(&ModelFile::from_model(&m.into())).expect("models serialize")
}

fn correlation(p: &Correlation) -> String {
    canonical::to_string(&CorrelationFile::from_correlation(p)).expect("correlations serialize")
}

/// `(file name, contents)` for every shipped fixture.
pub fn corpus() -> Vec<(&'static str, String)> {
    let tol = Tolerance::default();
    let chsh = correlation_of(&fixtures::chsh_ideal(), tol).expect("valid fixture");
    let uniform = Correlation::from_fn(chsh.scenario, |_, _, _, _| 0.25);
    let mixture = Correlation::mixture(&[(0.5, &chsh), (0.5, &uniform)]).expect("same scenario");
    let deterministic = Correlation::from_fn(chsh.scenario, |a, b, _, _| if a == 0 && b == 0 { 1.0 } else { 0.0 });
    let decomposition = DecompositionFile {
        scenario: chsh.scenario,
        components: vec![
            DecompositionComponent {
                weight: 0.5,
                p: chsh.to_nested(),
            },
            DecompositionComponent {
                weight: 0.5,
                p: uniform.to_nested(),
            },
        ],
    };
    let mut rng = rng_for(2024, 0);
    let sync = fixtures::synchronous_maximally_entangled(&mut rng, 3, 2, 2);
    let mut rng = rng_for(2024, 1);
    let mixing = fixtures::support_mixing_model(&mut rng, 3, 3);
    let mut rng = rng_for(2024, 2);
    let junk = fixtures::with_junk_blocks(&mut rng, &fixtures::chsh_with_entangled_aux(0.3), 1, 1);
    let framed = fixtures::random_local_frame(&mut rng, &junk);
    vec![
        ("chsh_ideal.model.json", model(fixtures::chsh_ideal())),
        (
            "chsh_commuting.model.json",
            model(fixtures::chsh_ideal().to_commuting()),
        ),
        (
            "chsh_entangled_aux.model.json",
            model(fixtures::chsh_with_entangled_aux(0.3)),
        ),
        ("chsh_direct_sum.model.json", model(fixtures::chsh_direct_sum(0.3))),
        ("chsh_junk_frame.model.json", model(framed)),
        ("chsh_padded.model.json", model(fixtures::chsh_padded_for_rounding())),
        ("binary_violation.model.json", model(fixtures::binary_lemma_violation())),
        ("exA_S.model.json", model(fixtures::example_s())),
        ("exA_Shat.model.json", model(fixtures::example_shat())),
        ("sync_maxent.model.json", model(sync)),
        ("support_mixing.model.json", model(mixing)),
        ("uniform_povm.model.json", model(fixtures::uniform_povm_model())),
        ("chsh.corr.json", correlation(&chsh)),
        ("chsh_mixture.corr.json", correlation(&mixture)),
        ("deterministic.corr.json", correlation(&deterministic)),
        (
            "chsh_mixture.decomposition.json",
            canonical::to_string(&decomposition).expect("decompositions serialize"),
        ),
        (
            "chsh_identity.witness.json",
            canonical::to_string(&WitnessFile::from_witness(&DilationWitness::identity(2, 2))).expect("witness"),
        ),
    ]
}
