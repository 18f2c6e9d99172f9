//! Reference models: the ideal CHSH strategy, the two-model example of an
//! abstract-state self-test that is not a self-test, and constructed fixtures
//! used by the property and acceptance suites.

use rand::Rng;

use crate::models::{Povms, QuantumModel, Scenario};
use crate::numerics::{
    basis_vector, direct_sum, eye, kron, kron_vec, projector, r, real_diag, real_matrix, CMatrix, CVector,
};
use crate::random::{random_binary_povm, random_povm, random_pvm, random_state, random_unitary};

fn pauli_z() -> CMatrix {
    real_diag(&[1.0, -1.0])
}

fn pauli_x() -> CMatrix {
    real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]])
}

/// Binary projective measurement `{(Id + O)/2, (Id - O)/2}` of a ±1 observable.
pub fn observable_pvm(obs: &CMatrix) -> Vec<CMatrix> {
    let id = eye(obs.nrows());
    vec![(&id + obs).scale(0.5), (&id - obs).scale(0.5)]
}

pub fn bell_state() -> CVector {
    let s = 1.0 / 2f64.sqrt();
    CVector::from_vec(vec![r(s), r(0.0), r(0.0), r(s)])
}

/// `(|00> + |11> + ... ) / sqrt(d)`
pub fn maximally_entangled(d: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = r(1.0 / (d as f64).sqrt());
    }
    v
}

/// `cos(t)|00> + sin(t)|11>`
pub fn two_qubit_state(t: f64) -> CVector {
    CVector::from_vec(vec![r(t.cos()), r(0.0), r(0.0), r(t.sin())])
}

/// EPR pair with Alice measuring Z, X and Bob measuring (Z ± X)/√2.
pub fn chsh_ideal() -> QuantumModel {
    let s = 1.0 / 2f64.sqrt();
    let z = pauli_z();
    let x = pauli_x();
    let b0 = (&z + &x).scale(s);
    let b1 = (&z - &x).scale(s);
    QuantumModel::new(
        Scenario::binary(2, 2),
        2,
        2,
        vec![observable_pvm(&z), observable_pvm(&x)],
        vec![observable_pvm(&b0), observable_pvm(&b1)],
        bell_state(),
    )
    .expect("well-formed fixture")
}

/// Two-qubit ±1-observable model with state `cos t|00> + sin t|11>` and
/// observables `cos θ Z + sin θ X` at the given angles.
pub fn two_qubit_model(t: f64, alice: [f64; 2], bob: [f64; 2]) -> QuantumModel {
    let obs = |theta: f64| pauli_z().scale(theta.cos()) + pauli_x().scale(theta.sin());
    QuantumModel::new(
        Scenario::binary(2, 2),
        2,
        2,
        alice.iter().map(|&a| observable_pvm(&obs(a))).collect(),
        bob.iter().map(|&b| observable_pvm(&obs(b))).collect(),
        two_qubit_state(t),
    )
    .expect("well-formed fixture")
}

/// Ideal model of the example: `(|00> + |11>)/√2` with computational-basis measurements.
pub fn example_shat() -> QuantumModel {
    let p0 = real_diag(&[1.0, 0.0]);
    let p1 = real_diag(&[0.0, 1.0]);
    QuantumModel::new(
        Scenario::binary(1, 1),
        2,
        2,
        vec![vec![p0.clone(), p1.clone()]],
        vec![vec![p0, p1]],
        bell_state(),
    )
    .expect("well-formed fixture")
}

/// Qutrit model of the example: `|00>/√2 + (|11> + |22>)/2`, outcome 0 = `|0><0|`.
pub fn example_s() -> QuantumModel {
    let p0 = real_diag(&[1.0, 0.0, 0.0]);
    let p1 = real_diag(&[0.0, 1.0, 1.0]);
    let mut psi = CVector::zeros(9);
    psi[0] = r(1.0 / 2f64.sqrt());
    psi[4] = r(0.5);
    psi[8] = r(0.5);
    QuantumModel::new(
        Scenario::binary(1, 1),
        3,
        3,
        vec![vec![p0.clone(), p1.clone()]],
        vec![vec![p0, p1]],
        psi,
    )
    .expect("well-formed fixture")
}

/// Alice's single POVM is `{Id/2, Id/2}`; Bob measures Z; EPR state.
pub fn uniform_povm_model() -> QuantumModel {
    let half = eye(2).scale(0.5);
    QuantumModel::new(
        Scenario::binary(1, 1),
        2,
        2,
        vec![vec![half.clone(), half]],
        vec![observable_pvm(&pauli_z())],
        bell_state(),
    )
    .expect("well-formed fixture")
}

/// Full-rank state with an unsharp measurement on both sides.
pub fn noisy_full_rank_model() -> QuantumModel {
    let e0 = real_diag(&[0.8, 0.2]);
    let e1 = real_diag(&[0.2, 0.8]);
    QuantumModel::new(
        Scenario::binary(1, 1),
        2,
        2,
        vec![vec![e0.clone(), e1.clone()]],
        vec![vec![e0, e1]],
        bell_state(),
    )
    .expect("well-formed fixture")
}

/// Alice's space is ℂ³ but the state lives on span{|0>,|1>}; her effects carry an
/// unsharp eigenvalue 1/2 on `|2>` only.
pub fn hidden_defect_model() -> QuantumModel {
    let m0 = real_diag(&[1.0, 0.0, 0.5]);
    let m1 = real_diag(&[0.0, 1.0, 0.5]);
    let mut psi = CVector::zeros(6);
    psi[0] = r(1.0 / 2f64.sqrt());
    psi[3] = r(1.0 / 2f64.sqrt());
    QuantumModel::new(
        Scenario::binary(1, 1),
        3,
        2,
        vec![vec![m0, m1]],
        vec![observable_pvm(&pauli_z())],
        psi,
    )
    .expect("well-formed fixture")
}

fn random_family(rng: &mut impl Rng, inputs: usize, outputs: usize, d: usize, projective: bool) -> Povms {
    (0..inputs)
        .map(|_| {
            if projective {
                random_pvm(rng, d, outputs)
            } else {
                random_povm(rng, d, outputs)
            }
        })
        .collect()
}

/// Random model with a generic (full Schmidt rank) state.
pub fn random_model(
    rng: &mut impl Rng,
    scenario: Scenario,
    dim_a: usize,
    dim_b: usize,
    projective: bool,
) -> QuantumModel {
    let m = random_family(rng, scenario.n_x, scenario.n_a, dim_a, projective);
    let n = random_family(rng, scenario.n_y, scenario.n_b, dim_b, projective);
    let psi = random_state(rng, dim_a * dim_b);
    QuantumModel::new(scenario, dim_a, dim_b, m, n, psi).expect("well-formed random model")
}

/// Random binary two-input model whose effects have arbitrary spectra in [0,1].
pub fn random_binary_model(rng: &mut impl Rng, dim_a: usize, dim_b: usize) -> QuantumModel {
    let m = (0..2).map(|_| random_binary_povm(rng, dim_a).to_vec()).collect();
    let n = (0..2).map(|_| random_binary_povm(rng, dim_b).to_vec()).collect();
    let psi = random_state(rng, dim_a * dim_b);
    QuantumModel::new(Scenario::binary(2, 2), dim_a, dim_b, m, n, psi).expect("well-formed random model")
}

/// Direct sum of a model with junk blocks `ℂ^{junk_a}`, `ℂ^{junk_b}` that the
/// state never touches. Junk measurements are random POVMs.
pub fn with_junk_blocks(rng: &mut impl Rng, model: &QuantumModel, junk_a: usize, junk_b: usize) -> QuantumModel {
    let s = model.scenario;
    let extend = |rng: &mut _, family: &Povms, junk: usize, outputs: usize| -> Povms {
        family
            .iter()
            .map(|ops| {
                let extra = random_povm(rng, junk, outputs);
                ops.iter().zip(extra).map(|(op, j)| direct_sum(op, &j)).collect()
            })
            .collect()
    };
    let m = extend(rng, &model.m, junk_a, s.n_a);
    let n = extend(rng, &model.n, junk_b, s.n_b);
    let (da, db) = (model.dim_a + junk_a, model.dim_b + junk_b);
    let mut psi = CVector::zeros(da * db);
    for i in 0..model.dim_a {
        for j in 0..model.dim_b {
            psi[i * db + j] = model.psi[i * model.dim_b + j];
        }
    }
    QuantumModel::new(s, da, db, m, n, psi).expect("well-formed direct sum")
}

/// Local unitary change of frame: `ψ -> (U ⊗ V) ψ`, `M -> U M U†`, `N -> V N V†`.
pub fn conjugate_locally(model: &QuantumModel, u: &CMatrix, v: &CMatrix) -> QuantumModel {
    let conj = |family: &Povms, w: &CMatrix| -> Povms {
        family
            .iter()
            .map(|ops| ops.iter().map(|op| w * op * w.adjoint()).collect())
            .collect()
    };
    QuantumModel {
        scenario: model.scenario,
        dim_a: model.dim_a,
        dim_b: model.dim_b,
        m: conj(&model.m, u),
        n: conj(&model.n, v),
        psi: kron(u, v) * &model.psi,
    }
}

pub fn random_local_frame(rng: &mut impl Rng, model: &QuantumModel) -> QuantumModel {
    let u = random_unitary(rng, model.dim_a);
    let v = random_unitary(rng, model.dim_b);
    conjugate_locally(model, &u, &v)
}

/// PVM of coordinate projections; every outcome gets a basis vector when `d >= outputs`.
pub fn diagonal_pvm(rng: &mut impl Rng, d: usize, outputs: usize) -> Vec<CMatrix> {
    let mut owner: Vec<usize> = (0..d).map(|i| i % outputs).collect();
    for i in (1..d).rev() {
        let j = rng.gen_range(0..=i);
        owner.swap(i, j);
    }
    (0..outputs)
        .map(|a| {
            real_diag(
                &owner
                    .iter()
                    .map(|&o| if o == a { 1.0 } else { 0.0 })
                    .collect::<Vec<_>>(),
            )
        })
        .collect()
}

/// Rank-deficient state whose support on Alice's side is mixed with its
/// complement by her first effect, so the model is not centrally supported.
pub fn support_mixing_model(rng: &mut impl Rng, dim_a: usize, dim_b: usize) -> QuantumModel {
    assert!(dim_a >= 2 && dim_b >= 2);
    let rank = rng.gen_range(1..dim_a.min(dim_b));
    // state supported on the first `rank` basis vectors of each side
    let coeffs = crate::random::random_simplex(rng, rank, 0.2);
    let mut psi = CVector::zeros(dim_a * dim_b);
    for (i, w) in coeffs.iter().enumerate() {
        psi[i * dim_b + i] = r(w.sqrt());
    }
    // rank-one projector onto a vector straddling support and complement
    let mut v = CVector::zeros(dim_a);
    v[0] = r(1.0);
    v[dim_a - 1] = r(1.0);
    let v = v.scale(1.0 / 2f64.sqrt());
    let p = projector(&v);
    let m = vec![vec![p.clone(), eye(dim_a) - p]];
    let n = vec![diagonal_pvm(rng, dim_b, 2)];
    let model = QuantumModel::new(Scenario::binary(1, 1), dim_a, dim_b, m, n, psi).expect("well-formed");
    random_local_frame(rng, &model)
}

/// Direct sum of two copies of the ideal CHSH model with the state spread
/// as `a·ψ̃ ⊕ b·ψ̃` over the diagonal blocks.
pub fn chsh_direct_sum(weight_first: f64) -> QuantumModel {
    let ideal = chsh_ideal();
    let dup = |family: &Povms| -> Povms {
        family
            .iter()
            .map(|ops| ops.iter().map(|op| direct_sum(op, op)).collect())
            .collect()
    };
    let (a, b) = (weight_first.sqrt(), (1.0 - weight_first).sqrt());
    let mut psi = CVector::zeros(16);
    for i in 0..2 {
        for j in 0..2 {
            let v = ideal.psi[i * 2 + j];
            psi[i * 4 + j] = v * r(a);
            psi[(2 + i) * 4 + (2 + j)] = v * r(b);
        }
    }
    QuantumModel::new(ideal.scenario, 4, 4, dup(&ideal.m), dup(&ideal.n), psi).expect("well-formed")
}

/// Ideal CHSH tensored with the auxiliary state `cos t|00> + sin t|11>`.
pub fn chsh_with_entangled_aux(t: f64) -> QuantumModel {
    crate::models::tensor_with_aux(&chsh_ideal(), &two_qubit_state(t), 2, 2).expect("well-formed")
}

/// Ideal CHSH model padded on Alice's side with `|2>`, orthogonal to the state,
/// on which both effects `M^x_0` carry eigenvalue 1/3.
pub fn chsh_padded_for_rounding() -> QuantumModel {
    let ideal = chsh_ideal();
    let third = real_diag(&[1.0 / 3.0]);
    let two_thirds = real_diag(&[2.0 / 3.0]);
    let m = ideal
        .m
        .iter()
        .map(|ops| vec![direct_sum(&ops[0], &third), direct_sum(&ops[1], &two_thirds)])
        .collect();
    let mut psi = CVector::zeros(6);
    for i in 0..2 {
        for j in 0..2 {
            psi[i * 2 + j] = ideal.psi[i * 2 + j];
        }
    }
    QuantumModel::new(ideal.scenario, 3, 2, m, ideal.n.clone(), psi).expect("well-formed")
}

/// EPR state with `M^0_0 = diag(1/2, 1)`: the eigenvalue 1/2 sits inside the support.
pub fn binary_lemma_violation() -> QuantumModel {
    let m0 = real_diag(&[0.5, 1.0]);
    let m1 = real_diag(&[0.5, 0.0]);
    QuantumModel::new(
        Scenario::binary(1, 1),
        2,
        2,
        vec![vec![m0, m1]],
        vec![observable_pvm(&pauli_z())],
        bell_state(),
    )
    .expect("well-formed")
}

/// Synchronous model: maximally entangled state, random PVMs for Alice and
/// their transposes for Bob.
pub fn synchronous_maximally_entangled(rng: &mut impl Rng, d: usize, inputs: usize, outputs: usize) -> QuantumModel {
    let m: Povms = (0..inputs).map(|_| random_pvm(rng, d, outputs)).collect();
    let n: Povms = m
        .iter()
        .map(|ops| ops.iter().map(|op| op.transpose()).collect())
        .collect();
    QuantumModel::new(
        Scenario::new(inputs, inputs, outputs, outputs).expect("positive sizes"),
        d,
        d,
        m,
        n,
        maximally_entangled(d),
    )
    .expect("well-formed")
}

/// Synchronous model with a non-maximally entangled full-rank state: PVMs that
/// are diagonal in the Schmidt basis on both sides.
pub fn synchronous_diagonal(rng: &mut impl Rng, d: usize, outputs: usize) -> QuantumModel {
    let coeffs = crate::random::random_simplex(rng, d, 0.3);
    let mut psi = CVector::zeros(d * d);
    for (i, w) in coeffs.iter().enumerate() {
        psi[i * d + i] = r(w.sqrt());
    }
    let ops = diagonal_pvm(rng, d, outputs);
    let model = QuantumModel::new(
        Scenario::new(1, 1, outputs, outputs).expect("positive sizes"),
        d,
        d,
        vec![ops.clone()],
        vec![ops],
        psi,
    )
    .expect("well-formed");
    let u = random_unitary(rng, d);
    let v = random_unitary(rng, d);
    conjugate_locally(&model, &u, &v)
}

pub fn ket(dim: usize, index: usize) -> CVector {
    basis_vector(dim, index)
}

pub fn product_state(u: &CVector, v: &CVector) -> CVector {
    kron_vec(u, v)
}

/// Generators `W (⊕ g_i ⊗ Id_{m_i}) W†` for blocks `(n_i, m_i)`: independent random
/// Hermitian irreducible families `g_i` and a random unitary `W`.
pub fn constructed_representation(rng: &mut impl Rng, shape: &[(usize, usize)], n_gens: usize) -> Vec<CMatrix> {
    let d: usize = shape.iter().map(|(n, m)| n * m).sum();
    let mut gens = vec![CMatrix::zeros(d, d); n_gens];
    let mut offset = 0;
    for &(n, m) in shape {
        for g in gens.iter_mut() {
            let h = crate::random::random_hermitian(rng, n);
            let blk = kron(&h, &eye(m));
            g.view_mut((offset, offset), (n * m, n * m)).copy_from(&blk);
        }
        offset += n * m;
    }
    let w = random_unitary(rng, d);
    gens.iter().map(|g| &w * g * w.adjoint()).collect()
}
