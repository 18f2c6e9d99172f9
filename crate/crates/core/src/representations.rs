//! Commutants, decomposition of a *-closed operator family into irreducible
//! blocks with multiplicities, cyclic restriction, and equality of the states
//! induced by two models.

use std::collections::HashSet;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{evaluate_moment, AnyModel, BipartiteModel, CommutingModel, Letter, QuantumModel, Word};
use crate::numerics::{
    c, eye, hermitian_eig, kron, norm, null_space, orthogonal_residual, partial_trace, polar_unitary, vnorm, CMatrix,
    CVector, Side, Tolerance,
};
use crate::random::rng_for;

fn mat_of(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Stacked matrix of `X ↦ X·src_g − dst_g·X` over all generator pairs, acting
/// on column-major `vec(X)` for `X` of shape `dst_dim x src_dim`.
fn intertwiner_system(src: &[CMatrix], dst: &[CMatrix]) -> CMatrix {
    let ns = src.first().map_or(0, |g| g.nrows());
    let nd = dst.first().map_or(0, |g| g.nrows());
    let block = nd * ns;
    let mut sys = CMatrix::zeros(block * src.len(), block);
    for (k, (gs, gd)) in src.iter().zip(dst).enumerate() {
        // vec(X G) = (Gᵀ ⊗ I) vec(X),  vec(G X) = (I ⊗ G) vec(X)
        let op = kron(&gs.transpose(), &eye(nd)) - kron(&eye(ns), gd);
        sys.view_mut((k * block, 0), (block, block)).copy_from(&op);
    }
    sys
}

/// Hilbert-Schmidt orthonormal basis of `{T : [T, G] = 0 for every generator G}`.
pub fn commutant_basis(generators: &[CMatrix], tol: Tolerance) -> Result<Vec<CMatrix>> {
    let d = match generators.first() {
        Some(g) => g.nrows(),
        None => return Err(Error::DimensionMismatch("empty generator list".into())),
    };
    for g in generators {
        if g.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "generator is {}x{}, expected {d}x{d}",
                g.nrows(),
                g.ncols()
            )));
        }
    }
    let sys = intertwiner_system(generators, generators);
    Ok(null_space(&sys, tol).basis.iter().map(|v| mat_of(v, d, d)).collect())
}

#[derive(Clone, Debug)]
pub struct IrrepBlock {
    pub irrep_dim: usize,
    pub multiplicity: usize,
    /// Irreducible generators on `ℂ^n`, aligned with the input generator list.
    pub generators: Vec<CMatrix>,
    /// Columns `i·m + r` span copy `r` of basis vector `i` of the irrep.
    pub columns: CMatrix,
}

/// A pair of irreducible pieces whose equivalence test landed within a factor
/// of 100 of the tolerance; `merged` records the choice that was made.
#[derive(Clone, Debug, Serialize)]
pub struct AmbiguousMerge {
    pub irrep_dim: usize,
    pub residual: f64,
    pub merged: bool,
}

#[derive(Clone, Debug)]
pub struct RepDecomposition {
    pub dim: usize,
    pub blocks: Vec<IrrepBlock>,
    /// Unitary whose columns are the block columns in order.
    pub change_of_basis: CMatrix,
    pub reassembly_defect: f64,
    pub ambiguous: Vec<AmbiguousMerge>,
}

impl RepDecomposition {
    pub fn commutant_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.multiplicity * b.multiplicity).sum()
    }

    /// `(n_i, m_i)` per block.
    pub fn structure(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|b| (b.irrep_dim, b.multiplicity)).collect()
    }

    /// Block-diagonal `⊕ g_i ⊗ Id_{m_i}` for generator `k`.
    pub fn block_form(&self, k: usize) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        let mut offset = 0;
        for b in &self.blocks {
            let size = b.irrep_dim * b.multiplicity;
            let blk = kron(&b.generators[k], &eye(b.multiplicity));
            out.view_mut((offset, offset), (size, size)).copy_from(&blk);
            offset += size;
        }
        out
    }

    /// Generator `k` rebuilt from its block form.
    pub fn reassemble(&self, k: usize) -> CMatrix {
        &self.change_of_basis * self.block_form(k) * self.change_of_basis.adjoint()
    }
}

fn random_commutant_hermitian(basis: &[CMatrix], rng: &mut impl Rng) -> CMatrix {
    let d = basis[0].nrows();
    let mut h = CMatrix::zeros(d, d);
    for t in basis {
        let x: f64 = StandardNormal.sample(rng);
        let y: f64 = StandardNormal.sample(rng);
        h += (t + t.adjoint()).scale(x) + (t - t.adjoint()) * c(0.0, y);
    }
    (&h + h.adjoint()).scale(0.5)
}

fn compress_all(gens: &[CMatrix], q: &CMatrix) -> Vec<CMatrix> {
    gens.iter().map(|g| q.adjoint() * g * q).collect()
}

/// Split the invariant subspace spanned by the columns of `q` into irreducible pieces.
fn split_irreducible(
    gens: &[CMatrix],
    q: CMatrix,
    rng: &mut impl Rng,
    tol: Tolerance,
    out: &mut Vec<CMatrix>,
) -> Result<()> {
    let local = compress_all(gens, &q);
    let basis = commutant_basis(&local, tol)?;
    if basis.len() <= 1 {
        out.push(q);
        return Ok(());
    }
    for _ in 0..8 {
        let h = random_commutant_hermitian(&basis, rng);
        let h = h.scale(1.0 / norm(&h).max(f64::MIN_POSITIVE));
        let eig = hermitian_eig(&h, tol)?;
        let clusters = eig.clusters();
        if clusters.len() < 2 {
            continue;
        }
        for range in clusters {
            let sub = eig.vectors.columns(range.start, range.len()).into_owned();
            split_irreducible(gens, &q * sub, rng, tol, out)?;
        }
        return Ok(());
    }
    Err(Error::AlgebraNotSemisimpleNumerically {
        residual: basis.len() as f64,
    })
}

/// Canonical ordering key: irrep dimension, then quantized generator traces.
fn signature(n: usize, gens: &[CMatrix]) -> (usize, Vec<i64>) {
    let q = |x: f64| (x * 1e7).round() as i64;
    let mut key = Vec::with_capacity(2 * gens.len());
    for g in gens {
        let t = g.trace();
        key.push(q(t.re));
        key.push(q(t.im));
    }
    (n, key)
}

/// Decompose `H ≅ ⊕ ℂ^{n_i} ⊗ ℂ^{m_i}` so that every generator acts as `⊕ g_i ⊗ Id_{m_i}`.
///
/// Adjoints of non-Hermitian generators are added before splitting. Splitting
/// uses random Hermitian commutant elements drawn from `seed`.
pub fn irrep_decompose(generators: &[CMatrix], seed: u64, tol: Tolerance) -> Result<RepDecomposition> {
    if generators.is_empty() {
        return Err(Error::DimensionMismatch("empty generator list".into()));
    }
    let d = generators[0].nrows();
    let mut closed: Vec<CMatrix> = generators.to_vec();
    for g in generators {
        if !tol.negligible(norm(&(g - g.adjoint())), norm(g)) {
            closed.push(g.adjoint());
        }
    }
    let mut rng = rng_for(seed, 0);
    let mut pieces = Vec::new();
    split_irreducible(&closed, eye(d), &mut rng, tol, &mut pieces)?;

    // group equivalent pieces; classes[k] = (representative piece, members with unitary maps)
    let local: Vec<Vec<CMatrix>> = pieces.iter().map(|q| compress_all(&closed, q)).collect();
    let mut classes: Vec<(usize, Vec<(usize, CMatrix)>)> = Vec::new();
    let mut ambiguous = Vec::new();
    'pieces: for j in 0..pieces.len() {
        let n = pieces[j].ncols();
        for (rep, members) in classes.iter_mut() {
            if pieces[*rep].ncols() != n {
                continue;
            }
            let sys = intertwiner_system(&local[j], &local[*rep]);
            let ns = null_space(&sys, tol);
            let threshold = tol.eps * (1.0 + ns.scale);
            if ns.basis.len() == 1 {
                let x = mat_of(&ns.basis[0], n, n);
                let u = polar_unitary(&x);
                let residual = local[j]
                    .iter()
                    .zip(&local[*rep])
                    .map(|(gj, gr)| norm(&(&u * gj * u.adjoint() - gr)))
                    .fold(0.0, f64::max);
                if !tol.negligible(residual, ns.scale) {
                    return Err(Error::AlgebraNotSemisimpleNumerically { residual });
                }
                if ns.residuals[0] > threshold / 100.0 {
                    ambiguous.push(AmbiguousMerge {
                        irrep_dim: n,
                        residual: ns.residuals[0],
                        merged: true,
                    });
                }
                members.push((j, u));
                continue 'pieces;
            }
            if ns.basis.len() > 1 {
                return Err(Error::AlgebraNotSemisimpleNumerically {
                    residual: ns.residuals[1],
                });
            }
            if ns.gap <= 100.0 * threshold {
                ambiguous.push(AmbiguousMerge {
                    irrep_dim: n,
                    residual: ns.gap,
                    merged: false,
                });
            }
        }
        classes.push((j, vec![(j, eye(n))]));
    }

    let mut blocks: Vec<IrrepBlock> = classes
        .into_iter()
        .map(|(rep, members)| {
            let n = pieces[rep].ncols();
            let m = members.len();
            let mut columns = CMatrix::zeros(d, n * m);
            for (r_idx, (j, u)) in members.iter().enumerate() {
                let frame = &pieces[*j] * u.adjoint();
                for i in 0..n {
                    columns.set_column(i * m + r_idx, &frame.column(i));
                }
            }
            IrrepBlock {
                irrep_dim: n,
                multiplicity: m,
                generators: local[rep][..generators.len()].to_vec(),
                columns,
            }
        })
        .collect();
    blocks.sort_by_cached_key(|b| signature(b.irrep_dim, &b.generators));

    let mut change_of_basis = CMatrix::zeros(d, d);
    let mut offset = 0;
    for b in &blocks {
        change_of_basis
            .view_mut((0, offset), (d, b.columns.ncols()))
            .copy_from(&b.columns);
        offset += b.columns.ncols();
    }
    let mut decomposition = RepDecomposition {
        dim: d,
        blocks,
        change_of_basis,
        reassembly_defect: 0.0,
        ambiguous,
    };
    let unitarity = norm(&(decomposition.change_of_basis.adjoint() * &decomposition.change_of_basis - eye(d)));
    let mut defect = unitarity;
    for (k, g) in generators.iter().enumerate() {
        defect = defect.max(norm(&(decomposition.reassemble(k) - g)) / (1.0 + norm(g)));
    }
    decomposition.reassembly_defect = defect;
    if !tol.negligible(defect, d as f64) {
        return Err(Error::AlgebraNotSemisimpleNumerically { residual: defect });
    }
    Ok(decomposition)
}

/// Generators of one side of a model as local operators.
pub fn side_generators(model: &QuantumModel, side: Side) -> Vec<CMatrix> {
    model.family(side).iter().flatten().cloned().collect()
}

/// A pair of words, one per side; `π_A(a) π_B(b) ψ`.
pub type WordPair = (Word, Word);

#[derive(Clone, Debug)]
pub struct CyclicModel {
    pub model: AnyModel,
    /// Word pairs whose vectors, in order, were kept by Gram-Schmidt.
    pub basis_words: Vec<WordPair>,
    /// Isometry from the restricted carrier into the original carrier.
    pub isometry: CMatrix,
}

impl CyclicModel {
    pub fn dim(&self) -> usize {
        self.isometry.ncols()
    }
}

pub(crate) struct WordFrame {
    pub words: Vec<WordPair>,
    pub vectors: Vec<CVector>,
    pub orthonormal: Vec<CVector>,
}

fn extend_pair(pair: &WordPair, side: Side, letter: Letter) -> WordPair {
    match side {
        Side::A => (pair.0.prepend(letter), pair.1.clone()),
        Side::B => (pair.0.clone(), pair.1.prepend(letter)),
    }
}

/// Length-lex enumeration of `π(word) ψ`, extending only word pairs that added
/// a new direction; stops at the first length that adds nothing.
pub(crate) fn word_frame<M: BipartiteModel + ?Sized>(model: &M, tol: Tolerance) -> WordFrame {
    let letters = model.scenario().letters();
    let psi = model.state().clone();
    let dim = model.carrier_dim();
    let mut frame = WordFrame {
        words: Vec::new(),
        vectors: Vec::new(),
        orthonormal: Vec::new(),
    };
    let mut frontier: Vec<usize> = Vec::new();
    let root: WordPair = (Word::identity(Side::A), Word::identity(Side::B));
    if let Some(q) = orthogonal_residual(&[], &psi, tol.eps * (1.0 + vnorm(&psi))) {
        frame.words.push(root);
        frame.vectors.push(psi);
        frame.orthonormal.push(q);
        frontier.push(0);
    }
    while !frontier.is_empty() && frame.words.len() < dim {
        let mut next = Vec::new();
        for &idx in &frontier {
            for &(side, letter) in &letters {
                let v = model.act(side, letter, &frame.vectors[idx]);
                let threshold = tol.eps * (1.0 + vnorm(&v));
                if let Some(q) = orthogonal_residual(&frame.orthonormal, &v, threshold) {
                    frame.words.push(extend_pair(&frame.words[idx], side, letter));
                    frame.vectors.push(v);
                    frame.orthonormal.push(q);
                    next.push(frame.words.len() - 1);
                    if frame.words.len() == dim {
                        return frame;
                    }
                }
            }
        }
        frontier = next;
    }
    frame
}

fn columns_of(vs: &[CVector], rows: usize) -> CMatrix {
    let mut m = CMatrix::zeros(rows, vs.len());
    for (k, v) in vs.iter().enumerate() {
        m.set_column(k, v);
    }
    m
}

fn support_projection(rho: &CMatrix, tol: Tolerance) -> Result<CMatrix> {
    let eig = hermitian_eig(rho, tol)?;
    let keep: Vec<usize> = (0..eig.values.len())
        .filter(|&k| eig.values[k] > tol.eps * (1.0 + eig.values[0]))
        .collect();
    let mut u = CMatrix::zeros(rho.nrows(), keep.len());
    for (j, &k) in keep.iter().enumerate() {
        u.set_column(j, &eig.vectors.column(k));
    }
    Ok(u)
}

fn compress_family(family: &[Vec<CMatrix>], q: &CMatrix) -> Vec<Vec<CMatrix>> {
    family
        .iter()
        .map(|ops| {
            ops.iter()
                .map(|op| {
                    let t = q.adjoint() * op * q;
                    (&t + t.adjoint()).scale(0.5)
                })
                .collect()
        })
        .collect()
}

/// Restrict a model to the cyclic subspace `span{π(w_A) π(w_B) ψ}`.
///
/// A tensor model whose cyclic subspace is a product `K_A ⊗ K_B` stays a tensor
/// model; otherwise the result is a commuting model on the subspace. A model
/// whose state is already cyclic is returned unchanged.
pub fn cyclic_restrict(model: &AnyModel, tol: Tolerance) -> Result<CyclicModel> {
    let frame = word_frame(model, tol);
    let dim = model.carrier_dim();
    let k = frame.orthonormal.len();
    if k == dim {
        return Ok(CyclicModel {
            model: model.clone(),
            basis_words: frame.words,
            isometry: eye(dim),
        });
    }
    let q = columns_of(&frame.orthonormal, dim);
    if let AnyModel::Tensor(tm) = model {
        let p = &q * q.adjoint();
        let ua = support_projection(&partial_trace(&p, tm.dim_a, tm.dim_b, Side::A)?, tol)?;
        let ub = support_projection(&partial_trace(&p, tm.dim_a, tm.dim_b, Side::B)?, tol)?;
        let product = kron(&(&ua * ua.adjoint()), &(&ub * ub.adjoint()));
        if tol.negligible(norm(&(&product - &p)), 1.0) {
            let iso = kron(&ua, &ub);
            let compressed = QuantumModel::new(
                tm.scenario,
                ua.ncols(),
                ub.ncols(),
                compress_family(&tm.m, &ua),
                compress_family(&tm.n, &ub),
                iso.adjoint() * &tm.psi,
            )?;
            return Ok(CyclicModel {
                model: AnyModel::Tensor(compressed),
                basis_words: frame.words,
                isometry: iso,
            });
        }
    }
    let s = model.scenario();
    let carrier_family = |side: Side| -> Vec<Vec<CMatrix>> {
        (0..s.inputs(side))
            .map(|x| {
                (0..s.outputs(side))
                    .map(|a| model.carrier_operator(side, Letter::new(x, a)))
                    .collect()
            })
            .collect()
    };
    let compressed = CommutingModel::new(
        s,
        k,
        compress_family(&carrier_family(Side::A), &q),
        compress_family(&carrier_family(Side::B), &q),
        q.adjoint() * model.state(),
    )?;
    Ok(CyclicModel {
        model: AnyModel::Commuting(compressed),
        basis_words: frame.words,
        isometry: q,
    })
}

#[derive(Clone, Debug)]
pub enum StateWitness {
    /// Partial isometry from the first model's carrier onto the second's that
    /// maps one cyclic subspace onto the other and intertwines the generators.
    Unitary {
        matrix: CMatrix,
        cyclic_dim: usize,
    },
    /// A moment on which the two states differ.
    Distinguishing {
        word_a: Word,
        word_b: Word,
        first: Complex64,
        second: Complex64,
    },
    ScenarioMismatch {
        reason: String,
    },
}

#[derive(Clone, Debug)]
pub struct StateComparison {
    pub equal: bool,
    /// Largest Gram discrepancy over the extended word set.
    pub gram_defect: f64,
    /// Largest `‖π₂(g) F₂ − F₂ (Q₁† π₁(g) Q₁)‖` with `F₂` the transported frame.
    pub intertwining_defect: f64,
    pub witness: StateWitness,
}

fn moment_words(u: &WordPair, w: &WordPair) -> (Word, Word) {
    (u.0.reversed().concat(&w.0), u.1.reversed().concat(&w.1))
}

/// Decide whether two models induce the same state on the product algebra.
///
/// The first model's cyclic word frame `W` is transported to the second model.
/// The states agree iff Gram matrices agree on `W ∪ gW` (all generators `g`),
/// which makes the transported map well defined and intertwining.
pub fn states_equal(m1: &AnyModel, m2: &AnyModel, tol: Tolerance) -> Result<StateComparison> {
    if m1.scenario() != m2.scenario() {
        return Ok(StateComparison {
            equal: false,
            gram_defect: f64::INFINITY,
            intertwining_defect: f64::INFINITY,
            witness: StateWitness::ScenarioMismatch {
                reason: format!("{:?} vs {:?}", m1.scenario(), m2.scenario()),
            },
        });
    }
    let frame = word_frame(m1, tol);
    let k = frame.words.len();
    let letters = m1.scenario().letters();

    let mut extended: Vec<WordPair> = frame.words.clone();
    let mut seen: HashSet<WordPair> = extended.iter().cloned().collect();
    for w in &frame.words {
        for &(side, letter) in &letters {
            let e = extend_pair(w, side, letter);
            if seen.insert(e.clone()) {
                extended.push(e);
            }
        }
    }
    let vecs = |m: &AnyModel| -> Vec<CVector> {
        extended
            .iter()
            .map(|(wa, wb)| crate::models::word_vector(m, wa, wb))
            .collect()
    };
    let v1 = vecs(m1);
    let v2 = vecs(m2);
    let n = extended.len();
    let mut gram_defect: f64 = 0.0;
    let mut best: Option<(usize, f64, usize, usize)> = None;
    for i in 0..n {
        for j in i..n {
            let g1 = v1[i].dotc(&v1[j]);
            let g2 = v2[i].dotc(&v2[j]);
            let diff = (g1 - g2).norm();
            gram_defect = gram_defect.max(diff);
            if !tol.negligible(diff, 1.0) {
                let len = extended[i].0.len() + extended[i].1.len() + extended[j].0.len() + extended[j].1.len();
                let better = match best {
                    None => true,
                    Some((bl, bd, _, _)) => len < bl || (len == bl && diff > bd),
                };
                if better {
                    best = Some((len, diff, i, j));
                }
            }
        }
    }
    if let Some((_, _, i, j)) = best {
        let (wa, wb) = moment_words(&extended[i], &extended[j]);
        let first = evaluate_moment(m1, &wa, &wb)?;
        let second = evaluate_moment(m2, &wa, &wb)?;
        return Ok(StateComparison {
            equal: false,
            gram_defect,
            intertwining_defect: f64::NAN,
            witness: StateWitness::Distinguishing {
                word_a: wa,
                word_b: wb,
                first,
                second,
            },
        });
    }

    // Q₁ = V₁ T with T = R⁻¹, R = Q₁† V₁ upper triangular.
    let d1 = m1.carrier_dim();
    let d2 = m2.carrier_dim();
    let q1 = columns_of(&frame.orthonormal, d1);
    let basis_v1 = columns_of(&v1[..k], d1);
    let basis_v2 = columns_of(&v2[..k], d2);
    let rmat = q1.adjoint() * &basis_v1;
    let t = rmat
        .clone()
        .try_inverse()
        .ok_or(Error::AlgebraNotSemisimpleNumerically {
            residual: f64::INFINITY,
        })?;
    let f2 = &basis_v2 * &t;
    let t_norm = norm(&t);
    let mut intertwining_defect = norm(&(f2.adjoint() * &f2 - eye(k)));
    for &(side, letter) in &letters {
        let g1 = q1.adjoint() * m1.carrier_operator(side, letter) * &q1;
        let lhs = m2.carrier_operator(side, letter) * &f2;
        intertwining_defect = intertwining_defect.max(norm(&(lhs - &f2 * g1)));
    }
    let equal = tol.negligible(intertwining_defect, t_norm * t_norm);
    let witness = if equal {
        StateWitness::Unitary {
            matrix: &f2 * q1.adjoint(),
            cyclic_dim: k,
        }
    } else {
        // unreachable when the extended Gram matrices agree; keep a witness anyway
        let (wa, wb) = moment_words(&extended[0], &extended[0]);
        StateWitness::Distinguishing {
            first: evaluate_moment(m1, &wa, &wb)?,
            second: evaluate_moment(m2, &wa, &wb)?,
            word_a: wa,
            word_b: wb,
        }
    };
    Ok(StateComparison {
        equal,
        gram_defect,
        intertwining_defect,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::models::{correlation_of, tensor_with_aux, Scenario};
    use crate::numerics::r;
    use crate::numerics::{basis_vector, direct_sum, real_diag, real_matrix};
    use crate::random::{random_unitary, rng_for};
    use proptest::prelude::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn matrix_units(d: usize) -> Vec<CMatrix> {
        let mut out = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let mut e = CMatrix::zeros(d, d);
                e[(i, j)] = r(1.0);
                out.push(e);
            }
        }
        out
    }

    #[test]
    fn commutant_of_identity_is_everything() {
        assert_eq!(commutant_basis(&[eye(3)], tol()).unwrap().len(), 9);
    }

    #[test]
    fn commutant_of_matrix_units_is_scalars() {
        let basis = commutant_basis(&matrix_units(3), tol()).unwrap();
        assert_eq!(basis.len(), 1);
        let t = &basis[0];
        assert!((t - eye(3) * t[(0, 0)]).norm() < 1e-12);
    }

    #[test]
    fn commutant_of_doubled_block() {
        let gens: Vec<CMatrix> = matrix_units(2).iter().map(|g| direct_sum(g, g)).collect();
        assert_eq!(commutant_basis(&gens, tol()).unwrap().len(), 4);
    }

    #[test]
    fn commutant_basis_is_orthonormal_and_commutes() {
        let gens = fixtures::constructed_representation(&mut rng_for(40, 0), &[(2, 2), (1, 1)], 2);
        let basis = commutant_basis(&gens, tol()).unwrap();
        assert_eq!(basis.len(), 5);
        for (i, s) in basis.iter().enumerate() {
            for g in &gens {
                assert!((s * g - g * s).norm() < 1e-10);
            }
            for (j, t) in basis.iter().enumerate() {
                let ip = (s.adjoint() * t).trace();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - r(expect)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn chsh_alice_is_irreducible() {
        let dec = irrep_decompose(&side_generators(&fixtures::chsh_ideal(), Side::A), 0, tol()).unwrap();
        assert_eq!(dec.structure(), vec![(2, 1)]);
    }

    #[test]
    fn doubled_family_has_multiplicity_two() {
        let z = real_diag(&[1.0, -1.0]);
        let x = real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let gens = vec![direct_sum(&z, &z), direct_sum(&x, &x)];
        let dec = irrep_decompose(&gens, 1, tol()).unwrap();
        assert_eq!(dec.structure(), vec![(2, 2)]);
        assert!(dec.reassembly_defect < 1e-10);
    }

    #[test]
    fn inequivalent_blocks_stay_separate() {
        let z = real_diag(&[1.0, -1.0]);
        let x = real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]]);
        // second block swaps the roles of the two generators
        let gens = vec![direct_sum(&z, &x), direct_sum(&x, &z.scale(0.5))];
        let dec = irrep_decompose(&gens, 2, tol()).unwrap();
        assert_eq!(dec.structure(), vec![(2, 1), (2, 1)]);
        assert_eq!(commutant_basis(&gens, tol()).unwrap().len(), 2);
    }

    #[test]
    fn non_hermitian_generators_are_closed_under_adjoint() {
        // a single nilpotent generates M_2 together with its adjoint
        let e = real_matrix(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let dec = irrep_decompose(&[direct_sum(&e, &e)], 3, tol()).unwrap();
        assert_eq!(dec.structure(), vec![(2, 2)]);
    }

    #[test]
    fn decomposition_is_seed_reproducible() {
        let gens = fixtures::constructed_representation(&mut rng_for(41, 0), &[(2, 2), (3, 1)], 2);
        let a = irrep_decompose(&gens, 5, tol()).unwrap();
        let b = irrep_decompose(&gens, 5, tol()).unwrap();
        assert_eq!(a.change_of_basis, b.change_of_basis);
    }

    fn sorted(mut v: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
        v.sort();
        v
    }

    #[test]
    fn constructed_representations_round_trip() {
        let shapes: [&[(usize, usize)]; 6] = [
            &[(1, 3)],
            &[(2, 1), (2, 1)],
            &[(3, 2), (1, 1)],
            &[(2, 3), (1, 2)],
            &[(4, 1), (2, 2), (1, 1)],
            &[(3, 1), (3, 1), (2, 1)],
        ];
        for (i, shape) in shapes.iter().enumerate() {
            let gens = fixtures::constructed_representation(&mut rng_for(42, i as u64), shape, 3);
            let dec = irrep_decompose(&gens, i as u64, tol()).unwrap();
            assert_eq!(sorted(dec.structure()), sorted(shape.to_vec()));
            assert!(dec.reassembly_defect < 1e-8);
            let expected: usize = shape.iter().map(|(_, m)| m * m).sum();
            assert_eq!(dec.commutant_dim(), expected);
            assert_eq!(commutant_basis(&gens, tol()).unwrap().len(), expected);
            for b in &dec.blocks {
                assert_eq!(commutant_basis(&b.generators, tol()).unwrap().len(), 1);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn random_shapes_round_trip(seed in any::<u64>(), a in 1usize..4, ma in 1usize..3, b in 1usize..3, mb in 1usize..3) {
            let shape = vec![(a, ma), (b, mb)];
            let gens = fixtures::constructed_representation(&mut rng_for(seed, 0), &shape, 2);
            let dec = irrep_decompose(&gens, seed, tol()).unwrap();
            prop_assert_eq!(sorted(dec.structure()), sorted(shape.clone()));
            prop_assert!(dec.reassembly_defect < 1e-8);
        }
    }

    #[test]
    fn already_cyclic_model_is_unchanged() {
        let m: AnyModel = fixtures::chsh_ideal().into();
        let cm = cyclic_restrict(&m, tol()).unwrap();
        assert_eq!(cm.dim(), 4);
        assert!(matches!(cm.model, AnyModel::Tensor(_)));
        assert!((cm.isometry - eye(4)).norm() == 0.0);
    }

    #[test]
    fn unreachable_block_is_stripped() {
        let base = fixtures::chsh_ideal().to_commuting();
        let junk = fixtures::random_model(&mut rng_for(43, 0), base.scenario, 2, 2, false).to_commuting();
        let doubled = CommutingModel::new(
            base.scenario,
            8,
            base.m
                .iter()
                .zip(&junk.m)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| direct_sum(x, y)).collect())
                .collect(),
            base.n
                .iter()
                .zip(&junk.n)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| direct_sum(x, y)).collect())
                .collect(),
            {
                let mut v = CVector::zeros(8);
                v.rows_mut(0, 4).copy_from(&base.psi);
                v
            },
        )
        .unwrap();
        let cm = cyclic_restrict(&doubled.into(), tol()).unwrap();
        assert_eq!(cm.dim(), 4);
    }

    #[test]
    fn junk_blocks_of_tensor_model_give_tensor_restriction() {
        let mut rng = rng_for(44, 0);
        let m = fixtures::with_junk_blocks(&mut rng, &fixtures::chsh_ideal(), 2, 1);
        let cm = cyclic_restrict(&m.into(), tol()).unwrap();
        match &cm.model {
            AnyModel::Tensor(t) => assert_eq!((t.dim_a, t.dim_b), (2, 2)),
            AnyModel::Commuting(_) => panic!("expected a tensor restriction"),
        }
    }

    #[test]
    fn classical_example_cyclic_space() {
        let shat = fixtures::example_shat();
        let cm = cyclic_restrict(&shat.to_commuting().into(), tol()).unwrap();
        assert_eq!(cm.dim(), 2);
        assert_eq!(cm.basis_words.len(), 2);
        assert!(cm.basis_words[0].0.is_empty() && cm.basis_words[0].1.is_empty());
        assert_eq!(cm.basis_words[1].0, Word::letter(Side::A, 0, 0));
        // span{ψ, (M₀⊗Id)ψ} = span{|00>, |11>}
        let p = &cm.isometry * cm.isometry.adjoint();
        let expect = real_diag(&[1.0, 0.0, 0.0, 1.0]);
        assert!((p - expect).norm() < 1e-12);
        // as a tensor model the same subspace is not a product, so a commuting model comes back
        let ct = cyclic_restrict(&shat.into(), tol()).unwrap();
        assert!(matches!(ct.model, AnyModel::Commuting(_)));
        assert_eq!(ct.dim(), 2);
    }

    fn words_up_to(scenario: Scenario, side: Side, max: usize) -> Vec<Word> {
        let mut out = vec![Word::identity(side)];
        let mut layer = out.clone();
        for _ in 0..max {
            let mut next = Vec::new();
            for w in &layer {
                for x in 0..scenario.inputs(side) {
                    for a in 0..scenario.outputs(side) {
                        next.push(w.prepend(Letter::new(x, a)));
                    }
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    #[test]
    fn restriction_preserves_correlations_and_moments() {
        for seed in 0..6 {
            let mut rng = rng_for(45, seed);
            let base = fixtures::random_model(&mut rng, Scenario::binary(2, 2), 2, 2, seed % 2 == 0);
            let m: AnyModel = fixtures::with_junk_blocks(&mut rng, &base, 1, 1).into();
            let cm = cyclic_restrict(&m, tol()).unwrap();
            let p = correlation_of(&m, tol()).unwrap();
            let q = correlation_of(&cm.model, tol()).unwrap();
            assert!(p.max_abs_diff(&q) < 1e-10);
            let s = m.scenario();
            let wa = words_up_to(s, Side::A, 2);
            let wb = words_up_to(s, Side::B, 2);
            for a in &wa {
                for b in &wb {
                    let x = evaluate_moment(&m, a, b).unwrap();
                    let y = evaluate_moment(&cm.model, a, b).unwrap();
                    assert!((x - y).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn cyclic_state_has_trivial_stabilizer_in_commutant() {
        let mut rng = rng_for(46, 0);
        let base = fixtures::random_model(&mut rng, Scenario::binary(2, 2), 2, 2, true);
        let m: AnyModel = fixtures::with_junk_blocks(&mut rng, &base, 1, 1).into();
        let cm = cyclic_restrict(&m, tol()).unwrap();
        let s = cm.model.scenario();
        let gens: Vec<CMatrix> = s
            .letters()
            .into_iter()
            .map(|(side, l)| cm.model.carrier_operator(side, l))
            .collect();
        let comm = commutant_basis(&gens, tol()).unwrap();
        let psi = cm.model.state();
        let mut sys = CMatrix::zeros(psi.len(), comm.len());
        for (k, t) in comm.iter().enumerate() {
            sys.set_column(k, &(t * psi));
        }
        assert!(null_space(&sys, tol()).basis.is_empty());
    }

    #[test]
    fn auxiliary_register_is_invisible() {
        let m = fixtures::chsh_ideal();
        let aux = crate::numerics::kron_vec(&basis_vector(2, 0), &basis_vector(3, 1));
        let big = tensor_with_aux(&m, &aux, 2, 3).unwrap();
        let cmp = states_equal(&m.into(), &big.into(), tol()).unwrap();
        assert!(cmp.equal);
        match cmp.witness {
            StateWitness::Unitary { cyclic_dim, .. } => assert_eq!(cyclic_dim, 4),
            _ => panic!("expected a unitary witness"),
        }
    }

    #[test]
    fn classical_example_states_agree() {
        let s: AnyModel = fixtures::example_s().into();
        let shat: AnyModel = fixtures::example_shat().into();
        assert!(states_equal(&s, &shat, tol()).unwrap().equal);
        assert!(states_equal(&shat, &s, tol()).unwrap().equal);
    }

    #[test]
    fn different_correlations_are_distinguished_by_short_words() {
        let ideal: AnyModel = fixtures::chsh_ideal().into();
        let other: AnyModel = fixtures::two_qubit_model(0.3, [0.0, 1.0], [0.5, -0.5]).into();
        let cmp = states_equal(&ideal, &other, tol()).unwrap();
        assert!(!cmp.equal);
        match cmp.witness {
            StateWitness::Distinguishing {
                word_a,
                word_b,
                first,
                second,
            } => {
                assert!(word_a.len() + word_b.len() <= 2);
                assert!((first - second).norm() > 1e-6);
                assert_eq!(first, evaluate_moment(&ideal, &word_a, &word_b).unwrap());
            }
            _ => panic!("expected a distinguishing word"),
        }
    }

    #[test]
    fn scenario_mismatch_is_not_equal() {
        let a: AnyModel = fixtures::chsh_ideal().into();
        let b: AnyModel = fixtures::example_shat().into();
        let cmp = states_equal(&a, &b, tol()).unwrap();
        assert!(!cmp.equal);
        assert!(matches!(cmp.witness, StateWitness::ScenarioMismatch { .. }));
    }

    #[test]
    fn equality_is_reflexive_symmetric_and_frame_invariant() {
        for seed in 0..5 {
            let mut rng = rng_for(47, seed);
            let m = fixtures::random_model(&mut rng, Scenario::binary(2, 2), 2, 3, false);
            let framed = fixtures::random_local_frame(&mut rng, &m);
            let other = fixtures::random_model(&mut rng, Scenario::binary(2, 2), 2, 3, false);
            let (m, framed, other): (AnyModel, AnyModel, AnyModel) = (m.into(), framed.into(), other.into());
            assert!(states_equal(&m, &m, tol()).unwrap().equal);
            assert!(states_equal(&m, &framed, tol()).unwrap().equal);
            assert!(states_equal(&framed, &m, tol()).unwrap().equal);
            assert_eq!(
                states_equal(&m, &other, tol()).unwrap().equal,
                states_equal(&other, &m, tol()).unwrap().equal
            );
            assert!(!states_equal(&m, &other, tol()).unwrap().equal);
        }
    }

    #[test]
    fn unitary_witness_intertwines() {
        let mut rng = rng_for(48, 0);
        let m = fixtures::random_model(&mut rng, Scenario::binary(2, 2), 2, 2, true);
        let u = random_unitary(&mut rng, 2);
        let v = random_unitary(&mut rng, 2);
        let framed = fixtures::conjugate_locally(&m, &u, &v);
        let cmp = states_equal(&m.clone().into(), &framed.clone().into(), tol()).unwrap();
        let StateWitness::Unitary { matrix, .. } = cmp.witness else {
            panic!("expected a unitary witness")
        };
        assert!((&matrix * &m.psi - &framed.psi).norm() < 1e-9);
        assert!((matrix - kron(&u, &v)).norm() < 1e-8);
    }
}
