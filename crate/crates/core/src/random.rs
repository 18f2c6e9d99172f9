//! Seeded random generators for operators, states and measurements.
//!
//! Every generator takes an explicit RNG; `rng_for(seed, index)` derives an
//! independent stream per batch item so parallel and sequential sweeps agree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numerics::{c, eye, hermitian_eig, norm, r, CMatrix, CVector, Tolerance};

pub type SeededRng = ChaCha8Rng;

pub fn rng_for(seed: u64, index: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

pub fn random_hermitian(rng: &mut impl Rng, d: usize) -> CMatrix {
    let g = ginibre(rng, d, d);
    (&g + g.adjoint()).scale(0.5)
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> CMatrix {
    let qr = ginibre(rng, d, d).qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..d {
        let z = rr[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { r(1.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

pub fn random_state(rng: &mut impl Rng, d: usize) -> CVector {
    let v = CVector::from_fn(d, |_, _| c(gaussian(rng), gaussian(rng)));
    let n = v.norm();
    v / r(n)
}

/// Real nonnegative entries summing to one, each at least `floor / len`.
pub fn random_simplex(rng: &mut impl Rng, len: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0) + floor).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// Orthogonal projection of uniformly random rank in `1..d` (rank 1 when d = 1).
pub fn random_projection(rng: &mut impl Rng, d: usize) -> CMatrix {
    let rank = if d > 1 { rng.gen_range(1..d) } else { 1 };
    let u = random_unitary(rng, d);
    let cols = u.columns(0, rank);
    &cols * cols.adjoint()
}

/// Generic POVM with `k` outcomes: `M_i = S^{-1/2} G_i S^{-1/2}` with `S = sum G_i`.
pub fn random_povm(rng: &mut impl Rng, d: usize, k: usize) -> Vec<CMatrix> {
    let gs: Vec<CMatrix> = (0..k)
        .map(|_| {
            let g = ginibre(rng, d, d);
            &g * g.adjoint()
        })
        .collect();
    let total = gs.iter().fold(CMatrix::zeros(d, d), |acc, g| acc + g);
    let eig = hermitian_eig(&total, Tolerance::default()).expect("sum of Gram matrices is Hermitian");
    let inv_sqrt = CMatrix::from_diagonal(&CVector::from_iterator(d, eig.values.iter().map(|l| r(1.0 / l.sqrt()))));
    let s = &eig.vectors * inv_sqrt * eig.vectors.adjoint();
    gs.iter()
        .map(|g| {
            let m = &s * g * &s;
            (&m + m.adjoint()).scale(0.5)
        })
        .collect()
}

/// PVM with `k` outcomes: a random orthonormal basis split into `k` groups.
/// Every outcome gets at least one basis vector when `d >= k`.
pub fn random_pvm(rng: &mut impl Rng, d: usize, k: usize) -> Vec<CMatrix> {
    let u = random_unitary(rng, d);
    let mut owner: Vec<usize> = (0..d).map(|i| if i < k { i } else { rng.gen_range(0..k) }).collect();
    // shuffle the assignment so outcome 0 is not always the first column
    for i in (1..d).rev() {
        let j = rng.gen_range(0..=i);
        owner.swap(i, j);
    }
    (0..k)
        .map(|a| {
            let mut p = CMatrix::zeros(d, d);
            for (col, &o) in owner.iter().enumerate() {
                if o == a {
                    let v = u.column(col);
                    p += &v * v.adjoint();
                }
            }
            p
        })
        .collect()
}

/// Binary POVM whose effect `M_0` has eigenvalues drawn from [0, 1].
pub fn random_binary_povm(rng: &mut impl Rng, d: usize) -> [CMatrix; 2] {
    let u = random_unitary(rng, d);
    let diag = CVector::from_fn(d, |_, _| r(rng.gen_range(0.0..1.0)));
    let m0 = &u * CMatrix::from_diagonal(&diag) * u.adjoint();
    let m0 = (&m0 + m0.adjoint()).scale(0.5);
    let m1 = eye(d) - &m0;
    [m0, m1]
}

/// Scale-free distance between two operators, for test assertions.
pub fn distance(a: &CMatrix, b: &CMatrix) -> f64 {
    norm(&(a - b))
}
