//! Schmidt decomposition, support projections and support models, the
//! centrally-supported property, and the full-rank operator transfer.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{Povms, QuantumModel};
use crate::numerics::{
    canonical_subspace_basis, fix_phase, from_coefficients, r, svd, to_coefficients, vnorm, CMatrix, CVector, Side,
    Svd, Tolerance, CLUSTER_GAP,
};

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    /// Positive, descending.
    pub coefficients: Vec<f64>,
    pub left_basis: Vec<CVector>,
    pub right_basis: Vec<CVector>,
    pub rank: usize,
    pub dim_a: usize,
    pub dim_b: usize,
}

impl SchmidtDecomposition {
    pub fn reconstruct(&self) -> CVector {
        let mut coeffs = CMatrix::zeros(self.dim_a, self.dim_b);
        for k in 0..self.rank {
            coeffs += (&self.left_basis[k] * self.right_basis[k].transpose()).scale(self.coefficients[k]);
        }
        from_coefficients(&coeffs)
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim_a && self.rank == self.dim_b
    }

    /// Left Schmidt vectors as columns.
    pub fn left_matrix(&self) -> CMatrix {
        columns(&self.left_basis, self.dim_a)
    }

    pub fn right_matrix(&self) -> CMatrix {
        columns(&self.right_basis, self.dim_b)
    }
}

fn columns(vs: &[CVector], rows: usize) -> CMatrix {
    let mut m = CMatrix::zeros(rows, vs.len());
    for (k, v) in vs.iter().enumerate() {
        m.set_column(k, v);
    }
    m
}

/// Singular values at most `eps * sigma_max` count as zero.
fn support_rank(sv: &[f64], tol: Tolerance) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| s > tol.eps * smax).count()
}

/// Schmidt decomposition via the SVD of the coefficient matrix.
///
/// Left vectors within a degenerate coefficient cluster are put in the
/// canonical basis used by `hermitian_eig`, and each gets its first
/// non-negligible entry real positive; right vectors follow as
/// `conj(Ψ)^† α / λ`, which keeps the reconstruction exact.
pub fn schmidt_decompose(psi: &CVector, dim_a: usize, dim_b: usize, tol: Tolerance) -> Result<SchmidtDecomposition> {
    if psi.len() != dim_a * dim_b {
        return Err(Error::DimensionMismatch(format!(
            "state of length {} does not match {}x{}",
            psi.len(),
            dim_a,
            dim_b
        )));
    }
    if vnorm(psi) == 0.0 || !psi.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::ZeroVector);
    }
    let coeffs = to_coefficients(psi, dim_a, dim_b);
    let Svd { u, values, .. } = svd(&coeffs);
    let rank = support_rank(&values, tol);

    let mut left: Vec<CVector> = (0..rank).map(|i| u.column(i).into_owned()).collect();
    let mut start = 0;
    for k in 1..=rank {
        let split = k == rank || (values[k - 1] - values[k]).abs() >= CLUSTER_GAP * (1.0 + values[k]);
        if split {
            let canon = canonical_subspace_basis(&left[start..k]);
            left.splice(start..k, canon);
            start = k;
        }
    }
    let coefficients: Vec<f64> = values[..rank].to_vec();
    let mut right = Vec::with_capacity(rank);
    for (k, alpha) in left.iter_mut().enumerate() {
        fix_phase(alpha);
        let beta = coeffs.transpose() * alpha.map(|z| z.conj()) / r(coefficients[k]);
        right.push(beta);
    }
    Ok(SchmidtDecomposition {
        coefficients,
        left_basis: left,
        right_basis: right,
        rank,
        dim_a,
        dim_b,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorResidual {
    pub side: Side,
    pub input: usize,
    pub output: usize,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct SupportData {
    pub pi_a: CMatrix,
    pub pi_b: CMatrix,
    pub support_model: QuantumModel,
    /// Isometries from the support spaces into `H_A`, `H_B` (Schmidt vectors as columns).
    pub embed_a: CMatrix,
    pub embed_b: CMatrix,
    pub centrally_supported: bool,
    pub commutator_residuals: Vec<CommutatorResidual>,
}

impl SupportData {
    pub fn max_residual(&self) -> f64 {
        self.commutator_residuals.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

fn compress(family: &Povms, embed: &CMatrix) -> Povms {
    family
        .iter()
        .map(|ops| {
            ops.iter()
                .map(|op| {
                    let t = embed.adjoint() * op * embed;
                    (&t + t.adjoint()).scale(0.5)
                })
                .collect()
        })
        .collect()
}

fn commutator_table(side: Side, family: &Povms, pi: &CMatrix) -> Vec<CommutatorResidual> {
    let mut out = Vec::new();
    for (x, ops) in family.iter().enumerate() {
        for (a, op) in ops.iter().enumerate() {
            let comm = pi * op - op * pi;
            out.push(CommutatorResidual {
                side,
                input: x,
                output: a,
                residual: comm.norm(),
            });
        }
    }
    out
}

pub fn support_of(model: &QuantumModel, tol: Tolerance) -> Result<SupportData> {
    let sd = schmidt_decompose(&model.psi, model.dim_a, model.dim_b, tol)?;
    let embed_a = sd.left_matrix();
    // ψ = Σ λ α⊗β, so Bob's support is spanned by the β.
    let embed_b = sd.right_matrix();
    let pi_a = &embed_a * embed_a.adjoint();
    let pi_b = &embed_b * embed_b.adjoint();

    let mut coeffs =
        embed_a.adjoint() * to_coefficients(&model.psi, model.dim_a, model.dim_b) * embed_b.map(|z| z.conj());
    let n = coeffs.norm();
    coeffs /= r(n);
    let support_model = QuantumModel {
        scenario: model.scenario,
        dim_a: sd.rank,
        dim_b: sd.rank,
        m: compress(&model.m, &embed_a),
        n: compress(&model.n, &embed_b),
        psi: from_coefficients(&coeffs),
    };

    let mut table = commutator_table(Side::A, &model.m, &pi_a);
    table.extend(commutator_table(Side::B, &model.n, &pi_b));
    let centrally_supported = table.iter().all(|c| tol.negligible(c.residual, 1.0));
    Ok(SupportData {
        pi_a,
        pi_b,
        support_model,
        embed_a,
        embed_b,
        centrally_supported,
        commutator_residuals: table,
    })
}

/// Moore-Penrose pseudo-inverse with the support-rank cutoff.
fn pseudo_inverse(m: &CMatrix, tol: Tolerance) -> CMatrix {
    let Svd { u, values, v } = svd(m);
    let smax = values.first().copied().unwrap_or(0.0);
    let mut out = CMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in values.iter().enumerate() {
        if s > tol.eps * smax {
            out += v.column(k) * u.column(k).adjoint() / r(s);
        }
    }
    out
}

/// Transfer criterion: for every measurement operator `E` of Alice, the best
/// `X` in `min ‖(E⊗Id − Id⊗X)ψ‖`, and symmetrically for Bob.
///
/// With `Ψ` the coefficient matrix, `(E⊗Id)ψ ↔ EΨ` and `(Id⊗X)ψ ↔ ΨXᵀ`, so the
/// vectorized system is block diagonal with blocks `Ψ` and is solved column by
/// column through `Ψ⁺`.
pub fn is_centrally_supported_via_transfer(model: &QuantumModel, tol: Tolerance) -> (bool, Vec<CommutatorResidual>) {
    let psi = to_coefficients(&model.psi, model.dim_a, model.dim_b);
    let pinv = pseudo_inverse(&psi, tol);
    let mut table = Vec::new();
    for (x, ops) in model.m.iter().enumerate() {
        for (a, op) in ops.iter().enumerate() {
            let target = op * &psi;
            let y = &pinv * &target;
            table.push(CommutatorResidual {
                side: Side::A,
                input: x,
                output: a,
                residual: (&target - &psi * y).norm(),
            });
        }
    }
    for (y, ops) in model.n.iter().enumerate() {
        for (b, op) in ops.iter().enumerate() {
            let target = &psi * op.transpose();
            let x = &target * &pinv;
            table.push(CommutatorResidual {
                side: Side::B,
                input: y,
                output: b,
                residual: (&target - x * &psi).norm(),
            });
        }
    }
    let ok = table.iter().all(|c| tol.negligible(c.residual, 1.0));
    (ok, table)
}

/// For a full-rank state, the operator `Ê` on the other factor with
/// `(E⊗Id)ψ = (Id⊗Ê)ψ` (from `Side::A`) or `(Id⊗E)ψ = (Ê⊗Id)ψ` (from `Side::B`).
///
/// In the Schmidt bases `Ê = λ Eᵀ λ⁻¹`.
pub fn transfer_operator(e: &CMatrix, sd: &SchmidtDecomposition, from: Side) -> Result<CMatrix> {
    if !sd.is_full_rank() {
        return Err(Error::RankDeficient {
            rank: sd.rank,
            dim_a: sd.dim_a,
            dim_b: sd.dim_b,
        });
    }
    let (src, dst) = match from {
        Side::A => (sd.left_matrix(), sd.right_matrix()),
        Side::B => (sd.right_matrix(), sd.left_matrix()),
    };
    if e.nrows() != src.nrows() || !e.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, local dimension is {}",
            e.nrows(),
            e.ncols(),
            src.nrows()
        )));
    }
    let es = src.adjoint() * e * &src;
    let lam = &sd.coefficients;
    let d = lam.len();
    let hat = CMatrix::from_fn(d, d, |j, i| es[(i, j)] * r(lam[j] / lam[i]));
    Ok(&dst * hat * dst.adjoint())
}
