//! Synchronous models: `p(a,b|x,x) = 0` whenever `a ≠ b`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{correlation_of, projective_state_defect, QuantumModel};
use crate::numerics::{eye, kron, norm, vnorm, Side, Tolerance};
use crate::schmidt_support::{is_centrally_supported_via_transfer, schmidt_decompose, support_of};

#[derive(Clone, Debug, Serialize)]
pub struct SwapResidual {
    pub input: usize,
    pub output: usize,
    /// `‖(M^x_a ⊗ Id − Id ⊗ N^x_a) ψ‖`.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectivityResidual {
    pub side: Side,
    pub input: usize,
    pub output: usize,
    /// `‖M² − M‖`.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SyncReport {
    pub synchronicity_defect: f64,
    pub swap_residuals: Vec<SwapResidual>,
    pub max_swap_residual: f64,
    pub full_rank: bool,
    /// Present only for full-rank states, where projectivity is forced.
    pub projectivity_residuals: Option<Vec<ProjectivityResidual>>,
    pub max_projectivity_residual: Option<f64>,
    pub projective_state: bool,
    pub projective_state_defect: f64,
    pub centrally_supported: bool,
    pub centrally_supported_via_transfer: bool,
    /// Synchronous and full rank, yet some effect is not a projection.
    pub lemma_contradiction: bool,
    pub passed: bool,
}

pub fn synchronous_verify(m: &QuantumModel, tol: Tolerance) -> Result<SyncReport> {
    let s = m.scenario;
    if !s.is_synchronous_shape() {
        return Err(Error::NotSynchronous(format!(
            "scenario {:?} does not have X = Y and A = B",
            s
        )));
    }
    let p = correlation_of(m, tol)?;
    let defect = p.synchronicity_defect().unwrap_or(f64::INFINITY);
    if defect > tol.eps {
        return Err(Error::NotSynchronous(format!(
            "max_x max_(a≠b) p(a,b|x,x) = {defect:.3e}"
        )));
    }

    let ia = eye(m.dim_a);
    let ib = eye(m.dim_b);
    let mut swap_residuals = Vec::new();
    for x in 0..s.n_x {
        for a in 0..s.n_a {
            let diff = kron(&m.m[x][a], &ib) - kron(&ia, &m.n[x][a]);
            swap_residuals.push(SwapResidual {
                input: x,
                output: a,
                residual: vnorm(&(diff * &m.psi)),
            });
        }
    }
    let max_swap_residual = swap_residuals.iter().map(|r| r.residual).fold(0.0, f64::max);

    let rank = schmidt_decompose(&m.psi, m.dim_a, m.dim_b, tol)?.rank;
    let full_rank = rank == m.dim_a && rank == m.dim_b;
    let projectivity_residuals = full_rank.then(|| {
        let mut out = Vec::new();
        for (side, family) in [(Side::A, &m.m), (Side::B, &m.n)] {
            for (x, ops) in family.iter().enumerate() {
                for (a, op) in ops.iter().enumerate() {
                    out.push(ProjectivityResidual {
                        side,
                        input: x,
                        output: a,
                        residual: norm(&(op * op - op)),
                    });
                }
            }
        }
        out
    });
    let max_projectivity_residual = projectivity_residuals
        .as_ref()
        .map(|v| v.iter().map(|r| r.residual).fold(0.0, f64::max));
    let lemma_contradiction = max_projectivity_residual.is_some_and(|r| !tol.negligible(r, 1.0));

    let ps_defect = projective_state_defect(m);
    let projective_state = tol.negligible(ps_defect, 1.0);
    let centrally_supported = support_of(m, tol)?.centrally_supported;
    let (centrally_supported_via_transfer, _) = is_centrally_supported_via_transfer(m, tol);

    let passed = tol.negligible(max_swap_residual, 1.0)
        && !lemma_contradiction
        && projective_state
        && centrally_supported
        && centrally_supported_via_transfer;
    Ok(SyncReport {
        synchronicity_defect: defect,
        swap_residuals,
        max_swap_residual,
        full_rank,
        projectivity_residuals,
        max_projectivity_residual,
        projective_state,
        projective_state_defect: ps_defect,
        centrally_supported,
        centrally_supported_via_transfer,
        lemma_contradiction,
        passed,
    })
}
