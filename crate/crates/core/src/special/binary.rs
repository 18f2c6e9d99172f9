//! Rounding binary POVM models to PVM models when the correlation is extreme.
//!
//! For an extreme binary correlation every eigenpair `(λ, φ)` of `M^x_0` has
//! `λ = 0`, `λ = 1`, or `φ` invisible to the state. Keeping only the
//! eigenvalue-1 eigenspaces gives projections that act on `ψ` exactly as the
//! original effects, so the identity isometries witness the dilation.

use serde::Serialize;

use crate::dilations::DilationWitness;
use crate::error::{Error, Result};
use crate::models::{correlation_of, is_projective_model, QuantumModel};
use crate::numerics::{eye, hermitian_eig, kron, vnorm, CMatrix, Side, Tolerance};

#[derive(Clone, Debug, Serialize)]
pub struct EigenCondition {
    pub side: Side,
    pub input: usize,
    pub eigenvalue: f64,
    /// Which alternative held: `"zero"`, `"one"` or `"invisible"`.
    pub condition: &'static str,
    /// `‖(P_λ ⊗ Id) ψ‖` for the eigenspace.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct BinaryRounding {
    pub model: QuantumModel,
    pub witness: DilationWitness,
    pub extremality_asserted: bool,
    pub conditions: Vec<EigenCondition>,
    /// `max ‖(M^x_a − P^x_a) ⊗ Id ψ‖` over both sides.
    pub max_state_defect: f64,
    pub correlation_defect: f64,
}

fn round_effect(
    m: &QuantumModel,
    side: Side,
    input: usize,
    effect: &CMatrix,
    tol: Tolerance,
    conditions: &mut Vec<EigenCondition>,
) -> Result<CMatrix> {
    let eig = hermitian_eig(effect, tol)?;
    let d = effect.nrows();
    let mut proj = CMatrix::zeros(d, d);
    for (k, cluster) in eig.clusters().into_iter().enumerate() {
        let lambda = eig.values[cluster.start];
        let vecs = eig.vectors.columns(cluster.start, cluster.len());
        let p = &vecs * vecs.adjoint();
        let lifted = match side {
            Side::A => kron(&p, &eye(m.dim_b)),
            Side::B => kron(&eye(m.dim_a), &p),
        };
        let weight = vnorm(&(lifted * &m.psi));
        let condition = if tol.negligible(lambda.abs(), 1.0) {
            "zero"
        } else if tol.negligible((lambda - 1.0).abs(), 1.0) {
            proj += &p;
            "one"
        } else if tol.negligible(weight, 1.0) {
            "invisible"
        } else {
            return Err(Error::LemmaViolated {
                side,
                input,
                index: k,
                eigenvalue: lambda,
                residual: weight,
            });
        };
        conditions.push(EigenCondition {
            side,
            input,
            eigenvalue: lambda,
            condition,
            weight,
        });
    }
    Ok(proj)
}

/// Replace every binary measurement by the projection onto the eigenvalue-1
/// eigenspace of its first effect.
///
/// `extremal_assertion` is the caller's claim that the correlation is extreme;
/// it cannot be checked here and is carried into the result unchanged.
pub fn binary_round(m: &QuantumModel, extremal_assertion: bool, tol: Tolerance) -> Result<BinaryRounding> {
    if !m.scenario.is_binary() {
        return Err(Error::NotBinary);
    }
    let mut conditions = Vec::new();
    let mut round_family = |side: Side, family: &Vec<Vec<CMatrix>>, dim: usize| -> Result<Vec<Vec<CMatrix>>> {
        family
            .iter()
            .enumerate()
            .map(|(x, ops)| {
                let p0 = round_effect(m, side, x, &ops[0], tol, &mut conditions)?;
                let p1 = eye(dim) - &p0;
                Ok(vec![p0, p1])
            })
            .collect()
    };
    let new_m = round_family(Side::A, &m.m, m.dim_a)?;
    let new_n = round_family(Side::B, &m.n, m.dim_b)?;
    let rounded = QuantumModel::new(m.scenario, m.dim_a, m.dim_b, new_m, new_n, m.psi.clone())?;

    let mut max_state_defect: f64 = 0.0;
    for x in 0..m.scenario.n_x {
        for a in 0..2 {
            let diff = &m.m[x][a] - &rounded.m[x][a];
            max_state_defect = max_state_defect.max(vnorm(&m.apply_a(&diff, &m.psi)));
        }
    }
    for y in 0..m.scenario.n_y {
        for b in 0..2 {
            let diff = &m.n[y][b] - &rounded.n[y][b];
            max_state_defect = max_state_defect.max(vnorm(&m.apply_b(&diff, &m.psi)));
        }
    }
    let correlation_defect = correlation_of(m, tol)?.max_abs_diff(&correlation_of(&rounded, tol)?);
    debug_assert!(is_projective_model(&rounded, tol));
    Ok(BinaryRounding {
        witness: DilationWitness::identity(m.dim_a, m.dim_b),
        model: rounded,
        extremality_asserted: extremal_assertion,
        conditions,
        max_state_defect,
        correlation_defect,
    })
}
