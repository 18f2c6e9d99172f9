use std::fmt;

use thiserror::Error;

use crate::numerics::Side;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("zero vector")]
    ZeroVector,

    #[error("tolerance must be finite and positive, got {0}")]
    InvalidTolerance(f64),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("not a POVM: {0}")]
    NotPovm(String),

    #[error("state is not full rank (Schmidt rank {rank}, local dimensions {dim_a}x{dim_b})")]
    RankDeficient { rank: usize, dim_a: usize, dim_b: usize },

    #[error("generated algebra is not numerically semisimple (residual {residual:.3e})")]
    AlgebraNotSemisimpleNumerically { residual: f64 },

    #[error("not dilatable: {0}")]
    NotDilatable(NotDilatable),

    #[error(
        "binary rounding condition violated on side {side}, input {input}: eigenvalue {eigenvalue} \
         (index {index}) is neither 0 nor 1 and its eigenvector is visible to the state \
         (residual {residual:.3e})"
    )]
    LemmaViolated {
        side: Side,
        input: usize,
        index: usize,
        eigenvalue: f64,
        residual: f64,
    },

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("alpha = {0} is outside [0, 2)")]
    AlphaOutOfRange(f64),

    #[error("operation requires a binary scenario (two outcomes per party)")]
    NotBinary,

    #[error("not synchronous: {0}")]
    NotSynchronous(String),
}

/// Reasons a local dilation search gives up.
#[derive(Debug, Clone, PartialEq)]
pub enum NotDilatable {
    /// Isometries preserve Schmidt rank, so the target rank must divide the source rank.
    SchmidtRankObstruction { source_rank: usize, target_rank: usize },
    /// The target's associated representation is reducible on one side.
    TargetReducible { side: Side, commutant_dim: usize },
    /// A ψ-supported irreducible component is not equivalent to the target's representation.
    ComponentRepresentation { side: Side, block: usize, reason: String },
    /// A ψ-supported component carries a state different from the target's.
    ComponentState {
        block_a: usize,
        block_b: usize,
        residual: f64,
    },
    /// Assembled witness failed verification.
    VerificationFailed { residual: f64 },
}

impl fmt::Display for NotDilatable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NotDilatable::SchmidtRankObstruction {
                source_rank,
                target_rank,
            } => write!(
                f,
                "Schmidt rank obstruction: target rank {target_rank} does not divide source rank {source_rank} \
                 (local isometries preserve Schmidt rank)"
            ),
            NotDilatable::TargetReducible { side, commutant_dim } => write!(
                f,
                "target representation on side {side} is reducible (commutant dimension {commutant_dim})"
            ),
            NotDilatable::ComponentRepresentation { side, block, reason } => {
                write!(f, "component {block} on side {side}: {reason}")
            }
            NotDilatable::ComponentState {
                block_a,
                block_b,
                residual,
            } => write!(
                f,
                "component ({block_a}, {block_b}) carries a different state than the target (residual {residual:.3e})"
            ),
            NotDilatable::VerificationFailed { residual } => {
                write!(f, "assembled witness failed verification (residual {residual:.3e})")
            }
        }
    }
}
