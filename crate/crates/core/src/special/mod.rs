//! Synchronous and binary correlations, XOR certificates and tilted CHSH.

pub mod binary;
pub mod optimize;
pub mod poly;
pub mod sync;
pub mod tilted;
pub mod xor;

pub use binary::{binary_round, BinaryRounding};
pub use optimize::{optimize_tilted, OptimizedModel, SearchConfig};
pub use poly::{Gen, NcPoly, Substitution};
pub use sync::{synchronous_verify, SyncReport};
pub use tilted::{
    tilted_chsh_build, tilted_delta, tilted_lambda, verify_tilted_sos, TiltedChsh, TiltedChshCertificate,
};
pub use xor::{refute_extremality, xor_of, xor_selftest_certificate, XorCertificate, XorCorrelation};
