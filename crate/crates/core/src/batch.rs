//! Seeded sweeps over independent fixtures, run in parallel with rayon or
//! sequentially. Item `i` always draws from `rng_for(seed, i)`, so both modes
//! return identical results in identical order.

use crate::fixtures;
use crate::models::Scenario;
use crate::numerics::Tolerance;
use crate::random::rng_for;
use crate::schmidt_support::{is_centrally_supported_via_transfer, support_of};
use crate::special::verify_tilted_sos;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// Parallel only when the `parallel` feature is compiled in.
    pub fn effective(self) -> Execution {
        if cfg!(feature = "parallel") {
            self
        } else {
            Execution::Sequential
        }
    }
}

pub fn map_indices<R, F>(count: usize, exec: Execution, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec.effective() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriteriaOutcome {
    pub index: usize,
    pub family: &'static str,
    pub commutator: bool,
    pub transfer: bool,
}

impl CriteriaOutcome {
    pub fn agree(&self) -> bool {
        self.commutator == self.transfer
    }
}

/// Fixture `i` of the central-support sweep: full-rank, block-diagonal
/// (junk blocks) and support-mixing models in rotation, all dims ≤ 6.
pub fn criteria_fixture(seed: u64, i: usize) -> (&'static str, crate::models::QuantumModel) {
    let mut rng = rng_for(seed, i as u64);
    match i % 3 {
        0 => {
            let d = 1 + i / 3 % 5;
            let sc = Scenario::new(2, 2, 2, 3).expect("positive");
            (
                "full-rank",
                fixtures::random_model(&mut rng, sc, d, 1 + (i / 15) % 5, i % 2 == 0),
            )
        }
        1 => {
            let base = match i / 3 % 3 {
                0 => fixtures::chsh_ideal(),
                1 => fixtures::chsh_with_entangled_aux(0.4),
                _ => fixtures::chsh_direct_sum(0.3),
            };
            let base = if base.dim_a > 2 {
                base
            } else {
                fixtures::with_junk_blocks(&mut rng, &base, 2, 1)
            };
            ("block-diagonal", fixtures::random_local_frame(&mut rng, &base))
        }
        _ => {
            let da = 3 + i / 3 % 4;
            let db = 3 + i / 12 % 4;
            ("support-mixing", fixtures::support_mixing_model(&mut rng, da, db))
        }
    }
}

pub fn criteria_sweep(seed: u64, count: usize, tol: Tolerance, exec: Execution) -> Vec<CriteriaOutcome> {
    map_indices(count, exec, |i| {
        let (family, m) = criteria_fixture(seed, i);
        let commutator = support_of(&m, tol).map(|s| s.centrally_supported).unwrap_or(false);
        let (transfer, _) = is_centrally_supported_via_transfer(&m, tol);
        CriteriaOutcome {
            index: i,
            family,
            commutator,
            transfer,
        }
    })
}

/// Largest SOS identity defect over `count` random binary POVM models.
pub fn tilted_identity_sweep(
    alpha: f64,
    seed: u64,
    count: usize,
    tol: Tolerance,
    exec: Execution,
) -> crate::Result<f64> {
    let defects = map_indices(count, exec, |i| {
        let mut rng = rng_for(seed, i as u64);
        let m = fixtures::random_binary_model(&mut rng, 1 + i % 3, 1 + i / 3 % 3);
        verify_tilted_sos(&m, alpha, tol).map(|c| c.max_identity_defect())
    });
    defects.into_iter().try_fold(0.0, |acc, d| d.map(|d| f64::max(acc, d)))
}
