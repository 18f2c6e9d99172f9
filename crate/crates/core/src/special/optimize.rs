//! Seeded multistart Nelder–Mead search for tilted-CHSH optimal models in the
//! two-qubit family `cos t|00> + sin t|11>` with observables in the Z–X plane.

use rand::Rng;

use super::poly::Substitution;
use super::tilted::{check_alpha, tilted_chsh_build, TiltedChsh};
use crate::error::Result;
use crate::fixtures::two_qubit_model;
use crate::models::QuantumModel;
use crate::random::rng_for;

#[derive(Clone, Debug)]
pub struct OptimizedModel {
    pub model: QuantumModel,
    /// `[t, θ0, θ1, φ0, φ1]`.
    pub params: Vec<f64>,
    pub value: f64,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub starts: usize,
    pub max_iters: u64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            starts: 8,
            max_iters: 4000,
            seed: 0,
        }
    }
}

pub fn model_from_params(p: &[f64]) -> QuantumModel {
    two_qubit_model(p[0], [p[1], p[2]], [p[3], p[4]])
}

fn value_of(table: &TiltedChsh, p: &[f64]) -> f64 {
    let m = model_from_params(p);
    let subs = Substitution::from_model(&m);
    m.psi.dotc(&(table.eta.evaluate(&subs) * &m.psi)).re
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction ½, shrink ½)
/// minimizing `f`; stops when the simplex values spread less than `ftol`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: &[f64], step: f64, max_iters: u64, ftol: f64) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = (0..=n)
        .map(|i| {
            let mut v = start.to_vec();
            if i > 0 {
                v[i - 1] += step;
            }
            let fv = f(&v);
            (v, fv)
        })
        .collect();
    let along = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> { c.iter().zip(w).map(|(c, w)| c + t * (w - c)).collect() };
    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[n].1 - simplex[0].1).abs() <= ftol {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|p| p.0[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflected = along(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (toward, ft) = if fr < worst.1 {
                (reflected, fr)
            } else {
                (worst.0.clone(), worst.1)
            };
            let contracted = along(&centroid, &toward, 0.5);
            let fc = f(&contracted);
            if fc < ft {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    p.0 = along(&best, &p.0, 0.5);
                    p.1 = f(&p.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

fn run_from(table: &TiltedChsh, start: &[f64], step: f64, max_iters: u64) -> (Vec<f64>, f64) {
    let (p, neg) = nelder_mead(|p| -value_of(table, p), start, step, max_iters, 1e-15);
    (p, -neg)
}

/// Best model found over `starts` random initial points, each polished by a
/// second run started from its own optimum.
pub fn optimize_tilted(alpha: f64, cfg: SearchConfig) -> Result<OptimizedModel> {
    check_alpha(alpha)?;
    let table = tilted_chsh_build(alpha)?;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for k in 0..cfg.starts {
        let mut rng = rng_for(cfg.seed, k as u64);
        let start: Vec<f64> = (0..5)
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let (p, _) = run_from(&table, &start, 0.4, cfg.max_iters);
        let (p, v) = run_from(&table, &p, 1e-3, cfg.max_iters);
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((p, v));
        }
    }
    let (params, value) = best.expect("at least one start");
    Ok(OptimizedModel {
        model: model_from_params(&params),
        params,
        value,
        lambda: table.lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tolerance;
    use crate::special::tilted::verify_tilted_sos;

    /// Known optimum: `A0 = Z`, `A1 = X`, `B_y = cos μ Z ± sin μ X` with
    /// `tan μ = sin 2t` and `α = 2 / √(1 + 2 tan² 2t)`.
    fn closed_form(alpha: f64) -> QuantumModel {
        let tan2t_sq = (4.0 / (alpha * alpha) - 1.0) / 2.0;
        let two_t = tan2t_sq.sqrt().atan();
        let mu = two_t.sin().atan();
        model_from_params(&[two_t / 2.0, 0.0, std::f64::consts::FRAC_PI_2, mu, -mu])
    }

    #[test]
    fn closed_form_reaches_lambda() {
        for alpha in [0.3, 0.8, 1.5] {
            let cert = verify_tilted_sos(&closed_form(alpha), alpha, Tolerance::default()).unwrap();
            assert!(
                (cert.value - cert.lambda).abs() < 1e-12,
                "alpha {alpha}: {} vs {}",
                cert.value,
                cert.lambda
            );
        }
    }

    #[test]
    fn optimizer_matches_closed_form() {
        for alpha in [0.0, 0.8] {
            let found = optimize_tilted(alpha, SearchConfig::default()).unwrap();
            assert!(
                (found.value - found.lambda).abs() < 1e-9,
                "alpha {alpha}: {}",
                found.value
            );
        }
    }

    #[test]
    fn nelder_mead_minimizes_rosenbrock() {
        let rosen = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let (x, v) = nelder_mead(rosen, &[-1.2, 1.0], 0.5, 10_000, 1e-20);
        assert!(v < 1e-10);
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn optimizer_is_deterministic() {
        let cfg = SearchConfig {
            starts: 2,
            ..SearchConfig::default()
        };
        let a = optimize_tilted(0.4, cfg).unwrap();
        let b = optimize_tilted(0.4, cfg).unwrap();
        assert_eq!(a.params, b.params);
    }
}
