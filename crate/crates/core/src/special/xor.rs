//! XOR correlations `c_xy = Σ_ab (−1)^(a+b) p(a,b|x,y)` and the even-rank
//! commuting-operator self-test certificate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::Correlation;
use crate::numerics::{numerical_rank, r, CMatrix, Tolerance};

#[derive(Clone, Debug, Serialize)]
pub struct XorCorrelation {
    /// `c[x][y]`.
    pub c: Vec<Vec<f64>>,
    pub unbiased: bool,
    pub rank: usize,
    /// Largest deviation of a marginal from 1/2.
    pub marginal_bias: f64,
}

impl XorCorrelation {
    pub fn matrix(&self) -> CMatrix {
        let (nx, ny) = (self.c.len(), self.c.first().map_or(0, Vec::len));
        CMatrix::from_fn(nx, ny, |x, y| r(self.c[x][y]))
    }
}

pub fn xor_of(p: &Correlation, tol: Tolerance) -> Result<XorCorrelation> {
    let s = p.scenario;
    if !s.is_binary() {
        return Err(Error::NotBinary);
    }
    let mut c = vec![vec![0.0; s.n_y]; s.n_x];
    let mut bias: f64 = 0.0;
    for x in 0..s.n_x {
        for y in 0..s.n_y {
            for a in 0..2 {
                for b in 0..2 {
                    let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                    c[x][y] += sign * p.get(a, b, x, y);
                }
                let alice = p.get(a, 0, x, y) + p.get(a, 1, x, y);
                let bob = p.get(0, a, x, y) + p.get(1, a, x, y);
                bias = bias.max((alice - 0.5).abs()).max((bob - 0.5).abs());
            }
        }
    }
    let mut out = XorCorrelation {
        c,
        unbiased: tol.negligible(bias, 1.0),
        rank: 0,
        marginal_bias: bias,
    };
    out.rank = numerical_rank(&out.matrix(), tol);
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtremalityRefutation {
    pub refuted: bool,
    /// `max |Σ w_k p_k − p|`.
    pub reproduction_defect: f64,
    /// Largest distance between a component and `p`.
    pub spread: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct XorCertificate {
    pub granted: bool,
    pub statement: String,
    pub unbiased: bool,
    pub rank: usize,
    pub even_rank: bool,
    pub extremality_asserted: bool,
    pub refutation: Option<ExtremalityRefutation>,
    pub reasons: Vec<String>,
    pub xor: XorCorrelation,
    /// Extremality is never decided here, only taken as an assertion or refuted.
    pub extremality_note: String,
}

/// Refute extremality of `p` with a convex decomposition into distinct parts.
pub fn refute_extremality(
    p: &Correlation,
    parts: &[(f64, Correlation)],
    tol: Tolerance,
) -> Result<ExtremalityRefutation> {
    if parts.iter().any(|(_, q)| q.scenario != p.scenario) {
        return Err(Error::ScenarioMismatch(
            "decomposition components differ in scenario".into(),
        ));
    }
    let weights_ok = parts.iter().all(|(w, _)| *w > tol.eps)
        && tol.negligible((parts.iter().map(|(w, _)| w).sum::<f64>() - 1.0).abs(), 1.0);
    let valid = parts.iter().all(|(_, q)| q.violations(tol).is_empty());
    let refs: Vec<(f64, &Correlation)> = parts.iter().map(|(w, q)| (*w, q)).collect();
    let mix = if refs.is_empty() {
        None
    } else {
        Some(Correlation::mixture(&refs)?)
    };
    let reproduction_defect = mix.map_or(f64::INFINITY, |m| m.max_abs_diff(p));
    let spread = parts.iter().map(|(_, q)| q.max_abs_diff(p)).fold(0.0, f64::max);
    let (refuted, reason) = if parts.len() < 2 {
        (false, "decomposition needs at least two components".to_string())
    } else if !weights_ok {
        (false, "weights must be positive and sum to 1".to_string())
    } else if !valid {
        (false, "a component is not a valid correlation".to_string())
    } else if !tol.negligible(reproduction_defect, 1.0) {
        (false, format!("decomposition misses p by {reproduction_defect:.3e}"))
    } else if tol.negligible(spread, 1.0) {
        (false, "all components coincide with p".to_string())
    } else {
        (
            true,
            "p is a proper convex combination of distinct correlations".to_string(),
        )
    };
    Ok(ExtremalityRefutation {
        refuted,
        reproduction_defect,
        spread,
        reason,
    })
}

pub fn xor_selftest_certificate(
    p: &Correlation,
    extremal_assertion: bool,
    decomposition: Option<&[(f64, Correlation)]>,
    tol: Tolerance,
) -> Result<XorCertificate> {
    let xor = xor_of(p, tol)?;
    let refutation = decomposition.map(|d| refute_extremality(p, d, tol)).transpose()?;
    let even_rank = xor.rank % 2 == 0;
    let mut reasons = Vec::new();
    if !xor.unbiased {
        reasons.push(format!("marginals biased by {:.3e}", xor.marginal_bias));
    }
    if !even_rank {
        reasons.push(format!("odd rank {}", xor.rank));
    }
    if !extremal_assertion {
        reasons.push("extremality not asserted".to_string());
    }
    if refutation.as_ref().is_some_and(|r| r.refuted) {
        reasons.push("extremality refuted by convex decomposition".to_string());
    }
    let granted = reasons.is_empty();
    let statement = if granted {
        format!(
            "commuting operator self-test: granted (rank {}, unbiased, extremality asserted)",
            xor.rank
        )
    } else {
        format!("commuting operator self-test: denied ({})", reasons.join("; "))
    };
    Ok(XorCertificate {
        granted,
        statement,
        unbiased: xor.unbiased,
        rank: xor.rank,
        even_rank,
        extremality_asserted: extremal_assertion,
        refutation,
        reasons,
        xor,
        extremality_note: "extremality in Cor(X,Y) is not decided; it is taken from the caller's assertion".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::models::{correlation_of, Scenario};
    use crate::random::rng_for;
    use proptest::prelude::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn chsh() -> Correlation {
        correlation_of(&fixtures::chsh_ideal(), tol()).unwrap()
    }

    fn deterministic() -> Correlation {
        Correlation::from_fn(
            Scenario::binary(2, 2),
            |a, b, _, _| if a == 0 && b == 0 { 1.0 } else { 0.0 },
        )
    }

    #[test]
    fn chsh_xor_matrix() {
        let x = xor_of(&chsh(), tol()).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let expect = [[h, h], [h, -h]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((x.c[i][j] - expect[i][j]).abs() < 1e-12);
            }
        }
        assert_eq!(x.rank, 2);
        assert!(x.unbiased);
    }

    #[test]
    fn trivial_xor_matrices() {
        let d = xor_of(&deterministic(), tol()).unwrap();
        assert!(d.c.iter().flatten().all(|&v| (v - 1.0).abs() < 1e-15));
        assert_eq!(d.rank, 1);
        assert!(!d.unbiased);
        let u = xor_of(&Correlation::from_fn(Scenario::binary(2, 3), |_, _, _, _| 0.25), tol()).unwrap();
        assert!(u.c.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(u.rank, 0);
        assert!(u.unbiased);
    }

    #[test]
    fn non_binary_is_rejected() {
        let p = Correlation::from_fn(Scenario::new(1, 1, 3, 2).unwrap(), |_, _, _, _| 1.0 / 6.0);
        assert!(matches!(xor_of(&p, tol()), Err(Error::NotBinary)));
    }

    #[test]
    fn chsh_certificate_granted() {
        let cert = xor_selftest_certificate(&chsh(), true, None, tol()).unwrap();
        assert!(cert.granted);
        assert_eq!(
            cert.statement,
            "commuting operator self-test: granted (rank 2, unbiased, extremality asserted)"
        );
    }

    #[test]
    fn certificate_denials() {
        let cert = xor_selftest_certificate(&deterministic(), true, None, tol()).unwrap();
        assert!(!cert.granted);
        assert!(cert.reasons.iter().any(|r| r.contains("odd rank 1")));
        let cert = xor_selftest_certificate(&chsh(), false, None, tol()).unwrap();
        assert!(!cert.granted);
        assert_eq!(cert.reasons, vec!["extremality not asserted".to_string()]);
    }

    #[test]
    fn refutation_by_decomposition() {
        let p = chsh();
        let uniform = Correlation::from_fn(p.scenario, |_, _, _, _| 0.25);
        // p = ½ q + ½ uniform with q = 2p − uniform, which is a valid correlation here
        let q = Correlation::from_fn(p.scenario, |a, b, x, y| 2.0 * p.get(a, b, x, y) - 0.25);
        let mixture = Correlation::from_fn(p.scenario, |a, b, x, y| 0.5 * p.get(a, b, x, y) + 0.125);
        let parts = vec![(0.5, p.clone()), (0.5, uniform.clone())];
        let cert = xor_selftest_certificate(&mixture, true, Some(&parts), tol()).unwrap();
        assert!(cert.refutation.as_ref().unwrap().refuted);
        assert!(!cert.granted);
        let parts = vec![(0.5, q), (0.5, uniform)];
        let r = refute_extremality(&p, &parts, tol()).unwrap();
        assert!(!r.refuted, "q has negative entries: {}", r.reason);
        let trivial = vec![(0.5, p.clone()), (0.5, p.clone())];
        assert!(!refute_extremality(&p, &trivial, tol()).unwrap().refuted);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn xor_is_affine(seed in 0u64..1000, w in 0.0f64..1.0) {
            let mut rng = rng_for(seed, 0);
            let p = correlation_of(&fixtures::random_binary_model(&mut rng, 2, 2), tol()).unwrap();
            let q = correlation_of(&fixtures::random_binary_model(&mut rng, 2, 2), tol()).unwrap();
            let mix = Correlation::mixture(&[(w, &p), (1.0 - w, &q)]).unwrap();
            let (xp, xq, xm) = (xor_of(&p, tol()).unwrap(), xor_of(&q, tol()).unwrap(), xor_of(&mix, tol()).unwrap());
            for x in 0..2 {
                for y in 0..2 {
                    let expect = w * xp.c[x][y] + (1.0 - w) * xq.c[x][y];
                    prop_assert!((xm.c[x][y] - expect).abs() < 1e-12);
                    prop_assert!(xm.c[x][y].abs() <= 1.0 + 1e-12);
                }
            }
        }
    }
}
