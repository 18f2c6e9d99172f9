//! Tilted CHSH: the Bell operator `η = α a0 + a0 b0 + a0 b1 + a1 b0 − a1 b1`,
//! its maximal value `λ = √(8 + 2α²)` and the two sum-of-squares
//! decompositions of `2λ(λ − η)` that hold for arbitrary binary POVMs.

use serde::Serialize;

use super::poly::{Gen, NcPoly, Substitution};
use crate::error::{Error, Result};
use crate::models::{QuantumModel, Scenario};
use crate::numerics::{norm, Tolerance};

/// Symbolic operator table for one value of `α`.
#[derive(Clone, Debug)]
pub struct TiltedChsh {
    pub alpha: f64,
    pub lambda: f64,
    pub delta: f64,
    pub eta: NcPoly,
    /// `r1 ..= r4`.
    pub r: [NcPoly; 4],
    /// `s1 ..= s8`.
    pub s: [NcPoly; 8],
    /// `2λ(λ − η)`.
    pub lhs: NcPoly,
    pub rhs_first: NcPoly,
    pub rhs_second: NcPoly,
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..2.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

pub fn tilted_lambda(alpha: f64) -> f64 {
    (8.0 + 2.0 * alpha * alpha).sqrt()
}

pub fn tilted_delta(alpha: f64) -> f64 {
    (8.0 - 2.0 * alpha * alpha).sqrt()
}

pub fn tilted_chsh_build(alpha: f64) -> Result<TiltedChsh> {
    check_alpha(alpha)?;
    let lambda = tilted_lambda(alpha);
    let delta = tilted_delta(alpha);
    let (a0, a1, b0, b1) = (
        NcPoly::generator(Gen::A0),
        NcPoly::generator(Gen::A1),
        NcPoly::generator(Gen::B0),
        NcPoly::generator(Gen::B1),
    );
    let one = NcPoly::constant(1.0);
    let k = NcPoly::constant;
    let (a0b0, a0b1, a1b0, a1b1) = (&a0 * &b0, &a0 * &b1, &a1 * &b0, &a1 * &b1);

    let eta = a0.scale(alpha) + a0b0.clone() + a0b1.clone() + a1b0.clone() - a1b1.clone();
    let r1 = k(lambda) - eta.clone();
    let r2 = a1.scale(alpha) - a0b0.clone() + a0b1.clone() - a1b0.clone() - a1b1.clone();
    let r3 = a0.scale(2.0) - (&b0 + &b1).scale(lambda / 2.0)
        + (a0b0.clone() + a0b1.clone() - a1b0.clone() + a1b1.clone()).scale(alpha / 2.0);
    let r4 = a1.scale(2.0) - (&b0 - &b1).scale(lambda / 2.0) + (a0b0 - a0b1 - a1b0 - a1b1).scale(alpha / 2.0);

    let defect = |g: &NcPoly| &one - &g.square();
    let anti = &(&a0 * &a1) + &(&a1 * &a0);
    let s1 = (&k(alpha) + &b0.scale(2.0)).square() * defect(&a0);
    let s2 = (&k(alpha) + &b1.scale(2.0)).square() * defect(&a0);
    let s3 = (&k(alpha) - &b0.scale(2.0)).square() * defect(&a1);
    let s4 = (&k(alpha) - &b1.scale(2.0)).square() * defect(&a1);
    let s5 = (&k(2.0) + &anti) * defect(&b0);
    let s6 = (&k(2.0) - &anti) * defect(&b1);
    let tilt_minus = &k(lambda) - &(&a0 - &a1).scale(alpha);
    let tilt_plus = &k(lambda) - &(&a0 + &a1).scale(alpha);
    let s7 = &tilt_minus * &defect(&b0);
    let s8 = &tilt_plus * &defect(&b1);

    let lhs = (&k(lambda) - &eta).scale(2.0 * lambda);
    let quarter_sum = (s1.clone() + s2.clone() + s3.clone() + s4.clone()).scale(0.5);
    let rhs_first = r1.square() + r2.square() + quarter_sum.clone() + (s5.clone() + s6.clone()).scale(2.0);
    let a_sq = &(&k(2.0) - &a0.square()) - &a1.square();
    let b_sq = &(&k(2.0) - &b0.square()) - &b1.square();
    let rhs_second = r3.square()
        + r4.square()
        + quarter_sum
        + (a_sq * b_sq).scale(2.0)
        + (tilt_minus.square() * defect(&b0)).scale(0.5)
        + (tilt_plus.square() * defect(&b1)).scale(0.5);

    Ok(TiltedChsh {
        alpha,
        lambda,
        delta,
        eta,
        r: [r1, r2, r3, r4],
        s: [s1, s2, s3, s4, s5, s6, s7, s8],
        lhs,
        rhs_first,
        rhs_second,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NamedResidual {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TiltedChshCertificate {
    pub alpha: f64,
    pub lambda: f64,
    pub delta: f64,
    /// `<ψ|η|ψ>`.
    pub value: f64,
    pub optimal: bool,
    /// `‖2λ(λ−η) − RHS‖` for the two decompositions.
    pub identity_defects: [f64; 2],
    /// `|<ψ|r_i²|ψ>|` then `|<ψ|s_j|ψ>|`.
    pub residuals: Vec<NamedResidual>,
    /// All state residuals vanish (only meaningful when `optimal`).
    pub residuals_vanish: bool,
}

impl TiltedChshCertificate {
    pub fn max_identity_defect(&self) -> f64 {
        self.identity_defects[0].max(self.identity_defects[1])
    }

    pub fn max_state_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(0.0, f64::max)
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.name == name).map(|r| r.value)
    }
}

pub fn verify_tilted_sos(m: &QuantumModel, alpha: f64, tol: Tolerance) -> Result<TiltedChshCertificate> {
    if m.scenario != Scenario::binary(2, 2) {
        return Err(Error::ScenarioMismatch(format!(
            "tilted CHSH needs two binary inputs per side, got {:?}",
            m.scenario
        )));
    }
    let table = tilted_chsh_build(alpha)?;
    let subs = Substitution::from_model(m);
    let expect = |p: &NcPoly| m.psi.dotc(&(p.evaluate(&subs) * &m.psi));
    let lhs = table.lhs.evaluate(&subs);
    let identity_defects = [
        norm(&(&lhs - table.rhs_first.evaluate(&subs))),
        norm(&(&lhs - table.rhs_second.evaluate(&subs))),
    ];
    let value = expect(&table.eta).re;
    let mut residuals = Vec::new();
    for (i, ri) in table.r.iter().enumerate() {
        residuals.push(NamedResidual {
            name: format!("r{}^2", i + 1),
            value: expect(&ri.square()).norm(),
        });
    }
    for (j, sj) in table.s.iter().enumerate() {
        residuals.push(NamedResidual {
            name: format!("s{}", j + 1),
            value: expect(sj).norm(),
        });
    }
    let optimal = value >= table.lambda - tol.eps * (1.0 + table.lambda);
    let residuals_vanish = residuals
        .iter()
        .all(|r| tol.negligible(r.value, table.lambda * table.lambda));
    Ok(TiltedChshCertificate {
        alpha,
        lambda: table.lambda,
        delta: table.delta,
        value,
        optimal,
        identity_defects,
        residuals,
        residuals_vanish,
    })
}
