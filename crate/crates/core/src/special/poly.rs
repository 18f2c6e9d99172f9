//! Noncommutative polynomials in the four ±1-observables `a0, a1, b0, b1`.
//!
//! Monomials are stored as explicit letter sequences; the only simplification
//! is merging identical monomials. Commutation of `a` with `b` is never used
//! symbolically, so identities that rely on it are checked by evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::models::QuantumModel;
use crate::numerics::{eye, kron, r, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gen {
    A0,
    A1,
    B0,
    B1,
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gen::A0 => "a0",
            Gen::A1 => "a1",
            Gen::B0 => "b0",
            Gen::B1 => "b1",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NcPoly {
    terms: BTreeMap<Vec<Gen>, f64>,
}

impl NcPoly {
    pub fn zero() -> Self {
        NcPoly::default()
    }

    pub fn constant(c: f64) -> Self {
        NcPoly::zero().with_term(Vec::new(), c)
    }

    pub fn generator(g: Gen) -> Self {
        NcPoly::zero().with_term(vec![g], 1.0)
    }

    fn with_term(mut self, mono: Vec<Gen>, c: f64) -> Self {
        self.add_term(mono, c);
        self
    }

    fn add_term(&mut self, mono: Vec<Gen>, c: f64) {
        let entry = self.terms.entry(mono).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = NcPoly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Gen], f64)> {
        self.terms.iter().map(|(m, &c)| (m.as_slice(), c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Substitute concrete operators for the generators.
    pub fn evaluate(&self, ops: &Substitution) -> CMatrix {
        let d = ops.dim();
        let mut total = CMatrix::zeros(d, d);
        for (mono, &c) in &self.terms {
            let mut term = eye(d);
            for g in mono {
                term *= ops.get(*g);
            }
            total += term * r(c);
        }
        total
    }
}

impl fmt::Display for NcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (mono, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(if *c < 0.0 { " - " } else { " + " })?;
            } else if *c < 0.0 {
                f.write_str("-")?;
            }
            let word: Vec<String> = mono.iter().map(Gen::to_string).collect();
            match (c.abs() == 1.0, word.is_empty()) {
                (_, true) => write!(f, "{}", c.abs())?,
                (true, false) => write!(f, "{}", word.join("·"))?,
                (false, false) => write!(f, "{}·{}", c.abs(), word.join("·"))?,
            }
        }
        Ok(())
    }
}

impl Add for &NcPoly {
    type Output = NcPoly;
    fn add(self, rhs: &NcPoly) -> NcPoly {
        let mut out = self.clone();
        for (m, v) in &rhs.terms {
            out.add_term(m.clone(), *v);
        }
        out
    }
}

impl Sub for &NcPoly {
    type Output = NcPoly;
    fn sub(self, rhs: &NcPoly) -> NcPoly {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &NcPoly {
    type Output = NcPoly;
    fn mul(self, rhs: &NcPoly) -> NcPoly {
        let mut out = NcPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                let mut m = m1.clone();
                m.extend_from_slice(m2);
                out.add_term(m, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &NcPoly {
    type Output = NcPoly;
    fn neg(self) -> NcPoly {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for NcPoly {
            type Output = NcPoly;
            fn $f(self, rhs: NcPoly) -> NcPoly {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Concrete operators for `a0, a1, b0, b1` on one Hilbert space.
#[derive(Clone, Debug)]
pub struct Substitution {
    ops: [CMatrix; 4],
}

impl Substitution {
    pub fn new(a0: CMatrix, a1: CMatrix, b0: CMatrix, b1: CMatrix) -> Self {
        Substitution { ops: [a0, a1, b0, b1] }
    }

    /// `a_x = (M^x_0 − M^x_1) ⊗ Id`, `b_y = Id ⊗ (N^y_0 − N^y_1)` for a binary
    /// model with two inputs per side.
    pub fn from_model(m: &QuantumModel) -> Self {
        let ia = eye(m.dim_a);
        let ib = eye(m.dim_b);
        let obs = |pair: &[CMatrix]| &pair[0] - &pair[1];
        Substitution::new(
            kron(&obs(&m.m[0]), &ib),
            kron(&obs(&m.m[1]), &ib),
            kron(&ia, &obs(&m.n[0])),
            kron(&ia, &obs(&m.n[1])),
        )
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn get(&self, g: Gen) -> &CMatrix {
        &self.ops[g as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::real_diag;

    fn a0() -> NcPoly {
        NcPoly::generator(Gen::A0)
    }
    fn b0() -> NcPoly {
        NcPoly::generator(Gen::B0)
    }

    #[test]
    fn monomials_merge_but_do_not_commute() {
        let p = &(&a0() * &b0()) + &(&a0() * &b0());
        assert_eq!(p.len(), 1);
        let q = &(&a0() * &b0()) - &(&b0() * &a0());
        assert_eq!(q.len(), 2);
        assert!((&p - &p).is_empty());
    }

    #[test]
    fn square_expands() {
        let p = &NcPoly::constant(1.0) + &a0();
        let sq = p.square();
        assert_eq!(sq.len(), 3);
        assert_eq!(sq.degree(), 2);
        assert_eq!(sq.to_string(), "1 + 2·a0 + a0·a0");
    }

    #[test]
    fn evaluation_substitutes_in_order() {
        let z = real_diag(&[1.0, -1.0]);
        let x = crate::numerics::real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let s = Substitution::new(z.clone(), x.clone(), eye(2), eye(2));
        let p = &a0() * &NcPoly::generator(Gen::A1);
        assert_eq!(p.evaluate(&s), &z * &x);
        assert_eq!(NcPoly::constant(2.5).evaluate(&s), eye(2) * r(2.5));
    }
}
