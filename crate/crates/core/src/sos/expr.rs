//! Affine expressions in the decision variables of an SOS program.
//!
//! An expression is a known polynomial plus a linear combination of decision
//! *coefficients*: each key `(decision, monomial)` stands for the coefficient
//! of that monomial in the decision's value, scaled by a known polynomial
//! multiplier. Keying on coefficients (rather than whole decision polynomials)
//! lets callers build arbitrary linear images of an unknown — products with
//! known polynomials, but also gradients contracted against a vector field.
//! Products of two unknowns are rejected, which keeps every program affine.

use std::collections::BTreeMap;

use crate::poly::{Monomial, Polynomial};

use super::SosError;

/// Handle to a polynomial-valued decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolyVarId(pub(crate) usize);

/// Handle to a scalar decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScalarVarId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum DecisionRef {
    Poly(PolyVarId),
    Scalar(ScalarVarId),
}

/// `constant + Σ multiplier · coeff_monomial(decision)`.
#[derive(Clone)]
pub struct SosExpr {
    pub(crate) constant: Polynomial,
    pub(crate) linear: BTreeMap<(DecisionRef, Monomial), Polynomial>,
}

impl SosExpr {
    pub fn from_poly(p: Polynomial) -> SosExpr {
        SosExpr {
            constant: p,
            linear: BTreeMap::new(),
        }
    }

    pub(crate) fn from_terms(
        zero: Polynomial,
        terms: impl IntoIterator<Item = ((DecisionRef, Monomial), Polynomial)>,
    ) -> SosExpr {
        let mut linear = BTreeMap::new();
        for (k, m) in terms {
            if !m.is_zero() {
                linear.insert(k, m);
            }
        }
        SosExpr {
            constant: zero,
            linear,
        }
    }

    pub fn has_decisions(&self) -> bool {
        !self.linear.is_empty()
    }

    pub fn add(&self, other: &SosExpr) -> SosExpr {
        let mut linear = self.linear.clone();
        for (k, m) in &other.linear {
            linear
                .entry(k.clone())
                .and_modify(|cur| *cur = &*cur + m)
                .or_insert_with(|| m.clone());
        }
        linear.retain(|_, m| !m.is_zero());
        SosExpr {
            constant: &self.constant + &other.constant,
            linear,
        }
    }

    pub fn sub(&self, other: &SosExpr) -> SosExpr {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> SosExpr {
        let mut linear: BTreeMap<(DecisionRef, Monomial), Polynomial> = self
            .linear
            .iter()
            .map(|(k, m)| (k.clone(), m.scale(s)))
            .collect();
        linear.retain(|_, m| !m.is_zero());
        SosExpr {
            constant: self.constant.scale(s),
            linear,
        }
    }

    /// Multiplies by a known polynomial (always affine-preserving).
    pub fn mul_poly(&self, p: &Polynomial) -> SosExpr {
        let mut linear: BTreeMap<(DecisionRef, Monomial), Polynomial> = self
            .linear
            .iter()
            .map(|(k, m)| (k.clone(), m * p))
            .collect();
        linear.retain(|_, m| !m.is_zero());
        SosExpr {
            constant: &self.constant * p,
            linear,
        }
    }

    /// Product of two expressions; fails if both carry decision variables.
    pub fn mul(&self, other: &SosExpr) -> Result<SosExpr, SosError> {
        if self.has_decisions() && other.has_decisions() {
            return Err(SosError::NonAffine);
        }
        if other.has_decisions() {
            Ok(other.mul_poly(&self.constant))
        } else {
            Ok(self.mul_poly(&other.constant))
        }
    }

    /// Substitutes known decision values; rebuilds the concrete polynomial.
    pub(crate) fn substitute(
        &self,
        mut value_of: impl FnMut(DecisionRef) -> Polynomial,
    ) -> Polynomial {
        let mut acc = self.constant.clone();
        for ((d, w), m) in &self.linear {
            let c = value_of(*d).coefficient(w);
            if c != 0.0 {
                acc = &acc + &m.scale(c);
            }
        }
        acc
    }
}
