//! Least-negative aggregation of signed-measure families.
//!
//! A family stands for all wedge products of smooth representatives of some
//! currents, restricted to a finite space, together with declared weak
//! limits. Every member has the same total mass, the intersection number.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::{add, jordan_decompose, SignedMeasure};
use crate::space::{ensure_same, FiniteSpace};
use crate::submeasure::{leq, norm_and_mass, StrongSubmeasure};

/// Members within this distance of the minimal negative-part norm are kept.
pub const KAPPA_TOL: f64 = 1e-9;
const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SignedFamily {
    space: Arc<FiniteSpace>,
    members: Vec<SignedMeasure>,
    declared_limits: Vec<SignedMeasure>,
    intersection_number: f64,
}

fn dedup(list: Vec<SignedMeasure>) -> Vec<SignedMeasure> {
    let mut out: Vec<SignedMeasure> = Vec::with_capacity(list.len());
    for m in list {
        if !out.iter().any(|o| o.weights() == m.weights()) {
            out.push(m);
        }
    }
    out
}

impl SignedFamily {
    /// Validates masses against `intersection_number` and drops exact
    /// duplicates.
    pub fn new(
        space: Arc<FiniteSpace>,
        members: Vec<SignedMeasure>,
        declared_limits: Vec<SignedMeasure>,
        intersection_number: f64,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("members", "a family needs at least one member"));
        }
        if !intersection_number.is_finite() {
            return Err(Error::invalid("intersection_number", "must be finite"));
        }
        for (kind, list) in [("members", &members), ("declared_limits", &declared_limits)] {
            for (i, m) in list.iter().enumerate() {
                ensure_same(&space, m.space(), kind)?;
                if (m.mass() - intersection_number).abs() > MASS_TOL {
                    return Err(Error::invalid(
                        format!("{kind}[{i}]"),
                        format!("mass {} differs from the intersection number {intersection_number}", m.mass()),
                    ));
                }
            }
        }
        Ok(SignedFamily {
            space,
            members: dedup(members),
            declared_limits: dedup(declared_limits),
            intersection_number,
        })
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn members(&self) -> &[SignedMeasure] {
        &self.members
    }

    pub fn declared_limits(&self) -> &[SignedMeasure] {
        &self.declared_limits
    }

    pub fn intersection_number(&self) -> f64 {
        self.intersection_number
    }

    /// Members followed by declared limits.
    pub fn closure(&self) -> impl Iterator<Item = &SignedMeasure> {
        self.members.iter().chain(&self.declared_limits)
    }

    /// The same family with more declared limits.
    pub fn with_limits(&self, limits: Vec<SignedMeasure>) -> Result<Self> {
        let mut all = self.declared_limits.clone();
        all.extend(limits);
        Self::new(self.space.clone(), self.members.clone(), all, self.intersection_number)
    }
}

/// Smallest negative-part norm over the members and declared limits.
pub fn kappa(family: &SignedFamily) -> f64 {
    family
        .closure()
        .map(|m| jordan_decompose(m).neg_norm())
        .fold(f64::INFINITY, f64::min)
}

/// The members of the closure whose negative-part norm is within `tol` of κ.
pub fn kappa_minimizers(family: &SignedFamily, tol: f64) -> Vec<SignedMeasure> {
    let k = kappa(family);
    family
        .closure()
        .filter(|m| jordan_decompose(m).neg_norm() <= k + tol)
        .cloned()
        .collect()
}

/// `Λ(φ) = sup μ(φ)` over the κ-minimal members of the closure.
///
/// Each generator has mass `c` and negative part `κ`, so its total variation
/// is `c + 2κ`; the norm of Λ is checked against that bound.
pub fn least_negative(family: &SignedFamily, tol: f64) -> Result<StrongSubmeasure> {
    let k = kappa(family);
    let lambda = StrongSubmeasure::from_generators(family.space.clone(), kappa_minimizers(family, tol))?;
    let bound = family.intersection_number.abs() + 2.0 * (k + tol);
    let norm = norm_and_mass(&lambda).norm;
    if norm > bound + MASS_TOL {
        return Err(Error::UnboundedNorm { norm, bound });
    }
    Ok(lambda)
}

/// The partial order on families: `f1` precedes `f2` when its κ is smaller,
/// or the κ agree and `Λ(f1) >= Λ(f2)`.
pub fn precedes(f1: &SignedFamily, f2: &SignedFamily) -> Result<bool> {
    ensure_same(&f1.space, &f2.space, "precedes")?;
    let (k1, k2) = (kappa(f1), kappa(f2));
    if k1 < k2 - KAPPA_TOL {
        return Ok(true);
    }
    if (k1 - k2).abs() > KAPPA_TOL {
        return Ok(false);
    }
    leq(&least_negative(f2, KAPPA_TOL)?, &least_negative(f1, KAPPA_TOL)?)
}

fn pairwise(a: &[SignedMeasure], b: &[SignedMeasure]) -> Vec<SignedMeasure> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(
                SignedMeasure::new(x.space().clone(), add(x.weights(), y.weights())).expect("sum of finite weights"),
            );
        }
    }
    out
}

/// Family of the summed first current: pairwise sums of members, and of
/// closures for the declared limits. Masses add.
pub fn family_sum(f1: &SignedFamily, f2: &SignedFamily) -> Result<SignedFamily> {
    ensure_same(&f1.space, &f2.space, "family_sum")?;
    let members = pairwise(&f1.members, &f2.members);
    let mut limits = pairwise(&f1.declared_limits, &f2.members);
    limits.extend(pairwise(&f1.members, &f2.declared_limits));
    limits.extend(pairwise(&f1.declared_limits, &f2.declared_limits));
    SignedFamily::new(
        f1.space.clone(),
        members,
        limits,
        f1.intersection_number + f2.intersection_number,
    )
}

/// Bundled divisor models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivisorKind {
    /// Self-intersection of a line in the plane: every point of the line
    /// carries a Dirac limit of intersections with nearby lines.
    LineP2,
    /// Self-intersection of the exceptional curve of a point blowup: the
    /// class has square `-1` and each point of the curve carries `-δ_p`.
    ExceptionalE,
}

impl std::str::FromStr for DivisorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line_P2" => Ok(DivisorKind::LineP2),
            "exceptional_E" => Ok(DivisorKind::ExceptionalE),
            other => Err(Error::invalid(
                "kind",
                format!("unknown divisor model '{other}' (expected line_P2 or exceptional_E)"),
            )),
        }
    }
}

/// Family on `n` curve points (subset `D` or `E`) plus `n` ambient points.
pub fn build_divisor_model(kind: DivisorKind, n: usize) -> Result<SignedFamily> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one curve point"));
    }
    let (curve, sign) = match kind {
        DivisorKind::LineP2 => ("D", 1.0),
        DivisorKind::ExceptionalE => ("E", -1.0),
    };
    let labels = (0..n)
        .map(|i| format!("{}{i}", curve.to_lowercase()))
        .chain((0..n).map(|i| format!("a{i}")));
    let space = FiniteSpace::new(labels)?
        .with_subset(curve, (0..n).collect())?
        .into_shared();
    let members = (0..n).map(|p| SignedMeasure::dirac(space.clone(), p, sign)).collect();
    SignedFamily::new(space, members, Vec::new(), sign)
}
