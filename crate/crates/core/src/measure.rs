//! Signed measures and test functions on a finite space.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{ensure_same, FiniteSpace};

/// A real-valued function on the points of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionVector {
    space: Arc<FiniteSpace>,
    values: Vec<f64>,
}

impl FunctionVector {
    pub fn new(space: Arc<FiniteSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::invalid(
                "values",
                format!("expected {} values, got {}", space.len(), values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("values[{i}]"), "value must be finite"));
        }
        Ok(FunctionVector { space, values })
    }

    pub fn constant(space: Arc<FiniteSpace>, c: f64) -> Self {
        let n = space.len();
        FunctionVector {
            space,
            values: vec![c; n],
        }
    }

    pub fn indicator(space: Arc<FiniteSpace>, points: &[usize]) -> Self {
        let mut values = vec![0.0; space.len()];
        for &p in points {
            values[p] = 1.0;
        }
        FunctionVector { space, values }
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        FunctionVector {
            space: self.space.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}

/// The coordinate indicator functions `1_{x}`, the default probing basis.
pub fn indicator_basis(space: &Arc<FiniteSpace>) -> Vec<FunctionVector> {
    (0..space.len())
        .map(|i| FunctionVector::indicator(space.clone(), &[i]))
        .collect()
}

/// Indicators, their negatives and the constants `±1`.
///
/// Sublinear functionals are not determined by their values on a basis; this
/// panel adds the directions that pin down mass and negative parts.
pub fn probe_panel(space: &Arc<FiniteSpace>) -> Vec<FunctionVector> {
    let mut panel = indicator_basis(space);
    let negs: Vec<_> = panel.iter().map(|f| f.scaled(-1.0)).collect();
    panel.extend(negs);
    panel.push(FunctionVector::constant(space.clone(), 1.0));
    panel.push(FunctionVector::constant(space.clone(), -1.0));
    panel
}

/// A finite signed measure, stored as one weight per point.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasure {
    space: Arc<FiniteSpace>,
    weights: Vec<f64>,
}

impl SignedMeasure {
    pub fn new(space: Arc<FiniteSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::invalid(
                "weights",
                format!("expected {} weights, got {}", space.len(), weights.len()),
            ));
        }
        if let Some(i) = weights.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("weights[{i}]"), "weight must be finite"));
        }
        Ok(SignedMeasure { space, weights })
    }

    pub fn zero(space: Arc<FiniteSpace>) -> Self {
        let n = space.len();
        SignedMeasure {
            space,
            weights: vec![0.0; n],
        }
    }

    /// `c·δ_x`.
    pub fn dirac(space: Arc<FiniteSpace>, x: usize, c: f64) -> Self {
        let mut m = Self::zero(space);
        m.weights[x] = c;
        m
    }

    /// Uniform mass `total` spread over `points`.
    pub fn uniform(space: Arc<FiniteSpace>, points: &[usize], total: f64) -> Self {
        let mut m = Self::zero(space);
        if !points.is_empty() {
            let w = total / points.len() as f64;
            for &p in points {
                m.weights[p] += w;
            }
        }
        m
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn integrate(&self, phi: &FunctionVector) -> Result<f64> {
        ensure_same(&self.space, phi.space(), "integrate")?;
        Ok(dot(&self.weights, phi.values()))
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// Mass of the negative part, `Σ max(-w, 0)`.
    pub fn neg_norm(&self) -> f64 {
        self.weights.iter().map(|w| (-w).max(0.0)).sum()
    }

    pub fn is_positive(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0.0)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights[i] != 0.0)
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        SignedMeasure {
            space: self.space.clone(),
            weights: self.weights.iter().map(|w| c * w).collect(),
        }
    }

    pub fn add(&self, other: &SignedMeasure) -> Result<Self> {
        ensure_same(&self.space, &other.space, "measure sum")?;
        Ok(SignedMeasure {
            space: self.space.clone(),
            weights: add(&self.weights, &other.weights),
        })
    }
}

/// A signed measure whose weights are all nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveMeasure(SignedMeasure);

impl PositiveMeasure {
    pub fn new(m: SignedMeasure) -> Result<Self> {
        if let Some(i) = m.weights.iter().position(|&w| w < 0.0) {
            return Err(Error::invalid(
                format!("weights[{i}]"),
                "positive measure has a negative weight",
            ));
        }
        Ok(PositiveMeasure(m))
    }

    pub fn as_signed(&self) -> &SignedMeasure {
        &self.0
    }

    pub fn into_signed(self) -> SignedMeasure {
        self.0
    }
}

/// Coordinatewise positive and negative parts, `μ = plus - minus`.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanDecomposition {
    pub plus: PositiveMeasure,
    pub minus: PositiveMeasure,
}

impl JordanDecomposition {
    pub fn neg_norm(&self) -> f64 {
        self.minus.as_signed().mass()
    }
}

pub fn jordan_decompose(mu: &SignedMeasure) -> JordanDecomposition {
    let plus = mu.weights.iter().map(|w| w.max(0.0)).collect();
    let minus = mu.weights.iter().map(|w| (-w).max(0.0)).collect();
    JordanDecomposition {
        plus: PositiveMeasure(SignedMeasure {
            space: mu.space.clone(),
            weights: plus,
        }),
        minus: PositiveMeasure(SignedMeasure {
            space: mu.space.clone(),
            weights: minus,
        }),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}
