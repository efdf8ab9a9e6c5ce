//! Strong submeasures: suprema of finitely generated families of signed
//! measures, evaluated as `μ(φ) = max_{χ} χ(φ)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lp::LP_TOL;
use crate::measure::{FunctionVector, SignedMeasure};
use crate::polytope::{self, Node};
use crate::space::{ensure_same, FiniteSpace};

/// Upper limit on explicitly enumerated generators.
pub const GENERATOR_CAP: usize = 200_000;

/// A strong submeasure on a finite space.
///
/// The generator family is stored factored (see [`crate::polytope`]); the
/// flattened list is available through [`generators`](Self::generators).
/// `positive` holds exactly when every generator is a positive measure, and
/// then evaluation is monotone.
#[derive(Debug, Clone)]
pub struct StrongSubmeasure {
    space: Arc<FiniteSpace>,
    root: Node,
    positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    Max,
    Sum,
}

impl StrongSubmeasure {
    pub fn from_generators(space: Arc<FiniteSpace>, generators: Vec<SignedMeasure>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::invalid("generators", "at least one generator is required"));
        }
        let mut gens = Vec::with_capacity(generators.len());
        for (k, g) in generators.into_iter().enumerate() {
            ensure_same(&space, g.space(), &format!("generators[{k}]"))?;
            gens.push(g.into_weights());
        }
        Ok(Self::from_node(space, Node::Leaf(gens)))
    }

    pub fn from_measure(m: SignedMeasure) -> Self {
        let space = m.space().clone();
        Self::from_node(space, Node::Leaf(vec![m.into_weights()]))
    }

    /// `c · sup_{x in points} δ_x`.
    pub fn point_mass_sup(space: Arc<FiniteSpace>, points: &[usize], c: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("points", "empty point set"));
        }
        let gens = points
            .iter()
            .map(|&p| SignedMeasure::dirac(space.clone(), p, c))
            .collect();
        Self::from_generators(space, gens)
    }

    /// `sup_{x in X} δ_x`, the largest positive submeasure of mass one.
    pub fn full_sup(space: Arc<FiniteSpace>) -> Self {
        let all: Vec<usize> = (0..space.len()).collect();
        Self::point_mass_sup(space, &all, 1.0).expect("spaces are nonempty")
    }

    pub(crate) fn from_node(space: Arc<FiniteSpace>, root: Node) -> Self {
        let root = root.normalize();
        let positive = root.is_positive();
        StrongSubmeasure {
            space,
            root,
            positive,
        }
    }

    pub(crate) fn node(&self) -> &Node {
        &self.root
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    pub fn eval(&self, phi: &FunctionVector) -> Result<f64> {
        ensure_same(&self.space, phi.space(), "eval")?;
        Ok(self.root.eval(phi.values()))
    }

    pub(crate) fn eval_raw(&self, phi: &[f64]) -> f64 {
        self.root.eval(phi)
    }

    /// Size of the flattened generator family.
    pub fn generator_count(&self) -> f64 {
        self.root.count()
    }

    /// Flattened, deduplicated generators.
    pub fn generators(&self) -> Result<Vec<SignedMeasure>> {
        let count = self.root.count();
        if count > GENERATOR_CAP as f64 {
            return Err(Error::TooManyGenerators {
                count,
                cap: GENERATOR_CAP,
            });
        }
        Ok(self
            .root
            .flatten()
            .into_iter()
            .map(|w| SignedMeasure::new(self.space.clone(), w).expect("generator weights are finite"))
            .collect())
    }

    /// Multiplies by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::precondition("scale", format!("factor {c} must be finite and >= 0")));
        }
        Ok(Self::from_node(self.space.clone(), self.root.scaled(c)))
    }

    /// When `μ = c·sup_{x in S} δ_x`, returns `(c, S)`.
    pub fn as_point_mass_sup(&self) -> Option<(f64, Vec<usize>)> {
        let Node::Leaf(gens) = &self.root else { return None };
        let mut c = None;
        let mut points = Vec::with_capacity(gens.len());
        for g in gens {
            let support: Vec<usize> = (0..g.len()).filter(|&i| g[i] != 0.0).collect();
            if support.len() != 1 {
                return None;
            }
            let w = g[support[0]];
            match c {
                None => c = Some(w),
                Some(c0) if (c0 - w).abs() <= 1e-12 * c0.abs().max(1.0) => {}
                Some(_) => return None,
            }
            points.push(support[0]);
        }
        points.sort_unstable();
        c.filter(|&c| c > 0.0).map(|c| (c, points))
    }
}

/// `μ(φ) = max_χ χ(φ)`.
pub fn eval_submeasure(mu: &StrongSubmeasure, phi: &FunctionVector) -> Result<f64> {
    mu.eval(phi)
}

/// Mass and norm data: `mass_plus = μ(1)`, `mass_minus = μ(-1)`.
///
/// For positive μ the norm is `max(|μ(1)|, |μ(-1)|)` and `norm_is_exact`
/// holds. Otherwise `norm` is the largest generator total variation, an upper
/// bound on the dual norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassReport {
    pub mass_plus: f64,
    pub mass_minus: f64,
    pub norm: f64,
    pub norm_is_exact: bool,
}

pub fn norm_and_mass(mu: &StrongSubmeasure) -> MassReport {
    let n = mu.space.len();
    let mass_plus = mu.eval_raw(&vec![1.0; n]);
    let mass_minus = mu.eval_raw(&vec![-1.0; n]);
    if mu.positive {
        MassReport {
            mass_plus,
            mass_minus,
            norm: mass_plus.abs().max(mass_minus.abs()),
            norm_is_exact: true,
        }
    } else {
        MassReport {
            mass_plus,
            mass_minus,
            norm: generator_tv_bound(&mu.root),
            norm_is_exact: false,
        }
    }
}

fn generator_tv_bound(node: &Node) -> f64 {
    match node {
        Node::Leaf(g) => g
            .iter()
            .map(|v| v.iter().map(|w| w.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        Node::Sum(c) => c.iter().map(generator_tv_bound).sum(),
        Node::Max(c) => c.iter().map(generator_tv_bound).fold(0.0, f64::max),
    }
}

/// `max` is the union of generator families; `sum` is their Minkowski sum,
/// so `combine(μ1, μ2, Sum)(φ) = μ1(φ) + μ2(φ)` exactly.
pub fn combine(mu1: &StrongSubmeasure, mu2: &StrongSubmeasure, mode: CombineMode) -> Result<StrongSubmeasure> {
    ensure_same(&mu1.space, &mu2.space, "combine")?;
    let children = vec![mu1.root.clone(), mu2.root.clone()];
    let node = match mode {
        CombineMode::Max => Node::Max(children),
        CombineMode::Sum => Node::Sum(children),
    };
    Ok(StrongSubmeasure::from_node(mu1.space.clone(), node))
}

/// Folds [`combine`] over a nonempty list.
pub fn combine_all(mus: &[StrongSubmeasure], mode: CombineMode) -> Result<StrongSubmeasure> {
    let first = mus
        .first()
        .ok_or_else(|| Error::invalid("submeasures", "empty list"))?;
    for (k, m) in mus.iter().enumerate() {
        ensure_same(&first.space, &m.space, &format!("combine_all[{k}]"))?;
    }
    let children = mus.iter().map(|m| m.root.clone()).collect();
    let node = match mode {
        CombineMode::Max => Node::Max(children),
        CombineMode::Sum => Node::Sum(children),
    };
    Ok(StrongSubmeasure::from_node(first.space.clone(), node))
}

/// Value of the upper semicontinuous extension `E(μ)(g) = inf_{ψ >= g} μ(ψ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtendedValue {
    Finite(f64),
    /// Unbounded below; `ray` is a nonnegative direction of total mass one
    /// along which μ strictly decreases.
    NegInfinity { ray: Vec<f64> },
}

impl ExtendedValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            ExtendedValue::Finite(v) => *v,
            ExtendedValue::NegInfinity { .. } => f64::NEG_INFINITY,
        }
    }
}

/// Extends μ from continuous to upper semicontinuous functions; on a finite
/// space every function is both, so this is `inf_{ψ >= g} μ(ψ)`.
///
/// Positive μ is monotone and short-circuits to `μ(g)`. Otherwise the value is
/// the maximum of `ν(g)` over positive points ν of the generator hull, and the
/// hull missing the positive cone certifies `-∞`.
pub fn extend_usc(mu: &StrongSubmeasure, g: &FunctionVector) -> Result<ExtendedValue> {
    ensure_same(&mu.space, g.space(), "extend_usc")?;
    Ok(extend_usc_raw(mu, g.values()))
}

pub(crate) fn extend_usc_raw(mu: &StrongSubmeasure, g: &[f64]) -> ExtendedValue {
    if mu.positive {
        return ExtendedValue::Finite(mu.eval_raw(g));
    }
    let (min_val, ray) = polytope::min_over_simplex(&mu.root, g.len());
    if min_val < -LP_TOL {
        return ExtendedValue::NegInfinity { ray };
    }
    match polytope::max_over_positive_part(&mu.root, g) {
        Some(v) => ExtendedValue::Finite(v),
        // Numerically borderline: the hull touches the cone only within tolerance.
        None => ExtendedValue::NegInfinity { ray },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetMode {
    Closed,
    Open,
}

/// Set function induced by μ.
///
/// Closed sets get `E(μ)(1_A)`. Open sets get the supremum of the closed value
/// over compact `K ⊆ A`; every subset of a finite space is compact and
/// `E(μ)` is monotone, so the supremum is attained at `K = A`.
pub fn set_value(mu: &StrongSubmeasure, subset: &[usize], mode: SetMode) -> Result<f64> {
    if let Some(&bad) = subset.iter().find(|&&p| p >= mu.space.len()) {
        return Err(Error::invalid("subset", format!("point index {bad} out of range")));
    }
    let indicator = FunctionVector::indicator(mu.space.clone(), subset);
    let closed = extend_usc_raw(mu, indicator.values()).as_f64();
    Ok(match mode {
        SetMode::Closed | SetMode::Open => closed,
    })
}

/// Is the measure ν dominated by μ, i.e. `ν(φ) <= μ(φ)` for every φ?
///
/// Equivalent to ν lying in the generator hull of μ, decided by one LP with
/// a membership band of `tol`.
pub fn is_dominated(nu: &SignedMeasure, mu: &StrongSubmeasure) -> Result<bool> {
    ensure_same(nu.space(), &mu.space, "is_dominated")?;
    Ok(polytope::contains(&mu.root, nu.weights(), LP_TOL))
}

/// Exact order test `μ1 <= μ2` on all functions.
///
/// Each generator of μ1 must lie in the hull of μ2; fails with
/// [`Error::TooManyGenerators`] when μ1 cannot be enumerated.
pub fn leq(mu1: &StrongSubmeasure, mu2: &StrongSubmeasure) -> Result<bool> {
    ensure_same(&mu1.space, &mu2.space, "leq")?;
    for g in mu1.generators()? {
        if !polytope::contains(&mu2.root, g.weights(), LP_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest `s >= 0` such that `s·ν` is dominated by μ.
pub fn max_dominated_scale(nu: &SignedMeasure, mu: &StrongSubmeasure) -> Result<Option<f64>> {
    ensure_same(nu.space(), &mu.space, "max_dominated_scale")?;
    Ok(polytope::max_scale_in(&mu.root, nu.weights(), LP_TOL))
}

/// `μ1 <= μ2 + tol` on every function of `panel`.
pub fn leq_on(mu1: &StrongSubmeasure, mu2: &StrongSubmeasure, panel: &[FunctionVector], tol: f64) -> Result<bool> {
    for phi in panel {
        if mu1.eval(phi)? > mu2.eval(phi)? + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest `|μ1(φ) - μ2(φ)|` over `panel`.
pub fn max_gap_on(mu1: &StrongSubmeasure, mu2: &StrongSubmeasure, panel: &[FunctionVector]) -> Result<f64> {
    let mut gap: f64 = 0.0;
    for phi in panel {
        gap = gap.max((mu1.eval(phi)? - mu2.eval(phi)?).abs());
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{indicator_basis, probe_panel};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn space(n: usize) -> Arc<FiniteSpace> {
        FiniteSpace::indexed("x", n).unwrap().into_shared()
    }

    fn sub(s: &Arc<FiniteSpace>, gens: &[&[f64]]) -> StrongSubmeasure {
        StrongSubmeasure::from_generators(
            s.clone(),
            gens.iter()
                .map(|g| SignedMeasure::new(s.clone(), g.to_vec()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn f(s: &Arc<FiniteSpace>, v: &[f64]) -> FunctionVector {
        FunctionVector::new(s.clone(), v.to_vec()).unwrap()
    }

    #[test]
    fn sup_of_two_diracs() {
        let s = space(2);
        let mu = StrongSubmeasure::point_mass_sup(s.clone(), &[0, 1], 1.0).unwrap();
        assert_eq!(mu.eval(&f(&s, &[3.0, 5.0])).unwrap(), 5.0);
        let r = norm_and_mass(&mu);
        assert_eq!((r.mass_plus, r.mass_minus, r.norm), (1.0, -1.0, 1.0));
        assert!(r.norm_is_exact);
    }

    #[test]
    fn single_measure_is_linear() {
        let s = space(3);
        let mu = sub(&s, &[&[0.5, -1.0, 2.0]]);
        let phi = f(&s, &[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(mu.eval(&phi).unwrap(), 0.5 - 2.0 + 6.0);
        assert_abs_diff_eq!(mu.eval(&phi.scaled(-1.0)).unwrap(), -(0.5 - 2.0 + 6.0));
    }

    #[test]
    fn extension_of_mixed_family_at_zero() {
        let s = space(2);
        let mu = sub(&s, &[&[1.0, -1.0], &[0.0, 1.0]]);
        assert!(!mu.is_positive());
        let v = extend_usc(&mu, &f(&s, &[0.0, 0.0])).unwrap();
        assert_eq!(v, ExtendedValue::Finite(0.0));
    }

    #[test]
    fn extension_of_negative_dirac_diverges() {
        let s = space(2);
        let mu = sub(&s, &[&[-1.0, 0.0]]);
        match extend_usc(&mu, &f(&s, &[0.0, 0.0])).unwrap() {
            ExtendedValue::NegInfinity { ray } => {
                assert!(ray.iter().all(|&r| r >= 0.0));
                assert!(mu.eval_raw(&ray) < 0.0);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    /// Brute-force oracle for `inf_{ψ >= g} μ(ψ)` on two points: scan a grid of
    /// nonnegative increments.
    fn grid_extension(mu: &StrongSubmeasure, g: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..=200 {
            for j in 0..=200 {
                let psi = [g[0] + i as f64 * 0.05, g[1] + j as f64 * 0.05];
                best = best.min(mu.eval_raw(&psi));
            }
        }
        best
    }

    #[test]
    fn extension_matches_grid_oracle() {
        let s = space(2);
        let mu = sub(&s, &[&[1.0, -1.0], &[0.0, 1.0], &[-0.5, 2.0]]);
        for g in [[0.0, 0.0], [1.0, -2.0], [-1.0, 3.0], [2.0, 2.0]] {
            let lp = extend_usc(&mu, &f(&s, &g)).unwrap().as_f64();
            let grid = grid_extension(&mu, &g);
            assert!((lp - grid).abs() < 0.06, "g={g:?} lp={lp} grid={grid}");
            assert!(lp <= grid + 1e-9);
        }
    }

    #[test]
    fn extension_of_positive_family_is_evaluation() {
        let s = space(3);
        let mu = sub(&s, &[&[1.0, 0.0, 0.0], &[0.0, 0.5, 0.5]]);
        let g = f(&s, &[-1.0, 4.0, 0.0]);
        assert_eq!(extend_usc(&mu, &g).unwrap(), ExtendedValue::Finite(2.0));
    }

    #[test]
    fn set_values_of_point_mass_sup() {
        let s = space(4);
        let mu = StrongSubmeasure::point_mass_sup(s, &[1, 2], 1.0).unwrap();
        assert_eq!(set_value(&mu, &[0, 3], SetMode::Closed).unwrap(), 0.0);
        assert_eq!(set_value(&mu, &[0, 2], SetMode::Closed).unwrap(), 1.0);
        assert_eq!(set_value(&mu, &[0, 2], SetMode::Open).unwrap(), 1.0);
    }

    #[test]
    fn open_value_equals_subset_supremum() {
        let s = space(3);
        let mu = sub(&s, &[&[1.0, -1.0, 0.5], &[-0.5, 1.0, 0.0], &[0.2, 0.2, 0.2]]);
        let a = [0usize, 2];
        let brute = [vec![], vec![0], vec![2], vec![0, 2]]
            .iter()
            .map(|k: &Vec<usize>| set_value(&mu, k, SetMode::Closed).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(set_value(&mu, &a, SetMode::Open).unwrap(), brute, epsilon = 1e-9);
    }

    #[test]
    fn dominance_is_hull_membership() {
        let s = space(2);
        let mu = StrongSubmeasure::point_mass_sup(s.clone(), &[0, 1], 1.0).unwrap();
        let half = SignedMeasure::new(s.clone(), vec![0.5, 0.5]).unwrap();
        let light = SignedMeasure::new(s.clone(), vec![0.5, 0.0]).unwrap();
        assert!(is_dominated(&half, &mu).unwrap());
        // Lighter measures fail at φ = -1.
        assert!(!is_dominated(&light, &mu).unwrap());
        assert_abs_diff_eq!(max_dominated_scale(&light, &mu).unwrap().unwrap(), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn sum_is_exact_on_values() {
        let s = space(3);
        let a = sub(&s, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let b = sub(&s, &[&[0.0, 0.0, 2.0], &[0.0, 1.0, 1.0], &[-1.0, 0.0, 0.0]]);
        let c = combine(&a, &b, CombineMode::Sum).unwrap();
        for phi in probe_panel(&s) {
            assert_abs_diff_eq!(
                c.eval(&phi).unwrap(),
                a.eval(&phi).unwrap() + b.eval(&phi).unwrap(),
                epsilon = 1e-12
            );
        }
        assert_eq!(c.generators().unwrap().len(), 6);
    }

    #[test]
    fn leq_detects_order() {
        let s = space(3);
        let small = StrongSubmeasure::point_mass_sup(s.clone(), &[0, 1], 1.0).unwrap();
        let big = StrongSubmeasure::full_sup(s.clone());
        assert!(leq(&small, &big).unwrap());
        assert!(!leq(&big, &small).unwrap());
        assert!(leq_on(&small, &big, &indicator_basis(&s), 0.0).unwrap());
    }

    #[test]
    fn recognizes_point_mass_sup() {
        let s = space(4);
        let mu = StrongSubmeasure::point_mass_sup(s.clone(), &[3, 1], 0.5).unwrap();
        assert_eq!(mu.as_point_mass_sup(), Some((0.5, vec![1, 3])));
        let nu = sub(&s, &[&[1.0, 1.0, 0.0, 0.0]]);
        assert_eq!(nu.as_point_mass_sup(), None);
    }

    fn family() -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 1..5)
    }

    proptest! {
        #[test]
        fn evaluation_is_sublinear(gens in family(), p in prop::collection::vec(-3.0f64..3.0, 3),
                                   q in prop::collection::vec(-3.0f64..3.0, 3), c in 0.0f64..4.0) {
            let s = space(3);
            let refs: Vec<&[f64]> = gens.iter().map(|g| g.as_slice()).collect();
            let mu = sub(&s, &refs);
            let pq: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a + b).collect();
            prop_assert!(mu.eval_raw(&pq) <= mu.eval_raw(&p) + mu.eval_raw(&q) + 1e-9);
            let cp: Vec<f64> = p.iter().map(|v| c * v).collect();
            prop_assert!((mu.eval_raw(&cp) - c * mu.eval_raw(&p)).abs() < 1e-9);
        }

        #[test]
        fn constants_are_controlled_by_mass(gens in family(), p in prop::collection::vec(-3.0f64..3.0, 3), c in -3.0f64..3.0) {
            let s = space(3);
            let refs: Vec<&[f64]> = gens.iter().map(|g| g.as_slice()).collect();
            let mu = sub(&s, &refs);
            let shifted: Vec<f64> = p.iter().map(|v| v + c).collect();
            let r = norm_and_mass(&mu);
            let bound = if c >= 0.0 { c * r.mass_plus } else { -c * r.mass_minus };
            prop_assert!(mu.eval_raw(&shifted) <= mu.eval_raw(&p) + bound + 1e-9);
        }

        #[test]
        fn positive_families_are_monotone(gens in prop::collection::vec(prop::collection::vec(0.0f64..2.0, 3), 1..5),
                                          p in prop::collection::vec(-3.0f64..3.0, 3),
                                          bump in prop::collection::vec(0.0f64..2.0, 3)) {
            let s = space(3);
            let refs: Vec<&[f64]> = gens.iter().map(|g| g.as_slice()).collect();
            let mu = sub(&s, &refs);
            prop_assert!(mu.is_positive());
            let q: Vec<f64> = p.iter().zip(&bump).map(|(a, b)| a + b).collect();
            prop_assert!(mu.eval_raw(&p) <= mu.eval_raw(&q) + 1e-12);
        }

        #[test]
        fn every_generator_is_dominated(gens in family()) {
            let s = space(3);
            let refs: Vec<&[f64]> = gens.iter().map(|g| g.as_slice()).collect();
            let mu = sub(&s, &refs);
            for g in mu.generators().unwrap() {
                prop_assert!(is_dominated(&g, &mu).unwrap());
            }
        }

        #[test]
        fn extension_is_below_evaluation(gens in family(), g in prop::collection::vec(-3.0f64..3.0, 3)) {
            let s = space(3);
            let refs: Vec<&[f64]> = gens.iter().map(|g| g.as_slice()).collect();
            let mu = sub(&s, &refs);
            let e = extend_usc_raw(&mu, &g).as_f64();
            prop_assert!(e <= mu.eval_raw(&g) + 1e-7);
        }
    }
}
