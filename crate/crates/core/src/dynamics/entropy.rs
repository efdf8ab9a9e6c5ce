//! Entropy of invariant submeasures, lifts of invariant measures to the orbit
//! space, and the projection inequality on truncated path spaces.

use std::collections::BTreeSet;

use crate::correspondence::{pushforward_submeasure, EndoCorrespondence};
use crate::dynamics::markov::{markov_entropy, MarkovMeasure};
use crate::dynamics::sft::{scc_blocks, spectral_radius, topological_entropy, OrbitSft, PathSpace};
use crate::error::{Error, Result};
use crate::measure::{indicator_basis, probe_panel, FunctionVector, PositiveMeasure};
use crate::space::ensure_same;
use crate::submeasure::{max_dominated_scale, StrongSubmeasure};

const INVARIANCE_TOL: f64 = 1e-9;
/// Generator families up to this size are searched for candidate marginals.
const CANDIDATE_CAP: f64 = 4096.0;

/// Entropy of an invariant submeasure: the supremum of the entropies of
/// shift-invariant measures whose first marginal is dominated by μ, each
/// measure normalized to mass one.
#[derive(Debug, Clone)]
pub struct EntropyEstimate {
    pub value: f64,
    /// `true` when `value` is the supremum; otherwise it is a lower bound
    /// attained by `witness`.
    pub exact: bool,
    /// A dominated Markov measure of entropy `value`; `None` only for a lower
    /// bound of 0 with no admissible candidate found.
    pub witness: Option<MarkovMeasure>,
}

/// `f*φ(x) = max over successors of φ`.
fn pull_max(sft: &OrbitSft, phi: &[f64]) -> Vec<f64> {
    (0..sft.len())
        .map(|x| sft.successors(x).map(|y| phi[y]).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

fn check_invariant(sft: &OrbitSft, mu: &StrongSubmeasure) -> Result<()> {
    ensure_same(sft.space(), mu.space(), "submeasure_entropy")?;
    if !mu.is_positive() {
        return Err(Error::NotPositive { op: "submeasure_entropy" });
    }
    for phi in probe_panel(sft.space()) {
        let pulled = FunctionVector::new(sft.space().clone(), pull_max(sft, phi.values()))?;
        let gap = (mu.eval(&pulled)? - mu.eval(&phi)?).abs();
        if gap > INVARIANCE_TOL {
            return Err(Error::precondition(
                "submeasure_entropy",
                format!("the submeasure is not invariant (defect {gap:e})"),
            ));
        }
    }
    Ok(())
}

/// Entropy of a positive invariant submeasure μ on the orbit subshift.
///
/// Exact for `μ = c·sup_{x in S} δ_x`: the admissible measures are those
/// carried by paths in `S`, so the value is the log spectral radius of the
/// subgraph on `S`. Otherwise the best of two candidate families is returned
/// as a lower bound: Parry measures of generator supports and strongly
/// connected blocks whose marginal is dominated, and maximal-entropy chains
/// whose marginal is a normalized generator.
pub fn submeasure_entropy(sft: &OrbitSft, mu: &StrongSubmeasure) -> Result<EntropyEstimate> {
    check_invariant(sft, mu)?;
    if let Some((_, points)) = mu.as_point_mass_sup() {
        let rho = spectral_radius(&sft.induced(&points));
        let value = if rho > 1.0 { rho.ln() } else { 0.0 };
        return Ok(EntropyEstimate {
            value,
            exact: true,
            witness: MarkovMeasure::parry_on(sft, &points).ok(),
        });
    }

    let mut supports: BTreeSet<Vec<usize>> = scc_blocks(&sft.matrix()).into_iter().collect();
    let mut marginals = Vec::new();
    if mu.generator_count() <= CANDIDATE_CAP {
        for g in mu.generators()? {
            supports.insert(g.support());
            marginals.push(g.weights().to_vec());
        }
    }
    let mut best: Option<(f64, MarkovMeasure)> = None;
    let mut consider = |m: MarkovMeasure| {
        let h = markov_entropy(&m);
        if best.as_ref().map_or(true, |(b, _)| h > *b) {
            best = Some((h, m));
        }
    };
    for support in &supports {
        if let Ok(m) = MarkovMeasure::parry_on(sft, support) {
            let marginal = crate::measure::SignedMeasure::new(sft.space().clone(), m.stationary().to_vec())?;
            if max_dominated_scale(&marginal, mu)?.is_some_and(|s| s > 0.0) {
                consider(m);
            }
        }
    }
    for marginal in &marginals {
        if let Some(m) = MarkovMeasure::max_entropy_with_marginal(sft, marginal) {
            consider(m);
        }
    }
    Ok(match best {
        Some((value, m)) => EntropyEstimate {
            value,
            exact: false,
            witness: Some(m),
        },
        None => EntropyEstimate {
            value: 0.0,
            exact: false,
            witness: None,
        },
    })
}

/// The Markov lift of an invariant probability measure avoiding every point
/// whose orbit can meet the indeterminacy locus: the chain follows the map on
/// the support of μ, so its first marginal is μ and it is shift-invariant.
pub fn lift_invariant_measure(f: &EndoCorrespondence, mu: &PositiveMeasure) -> Result<MarkovMeasure> {
    let mu = mu.as_signed();
    ensure_same(f.space(), mu.space(), "lift_invariant_measure")?;
    if (mu.mass() - 1.0).abs() > INVARIANCE_TOL {
        return Err(Error::precondition(
            "lift_invariant_measure",
            format!("mass {} is not 1", mu.mass()),
        ));
    }
    let closure = f.indeterminacy_closure();
    if let Some(&x) = mu.support().iter().find(|x| closure.contains(x)) {
        return Err(Error::precondition(
            "lift_invariant_measure",
            format!(
                "mass at '{}', whose orbit can reach the indeterminacy locus; no lift is defined there",
                f.space().label(x)
            ),
        ));
    }
    let n = f.space().len();
    let mut image = vec![0.0; n];
    for x in mu.support() {
        image[f.fiber(x)[0]] += mu.weights()[x];
    }
    if let Some(y) = (0..n).find(|&y| (image[y] - mu.weights()[y]).abs() > INVARIANCE_TOL) {
        return Err(Error::precondition(
            "lift_invariant_measure",
            format!("the measure is not invariant at '{}'", f.space().label(y)),
        ));
    }
    let sft = OrbitSft::from_correspondence(f);
    let transitions = (0..n)
        .map(|x| {
            let succ: Vec<usize> = sft.successors(x).collect();
            (0..n)
                .map(|y| if succ.contains(&y) { 1.0 / succ.len() as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    MarkovMeasure::new(sft, mu.weights().to_vec(), transitions)
}

/// Both sides of `f_*((π1)_* μ̂) >= (π2)_* μ̂` on the indicator basis.
#[derive(Debug, Clone)]
pub struct KeyInequalityReport {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// The inequality holds within `1e-9` on every basis function.
    pub holds: bool,
    /// Basis indices where the left side exceeds the right by more than `1e-9`.
    pub strict: Vec<usize>,
}

/// Compares pushing a path-space submeasure to its first letter and then
/// applying `f` against reading the second letter directly.
pub fn key_inequality_check(f: &EndoCorrespondence, paths: &PathSpace, muhat: &StrongSubmeasure) -> Result<KeyInequalityReport> {
    ensure_same(&paths.space, muhat.space(), "key_inequality_check")?;
    ensure_same(paths.first.target(), f.space(), "key_inequality_check")?;
    let first = pushforward_submeasure(&paths.first, muhat)?;
    let lhs_mu = pushforward_submeasure(f, &first)?;
    let rhs_mu = pushforward_submeasure(&paths.second, muhat)?;
    let basis = indicator_basis(f.space());
    let lhs: Vec<f64> = basis.iter().map(|phi| lhs_mu.eval(phi)).collect::<Result<_>>()?;
    let rhs: Vec<f64> = basis.iter().map(|phi| rhs_mu.eval(phi)).collect::<Result<_>>()?;
    let holds = lhs.iter().zip(&rhs).all(|(l, r)| l + INVARIANCE_TOL >= *r);
    let strict = (0..lhs.len()).filter(|&i| lhs[i] > rhs[i] + INVARIANCE_TOL).collect();
    Ok(KeyInequalityReport { lhs, rhs, holds, strict })
}

/// Smallest orbit-graph entropy over several compactifications of one map.
pub fn kahler_entropy(models: &[EndoCorrespondence]) -> Result<f64> {
    if models.is_empty() {
        return Err(Error::precondition("kahler_entropy", "no models given"));
    }
    Ok(models
        .iter()
        .map(|m| topological_entropy(&OrbitSft::from_correspondence(m)))
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::Correspondence;
    use crate::measure::SignedMeasure;
    use crate::models::{build_compactification_pair, build_cremona_model};
    use crate::space::FiniteSpace;
    use crate::submeasure::{combine, CombineMode};
    use approx::assert_abs_diff_eq;

    fn map_model(map: &[usize]) -> EndoCorrespondence {
        let s = FiniteSpace::indexed("x", map.len()).unwrap().into_shared();
        EndoCorrespondence::new(Correspondence::from_map(s.clone(), s, map).unwrap()).unwrap()
    }

    #[test]
    fn full_sup_on_full_shift_has_log_k_entropy() {
        for k in [2usize, 3, 5] {
            let sft = OrbitSft::full_shift(k).unwrap();
            let mu = StrongSubmeasure::full_sup(sft.space().clone());
            let e = submeasure_entropy(&sft, &mu).unwrap();
            assert!(e.exact);
            assert_abs_diff_eq!(e.value, (k as f64).ln(), epsilon = 1e-9);
            assert_abs_diff_eq!(markov_entropy(&e.witness.unwrap()), (k as f64).ln(), epsilon = 1e-9);
        }
    }

    #[test]
    fn fixed_point_mass_has_zero_entropy() {
        let f = map_model(&[1, 1, 0]);
        let sft = OrbitSft::from_correspondence(&f);
        let mu = StrongSubmeasure::from_measure(SignedMeasure::dirac(f.space().clone(), 1, 1.0));
        let e = submeasure_entropy(&sft, &mu).unwrap();
        assert!(e.exact);
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn invariant_subset_uses_the_induced_subgraph() {
        // A full 2-shift on {0, 1} and a golden-mean block on {2, 3}, with
        // 4 feeding into both.
        let s = FiniteSpace::indexed("v", 5).unwrap().into_shared();
        let t = true;
        let f = false;
        let adj = vec![
            vec![t, t, f, f, f],
            vec![t, t, f, f, f],
            vec![f, f, t, t, f],
            vec![f, f, t, f, f],
            vec![t, f, t, f, f],
        ];
        let sft = OrbitSft::from_adjacency(s.clone(), adj).unwrap();
        let golden = StrongSubmeasure::point_mass_sup(s.clone(), &[2, 3], 1.0).unwrap();
        let e = submeasure_entropy(&sft, &golden).unwrap();
        // Oracle: eigenvalue of the 2x2 block from its characteristic polynomial.
        assert_abs_diff_eq!(e.value, ((1.0 + 5f64.sqrt()) / 2.0).ln(), epsilon = 1e-9);
        let both = StrongSubmeasure::point_mass_sup(s.clone(), &[0, 1, 2, 3], 1.0).unwrap();
        assert_abs_diff_eq!(submeasure_entropy(&sft, &both).unwrap().value, 2f64.ln(), epsilon = 1e-9);
        // {0, 1, 4} is not invariant: 4 has no preimage.
        let bad = StrongSubmeasure::point_mass_sup(s, &[0, 1, 4], 1.0).unwrap();
        assert!(matches!(submeasure_entropy(&sft, &bad), Err(Error::Precondition { .. })));
    }

    #[test]
    fn general_submeasure_gets_a_flagged_lower_bound() {
        // A full 2-shift on {0, 1} beside the 2-cycle 2 → 3 → 2.
        let s = FiniteSpace::indexed("v", 4).unwrap().into_shared();
        let (t, f) = (true, false);
        let adj = vec![vec![t, t, f, f], vec![t, t, f, f], vec![f, f, f, t], vec![f, f, t, f]];
        let sft = OrbitSft::from_adjacency(s.clone(), adj).unwrap();
        let block = StrongSubmeasure::point_mass_sup(s.clone(), &[0, 1], 1.0).unwrap();
        let cycle = StrongSubmeasure::from_measure(SignedMeasure::uniform(s.clone(), &[2, 3], 1.0));
        let mu = combine(&block, &cycle, CombineMode::Max).unwrap();
        let e = submeasure_entropy(&sft, &mu).unwrap();
        assert!(!e.exact);
        // The Parry measure of the full block is admissible and optimal.
        assert_abs_diff_eq!(e.value, 2f64.ln(), epsilon = 1e-9);
        assert!(e.value <= topological_entropy(&sft) + 1e-9);
        // The cycle alone only admits its periodic measure.
        let e = submeasure_entropy(&sft, &cycle).unwrap();
        assert_abs_diff_eq!(e.value, 0.0, epsilon = 1e-12);
        assert!(e.witness.is_some());
    }

    #[test]
    fn lift_of_cycle_measure_is_deterministic() {
        let f = map_model(&[1, 2, 0, 3]);
        let mu = PositiveMeasure::new(SignedMeasure::uniform(f.space().clone(), &[0, 1, 2], 1.0)).unwrap();
        let lift = lift_invariant_measure(&f, &mu).unwrap();
        assert_eq!(markov_entropy(&lift), 0.0);
        assert_eq!(lift.stationary(), mu.as_signed().weights());
        let fixed = PositiveMeasure::new(SignedMeasure::dirac(f.space().clone(), 3, 1.0)).unwrap();
        assert_eq!(lift_invariant_measure(&f, &fixed).unwrap().cylinder(&[3, 3, 3]), 1.0);
    }

    #[test]
    fn lift_rejects_mass_near_indeterminacy_and_non_invariance() {
        let c = build_cremona_model(2).unwrap();
        let e0 = PositiveMeasure::new(SignedMeasure::dirac(c.space.clone(), 0, 1.0)).unwrap();
        assert!(matches!(lift_invariant_measure(&c.map, &e0), Err(Error::Precondition { .. })));
        let f = map_model(&[1, 0]);
        let half = PositiveMeasure::new(SignedMeasure::new(f.space().clone(), vec![0.25, 0.75]).unwrap()).unwrap();
        assert!(lift_invariant_measure(&f, &half).is_err());
    }

    #[test]
    fn key_inequality_is_strict_at_indeterminacy() {
        let c = build_cremona_model(2).unwrap();
        let sft = OrbitSft::from_correspondence(&c.map);
        let paths = sft.path_space(2).unwrap();
        let at = |w: &[usize]| paths.words.iter().position(|p| p == w).unwrap();
        let word = at(&[c.vertices[0], c.image_limit]);
        let muhat = StrongSubmeasure::from_measure(SignedMeasure::dirac(paths.space.clone(), word, 1.0));
        let report = key_inequality_check(&c.map, &paths, &muhat).unwrap();
        assert!(report.holds);
        assert!(report.strict.contains(&c.vertices[1]));

        let generic = at(&[c.approach[0], c.approach_images[0]]);
        let muhat = StrongSubmeasure::from_measure(SignedMeasure::dirac(paths.space.clone(), generic, 1.0));
        let report = key_inequality_check(&c.map, &paths, &muhat).unwrap();
        assert!(report.holds && report.strict.is_empty());

        let zero = StrongSubmeasure::from_measure(SignedMeasure::zero(paths.space.clone()));
        let report = key_inequality_check(&c.map, &paths, &zero).unwrap();
        assert!(report.lhs.iter().chain(&report.rhs).all(|&v| v == 0.0));
    }

    #[test]
    fn kahler_entropy_takes_the_smaller_compactification() {
        let pair = build_compactification_pair(4).unwrap();
        let per_model: Vec<f64> = pair
            .iter()
            .map(|m| spectral_radius(&OrbitSft::from_correspondence(m).matrix()).ln())
            .collect();
        assert_abs_diff_eq!(per_model[0], 0.0, epsilon = 1e-9);
        assert!(per_model[1] > 0.1);
        assert_abs_diff_eq!(kahler_entropy(&pair).unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(kahler_entropy(&pair[1..]).unwrap(), per_model[1], epsilon = 1e-9);
        assert!(kahler_entropy(&[]).is_err());
    }
}
