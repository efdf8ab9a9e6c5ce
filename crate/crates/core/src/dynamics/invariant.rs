//! Invariant positive submeasures: Cesàro averages and monotone fixed points
//! of the pushforward.

use crate::correspondence::{pushforward_submeasure, EndoCorrespondence};
use crate::error::{Error, Result};
use crate::measure::{indicator_basis, probe_panel, FunctionVector};
use crate::submeasure::{combine_all, leq, leq_on, max_gap_on, CombineMode, StrongSubmeasure};

/// Default fixed-point tolerance on the indicator basis.
pub const FIXED_POINT_TOL: f64 = 1e-9;

/// Below this many flattened generators, iterates are re-flattened and order
/// checks use exact hull containment.
const EXACT_CAP: f64 = 4096.0;

/// Default iteration budget `10·|X|²`.
pub fn default_max_iter(f: &EndoCorrespondence) -> usize {
    10 * f.space().len() * f.space().len()
}

/// Result of a monotone fixed-point iteration.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub submeasure: StrongSubmeasure,
    /// Pushforwards applied before the iterates stopped moving.
    pub iterations: usize,
    /// Final gap between successive iterates on the indicator basis.
    pub residual: f64,
    /// Indicator-basis values of every iterate, seed first.
    pub trace: Vec<Vec<f64>>,
}

fn push(f: &EndoCorrespondence, mu: &StrongSubmeasure) -> Result<StrongSubmeasure> {
    let next = pushforward_submeasure(f, mu)?;
    if next.generator_count() <= EXACT_CAP {
        return StrongSubmeasure::from_generators(next.space().clone(), next.generators()?);
    }
    Ok(next)
}

fn values(mu: &StrongSubmeasure, basis: &[FunctionVector]) -> Result<Vec<f64>> {
    basis.iter().map(|phi| mu.eval(phi)).collect()
}

/// `μ1 <= μ2`: exact when μ1 is small enough to enumerate, otherwise on the
/// probe panel within `tol`.
fn order_holds(mu1: &StrongSubmeasure, mu2: &StrongSubmeasure, tol: f64) -> Result<bool> {
    if mu1.generator_count() <= EXACT_CAP {
        leq(mu1, mu2)
    } else {
        leq_on(mu1, mu2, &probe_panel(mu1.space()), tol)
    }
}

fn require_positive(mu: &StrongSubmeasure, op: &'static str) -> Result<()> {
    if mu.is_positive() {
        Ok(())
    } else {
        Err(Error::NotPositive { op })
    }
}

/// `(1/n)·Σ_{j<n} (f_*)^j(μ0)`, a mass-preserving average.
pub fn cesaro_average(f: &EndoCorrespondence, mu0: &StrongSubmeasure, n: usize) -> Result<StrongSubmeasure> {
    Ok(cesaro_run(f, mu0, n, &[])?.average)
}

#[derive(Debug, Clone)]
pub struct CesaroRun {
    pub average: StrongSubmeasure,
    /// Values of the `m`-th average on the requested functions, `m = 1..=n`.
    pub trace: Vec<Vec<f64>>,
}

/// Cesàro average together with the values of every partial average.
pub fn cesaro_run(
    f: &EndoCorrespondence,
    mu0: &StrongSubmeasure,
    n: usize,
    probes: &[FunctionVector],
) -> Result<CesaroRun> {
    if n == 0 {
        return Err(Error::precondition("cesaro_average", "n must be at least 1"));
    }
    require_positive(mu0, "cesaro_average")?;
    let mut iterate = mu0.clone();
    let mut terms = Vec::with_capacity(n);
    let mut sums = vec![0.0; probes.len()];
    let mut trace = Vec::with_capacity(if probes.is_empty() { 0 } else { n });
    for j in 0..n {
        if j > 0 {
            iterate = push(f, &iterate)?;
        }
        if !probes.is_empty() {
            // The average is a sum of positive terms, so its value is the sum
            // of the values.
            for (s, phi) in sums.iter_mut().zip(probes) {
                *s += iterate.eval(phi)?;
            }
            trace.push(sums.iter().map(|s| s / (j + 1) as f64).collect());
        }
        terms.push(iterate.clone());
    }
    let average = combine_all(&terms, CombineMode::Sum)?.scaled(1.0 / n as f64)?;
    Ok(CesaroRun { average, trace })
}

/// Direction of a monotone iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Decreasing,
    Increasing,
}

fn monotone_fixed_point(
    f: &EndoCorrespondence,
    mu0: &StrongSubmeasure,
    tol: f64,
    max_iter: usize,
    direction: Direction,
    op: &'static str,
) -> Result<FixedPoint> {
    require_positive(mu0, op)?;
    crate::space::ensure_same(f.space(), mu0.space(), op)?;
    let first = push(f, mu0)?;
    let pre = match direction {
        Direction::Decreasing => order_holds(&first, mu0, tol)?,
        Direction::Increasing => order_holds(mu0, &first, tol)?,
    };
    if !pre {
        let relation = match direction {
            Direction::Decreasing => "f_*(seed) <= seed",
            Direction::Increasing => "f_*(seed) >= seed",
        };
        return Err(Error::precondition(op, format!("the seed does not satisfy {relation}")));
    }
    let basis = indicator_basis(f.space());
    let mut trace = vec![values(mu0, &basis)?];
    let mut current;
    let mut next = first;
    let mut residual = f64::INFINITY;
    for k in 1..=max_iter {
        let next_vals = values(&next, &basis)?;
        residual = next_vals
            .iter()
            .zip(trace.last().unwrap())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        trace.push(next_vals);
        current = next;
        if residual < tol {
            let image = push(f, &current)?;
            let defect = max_gap_on(&image, &current, &probe_panel(f.space()))?;
            if defect > tol {
                return Err(Error::NonConvergence {
                    op,
                    iterations: k,
                    residual: defect,
                });
            }
            log::debug!("{op}: converged after {k} pushforwards, residual {residual:e}");
            return Ok(FixedPoint {
                submeasure: current,
                iterations: k,
                residual,
                trace,
            });
        }
        next = push(f, &current)?;
    }
    Err(Error::NonConvergence {
        op,
        iterations: max_iter,
        residual,
    })
}

/// Largest invariant submeasure below a seed with `f_*(μ0) <= μ0`: the limit
/// of the decreasing iterates `(f_*)^k(μ0)`.
pub fn inv_leq(f: &EndoCorrespondence, mu0: &StrongSubmeasure, tol: f64, max_iter: usize) -> Result<FixedPoint> {
    monotone_fixed_point(f, mu0, tol, max_iter, Direction::Decreasing, "inv_leq")
}

/// Smallest invariant submeasure above a seed with `f_*(μ0) >= μ0`: the limit
/// of the increasing iterates. Any invariant `μ >= μ0` dominates every
/// iterate, hence the limit.
pub fn inv_geq(f: &EndoCorrespondence, mu0: &StrongSubmeasure, tol: f64, max_iter: usize) -> Result<FixedPoint> {
    monotone_fixed_point(f, mu0, tol, max_iter, Direction::Increasing, "inv_geq")
}

/// `max |f_*(μ)(φ) - μ(φ)|` over the probe panel.
pub fn invariance_defect(f: &EndoCorrespondence, mu: &StrongSubmeasure) -> Result<f64> {
    require_positive(mu, "invariance_defect")?;
    let image = pushforward_submeasure(f, mu)?;
    max_gap_on(&image, mu, &probe_panel(f.space()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::Correspondence;
    use crate::measure::SignedMeasure;
    use crate::models::{build_cremona_model, build_transcendental_model};
    use crate::space::FiniteSpace;
    use crate::submeasure::combine;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn map_model(map: &[usize]) -> EndoCorrespondence {
        let s = FiniteSpace::indexed("x", map.len()).unwrap().into_shared();
        EndoCorrespondence::new(Correspondence::from_map(s.clone(), s, map).unwrap()).unwrap()
    }

    fn dirac(s: &Arc<FiniteSpace>, x: usize) -> StrongSubmeasure {
        StrongSubmeasure::from_measure(SignedMeasure::dirac(s.clone(), x, 1.0))
    }

    #[test]
    fn cesaro_on_a_cycle_is_uniform() {
        let f = map_model(&[1, 2, 0, 3]);
        let mu = dirac(f.space(), 0);
        let avg = cesaro_average(&f, &mu, 6).unwrap();
        for (x, expected) in [(0, 1.0 / 3.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0), (3, 0.0)] {
            let phi = FunctionVector::indicator(f.space().clone(), &[x]);
            assert_abs_diff_eq!(avg.eval(&phi).unwrap(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn cesaro_under_identity_is_the_seed() {
        let s = FiniteSpace::indexed("x", 3).unwrap().into_shared();
        let f = EndoCorrespondence::new(Correspondence::identity(s.clone())).unwrap();
        let mu = StrongSubmeasure::point_mass_sup(s.clone(), &[0, 2], 1.0).unwrap();
        let avg = cesaro_average(&f, &mu, 5).unwrap();
        assert_abs_diff_eq!(max_gap_on(&avg, &mu, &probe_panel(&s)).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cesaro_defect_decays_like_one_over_n() {
        let m = build_transcendental_model(6).unwrap();
        let mu0 = dirac(&m.space, m.infinity);
        for n in [1usize, 4, 16, 64] {
            let avg = cesaro_average(&m.map, &mu0, n).unwrap();
            let defect = invariance_defect(&m.map, &avg).unwrap();
            assert!(defect <= 2.0 / n as f64 + 1e-12, "n = {n}: defect {defect}");
        }
    }

    #[test]
    fn cesaro_trace_matches_partial_averages() {
        let f = map_model(&[1, 0]);
        let mu = dirac(f.space(), 0);
        let basis = indicator_basis(f.space());
        let run = cesaro_run(&f, &mu, 3, &basis).unwrap();
        assert_eq!(run.trace.len(), 3);
        assert_abs_diff_eq!(run.trace[1][0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(run.trace[2][0], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn cesaro_rejects_signed_seed() {
        let f = map_model(&[1, 0]);
        let mu = StrongSubmeasure::from_measure(SignedMeasure::dirac(f.space().clone(), 0, -1.0));
        assert!(matches!(cesaro_average(&f, &mu, 2), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn invariant_seed_is_returned_at_once() {
        let f = map_model(&[1, 2, 0]);
        let mu = StrongSubmeasure::full_sup(f.space().clone());
        let out = inv_leq(&f, &mu, FIXED_POINT_TOL, default_max_iter(&f)).unwrap();
        assert_eq!(out.iterations, 1);
        let out = inv_geq(&f, &mu, FIXED_POINT_TOL, default_max_iter(&f)).unwrap();
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn attracting_fixed_point_collects_the_orbit() {
        // x0 → x1 → x2 → x3 → x3: the forward-orbit sup decreases to δ_x3.
        let f = map_model(&[1, 2, 3, 3]);
        let seed = StrongSubmeasure::point_mass_sup(f.space().clone(), &[0, 1, 2, 3], 1.0).unwrap();
        let out = inv_leq(&f, &seed, FIXED_POINT_TOL, default_max_iter(&f)).unwrap();
        // Oracle: follow the orbit by hand.
        let mut x = 0;
        for _ in 0..4 {
            x = [1, 2, 3, 3][x];
        }
        assert_eq!(out.submeasure.as_point_mass_sup(), Some((1.0, vec![x])));
        assert_eq!(out.iterations, 4);
    }

    #[test]
    fn dirac_in_basin_is_not_subinvariant() {
        let f = map_model(&[1, 2, 3, 3]);
        let err = inv_leq(&f, &dirac(f.space(), 0), FIXED_POINT_TOL, 100).unwrap_err();
        assert!(matches!(err, Error::Precondition { .. }));
    }

    #[test]
    fn full_sup_is_invariant_on_every_bundled_model() {
        let c = build_cremona_model(3).unwrap();
        let t = build_transcendental_model(8).unwrap();
        for f in [&c.map, &t.map] {
            let mu = StrongSubmeasure::full_sup(f.space().clone());
            let out = inv_leq(f, &mu, FIXED_POINT_TOL, default_max_iter(f)).unwrap();
            assert_eq!(out.iterations, 1);
            assert!(leq(&out.submeasure, &mu).unwrap() && leq(&mu, &out.submeasure).unwrap());
        }
    }

    #[test]
    fn cremona_vertex_climbs_to_the_coordinate_triangle() {
        let c = build_cremona_model(3).unwrap();
        let e0 = dirac(&c.space, c.vertices[0]);
        // A lone vertex fails the seed condition.
        let err = inv_geq(&c.map, &e0, FIXED_POINT_TOL, default_max_iter(&c.map)).unwrap_err();
        assert!(matches!(err, Error::Precondition { .. }));

        let seed = combine(&e0, &pushforward_submeasure(&c.map, &e0).unwrap(), CombineMode::Max).unwrap();
        let out = inv_geq(&c.map, &seed, FIXED_POINT_TOL, default_max_iter(&c.map)).unwrap();
        let triangle: Vec<usize> = (0..3).chain(c.lines.iter().flatten().copied()).collect();
        let mut triangle = triangle;
        triangle.sort_unstable();
        triangle.dedup();
        let (scale, points) = out.submeasure.as_point_mass_sup().unwrap();
        assert_eq!(scale, 1.0);
        assert_eq!(points, triangle);
        assert!(leq(&out.submeasure, &StrongSubmeasure::full_sup(c.space.clone())).unwrap());
        assert!(invariance_defect(&c.map, &out.submeasure).unwrap() <= 1e-9);
    }

    #[test]
    fn transcendental_point_jumps_to_full_sup() {
        let t = build_transcendental_model(5).unwrap();
        let out = inv_geq(&t.map, &dirac(&t.space, t.infinity), FIXED_POINT_TOL, 1000).unwrap();
        let full = t.full_sup();
        assert!(leq(&out.submeasure, &full).unwrap() && leq(&full, &out.submeasure).unwrap());
        assert_eq!(out.trace.len(), 3);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let f = map_model(&[1, 2, 3, 4, 5, 5]);
        let seed = StrongSubmeasure::point_mass_sup(f.space().clone(), &[0, 1, 2, 3, 4, 5], 1.0).unwrap();
        let err = inv_leq(&f, &seed, FIXED_POINT_TOL, 2).unwrap_err();
        assert!(err.is_non_convergence());
    }
}
