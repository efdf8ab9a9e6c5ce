//! Seeded random instances: correspondences, positive submeasures and
//! invariant submeasures of a fixed self-correspondence.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::correspondence::{Correspondence, CorrespondenceData, EndoCorrespondence};
use crate::error::Result;
use crate::measure::SignedMeasure;
use crate::space::FiniteSpace;
use crate::submeasure::{combine, leq, CombineMode, StrongSubmeasure};

/// Random dominant correspondence `X → Y` of generic degree `degree`.
///
/// Every target receives `degree` generic preimages; `n_indeterminate`
/// sources additionally fan out to 2 to 4 extra targets. Exceptional
/// targets get envelope limit fibers, so the result supports pullback.
pub fn random_correspondence(
    rng: &mut impl Rng,
    source: Arc<FiniteSpace>,
    target: Arc<FiniteSpace>,
    degree: u32,
    n_indeterminate: usize,
) -> Result<Correspondence> {
    let (n, m) = (source.len(), target.len());
    assert!(n >= m * degree as usize, "source too small for a degree-{degree} cover");
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut data = CorrespondenceData::new(source, target);
    data.generic_degree = degree;
    for (k, &x) in order.iter().enumerate() {
        let y = if k < m * degree as usize { k % m } else { rng.gen_range(0..m) };
        data = data.edge(x, y, 1);
    }
    for &x in order.iter().take(n_indeterminate) {
        let extra = rng.gen_range(2..=4.min(m.max(2)));
        for _ in 0..extra {
            data = data.edge(x, rng.gen_range(0..m), 1);
        }
    }
    Correspondence::complete_limit_fibers(data)
}

/// Random self-correspondence of generic degree 1.
pub fn random_endo(rng: &mut impl Rng, space: Arc<FiniteSpace>, n_indeterminate: usize) -> Result<EndoCorrespondence> {
    EndoCorrespondence::new(random_correspondence(rng, space.clone(), space, 1, n_indeterminate)?)
}

/// Random positive measure with about `density` of the points charged and
/// total mass in `[0.5, 2)`.
pub fn random_positive_measure(rng: &mut impl Rng, space: &Arc<FiniteSpace>, density: f64) -> SignedMeasure {
    let n = space.len();
    let mut w: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(density) { rng.gen_range(0.0..1.0) } else { 0.0 })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[rng.gen_range(0..n)] = 1.0;
    }
    let mass: f64 = w.iter().sum();
    let target = rng.gen_range(0.5..2.0);
    let w = w.iter().map(|v| v * target / mass).collect();
    SignedMeasure::new(space.clone(), w).expect("finite weights")
}

/// Random positive strong submeasure with `1..=max_generators` generators.
pub fn random_positive_submeasure(rng: &mut impl Rng, space: &Arc<FiniteSpace>, max_generators: usize) -> StrongSubmeasure {
    let k = rng.gen_range(1..=max_generators.max(1));
    let density = rng.gen_range(0.1..0.8);
    let gens = (0..k).map(|_| random_positive_measure(rng, space, density)).collect();
    StrongSubmeasure::from_generators(space.clone(), gens).expect("generators share the space")
}

/// Images under the relation: `F(S)`.
fn image(f: &Correspondence, s: &BTreeSet<usize>) -> BTreeSet<usize> {
    s.iter().flat_map(|&x| f.fiber(x).iter().copied()).collect()
}

/// Largest set `S` inside the forward closure of `seed` with `F(S) = S`.
///
/// The forward closure `C` satisfies `F(C) ⊆ C`, so the images `F^k(C)`
/// decrease and stabilize at a set equal to its own image.
pub fn invariant_core(f: &EndoCorrespondence, seed: &[usize]) -> BTreeSet<usize> {
    let mut closure: BTreeSet<usize> = seed.iter().copied().collect();
    loop {
        let next: BTreeSet<usize> = closure.union(&image(f, &closure)).copied().collect();
        if next.len() == closure.len() {
            break;
        }
        closure = next;
    }
    loop {
        let next = image(f, &closure);
        if next == closure {
            return closure;
        }
        closure = next;
    }
}

/// Cycles `x_0 → ... → x_{k-1} → x_0` through single-valued points, each
/// listed once from its smallest point.
pub fn single_valued_cycles(f: &EndoCorrespondence) -> Vec<Vec<usize>> {
    let n = f.space().len();
    let mut cycles = Vec::new();
    for start in 0..n {
        let mut path = vec![start];
        let mut x = start;
        loop {
            let fib = f.fiber(x);
            if fib.len() != 1 {
                break;
            }
            x = fib[0];
            if x == start {
                cycles.push(path);
                break;
            }
            if x < start || path.contains(&x) {
                break;
            }
            path.push(x);
        }
    }
    cycles
}

/// Random invariant positive submeasures of a fixed self-correspondence.
///
/// Building blocks are `sup_{x in S} δ_x` over sets with `F(S) = S` and
/// uniform measures on cycles of single-valued points; both are invariant
/// because `f_*(μ)(φ) = μ(f*φ)` for positive μ. Maxima, sums and positive
/// multiples of invariant submeasures stay invariant.
pub struct InvariantSampler<'a> {
    f: &'a EndoCorrespondence,
    cycles: Vec<Vec<usize>>,
}

impl<'a> InvariantSampler<'a> {
    pub fn new(f: &'a EndoCorrespondence) -> Self {
        InvariantSampler {
            f,
            cycles: single_valued_cycles(f),
        }
    }

    fn space(&self) -> &Arc<FiniteSpace> {
        self.f.space()
    }

    /// A mass-one invariant building block.
    fn block(&self, rng: &mut impl Rng) -> StrongSubmeasure {
        let n = self.space().len();
        if !self.cycles.is_empty() && rng.gen_bool(0.5) {
            let cycle = self.cycles.choose(rng).unwrap();
            return StrongSubmeasure::from_measure(SignedMeasure::uniform(self.space().clone(), cycle, 1.0));
        }
        let k = rng.gen_range(1..=3.min(n));
        let seed: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
        let core: Vec<usize> = invariant_core(self.f, &seed).into_iter().collect();
        StrongSubmeasure::point_mass_sup(self.space().clone(), &core, 1.0).expect("core is nonempty")
    }

    /// A random invariant submeasure with all generator masses equal to
    /// `mass`: a maximum of 1 to 3 blocks, or an average of two maxima.
    pub fn sample<R: Rng>(&self, rng: &mut R, mass: f64) -> StrongSubmeasure {
        let max_of_blocks = |rng: &mut R| {
            let k = rng.gen_range(1..=3);
            let mut acc = self.block(rng);
            for _ in 1..k {
                acc = combine(&acc, &self.block(rng), CombineMode::Max).expect("same space");
            }
            acc
        };
        let mu = if rng.gen_bool(0.3) {
            let t = rng.gen_range(0.1..0.9);
            let a = max_of_blocks(rng).scaled(t).unwrap();
            let b = max_of_blocks(rng).scaled(1.0 - t).unwrap();
            combine(&a, &b, CombineMode::Sum).expect("same space")
        } else {
            max_of_blocks(rng)
        };
        mu.scaled(mass).expect("mass is nonnegative")
    }

    /// Up to `count` samples ν with `ν <= bound`, drawing at most
    /// `max_draws` candidates.
    pub fn sample_below(
        &self,
        rng: &mut impl Rng,
        bound: &StrongSubmeasure,
        count: usize,
        max_draws: usize,
    ) -> Result<Vec<StrongSubmeasure>> {
        let mass = bound.eval(&crate::measure::FunctionVector::constant(self.space().clone(), 1.0))?;
        let mut out = Vec::new();
        for _ in 0..max_draws {
            if out.len() == count {
                break;
            }
            let nu = self.sample(rng, mass);
            if leq(&nu, bound)? {
                out.push(nu);
            }
        }
        Ok(out)
    }

    /// Up to `count` samples μ with `bound <= μ`: maxima of `bound`'s
    /// invariant hull with further samples at the same mass.
    pub fn sample_above(
        &self,
        rng: &mut impl Rng,
        bound: &StrongSubmeasure,
        count: usize,
        max_draws: usize,
    ) -> Result<Vec<StrongSubmeasure>> {
        let mass = bound.eval(&crate::measure::FunctionVector::constant(self.space().clone(), 1.0))?;
        let support: Vec<usize> = bound
            .generators()?
            .iter()
            .flat_map(|g| g.support())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut out = Vec::new();
        for _ in 0..max_draws {
            if out.len() == count {
                break;
            }
            let n = self.space().len();
            let mut seed = support.clone();
            seed.extend((0..rng.gen_range(0..=2)).map(|_| rng.gen_range(0..n)));
            let core: Vec<usize> = invariant_core(self.f, &seed).into_iter().collect();
            let mut mu = StrongSubmeasure::point_mass_sup(self.space().clone(), &core, mass)?;
            if rng.gen_bool(0.5) {
                mu = combine(&mu, &self.sample(rng, mass), CombineMode::Max)?;
            }
            if leq(bound, &mu)? {
                out.push(mu);
            }
        }
        Ok(out)
    }
}
