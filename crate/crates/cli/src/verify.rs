//! Seeded property and regression suites over the whole toolkit.
//!
//! Each check draws from its own generator, seeded from the run seed and the
//! check's position in [`SUITES`], so filtering never changes what a check
//! sees. A failing check reports the violated inequality and its witness.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use submeasure::correspondence::{resolve_graph, Correspondence};
use submeasure::dynamics::entropy::{key_inequality_check, lift_invariant_measure, submeasure_entropy};
use submeasure::dynamics::invariant::{
    cesaro_average, default_max_iter, inv_geq, inv_leq, invariance_defect, FIXED_POINT_TOL,
};
use submeasure::dynamics::markov::{markov_entropy, MarkovMeasure};
use submeasure::dynamics::sft::{topological_entropy, OrbitSft};
use submeasure::intersection::{
    build_divisor_model, family_sum, kappa, kappa_minimizers, least_negative, DivisorKind, SignedFamily, KAPPA_TOL,
};
use submeasure::measure::probe_panel;
use submeasure::models::{
    build_blowup_model, build_compactification_pair, build_cremona_model, build_transcendental_model,
};
use submeasure::sampling::{
    invariant_core, random_correspondence, random_endo, random_positive_measure, random_positive_submeasure,
    InvariantSampler,
};
use submeasure::submeasure::{leq, max_gap_on};
use submeasure::weak::{cluster_subsequence, weak_limit};
use submeasure::{
    combine, compose, extend_usc, indicator_basis, is_dominated, jordan_decompose, norm_and_mass, pullback_submeasure,
    pushforward_submeasure, set_value, CombineMode, EndoCorrespondence, ExtendedValue, FiniteSpace, FunctionVector,
    PositiveMeasure, SetMode, SignedMeasure, StrongSubmeasure,
};

use crate::CliError;

const TOL: f64 = 1e-9;

/// A failed check: the violated relation and its witness.
pub struct Fail(String);

impl From<submeasure::Error> for Fail {
    fn from(e: submeasure::Error) -> Self {
        Fail(format!("unexpected error: {e}"))
    }
}

pub type Outcome = Result<String, Fail>;
pub type Check = fn(&mut ChaCha8Rng) -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(Fail(format!($($fmt)+)));
        }
    };
}

pub const SUITES: &[(&str, &[(&str, Check)])] = &[
    (
        "submeasure-laws",
        &[
            ("sublinearity", sublinearity),
            ("lipschitz", lipschitz),
            ("positive-is-monotone", monotone),
            ("usc-extension", usc_extension),
            ("set-subadditivity", set_subadditivity),
            ("jordan-minimality", jordan_minimality),
            ("generators-dominated", generators_dominated),
            ("weak-compactness", weak_compactness),
        ],
    ),
    (
        "pushforward-suite",
        &[
            ("mass-and-degree", mass_and_degree),
            ("composition", composition),
            ("pullback-composition", pullback_composition),
            ("cluster-points", cluster_points),
            ("classical-agreement", classical_agreement),
            ("sup-commutation", sup_commutation),
            ("superadditivity", superadditivity),
            ("single-valued-any-family", single_valued_any_family),
            ("graph-resolution", graph_resolution),
        ],
    ),
    (
        "blowup-example",
        &[("center-pullback", blowup_center_pullback), ("set-values", blowup_set_values)],
    ),
    (
        "cremona-strictness",
        &[
            ("vertex-image", cremona_vertex_image),
            ("square-vs-identity", cremona_square),
            ("smaller-generating-family", cremona_smaller_family),
            ("cluster-point", cremona_cluster_point),
        ],
    ),
    (
        "dynamics",
        &[
            ("variational-principle", variational_principle),
            ("entropy-of-full-sup", entropy_of_full_sup),
            ("entropy-bound", entropy_bound),
            ("entropy-monotone", entropy_monotone),
            ("cesaro-defect", cesaro_defect),
            ("inv-leq-extremal", inv_leq_extremal),
            ("inv-geq-extremal", inv_geq_extremal),
            ("non-representability", non_representability),
        ],
    ),
    (
        "transcendental",
        &[("infinity-formula", transcendental_formula), ("full-sup-invariant", transcendental_full_sup)],
    ),
    (
        "intersection",
        &[
            ("divisor-models", divisor_models),
            ("mass-invariance", mass_invariance),
            ("constant-shift", constant_shift),
            ("kappa-zero-positive", kappa_zero_positive),
            ("maximality", maximality),
            ("uniqueness-collapse", uniqueness_collapse),
            ("symmetry", symmetry),
        ],
    ),
    ("key-inequality", &[("lifted-submeasures", key_inequality)]),
];

pub struct CheckResult {
    pub suite: &'static str,
    pub check: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub struct VerifyOutcome {
    pub results: Vec<CheckResult>,
}

impl VerifyOutcome {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| !r.passed).count()
    }

    pub fn to_json(&self, seed: u64) -> Value {
        json!({
            "seed": seed,
            "checks": self.results.iter().map(|r| json!({
                "suite": r.suite,
                "check": r.check,
                "passed": r.passed,
                "detail": r.detail,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Runs every check whose `suite/check` tag contains `filter`, printing one
/// table row per check.
pub fn run(filter: Option<&str>, seed: u64) -> Result<VerifyOutcome, CliError> {
    let mut results = Vec::new();
    let mut position = 0u64;
    println!("seed {seed}");
    for (suite, checks) in SUITES {
        for (check, f) in checks.iter() {
            position += 1;
            let tag = format!("{suite}/{check}");
            if filter.is_some_and(|flt| !tag.contains(flt)) {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ position.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let (passed, detail) = match f(&mut rng) {
                Ok(d) => (true, d),
                Err(Fail(d)) => (false, d),
            };
            println!("{:<4}  {tag:<45}  {detail}", if passed { "PASS" } else { "FAIL" });
            results.push(CheckResult { suite, check, passed, detail });
        }
    }
    if results.is_empty() {
        let tags: Vec<&str> = SUITES.iter().map(|(s, _)| *s).collect();
        return Err(CliError::usage(format!(
            "filter '{}' matches no check; suites: {}",
            filter.unwrap_or_default(),
            tags.join(", ")
        )));
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    Ok(VerifyOutcome { results })
}

// ---------------------------------------------------------------- helpers

fn space(prefix: &str, n: usize) -> Arc<FiniteSpace> {
    FiniteSpace::indexed(prefix, n).expect("valid labels").into_shared()
}

fn random_fn(rng: &mut impl Rng, s: &Arc<FiniteSpace>) -> FunctionVector {
    FunctionVector::new(s.clone(), (0..s.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite")
}

fn integer_fn(rng: &mut impl Rng, s: &Arc<FiniteSpace>) -> FunctionVector {
    FunctionVector::new(s.clone(), (0..s.len()).map(|_| rng.gen_range(-5..=5) as f64).collect()).expect("finite")
}

fn signed_measure(rng: &mut impl Rng, s: &Arc<FiniteSpace>) -> SignedMeasure {
    SignedMeasure::new(s.clone(), (0..s.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite")
}

fn signed_submeasure(rng: &mut impl Rng, s: &Arc<FiniteSpace>) -> StrongSubmeasure {
    let k = rng.gen_range(1..=4);
    StrongSubmeasure::from_generators(s.clone(), (0..k).map(|_| signed_measure(rng, s)).collect()).expect("same space")
}

fn add(a: &FunctionVector, b: &FunctionVector) -> FunctionVector {
    FunctionVector::new(a.space().clone(), a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect())
        .expect("finite")
}

fn max_on(phi: &FunctionVector, points: &[usize]) -> f64 {
    points.iter().map(|&p| phi.values()[p]).fold(f64::NEG_INFINITY, f64::max)
}

fn dirac_sup(s: &Arc<FiniteSpace>, points: &[usize]) -> StrongSubmeasure {
    StrongSubmeasure::point_mass_sup(s.clone(), points, 1.0).expect("nonempty")
}

/// Random test functions: the indicator basis followed by `extra` draws.
fn panel(rng: &mut impl Rng, s: &Arc<FiniteSpace>, extra: usize) -> Vec<FunctionVector> {
    let mut p = indicator_basis(s);
    p.extend((0..extra).map(|_| random_fn(rng, s)));
    p
}

fn random_map(rng: &mut impl Rng, src: &Arc<FiniteSpace>, tgt: &Arc<FiniteSpace>) -> Correspondence {
    let mut map: Vec<usize> = (0..src.len()).map(|i| i % tgt.len()).collect();
    for i in tgt.len()..src.len() {
        map[i] = rng.gen_range(0..tgt.len());
    }
    Correspondence::from_map(src.clone(), tgt.clone(), &map).expect("surjective map")
}

/// Bundled self-correspondences exercised by the dynamics suites.
fn bundled_endos() -> Vec<(&'static str, EndoCorrespondence)> {
    let [closed, open] = build_compactification_pair(6).expect("valid size");
    vec![
        ("cremona(3)", build_cremona_model(3).expect("valid").map),
        ("transcendental(20)", build_transcendental_model(20).expect("valid").map),
        ("compactification-closed(6)", closed),
        ("compactification-open(6)", open),
        ("full-shift(3)", OrbitSft::full_shift(3).expect("valid").to_correspondence().expect("valid")),
        ("golden-mean", OrbitSft::golden_mean().to_correspondence().expect("valid")),
    ]
}

// --------------------------------------------------------- submeasure laws

fn sublinearity(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..50 {
        let s = space("x", rng.gen_range(2..=7));
        let mu = signed_submeasure(rng, &s);
        let (a, b) = (random_fn(rng, &s), random_fn(rng, &s));
        let lam = rng.gen_range(0.0..3.0);
        let (va, vb, vab) = (mu.eval(&a)?, mu.eval(&b)?, mu.eval(&add(&a, &b))?);
        ensure!(vab <= va + vb + TOL, "mu(a+b) = {vab} > mu(a) + mu(b) = {}", va + vb);
        let scaled = mu.eval(&a.scaled(lam))?;
        ensure!((scaled - lam * va).abs() <= TOL * (1.0 + va.abs()), "mu({lam}a) = {scaled} != {}", lam * va);
    }
    Ok("50 signed submeasures".into())
}

fn lipschitz(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..50 {
        let s = space("x", rng.gen_range(2..=7));
        let mu = signed_submeasure(rng, &s);
        let (a, b) = (random_fn(rng, &s), random_fn(rng, &s));
        let dist = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let gap = (mu.eval(&a)? - mu.eval(&b)?).abs();
        let norm = norm_and_mass(&mu).norm;
        ensure!(gap <= norm * dist + TOL, "|mu(a) - mu(b)| = {gap} > norm {norm} * {dist}");
    }
    Ok("50 signed submeasures".into())
}

fn monotone(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..50 {
        let s = space("x", rng.gen_range(2..=7));
        let mu = random_positive_submeasure(rng, &s, 4);
        let a = random_fn(rng, &s);
        let b = FunctionVector::new(s.clone(), a.values().iter().map(|v| v - rng.gen_range(0.0..1.0)).collect())?;
        let (va, vb) = (mu.eval(&a)?, mu.eval(&b)?);
        ensure!(va + TOL >= vb, "a >= b but mu(a) = {va} < mu(b) = {vb}");
    }
    Ok("50 positive submeasures".into())
}

fn usc_extension(rng: &mut ChaCha8Rng) -> Outcome {
    let mut finite = 0;
    for _ in 0..40 {
        let s = space("x", rng.gen_range(2..=5));
        let pos = random_positive_submeasure(rng, &s, 3);
        let phi = random_fn(rng, &s);
        let (e, v) = (extend_usc(&pos, &phi)?.as_f64(), pos.eval(&phi)?);
        ensure!((e - v).abs() <= TOL, "positive: E(mu)(phi) = {e} != mu(phi) = {v}");

        let mu = signed_submeasure(rng, &s);
        let zero = extend_usc(&mu, &FunctionVector::constant(s.clone(), 0.0))?;
        match zero {
            ExtendedValue::NegInfinity { .. } => continue,
            ExtendedValue::Finite(z) => ensure!(z.abs() <= TOL, "E(mu)(0) = {z}, expected 0"),
        }
        finite += 1;
        let minus_one = extend_usc(&mu, &FunctionVector::constant(s.clone(), -1.0))?.as_f64();
        let one = mu.eval(&FunctionVector::constant(s.clone(), 1.0))?;
        ensure!(minus_one + TOL >= -one, "E(mu)(-1) = {minus_one} < -mu(1) = {}", -one);
        let (a, b) = (random_fn(rng, &s), random_fn(rng, &s));
        let (ea, eb, eab) = (extend_usc(&mu, &a)?.as_f64(), extend_usc(&mu, &b)?.as_f64(), extend_usc(&mu, &add(&a, &b))?.as_f64());
        if ea.is_finite() && eb.is_finite() {
            ensure!(eab <= ea + eb + 1e-7, "E(mu)(a+b) = {eab} > {}", ea + eb);
        }
    }
    Ok(format!("40 positive, {finite} signed with finite extension"))
}

fn set_subadditivity(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..40 {
        let s = space("x", rng.gen_range(2..=6));
        let mu = random_positive_submeasure(rng, &s, 3);
        let pick = |rng: &mut ChaCha8Rng| -> Vec<usize> { (0..s.len()).filter(|_| rng.gen_bool(0.5)).collect() };
        let (a, b) = (pick(rng), pick(rng));
        let union: Vec<usize> = a.iter().chain(&b).copied().collect::<BTreeSet<_>>().into_iter().collect();
        for mode in [SetMode::Closed, SetMode::Open] {
            let (va, vb, vu) = (set_value(&mu, &a, mode)?, set_value(&mu, &b, mode)?, set_value(&mu, &union, mode)?);
            ensure!(vu <= va + vb + TOL, "{mode:?}: mu(A u B) = {vu} > mu(A) + mu(B) = {}", va + vb);
        }
    }
    Ok("40 positive submeasures, closed and open".into())
}

fn jordan_minimality(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..20 {
        let s = space("x", rng.gen_range(2..=8));
        let sigma = signed_measure(rng, &s);
        let j = jordan_decompose(&sigma);
        let (p, m) = (j.plus.as_signed().weights(), j.minus.as_signed().weights());
        for i in 0..s.len() {
            ensure!(p[i] - m[i] == sigma.weights()[i], "plus - minus differs from sigma at point {i}");
            ensure!(p[i] * m[i] == 0.0, "plus and minus overlap at point {i}");
        }
        for _ in 0..100 {
            let alt_minus: f64 = m.iter().map(|w| w + rng.gen_range(0.0..1.0)).sum();
            ensure!(j.neg_norm() <= alt_minus + TOL, "neg_norm {} exceeds an alternative {alt_minus}", j.neg_norm());
        }
    }
    Ok("20 measures, 100 alternatives each".into())
}

fn generators_dominated(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..30 {
        let s = space("x", rng.gen_range(2..=6));
        let mu = signed_submeasure(rng, &s);
        let one = mu.eval(&FunctionVector::constant(s.clone(), 1.0))?;
        for g in mu.generators()? {
            ensure!(is_dominated(&g, &mu)?, "generator {:?} not dominated", g.weights());
            ensure!(g.mass() <= one + TOL, "generator mass {} exceeds mu(1) = {one}", g.mass());
        }
    }
    Ok("30 signed submeasures".into())
}

fn weak_compactness(rng: &mut ChaCha8Rng) -> Outcome {
    let radius = 0.5;
    for _ in 0..20 {
        let s = space("x", 3);
        let seq: Vec<StrongSubmeasure> = (0..40)
            .map(|_| {
                let mu = random_positive_submeasure(rng, &s, 3);
                let mass = mu.eval(&FunctionVector::constant(s.clone(), 1.0)).expect("same space");
                mu.scaled(1.0 / mass).expect("positive scale")
            })
            .collect();
        let basis = indicator_basis(&s);
        let idx = cluster_subsequence(&seq, &basis, radius, 1.0 + TOL)?;
        ensure!(idx.len() >= 2, "no clustering subsequence among 40 terms");
        for &i in &idx {
            let gap = max_gap_on(&seq[i], &seq[idx[0]], &basis)?;
            ensure!(gap < radius, "terms {i} and {} differ by {gap}", idx[0]);
        }
    }
    Ok("20 sequences of 40 terms".into())
}

// ------------------------------------------------------- pushforward suite

fn mass_and_degree(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..100 {
        let d = rng.gen_range(1..=2u32);
        let (x, y) = (space("x", 8), space("y", 4));
        let f = random_correspondence(rng, x.clone(), y.clone(), d, 2)?;
        let mu = random_positive_submeasure(rng, &x, 3);
        let nu = random_positive_submeasure(rng, &y, 3);
        let push = pushforward_submeasure(&f, &mu)?;
        let pull = pullback_submeasure(&f, &nu)?;
        for c in [1.0, -1.0] {
            let (one_x, one_y) = (FunctionVector::constant(x.clone(), c), FunctionVector::constant(y.clone(), c));
            let (a, b) = (push.eval(&one_y)?, mu.eval(&one_x)?);
            ensure!((a - b).abs() <= TOL, "f_*mu({c}) = {a} != mu({c}) = {b}");
            let (a, b) = (pull.eval(&one_x)?, d as f64 * nu.eval(&one_y)?);
            ensure!((a - b).abs() <= TOL, "f^*nu({c}) = {a} != {d} nu({c}) = {b}");
        }
    }
    Ok("100 random correspondences".into())
}

fn composition(rng: &mut ChaCha8Rng) -> Outcome {
    for k in 0..200 {
        let (x, y, z) = (space("x", 8), space("y", 6), space("z", 4));
        let single = k % 4 == 0;
        let (f, g) = if single {
            (random_map(rng, &x, &y), random_map(rng, &y, &z))
        } else {
            (random_correspondence(rng, x.clone(), y.clone(), 1, 2)?, random_correspondence(rng, y.clone(), z.clone(), 1, 2)?)
        };
        let gf = compose(&f, &g)?;
        let mu = random_positive_submeasure(rng, &x, 3);
        let two_step = pushforward_submeasure(&g, &pushforward_submeasure(&f, &mu)?)?;
        let direct = pushforward_submeasure(&gf, &mu)?;
        for phi in panel(rng, &z, 3) {
            let (a, b) = (two_step.eval(&phi)?, direct.eval(&phi)?);
            ensure!(a + TOL >= b, "pair {k}: g_*f_*mu(phi) = {a} < (g o f)_*mu(phi) = {b}");
            if single {
                ensure!((a - b).abs() <= TOL, "pair {k}: single-valued maps give {a} != {b}");
            }
        }
    }
    Ok("200 pairs, 50 single-valued".into())
}

fn pullback_composition(rng: &mut ChaCha8Rng) -> Outcome {
    for k in 0..200 {
        let (x, y, z) = (space("x", 8), space("y", 6), space("z", 4));
        let f = random_correspondence(rng, x.clone(), y.clone(), 1, 2)?;
        let g = random_correspondence(rng, y.clone(), z.clone(), 1, 2)?;
        let gf = compose(&f, &g)?;
        let nu = random_positive_submeasure(rng, &z, 3);
        let two_step = pullback_submeasure(&f, &pullback_submeasure(&g, &nu)?)?;
        let direct = pullback_submeasure(&gf, &nu)?;
        for phi in panel(rng, &x, 3) {
            let (a, b) = (direct.eval(&phi)?, two_step.eval(&phi)?);
            ensure!(a <= b + TOL, "pair {k}: (g o f)^*nu(phi) = {a} > f^*g^*nu(phi) = {b}");
        }
    }
    Ok("200 pairs".into())
}

fn cluster_points(rng: &mut ChaCha8Rng) -> Outcome {
    for k in 0..20 {
        let (x, y) = (space("x", 6), space("y", 4));
        let f = random_map(rng, &x, &y);
        let mu = random_positive_submeasure(rng, &x, 3);
        let drift = random_positive_submeasure(rng, &x, 2);
        let basis = indicator_basis(&y);
        let limit = weak_limit(
            |n| {
                let term = combine(&mu, &drift.scaled(1.0 / n as f64)?, CombineMode::Sum)?;
                pushforward_submeasure(&f, &term)
            },
            &basis,
            1e-4,
            1 << 20,
            10.0,
        )?;
        let image = pushforward_submeasure(&f, &mu)?;
        for (i, phi) in basis.iter().enumerate() {
            let v = image.eval(phi)?;
            ensure!((limit.values[i] - v).abs() <= 1e-4, "sequence {k}: limit {} != f_*mu {v}", limit.values[i]);
        }
    }
    cremona_cluster_point(rng).map(|d| format!("20 single-valued sequences; {d}"))
}

fn classical_agreement(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..100 {
        let (x, y) = (space("x", 8), space("y", 4));
        let f = random_correspondence(rng, x.clone(), y.clone(), 1, 2)?;
        let mut w = vec![0.0; x.len()];
        for (i, wi) in w.iter_mut().enumerate() {
            if !f.is_indeterminate(i) {
                *wi = rng.gen_range(0.0..1.0);
            }
        }
        let chi = SignedMeasure::new(x.clone(), w.clone())?;
        let push = pushforward_submeasure(&f, &StrongSubmeasure::from_measure(chi))?;
        let phi = integer_fn(rng, &y);
        let classical: f64 = (0..x.len()).map(|i| w[i] * phi.values()[f.fiber(i)[0]]).sum();
        let v = push.eval(&phi)?;
        ensure!((v - classical).abs() <= 1e-12, "f_*chi(phi) = {v} != classical {classical}");
    }
    Ok("100 measures off the indeterminacy locus".into())
}

fn sup_commutation(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..100 {
        let (x, y) = (space("x", 8), space("y", 4));
        let f = random_correspondence(rng, x.clone(), y.clone(), 1, 2)?;
        let mu = random_positive_submeasure(rng, &x, 4);
        let gens = mu.generators()?;
        let image = pushforward_submeasure(&f, &mu)?;
        let images: Vec<StrongSubmeasure> = gens
            .iter()
            .map(|g| pushforward_submeasure(&f, &StrongSubmeasure::from_measure(g.clone())))
            .collect::<Result<_, _>>()?;
        for phi in panel(rng, &y, 5) {
            let lhs = image.eval(&phi)?;
            let rhs = images.iter().map(|m| m.eval(&phi)).collect::<Result<Vec<_>, _>>()?.into_iter().fold(f64::NEG_INFINITY, f64::max);
            ensure!((lhs - rhs).abs() <= TOL, "f_*mu(phi) = {lhs} != sup over dominated measures {rhs}");
            // Convex combinations of generators are dominated and stay below.
            let t = rng.gen_range(0.0..1.0);
            let mix = gens[0].scaled(t).add(&gens[gens.len() - 1].scaled(1.0 - t))?;
            let v = pushforward_submeasure(&f, &StrongSubmeasure::from_measure(mix))?.eval(&phi)?;
            ensure!(v <= lhs + TOL, "dominated measure pushes to {v} > {lhs}");
        }
    }
    Ok("100 positive submeasures".into())
}

fn superadditivity(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..100 {
        let (x, y) = (space("x", 8), space("y", 4));
        let f = random_correspondence(rng, x.clone(), y.clone(), 1, 2)?;
        let (m1, m2) = (random_positive_submeasure(rng, &x, 3), random_positive_submeasure(rng, &x, 3));
        let sum = pushforward_submeasure(&f, &combine(&m1, &m2, CombineMode::Sum)?)?;
        let (p1, p2) = (pushforward_submeasure(&f, &m1)?, pushforward_submeasure(&f, &m2)?);
        for phi in panel(rng, &y, 3) {
            let (a, b) = (sum.eval(&phi)?, p1.eval(&phi)? + p2.eval(&phi)?);
            ensure!(a + TOL >= b, "f_*(mu1 + mu2)(phi) = {a} < f_*mu1(phi) + f_*mu2(phi) = {b}");
        }
    }
    Ok("100 random pairs".into())
}

fn single_valued_any_family(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..50 {
        let (x, y) = (space("x", 6), space("y", 4));
        let f = random_map(rng, &x, &y);
        let mut gens: Vec<SignedMeasure> = (0..3).map(|_| random_positive_measure(rng, &x, 0.6)).collect();
        // Redundant members do not change the supremum.
        let t = rng.gen_range(0.0..1.0);
        gens.push(gens[0].scaled(t).add(&gens[1].scaled(1.0 - t))?);
        let mu = StrongSubmeasure::from_generators(x.clone(), gens.clone())?;
        let image = pushforward_submeasure(&f, &mu)?;
        for phi in panel(rng, &y, 3) {
            let lhs = image.eval(&phi)?;
            let mut rhs = f64::NEG_INFINITY;
            for g in &gens {
                rhs = rhs.max(pushforward_submeasure(&f, &StrongSubmeasure::from_measure(g.clone()))?.eval(&phi)?);
            }
            ensure!((lhs - rhs).abs() <= TOL, "f_*(sup G)(phi) = {lhs} != sup f_*(G)(phi) = {rhs}");
        }
    }
    Ok("50 maps with redundant families".into())
}

fn graph_resolution(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..50 {
        let (x, y) = (space("x", 8), space("y", 4));
        let f = random_correspondence(rng, x.clone(), y.clone(), 1, 2)?;
        let r = resolve_graph(&f)?;
        let mu = random_positive_submeasure(rng, &x, 3);
        let direct = pushforward_submeasure(&f, &mu)?;
        let through = pushforward_submeasure(&r.to_target, &pullback_submeasure(&r.to_source, &mu)?)?;
        for phi in panel(rng, &y, 3) {
            let (a, b) = (direct.eval(&phi)?, through.eval(&phi)?);
            ensure!((a - b).abs() <= TOL, "f_*mu(phi) = {a} but through the graph {b}");
        }
    }
    Ok("50 correspondences".into())
}

// --------------------------------------------------------- blowup example

fn blowup_center_pullback(rng: &mut ChaCha8Rng) -> Outcome {
    let m = build_blowup_model(5, 4)?;
    let delta = StrongSubmeasure::from_measure(SignedMeasure::dirac(m.base.clone(), m.center, 1.0));
    let pulled = pullback_submeasure(&m.projection, &delta)?;
    let mut fs = indicator_basis(&m.blown_up);
    fs.extend((0..100).map(|_| integer_fn(rng, &m.blown_up)));
    for phi in &fs {
        let (v, want) = (pulled.eval(phi)?, max_on(phi, &m.exceptional));
        ensure!(v == want, "pullback of the center Dirac gives {v}, expected max over the fiber {want}");
    }
    Ok(format!("{} integer test functions", fs.len()))
}

fn blowup_set_values(_: &mut ChaCha8Rng) -> Outcome {
    let m = build_blowup_model(5, 4)?;
    let delta = StrongSubmeasure::from_measure(SignedMeasure::dirac(m.base.clone(), m.center, 1.0));
    let pulled = pullback_submeasure(&m.projection, &delta)?;
    let n = m.blown_up.len();
    for mask in 0u32..(1 << n) {
        let subset: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let want = if subset.iter().any(|p| m.exceptional.contains(p)) { 1.0 } else { 0.0 };
        for mode in [SetMode::Closed, SetMode::Open] {
            let v = set_value(&pulled, &subset, mode)?;
            ensure!(v == want, "{mode:?} value of {subset:?} is {v}, expected {want}");
        }
    }
    Ok(format!("all {} subsets", 1u32 << n))
}

// ----------------------------------------------------- Cremona strictness

fn cremona_vertex_image(rng: &mut ChaCha8Rng) -> Outcome {
    let c = build_cremona_model(3)?;
    let e0 = dirac_sup(&c.space, &[c.vertices[0]]);
    let image = pushforward_submeasure(&c.map, &e0)?;
    for phi in panel(rng, &c.space, 50) {
        let (v, want) = (image.eval(&phi)?, max_on(&phi, &c.lines[0]));
        ensure!((v - want).abs() <= TOL, "J_*(delta_e0)(phi) = {v}, expected max over the opposite line {want}");
    }
    Ok("indicator basis and 50 random functions".into())
}

fn cremona_square(_: &mut ChaCha8Rng) -> Outcome {
    let c = build_cremona_model(3)?;
    let e0 = dirac_sup(&c.space, &[c.vertices[0]]);
    let twice = pushforward_submeasure(&c.map, &pushforward_submeasure(&c.map, &e0)?)?;
    let square = pushforward_submeasure(&c.birational_square(), &e0)?;
    for phi in probe_panel(&c.space) {
        let (a, b) = (twice.eval(&phi)?, square.eval(&phi)?);
        ensure!(a + TOL >= b, "J_*J_*(delta_e0)(phi) = {a} < (J o J)_*(delta_e0)(phi) = {b}");
    }
    let phi = FunctionVector::indicator(c.space.clone(), &[c.vertices[1]]);
    let (a, b) = (twice.eval(&phi)?, square.eval(&phi)?);
    ensure!(a > b + TOL, "no strictness at 1[e1]: {a} vs {b}");
    Ok(format!("strict at 1[e1]: {a} > {b}"))
}

fn cremona_smaller_family(_: &mut ChaCha8Rng) -> Outcome {
    let c = build_cremona_model(3)?;
    // The approach points accumulate at e0, so delta_e0 lies in the closure
    // of the smaller family and mu = sup of the closure.
    let mut closure = c.approach.clone();
    closure.push(c.approach_limit);
    let mu = dirac_sup(&c.space, &closure);
    let image = pushforward_submeasure(&c.map, &mu)?;
    // Pushing the smaller family forward and closing up afterwards only
    // reaches the limit of the images.
    let mut pushed_closure: Vec<StrongSubmeasure> = c
        .approach
        .iter()
        .map(|&p| pushforward_submeasure(&c.map, &dirac_sup(&c.space, &[p])))
        .collect::<Result<_, _>>()?;
    pushed_closure.push(dirac_sup(&c.space, &[c.image_limit]));
    let phi = FunctionVector::indicator(c.space.clone(), &[c.vertices[1]]);
    let lhs = image.eval(&phi)?;
    let rhs = pushed_closure.iter().map(|m| m.eval(&phi)).collect::<Result<Vec<_>, _>>()?.into_iter().fold(0.0, f64::max);
    ensure!(lhs > rhs + TOL, "sup-commutation unexpectedly holds for the smaller family: {lhs} vs {rhs}");
    Ok(format!("identity fails at 1[e1]: {lhs} vs {rhs}"))
}

fn cremona_cluster_point(_: &mut ChaCha8Rng) -> Outcome {
    let c = build_cremona_model(3)?;
    for (&p, &q) in c.approach.iter().zip(&c.approach_images) {
        let image = pushforward_submeasure(&c.map, &dirac_sup(&c.space, &[p]))?;
        let want = dirac_sup(&c.space, &[q]);
        ensure!(max_gap_on(&image, &want, &probe_panel(&c.space))? <= TOL, "approach point does not map to its image");
    }
    let cluster = dirac_sup(&c.space, &[c.image_limit]);
    let at_limit = pushforward_submeasure(&c.map, &dirac_sup(&c.space, &[c.approach_limit]))?;
    ensure!(leq(&cluster, &at_limit)?, "cluster point of the images exceeds the image of the limit");
    let phi = FunctionVector::indicator(c.space.clone(), &[c.vertices[1]]);
    let (a, b) = (cluster.eval(&phi)?, at_limit.eval(&phi)?);
    ensure!(b > a + TOL, "no strict gap at 1[e1]: {a} vs {b}");
    Ok(format!("Cremona cluster point strictly below at 1[e1]: {a} < {b}"))
}

// ---------------------------------------------------------------- dynamics

fn random_chain(rng: &mut impl Rng, sft: &OrbitSft) -> Vec<Vec<f64>> {
    (0..sft.len())
        .map(|i| {
            let mut row = vec![0.0; sft.len()];
            for j in sft.successors(i) {
                row[j] = rng.gen_range(0.05..1.0);
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            row
        })
        .collect()
}

fn variational_principle(rng: &mut ChaCha8Rng) -> Outcome {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let cases = [
        (OrbitSft::full_shift(2)?, 2f64.ln()),
        (OrbitSft::full_shift(3)?, 3f64.ln()),
        (OrbitSft::full_shift(5)?, 5f64.ln()),
        (OrbitSft::golden_mean(), golden.ln()),
        (OrbitSft::from_correspondence(&build_compactification_pair(6)?[0]), 0.0),
    ];
    for (sft, want) in cases {
        let h = topological_entropy(&sft);
        ensure!((h - want).abs() <= 1e-6, "topological entropy {h} != {want}");
        let parry = markov_entropy(&MarkovMeasure::parry(&sft)?);
        ensure!((parry - h).abs() <= 1e-6, "Parry entropy {parry} != topological entropy {h}");
        for _ in 0..20 {
            let m = MarkovMeasure::from_transitions(sft.clone(), random_chain(rng, &sft))?;
            let hm = markov_entropy(&m);
            ensure!(hm <= h + 1e-9, "a Markov measure has entropy {hm} > {h}");
        }
    }
    Ok("full shifts on 2, 3, 5 symbols, golden mean, a cycle".into())
}

fn entropy_of_full_sup(_: &mut ChaCha8Rng) -> Outcome {
    for sft in [OrbitSft::full_shift(2)?, OrbitSft::full_shift(3)?, OrbitSft::full_shift(5)?, OrbitSft::golden_mean()] {
        let est = submeasure_entropy(&sft, &StrongSubmeasure::full_sup(sft.space().clone()))?;
        let h = topological_entropy(&sft);
        ensure!(est.exact && (est.value - h).abs() <= 1e-6, "entropy of the full sup {} != {h}", est.value);
    }
    Ok("four subshifts".into())
}

fn entropy_bound(rng: &mut ChaCha8Rng) -> Outcome {
    let mut models = vec![build_cremona_model(3)?.map];
    for _ in 0..3 {
        models.push(random_endo(rng, space("x", 9), 2)?);
    }
    let mut count = 0;
    for f in &models {
        let sft = OrbitSft::from_correspondence(f);
        let h = topological_entropy(&sft);
        let sampler = InvariantSampler::new(f);
        for _ in 0..15 {
            let mu = sampler.sample(rng, 1.0);
            let est = submeasure_entropy(&sft, &mu)?;
            ensure!(est.value <= h + 1e-9, "entropy {} of an invariant submeasure exceeds {h}", est.value);
            count += 1;
        }
    }
    Ok(format!("{count} invariant submeasures on 4 models"))
}

fn entropy_monotone(rng: &mut ChaCha8Rng) -> Outcome {
    let mut models = vec![build_cremona_model(3)?.map];
    for _ in 0..3 {
        models.push(random_endo(rng, space("x", 9), 2)?);
    }
    for f in &models {
        let sft = OrbitSft::from_correspondence(f);
        let n = f.space().len();
        for _ in 0..10 {
            let small = invariant_core(f, &[rng.gen_range(0..n)]);
            let mut big = small.clone();
            big.extend(invariant_core(f, &[rng.gen_range(0..n)]));
            let (s, b): (Vec<usize>, Vec<usize>) = (small.into_iter().collect(), big.into_iter().collect());
            let lo = submeasure_entropy(&sft, &dirac_sup(f.space(), &s))?;
            let hi = submeasure_entropy(&sft, &dirac_sup(f.space(), &b))?;
            ensure!(lo.value <= hi.value + 1e-9, "entropy decreased from {} to {} on a larger invariant set", lo.value, hi.value);
        }
    }
    Ok("40 nested invariant pairs".into())
}

fn cesaro_defect(rng: &mut ChaCha8Rng) -> Outcome {
    let models = [
        build_cremona_model(2)?.map,
        build_transcendental_model(8)?.map,
        random_endo(rng, space("x", 8), 2)?,
    ];
    for f in &models {
        for _ in 0..3 {
            let mu0 = random_positive_submeasure(rng, f.space(), 2);
            let norm = norm_and_mass(&mu0).norm;
            for n in [4, 16] {
                let defect = invariance_defect(f, &cesaro_average(f, &mu0, n)?)?;
                let bound = 2.0 * norm / n as f64;
                ensure!(defect <= bound + TOL, "n = {n}: defect {defect} exceeds 2|mu0|/n = {bound}");
            }
        }
    }
    Ok("9 seeds, n = 4 and 16".into())
}

fn forward_closure(f: &EndoCorrespondence, seed: &[usize]) -> Vec<usize> {
    let mut seen: BTreeSet<usize> = seed.iter().copied().collect();
    let mut stack = seed.to_vec();
    while let Some(x) = stack.pop() {
        for &y in f.fiber(x) {
            if seen.insert(y) {
                stack.push(y);
            }
        }
    }
    seen.into_iter().collect()
}

fn inv_leq_extremal(rng: &mut ChaCha8Rng) -> Outcome {
    let mut compared = 0;
    for (name, f) in bundled_endos() {
        let n = f.space().len();
        let seed = dirac_sup(f.space(), &forward_closure(&f, &[rng.gen_range(0..n)]));
        let out = inv_leq(&f, &seed, FIXED_POINT_TOL, default_max_iter(&f))?;
        ensure!(out.iterations <= default_max_iter(&f), "{name}: {} iterations", out.iterations);
        ensure!(invariance_defect(&f, &out.submeasure)? <= TOL, "{name}: output is not invariant");
        ensure!(leq(&out.submeasure, &seed)?, "{name}: output exceeds the seed");
        let sampler = InvariantSampler::new(&f);
        for nu in sampler.sample_below(rng, &seed, 100, 2000)? {
            ensure!(leq(&nu, &out.submeasure)?, "{name}: an invariant nu <= seed is not below the output");
            compared += 1;
        }
    }
    Ok(format!("6 models, {compared} sampled invariants below the seeds"))
}

fn inv_geq_extremal(rng: &mut ChaCha8Rng) -> Outcome {
    let mut compared = 0;
    for (name, f) in bundled_endos() {
        let n = f.space().len();
        let mut accepted = None;
        for x in 0..n {
            let dx = dirac_sup(f.space(), &[x]);
            let seed = combine(&dx, &pushforward_submeasure(&f, &dx)?, CombineMode::Max)?;
            match inv_geq(&f, &seed, FIXED_POINT_TOL, default_max_iter(&f)) {
                Ok(out) => {
                    accepted = Some((seed, out));
                    break;
                }
                Err(submeasure::Error::Precondition { .. }) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        let (seed, out) = match accepted {
            Some(a) => a,
            None => {
                let full = StrongSubmeasure::full_sup(f.space().clone());
                let out = inv_geq(&f, &full, FIXED_POINT_TOL, default_max_iter(&f))?;
                (full, out)
            }
        };
        ensure!(invariance_defect(&f, &out.submeasure)? <= TOL, "{name}: output is not invariant");
        ensure!(leq(&seed, &out.submeasure)?, "{name}: output is not above the seed");
        let sampler = InvariantSampler::new(&f);
        for mu in sampler.sample_above(rng, &seed, 100, 400)? {
            ensure!(leq(&out.submeasure, &mu)?, "{name}: an invariant mu >= seed is not above the output");
            compared += 1;
        }
    }
    Ok(format!("6 models, {compared} sampled invariants above the seeds"))
}

fn non_representability(rng: &mut ChaCha8Rng) -> Outcome {
    let s = space("x", 7);
    let perm = Correspondence::from_map(s.clone(), s.clone(), &[1, 2, 0, 4, 3, 6, 5])?;
    let models = [build_compactification_pair(6)?[0].clone(), EndoCorrespondence::new(perm)?];
    for f in &models {
        let full = StrongSubmeasure::full_sup(f.space().clone());
        ensure!(invariance_defect(f, &full)? <= TOL, "the full sup is not invariant");
        let sampler = InvariantSampler::new(f);
        let measures: Vec<StrongSubmeasure> = sampler
            .sample_below(rng, &full, 200, 4000)?
            .into_iter()
            .filter(|m| m.generator_count() == 1.0)
            .collect();
        ensure!(!measures.is_empty(), "the sampler produced no invariant measures");
        let shortfall = indicator_basis(f.space()).iter().any(|phi| {
            let best = measures.iter().map(|m| m.eval(phi).unwrap()).fold(0.0, f64::max);
            best < full.eval(phi).unwrap() - TOL
        });
        ensure!(shortfall, "the full sup is the sup of its sampled invariant measures");
    }
    Ok("cycle and permutation models".into())
}

// ----------------------------------------------------------- transcendental

fn transcendental_formula(rng: &mut ChaCha8Rng) -> Outcome {
    let m = build_transcendental_model(20)?;
    let basis = indicator_basis(&m.space);
    for _ in 0..10 {
        let mu0 = random_positive_submeasure(rng, &m.space, 3);
        let base = pushforward_submeasure(&m.map, &mu0)?;
        for a in [0.0, 0.5, 1.0] {
            let bump = StrongSubmeasure::from_measure(SignedMeasure::dirac(m.space.clone(), m.infinity, a));
            let lhs = pushforward_submeasure(&m.map, &combine(&mu0, &bump, CombineMode::Sum)?)?;
            for phi in &basis {
                let want = base.eval(phi)? + a * m.full_sup().eval(phi)?;
                let v = lhs.eval(phi)?;
                ensure!((v - want).abs() <= 1e-12, "a = {a}: f_*(mu0 + a delta_inf) = {v} != {want}");
            }
        }
    }
    Ok("10 seeds, a in {0, 1/2, 1}".into())
}

fn transcendental_full_sup(_: &mut ChaCha8Rng) -> Outcome {
    let m = build_transcendental_model(20)?;
    let defect = invariance_defect(&m.map, &m.full_sup())?;
    ensure!(defect == 0.0, "f_*(mu_X) differs from mu_X by {defect}");
    Ok("exact on the probe panel".into())
}

// ------------------------------------------------------------ intersection

fn random_family(rng: &mut impl Rng, s: &Arc<FiniteSpace>, c: f64, positive_member: bool) -> SignedFamily {
    let n = s.len();
    let mut members: Vec<SignedMeasure> = (0..rng.gen_range(2..=5))
        .map(|_| {
            let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let shift = (c - w.iter().sum::<f64>()) / n as f64;
            w.iter_mut().for_each(|v| *v += shift);
            SignedMeasure::new(s.clone(), w).expect("finite")
        })
        .collect();
    if positive_member {
        members.push(SignedMeasure::dirac(s.clone(), rng.gen_range(0..n), c));
    }
    SignedFamily::new(s.clone(), members, Vec::new(), c).expect("masses match")
}

fn divisor_models(rng: &mut ChaCha8Rng) -> Outcome {
    for n in [1, 4, 20, 50] {
        let line = build_divisor_model(DivisorKind::LineP2, n)?;
        ensure!(kappa(&line) == 0.0, "line_P2({n}): kappa = {}", kappa(&line));
        let lam = least_negative(&line, KAPPA_TOL)?;
        let d = line.space().subset("D").expect("curve subset").to_vec();
        for phi in panel(rng, line.space(), 50) {
            let (v, want) = (lam.eval(&phi)?, max_on(&phi, &d));
            ensure!((v - want).abs() <= TOL, "line_P2({n}): Lambda(phi) = {v}, expected sup over D {want}");
        }
        let exc = build_divisor_model(DivisorKind::ExceptionalE, n)?;
        let lam = least_negative(&exc, KAPPA_TOL)?;
        let e = exc.space().subset("E").expect("curve subset").to_vec();
        for phi in panel(rng, exc.space(), 50) {
            let (v, want) = (lam.eval(&phi)?, max_on(&phi.scaled(-1.0), &e));
            ensure!((v - want).abs() <= TOL, "exceptional_E({n}): Lambda(phi) = {v}, expected sup over E of -phi {want}");
        }
        let mass = lam.eval(&FunctionVector::constant(exc.space().clone(), 1.0))?;
        ensure!((mass + 1.0).abs() <= TOL, "exceptional_E({n}): mass {mass}");
    }
    Ok("n = 1, 4, 20, 50".into())
}

fn mass_invariance(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..50 {
        let s = space("x", rng.gen_range(2..=6));
        let c = rng.gen_range(-2.0..2.0);
        let fam = random_family(rng, &s, c, false);
        for g in least_negative(&fam, KAPPA_TOL)?.generators()? {
            ensure!((g.mass() - c).abs() <= TOL, "generator mass {} != intersection number {c}", g.mass());
        }
    }
    Ok("50 families".into())
}

fn constant_shift(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..50 {
        let s = space("x", rng.gen_range(2..=6));
        let c = rng.gen_range(-2.0..2.0);
        let lam = least_negative(&random_family(rng, &s, c, false), KAPPA_TOL)?;
        let phi = random_fn(rng, &s);
        let b = rng.gen_range(-3.0..3.0);
        let shifted = FunctionVector::new(s.clone(), phi.values().iter().map(|v| v + b).collect())?;
        let (v, want) = (lam.eval(&shifted)?, lam.eval(&phi)? + b * c);
        ensure!((v - want).abs() <= TOL, "Lambda(phi + {b}) = {v} != Lambda(phi) + B c = {want}");
    }
    Ok("50 families".into())
}

fn kappa_zero_positive(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..50 {
        let s = space("x", rng.gen_range(2..=6));
        let c = rng.gen_range(0.1..2.0);
        let fam = random_family(rng, &s, c, true);
        ensure!(kappa(&fam) == 0.0, "a positive member is present but kappa = {}", kappa(&fam));
        let lam = least_negative(&fam, KAPPA_TOL)?;
        ensure!(lam.is_positive(), "kappa = 0 but Lambda is not positive");
    }
    Ok("50 families with a positive member".into())
}

fn maximality(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..50 {
        let s = space("x", rng.gen_range(2..=6));
        let c = rng.gen_range(-2.0..2.0);
        let fam = random_family(rng, &s, c, false);
        let lam = least_negative(&fam, KAPPA_TOL)?;
        for m in kappa_minimizers(&fam, KAPPA_TOL) {
            ensure!(is_dominated(&m, &lam)?, "a kappa-minimal member {:?} is not below Lambda", m.weights());
        }
    }
    Ok("50 families".into())
}

fn uniqueness_collapse(rng: &mut ChaCha8Rng) -> Outcome {
    let mut tested = 0;
    for _ in 0..50 {
        let s = space("x", rng.gen_range(2..=6));
        let c = rng.gen_range(0.1..2.0);
        let fam = random_family(rng, &s, c, true);
        let positive: Vec<SignedMeasure> = fam.members().iter().filter(|m| m.is_positive()).cloned().collect();
        if positive.len() != 1 {
            continue;
        }
        let lam = least_negative(&fam, KAPPA_TOL)?;
        let single = StrongSubmeasure::from_measure(positive[0].clone());
        let gap = max_gap_on(&lam, &single, &probe_panel(&s))?;
        ensure!(gap <= TOL, "Lambda differs from the unique positive member by {gap}");
        tested += 1;
    }
    ensure!(tested > 0, "no family had exactly one positive member");
    Ok(format!("{tested} families with one positive member"))
}

fn symmetry(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..30 {
        let s = space("x", rng.gen_range(2..=5));
        let (a, b) = (random_family(rng, &s, 1.0, false), random_family(rng, &s, 0.5, false));
        let (ab, ba) = (family_sum(&a, &b)?, family_sum(&b, &a)?);
        let (l1, l2) = (least_negative(&ab, KAPPA_TOL)?, least_negative(&ba, KAPPA_TOL)?);
        let gap = max_gap_on(&l1, &l2, &probe_panel(&s))?;
        ensure!(gap <= TOL, "the summed family depends on argument order (gap {gap})");
    }
    Ok("30 pairs of families".into())
}

// --------------------------------------------------------- key inequality

/// Random submeasures on the length-two paths of the Cremona orbit graph:
/// cylinder marginals of lifted invariant measures, optionally combined with
/// random positive measures on paths.
pub(crate) fn lifted_submeasures(rng: &mut impl Rng, count: usize) -> submeasure::Result<(submeasure::dynamics::sft::PathSpace, EndoCorrespondence, Vec<StrongSubmeasure>)> {
    let c = build_cremona_model(3)?;
    let sft = OrbitSft::from_correspondence(&c.map);
    let paths = sft.path_space(2)?;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let mut w = vec![0.0; c.space.len()];
        for (&p, &q) in c.approach.iter().zip(&c.approach_images) {
            let t: f64 = rng.gen_range(0.0..1.0);
            w[p] = t;
            w[q] = t;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        let lift = lift_invariant_measure(&c.map, &PositiveMeasure::new(SignedMeasure::new(c.space.clone(), w)?)?)?;
        let cyl: Vec<f64> = paths.words.iter().map(|word| lift.cylinder(word)).collect();
        let mut mu = StrongSubmeasure::from_measure(SignedMeasure::new(paths.space.clone(), cyl)?);
        if k % 2 == 1 {
            mu = combine(&mu, &random_positive_submeasure(rng, &paths.space, 2), CombineMode::Max)?;
        }
        out.push(mu);
    }
    Ok((paths, c.map, out))
}

fn key_inequality(rng: &mut ChaCha8Rng) -> Outcome {
    let (paths, f, samples) = lifted_submeasures(rng, 100)?;
    let mut strict = 0;
    for (k, mu) in samples.iter().enumerate() {
        let report = key_inequality_check(&f, &paths, mu)?;
        ensure!(report.holds, "sample {k}: f_*(first marginal) < second marginal");
        if !report.strict.is_empty() {
            strict += 1;
        }
    }
    ensure!(strict > 0, "no strict witness among 100 samples");
    Ok(format!("100 samples, {strict} strict"))
}
