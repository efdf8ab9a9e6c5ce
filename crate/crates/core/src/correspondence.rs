//! Correspondences between finite spaces and the transport of functions and
//! submeasures along them.
//!
//! A correspondence is a relation `Γ ⊂ X × Y` with integer multiplicities.
//! Source points with more than one target form the indeterminacy locus.
//! Target points whose incoming multiplicity does not match the generic degree
//! (or that lie in the image of the indeterminacy locus) are exceptional; at
//! those points the model declares its *limit fibers*, the weighted preimages
//! obtained as limits from nearby generic points.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Deref;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::FunctionVector;
use crate::polytope::Node;
use crate::space::{ensure_same, same_space, FiniteSpace};
use crate::submeasure::{extend_usc_raw, ExtendedValue, StrongSubmeasure};

/// Weighted preimage points `(source, weight)`.
pub type LimitFiber = Vec<(usize, f64)>;

const LIMIT_EXPANSION_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub multiplicity: u32,
}

/// Raw description of a correspondence, validated by [`Correspondence::new`].
#[derive(Debug, Clone)]
pub struct CorrespondenceData {
    pub source: Arc<FiniteSpace>,
    pub target: Arc<FiniteSpace>,
    pub edges: Vec<Edge>,
    /// When present, must equal the computed indeterminacy locus.
    pub indeterminacy: Option<Vec<usize>>,
    pub generic_degree: u32,
    pub limit_fibers: BTreeMap<usize, Vec<LimitFiber>>,
    /// Source and target have equal dimension, so functions push forward by
    /// summing over fibers and submeasures pull back.
    pub equal_dimension: bool,
}

impl CorrespondenceData {
    pub fn new(source: Arc<FiniteSpace>, target: Arc<FiniteSpace>) -> Self {
        CorrespondenceData {
            source,
            target,
            edges: Vec::new(),
            indeterminacy: None,
            generic_degree: 1,
            limit_fibers: BTreeMap::new(),
            equal_dimension: true,
        }
    }

    pub fn edge(mut self, source: usize, target: usize, multiplicity: u32) -> Self {
        self.edges.push(Edge {
            source,
            target,
            multiplicity,
        });
        self
    }
}

/// A validated correspondence.
///
/// Invariants: every source point has an edge (total), every target point has
/// an incoming edge (dominant), multiplicities are positive, and in
/// equal-dimension mode every exceptional target carries limit fibers made of
/// graph edges with total weight equal to the generic degree.
#[derive(Debug, Clone)]
pub struct Correspondence {
    source: Arc<FiniteSpace>,
    target: Arc<FiniteSpace>,
    edges: Vec<Edge>,
    generic_degree: u32,
    limit_fibers: BTreeMap<usize, Vec<LimitFiber>>,
    equal_dimension: bool,
    fibers: Vec<Vec<usize>>,
    incoming: Vec<Vec<(usize, u32)>>,
    indeterminacy: Vec<usize>,
    exceptional: Vec<bool>,
}

impl Correspondence {
    pub fn new(data: CorrespondenceData) -> Result<Self> {
        let CorrespondenceData {
            source,
            target,
            edges,
            indeterminacy: declared,
            generic_degree,
            limit_fibers,
            equal_dimension,
        } = data;
        let (n, m) = (source.len(), target.len());
        if generic_degree == 0 {
            return Err(Error::invalid("generic_degree", "must be at least 1"));
        }
        let mut merged: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for (k, e) in edges.iter().enumerate() {
            if e.source >= n || e.target >= m {
                return Err(Error::invalid(format!("edges[{k}]"), "endpoint out of range"));
            }
            if e.multiplicity == 0 {
                return Err(Error::invalid(format!("edges[{k}][2]"), "multiplicity must be positive"));
            }
            *merged.entry((e.source, e.target)).or_insert(0) += e.multiplicity;
        }
        let edges: Vec<Edge> = merged
            .into_iter()
            .map(|((s, t), mult)| Edge {
                source: s,
                target: t,
                multiplicity: mult,
            })
            .collect();
        let mut fibers = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); m];
        for e in &edges {
            fibers[e.source].push(e.target);
            incoming[e.target].push((e.source, e.multiplicity));
        }
        if let Some(x) = fibers.iter().position(Vec::is_empty) {
            return Err(Error::invalid(
                "edges",
                format!("source point '{}' has no image", source.label(x)),
            ));
        }
        if let Some(y) = incoming.iter().position(Vec::is_empty).filter(|_| equal_dimension) {
            return Err(Error::invalid(
                "edges",
                format!("target point '{}' has no preimage (not dominant)", target.label(y)),
            ));
        }
        let indeterminacy: Vec<usize> = (0..n).filter(|&x| fibers[x].len() > 1).collect();
        if let Some(mut d) = declared {
            d.sort_unstable();
            d.dedup();
            if d != indeterminacy {
                let names = |v: &[usize]| v.iter().map(|&i| source.label(i).to_string()).collect::<Vec<_>>();
                return Err(Error::invalid(
                    "indeterminacy",
                    format!(
                        "declared {:?} but the points with several targets are {:?}",
                        names(&d),
                        names(&indeterminacy)
                    ),
                ));
            }
        }
        let mut exceptional = vec![false; m];
        for &x in &indeterminacy {
            for &y in &fibers[x] {
                exceptional[y] = true;
            }
        }
        for y in 0..m {
            let total: u32 = incoming[y].iter().map(|&(_, mult)| mult).sum();
            if total != generic_degree || limit_fibers.contains_key(&y) {
                exceptional[y] = true;
            }
        }
        for (&y, fibs) in &limit_fibers {
            let path = format!("limit_fibers.{}", if y < m { target.label(y) } else { "?" });
            if y >= m {
                return Err(Error::invalid(path, "target point out of range"));
            }
            if fibs.is_empty() {
                return Err(Error::invalid(path, "at least one limit fiber is required"));
            }
            for (i, fib) in fibs.iter().enumerate() {
                if fib.is_empty() {
                    return Err(Error::invalid(format!("{path}[{i}]"), "empty limit fiber"));
                }
                let mut total = 0.0;
                for (j, &(x, w)) in fib.iter().enumerate() {
                    if x >= n || !fibers[x].contains(&y) {
                        return Err(Error::invalid(
                            format!("{path}[{i}][{j}]"),
                            "limit fiber point is not joined to the target by an edge",
                        ));
                    }
                    if !(w > 0.0) || !w.is_finite() {
                        return Err(Error::invalid(format!("{path}[{i}][{j}]"), "weight must be positive"));
                    }
                    total += w;
                }
                if equal_dimension && (total - generic_degree as f64).abs() > 1e-9 {
                    return Err(Error::invalid(
                        format!("{path}[{i}]"),
                        format!("limit fiber weight {total} differs from generic degree {generic_degree}"),
                    ));
                }
            }
        }
        if equal_dimension {
            if let Some(y) = (0..m).find(|&y| exceptional[y] && !limit_fibers.contains_key(&y)) {
                return Err(Error::MissingLimitFiber {
                    label: target.label(y).to_string(),
                });
            }
        }
        Ok(Correspondence {
            source,
            target,
            edges,
            generic_degree,
            limit_fibers,
            equal_dimension,
            fibers,
            incoming,
            indeterminacy,
            exceptional,
        })
    }

    /// Graph of a map `x ↦ map[x]`. Contracted targets receive the envelope
    /// limit fibers (see [`complete_limit_fibers`](Self::complete_limit_fibers)).
    /// A map that misses part of the target is not dominant, so it is marked
    /// not equal-dimensional and supports pushforward only.
    pub fn from_map(source: Arc<FiniteSpace>, target: Arc<FiniteSpace>, map: &[usize]) -> Result<Self> {
        let mut hit = vec![false; target.len()];
        for &y in map {
            if let Some(h) = hit.get_mut(y) {
                *h = true;
            }
        }
        let mut data = CorrespondenceData::new(source, target);
        data.equal_dimension = hit.iter().all(|&h| h);
        for (x, &y) in map.iter().enumerate() {
            data = data.edge(x, y, 1);
        }
        Self::complete_limit_fibers(data)
    }

    pub fn identity(space: Arc<FiniteSpace>) -> Self {
        let map: Vec<usize> = (0..space.len()).collect();
        Self::from_map(space.clone(), space, &map).expect("identity is a valid correspondence")
    }

    /// Validates `data` after filling in missing limit fibers at exceptional
    /// targets with the envelope rule: every incoming source, collapsed with
    /// the full generic degree. The envelope is the largest usc choice, so
    /// function pushforwards become `max` over incoming points.
    pub fn complete_limit_fibers(mut data: CorrespondenceData) -> Result<Self> {
        if data.equal_dimension {
            let probe = Correspondence::new(CorrespondenceData {
                equal_dimension: false,
                ..data.clone()
            })?;
            let d = data.generic_degree as f64;
            for y in 0..probe.target.len() {
                if probe.exceptional[y] && !data.limit_fibers.contains_key(&y) {
                    let fibs = probe.incoming[y].iter().map(|&(x, _)| vec![(x, d)]).collect();
                    data.limit_fibers.insert(y, fibs);
                }
            }
        }
        Correspondence::new(data)
    }

    pub fn source(&self) -> &Arc<FiniteSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FiniteSpace> {
        &self.target
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Distinct targets of `x`, sorted.
    pub fn fiber(&self, x: usize) -> &[usize] {
        &self.fibers[x]
    }

    /// Incoming `(source, multiplicity)` pairs of `y`.
    pub fn incoming(&self, y: usize) -> &[(usize, u32)] {
        &self.incoming[y]
    }

    pub fn indeterminacy(&self) -> &[usize] {
        &self.indeterminacy
    }

    pub fn is_indeterminate(&self, x: usize) -> bool {
        self.fibers[x].len() > 1
    }

    pub fn generic_degree(&self) -> u32 {
        self.generic_degree
    }

    pub fn limit_fibers(&self) -> &BTreeMap<usize, Vec<LimitFiber>> {
        &self.limit_fibers
    }

    pub fn is_exceptional(&self, y: usize) -> bool {
        self.exceptional[y]
    }

    pub fn equal_dimension(&self) -> bool {
        self.equal_dimension
    }

    pub fn is_single_valued(&self) -> bool {
        self.indeterminacy.is_empty()
    }

    /// Raw description, suitable for rebuilding or serializing.
    pub fn to_data(&self) -> CorrespondenceData {
        CorrespondenceData {
            source: self.source.clone(),
            target: self.target.clone(),
            edges: self.edges.clone(),
            indeterminacy: Some(self.indeterminacy.clone()),
            generic_degree: self.generic_degree,
            limit_fibers: self.limit_fibers.clone(),
            equal_dimension: self.equal_dimension,
        }
    }

    fn pull_raw(&self, psi: &[f64]) -> Vec<f64> {
        self.fibers
            .iter()
            .map(|fib| fib.iter().map(|&y| psi[y]).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    fn push_raw(&self, phi: &[f64]) -> Vec<f64> {
        (0..self.target.len())
            .map(|y| match self.limit_fibers.get(&y) {
                Some(fibs) => fibs
                    .iter()
                    .map(|fib| fib.iter().map(|&(x, w)| w * phi[x]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max),
                None => self.incoming[y]
                    .iter()
                    .map(|&(x, mult)| mult as f64 * phi[x])
                    .sum(),
            })
            .collect()
    }
}

/// `f*(ψ)(x) = max_{y in F(x)} ψ(y)`: the fiber maximum, upper semicontinuous
/// across the indeterminacy locus. Multiplicities are ignored.
pub fn pullback_function(f: &Correspondence, psi: &FunctionVector) -> Result<FunctionVector> {
    ensure_same(&f.target, psi.space(), "pullback_function")?;
    FunctionVector::new(f.source.clone(), f.pull_raw(psi.values()))
}

/// `f_*(φ)(y)`: the multiplicity-weighted fiber sum on covering targets and
/// the maximum over limit fibers on exceptional ones.
pub fn pushforward_function(f: &Correspondence, phi: &FunctionVector) -> Result<FunctionVector> {
    ensure_same(&f.source, phi.space(), "pushforward_function")?;
    if !f.equal_dimension {
        return Err(Error::precondition(
            "pushforward_function",
            "the correspondence is not declared equal-dimensional",
        ));
    }
    FunctionVector::new(f.target.clone(), f.push_raw(phi.values()))
}

/// `f_*(μ)(φ) = E(μ)(f*φ)` for positive μ, as an explicit generator family.
///
/// Each generator χ keeps its mass on single-valued points and spreads the
/// mass at an indeterminate point `x` over a choice of target in `F(x)`; the
/// choices at different points are independent, so the family is stored as a
/// Minkowski sum of per-point choices.
pub fn pushforward_submeasure(f: &Correspondence, mu: &StrongSubmeasure) -> Result<StrongSubmeasure> {
    ensure_same(&f.source, mu.space(), "pushforward_submeasure")?;
    if !mu.is_positive() {
        return Err(Error::NotPositive {
            op: "pushforward_submeasure (use pushforward_eval for signed families)",
        });
    }
    let node = map_node(mu.node(), &mut |chi| push_measure(f, chi));
    Ok(StrongSubmeasure::from_node(f.target.clone(), node))
}

/// `f^*(ν)(φ) = E(ν)(f_*φ)` for positive ν, as an explicit generator family;
/// its mass is `generic_degree · ν(1)`.
pub fn pullback_submeasure(f: &Correspondence, nu: &StrongSubmeasure) -> Result<StrongSubmeasure> {
    ensure_same(&f.target, nu.space(), "pullback_submeasure")?;
    if !nu.is_positive() {
        return Err(Error::NotPositive {
            op: "pullback_submeasure (use pullback_eval for signed families)",
        });
    }
    if !f.equal_dimension {
        return Err(Error::precondition(
            "pullback_submeasure",
            "the correspondence is not declared equal-dimensional",
        ));
    }
    let node = map_node(nu.node(), &mut |chi| pull_measure(f, chi));
    Ok(StrongSubmeasure::from_node(f.source.clone(), node))
}

/// `f_*(μ)(φ)` for any μ, through the envelope extension.
pub fn pushforward_eval(f: &Correspondence, mu: &StrongSubmeasure, phi: &FunctionVector) -> Result<ExtendedValue> {
    ensure_same(&f.source, mu.space(), "pushforward_eval")?;
    ensure_same(&f.target, phi.space(), "pushforward_eval")?;
    Ok(extend_usc_raw(mu, &f.pull_raw(phi.values())))
}

/// `f^*(ν)(φ)` for any ν, through the envelope extension.
pub fn pullback_eval(f: &Correspondence, nu: &StrongSubmeasure, phi: &FunctionVector) -> Result<ExtendedValue> {
    ensure_same(&f.target, nu.space(), "pullback_eval")?;
    let pushed = pushforward_function(f, phi)?;
    Ok(extend_usc_raw(nu, pushed.values()))
}

fn map_node(node: &Node, transport: &mut impl FnMut(&[f64]) -> Node) -> Node {
    match node {
        Node::Leaf(gens) => Node::Max(gens.iter().map(|g| transport(g)).collect()),
        Node::Sum(c) => Node::Sum(c.iter().map(|n| map_node(n, transport)).collect()),
        Node::Max(c) => Node::Max(c.iter().map(|n| map_node(n, transport)).collect()),
    }
}

fn push_measure(f: &Correspondence, chi: &[f64]) -> Node {
    let m = f.target.len();
    let mut base = vec![0.0; m];
    let mut parts = Vec::new();
    for (x, &w) in chi.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let fib = &f.fibers[x];
        if fib.len() == 1 {
            base[fib[0]] += w;
        } else {
            parts.push(Node::Leaf(
                fib.iter()
                    .map(|&y| {
                        let mut v = vec![0.0; m];
                        v[y] = w;
                        v
                    })
                    .collect(),
            ));
        }
    }
    parts.insert(0, Node::Leaf(vec![base]));
    Node::Sum(parts)
}

fn pull_measure(f: &Correspondence, chi: &[f64]) -> Node {
    let n = f.source.len();
    let mut base = vec![0.0; n];
    let mut parts = Vec::new();
    for (y, &w) in chi.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        match f.limit_fibers.get(&y) {
            Some(fibs) => parts.push(Node::Leaf(
                fibs.iter()
                    .map(|fib| {
                        let mut v = vec![0.0; n];
                        for &(x, c) in fib {
                            v[x] += w * c;
                        }
                        v
                    })
                    .collect(),
            )),
            None => {
                for &(x, mult) in &f.incoming[y] {
                    base[x] += w * mult as f64;
                }
            }
        }
    }
    parts.insert(0, Node::Leaf(vec![base]));
    Node::Sum(parts)
}

/// Relational composite `g ∘ f`: an edge `x → z` for every path `x → y → z`,
/// with multiplicity summed over paths of the products.
///
/// Limit fibers of the composite are the expansions of limit fibers of `g`
/// through those of `f`, so function pushforwards compose exactly. The
/// relational composite contains the graph of the composite meromorphic map
/// and can be strictly larger over indeterminacy; see the birational square
/// of the Cremona model.
pub fn compose(f: &Correspondence, g: &Correspondence) -> Result<Correspondence> {
    ensure_same(&f.target, &g.source, "compose")?;
    let mut data = CorrespondenceData::new(f.source.clone(), g.target.clone());
    data.generic_degree = f.generic_degree * g.generic_degree;
    data.equal_dimension = f.equal_dimension && g.equal_dimension;
    let mut mult: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for e1 in &f.edges {
        for &z in &g.fibers[e1.target] {
            let m2 = g
                .incoming(z)
                .iter()
                .find(|&&(y, _)| y == e1.target)
                .map(|&(_, m)| m)
                .unwrap_or(0);
            *mult.entry((e1.source, z)).or_insert(0) += e1.multiplicity * m2;
        }
    }
    data.edges = mult
        .into_iter()
        .map(|((s, t), m)| Edge {
            source: s,
            target: t,
            multiplicity: m,
        })
        .collect();
    if data.equal_dimension {
        let probe = Correspondence::new(CorrespondenceData {
            equal_dimension: false,
            ..data.clone()
        })?;
        for z in 0..g.target.len() {
            let touches_exceptional = g.incoming(z).iter().any(|&(y, _)| f.exceptional[y]);
            if probe.exceptional[z] || g.exceptional[z] || touches_exceptional {
                data.limit_fibers.insert(z, expand_limit_fibers(f, g, z)?);
            }
        }
    }
    Correspondence::new(data)
}

fn expand_limit_fibers(f: &Correspondence, g: &Correspondence, z: usize) -> Result<Vec<LimitFiber>> {
    let outer: Vec<LimitFiber> = match g.limit_fibers.get(&z) {
        Some(fibs) => fibs.clone(),
        None => vec![g.incoming(z).iter().map(|&(y, m)| (y, m as f64)).collect()],
    };
    let inner = |y: usize| -> Vec<LimitFiber> {
        match f.limit_fibers.get(&y) {
            Some(fibs) => fibs.clone(),
            None => vec![f.incoming(y).iter().map(|&(x, m)| (x, m as f64)).collect()],
        }
    };
    let mut out: Vec<LimitFiber> = Vec::new();
    for fib in outer {
        let mut partial: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new()];
        for (y, w) in fib {
            let options = inner(y);
            let mut next = Vec::with_capacity(partial.len() * options.len());
            for p in &partial {
                for opt in &options {
                    let mut q = p.clone();
                    for &(x, c) in opt {
                        *q.entry(x).or_insert(0.0) += w * c;
                    }
                    next.push(q);
                }
            }
            if next.len() > LIMIT_EXPANSION_CAP {
                return Err(Error::invalid(
                    "compose",
                    format!("limit fiber expansion exceeds {LIMIT_EXPANSION_CAP} choices"),
                ));
            }
            partial = next;
        }
        out.extend(partial.into_iter().map(|q| q.into_iter().collect::<LimitFiber>()));
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    out.dedup();
    Ok(out)
}

/// The graph `Γ` of `f` as a space, with its two projections.
#[derive(Debug, Clone)]
pub struct GraphResolution {
    pub graph: Arc<FiniteSpace>,
    /// `Γ → X`, single-valued; pulling back along it spreads mass at
    /// indeterminate points over the edges above them.
    pub to_source: Correspondence,
    /// `Γ → Y`, single-valued.
    pub to_target: Correspondence,
}

/// Factors `f_*` as `(π_Y)_* ∘ (π_X)^*` through the graph of `f`.
pub fn resolve_graph(f: &Correspondence) -> Result<GraphResolution> {
    let labels: Vec<String> = f
        .edges
        .iter()
        .map(|e| format!("{}>{}", f.source.label(e.source), f.target.label(e.target)))
        .collect();
    let graph = FiniteSpace::new(labels)?.into_shared();
    let src_map: Vec<usize> = f.edges.iter().map(|e| e.source).collect();
    let tgt_map: Vec<usize> = f.edges.iter().map(|e| e.target).collect();
    let mut data = CorrespondenceData::new(graph.clone(), f.source.clone());
    for (k, &x) in src_map.iter().enumerate() {
        data = data.edge(k, x, 1);
    }
    for &x in &f.indeterminacy {
        let fibs = (0..src_map.len())
            .filter(|&k| src_map[k] == x)
            .map(|k| vec![(k, 1.0)])
            .collect();
        data.limit_fibers.insert(x, fibs);
    }
    let to_source = Correspondence::new(data)?;
    let mut data = CorrespondenceData::new(graph.clone(), f.target.clone());
    data.equal_dimension = false;
    for (k, &y) in tgt_map.iter().enumerate() {
        data = data.edge(k, y, 1);
    }
    let to_target = Correspondence::new(data)?;
    Ok(GraphResolution {
        graph,
        to_source,
        to_target,
    })
}

/// A correspondence from a space to itself.
#[derive(Debug, Clone)]
pub struct EndoCorrespondence(Correspondence);

impl EndoCorrespondence {
    pub fn new(c: Correspondence) -> Result<Self> {
        if !same_space(&c.source, &c.target) {
            return Err(Error::SpaceMismatch {
                context: "self-correspondence needs equal source and target".into(),
            });
        }
        Ok(EndoCorrespondence(c))
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.0.source
    }

    pub fn inner(&self) -> &Correspondence {
        &self.0
    }

    /// Points some forward path from which reaches the indeterminacy locus.
    pub fn indeterminacy_closure(&self) -> BTreeSet<usize> {
        let mut closed: BTreeSet<usize> = self.0.indeterminacy.iter().copied().collect();
        let mut stack: Vec<usize> = closed.iter().copied().collect();
        while let Some(y) = stack.pop() {
            for &(x, _) in &self.0.incoming[y] {
                if closed.insert(x) {
                    stack.push(x);
                }
            }
        }
        closed
    }

    /// `f^k` by relational composition.
    pub fn iterate(&self, k: usize) -> Result<EndoCorrespondence> {
        let mut acc = Correspondence::identity(self.space().clone());
        for _ in 0..k {
            acc = compose(&acc, &self.0)?;
        }
        EndoCorrespondence::new(acc)
    }
}

impl Deref for EndoCorrespondence {
    type Target = Correspondence;

    fn deref(&self) -> &Correspondence {
        &self.0
    }
}
