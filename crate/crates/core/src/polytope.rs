//! Factored generator sets.
//!
//! A strong submeasure is the support function of a polytope. Sums of
//! submeasures are Minkowski sums, whose vertex count multiplies, so the
//! generator set is kept as an expression tree: leaves hold explicit
//! generators, `Sum` nodes are Minkowski sums and `Max` nodes are convex hulls
//! of unions. Evaluation stays linear in the tree size and every exact
//! question about the polytope becomes one linear program over the tree.

use std::collections::HashSet;

use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::measure::dot;

/// Leaves whose Minkowski product stays below this size are multiplied out.
const FLATTEN_CAP: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Leaf(Vec<Vec<f64>>),
    Sum(Vec<Node>),
    Max(Vec<Node>),
}

impl Node {
    pub(crate) fn eval(&self, phi: &[f64]) -> f64 {
        match self {
            Node::Leaf(gens) => gens
                .iter()
                .map(|g| dot(g, phi))
                .fold(f64::NEG_INFINITY, f64::max),
            Node::Sum(children) => children.iter().map(|c| c.eval(phi)).sum(),
            Node::Max(children) => children
                .iter()
                .map(|c| c.eval(phi))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub(crate) fn is_positive(&self) -> bool {
        match self {
            Node::Leaf(gens) => gens.iter().all(|g| g.iter().all(|&w| w >= 0.0)),
            Node::Sum(c) | Node::Max(c) => c.iter().all(Node::is_positive),
        }
    }

    /// Number of generators the flattened form would have.
    pub(crate) fn count(&self) -> f64 {
        match self {
            Node::Leaf(g) => g.len() as f64,
            Node::Sum(c) => c.iter().map(Node::count).product(),
            Node::Max(c) => c.iter().map(Node::count).sum(),
        }
    }

    pub(crate) fn map_leaves(&self, f: &mut impl FnMut(&[f64]) -> Vec<f64>) -> Node {
        match self {
            Node::Leaf(g) => Node::Leaf(g.iter().map(|v| f(v)).collect()),
            Node::Sum(c) => Node::Sum(c.iter().map(|n| n.map_leaves(f)).collect()),
            Node::Max(c) => Node::Max(c.iter().map(|n| n.map_leaves(f)).collect()),
        }
    }

    pub(crate) fn scaled(&self, c: f64) -> Node {
        debug_assert!(c >= 0.0);
        self.map_leaves(&mut |v| v.iter().map(|w| c * w).collect())
    }

    /// Flattened generator list. Caller checks [`count`](Self::count) first.
    pub(crate) fn flatten(&self) -> Vec<Vec<f64>> {
        match self {
            Node::Leaf(g) => g.clone(),
            Node::Max(c) => dedup(c.iter().flat_map(Node::flatten).collect()),
            Node::Sum(c) => {
                let mut acc: Vec<Vec<f64>> = vec![];
                for (i, child) in c.iter().enumerate() {
                    let part = child.flatten();
                    acc = if i == 0 { part } else { minkowski(&acc, &part) };
                }
                dedup(acc)
            }
        }
    }

    /// Structural simplification that preserves the represented polytope.
    pub(crate) fn normalize(self) -> Node {
        match self {
            Node::Leaf(g) => Node::Leaf(dedup(g)),
            Node::Max(children) => {
                let mut flat = Vec::new();
                for c in children {
                    match c.normalize() {
                        Node::Max(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                let mut merged: Vec<Vec<f64>> = Vec::new();
                let mut rest = Vec::new();
                for c in flat {
                    match c {
                        Node::Leaf(g) => merged.extend(g),
                        other => rest.push(other),
                    }
                }
                if !merged.is_empty() {
                    rest.insert(0, Node::Leaf(dedup(merged)));
                }
                if rest.len() == 1 {
                    rest.pop().unwrap()
                } else {
                    Node::Max(rest)
                }
            }
            Node::Sum(children) => {
                let mut flat = Vec::new();
                for c in children {
                    match c.normalize() {
                        Node::Sum(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                let mut shift: Option<Vec<f64>> = None;
                let mut leaves: Vec<Vec<Vec<f64>>> = Vec::new();
                let mut rest = Vec::new();
                for c in flat {
                    match c {
                        Node::Leaf(mut g) if g.len() == 1 => {
                            let v = g.pop().unwrap();
                            shift = Some(match shift {
                                None => v,
                                Some(s) => s.iter().zip(&v).map(|(a, b)| a + b).collect(),
                            });
                        }
                        Node::Leaf(g) => leaves.push(g),
                        other => rest.push(other),
                    }
                }
                leaves.sort_by_key(Vec::len);
                let mut merged: Vec<Vec<Vec<f64>>> = Vec::new();
                for g in leaves {
                    match merged.last_mut() {
                        Some(last) if (last.len() * g.len()) as f64 <= FLATTEN_CAP => {
                            *last = dedup(minkowski(last, &g));
                        }
                        _ => merged.push(g),
                    }
                }
                if let Some(s) = shift {
                    let nonzero = s.iter().any(|&w| w != 0.0);
                    if let Some(first) = merged.first_mut() {
                        if nonzero {
                            for g in first.iter_mut() {
                                for (a, b) in g.iter_mut().zip(&s) {
                                    *a += b;
                                }
                            }
                            *first = dedup(std::mem::take(first));
                        }
                    } else if nonzero || rest.is_empty() {
                        merged.push(vec![s]);
                    }
                }
                let mut out: Vec<Node> = merged.into_iter().map(Node::Leaf).collect();
                out.extend(rest);
                if out.len() == 1 {
                    out.pop().unwrap()
                } else {
                    Node::Sum(out)
                }
            }
        }
    }

    /// Encodes `t·P` into `lp`, where `t` is the constant 1 or a variable.
    /// Returns the point of `t·P` as one linear expression per coordinate.
    fn encode(&self, lp: &mut LinearProgram, scale: Scale, dim: usize) -> Vec<Vec<(usize, f64)>> {
        match self {
            Node::Leaf(gens) => {
                let vars: Vec<usize> = gens.iter().map(|_| lp.add_var()).collect();
                let mut terms: Vec<(usize, f64)> = vars.iter().map(|&v| (v, 1.0)).collect();
                let rhs = match scale {
                    Scale::One => 1.0,
                    Scale::Var(t) => {
                        terms.push((t, -1.0));
                        0.0
                    }
                };
                lp.add_sparse(&terms, Relation::Eq, rhs);
                let mut coords = vec![Vec::new(); dim];
                for (g, &v) in gens.iter().zip(&vars) {
                    for (i, &w) in g.iter().enumerate() {
                        if w != 0.0 {
                            coords[i].push((v, w));
                        }
                    }
                }
                coords
            }
            Node::Sum(children) => {
                let mut coords = vec![Vec::new(); dim];
                for c in children {
                    for (i, e) in c.encode(lp, scale, dim).into_iter().enumerate() {
                        coords[i].extend(e);
                    }
                }
                coords
            }
            Node::Max(children) => {
                let taus: Vec<usize> = children.iter().map(|_| lp.add_var()).collect();
                let mut terms: Vec<(usize, f64)> = taus.iter().map(|&v| (v, 1.0)).collect();
                let rhs = match scale {
                    Scale::One => 1.0,
                    Scale::Var(t) => {
                        terms.push((t, -1.0));
                        0.0
                    }
                };
                lp.add_sparse(&terms, Relation::Eq, rhs);
                let mut coords = vec![Vec::new(); dim];
                for (c, &tau) in children.iter().zip(&taus) {
                    for (i, e) in c.encode(lp, Scale::Var(tau), dim).into_iter().enumerate() {
                        coords[i].extend(e);
                    }
                }
                coords
            }
        }
    }

    /// Upper bound on `|value|` of any point of the polytope against a
    /// probability vector.
    fn sup_bound(&self) -> f64 {
        match self {
            Node::Leaf(g) => g
                .iter()
                .flat_map(|v| v.iter().map(|w| w.abs()))
                .fold(0.0, f64::max),
            Node::Sum(c) => c.iter().map(Node::sup_bound).sum(),
            Node::Max(c) => c.iter().map(Node::sup_bound).fold(0.0, f64::max),
        }
    }

    /// Epigraph encoding of `d ↦ self.eval(d)` for `d` a probability vector
    /// held in variables `d_vars`. Returns `(terms, constant)`.
    fn encode_epigraph(&self, lp: &mut LinearProgram, d_vars: &[usize]) -> (Vec<(usize, f64)>, f64) {
        match self {
            Node::Leaf(gens) => {
                let m = self.sup_bound();
                let u = lp.add_var();
                for g in gens {
                    // u - m >= g·d
                    let mut terms = vec![(u, 1.0)];
                    terms.extend(d_vars.iter().zip(g).map(|(&v, &w)| (v, -w)));
                    lp.add_sparse(&terms, Relation::Ge, m);
                }
                (vec![(u, 1.0)], -m)
            }
            Node::Sum(children) => {
                let mut terms = Vec::new();
                let mut constant = 0.0;
                for c in children {
                    let (t, k) = c.encode_epigraph(lp, d_vars);
                    terms.extend(t);
                    constant += k;
                }
                (terms, constant)
            }
            Node::Max(children) => {
                let m = self.sup_bound();
                let u = lp.add_var();
                for c in children {
                    let (t, k) = c.encode_epigraph(lp, d_vars);
                    // u - m >= t + k
                    let mut terms = vec![(u, 1.0)];
                    terms.extend(t.into_iter().map(|(v, a)| (v, -a)));
                    lp.add_sparse(&terms, Relation::Ge, m + k);
                }
                (vec![(u, 1.0)], -m)
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Scale {
    One,
    Var(usize),
}

pub(crate) fn minkowski(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x.iter().zip(y).map(|(p, q)| p + q).collect());
        }
    }
    out
}

pub(crate) fn dedup(gens: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(gens.len());
    for mut g in gens {
        for w in g.iter_mut() {
            if *w == 0.0 {
                *w = 0.0;
            }
        }
        let key: Vec<u64> = g.iter().map(|w| w.to_bits()).collect();
        if seen.insert(key) {
            out.push(g);
        }
    }
    out
}

/// Is `target` a point of the polytope?
pub(crate) fn contains(node: &Node, target: &[f64], tol: f64) -> bool {
    let dim = target.len();
    let mut lp = LinearProgram::new(0);
    let coords = node.encode(&mut lp, Scale::One, dim);
    add_target_rows(&mut lp, &coords, target, None, tol);
    !matches!(lp.solve(), LpOutcome::Infeasible)
}

/// Largest `s >= 0` with `s·direction` in the polytope, if any exists.
pub(crate) fn max_scale_in(node: &Node, direction: &[f64], tol: f64) -> Option<f64> {
    let dim = direction.len();
    let mut lp = LinearProgram::new(0);
    let coords = node.encode(&mut lp, Scale::One, dim);
    let s = lp.add_var();
    add_target_rows(&mut lp, &coords, direction, Some(s), tol);
    let mut obj = vec![0.0; lp.n_vars()];
    obj[s] = 1.0;
    lp.set_objective(obj);
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => Some(x[s]),
        LpOutcome::Unbounded => Some(f64::INFINITY),
        LpOutcome::Infeasible => None,
    }
}

/// Membership rows `coords_i = target_i` (or `= s·target_i`), relaxed to a
/// band of width `tol` so that rounding in the generators does not flip the
/// verdict.
fn add_target_rows(
    lp: &mut LinearProgram,
    coords: &[Vec<(usize, f64)>],
    target: &[f64],
    scale: Option<usize>,
    tol: f64,
) {
    for (i, e) in coords.iter().enumerate() {
        let mut terms = e.clone();
        let rhs = match scale {
            Some(s) => {
                terms.push((s, -target[i]));
                0.0
            }
            None => target[i],
        };
        if tol > 0.0 {
            lp.add_sparse(&terms, Relation::Le, rhs + tol);
            lp.add_sparse(&terms, Relation::Ge, rhs - tol);
        } else {
            lp.add_sparse(&terms, Relation::Eq, rhs);
        }
    }
}

/// `max { ν·g : ν in P, ν >= 0 }`, or `None` if no positive point exists.
pub(crate) fn max_over_positive_part(node: &Node, g: &[f64]) -> Option<f64> {
    let dim = g.len();
    let mut lp = LinearProgram::new(0);
    let coords = node.encode(&mut lp, Scale::One, dim);
    let mut obj = vec![0.0; lp.n_vars()];
    for (i, e) in coords.iter().enumerate() {
        lp.add_sparse(e, Relation::Ge, 0.0);
        for &(v, a) in e {
            obj[v] += a * g[i];
        }
    }
    lp.set_objective(obj);
    match lp.solve() {
        LpOutcome::Optimal { value, .. } => Some(value),
        LpOutcome::Infeasible => None,
        LpOutcome::Unbounded => unreachable!("polytope LPs are bounded"),
    }
}

/// `min { eval(d) : d >= 0, Σd = 1 }` with its minimizer.
pub(crate) fn min_over_simplex(node: &Node, dim: usize) -> (f64, Vec<f64>) {
    let mut lp = LinearProgram::new(dim);
    let d_vars: Vec<usize> = (0..dim).collect();
    let (terms, constant) = node.encode_epigraph(&mut lp, &d_vars);
    let simplex: Vec<(usize, f64)> = d_vars.iter().map(|&v| (v, 1.0)).collect();
    lp.add_sparse(&simplex, Relation::Eq, 1.0);
    let mut obj = vec![0.0; lp.n_vars()];
    for (v, a) in terms {
        obj[v] -= a;
    }
    lp.set_objective(obj);
    match lp.solve() {
        LpOutcome::Optimal { x, value } => (-value + constant, x[..dim].to_vec()),
        other => unreachable!("epigraph LP over the simplex is feasible and bounded: {other:?}"),
    }
}
