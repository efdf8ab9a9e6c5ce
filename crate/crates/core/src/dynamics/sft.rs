//! Orbit subshifts of finite type and their topological entropy.

use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::correspondence::{Correspondence, CorrespondenceData, EndoCorrespondence};
use crate::error::{Error, Result};
use crate::space::FiniteSpace;

/// Relative accuracy of spectral radii.
pub const SPECTRAL_TOL: f64 = 1e-10;
const WORD_CAP: usize = 200_000;

/// The orbit space of a self-correspondence: sequences `x_0 x_1 ...` with
/// `x_{i+1} ∈ F(x_i)`, presented by the 0/1 adjacency matrix of the graph.
///
/// Invariant: every vertex has a successor.
#[derive(Debug, Clone)]
pub struct OrbitSft {
    space: Arc<FiniteSpace>,
    adjacency: Vec<Vec<bool>>,
}

impl OrbitSft {
    pub fn from_correspondence(f: &EndoCorrespondence) -> Self {
        let n = f.space().len();
        let mut adjacency = vec![vec![false; n]; n];
        for e in f.edges() {
            adjacency[e.source][e.target] = true;
        }
        OrbitSft {
            space: f.space().clone(),
            adjacency,
        }
    }

    pub fn from_adjacency(space: Arc<FiniteSpace>, adjacency: Vec<Vec<bool>>) -> Result<Self> {
        let n = space.len();
        if adjacency.len() != n || adjacency.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("adjacency", "adjacency must be n x n"));
        }
        if let Some(i) = adjacency.iter().position(|r| !r.iter().any(|&b| b)) {
            return Err(Error::invalid(format!("adjacency[{i}]"), "vertex has no successor"));
        }
        Ok(OrbitSft { space, adjacency })
    }

    /// All words over `k` symbols.
    pub fn full_shift(k: usize) -> Result<Self> {
        let space = FiniteSpace::indexed("a", k)?.into_shared();
        Self::from_adjacency(space, vec![vec![true; k]; k])
    }

    /// Binary words without two consecutive ones.
    pub fn golden_mean() -> Self {
        let space = FiniteSpace::new(["0", "1"]).unwrap().into_shared();
        Self::from_adjacency(space, vec![vec![true, true], vec![true, false]]).unwrap()
    }

    /// The self-correspondence whose graph is this adjacency.
    pub fn to_correspondence(&self) -> Result<EndoCorrespondence> {
        let mut data = CorrespondenceData::new(self.space.clone(), self.space.clone());
        data.equal_dimension = false;
        for (i, row) in self.adjacency.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if a {
                    data = data.edge(i, j, 1);
                }
            }
        }
        EndoCorrespondence::new(Correspondence::new(data)?)
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adjacency
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j]
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&j| self.adjacency[i][j])
    }

    /// Vertices reachable from `start` (inclusive).
    pub fn reachable_from(&self, start: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<usize> = start.to_vec();
        for &s in start {
            seen[s] = true;
        }
        while let Some(i) = stack.pop() {
            for j in self.successors(i) {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        (0..self.len()).filter(|&i| seen[i]).collect()
    }

    /// Adjacency of the subgraph induced on `vertices`, as a matrix on all
    /// vertices with other rows and columns zeroed.
    pub fn induced(&self, vertices: &[usize]) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut keep = vec![false; n];
        for &v in vertices {
            keep[v] = true;
        }
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if keep[i] && keep[j] && self.adjacency[i][j] { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.adjacency
            .iter()
            .map(|r| r.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    /// Allowed words of length `depth`.
    pub fn words(&self, depth: usize) -> Result<Vec<Vec<usize>>> {
        if depth == 0 {
            return Ok(vec![vec![]]);
        }
        let mut words: Vec<Vec<usize>> = (0..self.len()).map(|i| vec![i]).collect();
        for _ in 1..depth {
            let mut next = Vec::new();
            for w in &words {
                let last = *w.last().unwrap();
                for j in self.successors(last) {
                    let mut v = w.clone();
                    v.push(j);
                    next.push(v);
                }
            }
            if next.len() > WORD_CAP {
                return Err(Error::TooManyGenerators {
                    count: next.len() as f64,
                    cap: WORD_CAP,
                });
            }
            words = next;
        }
        Ok(words)
    }
}

/// Spectral radius of a nonnegative square matrix with a certificate-driven
/// power iteration, one strongly connected component at a time.
pub fn spectral_radius(m: &[Vec<f64>]) -> f64 {
    scc_blocks(m)
        .into_iter()
        .map(|block| perron(m, &block).0)
        .fold(0.0, f64::max)
}

/// Strongly connected components that carry at least one cycle.
pub(crate) fn scc_blocks(m: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = m.len();
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if m[i][j] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|ix| ix.index()).collect();
            v.sort_unstable();
            v
        })
        .filter(|c| c.len() > 1 || m[c[0]][c[0]] > 0.0)
        .collect()
}

/// Perron root with right and left eigenvectors of the irreducible block
/// `m[block][block]`, vectors expressed on all indices (zero off the block).
///
/// Iterates `B = M + I`, which is primitive on the block, and stops when the
/// Collatz–Wielandt bounds `min (Bx)_i/x_i <= ρ(B) <= max (Bx)_i/x_i` agree to
/// [`SPECTRAL_TOL`].
pub(crate) fn perron(m: &[Vec<f64>], block: &[usize]) -> (f64, Vec<f64>, Vec<f64>) {
    let n = m.len();
    let k = block.len();
    let sub: Vec<Vec<f64>> = block
        .iter()
        .map(|&i| block.iter().map(|&j| m[i][j]).collect())
        .collect();
    let (rho, right) = power_iterate(&sub, false);
    let (_, left) = power_iterate(&sub, true);
    let mut r = vec![0.0; n];
    let mut l = vec![0.0; n];
    for a in 0..k {
        r[block[a]] = right[a];
        l[block[a]] = left[a];
    }
    (rho, r, l)
}

fn power_iterate(sub: &[Vec<f64>], transpose: bool) -> (f64, Vec<f64>) {
    let k = sub.len();
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..k)
            .map(|i| {
                x[i] + (0..k)
                    .map(|j| if transpose { sub[j][i] * x[j] } else { sub[i][j] * x[j] })
                    .sum::<f64>()
            })
            .collect()
    };
    let mut x = vec![1.0 / k as f64; k];
    let mut estimate = 0.0;
    for _ in 0..2_000_000 {
        let y = apply(&x);
        let ratios = (0..k).map(|i| y[i] / x[i]);
        let lo = ratios.clone().fold(f64::INFINITY, f64::min);
        let hi = ratios.fold(0.0, f64::max);
        let s: f64 = y.iter().sum();
        x = y.iter().map(|v| v / s).collect();
        estimate = 0.5 * (lo + hi) - 1.0;
        if hi - lo <= SPECTRAL_TOL * estimate.max(1.0) {
            return (estimate, x);
        }
    }
    log::warn!("power iteration hit its budget; spectral radius {estimate}");
    (estimate, x)
}

/// `log ρ(A)` of the orbit graph; zero when the spectral radius is below one.
pub fn topological_entropy(sft: &OrbitSft) -> f64 {
    let rho = spectral_radius(&sft.matrix());
    if rho < 1.0 {
        log::warn!("orbit graph has spectral radius {rho} < 1; reporting zero entropy");
        0.0
    } else {
        rho.ln()
    }
}

/// Words of a fixed length as a finite space, with the projections to the
/// first and second letters.
#[derive(Debug, Clone)]
pub struct PathSpace {
    pub space: Arc<FiniteSpace>,
    pub words: Vec<Vec<usize>>,
    /// Word ↦ first letter.
    pub first: Correspondence,
    /// Word ↦ second letter, i.e. the first letter after one shift.
    pub second: Correspondence,
}

impl OrbitSft {
    /// Truncated path space of words of length `depth >= 2`.
    pub fn path_space(&self, depth: usize) -> Result<PathSpace> {
        if depth < 2 {
            return Err(Error::precondition("path_space", "depth must be at least 2"));
        }
        let words = self.words(depth)?;
        let labels: Vec<String> = words
            .iter()
            .map(|w| {
                w.iter()
                    .map(|&i| self.space.label(i))
                    .collect::<Vec<_>>()
                    .join(".")
            })
            .collect();
        let space = FiniteSpace::new(labels)?.into_shared();
        let projection = |letter: usize| -> Result<Correspondence> {
            let mut data = CorrespondenceData::new(space.clone(), self.space.clone());
            data.equal_dimension = false;
            for (k, w) in words.iter().enumerate() {
                data = data.edge(k, w[letter], 1);
            }
            Correspondence::new(data)
        };
        Ok(PathSpace {
            first: projection(0)?,
            second: projection(1)?,
            space,
            words,
        })
    }
}
