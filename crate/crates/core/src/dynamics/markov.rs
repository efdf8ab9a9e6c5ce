//! Stationary Markov measures on orbit subshifts.

use crate::dynamics::sft::{perron, scc_blocks, OrbitSft};
use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-9;

/// A stationary Markov measure: transition matrix `P` supported on the
/// adjacency, with stationary distribution `π` (`πP = π`, `Σπ = 1`).
#[derive(Debug, Clone)]
pub struct MarkovMeasure {
    sft: OrbitSft,
    stationary: Vec<f64>,
    transitions: Vec<Vec<f64>>,
}

impl MarkovMeasure {
    pub fn new(sft: OrbitSft, stationary: Vec<f64>, transitions: Vec<Vec<f64>>) -> Result<Self> {
        let n = sft.len();
        if stationary.len() != n || transitions.len() != n || transitions.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("markov", "dimensions do not match the subshift"));
        }
        if stationary.iter().any(|&p| !p.is_finite() || p < -STOCHASTIC_TOL) || (stationary.iter().sum::<f64>() - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::invalid("stationary", "must be a probability vector"));
        }
        for (i, row) in transitions.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < -STOCHASTIC_TOL || (p > 0.0 && !sft.allows(i, j)) {
                    return Err(Error::invalid(
                        format!("transitions[{i}][{j}]"),
                        "transition probability outside the adjacency",
                    ));
                }
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::invalid(format!("transitions[{i}]"), "row is not stochastic"));
            }
        }
        for j in 0..n {
            let flow: f64 = (0..n).map(|i| stationary[i] * transitions[i][j]).sum();
            if (flow - stationary[j]).abs() > STOCHASTIC_TOL {
                return Err(Error::invalid(
                    format!("stationary[{j}]"),
                    format!("not stationary: (πP)_j = {flow}, π_j = {}", stationary[j]),
                ));
            }
        }
        Ok(MarkovMeasure {
            sft,
            stationary,
            transitions,
        })
    }

    /// Chain with the given transitions and a stationary distribution found
    /// by iterating the lazy chain `(I + P)/2` from the uniform distribution.
    pub fn from_transitions(sft: OrbitSft, transitions: Vec<Vec<f64>>) -> Result<Self> {
        let n = sft.len();
        let mut pi = vec![1.0 / n as f64; n];
        let mut converged = false;
        for _ in 0..1_000_000 {
            let next: Vec<f64> = (0..n)
                .map(|j| 0.5 * pi[j] + 0.5 * (0..n).map(|i| pi[i] * transitions[i][j]).sum::<f64>())
                .collect();
            let gap = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            pi = next;
            if gap < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                op: "stationary distribution",
                iterations: 1_000_000,
                residual: f64::NAN,
            });
        }
        let s: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= s);
        Self::new(sft, pi, transitions)
    }

    /// The measure of maximal entropy, built on the strongly connected block
    /// with the largest Perron root: `P_ij = A_ij v_j / (λ v_i)` and
    /// `π_i ∝ u_i v_i` for right and left Perron vectors `v`, `u`.
    pub fn parry(sft: &OrbitSft) -> Result<Self> {
        Self::parry_on(sft, &(0..sft.len()).collect::<Vec<_>>())
    }

    /// Parry measure of the subgraph induced on `vertices`.
    pub fn parry_on(sft: &OrbitSft, vertices: &[usize]) -> Result<Self> {
        let m = sft.induced(vertices);
        let blocks = scc_blocks(&m);
        let (lambda, v, u) = blocks
            .iter()
            .map(|b| perron(&m, b))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .ok_or_else(|| Error::precondition("parry", "the induced graph has no cycle"))?;
        let n = sft.len();
        let mut transitions = uniform_rows(sft);
        for i in 0..n {
            if v[i] > 0.0 {
                let row: Vec<f64> = (0..n).map(|j| m[i][j] * v[j] / (lambda * v[i])).collect();
                let s: f64 = row.iter().sum();
                transitions[i] = row.iter().map(|p| p / s).collect();
            }
        }
        let weights: Vec<f64> = (0..n).map(|i| u[i] * v[i]).collect();
        let total: f64 = weights.iter().sum();
        let stationary = weights.iter().map(|w| w / total).collect();
        Self::new(sft.clone(), stationary, transitions)
    }

    /// Maximal-entropy chain whose stationary distribution is `marginal`,
    /// by Sinkhorn scaling of the adjacency restricted to the support.
    /// `None` when no stationary flow on the adjacency has that marginal.
    pub fn max_entropy_with_marginal(sft: &OrbitSft, marginal: &[f64]) -> Option<Self> {
        let n = sft.len();
        let total: f64 = marginal.iter().sum();
        if total <= 0.0 || marginal.iter().any(|&p| p < 0.0) {
            return None;
        }
        let pi: Vec<f64> = marginal.iter().map(|p| p / total).collect();
        let support: Vec<bool> = pi.iter().map(|&p| p > 0.0).collect();
        let k: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if support[i] && support[j] && sft.allows(i, j) { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let mut a = vec![1.0; n];
        let mut b = vec![1.0; n];
        let mut ok = false;
        for _ in 0..20_000 {
            for i in 0..n {
                if support[i] {
                    let s: f64 = (0..n).map(|j| k[i][j] * b[j]).sum();
                    if s == 0.0 {
                        return None;
                    }
                    a[i] = pi[i] / s;
                }
            }
            for j in 0..n {
                if support[j] {
                    let s: f64 = (0..n).map(|i| a[i] * k[i][j]).sum();
                    if s == 0.0 {
                        return None;
                    }
                    b[j] = pi[j] / s;
                }
            }
            let row_err = (0..n)
                .filter(|&i| support[i])
                .map(|i| ((0..n).map(|j| a[i] * k[i][j] * b[j]).sum::<f64>() - pi[i]).abs())
                .fold(0.0, f64::max);
            if !a.iter().chain(&b).all(|v| v.is_finite()) {
                return None;
            }
            if row_err < 1e-13 {
                ok = true;
                break;
            }
        }
        if !ok {
            return None;
        }
        let mut transitions = uniform_rows(sft);
        for i in 0..n {
            if support[i] {
                let row: Vec<f64> = (0..n).map(|j| a[i] * k[i][j] * b[j] / pi[i]).collect();
                let s: f64 = row.iter().sum();
                transitions[i] = row.iter().map(|p| p / s).collect();
            }
        }
        Self::new(sft.clone(), pi, transitions).ok()
    }

    pub fn sft(&self) -> &OrbitSft {
        &self.sft
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn transitions(&self) -> &[Vec<f64>] {
        &self.transitions
    }

    /// Probability of the cylinder `[w_0 w_1 ... w_k]`.
    pub fn cylinder(&self, word: &[usize]) -> f64 {
        let Some((&first, rest)) = word.split_first() else { return 1.0 };
        let mut p = self.stationary[first];
        let mut prev = first;
        for &w in rest {
            p *= self.transitions[prev][w];
            prev = w;
        }
        p
    }
}

fn uniform_rows(sft: &OrbitSft) -> Vec<Vec<f64>> {
    (0..sft.len())
        .map(|i| {
            let deg = sft.successors(i).count() as f64;
            (0..sft.len())
                .map(|j| if sft.allows(i, j) { 1.0 / deg } else { 0.0 })
                .collect()
        })
        .collect()
}

/// `h = Σ_i π_i Σ_j P_ij log(1/P_ij)`.
pub fn markov_entropy(m: &MarkovMeasure) -> f64 {
    let n = m.sft.len();
    let mut h = 0.0;
    for i in 0..n {
        if m.stationary[i] <= 0.0 {
            continue;
        }
        for j in 0..n {
            let p = m.transitions[i][j];
            if p > 0.0 {
                h -= m.stationary[i] * p * p.ln();
            }
        }
    }
    h
}
