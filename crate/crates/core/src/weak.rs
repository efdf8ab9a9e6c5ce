//! Weak convergence of submeasure sequences, tested on a finite probing basis.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::measure::FunctionVector;
use crate::submeasure::{norm_and_mass, StrongSubmeasure};

#[derive(Debug, Clone)]
pub struct WeakLimit {
    pub limit: StrongSubmeasure,
    /// Index of the sequence element used as the limit representative.
    pub index: usize,
    /// Limit values on the basis.
    pub values: Vec<f64>,
    /// Last observed basis gap between successive probes.
    pub residual: f64,
}

fn values(mu: &StrongSubmeasure, basis: &[FunctionVector]) -> Result<Vec<f64>> {
    basis.iter().map(|phi| mu.eval(phi)).collect()
}

fn gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_norm(mu: &StrongSubmeasure, bound: f64) -> Result<()> {
    let norm = norm_and_mass(mu).norm;
    if norm > bound {
        return Err(Error::UnboundedNorm { norm, bound });
    }
    Ok(())
}

/// Limit of a sequence given by its terms `seq(n)`, `n >= 1`.
///
/// Terms are probed at `n = 1, 2, 4, ...` up to `n_max`; the sequence is
/// accepted once two successive probes differ by at most `tol / 2` on every
/// basis function, which bounds the remaining drift by `tol` for sequences
/// converging at least like `1/n`. Every probe must have norm at most
/// `norm_bound`. For increasing sequences the representative contains every
/// earlier generator, so it is the supremum of the tail.
pub fn weak_limit(
    mut seq: impl FnMut(usize) -> Result<StrongSubmeasure>,
    basis: &[FunctionVector],
    tol: f64,
    n_max: usize,
    norm_bound: f64,
) -> Result<WeakLimit> {
    let mut n = 1usize;
    let mut prev = seq(n)?;
    check_norm(&prev, norm_bound)?;
    let mut prev_vals = values(&prev, basis)?;
    let mut residual = f64::INFINITY;
    while n.saturating_mul(2) <= n_max {
        n *= 2;
        let next = seq(n)?;
        check_norm(&next, norm_bound)?;
        let next_vals = values(&next, basis)?;
        residual = gap(&prev_vals, &next_vals);
        prev = next;
        prev_vals = next_vals;
        if residual <= tol / 2.0 {
            return Ok(WeakLimit {
                limit: prev,
                index: n,
                values: prev_vals,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        op: "weak_limit",
        iterations: n,
        residual,
    })
}

/// Limit of an explicit finite sequence: the last two terms must agree within
/// `tol` on the basis, and the last term represents the limit.
pub fn weak_limit_of(seq: &[StrongSubmeasure], basis: &[FunctionVector], tol: f64, norm_bound: f64) -> Result<WeakLimit> {
    let (last, init) = seq
        .split_last()
        .ok_or_else(|| Error::invalid("seq", "empty sequence"))?;
    for mu in seq {
        check_norm(mu, norm_bound)?;
    }
    let last_vals = values(last, basis)?;
    let residual = match init.last() {
        Some(prev) => gap(&values(prev, basis)?, &last_vals),
        None => 0.0,
    };
    if residual > tol {
        return Err(Error::NonConvergence {
            op: "weak_limit",
            iterations: seq.len(),
            residual,
        });
    }
    Ok(WeakLimit {
        limit: last.clone(),
        index: seq.len() - 1,
        values: last_vals,
        residual,
    })
}

/// Indices of a subsequence whose basis values pairwise differ by less than
/// `radius`: the fullest cell of a grid of mesh `radius`. Bounded sequences
/// longer than the number of cells always produce at least two indices.
pub fn cluster_subsequence(
    seq: &[StrongSubmeasure],
    basis: &[FunctionVector],
    radius: f64,
    norm_bound: f64,
) -> Result<Vec<usize>> {
    assert!(radius > 0.0);
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (k, mu) in seq.iter().enumerate() {
        check_norm(mu, norm_bound)?;
        let key = values(mu, basis)?
            .iter()
            .map(|v| (v / radius).floor() as i64)
            .collect();
        cells.entry(key).or_default().push(k);
    }
    let best = cells
        .into_values()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .unwrap_or_default();
    Ok(best)
}
