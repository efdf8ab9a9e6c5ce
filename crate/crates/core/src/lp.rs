//! Dense two-phase simplex for the small linear programs behind envelope
//! extension and convex-hull membership.
//!
//! Problems are `maximize c·x  s.t.  rows,  x >= 0`. Pivoting uses Dantzig's
//! rule and falls back to Bland's rule once degenerate pivots pile up, which
//! rules out cycling.

pub const LP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    n_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            objective: vec![0.0; n_vars],
            constraints: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Adds a fresh nonnegative variable and returns its index.
    pub fn add_var(&mut self) -> usize {
        self.n_vars += 1;
        self.objective.push(0.0);
        for c in &mut self.constraints {
            c.coeffs.push(0.0);
        }
        self.n_vars - 1
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) {
        assert_eq!(objective.len(), self.n_vars);
        self.objective = objective;
    }

    pub fn objective_mut(&mut self) -> &mut [f64] {
        &mut self.objective
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.n_vars);
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Sparse form of [`add_constraint`](Self::add_constraint).
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) {
        let mut coeffs = vec![0.0; self.n_vars];
        for &(j, a) in terms {
            coeffs[j] += a;
        }
        self.add_constraint(coeffs, relation, rhs);
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).solve(&self.objective, self.n_vars)
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_cols: usize,
    artificial_start: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.n_vars;
        let mut n_slack = 0;
        let mut n_art = 0;
        let normalized: Vec<(Vec<f64>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let rel = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|a| -a).collect(), rel, -c.rhs)
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs)
                }
            })
            .collect();
        for (_, rel, _) in &normalized {
            match rel {
                Relation::Le => n_slack += 1,
                Relation::Ge => {
                    n_slack += 1;
                    n_art += 1
                }
                Relation::Eq => n_art += 1,
            }
        }
        let artificial_start = n + n_slack;
        let n_cols = artificial_start + n_art;
        let mut rows = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let (mut s, mut a) = (n, artificial_start);
        for (coeffs, rel, rhs) in normalized {
            let mut row = vec![0.0; n_cols + 1];
            row[..n].copy_from_slice(&coeffs);
            row[n_cols] = rhs;
            match rel {
                Relation::Le => {
                    row[s] = 1.0;
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -1.0;
                    s += 1;
                    row[a] = 1.0;
                    basis.push(a);
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = 1.0;
                    basis.push(a);
                    a += 1;
                }
            }
            rows.push(row);
        }
        Tableau {
            rows,
            basis,
            n_cols,
            artificial_start,
        }
    }

    fn solve(mut self, objective: &[f64], n_vars: usize) -> LpOutcome {
        if self.artificial_start < self.n_cols {
            let mut phase1 = vec![0.0; self.n_cols];
            for c in phase1.iter_mut().skip(self.artificial_start) {
                *c = -1.0;
            }
            let allowed = vec![true; self.n_cols];
            // Phase one is bounded above by zero.
            let _ = self.optimize(&phase1, &allowed);
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.rows)
                .filter(|(&b, _)| b >= self.artificial_start)
                .map(|(_, r)| r[self.n_cols])
                .sum();
            if infeasibility > LP_TOL * (1.0 + self.rhs_scale()) {
                return LpOutcome::Infeasible;
            }
            self.expel_artificials();
        }
        let mut full = vec![0.0; self.n_cols];
        full[..n_vars].copy_from_slice(objective);
        let allowed: Vec<bool> = (0..self.n_cols).map(|j| j < self.artificial_start).collect();
        if !self.optimize(&full, &allowed) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![0.0; n_vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n_vars {
                x[b] = self.rows[i][self.n_cols].max(0.0);
            }
        }
        let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpOutcome::Optimal { x, value }
    }

    fn rhs_scale(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r[self.n_cols].abs())
            .fold(0.0, f64::max)
    }

    /// Runs primal simplex; returns false when the objective is unbounded.
    fn optimize(&mut self, objective: &[f64], allowed: &[bool]) -> bool {
        let m = self.rows.len();
        let rhs = self.n_cols;
        let mut degenerate_streak = 0usize;
        let max_iter = 50 * (m + self.n_cols) + 1000;
        for _ in 0..max_iter {
            let reduced: Vec<f64> = (0..self.n_cols)
                .map(|j| {
                    if !allowed[j] {
                        return 0.0;
                    }
                    let zj: f64 = (0..m).map(|i| objective[self.basis[i]] * self.rows[i][j]).sum();
                    objective[j] - zj
                })
                .collect();
            let bland = degenerate_streak > 50;
            let entering = if bland {
                (0..self.n_cols).find(|&j| allowed[j] && reduced[j] > LP_TOL)
            } else {
                (0..self.n_cols)
                    .filter(|&j| allowed[j] && reduced[j] > LP_TOL)
                    .max_by(|&a, &b| reduced[a].total_cmp(&reduced[b]))
            };
            let Some(q) = entering else { return true };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.rows[i][q];
                if a > LP_TOL {
                    let ratio = self.rows[i][rhs] / a;
                    leaving = match leaving {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12
                                || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((p, ratio)) = leaving else { return false };
            degenerate_streak = if ratio.abs() <= 1e-12 {
                degenerate_streak + 1
            } else {
                0
            };
            self.pivot(p, q);
        }
        log::warn!("simplex iteration budget exhausted; returning current basis");
        true
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let width = self.n_cols + 1;
        let piv = self.rows[p][q];
        for v in self.rows[p].iter_mut() {
            *v /= piv;
        }
        let prow = self.rows[p].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == p {
                continue;
            }
            let f = row[q];
            if f != 0.0 {
                for j in 0..width {
                    row[j] -= f * prow[j];
                }
                row[q] = 0.0;
            }
        }
        self.basis[p] = q;
    }

    /// Pivots zero-level artificials out of the basis, dropping redundant rows.
    fn expel_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.artificial_start {
                let col = (0..self.artificial_start).find(|&j| self.rows[i][j].abs() > LP_TOL);
                match col {
                    Some(j) => {
                        self.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }
}
