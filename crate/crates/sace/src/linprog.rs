//! A small dense linear-programming solver: two-phase simplex with Bland's
//! anti-cycling rule, bounded variables, equality and inequality constraints,
//! and a standalone feasibility test.
//!
//! Instances in this crate are tiny (tens of variables) and often highly
//! degenerate, so exactness and predictability matter more than speed.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// A dense LP: minimize or maximize `objective . x` subject to per-variable
/// bounds, `eq . x = rhs`, and `ineq . x <= rhs`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub var_bounds: Vec<(f64, f64)>,
    pub eq_constraints: Vec<(Vec<f64>, f64)>,
    pub ineq_constraints: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
}

impl LinearProgram {
    fn check(&self) -> Result<()> {
        if self.objective.len() != self.n_vars || self.var_bounds.len() != self.n_vars {
            return Err(Error::InvalidInput(
                "LP objective/bounds length does not match n_vars".into(),
            ));
        }
        for &(lo, hi) in &self.var_bounds {
            if !lo.is_finite() || lo > hi {
                return Err(Error::InvalidInput(format!(
                    "LP variable bounds [{lo}, {hi}] are invalid"
                )));
            }
        }
        for (row, _) in self.eq_constraints.iter().chain(&self.ineq_constraints) {
            if row.len() != self.n_vars {
                return Err(Error::InvalidInput(
                    "LP constraint row length does not match n_vars".into(),
                ));
            }
        }
        Ok(())
    }

    fn n_constraints(&self) -> usize {
        self.eq_constraints.len() + self.ineq_constraints.len()
    }
}

/// Solves the LP. Maximization is computed as the negated minimum of the
/// negated objective.
pub fn solve(lp: &LinearProgram, sense: Sense) -> Result<LpSolution> {
    lp.check()?;
    match sense {
        Sense::Min => solve_min(lp, &lp.objective),
        Sense::Max => {
            let neg: Vec<f64> = lp.objective.iter().map(|c| -c).collect();
            let mut sol = solve_min(lp, &neg)?;
            sol.value = -sol.value;
            Ok(sol)
        }
    }
}

/// True iff the phase-one optimum is zero within tolerance.
pub fn feasible(lp: &LinearProgram) -> Result<bool> {
    lp.check()?;
    let mut tab = Tableau::build(lp)?;
    tab.phase_one()
}

fn solve_min(lp: &LinearProgram, objective: &[f64]) -> Result<LpSolution> {
    let mut tab = Tableau::build(lp)?;
    if !tab.phase_one()? {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            value: f64::NAN,
            x: Vec::new(),
        });
    }
    if !tab.phase_two(objective)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            value: f64::NEG_INFINITY,
            x: Vec::new(),
        });
    }
    let x = tab.extract(lp);
    let value = objective.iter().zip(&x).map(|(c, xi)| c * xi).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        x,
    })
}

/// Dense simplex tableau over shifted variables `y = x - lo >= 0`, with
/// finite upper bounds expanded into inequality rows.
struct Tableau {
    /// rows[i] has length n_cols + 1; the last entry is the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_struct: usize,
    n_cols: usize,
    art_start: usize,
    pivots_left: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Self> {
        let n = lp.n_vars;
        let lo: Vec<f64> = lp.var_bounds.iter().map(|b| b.0).collect();

        // (coefficients over y, rhs, is_equality)
        let mut raw: Vec<(Vec<f64>, f64, bool)> = Vec::new();
        for (row, rhs) in &lp.eq_constraints {
            let shift: f64 = row.iter().zip(&lo).map(|(a, l)| a * l).sum();
            raw.push((row.clone(), rhs - shift, true));
        }
        for (row, rhs) in &lp.ineq_constraints {
            let shift: f64 = row.iter().zip(&lo).map(|(a, l)| a * l).sum();
            raw.push((row.clone(), rhs - shift, false));
        }
        for (j, &(l, h)) in lp.var_bounds.iter().enumerate() {
            if h.is_finite() && h > l {
                let mut row = vec![0.0; n];
                row[j] = 1.0;
                raw.push((row, h - l, false));
            }
            // h == l pins the variable; the shifted variable keeps an
            // implicit upper bound row of rhs 0.
            if h == l {
                let mut row = vec![0.0; n];
                row[j] = 1.0;
                raw.push((row, 0.0, false));
            }
        }

        let m = raw.len();
        // Column layout: structural | slack/surplus | artificial | rhs.
        let n_slack = m; // one slack or surplus per row except equalities
        let mut rows = Vec::with_capacity(m);
        let mut basis = vec![usize::MAX; m];
        let art_start = n + n_slack;
        let mut n_art = 0usize;
        // First pass to count artificials so column width is known.
        let mut needs_art = vec![false; m];
        for (i, (_, rhs, is_eq)) in raw.iter().enumerate() {
            let neg = *rhs < 0.0;
            // <= with nonneg rhs gets a slack basis; everything else an artificial.
            needs_art[i] = *is_eq || neg;
            if needs_art[i] {
                n_art += 1;
            }
        }
        let n_cols = n + n_slack + n_art;
        let mut art_idx = art_start;
        for (i, (mut coef, mut rhs, is_eq)) in raw.into_iter().enumerate() {
            let neg = rhs < 0.0;
            if neg {
                for a in &mut coef {
                    *a = -*a;
                }
                rhs = -rhs;
            }
            let mut row = vec![0.0; n_cols + 1];
            row[..n].copy_from_slice(&coef);
            row[n_cols] = rhs;
            if !is_eq {
                // slack (+1) for <=, surplus (-1) for the negated >= row
                row[n + i] = if neg { -1.0 } else { 1.0 };
            }
            if needs_art[i] {
                row[art_idx] = 1.0;
                basis[i] = art_idx;
                art_idx += 1;
            } else {
                basis[i] = n + i;
            }
            rows.push(row);
        }

        let cap = 10 * (lp.n_vars + lp.n_constraints()).pow(2) + 100;
        Ok(Self {
            rows,
            basis,
            n_struct: n,
            n_cols,
            art_start,
            pivots_left: cap,
        })
    }

    /// Minimizes the sum of artificials. Returns false when the optimum is
    /// positive beyond tolerance (infeasible).
    fn phase_one(&mut self) -> Result<bool> {
        let mut cost = vec![0.0; self.n_cols];
        for c in cost.iter_mut().skip(self.art_start) {
            *c = 1.0;
        }
        let obj = self.run_simplex(&cost, false)?;
        if obj > FEAS_TOL {
            return Ok(false);
        }
        self.evict_artificials();
        Ok(true)
    }

    /// Minimizes `objective` (over structural columns). Returns false when
    /// unbounded.
    fn phase_two(&mut self, objective: &[f64]) -> Result<bool> {
        let mut cost = vec![0.0; self.n_cols];
        cost[..self.n_struct].copy_from_slice(objective);
        match self.run_simplex(&cost, true) {
            Ok(_) => Ok(true),
            Err(Error::Domain(_)) => Ok(false), // internal unbounded marker
            Err(e) => Err(e),
        }
    }

    /// Bland's rule simplex on the current tableau. Returns the objective
    /// value. Signals unboundedness with a Domain error (mapped by callers).
    fn run_simplex(&mut self, cost: &[f64], forbid_artificials: bool) -> Result<f64> {
        loop {
            // Reduced costs via the basic cost vector.
            let mut red = cost.to_vec();
            for (i, &b) in self.basis.iter().enumerate() {
                let cb = cost[b];
                if cb != 0.0 {
                    for j in 0..self.n_cols {
                        red[j] -= cb * self.rows[i][j];
                    }
                }
            }
            // Bland: entering = smallest improving index.
            let mut entering = None;
            for (j, &r) in red.iter().enumerate() {
                if forbid_artificials && j >= self.art_start {
                    continue;
                }
                if self.basis.contains(&j) {
                    continue;
                }
                if r < -PIVOT_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(enter) = entering else {
                let obj: f64 = self
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| cost[b] * self.rows[i][self.n_cols])
                    .sum();
                return Ok(obj);
            };
            // Ratio test; Bland tie-break on the smallest basis index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a > PIVOT_TOL {
                    let ratio = self.rows[i][self.n_cols] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_TOL
                                || ((ratio - lr).abs() <= PIVOT_TOL
                                    && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((li, _)) = leave else {
                return Err(Error::Domain("unbounded".into()));
            };
            if self.pivots_left == 0 {
                return Err(Error::SolverStall {
                    pivots: 10 * (self.n_struct + self.rows.len()).pow(2) + 100,
                });
            }
            self.pivots_left -= 1;
            self.pivot(li, enter);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        for v in &mut self.rows[row] {
            *v /= piv;
        }
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor != 0.0 {
                for j in 0..=self.n_cols {
                    self.rows[i][j] -= factor * self.rows[row][j];
                }
            }
        }
        self.basis[row] = col;
    }

    /// Pivots zero-valued artificials out of the basis where possible. Rows
    /// whose only nonzeros are artificial columns are redundant (all-zero
    /// constraint rows accepted in phase one) and are left in place.
    fn evict_artificials(&mut self) {
        for i in 0..self.rows.len() {
            if self.basis[i] < self.art_start {
                continue;
            }
            if let Some(col) = (0..self.art_start)
                .find(|&j| !self.basis.contains(&j) && self.rows[i][j].abs() > PIVOT_TOL)
            {
                self.pivot(i, col);
            }
        }
    }

    fn extract(&self, lp: &LinearProgram) -> Vec<f64> {
        let mut x: Vec<f64> = lp.var_bounds.iter().map(|b| b.0).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = lp.var_bounds[b].0 + self.rows[i][self.n_cols];
            }
        }
        for (xi, &(lo, hi)) in x.iter_mut().zip(&lp.var_bounds) {
            *xi = xi.clamp(lo, hi.min(f64::INFINITY));
        }
        x
    }
}
