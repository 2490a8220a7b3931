//! Shared fixtures (the two worked numerical examples) and independent
//! oracles (vertex enumeration for tiny LPs, exhaustive grid enumeration
//! for small bound problems) used by the integration tests.

#![allow(dead_code)]

use sace::bounds::{observable_from_truth, ordering_pairs};
use sace::copula::{joint_pmf, CopulaFamily, CopulaSpec, JointSurvivalPMF};
use sace::linprog::LinearProgram;
use sace::model::{Arm, FollowUpSchedule, GroundTruth, LargeSampleInput, MarginalSurvival, RiskTable};

pub fn schedule_k4_t2() -> FollowUpSchedule {
    FollowUpSchedule::new(vec![0.0, 1.0, 2.0, 3.0, 4.0], 2).unwrap()
}

fn truth(
    treated_pi: Vec<f64>,
    control_pi: Vec<f64>,
    q_treated: Vec<Vec<f64>>,
    q_control: Vec<Vec<f64>>,
) -> GroundTruth {
    let schedule = schedule_k4_t2();
    let marginals = MarginalSurvival::new(treated_pi, control_pi).unwrap();
    let spec = CopulaSpec::from_spearman(CopulaFamily::Plackett, 0.6).unwrap();
    let joint = joint_pmf(&marginals, &spec, &schedule).unwrap();
    let q = RiskTable::new(2, 4, q_treated, q_control).unwrap();
    GroundTruth::new(schedule, joint, q).unwrap()
}

/// First worked example: K=4, T=2, Plackett coupling at rho = 0.6.
pub fn example1_truth() -> GroundTruth {
    truth(
        vec![0.15, 0.25, 0.20, 0.25, 0.15],
        vec![0.15, 0.15, 0.30, 0.15, 0.25],
        vec![
            vec![0.80, 0.75, 0.75, 0.70, 0.65],
            vec![0.75, 0.70, 0.70, 0.65, 0.60],
            vec![0.65, 0.60, 0.60, 0.55, 0.50],
        ],
        vec![
            vec![0.60, 0.55, 0.45],
            vec![0.55, 0.50, 0.40],
            vec![0.50, 0.45, 0.35],
            vec![0.50, 0.45, 0.35],
            vec![0.45, 0.40, 0.30],
        ],
    )
}

/// Second worked example (monotonicity violated in the other direction).
/// The control risk at (t1=4, t0=3) is 0.30: the printed 0.20 is a typo
/// that breaks the table's own arithmetic and every downstream figure.
pub fn example2_truth() -> GroundTruth {
    truth(
        vec![0.30, 0.40, 0.15, 0.10, 0.05],
        vec![0.40, 0.30, 0.15, 0.10, 0.05],
        vec![
            vec![0.75, 0.75, 0.75, 0.70, 0.65],
            vec![0.70, 0.70, 0.70, 0.65, 0.60],
            vec![0.60, 0.60, 0.60, 0.55, 0.50],
        ],
        vec![
            vec![0.70, 0.55, 0.40],
            vec![0.70, 0.55, 0.40],
            vec![0.55, 0.40, 0.25],
            vec![0.50, 0.35, 0.20],
            vec![0.45, 0.30, 0.15],
        ],
    )
}

/// Exact observable distribution induced by the first example.
pub fn example1_input() -> LargeSampleInput {
    observable_from_truth(&example1_truth()).unwrap()
}

pub fn example2_input() -> LargeSampleInput {
    observable_from_truth(&example2_truth()).unwrap()
}

/// Dense linear solve by Gaussian elimination with partial pivoting;
/// `None` when the system is numerically singular.
#[allow(clippy::needless_range_loop)]
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(ai, xi)| ai * xi).sum()
}

fn lp_feasible_at(lp: &LinearProgram, x: &[f64], tol: f64) -> bool {
    for (row, rhs) in &lp.eq_constraints {
        if (dot(row, x) - rhs).abs() > tol {
            return false;
        }
    }
    for (row, rhs) in &lp.ineq_constraints {
        if dot(row, x) > rhs + tol {
            return false;
        }
    }
    lp.var_bounds
        .iter()
        .zip(x)
        .all(|(&(lo, hi), &xi)| xi >= lo - tol && xi <= hi + tol)
}

fn combinations(pool: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..k).collect();
    if k > pool {
        return out;
    }
    loop {
        out.push(combo.clone());
        // Advance to the next lexicographic combination.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] != i + pool - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        combo[i] += 1;
        for j in i + 1..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

/// Objective range over all vertices of the feasible polytope, found by
/// activating every full-rank set of n constraints that includes all
/// equalities. `None` when no feasible vertex exists.
pub fn vertex_enumeration_bounds(lp: &LinearProgram) -> Option<(f64, f64)> {
    let n = lp.n_vars;
    let mut optional: Vec<(Vec<f64>, f64)> = Vec::new();
    for (row, rhs) in &lp.ineq_constraints {
        optional.push((row.clone(), *rhs));
    }
    for i in 0..n {
        let (lo, hi) = lp.var_bounds[i];
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        if lo.is_finite() {
            optional.push((e.clone(), lo));
        }
        if hi.is_finite() {
            optional.push((e, hi));
        }
    }
    let n_eq = lp.eq_constraints.len();
    assert!(n_eq <= n, "over-determined active set");
    let mut best: Option<(f64, f64)> = None;
    for combo in combinations(optional.len(), n - n_eq) {
        let mut a: Vec<Vec<f64>> = lp.eq_constraints.iter().map(|(r, _)| r.clone()).collect();
        let mut b: Vec<f64> = lp.eq_constraints.iter().map(|(_, v)| *v).collect();
        for &i in &combo {
            a.push(optional[i].0.clone());
            b.push(optional[i].1);
        }
        let Some(x) = solve_linear(a, b) else { continue };
        if !lp_feasible_at(lp, &x, 1e-7) {
            continue;
        }
        let val = dot(&lp.objective, &x);
        best = Some(match best {
            None => (val, val),
            Some((lo, hi)) => (lo.min(val), hi.max(val)),
        });
    }
    best
}

/// The 0.05 grid used by the exhaustive enumeration oracle.
pub const GRID_STEP: f64 = 0.05;

fn grid_values() -> Vec<f64> {
    (0..=20).map(|i| f64::from(i) * GRID_STEP).collect()
}

/// Exhaustive enumeration oracle on the K=2, T=1 shape. In each mixture
/// group (a treated row t1 or a control column t0) two of the three risks
/// are enumerated over the 0.05 grid while the remaining risk — or a tied
/// block of risks, covering vertices where ordering constraints bind — is
/// solved exactly from the group's mixture equality. Every retained point
/// therefore satisfies all constraints exactly, so the enumeration range is
/// contained in the LP range by construction, and the comparison measures
/// how far the grid restriction sits inside it. The two arms decouple, so
/// the search is per arm with per-group pre-filtering.
pub fn grid_enumeration_bounds(input: &LargeSampleInput, pmf: &JointSurvivalPMF) -> (f64, f64) {
    let schedule = &input.schedule;
    assert_eq!(schedule.k(), 2);
    assert_eq!(schedule.t(), 1);
    let mut p_as = 0.0;
    for t1 in 1..=2 {
        for t0 in 1..=2 {
            p_as += pmf.get(t1, t0);
        }
    }
    assert!(p_as > 1e-9);
    let grid = grid_values();

    // One arm: two groups of three variables (rows t1=1,2 for the treated
    // arm; columns t0=1,2 for the control arm).
    let arm_range = |arm: Arm| -> (f64, f64) {
        let (own, pairs) = match arm {
            Arm::Treated => (Arm::Treated, ordering_pairs(schedule, Arm::Treated)),
            Arm::Control => (Arm::Control, ordering_pairs(schedule, Arm::Control)),
        };
        // p coefficient and objective weight of variable (g, j): for the
        // treated arm (g, j) = (t1 - 1, t0); for control (g, j) = (t0 - 1, t1).
        let cell = |g: usize, j: usize| match own {
            Arm::Treated => (g + 1, j),
            Arm::Control => (j, g + 1),
        };
        let p = |g: usize, j: usize| {
            let (t1, t0) = cell(g, j);
            pmf.get(t1, t0)
        };
        let obj = |g: usize, j: usize| {
            let (t1, t0) = cell(g, j);
            if t1 >= 1 && t0 >= 1 {
                pmf.get(t1, t0) / p_as
            } else {
                0.0
            }
        };
        let rhs = |g: usize| {
            let t = g + 1;
            input.marginals.pi(own, t) * input.risks.alpha(own, t)
        };

        // Ordering pairs in (group, j) coordinates, split into within-group
        // (applied during row enumeration) and cross-group.
        let to_gj = |(t1, t0): (usize, usize)| match own {
            Arm::Treated => (t1 - 1, t0),
            Arm::Control => (t0 - 1, t1),
        };
        let pairs: Vec<((usize, usize), (usize, usize))> =
            pairs.iter().map(|&(a, b)| (to_gj(a), to_gj(b))).collect();

        // Per-group candidate rows: every way of fixing grid values and
        // solving the rest (a single coordinate or a tied block) from the
        // group's mixture equality, filtered to [0, 1] and the group's own
        // ordering constraints.
        let mut cands: Vec<Vec<([f64; 3], f64)>> = Vec::new();
        for g in 0..2 {
            let pg = [p(g, 0), p(g, 1), p(g, 2)];
            let mass: f64 = pg.iter().sum();
            let mut raw: Vec<[f64; 3]> = Vec::new();
            // One coordinate solved, the other two on the grid.
            for free in 0..3 {
                if pg[free] <= 1e-12 {
                    continue;
                }
                let (a, b) = match free {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                for &qa in &grid {
                    for &qb in &grid {
                        let qf = (rhs(g) - pg[a] * qa - pg[b] * qb) / pg[free];
                        let mut q = [0.0; 3];
                        q[a] = qa;
                        q[b] = qb;
                        q[free] = qf;
                        raw.push(q);
                    }
                }
            }
            // A tied pair solved, the remaining coordinate on the grid.
            for fixed in 0..3 {
                let (a, b) = match fixed {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let pab = pg[a] + pg[b];
                if pab <= 1e-12 {
                    continue;
                }
                for &qf in &grid {
                    let v = (rhs(g) - pg[fixed] * qf) / pab;
                    let mut q = [0.0; 3];
                    q[fixed] = qf;
                    q[a] = v;
                    q[b] = v;
                    raw.push(q);
                }
            }
            // All three tied.
            raw.push([rhs(g) / mass; 3]);

            let mut list = Vec::new();
            for q in raw {
                if q.iter().any(|&x| !(-1e-9..=1.0 + 1e-9).contains(&x)) {
                    continue;
                }
                if pairs.iter().any(|&((ga, ja), (gb, jb))| {
                    ga == g && gb == g && q[ja] > q[jb] + 1e-9
                }) {
                    continue;
                }
                let o: f64 = (0..3).map(|j| obj(g, j) * q[j]).sum();
                list.push((q, o));
            }
            cands.push(list);
        }
        let cross: Vec<((usize, usize), (usize, usize))> = pairs
            .into_iter()
            .filter(|&((ga, _), (gb, _))| ga != gb)
            .collect();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (qa, oa) in &cands[0] {
            for (qb, ob) in &cands[1] {
                let rows = [qa, qb];
                if cross.iter().any(|&((ga, ja), (gb, jb))| {
                    rows[ga][ja] > rows[gb][jb] + 1e-12
                }) {
                    continue;
                }
                let total = oa + ob;
                lo = lo.min(total);
                hi = hi.max(total);
            }
        }
        (lo, hi)
    };

    let (lo1, hi1) = arm_range(Arm::Treated);
    let (lo0, hi0) = arm_range(Arm::Control);
    (lo1 - hi0, hi1 - lo0)
}
