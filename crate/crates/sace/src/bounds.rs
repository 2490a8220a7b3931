//! Builds the SACE linear program from the mixture equalities and
//! ranked-average-score ordering constraints, computes large-sample bounds,
//! sweeps the copula association, and provides the coarse single-time-point
//! comparison bounds, the degenerate survivor contrast, synthetic
//! ground-truth evaluation, and stratified combination.

use crate::copula::{joint_pmf, CopulaFamily, CopulaSpec, JointSurvivalPMF, RHO_MAX};
use crate::error::{Error, Result};
use crate::linprog::{feasible, solve, LinearProgram, LpStatus, Sense};
use crate::model::{Arm, FollowUpSchedule, GroundTruth, LargeSampleInput, MarginalSurvival, OutcomeRisk};

/// Below this always-survivor mass the SACE objective is undefined.
pub const DEGENERATE_MASS: f64 = 1e-12;

/// Grid step of the always-survivor-proportion sweep in [`zr_bounds`].
const ZR_GRID_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsStatus {
    Ok,
    Infeasible,
    Degenerate,
}

/// A (lower, upper) SACE bound pair with the association it was computed at.
#[derive(Debug, Clone, Copy)]
pub struct BoundsResult {
    pub lower: f64,
    pub upper: f64,
    /// Spearman correlation used; NaN for association-free bounds.
    pub rho: f64,
    /// Native parameter as reported in tables: `log(phi)` for Plackett, `r`
    /// for Gaussian.
    pub param: f64,
    pub status: BoundsStatus,
}

impl BoundsResult {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// One sweep row plus the envelope over all feasible rows.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub result: BoundsResult,
    /// Bound width relative to the coarse comparison bounds on the same
    /// input; `None` when the row is not ok.
    pub relative_length: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub envelope: BoundsResult,
    /// The comparison bounds used as the relative-length denominator.
    pub zr: BoundsResult,
}

/// The SACE LP over fine-stratum risks, together with the index bookkeeping
/// needed to interpret its variables.
#[derive(Debug, Clone)]
pub struct SaceLp {
    pub lp: LinearProgram,
    pub always_survivor_mass: f64,
    t_first: usize,
    k: usize,
}

impl SaceLp {
    /// Index of `q_{t1,t0,1}` (defined for `t1 >= T`).
    pub fn treated_index(&self, t1: usize, t0: usize) -> usize {
        debug_assert!(t1 >= self.t_first);
        (t1 - self.t_first) * (self.k + 1) + t0
    }

    /// Index of `q_{t1,t0,0}` (defined for `t0 >= T`).
    pub fn control_index(&self, t1: usize, t0: usize) -> usize {
        debug_assert!(t0 >= self.t_first);
        let n_treated = (self.k + 1 - self.t_first) * (self.k + 1);
        n_treated + t1 * (self.k + 1 - self.t_first) + (t0 - self.t_first)
    }
}

/// Ordering-constraint pairs for one arm: `q[a] <= q[b]` for each returned
/// `(a, b)` where `a = (t1, t0)` and `b = (t1', t0')`.
///
/// For the treated arm the pair condition is `t1 >= t1' >= T` together with
/// `s_t1 + s_t0 >= s_t1' + s_t0'`; for the control arm the roles of the two
/// indices swap. Pairs are generated exhaustively, including transitively
/// redundant ones.
pub fn ordering_pairs(
    schedule: &FollowUpSchedule,
    arm: Arm,
) -> Vec<((usize, usize), (usize, usize))> {
    let k = schedule.k();
    let t_first = schedule.t();
    let s = schedule.times();
    let mut pairs = Vec::new();
    match arm {
        Arm::Treated => {
            for t1 in t_first..=k {
                for t1p in t_first..=t1 {
                    for t0 in 0..=k {
                        for t0p in 0..=k {
                            if (t1, t0) != (t1p, t0p) && s[t1] + s[t0] >= s[t1p] + s[t0p] {
                                pairs.push(((t1, t0), (t1p, t0p)));
                            }
                        }
                    }
                }
            }
        }
        Arm::Control => {
            for t0 in t_first..=k {
                for t0p in t_first..=t0 {
                    for t1 in 0..=k {
                        for t1p in 0..=k {
                            if (t1, t0) != (t1p, t0p) && s[t1] + s[t0] >= s[t1p] + s[t0p] {
                                pairs.push(((t1, t0), (t1p, t0p)));
                            }
                        }
                    }
                }
            }
        }
    }
    pairs
}

/// Builds the SACE LP: variables `q_{t1,t0,1}` for `T<=t1<=K, 0<=t0<=K` and
/// `q_{t1,t0,0}` for `0<=t1<=K, T<=t0<=K` in `[0,1]`, one mixture equality
/// per observed `(arm, t >= T)` cell, the ordering inequalities, and the
/// always-survivor-weighted objective.
pub fn build_sace_lp(
    schedule: &FollowUpSchedule,
    pmf: &JointSurvivalPMF,
    marginals: &MarginalSurvival,
    risks: &OutcomeRisk,
) -> Result<SaceLp> {
    let k = schedule.k();
    let t_first = schedule.t();
    let p_as = pmf.always_survivor_mass(t_first);
    if p_as < DEGENERATE_MASS {
        return Err(Error::Degenerate(
            "no always survivors at this coupling".into(),
        ));
    }
    let n_surv = k + 1 - t_first;
    let n_vars = 2 * n_surv * (k + 1);
    let shell = SaceLp {
        lp: LinearProgram {
            n_vars,
            objective: vec![0.0; n_vars],
            var_bounds: vec![(0.0, 1.0); n_vars],
            eq_constraints: Vec::new(),
            ineq_constraints: Vec::new(),
        },
        always_survivor_mass: p_as,
        t_first,
        k,
    };
    let mut lp = shell.lp.clone();

    for t1 in t_first..=k {
        for t0 in t_first..=k {
            let w = pmf.get(t1, t0) / p_as;
            lp.objective[shell.treated_index(t1, t0)] += w;
            lp.objective[shell.control_index(t1, t0)] -= w;
        }
    }
    // Mixture equalities, observed treated cells.
    for t1 in t_first..=k {
        let mut row = vec![0.0; n_vars];
        for t0 in 0..=k {
            row[shell.treated_index(t1, t0)] = pmf.get(t1, t0);
        }
        let rhs = marginals.pi(Arm::Treated, t1) * risks.alpha(Arm::Treated, t1);
        lp.eq_constraints.push((row, rhs));
    }
    // Mixture equalities, observed control cells.
    for t0 in t_first..=k {
        let mut row = vec![0.0; n_vars];
        for t1 in 0..=k {
            row[shell.control_index(t1, t0)] = pmf.get(t1, t0);
        }
        let rhs = marginals.pi(Arm::Control, t0) * risks.alpha(Arm::Control, t0);
        lp.eq_constraints.push((row, rhs));
    }
    // Ordering inequalities for both arms.
    for (a, b) in ordering_pairs(schedule, Arm::Treated) {
        let mut row = vec![0.0; n_vars];
        row[shell.treated_index(a.0, a.1)] += 1.0;
        row[shell.treated_index(b.0, b.1)] -= 1.0;
        lp.ineq_constraints.push((row, 0.0));
    }
    for (a, b) in ordering_pairs(schedule, Arm::Control) {
        let mut row = vec![0.0; n_vars];
        row[shell.control_index(a.0, a.1)] += 1.0;
        row[shell.control_index(b.0, b.1)] -= 1.0;
        lp.ineq_constraints.push((row, 0.0));
    }
    Ok(SaceLp { lp, ..shell })
}

/// Min and max of the objective, or `None` when the LP is infeasible.
pub(crate) fn solve_lp_bounds(lp: &LinearProgram) -> Result<Option<(f64, f64)>> {
    let lo = solve(lp, Sense::Min)?;
    if lo.status != LpStatus::Optimal {
        return Ok(None);
    }
    let hi = solve(lp, Sense::Max)?;
    if hi.status != LpStatus::Optimal {
        return Ok(None);
    }
    Ok(Some((lo.value, hi.value)))
}

/// Large-sample SACE bounds at a fixed coupling.
pub fn large_sample_bounds(input: &LargeSampleInput, spec: &CopulaSpec) -> Result<BoundsResult> {
    let rho = spec.spearman();
    let param = spec.report_param();
    let pmf = joint_pmf(&input.marginals, spec, &input.schedule)?;
    let sace_lp = match build_sace_lp(&input.schedule, &pmf, &input.marginals, &input.risks) {
        Ok(l) => l,
        Err(Error::Degenerate(_)) => {
            return Ok(BoundsResult {
                lower: f64::NAN,
                upper: f64::NAN,
                rho,
                param,
                status: BoundsStatus::Degenerate,
            })
        }
        Err(e) => return Err(e),
    };
    match solve_lp_bounds(&sace_lp.lp)? {
        Some((lower, upper)) => Ok(BoundsResult {
            lower,
            upper,
            rho,
            param,
            status: BoundsStatus::Ok,
        }),
        None => Ok(BoundsResult {
            lower: f64::NAN,
            upper: f64::NAN,
            rho,
            param,
            status: BoundsStatus::Infeasible,
        }),
    }
}

/// Sweeps the Spearman grid and reports per-row bounds, relative lengths
/// against the coarse comparison bounds, and the envelope over feasible rows.
pub fn sweep(input: &LargeSampleInput, family: CopulaFamily, rho_grid: &[f64]) -> Result<SweepResult> {
    if rho_grid.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    for (i, &rho) in rho_grid.iter().enumerate() {
        if !(0.0..=RHO_MAX).contains(&rho) {
            return Err(Error::Domain(format!("grid value {rho} outside [0, {RHO_MAX}]")));
        }
        if rho_grid[..i].contains(&rho) {
            return Err(Error::InvalidInput(format!("duplicate grid value {rho}")));
        }
    }
    let zr = zr_bounds(input)?;
    let zr_width = zr.width();
    let mut rows = Vec::with_capacity(rho_grid.len());
    let mut envelope: Option<(f64, f64)> = None;
    for &rho in rho_grid {
        let spec = CopulaSpec::from_spearman(family, rho)?;
        let result = large_sample_bounds(input, &spec)?;
        let relative_length = match result.status {
            BoundsStatus::Ok => {
                envelope = Some(match envelope {
                    None => (result.lower, result.upper),
                    Some((l, u)) => (l.min(result.lower), u.max(result.upper)),
                });
                (zr_width > 0.0).then(|| result.width() / zr_width)
            }
            _ => None,
        };
        rows.push(SweepRow {
            result,
            relative_length,
        });
    }
    let Some((lower, upper)) = envelope else {
        return Err(Error::AllInfeasible);
    };
    Ok(SweepResult {
        rows,
        envelope: BoundsResult {
            lower,
            upper,
            rho: f64::NAN,
            param: f64::NAN,
            status: BoundsStatus::Ok,
        },
        zr,
    })
}

/// Coarse observables at the measurement time: survivor probabilities and
/// bad-outcome masses per arm.
fn coarse_observables(input: &LargeSampleInput) -> (f64, f64, f64, f64) {
    let t_first = input.schedule.t();
    let k = input.schedule.k();
    let mut a = 0.0;
    let mut b = 0.0;
    let mut m1 = 0.0;
    let mut m0 = 0.0;
    for t in t_first..=k {
        let p1 = input.marginals.pi(Arm::Treated, t);
        let p0 = input.marginals.pi(Arm::Control, t);
        a += p1;
        b += p0;
        m1 += p1 * input.risks.alpha(Arm::Treated, t);
        m0 += p0 * input.risks.alpha(Arm::Control, t);
    }
    (a, b, m1, m0)
}

/// Bounds at a single always-survivor proportion of the coarse four-variable
/// program: variables `(q_AS1, q_P1, q_AS0, q_H0)`.
fn zr_bounds_at(pi_as: f64, a: f64, b: f64, m1: f64, m0: f64) -> Result<Option<(f64, f64)>> {
    let lp = LinearProgram {
        n_vars: 4,
        objective: vec![1.0, 0.0, -1.0, 0.0],
        var_bounds: vec![(0.0, 1.0); 4],
        eq_constraints: vec![
            (vec![pi_as, a - pi_as, 0.0, 0.0], m1),
            (vec![0.0, 0.0, pi_as, b - pi_as], m0),
        ],
        ineq_constraints: vec![
            (vec![1.0, -1.0, 0.0, 0.0], 0.0),
            (vec![0.0, 0.0, 1.0, -1.0], 0.0),
        ],
    };
    solve_lp_bounds(&lp)
}

/// Comparison bounds using only the binary survival status at the
/// measurement time, swept over the Frechet range of the always-survivor
/// proportion.
pub fn zr_bounds(input: &LargeSampleInput) -> Result<BoundsResult> {
    let (a, b, m1, m0) = coarse_observables(input);
    zr_bounds_from_coarse(a, b, m1, m0)
}

/// Comparison bounds directly from the coarse observables: survival
/// probabilities `a`, `b` and bad-outcome masses `m1`, `m0`.
pub fn zr_bounds_from_coarse(a: f64, b: f64, m1: f64, m0: f64) -> Result<BoundsResult> {
    if a.min(b) < DEGENERATE_MASS {
        return Err(Error::Degenerate("no survivors in one arm".into()));
    }
    let lo_f = (a + b - 1.0).max(0.0);
    let hi_f = a.min(b);
    let mut grid: Vec<f64> = Vec::new();
    let mut x = lo_f;
    while x < hi_f {
        grid.push(x);
        x += ZR_GRID_STEP;
    }
    grid.push(hi_f);
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for &pi_as in &grid {
        if let Some((lo, hi)) = zr_bounds_at(pi_as, a, b, m1, m0)? {
            lower = lower.min(lo);
            upper = upper.max(hi);
        }
    }
    if !lower.is_finite() {
        return Ok(BoundsResult {
            lower: f64::NAN,
            upper: f64::NAN,
            rho: f64::NAN,
            param: f64::NAN,
            status: BoundsStatus::Infeasible,
        });
    }
    Ok(BoundsResult {
        lower,
        upper,
        rho: f64::NAN,
        param: f64::NAN,
        status: BoundsStatus::Ok,
    })
}

/// The naive survivor contrast `E[Y | S>=s_T, D=1] - E[Y | S>=s_T, D=0]`,
/// which point-identifies the SACE under monotonicity exactly when the two
/// survivor probabilities coincide.
#[derive(Debug, Clone, Copy)]
pub struct SurvivorContrast {
    pub value: f64,
    /// True when `|P(S(1)>=s_T) - P(S(0)>=s_T)| < 1e-9`.
    pub point_identified: bool,
}

pub fn survivor_contrast(input: &LargeSampleInput) -> Result<SurvivorContrast> {
    let (a, b, m1, m0) = coarse_observables(input);
    if a < DEGENERATE_MASS || b < DEGENERATE_MASS {
        return Err(Error::Degenerate("zero survivors in an arm".into()));
    }
    Ok(SurvivorContrast {
        value: m1 / a - m0 / b,
        point_identified: (a - b).abs() < 1e-9,
    })
}

/// The SACE implied by a fully specified ground truth.
pub fn true_sace(truth: &GroundTruth) -> Result<f64> {
    let t_first = truth.schedule.t();
    let k = truth.schedule.k();
    let p_as = truth.joint.always_survivor_mass(t_first);
    if p_as < DEGENERATE_MASS {
        return Err(Error::Degenerate("ground truth has no always survivors".into()));
    }
    let mut num = 0.0;
    for t1 in t_first..=k {
        for t0 in t_first..=k {
            num += (truth.q.q(Arm::Treated, t1, t0) - truth.q.q(Arm::Control, t1, t0))
                * truth.joint.get(t1, t0);
        }
    }
    Ok(num / p_as)
}

/// The observable large-sample distribution induced by a ground truth.
pub fn observable_from_truth(truth: &GroundTruth) -> Result<LargeSampleInput> {
    let t_first = truth.schedule.t();
    let k = truth.schedule.k();
    let marginals = truth.joint.marginals()?;
    let joint_y1_treated: Vec<f64> = (t_first..=k)
        .map(|t1| {
            (0..=k)
                .map(|t0| truth.joint.get(t1, t0) * truth.q.q(Arm::Treated, t1, t0))
                .sum()
        })
        .collect();
    let joint_y1_control: Vec<f64> = (t_first..=k)
        .map(|t0| {
            (0..=k)
                .map(|t1| truth.joint.get(t1, t0) * truth.q.q(Arm::Control, t1, t0))
                .sum()
        })
        .collect();
    let risks = crate::model::risks_from_joint(
        &truth.schedule,
        &marginals,
        &joint_y1_treated,
        &joint_y1_control,
    )?;
    LargeSampleInput::new(truth.schedule.clone(), marginals, risks)
}

/// Weighted combination of per-stratum bounds with weights proportional to
/// always-survivor mass times stratum size.
pub fn stratified_combine(per_stratum: &[(BoundsResult, f64)]) -> Result<BoundsResult> {
    if per_stratum.is_empty() {
        return Err(Error::InvalidInput("no strata to combine".into()));
    }
    let mut wsum = 0.0;
    let mut lower = 0.0;
    let mut upper = 0.0;
    for (bounds, w) in per_stratum {
        if *w < 0.0 {
            return Err(Error::InvalidInput(format!("negative stratum weight {w}")));
        }
        if bounds.status != BoundsStatus::Ok {
            return Err(Error::InvalidInput(
                "cannot combine a non-ok stratum bound".into(),
            ));
        }
        wsum += w;
        lower += w * bounds.lower;
        upper += w * bounds.upper;
    }
    if wsum <= 0.0 {
        return Err(Error::InvalidInput("all stratum weights are zero".into()));
    }
    Ok(BoundsResult {
        lower: lower / wsum,
        upper: upper / wsum,
        rho: f64::NAN,
        param: f64::NAN,
        status: BoundsStatus::Ok,
    })
}

/// Feasibility of the SACE LP at the given coupling (the compatible-region
/// membership test used by the posterior sampler).
pub fn sace_lp_feasible(
    schedule: &FollowUpSchedule,
    pmf: &JointSurvivalPMF,
    marginals: &MarginalSurvival,
    risks: &OutcomeRisk,
) -> Result<bool> {
    match build_sace_lp(schedule, pmf, marginals, risks) {
        Ok(sace_lp) => feasible(&sace_lp.lp),
        Err(Error::Degenerate(_)) => Ok(false),
        Err(e) => Err(e),
    }
}
