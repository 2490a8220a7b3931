//! Domain types for the observable data of a truncation-by-death study:
//! the follow-up grid, per-arm survival distributions, conditional outcome
//! risks, raw count data, and synthetic ground truths.

use crate::copula::JointSurvivalPMF;
use crate::error::{Error, Result};

/// Tolerance below which a marginal survival vector is silently renormalized
/// to sum to one. Larger deviations are input errors.
pub const MARGINAL_SUM_TOL: f64 = 1e-10;

/// Treatment arm of a two-arm randomized study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Treated,
    Control,
}

/// The discrete follow-up time grid `times[0..=K]` with `times[0] = 0`,
/// and the index `T` of the follow-up at which the outcome is measured.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowUpSchedule {
    times: Vec<f64>,
    measurement_index: usize,
}

impl FollowUpSchedule {
    /// Builds a schedule, checking that times start at zero and strictly
    /// increase, and that `1 <= T <= K-1`.
    pub fn new(times: Vec<f64>, measurement_index: usize) -> Result<Self> {
        if times.len() < 3 {
            return Err(Error::InvalidInput(
                "schedule.times: need at least three time points".into(),
            ));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidInput(
                "schedule.times[0]: first time point must be 0".into(),
            ));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidInput(
                    "schedule.times: time points must be strictly increasing".into(),
                ));
            }
        }
        let k = times.len() - 1;
        if measurement_index == 0 {
            return Err(Error::InvalidInput(
                "schedule.measurement_index: T must be >= 1".into(),
            ));
        }
        if measurement_index >= k {
            return Err(Error::InvalidInput(
                "schedule.measurement_index: T must be < K".into(),
            ));
        }
        Ok(Self {
            times,
            measurement_index,
        })
    }

    /// Number of follow-ups `K` (so there are `K+1` survival values).
    pub fn k(&self) -> usize {
        self.times.len() - 1
    }

    /// Measurement index `T`.
    pub fn t(&self) -> usize {
        self.measurement_index
    }

    /// Time value `s_t`.
    pub fn time(&self, t: usize) -> f64 {
        self.times[t]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of survivor indices `T..=K`.
    pub fn n_survivor_times(&self) -> usize {
        self.k() + 1 - self.t()
    }
}

/// Per-arm marginal survival PMFs `pi[t] = P{S(d) = s_t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSurvival {
    treated: Vec<f64>,
    control: Vec<f64>,
}

impl MarginalSurvival {
    /// Validates entries in `[0,1]` and unit sum (renormalizing deviations
    /// below [`MARGINAL_SUM_TOL`]).
    pub fn new(treated: Vec<f64>, control: Vec<f64>) -> Result<Self> {
        let treated = normalize_pmf(treated, "marginals.treated")?;
        let control = normalize_pmf(control, "marginals.control")?;
        if treated.len() != control.len() {
            return Err(Error::InvalidInput(
                "marginals: treated and control must have the same length".into(),
            ));
        }
        Ok(Self { treated, control })
    }

    pub fn pi(&self, arm: Arm, t: usize) -> f64 {
        self.arm(arm)[t]
    }

    pub fn arm(&self, arm: Arm) -> &[f64] {
        match arm {
            Arm::Treated => &self.treated,
            Arm::Control => &self.control,
        }
    }

    pub fn len(&self) -> usize {
        self.treated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.treated.is_empty()
    }

    /// Cumulative distribution `F_d(s_t)`, with `F_d(s_{-1}) = 0` encoded by
    /// calling `cdf(arm, t)` for `t` in `0..=K`.
    pub fn cdf(&self, arm: Arm) -> Vec<f64> {
        let mut acc = 0.0;
        self.arm(arm)
            .iter()
            .map(|p| {
                acc += p;
                acc.min(1.0)
            })
            .collect()
    }
}

fn normalize_pmf(mut v: Vec<f64>, path: &str) -> Result<Vec<f64>> {
    for (i, p) in v.iter().enumerate() {
        if !(0.0..=1.0).contains(p) {
            return Err(Error::InvalidInput(format!(
                "{path}[{i}]: probability {p} outside [0,1]"
            )));
        }
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() >= MARGINAL_SUM_TOL {
        return Err(Error::InvalidInput(format!(
            "{path}: marginal does not sum to 1 (sum = {sum})"
        )));
    }
    if sum != 1.0 && sum > 0.0 {
        for p in &mut v {
            *p /= sum;
        }
    }
    Ok(v)
}

/// Conditional outcome risks `alpha[t] = P{Y(d)=1 | S(d)=s_t}` for the
/// survivor indices `t = T..=K` in each arm.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRisk {
    first: usize,
    treated: Vec<f64>,
    control: Vec<f64>,
}

impl OutcomeRisk {
    /// `first` is the measurement index `T`; the vectors cover `t = T..=K`.
    pub fn new(first: usize, treated: Vec<f64>, control: Vec<f64>) -> Result<Self> {
        if treated.len() != control.len() {
            return Err(Error::InvalidInput(
                "risks: treated and control must have the same length".into(),
            ));
        }
        for (name, v) in [("treated", &treated), ("control", &control)] {
            for (i, a) in v.iter().enumerate() {
                if !(0.0..=1.0).contains(a) {
                    return Err(Error::InvalidInput(format!(
                        "risks.{name}[{}]: risk {a} outside [0,1]",
                        first + i
                    )));
                }
            }
        }
        Ok(Self {
            first,
            treated,
            control,
        })
    }

    /// Risk at survivor index `t` (panics if `t < T`).
    pub fn alpha(&self, arm: Arm, t: usize) -> f64 {
        match arm {
            Arm::Treated => self.treated[t - self.first],
            Arm::Control => self.control[t - self.first],
        }
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn len(&self) -> usize {
        self.treated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.treated.is_empty()
    }
}

/// The observable large-sample distribution: schedule, survival marginals,
/// and conditional outcome risks for both arms.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeSampleInput {
    pub schedule: FollowUpSchedule,
    pub marginals: MarginalSurvival,
    pub risks: OutcomeRisk,
}

impl LargeSampleInput {
    pub fn new(
        schedule: FollowUpSchedule,
        marginals: MarginalSurvival,
        risks: OutcomeRisk,
    ) -> Result<Self> {
        let input = Self {
            schedule,
            marginals,
            risks,
        };
        input.validate()
    }

    /// Re-checks all cross-field invariants. Idempotent.
    pub fn validate(self) -> Result<Self> {
        if self.marginals.len() != self.schedule.k() + 1 {
            return Err(Error::InvalidInput(format!(
                "marginals: expected {} entries per arm, got {}",
                self.schedule.k() + 1,
                self.marginals.len()
            )));
        }
        if self.risks.first() != self.schedule.t()
            || self.risks.len() != self.schedule.n_survivor_times()
        {
            return Err(Error::InvalidInput(format!(
                "risks: must cover exactly t = {}..={}",
                self.schedule.t(),
                self.schedule.k()
            )));
        }
        Ok(self)
    }
}

/// Outcome counts for one survivor time point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurvivorCounts {
    pub n_bad: u64,
    pub n_good: u64,
    pub n_missing: u64,
}

/// Raw counts for one arm: deaths before the measurement (`t < T`) and
/// outcome counts for survivors (`t >= T`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArmCounts {
    pub deaths: Vec<u64>,
    pub survivors: Vec<SurvivorCounts>,
}

/// Observed count data for both arms on a common schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct CountData {
    pub schedule: FollowUpSchedule,
    pub treated: ArmCounts,
    pub control: ArmCounts,
}

impl CountData {
    pub fn new(schedule: FollowUpSchedule, treated: ArmCounts, control: ArmCounts) -> Result<Self> {
        let data = Self {
            schedule,
            treated,
            control,
        };
        data.validate()
    }

    pub fn validate(self) -> Result<Self> {
        for (name, arm) in [("treated", &self.treated), ("control", &self.control)] {
            if arm.deaths.len() != self.schedule.t() {
                return Err(Error::InvalidInput(format!(
                    "counts.{name}.deaths: expected {} entries, got {}",
                    self.schedule.t(),
                    arm.deaths.len()
                )));
            }
            if arm.survivors.len() != self.schedule.n_survivor_times() {
                return Err(Error::InvalidInput(format!(
                    "counts.{name}.survivors: expected {} entries, got {}",
                    self.schedule.n_survivor_times(),
                    arm.survivors.len()
                )));
            }
        }
        Ok(self)
    }

    pub fn arm(&self, arm: Arm) -> &ArmCounts {
        match arm {
            Arm::Treated => &self.treated,
            Arm::Control => &self.control,
        }
    }
}

/// Full fine-stratum risk table `q[t1][t0][d]`. The treated risk is defined
/// for `t1 >= T` and the control risk for `t0 >= T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable {
    first: usize,
    k: usize,
    /// Rows `t1 = T..=K`, columns `t0 = 0..=K`.
    treated: Vec<Vec<f64>>,
    /// Rows `t1 = 0..=K`, columns `t0 = T..=K`.
    control: Vec<Vec<f64>>,
}

impl RiskTable {
    pub fn new(
        first: usize,
        k: usize,
        treated: Vec<Vec<f64>>,
        control: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n_surv = k + 1 - first;
        if treated.len() != n_surv || treated.iter().any(|r| r.len() != k + 1) {
            return Err(Error::InvalidInput(format!(
                "truth.q.treated: expected {n_surv} rows of {} entries",
                k + 1
            )));
        }
        if control.len() != k + 1 || control.iter().any(|r| r.len() != n_surv) {
            return Err(Error::InvalidInput(format!(
                "truth.q.control: expected {} rows of {n_surv} entries",
                k + 1
            )));
        }
        for (name, table) in [("treated", &treated), ("control", &control)] {
            for (i, row) in table.iter().enumerate() {
                for (j, q) in row.iter().enumerate() {
                    if !(0.0..=1.0).contains(q) {
                        return Err(Error::InvalidInput(format!(
                            "truth.q.{name}[{i}][{j}]: risk {q} outside [0,1]"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            first,
            k,
            treated,
            control,
        })
    }

    /// `q_{t1,t0,d}`. Panics when the risk is undefined for the stratum.
    pub fn q(&self, arm: Arm, t1: usize, t0: usize) -> f64 {
        match arm {
            Arm::Treated => self.treated[t1 - self.first][t0],
            Arm::Control => self.control[t1][t0 - self.first],
        }
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// A synthetic ground truth: the joint survival PMF plus the full
/// fine-stratum risk table. Used for oracle checks only.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub schedule: FollowUpSchedule,
    pub joint: JointSurvivalPMF,
    pub q: RiskTable,
}

impl GroundTruth {
    pub fn new(schedule: FollowUpSchedule, joint: JointSurvivalPMF, q: RiskTable) -> Result<Self> {
        if q.first() != schedule.t() || q.k() != schedule.k() {
            return Err(Error::InvalidInput(
                "truth.q: risk table shape does not match the schedule".into(),
            ));
        }
        if joint.dim() != schedule.k() + 1 {
            return Err(Error::InvalidInput(
                "truth.joint: matrix dimension does not match the schedule".into(),
            ));
        }
        Ok(Self { schedule, joint, q })
    }
}

/// Recovers conditional risks from observed joint probabilities
/// `joint_y1[t] = P(Y=1, S=s_t | D=d)` via `alpha = joint / pi`, with the
/// `0/0 := 0` convention for zero-probability strata.
pub fn risks_from_joint(
    schedule: &FollowUpSchedule,
    marginals: &MarginalSurvival,
    joint_y1_treated: &[f64],
    joint_y1_control: &[f64],
) -> Result<OutcomeRisk> {
    let t_first = schedule.t();
    let mut alphas = [Vec::new(), Vec::new()];
    for (slot, (arm, joint)) in [
        (Arm::Treated, joint_y1_treated),
        (Arm::Control, joint_y1_control),
    ]
    .into_iter()
    .enumerate()
    {
        if joint.len() != schedule.n_survivor_times() {
            return Err(Error::InvalidInput(format!(
                "joint_y1: expected {} entries per arm",
                schedule.n_survivor_times()
            )));
        }
        for (i, &j) in joint.iter().enumerate() {
            let t = t_first + i;
            let pi = marginals.pi(arm, t);
            if j > pi + 1e-12 {
                return Err(Error::Inconsistent(format!(
                    "joint_y1[{t}]: joint probability {j} exceeds marginal {pi}"
                )));
            }
            let alpha = if pi == 0.0 {
                0.0
            } else {
                (j / pi).clamp(0.0, 1.0)
            };
            alphas[slot].push(alpha);
        }
    }
    let [treated, control] = alphas;
    OutcomeRisk::new(t_first, treated, control)
}
