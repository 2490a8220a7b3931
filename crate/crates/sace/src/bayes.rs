//! Posterior inference for the bounds: Dirichlet/Beta posteriors over the
//! observable distribution, compatible-region rejection at a fixed coupling,
//! per-draw LP bounds, posterior medians, and shortest joint credible
//! intervals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::bounds::{build_sace_lp, solve_lp_bounds, zr_bounds_from_coarse, BoundsStatus};
use crate::copula::{joint_pmf, CopulaSpec};
use crate::error::{Error, Result};
use crate::model::{CountData, MarginalSurvival, OutcomeRisk};

/// Settings for the rejection sampler.
#[derive(Debug, Clone, Copy)]
pub struct BayesConfig {
    /// Accepted-draw target.
    pub n_draws: usize,
    /// Total proposal budget across the whole run.
    pub max_attempts: usize,
    pub seed: u64,
    pub credible_level: f64,
}

impl Default for BayesConfig {
    fn default() -> Self {
        Self {
            n_draws: 4000,
            max_attempts: 2_000_000,
            seed: 0,
            credible_level: 0.95,
        }
    }
}

impl BayesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_draws < 100 {
            return Err(Error::InvalidInput(format!(
                "n_draws must be at least 100, got {}",
                self.n_draws
            )));
        }
        if !(self.credible_level > 0.5 && self.credible_level < 1.0) {
            return Err(Error::InvalidInput(format!(
                "credible_level must lie in (0.5, 1), got {}",
                self.credible_level
            )));
        }
        Ok(())
    }
}

/// Conjugate posterior parameters: one Dirichlet vector per arm over the
/// survival PMF, and one Beta pair per observed survivor cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorParams {
    pub dirichlet_treated: Vec<f64>,
    pub dirichlet_control: Vec<f64>,
    /// `(n_bad + 1, n_good + 1)` for `t = T..=K`, treated arm.
    pub beta_treated: Vec<(f64, f64)>,
    pub beta_control: Vec<(f64, f64)>,
}

/// One accepted draw from the compatible region.
#[derive(Debug, Clone)]
pub struct PosteriorDraw {
    pub pi_treated: Vec<f64>,
    pub pi_control: Vec<f64>,
    pub alpha: OutcomeRisk,
    pub lower: f64,
    pub upper: f64,
}

/// Shortest interval containing at least `level` of the joint draw mass.
#[derive(Debug, Clone, Copy)]
pub struct CredibleInterval {
    pub a: f64,
    pub b: f64,
    pub level: f64,
    /// Empirical fraction of draws with `lower >= a` and `upper <= b`.
    pub achieved: f64,
}

/// Point estimates and interval for a set of per-draw bounds.
#[derive(Debug, Clone, Copy)]
pub struct BayesSummary {
    pub median_lower: f64,
    pub median_upper: f64,
    pub ci: CredibleInterval,
    pub acceptance_rate: f64,
}

/// Posterior parameters from counts under independent uniform priors.
/// Missing outcomes contribute to the survival Dirichlet only.
pub fn posterior_params(counts: &CountData) -> PosteriorParams {
    let build = |arm: &crate::model::ArmCounts| {
        let mut dir: Vec<f64> = arm.deaths.iter().map(|&u| u as f64 + 1.0).collect();
        let mut beta = Vec::with_capacity(arm.survivors.len());
        for s in &arm.survivors {
            dir.push((s.n_missing + s.n_bad + s.n_good) as f64 + 1.0);
            beta.push((s.n_bad as f64 + 1.0, s.n_good as f64 + 1.0));
        }
        (dir, beta)
    };
    let (dirichlet_treated, beta_treated) = build(&counts.treated);
    let (dirichlet_control, beta_control) = build(&counts.control);
    PosteriorParams {
        dirichlet_treated,
        dirichlet_control,
        beta_treated,
        beta_control,
    }
}

fn gamma_draw(shape: f64, rng: &mut ChaCha8Rng) -> f64 {
    Gamma::new(shape, 1.0)
        .expect("posterior shapes are >= 1")
        .sample(rng)
}

/// Dirichlet via normalized independent Gammas.
fn dirichlet_draw(params: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let g: Vec<f64> = params.iter().map(|&a| gamma_draw(a, rng)).collect();
    let total: f64 = g.iter().sum();
    g.into_iter().map(|x| x / total).collect()
}

/// Beta via the two-Gamma construction.
fn beta_draw(a: f64, b: f64, rng: &mut ChaCha8Rng) -> f64 {
    let x = gamma_draw(a, rng);
    let y = gamma_draw(b, rng);
    x / (x + y)
}

/// One proposal from the un-truncated posterior. The draw order is fixed
/// (treated PMF, control PMF, treated risks, control risks) so a given
/// stream state always yields the same proposal.
pub fn draw_posterior(
    params: &PosteriorParams,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let pi_treated = dirichlet_draw(&params.dirichlet_treated, rng);
    let pi_control = dirichlet_draw(&params.dirichlet_control, rng);
    let alpha_treated = params
        .beta_treated
        .iter()
        .map(|&(a, b)| beta_draw(a, b, rng))
        .collect();
    let alpha_control = params
        .beta_control
        .iter()
        .map(|&(a, b)| beta_draw(a, b, rng))
        .collect();
    (pi_treated, pi_control, alpha_treated, alpha_control)
}

fn substream_rng(seed: u64, m: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(m);
    rng
}

/// Rejection sampling from the compatible region at a fixed coupling.
///
/// Proposal `m` uses an independent substream derived from `(seed, m)`, so
/// the accepted set is independent of evaluation order. Accepted draws carry
/// their LP bounds. Errors when the proposal budget runs out first.
pub fn sample_compatible(
    counts: &CountData,
    spec: &CopulaSpec,
    cfg: &BayesConfig,
) -> Result<(Vec<PosteriorDraw>, f64)> {
    cfg.validate()?;
    let params = posterior_params(counts);
    let schedule = &counts.schedule;
    let mut draws = Vec::with_capacity(cfg.n_draws);
    let mut attempts = 0usize;
    while draws.len() < cfg.n_draws && attempts < cfg.max_attempts {
        let mut rng = substream_rng(cfg.seed, attempts as u64);
        attempts += 1;
        let (pi_treated, pi_control, alpha_treated, alpha_control) =
            draw_posterior(&params, &mut rng);
        let marginals = MarginalSurvival::new(pi_treated.clone(), pi_control.clone())?;
        let risks = OutcomeRisk::new(schedule.t(), alpha_treated, alpha_control)?;
        let pmf = joint_pmf(&marginals, spec, schedule)?;
        let sace_lp = match build_sace_lp(schedule, &pmf, &marginals, &risks) {
            Ok(l) => l,
            Err(Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        };
        // The bound solves double as the feasibility test: `None` means the
        // phase-one simplex found no feasible point, i.e. the proposal falls
        // outside the compatible region and is rejected.
        let Some((lower, upper)) = solve_lp_bounds(&sace_lp.lp)? else {
            continue;
        };
        draws.push(PosteriorDraw {
            pi_treated,
            pi_control,
            alpha: risks,
            lower,
            upper,
        });
    }
    let rate = draws.len() as f64 / attempts as f64;
    if draws.len() < cfg.n_draws {
        return Err(Error::BudgetExhausted {
            accepted: draws.len(),
            attempts,
            rate,
        });
    }
    Ok((draws, rate))
}

/// Per-arm coarse counts: deaths before the measurement, survivors, and
/// bad/good outcome counts among survivors.
fn coarse_counts(arm: &crate::model::ArmCounts) -> (u64, u64, u64, u64) {
    let dead: u64 = arm.deaths.iter().sum();
    let mut surv = 0u64;
    let mut bad = 0u64;
    let mut good = 0u64;
    for s in &arm.survivors {
        surv += s.n_bad + s.n_good + s.n_missing;
        bad += s.n_bad;
        good += s.n_good;
    }
    (dead, surv, bad, good)
}

/// Posterior bounds under the coarse single-time-point comparison model:
/// Beta posteriors on each arm's survival probability and survivor
/// bad-outcome risk, with the same per-draw substream and rejection
/// interface as [`sample_compatible`].
pub fn sample_zr_posterior(counts: &CountData, cfg: &BayesConfig) -> Result<(Vec<(f64, f64)>, f64)> {
    cfg.validate()?;
    let (dead1, surv1, bad1, good1) = coarse_counts(&counts.treated);
    let (dead0, surv0, bad0, good0) = coarse_counts(&counts.control);
    let mut draws = Vec::with_capacity(cfg.n_draws);
    let mut attempts = 0usize;
    while draws.len() < cfg.n_draws && attempts < cfg.max_attempts {
        let mut rng = substream_rng(cfg.seed, attempts as u64);
        attempts += 1;
        let a = beta_draw(surv1 as f64 + 1.0, dead1 as f64 + 1.0, &mut rng);
        let b = beta_draw(surv0 as f64 + 1.0, dead0 as f64 + 1.0, &mut rng);
        let q1 = beta_draw(bad1 as f64 + 1.0, good1 as f64 + 1.0, &mut rng);
        let q0 = beta_draw(bad0 as f64 + 1.0, good0 as f64 + 1.0, &mut rng);
        let result = match zr_bounds_from_coarse(a, b, a * q1, b * q0) {
            Ok(r) => r,
            Err(Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        };
        if result.status != BoundsStatus::Ok {
            continue;
        }
        draws.push((result.lower, result.upper));
    }
    let rate = draws.len() as f64 / attempts as f64;
    if draws.len() < cfg.n_draws {
        return Err(Error::BudgetExhausted {
            accepted: draws.len(),
            attempts,
            rate,
        });
    }
    Ok((draws, rate))
}

/// Fenwick tree used as an order-statistic structure over upper-bound ranks.
struct Fenwick {
    tree: Vec<usize>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self {
            tree: vec![0; n + 1],
        }
    }

    fn add(&mut self, rank: usize) {
        let mut i = rank + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Rank of the k-th smallest inserted value (1-based k).
    fn kth(&self, k: usize) -> usize {
        let mut pos = 0;
        let mut remaining = k;
        let mut step = (self.tree.len() - 1).next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] < remaining {
                remaining -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos
    }
}

fn required_count(level: f64, m: usize) -> usize {
    // The tiny slack guards against ceil() overshooting on products like
    // 0.95 * 4000 that are not exactly representable.
    let need = (level * m as f64 - 1e-9).ceil() as usize;
    need.clamp(1, m)
}

/// Shortest interval `[a, b]` with at least `ceil(level * M)` draws whose
/// bound pair is contained in it. Candidate `a` values are the observed
/// lowers, swept in descending order while a Fenwick tree over upper-bound
/// ranks yields each candidate's minimal `b`. Ties go to the smallest `a`.
pub fn shortest_joint_ci(bounds: &[(f64, f64)], level: f64) -> Result<CredibleInterval> {
    let m = bounds.len();
    if m == 0 {
        return Err(Error::InvalidInput("no draws for the credible interval".into()));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidInput(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    let need = required_count(level, m);

    let mut uppers: Vec<f64> = bounds.iter().map(|&(_, u)| u).collect();
    uppers.sort_by(f64::total_cmp);
    let rank_of = |u: f64| uppers.partition_point(|&x| x < u);

    // Draws sorted by lower descending; equal lowers are processed together.
    let mut by_lower: Vec<(f64, f64)> = bounds.to_vec();
    by_lower.sort_by(|x, y| f64::total_cmp(&y.0, &x.0));

    let mut fen = Fenwick::new(m);
    let mut inserted = 0usize;
    let mut best: Option<(f64, f64)> = None;
    let mut i = 0;
    while i < by_lower.len() {
        let a = by_lower[i].0;
        while i < by_lower.len() && by_lower[i].0 == a {
            fen.add(rank_of(by_lower[i].1));
            inserted += 1;
            i += 1;
        }
        if inserted >= need {
            let b = uppers[fen.kth(need)];
            let better = match best {
                None => true,
                // `a` strictly decreases, so on a width tie the later
                // (smaller-`a`) candidate wins.
                Some((ba, bb)) => b - a <= bb - ba,
            };
            if better && b >= a {
                best = Some((a, b));
            }
        }
    }
    let (a, b) = best.ok_or_else(|| {
        Error::Internal("no credible-interval candidate found".into())
    })?;
    let covered = bounds.iter().filter(|&&(l, u)| l >= a && u <= b).count();
    Ok(CredibleInterval {
        a,
        b,
        level,
        achieved: covered as f64 / m as f64,
    })
}

/// Median with the midpoint convention for even counts.
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Posterior medians of the two bound endpoints plus the shortest joint
/// credible interval.
pub fn summarize(bounds: &[(f64, f64)], level: f64, acceptance_rate: f64) -> Result<BayesSummary> {
    if bounds.is_empty() {
        return Err(Error::InvalidInput("no draws to summarize".into()));
    }
    let mut lowers: Vec<f64> = bounds.iter().map(|&(l, _)| l).collect();
    let mut uppers: Vec<f64> = bounds.iter().map(|&(_, u)| u).collect();
    Ok(BayesSummary {
        median_lower: median(&mut lowers),
        median_upper: median(&mut uppers),
        ci: shortest_joint_ci(bounds, level)?,
        acceptance_rate,
    })
}
