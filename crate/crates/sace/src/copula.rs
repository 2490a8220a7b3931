//! One-parameter copula families coupling the two potential survival times,
//! association-parameter conversions, and construction of the fine-stratum
//! joint PMF from the two discrete marginals.

use std::sync::OnceLock;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{Arm, FollowUpSchedule, MarginalSurvival};

/// Largest Spearman correlation accepted as a sweep target; the native
/// parameters diverge at `rho = 1`.
pub const RHO_MAX: f64 = 0.9999;

/// Entries more negative than this are implementation bugs, not noise.
// Rectangle differences of clamped copula values can go a few ulp-sums
// negative near the Frechet boundary; anything worse signals a real bug.
const CELL_NEG_TOL: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopulaFamily {
    Plackett,
    Gaussian,
    Independence,
}

impl CopulaFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CopulaFamily::Plackett => "plackett",
            CopulaFamily::Gaussian => "gaussian",
            CopulaFamily::Independence => "independence",
        }
    }
}

/// A copula family with a resolved association parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaSpec {
    family: CopulaFamily,
    /// Native parameter: `phi` for Plackett, `r` for Gaussian, unused for
    /// independence.
    native: f64,
}

impl CopulaSpec {
    pub fn independence() -> Self {
        Self {
            family: CopulaFamily::Independence,
            native: 0.0,
        }
    }

    pub fn plackett(phi: f64) -> Result<Self> {
        if !(phi > 0.0) {
            return Err(Error::Domain(format!("Plackett phi must be > 0, got {phi}")));
        }
        Ok(Self {
            family: CopulaFamily::Plackett,
            native: phi,
        })
    }

    pub fn gaussian(r: f64) -> Result<Self> {
        if !(r.abs() < 1.0) {
            return Err(Error::Domain(format!("Gaussian r must satisfy |r| < 1, got {r}")));
        }
        Ok(Self {
            family: CopulaFamily::Gaussian,
            native: r,
        })
    }

    /// Resolves a target Spearman correlation to the family's native
    /// parameter. `rho` must lie in `[0, RHO_MAX]`.
    pub fn from_spearman(family: CopulaFamily, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        match family {
            CopulaFamily::Plackett => Self::plackett(phi_from_spearman(rho)?),
            CopulaFamily::Gaussian => Self::gaussian(r_from_spearman(rho)?),
            CopulaFamily::Independence => Ok(Self::independence()),
        }
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    /// The native association parameter (`phi`, `r`, or 0 for independence).
    pub fn native(&self) -> f64 {
        self.native
    }

    /// The Spearman correlation implied by the native parameter.
    pub fn spearman(&self) -> f64 {
        match self.family {
            CopulaFamily::Plackett => spearman_from_phi(self.native).unwrap_or(f64::NAN),
            CopulaFamily::Gaussian => spearman_from_r(self.native).unwrap_or(f64::NAN),
            CopulaFamily::Independence => 0.0,
        }
    }

    /// Value reported next to `rho` in tables: `log(phi)` for Plackett, `r`
    /// for Gaussian, 0 for independence.
    pub fn report_param(&self) -> f64 {
        match self.family {
            CopulaFamily::Plackett => self.native.ln(),
            CopulaFamily::Gaussian => self.native,
            CopulaFamily::Independence => 0.0,
        }
    }

    /// Copula CDF `C(u, v)`.
    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        match self.family {
            CopulaFamily::Plackett => plackett_cdf(u, v, self.native),
            CopulaFamily::Gaussian => gaussian_copula_cdf(u, v, self.native),
            CopulaFamily::Independence => Ok(u * v),
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..=RHO_MAX).contains(&rho) {
        return Err(Error::Domain(format!(
            "Spearman rho must lie in [0, {RHO_MAX}], got {rho}"
        )));
    }
    Ok(())
}

fn check_unit(u: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("{name} = {u} outside [0,1]")));
    }
    Ok(())
}

/// Plackett copula CDF `C_phi(u, v)`.
///
/// Uses the product form near `phi = 1` where the closed form degenerates to
/// 0/0, a first-order expansion slightly farther out, and otherwise the
/// rationalized root `2*phi*u*v / (a + sqrt(a^2 - 4*phi*(phi-1)*u*v))` which
/// avoids the cancellation of the textbook expression at large `phi`.
pub fn plackett_cdf(u: f64, v: f64, phi: f64) -> Result<f64> {
    if !(phi > 0.0) {
        return Err(Error::Domain(format!("Plackett phi must be > 0, got {phi}")));
    }
    check_unit(u, "u")?;
    check_unit(v, "v")?;
    let e = phi - 1.0;
    let c = if e.abs() < 1e-9 {
        u * v
    } else if e.abs() < 1e-6 {
        u * v + e * u * v * (1.0 - u) * (1.0 - v)
    } else {
        let a = 1.0 + e * (u + v);
        let disc = (a * a - 4.0 * phi * e * u * v).max(0.0);
        2.0 * phi * u * v / (a + disc.sqrt())
    };
    // The lower Frechet bound can round just above min(u, v) when one
    // argument is exactly 1, so order the clamp limits explicitly.
    let hi = u.min(v);
    let lo = (u + v - 1.0).max(0.0).min(hi);
    Ok(c.clamp(lo, hi))
}

/// Spearman correlation of the Plackett copula as a function of `phi`.
pub fn spearman_from_phi(phi: f64) -> Result<f64> {
    if !(phi > 0.0) {
        return Err(Error::Domain(format!("Plackett phi must be > 0, got {phi}")));
    }
    let e = phi - 1.0;
    if e.abs() < 1e-6 {
        // Series limit at phi -> 1.
        return Ok(e / 3.0 - e * e / 6.0);
    }
    Ok((phi + 1.0) / e - 2.0 * phi * phi.ln() / (e * e))
}

/// Inverse of [`spearman_from_phi`] by bisection on `log(phi)`.
pub fn phi_from_spearman(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    if rho == 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let val = spearman_from_phi(mid.exp())?;
        if (val - rho).abs() < 1e-9 {
            return Ok(mid.exp());
        }
        if val < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// `r = 2 * sin(pi * rho / 6)` for the Gaussian copula.
pub fn r_from_spearman(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(2.0 * (std::f64::consts::PI * rho / 6.0).sin())
}

/// Exact inverse of [`r_from_spearman`].
pub fn spearman_from_r(r: f64) -> Result<f64> {
    if !(r.abs() < 1.0) {
        return Err(Error::Domain(format!("Gaussian r must satisfy |r| < 1, got {r}")));
    }
    Ok(6.0 / std::f64::consts::PI * (r / 2.0).asin())
}

fn std_normal() -> &'static Normal {
    static N: OnceLock<Normal> = OnceLock::new();
    N.get_or_init(|| Normal::new(0.0, 1.0).expect("standard normal"))
}

fn norm_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

fn norm_inv(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// 64-node Gauss-Legendre rule on [-1, 1], computed once by Newton iteration
/// on the Legendre polynomial.
fn gauss_legendre_64() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = 64usize;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Tricomi initial guess for the i-th root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Evaluate P_n and P_n' by recurrence.
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// Standard bivariate normal CDF `P(X <= x, Y <= y)` with correlation `r`.
///
/// Single-integral reduction with a fixed 64-node Gauss-Legendre rule; the
/// high-correlation regime (`|r| > 0.925`) uses the complementary expansion
/// so that accuracy stays well below 1e-7 across the admissible range.
pub fn bvn_cdf(x: f64, y: f64, r: f64) -> Result<f64> {
    if !(r.abs() < 1.0) {
        return Err(Error::Domain(format!("bvn correlation must satisfy |r| < 1, got {r}")));
    }
    // P(X <= x, Y <= y) = P(X' > -x, Y' > -y) for X' = -X, Y' = -Y.
    Ok(bvn_upper(-x, -y, r).clamp(0.0, 1.0))
}

/// `P(X > h, Y > k)` for standard bivariate normal with correlation `r`.
fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let (nodes, weights) = gauss_legendre_64();
    let hk = h * k;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        let mut sum = 0.0;
        for (xi, wi) in nodes.iter().zip(weights) {
            // Map [-1, 1] onto [0, asin r].
            let sn = (asr * (xi + 1.0) / 2.0).sin();
            sum += wi * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
        }
        return sum * asr / (2.0 * two_pi) + norm_cdf(-h) * norm_cdf(-k);
    }
    // High-correlation branch (Genz's complementary expansion).
    let (k, hk) = if r < 0.0 { (-k, -hk) } else { (k, hk) };
    let mut bvn = 0.0;
    let a_sq = (1.0 - r) * (1.0 + r);
    let a = a_sq.sqrt();
    let bs = (h - k) * (h - k);
    let c = (4.0 - hk) / 8.0;
    let d = (12.0 - hk) / 16.0;
    let asr = -(bs / a_sq + hk) / 2.0;
    if asr > -100.0 {
        bvn = a * asr.exp() * (1.0 - c * (bs - a_sq) * (1.0 - d * bs / 5.0) / 3.0
            + c * d * a_sq * a_sq / 5.0);
    }
    if -hk < 100.0 {
        let b = bs.sqrt();
        bvn -= (-hk / 2.0).exp() * two_pi.sqrt() * norm_cdf(-b / a) * b
            * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    // The node set is the full symmetric 64-point rule, so a single pass
    // over `half_a * (x + 1)` already covers [0, a].
    let half_a = a / 2.0;
    for (xi, wi) in nodes.iter().zip(weights) {
        let xs = (half_a * (xi + 1.0)).powi(2);
        let rs = (1.0 - xs).sqrt();
        let asr = -(bs / xs + hk) / 2.0;
        if asr > -100.0 {
            bvn += half_a * wi * asr.exp()
                * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                    - (1.0 + c * xs * (1.0 + d * xs)));
        }
    }
    bvn = -bvn / two_pi;
    if r > 0.0 {
        bvn + norm_cdf(-h.max(k))
    } else {
        let mut v = -bvn;
        if k > h {
            v += norm_cdf(k) - norm_cdf(h);
        }
        v
    }
}

/// Gaussian copula CDF `C_r(u, v) = Phi_r(Phi^-1(u), Phi^-1(v))`, with the
/// copula boundary identities handled exactly.
pub fn gaussian_copula_cdf(u: f64, v: f64, r: f64) -> Result<f64> {
    if !(r.abs() < 1.0) {
        return Err(Error::Domain(format!("Gaussian r must satisfy |r| < 1, got {r}")));
    }
    check_unit(u, "u")?;
    check_unit(v, "v")?;
    if u == 0.0 || v == 0.0 {
        return Ok(0.0);
    }
    if u == 1.0 {
        return Ok(v);
    }
    if v == 1.0 {
        return Ok(u);
    }
    let c = bvn_cdf(norm_inv(u), norm_inv(v), r)?;
    // The lower Frechet bound can round just above min(u, v) when one
    // argument is exactly 1, so order the clamp limits explicitly.
    let hi = u.min(v);
    let lo = (u + v - 1.0).max(0.0).min(hi);
    Ok(c.clamp(lo, hi))
}

/// The fine-stratum joint PMF `p[t1][t0] = P{S(1)=s_t1, S(0)=s_t0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSurvivalPMF {
    p: Vec<Vec<f64>>,
}

impl JointSurvivalPMF {
    /// Validates the matrix invariants: tiny negative entries are clamped to
    /// zero, larger negativity is an internal error, the total mass must be 1
    /// within 1e-9, and when `marginals` are supplied the row/column sums
    /// must recover them within 1e-9.
    pub fn new(mut p: Vec<Vec<f64>>, marginals: Option<&MarginalSurvival>) -> Result<Self> {
        let n = p.len();
        if n == 0 || p.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInput("joint PMF must be a square matrix".into()));
        }
        let mut total = 0.0;
        for row in &mut p {
            for cell in row.iter_mut() {
                if *cell < CELL_NEG_TOL {
                    return Err(Error::Internal(format!(
                        "joint PMF cell {cell} below the negativity tolerance"
                    )));
                }
                *cell = cell.clamp(0.0, 1.0);
                total += *cell;
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "joint PMF mass {total} differs from 1 beyond tolerance"
            )));
        }
        if let Some(m) = marginals {
            for t1 in 0..n {
                let row: f64 = p[t1].iter().sum();
                if (row - m.pi(Arm::Treated, t1)).abs() > 1e-9 {
                    return Err(Error::Internal(format!(
                        "joint PMF row {t1} sum {row} does not match treated marginal"
                    )));
                }
            }
            for t0 in 0..n {
                let col: f64 = p.iter().map(|row| row[t0]).sum();
                if (col - m.pi(Arm::Control, t0)).abs() > 1e-9 {
                    return Err(Error::Internal(format!(
                        "joint PMF column {t0} sum {col} does not match control marginal"
                    )));
                }
            }
        }
        Ok(Self { p })
    }

    /// Matrix dimension `K + 1`.
    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn get(&self, t1: usize, t0: usize) -> f64 {
        self.p[t1][t0]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.p
    }

    /// Marginals recovered from row and column sums.
    pub fn marginals(&self) -> Result<MarginalSurvival> {
        let n = self.dim();
        let treated: Vec<f64> = self.p.iter().map(|row| row.iter().sum()).collect();
        let control: Vec<f64> = (0..n).map(|t0| self.p.iter().map(|row| row[t0]).sum()).collect();
        MarginalSurvival::new(treated, control)
    }

    /// Mass of the always-survivor region `sum_{t1>=T, t0>=T} p`.
    pub fn always_survivor_mass(&self, t_first: usize) -> f64 {
        self.p[t_first..]
            .iter()
            .map(|row| row[t_first..].iter().sum::<f64>())
            .sum()
    }
}

/// Builds the fine-stratum joint PMF from the two marginals under the given
/// copula, via the rectangle formula
/// `p = C(F1(t1), F0(t0)) - C(F1(t1-1), F0(t0)) - C(F1(t1), F0(t0-1)) + C(F1(t1-1), F0(t0-1))`.
pub fn joint_pmf(
    marginals: &MarginalSurvival,
    spec: &CopulaSpec,
    schedule: &FollowUpSchedule,
) -> Result<JointSurvivalPMF> {
    let n = schedule.k() + 1;
    if marginals.len() != n {
        return Err(Error::InvalidInput(
            "marginals do not match the schedule length".into(),
        ));
    }
    let f1 = marginals.cdf(Arm::Treated);
    let f0 = marginals.cdf(Arm::Control);
    let cdf_at = |f: &[f64], t: isize| -> f64 {
        if t < 0 {
            0.0
        } else {
            f[t as usize]
        }
    };
    // C(u, v) over the grid, with F(s_{-1}) = 0.
    let mut cgrid = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=n {
            let u = cdf_at(&f1, i as isize - 1);
            let v = cdf_at(&f0, j as isize - 1);
            cgrid[i][j] = spec.cdf(u, v)?;
        }
    }
    let mut p = vec![vec![0.0; n]; n];
    for t1 in 0..n {
        for t0 in 0..n {
            p[t1][t0] =
                cgrid[t1 + 1][t0 + 1] - cgrid[t1][t0 + 1] - cgrid[t1 + 1][t0] + cgrid[t1][t0];
        }
    }
    JointSurvivalPMF::new(p, Some(marginals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example1_marginals() -> MarginalSurvival {
        MarginalSurvival::new(
            vec![0.15, 0.25, 0.20, 0.25, 0.15],
            vec![0.15, 0.15, 0.30, 0.15, 0.25],
        )
        .unwrap()
    }

    fn example2_marginals() -> MarginalSurvival {
        MarginalSurvival::new(
            vec![0.30, 0.40, 0.15, 0.10, 0.05],
            vec![0.40, 0.30, 0.15, 0.10, 0.05],
        )
        .unwrap()
    }

    fn schedule() -> FollowUpSchedule {
        FollowUpSchedule::new(vec![0.0, 1.0, 2.0, 3.0, 4.0], 2).unwrap()
    }

    #[test]
    fn plackett_independence_is_product() {
        assert!((plackett_cdf(0.3, 0.7, 1.0).unwrap() - 0.21).abs() < 1e-15);
    }

    #[test]
    fn plackett_uniform_margin_boundary() {
        assert!((plackett_cdf(0.5, 1.0, 7.76).unwrap() - 0.5).abs() < 1e-12);
    }

    /// Independent oracle: solve the Plackett cross-ratio identity
    /// `phi = C(1-u-v+C) / ((u-C)(v-C))` for C by bisection.
    fn plackett_oracle(u: f64, v: f64, phi: f64) -> f64 {
        let mut lo = (u + v - 1.0).max(0.0);
        let mut hi = u.min(v);
        for _ in 0..200 {
            let c = 0.5 * (lo + hi);
            let ratio = c * (1.0 - u - v + c) / ((u - c) * (v - c));
            // The cross ratio is increasing in C on the Frechet interval.
            if ratio < phi {
                lo = c;
            } else {
                hi = c;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn plackett_matches_cross_ratio_oracle() {
        for (u, v, phi) in [(0.5, 0.5, 7.76), (0.3, 0.8, 2.5), (0.6, 0.2, 0.4)] {
            let c = plackett_cdf(u, v, phi).unwrap();
            assert!(
                (c - plackett_oracle(u, v, phi)).abs() < 1e-10,
                "u={u} v={v} phi={phi}"
            );
        }
    }

    #[test]
    fn plackett_rejects_nonpositive_phi() {
        assert!(plackett_cdf(0.5, 0.5, 0.0).is_err());
        assert!(plackett_cdf(0.5, 0.5, -1.0).is_err());
    }

    #[test]
    fn spearman_phi_reference_values() {
        assert!((spearman_from_phi(7.76).unwrap() - 0.600).abs() < 1e-3);
        assert_eq!(spearman_from_phi(1.0).unwrap(), 0.0);
        assert!((spearman_from_phi(9.773f64.exp()).unwrap() - 0.999).abs() < 1e-3);
    }

    #[test]
    fn phi_from_spearman_reference_values() {
        assert!((phi_from_spearman(0.6).unwrap() - 7.76).abs() < 0.01);
        assert_eq!(phi_from_spearman(0.0).unwrap(), 1.0);
        assert!((phi_from_spearman(0.9).unwrap().ln() - 4.191).abs() < 0.005);
    }

    #[test]
    fn gaussian_r_conversions() {
        assert_eq!(r_from_spearman(0.0).unwrap(), 0.0);
        let r = r_from_spearman(0.6).unwrap();
        assert!((r - 2.0 * (0.1 * std::f64::consts::PI).sin()).abs() < 1e-15);
        assert!((r - 0.61803).abs() < 1e-4);
        // Root-finding cross-check of the closed-form inverse.
        let (mut lo, mut hi) = (0.0, 0.999999);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if spearman_from_r(mid).unwrap() < 0.6 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((r - 0.5 * (lo + hi)).abs() < 1e-9);
        // rho = 1 is out of range; RHO_MAX maps just under r = 1.
        assert!(r_from_spearman(1.0).is_err());
        assert!(r_from_spearman(RHO_MAX).unwrap() < 1.0);
    }

    /// Direct 2-D composite-Simpson quadrature of the bivariate normal
    /// density over `(-8, x] x (-8, y]`.
    fn bvn_oracle(x: f64, y: f64, r: f64) -> f64 {
        let n = 400usize; // even
        let (a, b) = (-8.0, x);
        let (c, d) = (-8.0, y);
        let hx = (b - a) / n as f64;
        let hy = (d - c) / n as f64;
        let det = 1.0 - r * r;
        let dens = |s: f64, t: f64| {
            ((-(s * s - 2.0 * r * s * t + t * t) / (2.0 * det)).exp())
                / (2.0 * std::f64::consts::PI * det.sqrt())
        };
        let wt = |i: usize| {
            if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let mut sum = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                sum += wt(i) * wt(j) * dens(a + i as f64 * hx, c + j as f64 * hy);
            }
        }
        sum * hx * hy / 9.0
    }

    #[test]
    fn bvn_median_point_identity() {
        for r in [-0.8f64, -0.3, 0.0, 0.5, 0.95] {
            let expect = 0.25 + r.asin() / (2.0 * std::f64::consts::PI);
            assert!((bvn_cdf(0.0, 0.0, r).unwrap() - expect).abs() < 1e-9, "r={r}");
        }
    }

    #[test]
    fn bvn_independence_factorizes() {
        for (x, y) in [(0.5, -0.3), (1.2, 2.0), (-1.0, -1.0)] {
            let expect = norm_cdf(x) * norm_cdf(y);
            assert!((bvn_cdf(x, y, 0.0).unwrap() - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn bvn_matches_2d_quadrature() {
        for (x, y, r) in [(0.5, -0.3, 0.6), (1.0, 0.2, -0.7), (-0.5, 0.8, 0.95)] {
            let got = bvn_cdf(x, y, r).unwrap();
            let want = bvn_oracle(x, y, r);
            assert!((got - want).abs() < 1e-7, "x={x} y={y} r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn gaussian_copula_boundaries_and_values() {
        let r = 0.4;
        assert_eq!(gaussian_copula_cdf(0.3, 1.0, r).unwrap(), 0.3);
        assert_eq!(gaussian_copula_cdf(0.0, 0.7, r).unwrap(), 0.0);
        assert!((gaussian_copula_cdf(0.5, 0.5, 0.0).unwrap() - 0.25).abs() < 1e-10);
        let r6 = r_from_spearman(0.6).unwrap();
        let got = gaussian_copula_cdf(0.4, 0.7, r6).unwrap();
        let want = bvn_oracle(norm_inv(0.4), norm_inv(0.7), r6);
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn joint_pmf_independence_is_product_measure() {
        let m = example1_marginals();
        let p = joint_pmf(&m, &CopulaSpec::independence(), &schedule()).unwrap();
        for t1 in 0..5 {
            for t0 in 0..5 {
                let want = m.pi(Arm::Treated, t1) * m.pi(Arm::Control, t0);
                assert!((p.get(t1, t0) - want).abs() < 1e-12);
            }
        }
    }

    fn quadrant_masses(p: &JointSurvivalPMF, t: usize) -> (f64, f64, f64, f64) {
        let n = p.dim();
        let mut m = (0.0, 0.0, 0.0, 0.0);
        for t1 in 0..n {
            for t0 in 0..n {
                match (t1 >= t, t0 >= t) {
                    (true, true) => m.0 += p.get(t1, t0),
                    (true, false) => m.1 += p.get(t1, t0),
                    (false, true) => m.2 += p.get(t1, t0),
                    (false, false) => m.3 += p.get(t1, t0),
                }
            }
        }
        m
    }

    #[test]
    fn joint_pmf_example1_stratum_masses() {
        let spec = CopulaSpec::plackett(7.76).unwrap();
        let p = joint_pmf(&example1_marginals(), &spec, &schedule()).unwrap();
        let (a, pr, ha, ns) = quadrant_masses(&p, 2);
        assert!((a - 0.519).abs() < 1e-3);
        assert!((pr - 0.081).abs() < 1e-3);
        assert!((ha - 0.181).abs() < 1e-3);
        assert!((ns - 0.219).abs() < 1e-3);
    }

    #[test]
    fn joint_pmf_example2_always_survivor_mass() {
        let spec = CopulaSpec::plackett(7.76).unwrap();
        let p = joint_pmf(&example2_marginals(), &spec, &schedule()).unwrap();
        let (a, pr, ha, ns) = quadrant_masses(&p, 2);
        assert!((a - 0.182).abs() < 1e-3);
        assert!((pr - 0.118).abs() < 1e-3);
        assert!((ha - 0.118).abs() < 1e-3);
        assert!((ns - 0.582).abs() < 1e-3);
    }

    #[test]
    fn always_survivor_mass_nondecreasing_in_rho() {
        let m = example1_marginals();
        let sched = schedule();
        for family in [CopulaFamily::Plackett, CopulaFamily::Gaussian] {
            let mut prev = -1.0;
            for i in 0..=10 {
                let rho = if i == 10 { 0.99 } else { i as f64 * 0.1 };
                let spec = CopulaSpec::from_spearman(family, rho).unwrap();
                let mass = joint_pmf(&m, &spec, &sched).unwrap().always_survivor_mass(2);
                assert!(mass >= prev - 1e-12, "{family:?} rho={rho}");
                prev = mass;
            }
        }
    }

    #[test]
    fn marginal_recovery_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sched = schedule();
        for family in [
            CopulaFamily::Plackett,
            CopulaFamily::Gaussian,
            CopulaFamily::Independence,
        ] {
            for _ in 0..1000 {
                let mut raw: Vec<f64> = (0..10).map(|_| rng.gen_range(0.01..1.0)).collect();
                let (t, c) = raw.split_at_mut(5);
                let st: f64 = t.iter().sum();
                let sc: f64 = c.iter().sum();
                t.iter_mut().for_each(|x| *x /= st);
                c.iter_mut().for_each(|x| *x /= sc);
                let m = MarginalSurvival::new(t.to_vec(), c.to_vec()).unwrap();
                let rho = rng.gen_range(0.0..RHO_MAX);
                let spec = CopulaSpec::from_spearman(family, rho).unwrap();
                // JointSurvivalPMF::new verifies row/column recovery to 1e-9.
                joint_pmf(&m, &spec, &sched).unwrap();
            }
        }
    }

    proptest! {
        #[test]
        fn copulas_are_2_increasing_and_within_frechet(
            u1 in 0.0..1.0f64, du in 0.0..1.0f64,
            v1 in 0.0..1.0f64, dv in 0.0..1.0f64,
            rho in 0.0..RHO_MAX,
        ) {
            let u2 = (u1 + du).min(1.0);
            let v2 = (v1 + dv).min(1.0);
            for family in [CopulaFamily::Plackett, CopulaFamily::Gaussian, CopulaFamily::Independence] {
                let spec = CopulaSpec::from_spearman(family, rho).unwrap();
                for &(u, v) in &[(u1, v1), (u1, v2), (u2, v1), (u2, v2)] {
                    let c = spec.cdf(u, v).unwrap();
                    prop_assert!(c >= (u + v - 1.0).max(0.0) - 1e-12);
                    prop_assert!(c <= u.min(v) + 1e-12);
                }
                let vol = spec.cdf(u2, v2).unwrap() - spec.cdf(u1, v2).unwrap()
                    - spec.cdf(u2, v1).unwrap() + spec.cdf(u1, v1).unwrap();
                prop_assert!(vol >= -1e-12, "{family:?} vol={vol}");
            }
        }

        #[test]
        fn spearman_roundtrips(rho in 0.0..RHO_MAX) {
            let phi = phi_from_spearman(rho).unwrap();
            prop_assert!((spearman_from_phi(phi).unwrap() - rho).abs() < 1e-7);
            let r = r_from_spearman(rho).unwrap();
            prop_assert!((spearman_from_r(r).unwrap() - rho).abs() < 1e-7);
        }
    }
}
