//! Heavy-traffic limit of the polling system as queue 3 becomes critical:
//! `(1 - rho) X3` is asymptotically exponential and independent of the two
//! stable queues, which behave like the priority queue with vacation.

use crate::ctmc::{
    build_truncated_generator, stationary_distribution, Model2State, ModelII, StationaryDist, TruncationCaps,
    DEFAULT_STATE_BUDGET,
};
use crate::error::{Error, Result};
use crate::model::PollingParams;

/// Stationary mass allowed on the truncation boundary before a joint CDF
/// carries a precision warning.
pub const TAIL_MASS_WARNING: f64 = 1e-6;

/// `zeta = epsilon x3` is asymptotically `Exp(eta)`, where
/// `lambda3 = mu3 (1 - rho1 - rho2) - epsilon omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTrafficLimit {
    pub eta: f64,
    pub omega: f64,
    pub mu3: f64,
}

/// `1 - rho1 - rho2 + (mu3/mu1) rho1 + (mu3/mu2) rho2`: mean scaled content
/// under `omega = mu3`.
pub fn inverse_eta(p: &PollingParams) -> Result<f64> {
    let l = p.loads();
    if l.rho1 + l.rho2 >= 1.0 {
        return Err(Error::Domain(format!(
            "rho1 + rho2 = {} leaves no heavy-traffic regime for queue 3",
            l.rho1 + l.rho2
        )));
    }
    Ok(1.0 - l.rho1 - l.rho2 + p.mu3 / p.mu1 * l.rho1 + p.mu3 / p.mu2 * l.rho2)
}

pub fn eta(p: &PollingParams) -> Result<HeavyTrafficLimit> {
    eta_with_omega(p, p.mu3)
}

/// `eta` is linear in the perturbation rate `omega`.
pub fn eta_with_omega(p: &PollingParams, omega: f64) -> Result<HeavyTrafficLimit> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega = {omega} must be positive")));
    }
    let bracket = inverse_eta(p)?;
    Ok(HeavyTrafficLimit { eta: omega / (p.mu3 * bracket), omega, mu3: p.mu3 })
}

impl HeavyTrafficLimit {
    /// Scale factor of `p`: `(mu3 (1 - rho1 - rho2) - lambda3) / omega`,
    /// which is `1 - rho` when `omega = mu3`.
    pub fn epsilon(&self, p: &PollingParams) -> f64 {
        let l = p.loads();
        (p.mu3 * (1.0 - l.rho1 - l.rho2) - p.lambda3) / self.omega
    }

    /// Rate of the limiting scaled waiting time at queue 3.
    pub fn wait_rate(&self) -> f64 {
        self.mu3 * self.eta
    }
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("{name} = {x} must be nonnegative")));
    }
    Ok(())
}

/// `P(zeta <= z) = 1 - exp(-eta z)`.
pub fn scaled_queue_cdf(h: &HeavyTrafficLimit, zeta: f64) -> Result<f64> {
    check_nonneg("zeta", zeta)?;
    Ok(-(-h.eta * zeta).exp_m1())
}

/// `P((1 - rho) W3 <= t) = 1 - exp(-mu3 eta t)`.
pub fn scaled_wait_cdf(h: &HeavyTrafficLimit, p: &PollingParams, t: f64) -> Result<f64> {
    check_nonneg("t", t)?;
    Ok(-(-p.mu3 * h.eta * t).exp_m1())
}

/// Limit law of `(X1, X2)` from the truncated vacation model on the
/// original (unnormalised) rates.
#[derive(Debug, Clone)]
pub struct StableQueueLaw {
    /// Cumulative `P(high <= x1, low <= x2)` over the box.
    cumulative: Vec<Vec<f64>>,
    /// Stationary mass on the outer faces of the box.
    pub boundary_mass: f64,
    pub dist: StationaryDist<Model2State>,
}

impl StableQueueLaw {
    pub fn solve(p: &PollingParams, caps: &TruncationCaps) -> Result<Self> {
        inverse_eta(p)?;
        let g = build_truncated_generator(&ModelII(p.vacation_rates()), caps, DEFAULT_STATE_BUDGET)?;
        let dist = stationary_distribution(&g, 1e-10)?;
        let table = dist.joint_table();
        let (m1, m2) = (caps.cap1, caps.cap2);
        let mut cumulative = vec![vec![0.0; m2 + 1]; m1 + 1];
        let mut boundary_mass = 0.0;
        for i in 0..=m1 {
            for j in 0..=m2 {
                let v = table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0);
                if i == m1 || j == m2 {
                    boundary_mass += v;
                }
                let up = if i > 0 { cumulative[i - 1][j] } else { 0.0 };
                let left = if j > 0 { cumulative[i][j - 1] } else { 0.0 };
                let diag = if i > 0 && j > 0 { cumulative[i - 1][j - 1] } else { 0.0 };
                cumulative[i][j] = v + up + left - diag;
            }
        }
        Ok(Self { cumulative, boundary_mass, dist })
    }

    /// `P(high <= x1, low <= x2)`; counts beyond the box saturate.
    pub fn cdf(&self, x1: usize, x2: usize) -> f64 {
        let i = x1.min(self.cumulative.len() - 1);
        let j = x2.min(self.cumulative[0].len() - 1);
        self.cumulative[i][j]
    }

    pub fn precision_warning(&self) -> Option<String> {
        (self.boundary_mass > TAIL_MASS_WARNING)
            .then(|| format!("stationary mass {:e} on the truncation boundary; enlarge the caps", self.boundary_mass))
    }

    /// Limit of `P(X1 <= x1, X2 <= x2, (1 - rho) X3 <= zeta)`.
    pub fn joint_cdf(&self, h: &HeavyTrafficLimit, x1: usize, x2: usize, zeta: f64) -> Result<f64> {
        Ok(self.cdf(x1, x2) * scaled_queue_cdf(h, zeta)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointLimitCdf {
    pub value: f64,
    pub warning: Option<String>,
}

pub fn joint_limit_cdf(
    p: &PollingParams,
    x1: usize,
    x2: usize,
    zeta: f64,
    caps: &TruncationCaps,
) -> Result<JointLimitCdf> {
    let h = eta(p)?;
    let law = StableQueueLaw::solve(p, caps)?;
    Ok(JointLimitCdf { value: law.joint_cdf(&h, x1, x2, zeta)?, warning: law.precision_warning() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(rho: f64) -> PollingParams {
        PollingParams::reference(0.0).unwrap().at_total_load(rho).unwrap()
    }

    #[test]
    fn reference_eta() {
        let h = eta(&reference(0.9)).unwrap();
        assert!((1.0 / h.eta - 1.55).abs() < 1e-12);
        assert!((h.eta - 0.6451613).abs() < 1e-7);
        assert!((h.wait_rate() - 0.9677419).abs() < 1e-7);
        assert!((1.0 / h.wait_rate() - 1.0333333).abs() < 1e-7);
    }

    #[test]
    fn equal_service_rates_give_unit_eta() {
        let p = PollingParams::new(0.2, 0.3, 0.1, 2.0, 2.0, 2.0, 3).unwrap();
        assert!((eta(&p).unwrap().eta - 1.0).abs() < 1e-15);
    }

    #[test]
    fn omega_scales_linearly() {
        let p = reference(0.95);
        let base = eta(&p).unwrap().eta;
        let h = eta_with_omega(&p, 0.6).unwrap();
        assert!((h.eta - 0.6 / (p.mu3 / base)).abs() < 1e-15);
        assert!(eta_with_omega(&p, 0.0).is_err());
    }

    #[test]
    fn epsilon_is_slack_under_default_omega() {
        for rho in [0.8, 0.95, 0.99] {
            let p = reference(rho);
            assert!((eta(&p).unwrap().epsilon(&p) - (1.0 - rho)).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_values() {
        let h = eta(&reference(0.9)).unwrap();
        assert_eq!(scaled_queue_cdf(&h, 0.0).unwrap(), 0.0);
        assert!((scaled_queue_cdf(&h, 1.0 / h.eta).unwrap() - 0.6321206).abs() < 1e-7);
        assert!((scaled_queue_cdf(&h, 3.1).unwrap() - 0.8646647).abs() < 1e-7);
        assert_eq!(scaled_queue_cdf(&h, f64::INFINITY).unwrap(), 1.0);
        assert!(matches!(scaled_queue_cdf(&h, -1.0), Err(Error::Domain(_))));
        let p = reference(0.9);
        assert_eq!(scaled_wait_cdf(&h, &p, 0.0).unwrap(), 0.0);
        assert!(scaled_wait_cdf(&h, &p, -0.1).is_err());
    }

    #[test]
    fn overloaded_stable_queues_are_rejected() {
        let p = PollingParams::new(0.3, 0.8, 0.0, 0.5, 1.0, 1.5, 4).unwrap();
        assert!(matches!(eta(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn joint_limit_structure() {
        let p = reference(0.99);
        let caps = TruncationCaps::model2(40, 120).unwrap();
        let law = StableQueueLaw::solve(&p, &caps).unwrap();
        assert!(law.precision_warning().is_none(), "{:?}", law.precision_warning());
        let h = eta(&p).unwrap();
        assert!((law.joint_cdf(&h, usize::MAX, usize::MAX, f64::INFINITY).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(law.joint_cdf(&h, 3, 4, 0.0).unwrap(), 0.0);
        assert!((law.cdf(0, usize::MAX) - 0.8).abs() < 1e-8);
        for (x1, x2, z) in [(0, 0, 0.5), (2, 5, 1.0), (1, 12, 3.0)] {
            let joint = law.joint_cdf(&h, x1, x2, z).unwrap();
            let product = law.joint_cdf(&h, x1, x2, f64::INFINITY).unwrap() * scaled_queue_cdf(&h, z).unwrap();
            assert!((joint - product).abs() <= 1e-12);
        }
        let small = joint_limit_cdf(&p, 1, 1, 1.0, &TruncationCaps::model2(4, 4).unwrap()).unwrap();
        assert!(small.warning.is_some());
    }
}
