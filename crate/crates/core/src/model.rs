//! Parameter containers, traffic loads and normalisation.

use crate::error::{Error, Result};

/// Rates of the three-queue threshold polling system.
///
/// Queue `i` receives Poisson arrivals at `lambda_i` and serves at `mu_i`.
/// `threshold_n` is the queue-2 level that pulls the server away from
/// queue 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PollingParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub threshold_n: usize,
}

fn check_rate(name: &str, value: f64, allow_zero: bool) -> Result<()> {
    let ok = value.is_finite() && if allow_zero { value >= 0.0 } else { value > 0.0 };
    if ok {
        Ok(())
    } else {
        let bound = if allow_zero { "finite and nonnegative" } else { "finite and positive" };
        Err(Error::InvalidParameter(format!("{name} = {value} must be {bound}")))
    }
}

fn check_threshold(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("threshold N must be at least 1".into()));
    }
    Ok(())
}

impl PollingParams {
    pub fn new(
        lambda1: f64,
        lambda2: f64,
        lambda3: f64,
        mu1: f64,
        mu2: f64,
        mu3: f64,
        threshold_n: usize,
    ) -> Result<Self> {
        check_rate("lambda1", lambda1, false)?;
        check_rate("lambda2", lambda2, false)?;
        check_rate("lambda3", lambda3, true)?;
        check_rate("mu1", mu1, false)?;
        check_rate("mu2", mu2, false)?;
        check_rate("mu3", mu3, false)?;
        check_threshold(threshold_n)?;
        Ok(Self { lambda1, lambda2, lambda3, mu1, mu2, mu3, threshold_n })
    }

    /// The validation instance: `lambda = (0.1, 0.3, lambda3)`,
    /// `mu = (0.5, 1, 1.5)`, `N = 10`.
    pub fn reference(lambda3: f64) -> Result<Self> {
        Self::new(0.1, 0.3, lambda3, 0.5, 1.0, 1.5, 10)
    }

    /// Same rates with a different queue-3 arrival rate.
    pub fn with_lambda3(&self, lambda3: f64) -> Result<Self> {
        Self::new(self.lambda1, self.lambda2, lambda3, self.mu1, self.mu2, self.mu3, self.threshold_n)
    }

    /// Same rates with `lambda3` chosen so the total load equals `rho_target`.
    pub fn at_total_load(&self, rho_target: f64) -> Result<Self> {
        self.with_lambda3(lambda3_for_total_load(self, rho_target)?)
    }

    /// Every rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        check_rate("scale factor", factor, false)?;
        Self::new(
            self.lambda1 * factor,
            self.lambda2 * factor,
            self.lambda3 * factor,
            self.mu1 * factor,
            self.mu2 * factor,
            self.mu3 * factor,
            self.threshold_n,
        )
    }

    pub fn loads(&self) -> Loads {
        traffic_loads(self)
    }

    /// Rates of the two stable queues, as seen by the vacation model.
    pub fn vacation_rates(&self) -> VacationRates {
        VacationRates {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            mu1: self.mu1,
            mu2: self.mu2,
            threshold_n: self.threshold_n,
        }
    }
}

/// Per-queue utilisations and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loads {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub rho_total: f64,
}

pub fn traffic_loads(p: &PollingParams) -> Loads {
    let rho1 = p.lambda1 / p.mu1;
    let rho2 = p.lambda2 / p.mu2;
    let rho3 = p.lambda3 / p.mu3;
    Loads { rho1, rho2, rho3, rho_total: rho1 + rho2 + rho3 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub stable: bool,
    /// `1 - rho`; nonpositive when unstable.
    pub slack: f64,
}

/// Ergodicity of the polling system requires `rho < 1`.
pub fn stability_check(p: &PollingParams) -> StabilityReport {
    let slack = 1.0 - p.loads().rho_total;
    StabilityReport { stable: slack > 0.0, slack }
}

/// Queue-3 arrival rate `mu3 (rho_target - rho1 - rho2)`. The `lambda3`
/// field of `p` is ignored.
///
/// `rho_target` must exceed `rho1 + rho2` (otherwise queue 3 would get a
/// nonpositive arrival rate); the critical value `1` is accepted.
pub fn lambda3_for_total_load(p: &PollingParams, rho_target: f64) -> Result<f64> {
    let loads = p.loads();
    let stable_part = loads.rho1 + loads.rho2;
    if !rho_target.is_finite() || rho_target <= stable_part {
        return Err(Error::Domain(format!("target load {rho_target} must exceed rho1 + rho2 = {stable_part}")));
    }
    if rho_target > 1.0 {
        return Err(Error::Domain(format!("target load {rho_target} exceeds 1")));
    }
    Ok(p.mu3 * (rho_target - stable_part))
}

/// Unnormalised rates of the two-class preemptive priority queue with
/// `N`-policy vacation. The truncated-chain oracle runs on these.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacationRates {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub threshold_n: usize,
}

impl VacationRates {
    pub fn new(lambda1: f64, lambda2: f64, mu1: f64, mu2: f64, threshold_n: usize) -> Result<Self> {
        check_rate("lambda1", lambda1, false)?;
        check_rate("lambda2", lambda2, false)?;
        check_rate("mu1", mu1, false)?;
        check_rate("mu2", mu2, false)?;
        check_threshold(threshold_n)?;
        Ok(Self { lambda1, lambda2, mu1, mu2, threshold_n })
    }

    pub fn rho1(&self) -> f64 {
        self.lambda1 / self.mu1
    }

    pub fn rho2(&self) -> f64 {
        self.lambda2 / self.mu2
    }

    pub fn normalized(&self) -> ModelIIParams {
        let sum = self.lambda1 + self.lambda2 + self.mu1 + self.mu2;
        ModelIIParams {
            lambda1: self.lambda1 / sum,
            lambda2: self.lambda2 / sum,
            mu1: self.mu1 / sum,
            mu2: self.mu2 / sum,
            threshold_n: self.threshold_n,
        }
    }
}

/// Vacation-model rates normalised so that `lambda1 + lambda2 + mu1 + mu2 = 1`.
///
/// All closed-form constants of the tail analysis assume this convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelIIParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub threshold_n: usize,
}

pub const NORMALIZATION_TOL: f64 = 1e-12;

impl ModelIIParams {
    /// Accepts already-normalised rates only.
    pub fn new(lambda1: f64, lambda2: f64, mu1: f64, mu2: f64, threshold_n: usize) -> Result<Self> {
        let rates = VacationRates::new(lambda1, lambda2, mu1, mu2, threshold_n)?;
        let sum = lambda1 + lambda2 + mu1 + mu2;
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidParameter(format!("rates sum to {sum}, expected 1 (normalise first)")));
        }
        Ok(Self { lambda1: rates.lambda1, lambda2: rates.lambda2, mu1: rates.mu1, mu2: rates.mu2, threshold_n })
    }

    /// Normalises arbitrary positive rates.
    pub fn from_rates(lambda1: f64, lambda2: f64, mu1: f64, mu2: f64, threshold_n: usize) -> Result<Self> {
        Ok(VacationRates::new(lambda1, lambda2, mu1, mu2, threshold_n)?.normalized())
    }

    pub fn rates(&self) -> VacationRates {
        VacationRates {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            mu1: self.mu1,
            mu2: self.mu2,
            threshold_n: self.threshold_n,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda1 + self.lambda2
    }

    pub fn rho1(&self) -> f64 {
        self.lambda1 / self.mu1
    }

    pub fn rho2(&self) -> f64 {
        self.lambda2 / self.mu2
    }

    /// `(lambda1 + lambda2) / mu1`.
    pub fn rho_bar1(&self) -> f64 {
        self.lambda() / self.mu1
    }

    /// `lambda2 / (lambda1 + lambda2)`.
    pub fn r2(&self) -> f64 {
        self.lambda2 / self.lambda()
    }

    pub fn is_stable(&self) -> bool {
        self.rho1() + self.rho2() < 1.0
    }
}

/// Drops `lambda3`/`mu3` and normalises the remaining four rates.
pub fn normalize_model2(p: &PollingParams) -> ModelIIParams {
    p.vacation_rates().normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn reference(lambda3: f64) -> PollingParams {
        PollingParams::reference(lambda3).unwrap()
    }

    #[test]
    fn loads_of_reference_rates() {
        let l = traffic_loads(&reference(0.45));
        assert_abs_diff_eq!(l.rho1, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(l.rho2, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(l.rho3, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(l.rho_total, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(traffic_loads(&reference(0.735)).rho_total, 0.99, epsilon = 1e-15);
    }

    #[test]
    fn zero_priority_rate_is_rejected() {
        assert!(PollingParams::new(0.0, 0.3, 0.45, 0.5, 1.0, 1.5, 10).is_err());
        assert!(PollingParams::new(0.1, 0.3, 0.45, 0.5, 1.0, 1.5, 0).is_err());
        assert!(PollingParams::new(0.1, 0.3, f64::NAN, 0.5, 1.0, 1.5, 10).is_err());
        assert!(PollingParams::new(0.1, 0.3, 0.0, 0.5, 1.0, 1.5, 10).is_ok());
    }

    #[test]
    fn stability_boundary() {
        let s = stability_check(&reference(0.45));
        assert!(s.stable);
        assert_abs_diff_eq!(s.slack, 0.2, epsilon = 1e-12);
        // lambda3 = mu3 (1 - rho1 - rho2) = 0.75
        let s = stability_check(&reference(0.75));
        assert!(!s.stable);
        assert_abs_diff_eq!(s.slack, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn lambda3_targeting() {
        let p = reference(0.0);
        assert_abs_diff_eq!(lambda3_for_total_load(&p, 0.8).unwrap(), 0.45, epsilon = 1e-12);
        assert_abs_diff_eq!(lambda3_for_total_load(&p, 0.99).unwrap(), 0.735, epsilon = 1e-12);
        assert_abs_diff_eq!(lambda3_for_total_load(&p, 1.0).unwrap(), 0.75, epsilon = 1e-12);
        assert!(matches!(lambda3_for_total_load(&p, 0.5), Err(Error::Domain(_))));
        assert!(lambda3_for_total_load(&p, 0.4).is_err());
    }

    #[test]
    fn normalization_of_reference_rates() {
        let m = normalize_model2(&reference(0.45));
        assert_abs_diff_eq!(m.lambda1, 0.1 / 1.9, epsilon = 1e-15);
        assert_abs_diff_eq!(m.lambda1, 0.0526316, epsilon = 1e-7);
        assert_abs_diff_eq!(m.lambda2, 0.1578947, epsilon = 1e-7);
        assert_abs_diff_eq!(m.mu1, 0.2631579, epsilon = 1e-7);
        assert_abs_diff_eq!(m.mu2, 0.5263158, epsilon = 1e-7);
        assert_eq!(m.threshold_n, 10);
        assert_abs_diff_eq!(m.rho_bar1(), 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(m.r2(), 0.75, epsilon = 1e-14);
        assert!(ModelIIParams::new(0.1, 0.3, 0.5, 1.0, 10).is_err());
    }

    #[test]
    fn normalized_input_is_fixed_point() {
        let m = normalize_model2(&reference(0.45));
        let again = m.rates().normalized();
        assert_abs_diff_eq!(again.lambda1, m.lambda1, epsilon = 1e-15);
        assert_abs_diff_eq!(again.mu2, m.mu2, epsilon = 1e-15);
        assert!(ModelIIParams::new(m.lambda1, m.lambda2, m.mu1, m.mu2, m.threshold_n).is_ok());
    }

    fn arb_params() -> impl Strategy<Value = PollingParams> {
        (0.01..2.0f64, 0.01..2.0f64, 0.0..2.0f64, 0.05..3.0f64, 0.05..3.0f64, 0.05..3.0f64, 1usize..20)
            .prop_map(|(l1, l2, l3, m1, m2, m3, n)| PollingParams::new(l1, l2, l3, m1, m2, m3, n).unwrap())
    }

    proptest! {
        #[test]
        fn normalization_is_scale_invariant(p in arb_params(), c in 0.01..100.0f64) {
            let a = normalize_model2(&p);
            let b = normalize_model2(&p.scaled(c).unwrap());
            prop_assert!((a.lambda1 - b.lambda1).abs() <= 1e-12);
            prop_assert!((a.lambda2 - b.lambda2).abs() <= 1e-12);
            prop_assert!((a.mu1 - b.mu1).abs() <= 1e-12);
            prop_assert!((a.mu2 - b.mu2).abs() <= 1e-12);
            let twice = a.rates().normalized();
            prop_assert!((twice.mu1 - a.mu1).abs() <= 1e-12);
        }

        #[test]
        fn load_targeting_round_trips(p in arb_params(), frac in 0.001..1.0f64) {
            let l = p.loads();
            let base = l.rho1 + l.rho2;
            prop_assume!(base < 0.999);
            let target = base + frac * (1.0 - base);
            let q = p.at_total_load(target).unwrap();
            prop_assert!((q.loads().rho_total - target).abs() <= 1e-12);
        }

        #[test]
        fn stability_is_monotone_in_lambda3(p in arb_params(), extra in 0.0..2.0f64) {
            let more = p.with_lambda3(p.lambda3 + extra).unwrap();
            prop_assert!(!(stability_check(&more).stable && !stability_check(&p).stable));
        }
    }
}
