use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::ModelIIParams;

/// `|D|` at or below this is treated as zero.
pub const D_ZERO_TOL: f64 = 1e-12;

/// Fixed quantities of the normalized vacation model that drive every
/// generating function and tail law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticConstants {
    pub params: ModelIIParams,
    /// Branch points of `sqrt(Delta)` are `1/b1` and `1/b2`.
    pub b1: f64,
    pub b2: f64,
    /// Smaller root in `c` of `mu1 c^2 - (lambda + mu1) c + lambda1`.
    pub c0: f64,
    pub c1: f64,
    /// Kernel roots at `y = 0`.
    pub x1_val: f64,
    pub x2_val: f64,
    /// `T T* = 4 mu2^2 (1 - y)(1 - eta1 y)(1 - eta2 y)`.
    pub eta1: f64,
    pub eta2: f64,
    /// Partial-fraction weights of `(1 - rho1 - rho2) / (2 mu2 (1 - eta1 y)(1 - eta2 y))`.
    pub a_coef: f64,
    pub b_coef: f64,
    /// Its sign selects the dominant singularity of the low-class PGF.
    pub d: f64,
    pub rho_bar1: f64,
    pub r2: f64,
    /// Slope of the linear prefactor in the high-class count when `D < 0`.
    pub b_tilde: f64,
}

/// Sign of `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeCase {
    DPositive,
    DZero,
    DNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularityNature {
    SimplePole,
    PoleAndBranchPoint,
    BranchPoint,
}

/// Dominant singularity of the low-class generating function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub case: RegimeCase,
    pub dominant_singularity: f64,
    pub nature: SingularityNature,
}

impl std::fmt::Display for RegimeCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegimeCase::DPositive => "D>0",
            RegimeCase::DZero => "D=0",
            RegimeCase::DNegative => "D<0",
        })
    }
}

/// Evaluates the constants. Needs a stable, normalized instance; the
/// definitions of `D` and `eta` use the normalization explicitly.
pub fn constants(p: &ModelIIParams) -> Result<AsymptoticConstants> {
    if !p.is_stable() {
        return Err(Error::Domain(format!("model II unstable: rho1 + rho2 = {} >= 1", p.rho1() + p.rho2())));
    }
    let ModelIIParams { lambda1: l1, lambda2: l2, mu1: m1, mu2: m2, .. } = *p;
    let lam = l1 + l2;
    let s1 = m1.sqrt() - l1.sqrt();
    let s2 = m1.sqrt() + l1.sqrt();
    let b1 = l2 / (l2 + s1 * s1);
    let b2 = l2 / (l2 + s2 * s2);

    let disc0 = ((lam + m1).powi(2) - 4.0 * l1 * m1).sqrt();
    // the product of both roots is lambda1 / mu1; dividing avoids cancellation
    let c0 = 2.0 * l1 / ((lam + m1) + disc0);
    let c1 = l2 * c0 / disc0;

    let bq = 1.0 - 2.0 * m1;
    let cq = (m1 - m2) * l2;
    let root = (bq * bq + 4.0 * cq).sqrt();
    // mu2 * eta solves t^2 - bq t - cq = 0
    let (eta1, eta2) = if bq >= 0.0 {
        let e1 = (bq + root) / (2.0 * m2);
        (e1, -cq / (m2 * m2 * e1))
    } else {
        let e2 = (bq - root) / (2.0 * m2);
        (-cq / (m2 * m2 * e2), e2)
    };

    let mass = (1.0 - p.rho1() - p.rho2()) / (2.0 * m2);
    let a_coef = mass * eta1 / (eta1 - eta2);
    let b_coef = mass * eta2 / (eta2 - eta1);
    let slm = (l1 * m1).sqrt();
    let d = (lam + m1 - 2.0 * slm) * (m1 - m2 - slm) + l2 * m2;

    Ok(AsymptoticConstants {
        params: *p,
        b1,
        b2,
        c0,
        c1,
        x1_val: c0 / p.rho1(),
        x2_val: 1.0 / c0,
        eta1,
        eta2,
        a_coef,
        b_coef,
        d,
        rho_bar1: lam / m1,
        r2: l2 / lam,
        b_tilde: (m2 - m1 - m2 * b1 + slm) / slm,
    })
}

/// Classifies the dominant singularity by the sign of `D`.
pub fn regime(c: &AsymptoticConstants) -> Regime {
    if c.d.abs() <= D_ZERO_TOL {
        Regime {
            case: RegimeCase::DZero,
            dominant_singularity: 1.0 / c.b1,
            nature: SingularityNature::PoleAndBranchPoint,
        }
    } else if c.d > 0.0 {
        Regime {
            case: RegimeCase::DPositive,
            dominant_singularity: 1.0 / c.eta1,
            nature: SingularityNature::SimplePole,
        }
    } else {
        Regime { case: RegimeCase::DNegative, dominant_singularity: 1.0 / c.b1, nature: SingularityNature::BranchPoint }
    }
}

impl AsymptoticConstants {
    pub fn rho1(&self) -> f64 {
        self.params.rho1()
    }

    pub fn rho2(&self) -> f64 {
        self.params.rho2()
    }

    pub fn regime(&self) -> Regime {
        regime(self)
    }

    /// Smaller root of `mu1 u^2 - (1 - mu2 - lambda2/eta) u + lambda1 = 0`.
    pub fn u(&self, eta: f64) -> f64 {
        let p = &self.params;
        let b = 1.0 - p.mu2 - p.lambda2 / eta;
        let disc = (b * b - 4.0 * p.lambda1 * p.mu1).max(0.0).sqrt();
        // smaller-modulus root without cancellation
        if b >= 0.0 {
            2.0 * p.lambda1 / (b + disc)
        } else {
            2.0 * p.lambda1 / (b - disc)
        }
    }

    /// Branch-point coefficient `K(eta)` for the low-class asymptotics.
    pub fn k_eta(&self, eta: f64) -> f64 {
        let (b1, b2) = (self.b1, self.b2);
        self.params.lambda2 * b1 * (1.0 - b2 / b1).sqrt() / (2.0 * (b1 * b2).sqrt() * (eta - b1))
    }

    pub fn sigma(&self, eta: f64) -> f64 {
        self.k_eta(eta) / (self.b1 * PI.sqrt())
    }

    /// Checks the documented inequalities and identities.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let mut bad = Vec::new();
        if !(0.0 < self.b2 && self.b2 < self.b1 && self.b1 < 1.0) {
            bad.push(format!("expected 0 < b2 < b1 < 1, got b1 = {}, b2 = {}", self.b1, self.b2));
        }
        if !(0.0 < self.c0 && self.c0 < 1.0) {
            bad.push(format!("c0 = {} outside (0, 1)", self.c0));
        }
        if ((self.x1_val * self.x2_val) / (p.mu1 / p.lambda1) - 1.0).abs() > 1e-10 {
            bad.push("kernel root product differs from mu1/lambda1".into());
        }
        if !(self.eta1 > self.eta2 && self.eta1 > 0.0) {
            bad.push(format!("eta1 = {}, eta2 = {}", self.eta1, self.eta2));
        }
        let expect_sign = (p.mu2 - p.mu1).signum();
        if p.mu1 != p.mu2 && self.eta2.signum() != expect_sign {
            bad.push(format!("sign of eta2 = {} disagrees with mu2 - mu1", self.eta2));
        }
        let mass = (1.0 - p.rho1() - p.rho2()) / (2.0 * p.mu2);
        if (self.a_coef + self.b_coef - mass).abs() > 1e-12 {
            bad.push("a + b differs from (1 - rho1 - rho2)/(2 mu2)".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::ContractViolation(bad.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{normalize_model2, PollingParams};

    fn reference() -> AsymptoticConstants {
        constants(&normalize_model2(&PollingParams::reference(0.45).unwrap())).unwrap()
    }

    #[test]
    fn reference_values() {
        let c = reference();
        let close = |a: f64, b: f64, tol: f64| assert!((a - b).abs() < tol, "{a} vs {b}");
        close(c.b1, 0.662564, 5e-7);
        close(c.b2, 0.222682, 5e-7);
        close(c.c0, 0.1189750, 5e-8);
        // closed forms on the normalized rates (1, 3, 5, 10) / 19
        let r21 = 21f64.sqrt();
        close(c.eta1, (9.0 + r21) / 20.0, 1e-14);
        close(c.eta2, (9.0 - r21) / 20.0, 1e-14);
        close(c.eta1, 0.6791288, 5e-8);
        close(c.rho_bar1, 0.8, 1e-14);
        close(c.d, (5f64.sqrt() - 5.0) / 361.0, 1e-15);
        close(c.d, -0.0076563, 5e-8);
        close(c.x1_val, 0.594875, 5e-7);
        close(c.r2, 0.75, 1e-15);
        c.validate().unwrap();
        let r = c.regime();
        assert_eq!(r.case, RegimeCase::DNegative);
        assert_eq!(r.nature, SingularityNature::BranchPoint);
        close(r.dominant_singularity, 1.509288, 5e-6);
    }

    #[test]
    fn kernel_root_degenerates_as_lambda1_vanishes() {
        let mut last = 1.0;
        for l1 in [1e-2, 1e-4, 1e-6, 1e-8] {
            let p = ModelIIParams::from_rates(l1, 0.3, 0.5, 1.0, 10).unwrap();
            let c = constants(&p).unwrap();
            assert!(c.c0 < last && c.c0 > 0.0);
            last = c.c0;
        }
        assert!(last < 1e-7);
    }

    #[test]
    fn constants_do_not_depend_on_the_time_unit() {
        let base = PollingParams::reference(0.45).unwrap();
        let c = constants(&normalize_model2(&base)).unwrap();
        let s = constants(&normalize_model2(&base.scaled(7.3).unwrap())).unwrap();
        for (a, b) in [(c.b1, s.b1), (c.c0, s.c0), (c.eta1, s.eta1), (c.rho_bar1, s.rho_bar1)] {
            assert!((a - b).abs() <= 1e-12);
        }
        // the same values evaluated on raw rates with the unit sum kept symbolic
        let (l1, l2, m1) = (0.1, 0.3, 0.5);
        let b1_raw = l2 / (l2 + (f64::sqrt(m1) - f64::sqrt(l1)).powi(2));
        assert!((b1_raw - c.b1).abs() < 1e-12);
        let lam = l1 + l2;
        let c0_raw = ((lam + m1) - ((lam + m1).powi(2) - 4.0 * l1 * m1).sqrt()) / (2.0 * m1);
        assert!((c0_raw - c.c0).abs() < 1e-12);
    }

    #[test]
    fn unstable_instance_rejected() {
        let p = ModelIIParams::from_rates(0.3, 0.3, 0.5, 0.5, 3).unwrap();
        assert!(matches!(constants(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_band_classifies_as_d_zero() {
        let mut c = reference();
        c.d = 5e-13;
        assert_eq!(c.regime().case, RegimeCase::DZero);
        c.d = 2e-12;
        assert_eq!(c.regime().case, RegimeCase::DPositive);
    }

    #[test]
    fn u_is_the_smaller_root() {
        let c = reference();
        let p = c.params;
        for eta in [c.b1, c.eta1, 0.9] {
            let u = c.u(eta);
            let res = p.mu1 * u * u - (1.0 - p.mu2 - p.lambda2 / eta) * u + p.lambda1;
            assert!(res.abs() < 1e-13, "{res}");
            let other = p.lambda1 / (p.mu1 * u);
            assert!(u.abs() <= other.abs() + 1e-12);
        }
        // at the branch point the two roots coincide at sqrt(rho1)
        assert!((c.u(c.b1) - c.rho1().sqrt()).abs() < 1e-7);
    }
}
