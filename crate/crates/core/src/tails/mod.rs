//! Generating functions and exact tail laws of the vacation model that
//! approximates the two stable queues.

mod constants;
mod functions;
mod series;

use std::io::Write;

use num_complex::Complex64 as C;

pub use constants::{constants, regime, AsymptoticConstants, Regime, RegimeCase, SingularityNature, D_ZERO_TOL};
pub use functions::{eval_pgf, kernel_root_alpha, Branch, Pgf, SpecialFunctionValues};
pub use series::{psi_recursion, series_coefficients, BoundaryProbs, PsiSeries, SeriesCoefficients};

use crate::error::{Error, Result};
use crate::model::ModelIIParams;

/// `pi_n ~ constant * n^power * decay_rate^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub constant: f64,
    pub power: f64,
    pub decay_rate: f64,
    /// Which case of the classification produced it.
    pub case: &'static str,
}

impl TailEstimate {
    fn checked(constant: f64, power: f64, decay_rate: f64, case: &'static str) -> Result<Self> {
        if !(constant.is_finite() && constant > 0.0) {
            return Err(Error::ContractViolation(format!("tail constant {constant} in case {case}")));
        }
        if !(decay_rate > 0.0 && decay_rate < 1.0) {
            return Err(Error::ContractViolation(format!("decay rate {decay_rate} in case {case}")));
        }
        Ok(Self { constant, power, decay_rate, case })
    }

    /// The asymptotic value at `n`.
    pub fn at(&self, n: usize) -> f64 {
        let n = n as f64;
        self.constant * n.powf(self.power) * self.decay_rate.powf(n)
    }
}

/// Relative closeness used for the measure-zero boundaries between cases.
fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// High-priority count: exactly geometric.
pub fn tail_high_marginal(p2: &ModelIIParams) -> Result<TailEstimate> {
    let c = constants(p2)?;
    TailEstimate::checked(1.0 - c.rho1(), 0.0, c.rho1(), "geometric")
}

/// `pi_{1,(n,j)}` as `n` grows with `j` low-class customers fixed.
pub fn tail_joint_fixed_low(p2: &ModelIIParams, j: usize) -> Result<TailEstimate> {
    let c = constants(p2)?;
    let beta0 = c.beta(C::new(0.0, 0.0)).re;
    let factorial: f64 = (1..=j).map(|k| k as f64).product();
    let constant = beta0 * (1.0 - c.rho1() - c.rho2()) * (c.c1 / c.c0).powi(j as i32) / factorial;
    TailEstimate::checked(constant, j as f64, c.c0, "fixed-low")
}

impl AsymptoticConstants {
    /// Constant of `pi_{2,(0,n)} ~ C eta1^n` when `D > 0`.
    pub fn c2l1(&self) -> f64 {
        let y = C::new(1.0 / self.eta1, 0.0);
        2.0 * self.a_coef * self.f_poly(y).re * self.beta(y).re
    }

    /// Constant of `pi_{2,(0,n)} ~ C n^{-1/2} b1^n` when `D = 0`.
    pub fn c2l2(&self) -> f64 {
        let (b1, b2) = (self.b1, self.b2);
        let beta = self.beta(C::new(1.0 / b1, 0.0)).re;
        self.a_coef * self.params.lambda2 * (1.0 - b2 / b1).sqrt() * beta
            / (std::f64::consts::PI.sqrt() * b1 * (b1 * b2).sqrt())
    }

    /// Constant of `pi_{2,(0,n)} ~ C n^{-3/2} b1^n` when `D < 0`.
    pub fn c2l3(&self) -> f64 {
        let beta = self.beta(C::new(1.0 / self.b1, 0.0)).re;
        (self.a_coef * self.sigma(self.eta1) + self.b_coef * self.sigma(self.eta2)) * beta
    }

    /// `(mu1 - mu2) / mu1`, the weight of the low-class term in the total.
    fn total_weight(&self) -> f64 {
        (self.params.mu1 - self.params.mu2) / self.params.mu1
    }

    fn pole_terms(&self) -> (f64, f64) {
        let y = C::new(1.0 / self.rho_bar1, 0.0);
        let l2 = self.l2(y, Branch::Principal).re;
        (self.l3(y).re, self.total_weight() * l2 / self.rho_bar1)
    }

    /// Residue-type constant at the pole `1/rho_bar1` of the total PGF.
    pub fn pole_constant(&self) -> f64 {
        let (a, b) = self.pole_terms();
        a + b
    }

    /// True when the two terms of the residue cancel to roundoff.
    pub fn pole_is_removable(&self) -> bool {
        let (a, b) = self.pole_terms();
        (a + b).abs() <= 1e-9 * (a.abs() + b.abs())
    }
}

/// `pi_{1,(i,n)}` (or `pi_{2,(0,n)}` for `i = 0`) as the low-class count `n`
/// grows with `i` fixed.
pub fn tail_joint_fixed_high(p2: &ModelIIParams, i: usize) -> Result<TailEstimate> {
    let c = constants(p2)?;
    let sr = c.rho1().sqrt();
    match c.regime().case {
        RegimeCase::DPositive => TailEstimate::checked(c.c2l1() * c.u(c.eta1).powi(i as i32), 0.0, c.eta1, "D>0"),
        RegimeCase::DZero => TailEstimate::checked(c.c2l2() * sr.powi(i as i32), -0.5, c.b1, "D=0"),
        RegimeCase::DNegative => {
            TailEstimate::checked(c.c2l3() * (1.0 + i as f64 * c.b_tilde) * sr.powi(i as i32), -1.5, c.b1, "D<0")
        }
    }
}

/// `pi_n^{(l)} = factor * pi_{2,(0,n+1)}` for the low-class count with the
/// server busy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowMarginalRelation {
    pub n: usize,
    pub factor: f64,
    /// False below the threshold, where vacation states still contribute.
    pub applicable: bool,
    pub tail: TailEstimate,
}

pub fn tail_low_marginal(p2: &ModelIIParams, n: usize) -> Result<LowMarginalRelation> {
    let factor = p2.mu2 / p2.lambda2;
    let inner = tail_joint_fixed_high(p2, 0)?;
    let tail =
        TailEstimate::checked(inner.constant * factor * inner.decay_rate, inner.power, inner.decay_rate, inner.case)?;
    Ok(LowMarginalRelation { n, factor, applicable: n >= p2.threshold_n, tail })
}

/// Total number of customers.
///
/// For `mu1 != mu2` the total PGF is `(L3 + (mu1 - mu2) y L2 / mu1) / (1 - rho_bar1 y)`.
/// The residue at `1/rho_bar1` vanishes on every instance we have solved, so
/// when it is negligible the pole is removable and the dominant singularity
/// of `L2` sets the law even where `rho_bar1` would otherwise win.
pub fn tail_total(p2: &ModelIIParams) -> Result<TailEstimate> {
    let c = constants(p2)?;
    let rb = c.rho_bar1;
    if same(p2.mu1, p2.mu2) {
        let mass = 1.0 - c.rho1() - c.rho2();
        let constant = c.beta(C::new(1.0 / rb, 0.0)).re * mass;
        return TailEstimate::checked(constant, 0.0, rb, "equal-rates");
    }
    let w = c.total_weight();
    let case = c.regime().case;
    // law driven by the singularity of L2, carried through y / (1 - rho_bar1 y)
    let singular = |label: &'static str| match case {
        RegimeCase::DPositive => TailEstimate::checked(w * c.eta1 * c.c2l1() / (c.eta1 - rb), 0.0, c.eta1, label),
        RegimeCase::DZero => TailEstimate::checked(w * c.c2l2() / (1.0 - rb / c.b1), -0.5, c.b1, label),
        RegimeCase::DNegative => TailEstimate::checked(w * c.c2l3() / (1.0 - rb / c.b1), -1.5, c.b1, label),
    };
    let pole = |label: &'static str, removable: &'static str| {
        if c.pole_is_removable() {
            singular(removable)
        } else {
            TailEstimate::checked(c.pole_constant(), 0.0, rb, label)
        }
    };
    match case {
        RegimeCase::DPositive => {
            if rb >= 1.0 || (rb < c.eta1 && !same(rb, c.eta1)) {
                singular("1a")
            } else if same(rb, c.eta1) {
                TailEstimate::checked(w * c.c2l1(), 1.0, c.eta1, "1c")
            } else {
                pole("1b", "1b-removable")
            }
        }
        RegimeCase::DZero if rb >= 1.0 => singular("2a"),
        RegimeCase::DZero => pole("2b", "2b-removable"),
        RegimeCase::DNegative if rb >= 1.0 => singular("3a"),
        RegimeCase::DNegative if same(rb, c.rho1().sqrt()) => pole("3c", "3c-removable"),
        RegimeCase::DNegative => pole("3b", "3b-removable"),
    }
}

/// One line of the tail report.
#[derive(Debug, Clone, PartialEq)]
pub struct TailRow {
    pub quantity: String,
    pub estimate: TailEstimate,
    pub regime: RegimeCase,
}

/// All tail laws of an instance; `fixed` bounds the fixed index of the
/// joint laws.
pub fn tail_report(p2: &ModelIIParams, fixed: usize) -> Result<Vec<TailRow>> {
    let regime = constants(p2)?.regime().case;
    let mut rows = vec![TailRow { quantity: "high_marginal".into(), estimate: tail_high_marginal(p2)?, regime }];
    for j in 0..=fixed {
        rows.push(TailRow {
            quantity: format!("joint_fixed_low_j{j}"),
            estimate: tail_joint_fixed_low(p2, j)?,
            regime,
        });
    }
    for i in 0..=fixed {
        rows.push(TailRow {
            quantity: format!("joint_fixed_high_i{i}"),
            estimate: tail_joint_fixed_high(p2, i)?,
            regime,
        });
    }
    let low = tail_low_marginal(p2, p2.threshold_n)?;
    rows.push(TailRow { quantity: "low_marginal".into(), estimate: low.tail, regime });
    rows.push(TailRow { quantity: "total".into(), estimate: tail_total(p2)?, regime });
    Ok(rows)
}

/// CSV with header `quantity,C,p,gamma,regime`.
pub fn write_tail_csv<W: Write>(rows: &[TailRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "quantity,C,p,gamma,regime")?;
    for r in rows {
        writeln!(
            w,
            "{},{:e},{},{},{}",
            r.quantity, r.estimate.constant, r.estimate.power, r.estimate.decay_rate, r.regime
        )?;
    }
    Ok(())
}
