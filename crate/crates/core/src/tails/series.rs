use num_complex::Complex64 as C;

use super::constants::AsymptoticConstants;
use crate::ctmc::{Model2State, StationaryDist};
use crate::error::{Error, Result};

/// Taylor coefficients recovered by contour quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    pub coefficients: Vec<f64>,
    /// Largest imaginary part seen; real-coefficient functions should give
    /// roundoff-level values.
    pub imaginary_residue: f64,
    /// A priori bound per coefficient: roundoff plus aliasing.
    pub error_bound: Vec<f64>,
}

/// First `count` Taylor coefficients of `f`, analytic in `|y| < radius`.
///
/// The trapezoidal rule on `|y| = radius / 2` with `M >= 8 count` nodes
/// computes each coefficient up to aliasing of order `2^-M` relative to the
/// size of `f` near the singularity, so the bound is dominated by roundoff
/// amplified by `(2 / radius)^k`.
pub fn series_coefficients(f: impl Fn(C) -> Result<C>, count: usize, radius: f64) -> Result<SeriesCoefficients> {
    if count == 0 {
        return Ok(SeriesCoefficients { coefficients: vec![], imaginary_residue: 0.0, error_bound: vec![] });
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {radius} must be positive")));
    }
    let r = if radius.is_finite() { radius / 2.0 } else { 1.0 };
    let m = (8 * count).max(64);
    let values: Vec<C> =
        (0..m).map(|j| f(C::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / m as f64))).collect::<Result<_>>()?;
    let fmax = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut coefficients = Vec::with_capacity(count);
    let mut error_bound = Vec::with_capacity(count);
    let mut imaginary_residue: f64 = 0.0;
    for k in 0..count {
        let step = C::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / m as f64);
        let mut w = C::new(1.0, 0.0);
        let mut acc = C::new(0.0, 0.0);
        for v in &values {
            acc += v * w;
            w *= step;
        }
        let ck = acc / (m as f64 * r.powi(k as i32));
        let scale = fmax / r.powi(k as i32);
        let roundoff = 4.0 * f64::EPSILON * (m as f64).sqrt() * scale;
        // the first aliased term is the coefficient of order k + M,
        // bounded by Cauchy on a circle just inside the singularity
        let alias = if radius.is_finite() { scale * 0.5f64.powi(m as i32) * 1e3 } else { 0.0 };
        let bound = roundoff + alias;
        if bound > 1e-3 {
            return Err(Error::Precision(format!(
                "coefficient {k} has error bound {bound:e}; request fewer coefficients"
            )));
        }
        imaginary_residue = imaginary_residue.max(ck.im.abs());
        coefficients.push(ck.re);
        error_bound.push(bound);
    }
    Ok(SeriesCoefficients { coefficients, imaginary_residue, error_bound })
}

/// Boundary probabilities of the vacation model: serving the low class at
/// `(0, j)` and on vacation at `(0, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryProbs {
    /// Index `j >= 1`; entry 0 is unused and zero.
    pub serving_low: Vec<f64>,
    /// Index `j < N`.
    pub vacation: Vec<f64>,
}

impl BoundaryProbs {
    pub fn from_oracle(d: &StationaryDist<Model2State>, n: usize, max_j: usize) -> Self {
        let serving_low = (0..=max_j).map(|j| if j == 0 { 0.0 } else { d.prob_busy(0, j) }).collect();
        let vacation = (0..n).map(|j| d.prob_vacation(j)).collect();
        Self { serving_low, vacation }
    }

    /// Checks `pi_{3,(0,j)} = r2^j pi_{3,(0,0)}` and nonnegativity.
    pub fn check(&self, r2: f64, tol: f64) -> Result<()> {
        if self.serving_low.iter().chain(&self.vacation).any(|&p| p < 0.0) {
            return Err(Error::ContractViolation("negative boundary probability".into()));
        }
        let v0 = self.vacation.first().copied().unwrap_or(0.0);
        for (j, &v) in self.vacation.iter().enumerate() {
            let expect = r2.powi(j as i32) * v0;
            if (v - expect).abs() > tol {
                return Err(Error::ContractViolation(format!("vacation probability at j = {j}: {v} vs {expect}")));
            }
        }
        Ok(())
    }
}

/// `psi_j(x) = sum_{i>=1} pi_{1,(i,j)} x^{i-1}` as a truncated power series.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiSeries {
    pub j: usize,
    /// Coefficient `k` is `pi_{1,(k+1, j)}`.
    pub coefficients: Vec<f64>,
}

impl PsiSeries {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}

/// Number of power-series terms kept per `psi_j`; the coefficients decay
/// like `c0^k`.
const PSI_TERMS: usize = 600;

/// Builds `psi_0, ..., psi_j` from the recursion over the low-class count.
/// The difference quotient at the kernel root `x1` is taken term by term so
/// the removable point never needs a limit.
pub fn psi_recursion(c: &AsymptoticConstants, bp: &BoundaryProbs, j: usize) -> Result<Vec<PsiSeries>> {
    let p = &c.params;
    let n = p.threshold_n;
    let c0 = c.c0;
    let x1 = c.x1_val;
    let l3_0 = c.l3(C::new(0.0, 0.0)).re;
    let geometric = |s: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(s.len());
        let mut acc = 0.0;
        for &v in s {
            acc = c0 * acc + v;
            out.push(acc);
        }
        out
    };
    let mut first = vec![0.0; PSI_TERMS];
    first[0] = c0 * l3_0;
    let mut out = vec![PsiSeries { j: 0, coefficients: geometric(&first) }];
    for jj in 1..=j {
        let low =
            *bp.serving_low.get(jj).ok_or_else(|| Error::Input(format!("no serving-low probability for j = {jj}")))?;
        let vac = if jj < n {
            *bp.vacation.get(jj).ok_or_else(|| Error::Input(format!("no vacation probability for j = {jj}")))?
        } else {
            0.0
        };
        let prev = &out[jj - 1].coefficients;
        let prev_at_x1 = out[jj - 1].eval(x1);
        let a_j = c0 / p.lambda1 * (p.lambda2 * prev_at_x1 + p.lambda1 * (low + vac));
        // (psi(x) - psi(x1)) / (x - x1) = sum_m q_m x^m, q_m = sum_{k>m} p_k x1^(k-1-m)
        let mut q = vec![0.0; PSI_TERMS];
        let mut acc = 0.0;
        for m in (0..PSI_TERMS - 1).rev() {
            acc = acc * x1 + prev[m + 1];
            q[m] = acc;
        }
        let scale = p.lambda2 * c0 / p.lambda1;
        let mut s = vec![0.0; PSI_TERMS];
        s[0] = a_j;
        for m in 1..PSI_TERMS {
            s[m] = scale * q[m - 1];
        }
        out.push(PsiSeries { j: jj, coefficients: geometric(&s) });
    }
    Ok(out)
}
