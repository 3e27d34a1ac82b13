use num_complex::Complex64 as C;

use super::constants::{AsymptoticConstants, RegimeCase};
use crate::error::{Error, Result};

/// Which determination of `sqrt(Delta)` to use. The principal one is the
/// analytic continuation of the positive root on `[0, 1]`; the flipped one
/// exposes the branch-point behaviour at `1/b1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Principal,
    Flipped,
}

/// The auxiliary functions at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialFunctionValues {
    pub y: C,
    pub delta: C,
    pub sqrt_delta: C,
    pub f: C,
    pub t: C,
    pub t_star: C,
    pub h: C,
    pub beta: C,
    pub alpha: C,
    pub x2: C,
    pub a_of_y: C,
    pub iota: C,
    pub kappa: C,
}

/// Generating functions of the stationary vacation model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pgf {
    /// `sum pi_{1,(i,j)} x^{i-1} y^j` at the given `x`.
    L1(f64),
    /// `sum pi_{2,(0,j)} y^{j-1}`.
    L2,
    /// `sum_{j<N} pi_{3,(0,j)} y^j`.
    L3,
    /// Total count `i + j`.
    Total,
    /// Low-class count over every mode, vacation included.
    Low,
    /// Low-class count while the server works.
    LowBusy,
}

/// Points closer than this to a removable singularity are evaluated by the
/// mean over a small circle around them.
const REMOVABLE_GUARD: f64 = 1e-6;
const REMOVABLE_RADIUS: f64 = 1e-3;
const REMOVABLE_NODES: usize = 32;

impl AsymptoticConstants {
    pub fn delta(&self, y: C) -> C {
        let p = &self.params;
        let s = p.lambda() + p.mu1 - p.lambda2 * y;
        s * s - 4.0 * p.lambda1 * p.mu1
    }

    /// `sqrt(Delta)` through the factorization over the branch points, so
    /// the cut runs along `[1/b1, inf)` and never crosses the disc.
    pub fn sqrt_delta(&self, y: C, branch: Branch) -> C {
        let scale = self.params.lambda2 / (self.b1 * self.b2).sqrt();
        let v = scale * (1.0 - self.b1 * y).sqrt() * (1.0 - self.b2 * y).sqrt();
        match branch {
            Branch::Principal => v,
            Branch::Flipped => -v,
        }
    }

    pub fn f_poly(&self, y: C) -> C {
        let p = &self.params;
        p.lambda2 * y * y - (1.0 - 2.0 * p.mu1 + p.mu2) * y + 2.0 * p.mu2
    }

    /// `sum_{k<N} (r2 y)^k`.
    pub fn h_poly(&self, y: C) -> C {
        let ry = self.r2 * y;
        let mut term = C::new(1.0, 0.0);
        let mut sum = C::new(0.0, 0.0);
        for _ in 0..self.params.threshold_n {
            sum += term;
            term *= ry;
        }
        sum
    }

    pub fn beta(&self, y: C) -> C {
        self.h_poly(y) / self.h_poly(C::new(1.0, 0.0))
    }

    /// `x K(x, y)`.
    pub fn kernel(&self, x: C, y: C) -> C {
        let p = &self.params;
        -p.lambda1 * x * x + (p.lambda() + p.mu1 - p.lambda2 * y) * x - p.mu1
    }

    pub fn a_of_y(&self, y: C) -> C {
        let p = &self.params;
        p.lambda1 + p.lambda2 * (1.0 - y) + p.mu2 * (1.0 - 1.0 / y)
    }

    /// Kernel roots `(x1(y), x2(y))`; `x1` uses the stable product form.
    pub fn kernel_roots(&self, y: C, branch: Branch) -> (C, C) {
        let p = &self.params;
        let s = p.lambda() + p.mu1 - p.lambda2 * y;
        let r = self.sqrt_delta(y, branch);
        let x2 = (s + r) / (2.0 * p.lambda1);
        let x1 = p.mu1 / (p.lambda1 * x2);
        (x1, x2)
    }

    /// `iota` in the rationalized form, which has no removable point at 1.
    pub fn iota(&self, y: C, branch: Branch) -> C {
        let p = &self.params;
        2.0 * p.mu1 * p.lambda2 / (p.mu2 * (p.mu1 - p.lambda() + p.lambda2 * y + self.sqrt_delta(y, branch)))
    }

    /// Multiplier turning the low-class bracket into the total-count PGF,
    /// `L_T = bracket * kappa * beta`. The `T / (1 - y)` term is rewritten
    /// as `4 mu2^2 (1 - eta1 y)(1 - eta2 y) / T*` to drop the removable
    /// point at `y = 1`.
    pub fn kappa(&self, y: C, branch: Branch) -> C {
        let p = &self.params;
        let t_star = self.f_poly(y) + y * self.sqrt_delta(y, branch);
        let first = 2.0 * p.mu2 * (1.0 - self.eta1 * y) * (1.0 - self.eta2 * y) / t_star;
        (first + (p.mu1 - p.mu2) * y * self.iota(y, branch) / p.mu1) / (1.0 - self.rho_bar1 * y)
    }

    pub fn values_at(&self, y: C) -> SpecialFunctionValues {
        let b = Branch::Principal;
        let sd = self.sqrt_delta(y, b);
        let f = self.f_poly(y);
        SpecialFunctionValues {
            y,
            delta: self.delta(y),
            sqrt_delta: sd,
            f,
            t: f - y * sd,
            t_star: f + y * sd,
            h: self.h_poly(y),
            beta: self.beta(y),
            alpha: self.kernel_roots(y, b).0,
            x2: self.kernel_roots(y, b).1,
            a_of_y: self.a_of_y(y),
            iota: self.iota(y, b),
            kappa: self.kappa(y, b),
        }
    }

    /// Radius of the disc in which `which` is analytic (removable points
    /// aside).
    pub fn analytic_radius(&self, which: Pgf) -> f64 {
        let low = match self.regime().case {
            RegimeCase::DPositive => 1.0 / self.eta1,
            _ => 1.0 / self.b1,
        };
        match which {
            Pgf::L3 => f64::INFINITY,
            Pgf::Total if self.rho_bar1 < 1.0 && self.params.mu1 != self.params.mu2 => low.min(1.0 / self.rho_bar1),
            Pgf::Total if self.params.mu1 == self.params.mu2 => 1.0 / self.rho_bar1,
            _ => low,
        }
    }

    /// `(1 - rho1 - rho2)/(2 mu2) T*(y) / ((1 - eta1 y)(1 - eta2 y))`, the
    /// bracket shared by the low-class and total generating functions.
    fn bracket(&self, y: C, branch: Branch) -> C {
        let mass = 1.0 - self.rho1() - self.rho2();
        let t_star = self.f_poly(y) + y * self.sqrt_delta(y, branch);
        mass / (2.0 * self.params.mu2) * t_star / ((1.0 - self.eta1 * y) * (1.0 - self.eta2 * y))
    }

    fn near_removable(&self, y: C) -> bool {
        let g = REMOVABLE_GUARD;
        (1.0 - self.eta1 * y).norm() < g || (1.0 - self.eta2 * y).norm() < g || (1.0 - self.rho_bar1 * y).norm() < g
    }

    pub fn l3(&self, y: C) -> C {
        (1.0 - self.rho1() - self.rho2()) * self.beta(y)
    }

    pub fn l2(&self, y: C, branch: Branch) -> C {
        self.regularized(y, |z| self.bracket(z, branch) * self.iota(z, branch) * self.beta(z))
    }

    pub fn l1(&self, x: C, y: C, branch: Branch) -> C {
        self.regularized(y, |z| {
            let (_, x2) = self.kernel_roots(z, branch);
            self.bracket(z, branch) * self.beta(z) / (x2 - x)
        })
    }

    /// `(L3 + (mu1 - mu2) y L2 / mu1) / (1 - rho_bar1 y)`.
    pub fn l_total(&self, y: C, branch: Branch) -> C {
        let p = &self.params;
        self.regularized(y, |z| {
            let l2 = self.bracket(z, branch) * self.iota(z, branch) * self.beta(z);
            (self.l3(z) + (p.mu1 - p.mu2) * z * l2 / p.mu1) / (1.0 - self.rho_bar1 * z)
        })
    }

    /// Same function through `kappa`: `bracket * kappa * beta`.
    pub fn l_total_via_kappa(&self, y: C, branch: Branch) -> C {
        self.regularized(y, |z| self.bracket(z, branch) * self.kappa(z, branch) * self.beta(z))
    }

    fn regularized(&self, y: C, f: impl Fn(C) -> C) -> C {
        if !self.near_removable(y) {
            return f(y);
        }
        let sum: C = (0..REMOVABLE_NODES)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / REMOVABLE_NODES as f64;
                f(y + REMOVABLE_RADIUS * C::from_polar(1.0, th))
            })
            .sum();
        sum / REMOVABLE_NODES as f64
    }

    /// Evaluates `which` at complex `y` inside its disc of analyticity.
    pub fn eval_complex(&self, which: Pgf, y: C) -> Result<C> {
        let r = self.analytic_radius(which);
        if y.norm() >= r {
            return Err(Error::Domain(format!("|y| = {} at or beyond the singularity at {r}", y.norm())));
        }
        let b = Branch::Principal;
        let p = &self.params;
        Ok(match which {
            Pgf::L1(x) => {
                let x2 = self.kernel_roots(y, b).1;
                if x >= x2.norm() {
                    return Err(Error::Domain(format!("x = {x} at or beyond x2(y) = {}", x2.norm())));
                }
                self.l1(C::new(x, 0.0), y, b)
            }
            Pgf::L2 => self.l2(y, b),
            Pgf::L3 => self.l3(y),
            Pgf::Total => self.l_total(y, b),
            Pgf::Low => p.mu2 / p.lambda2 * self.l2(y, b),
            Pgf::LowBusy => p.mu2 / p.lambda2 * self.l2(y, b) - self.l3(y),
        })
    }
}

/// Evaluates a generating function at a real point.
pub fn eval_pgf(c: &AsymptoticConstants, which: Pgf, y: f64) -> Result<f64> {
    Ok(c.eval_complex(which, C::new(y, 0.0))?.re)
}

/// The kernel root `alpha(y) = x1(y)` for real `y`.
pub fn kernel_root_alpha(c: &AsymptoticConstants, y: f64) -> Result<f64> {
    let d = c.delta(C::new(y, 0.0)).re;
    if d < 0.0 || y > 1.0 / c.b1 {
        return Err(Error::Branch(format!("Delta({y}) = {d} < 0: no real kernel root")));
    }
    Ok(c.kernel_roots(C::new(y, 0.0), Branch::Principal).0.re)
}
