//! Regressions used to read decay rates off oracle probabilities.

use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};

/// Least-squares coefficients of `ys` on the basis given row by row.
pub fn least_squares(rows: &[Vec<f64>], ys: &[f64]) -> Vec<f64> {
    let k = rows.first().map_or(0, Vec::len);
    let a = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(ys);
    a.svd(true, true).solve(&b, 1e-14).expect("singular vectors were computed").iter().copied().collect()
}

/// Decay rate `g` from `log pi_n = a + n log g + power log n + d / n`. The
/// `1/n` column absorbs the next term of an algebraic-singularity expansion.
pub fn fitted_decay_rate(pi: impl Fn(usize) -> f64, power: f64, range: RangeInclusive<usize>) -> f64 {
    let ns: Vec<usize> = range.collect();
    let rows: Vec<Vec<f64>> = ns.iter().map(|&n| vec![1.0, n as f64, 1.0 / n as f64]).collect();
    let ys: Vec<f64> = ns.iter().map(|&n| pi(n).ln() - power * (n as f64).ln()).collect();
    least_squares(&rows, &ys)[1].exp()
}

/// Decay rate from a straight line through `log pi_n`: the plain log-ratio.
pub fn log_ratio_decay_rate(pi: impl Fn(usize) -> f64, range: RangeInclusive<usize>) -> f64 {
    let ns: Vec<usize> = range.collect();
    let rows: Vec<Vec<f64>> = ns.iter().map(|&n| vec![1.0, n as f64]).collect();
    let ys: Vec<f64> = ns.iter().map(|&n| pi(n).ln()).collect();
    least_squares(&rows, &ys)[1].exp()
}

/// Straight-line fit `y = intercept + slope x` with its coefficient of
/// determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
    let c = least_squares(&rows, ys);
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - c[0] - c[1] * x).powi(2)).sum();
    LinearFit { intercept: c[0], slope: c[1], r_squared: 1.0 - ss_res / ss_tot }
}

/// `|log a / log b - 1|`: relative error of a decay rate on the log scale.
pub fn log_relative_error(rate: f64, target: f64) -> f64 {
    (rate.ln() / target.ln() - 1.0).abs()
}
