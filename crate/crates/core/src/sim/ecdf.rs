use crate::error::{Error, Result};

/// Right-continuous step function of a finite, possibly weighted, sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    /// Distinct sample values, increasing.
    points: Vec<f64>,
    /// Value of the cdf at each point.
    cumulative: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        Self::weighted(samples.iter().map(|&x| (x, 1.0)))
    }

    /// Samples with nonnegative weights, normalised to total mass one.
    pub fn weighted(samples: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut v: Vec<(f64, f64)> = samples.into_iter().collect();
        if v.iter().any(|(x, w)| x.is_nan() || !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter("samples must be numbers with finite nonnegative weights".into()));
        }
        let total: f64 = v.iter().map(|(_, w)| w).sum();
        if v.is_empty() || !(total > 0.0) {
            return Err(Error::Domain("empirical cdf of an empty sample".into()));
        }
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points = Vec::new();
        let mut mass = Vec::new();
        for (x, w) in v {
            if points.last() == Some(&x) {
                *mass.last_mut().unwrap() += w;
            } else {
                points.push(x);
                mass.push(w);
            }
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = mass
            .iter()
            .map(|w| {
                acc += w;
                acc / total
            })
            .collect();
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self { points, cumulative })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.points.partition_point(|&p| p <= x) {
            0 => 0.0,
            k => self.cumulative[k - 1],
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `(x, F(x-), F(x))` at every jump.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.points.iter().enumerate().map(|(k, &x)| {
            let left = if k == 0 { 0.0 } else { self.cumulative[k - 1] };
            (x, left, self.cumulative[k])
        })
    }

    pub fn mean(&self) -> f64 {
        self.jumps().map(|(x, l, r)| x * (r - l)).sum()
    }
}

/// `sup |F_hat - F|`, checked on both sides of every jump of `F_hat`; the
/// left limit of `F` is read just below the jump.
pub fn ks_distance(ecdf: &EmpiricalCdf, cdf: impl Fn(f64) -> f64) -> f64 {
    ecdf.jumps()
        .map(|(x, left, right)| {
            let f = cdf(x);
            let f_left = cdf(x - x.abs().max(1.0) * 1e-12);
            (right - f).abs().max((left - f_left).abs())
        })
        .fold(0.0, f64::max)
}

/// `sup |F_a - F_b|` of two step functions; attained at a jump point of one
/// of them.
pub fn ks_two_sample(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    a.points().iter().chain(b.points()).map(|&x| (a.eval(x) - b.eval(x)).abs()).fold(0.0, f64::max)
}

/// Half the `l1` distance of two probability vectors on `0, 1, ...`; the
/// shorter one is padded with zeros.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    0.5 * (0..n).map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Exp1;

    fn exp_cdf(rate: f64) -> impl Fn(f64) -> f64 {
        move |x| if x <= 0.0 { 0.0 } else { 1.0 - (-rate * x).exp() }
    }

    #[test]
    fn step_values() {
        let f = EmpiricalCdf::new(&[2.0]).unwrap();
        assert_eq!(f.eval(1.9), 0.0);
        assert_eq!(f.eval(2.0), 1.0);
        let f = EmpiricalCdf::new(&[3.0, 1.0, 2.0]).unwrap();
        assert!((f.eval(2.5) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.eval(f64::NEG_INFINITY), 0.0);
        assert_eq!(f.eval(f64::INFINITY), 1.0);
        assert!((f.mean() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ties_and_weights() {
        let f = EmpiricalCdf::new(&[1.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(f.points(), &[1.0, 2.0, 4.0]);
        assert_eq!(f.eval(1.0), 0.5);
        let g = EmpiricalCdf::weighted([(0.0, 3.0), (1.0, 1.0)]).unwrap();
        assert_eq!(g.eval(0.5), 0.75);
    }

    #[test]
    fn empty_and_invalid_samples() {
        assert!(matches!(EmpiricalCdf::new(&[]), Err(Error::Domain(_))));
        assert!(matches!(EmpiricalCdf::weighted([(1.0, 0.0)]), Err(Error::Domain(_))));
        assert!(EmpiricalCdf::new(&[f64::NAN]).is_err());
        assert!(EmpiricalCdf::weighted([(1.0, -1.0)]).is_err());
    }

    #[test]
    fn ks_degenerate_cases() {
        let f = EmpiricalCdf::new(&[1.0, 2.0]).unwrap();
        assert_eq!(ks_distance(&f, |x| f.eval(x)), 0.0);
        assert_eq!(ks_two_sample(&f, &f), 0.0);
        let zero = EmpiricalCdf::new(&[0.0]).unwrap();
        assert_eq!(ks_distance(&zero, exp_cdf(1.0)), 1.0);
        // the left side of a jump matters: F = 0.9 just below the only point
        let one = EmpiricalCdf::new(&[5.0]).unwrap();
        assert!((ks_distance(&one, |x| if x < 5.0 { 0.9 } else { 1.0 }) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn ks_within_dkw_band() {
        // P(KS > eps) <= 2 exp(-2 n eps^2); eps = 0.01 with n = 1e5 gives 4e-9
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws: Vec<f64> = (0..100_000).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let d = ks_distance(&EmpiricalCdf::new(&draws).unwrap(), exp_cdf(1.0));
        assert!(d <= 0.01, "{d}");
        // 99% DKW radius at n = 1e6 is sqrt(ln(200) / 2e6) = 0.00163
        let rate = 0.645;
        let draws: Vec<f64> = (0..1_000_000).map(|_| rng.sample::<f64, _>(Exp1) / rate).collect();
        let d = ks_distance(&EmpiricalCdf::new(&draws).unwrap(), exp_cdf(rate));
        assert!(d <= 0.002, "{d}");
        let other: Vec<f64> = (0..100_000).map(|_| rng.sample::<f64, _>(Exp1) * 2.0).collect();
        let d = ks_distance(&EmpiricalCdf::new(&other).unwrap(), exp_cdf(1.0));
        assert!(d > 0.2, "{d}");
    }

    #[test]
    fn two_sample_distance() {
        let a = EmpiricalCdf::new(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = EmpiricalCdf::new(&[3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(ks_two_sample(&a, &b), 0.5);
        assert_eq!(ks_two_sample(&b, &a), 0.5);
    }

    #[test]
    fn tv_pads_with_zeros() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.25, 0.25]), 0.25);
        assert_eq!(total_variation(&[1.0], &[1.0]), 0.0);
    }
}
