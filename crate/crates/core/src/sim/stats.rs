use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Two-sided Student-t interval for a mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub mean: f64,
    pub half_width: f64,
    pub std_error: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width
    }
}

/// Interval from independent replication estimates.
pub fn replication_ci(values: &[f64], level: f64) -> Result<ConfidenceInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence level {level} must lie in (0, 1)")));
    }
    let n = values.len();
    if n < 2 {
        return Err(Error::Domain(format!("{n} estimates give no interval")));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = StudentsT::new(0.0, 1.0, nf - 1.0)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .inverse_cdf(0.5 + level / 2.0);
    let std_error = (var / nf).sqrt();
    Ok(ConfidenceInterval { mean, half_width: t * std_error, std_error, level })
}

/// Interval from `batches` consecutive batch means of one correlated series.
/// A trailing remainder shorter than a batch is dropped.
pub fn batch_means_ci(series: &[f64], batches: usize, level: f64) -> Result<ConfidenceInterval> {
    if batches < 2 || series.len() < batches {
        return Err(Error::Domain(format!("{} samples cannot form {batches} batches", series.len())));
    }
    let size = series.len() / batches;
    let means: Vec<f64> =
        series.chunks_exact(size).take(batches).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    replication_ci(&means, level)
}
