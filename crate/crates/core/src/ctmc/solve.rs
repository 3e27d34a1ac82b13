use std::collections::HashMap;
use std::io::Write;

use super::{ChainState, Generator};
use crate::error::{Error, Result};

/// How to solve `pi Q = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    /// Banded GTH when the band fits in memory, Gauss-Seidel otherwise.
    Auto,
    /// Grassmann-Taksar-Heyman state reduction on the band. Subtraction
    /// free, so even probabilities near `1e-300` keep full relative
    /// accuracy.
    Gth,
    /// Symmetric Gauss-Seidel sweeps.
    GaussSeidel,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub method: SolverMethod,
    /// Bound on `max_j |(pi Q)_j|`.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { method: SolverMethod::Auto, tol: 1e-10, max_iterations: 20_000 }
    }
}

const GTH_MAX_BAND_ENTRIES: f64 = 2e7;
const GTH_MAX_WORK: f64 = 5e9;

/// Stationary probabilities of a truncated chain.
#[derive(Debug, Clone)]
pub struct StationaryDist<S> {
    states: Vec<S>,
    probs: Vec<f64>,
    index: HashMap<S, usize>,
    residual: f64,
    method: SolverMethod,
}

impl<S: ChainState> StationaryDist<S> {
    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Achieved `max_j |(pi Q)_j|`, measured after the solve.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn method(&self) -> SolverMethod {
        self.method
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Probability of `s`; zero for states outside the truncated chain.
    pub fn prob(&self, s: &S) -> f64 {
        self.index.get(s).map_or(0.0, |&k| self.probs[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, &f64)> {
        self.states.iter().zip(&self.probs)
    }

    /// Pushes the distribution through `key`; states mapped to `None` are
    /// left out, so restricted views sum to less than one.
    pub fn marginal(&self, key: impl Fn(&S) -> Option<usize>) -> Vec<f64> {
        let mut out = Vec::new();
        for (s, &p) in self.iter() {
            if let Some(k) = key(s) {
                if k >= out.len() {
                    out.resize(k + 1, 0.0);
                }
                out[k] += p;
            }
        }
        out
    }

    pub fn expectation(&self, f: impl Fn(&S) -> f64) -> f64 {
        self.iter().map(|(s, &p)| p * f(s)).sum()
    }

    /// CSV with the state columns followed by `prob`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{},prob", S::csv_header())?;
        for (s, p) in self.iter() {
            writeln!(w, "{},{:e}", s.csv_fields(), p)?;
        }
        Ok(())
    }
}

pub fn stationary_distribution<S: ChainState>(g: &Generator<S>, tol: f64) -> Result<StationaryDist<S>> {
    stationary_distribution_with(g, &SolverOptions { tol, ..SolverOptions::default() })
}

pub fn stationary_distribution_with<S: ChainState>(
    g: &Generator<S>,
    opts: &SolverOptions,
) -> Result<StationaryDist<S>> {
    let n = g.dimension();
    if n == 0 {
        return Err(Error::InvalidParameter("empty generator".into()));
    }
    let method = match opts.method {
        SolverMethod::Auto => {
            let bw = g.bandwidth() as f64;
            let nf = n as f64;
            if nf * (2.0 * bw + 1.0) <= GTH_MAX_BAND_ENTRIES && nf * bw * bw <= GTH_MAX_WORK {
                SolverMethod::Gth
            } else {
                SolverMethod::GaussSeidel
            }
        }
        m => m,
    };
    let probs = match method {
        SolverMethod::Gth => gth(g)?,
        _ => gauss_seidel(g, opts)?,
    };
    let residual = residual_norm(g, &probs);
    if !(residual <= opts.tol) {
        return Err(Error::Solver { residual, iterations: opts.max_iterations });
    }
    Ok(StationaryDist { states: g.states().to_vec(), probs, index: g.index_map().clone(), residual, method })
}

fn residual_norm<S: ChainState>(g: &Generator<S>, pi: &[f64]) -> f64 {
    g.left_multiply(pi).iter().fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

/// Square matrix stored on the band `|i - j| <= bw`.
struct Band {
    n: usize,
    bw: usize,
    a: Vec<f64>,
}

impl Band {
    fn new(n: usize, bw: usize) -> Self {
        Self { n, bw, a: vec![0.0; n * (2 * bw + 1)] }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (2 * self.bw + 1) + j + self.bw - i
    }

    #[inline]
    fn lo(&self, k: usize) -> usize {
        k.saturating_sub(self.bw)
    }

    /// GTH reduction; returns the normalized stationary vector.
    fn gth(mut self) -> Result<Vec<f64>> {
        let n = self.n;
        for k in (1..n).rev() {
            let lo = self.lo(k);
            let s: f64 = (lo..k).map(|j| self.a[self.at(k, j)]).sum();
            if !(s > 0.0) {
                return Err(Error::Solver { residual: f64::NAN, iterations: n - k });
            }
            for i in lo..k {
                let ik = self.at(i, k);
                if self.a[ik] == 0.0 {
                    continue;
                }
                self.a[ik] /= s;
                let f = self.a[ik];
                let row_k = self.at(k, lo);
                let row_i = self.at(i, lo);
                for (off, j) in (lo..k).enumerate() {
                    if j != i {
                        let v = self.a[row_k + off];
                        self.a[row_i + off] += f * v;
                    }
                }
            }
        }
        let mut pi = vec![0.0; n];
        pi[0] = 1.0;
        for k in 1..n {
            pi[k] = (self.lo(k)..k).map(|i| pi[i] * self.a[self.at(i, k)]).sum();
            // unnormalized values can leave the exponent range on long chains
            if pi[k] > 1e200 {
                pi[..=k].iter_mut().for_each(|p| *p *= 1e-200);
            }
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        Ok(pi)
    }
}

fn gth<S: ChainState>(g: &Generator<S>) -> Result<Vec<f64>> {
    let n = g.dimension();
    let mut band = Band::new(n, g.bandwidth());
    for k in 0..n {
        for (c, r) in g.row(k) {
            let at = band.at(k, c);
            band.a[at] += r;
        }
    }
    band.gth()
}

/// Symmetric Gauss-Seidel on `pi Q = 0`: a forward and a backward sweep
/// over the level ordering per iteration, renormalized after each pair.
///
/// Aggregation-disaggregation over levels was tried and dropped: started
/// far from the solution it locks into a two-cycle on the polling chain.
fn gauss_seidel<S: ChainState>(g: &Generator<S>, opts: &SolverOptions) -> Result<Vec<f64>> {
    let n = g.dimension();
    let (col_ptr, src, val) = g.incoming();
    let mut pi = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    let sweep = |pi: &mut [f64], j: usize| {
        let inflow: f64 = (col_ptr[j]..col_ptr[j + 1]).map(|e| pi[src[e]] * val[e]).sum();
        pi[j] = inflow / -g.diagonal(j);
    };
    for it in 0..opts.max_iterations {
        (0..n).for_each(|j| sweep(&mut pi, j));
        (0..n).rev().for_each(|j| sweep(&mut pi, j));
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        if it % 10 == 9 || it + 1 == opts.max_iterations {
            residual = residual_norm(g, &pi);
            if residual <= 0.1 * opts.tol {
                return Ok(pi);
            }
        }
    }
    if residual <= opts.tol {
        return Ok(pi);
    }
    Err(Error::Solver { residual, iterations: opts.max_iterations })
}
