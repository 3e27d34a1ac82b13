//! The validation experiments: ratio-error table, CDF exports, tail-law
//! checks against the oracle and the heavy-traffic check.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Result};
use rayon::prelude::*;
use threshold_polling::ctmc::{
    build_truncated_generator, stationary_distribution, Model2Aggregate, Model2State, ModelII, StationaryDist,
    DEFAULT_STATE_BUDGET,
};
use threshold_polling::heavy_traffic::{eta, scaled_queue_cdf, scaled_wait_cdf, StableQueueLaw, TAIL_MASS_WARNING};
use threshold_polling::model::normalize_model2;
use threshold_polling::sim::{ks_distance, ks_two_sample, scaled_samples, simulate, EmpiricalCdf, SimulationStats};
use threshold_polling::tails::{
    constants, eval_pgf, series_coefficients, tail_high_marginal, tail_joint_fixed_high, tail_joint_fixed_low,
    tail_low_marginal, tail_report, tail_total, write_tail_csv, Pgf,
};
use threshold_polling::{ModelIIParams, PollingParams};

use crate::config::ExperimentConfig;
use crate::fit::{fitted_decay_rate, linear_fit, log_relative_error};

/// One simulated load of the schedule.
#[derive(Debug, Clone)]
pub struct LoadRun {
    pub rho: f64,
    pub params: PollingParams,
    pub stats: SimulationStats,
}

/// Simulates every load of the schedule, concurrently; results follow the
/// schedule order.
pub fn simulate_loads(cfg: &ExperimentConfig) -> Result<Vec<LoadRun>> {
    cfg.loads
        .par_iter()
        .map(|&rho| {
            let params = cfg.params_at(rho)?;
            let stats = simulate(&params, &cfg.sim)?;
            Ok(LoadRun { rho, params, stats })
        })
        .collect()
}

fn create(cfg: &ExperimentConfig, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = cfg.out_path(name);
    let f = File::create(&path)?;
    Ok((path, BufWriter::new(f)))
}

/// `(estimated - simulated) / simulated`, in percent.
pub fn ratio_error(estimated: f64, simulated: f64) -> f64 {
    (estimated - simulated) / simulated * 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Mean,
    Std,
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::Mean => "mean",
            Statistic::Std => "std",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioErrorRow {
    pub rho: f64,
    pub statistic: Statistic,
    pub estimated: f64,
    pub simulated: f64,
    pub ratio_error: f64,
}

impl RatioErrorRow {
    pub fn new(rho: f64, statistic: Statistic, estimated: f64, simulated: f64) -> Self {
        Self { rho, statistic, estimated, simulated, ratio_error: ratio_error(estimated, simulated) }
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean and standard deviation of `(1 - rho) W3` against the exponential
/// limit, whose mean and standard deviation are both `1/(mu3 eta)`.
pub fn table1_rows(runs: &[LoadRun]) -> Result<Vec<RatioErrorRow>> {
    let mut rows = Vec::with_capacity(2 * runs.len());
    for r in runs {
        let h = eta(&r.params)?;
        let scaled = scaled_samples(&r.stats, &r.params)?;
        if scaled.w3.len() < 2 {
            bail!("too few queue-3 departures at load {}", r.rho);
        }
        let (m, s) = mean_std(&scaled.w3);
        let limit = 1.0 / h.wait_rate();
        rows.push(RatioErrorRow::new(r.rho, Statistic::Mean, limit, m));
        rows.push(RatioErrorRow::new(r.rho, Statistic::Std, limit, s));
    }
    Ok(rows)
}

pub fn write_table1_csv<W: Write>(rows: &[RatioErrorRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "rho,statistic,estimated,simulated,ratio_error")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.rho, r.statistic, r.estimated, r.simulated, r.ratio_error)?;
    }
    Ok(())
}

/// Simulates the schedule and writes `table1.csv`.
pub fn run_table1(cfg: &ExperimentConfig) -> Result<Vec<RatioErrorRow>> {
    cfg.validate()?;
    let rows = table1_rows(&simulate_loads(cfg)?)?;
    let (_, mut w) = create(cfg, "table1.csv")?;
    write_table1_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(rows)
}

/// Number of grid points of every exported CDF.
pub const CDF_GRID_POINTS: usize = 201;

fn grid(max: f64) -> Vec<f64> {
    (0..CDF_GRID_POINTS).map(|k| max * k as f64 / (CDF_GRID_POINTS - 1) as f64).collect()
}

fn upper_quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v[((v.len() - 1) as f64 * q) as usize]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfExport {
    pub files: Vec<PathBuf>,
    /// Largest two-sample KS distance between the queue-1 waiting-time
    /// ecdfs of any two loads; likewise for queue 2.
    pub w1_pairwise_ks: f64,
    pub w2_pairwise_ks: f64,
}

pub fn cdf_export_from(cfg: &ExperimentConfig, runs: &[LoadRun]) -> Result<CdfExport> {
    let mut files = Vec::new();
    let mut w1 = Vec::new();
    let mut w2 = Vec::new();
    for r in runs {
        let h = eta(&r.params)?;
        let scaled = scaled_samples(&r.stats, &r.params)?;
        let w3 = scaled.w3_cdf()?;
        let xs = grid(upper_quantile(&scaled.w3, 0.999).max(7.0 / h.wait_rate()));
        let (path, mut w) = create(cfg, &format!("cdf_w3_rho{}.csv", r.rho))?;
        writeln!(w, "x,ecdf,analytic")?;
        let mut prev = 0.0;
        for &x in &xs {
            let (e, a) = (w3.eval(x), scaled_wait_cdf(&h, &r.params, x)?);
            if e < prev || (x == 0.0 && a != 0.0) {
                bail!("cdf export at load {} is not a distribution function", r.rho);
            }
            prev = e;
            writeln!(w, "{x},{e},{a}")?;
        }
        w.flush()?;
        files.push(path);
        for (q, store) in [(0usize, &mut w1), (1, &mut w2)] {
            let samples = &r.stats.waits_first[q];
            let f = EmpiricalCdf::new(samples)?;
            let xs = grid(upper_quantile(samples, 0.999).max(f64::MIN_POSITIVE));
            let (path, mut w) = create(cfg, &format!("cdf_w{}_rho{}.csv", q + 1, r.rho))?;
            writeln!(w, "x,ecdf")?;
            for &x in &xs {
                writeln!(w, "{x},{}", f.eval(x))?;
            }
            w.flush()?;
            files.push(path);
            store.push(f);
        }
    }
    let pairwise = |fs: &[EmpiricalCdf]| {
        let mut m: f64 = 0.0;
        for a in 0..fs.len() {
            for b in a + 1..fs.len() {
                m = m.max(ks_two_sample(&fs[a], &fs[b]));
            }
        }
        m
    };
    Ok(CdfExport { files, w1_pairwise_ks: pairwise(&w1), w2_pairwise_ks: pairwise(&w2) })
}

pub fn run_cdf_export(cfg: &ExperimentConfig) -> Result<CdfExport> {
    cfg.validate()?;
    cdf_export_from(cfg, &simulate_loads(cfg)?)
}

/// One verdict of the tail validation.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCheck {
    pub name: &'static str,
    pub value: f64,
    pub target: f64,
    /// The quantity compared with `tolerance`.
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub warning: Option<String>,
}

impl TailCheck {
    fn new(name: &'static str, value: f64, target: f64, error: f64, tolerance: f64, warning: Option<String>) -> Self {
        Self { name, value, target, error, tolerance, pass: error <= tolerance, warning }
    }
}

/// Oracle probability next to its asymptote.
#[derive(Debug, Clone, PartialEq)]
pub struct TailOracleRow {
    pub quantity: String,
    pub n: usize,
    pub oracle: f64,
    pub asymptote: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailValidation {
    pub params: ModelIIParams,
    pub checks: Vec<TailCheck>,
    pub oracle_rows: Vec<TailOracleRow>,
}

impl TailValidation {
    pub fn check(&self, name: &str) -> Option<&TailCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Truncated oracle of the vacation model with its boundary mass.
pub fn model2_oracle(p: &ModelIIParams, cfg: &ExperimentConfig) -> Result<(StationaryDist<Model2State>, f64)> {
    let g = build_truncated_generator(&ModelII(p.rates()), &cfg.model2_caps, DEFAULT_STATE_BUDGET)?;
    let d = stationary_distribution(&g, 1e-10)?;
    let (c1, c2) = (cfg.model2_caps.cap1, cfg.model2_caps.cap2);
    let edge = d.iter().filter(|(s, _)| s.i == c1 || s.j == c2).map(|(_, &v)| v).sum();
    Ok((d, edge))
}

/// Range of the decay-rate fits.
pub const FIT_RANGE: std::ops::RangeInclusive<usize> = 40..=80;

pub fn tail_validation_for(p: &ModelIIParams, cfg: &ExperimentConfig) -> Result<TailValidation> {
    let c = constants(p)?;
    let n_thr = p.threshold_n;
    let need = *FIT_RANGE.end() + 1;
    if cfg.model2_caps.cap1 < 30 || cfg.model2_caps.cap2 < need.max(61) {
        bail!("model II caps {:?} are too small for the fits up to n = {need}", cfg.model2_caps);
    }
    let (d, edge) = model2_oracle(p, cfg)?;
    let warning = (edge > TAIL_MASS_WARNING).then(|| format!("boundary mass {edge:e}"));
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut row = |q: &str, n: usize, oracle: f64, asymptote: f64| {
        rows.push(TailOracleRow { quantity: q.to_string(), n, oracle, asymptote, ratio: oracle / asymptote });
    };

    let high = d.model2_marginal(Model2Aggregate::High);
    let t = tail_high_marginal(p)?;
    let mut worst: f64 = 0.0;
    for i in 0..=20.min(high.len() - 1) {
        row("high_marginal", i, high[i], t.at(i));
        if i <= 10 {
            worst = worst.max((high[i] / t.at(i) - 1.0).abs());
        }
    }
    checks.push(TailCheck::new("high_marginal_ratio", worst, 0.0, worst, 1e-6, None));

    let busy = d.model2_marginal(Model2Aggregate::LowBusy);
    let rel = tail_low_marginal(p, n_thr)?;
    let mut worst: f64 = 0.0;
    for n in n_thr..=60 {
        let want = rel.factor * d.prob_busy(0, n + 1);
        row("low_marginal_identity", n, busy[n], want);
        worst = worst.max((busy[n] - want).abs() / busy[n]);
    }
    checks.push(TailCheck::new("low_marginal_identity", worst, 0.0, worst, 1e-6, None));

    let t = tail_joint_fixed_high(p, 0)?;
    for n in 1..=*FIT_RANGE.end() {
        row("joint_fixed_high_i0", n, d.prob_busy(0, n), t.at(n));
    }
    let rate = fitted_decay_rate(|n| d.prob_busy(0, n), t.power, FIT_RANGE);
    checks.push(TailCheck::new(
        "joint_fixed_high_i0_decay",
        rate,
        t.decay_rate,
        log_relative_error(rate, t.decay_rate),
        0.01,
        warning.clone(),
    ));

    let t0 = tail_joint_fixed_low(p, 0)?;
    let t1 = tail_joint_fixed_low(p, 1)?;
    for n in 1..=40 {
        row("joint_fixed_low_j0", n, d.prob_busy(n, 0), t0.at(n));
        row("joint_fixed_low_j1", n, d.prob_busy(n, 1), t1.at(n));
    }
    let ns: Vec<f64> = (15..=30).map(|n| n as f64).collect();
    let ratios: Vec<f64> = (15..=30).map(|n| d.prob_busy(n, 1) / d.prob_busy(n, 0)).collect();
    let line = linear_fit(&ns, &ratios);
    checks.push(TailCheck::new("joint_fixed_low_j1_linearity", line.r_squared, 1.0, 1.0 - line.r_squared, 0.01, None));
    let slope = c.c1 / c.c0;
    checks.push(TailCheck::new(
        "joint_fixed_low_j1_slope",
        line.slope,
        slope,
        (line.slope / slope - 1.0).abs(),
        0.05,
        None,
    ));

    let total = d.model2_marginal(Model2Aggregate::Total);
    let t = tail_total(p)?;
    for n in 0..=*FIT_RANGE.end() {
        row("total", n, total[n], t.at(n.max(1)));
    }
    let rate = fitted_decay_rate(|n| total[n], t.power, FIT_RANGE);
    checks.push(TailCheck::new(
        "total_decay",
        rate,
        t.decay_rate,
        log_relative_error(rate, t.decay_rate),
        0.01,
        warning.clone(),
    ));

    for (name, pgf, oracle) in [
        ("pgf_l2_coefficients", Pgf::L2, (0..=20).map(|n| d.prob_busy(0, n + 1)).collect::<Vec<_>>()),
        ("pgf_total_coefficients", Pgf::Total, total[..=20].to_vec()),
    ] {
        let s = series_coefficients(|y| c.eval_complex(pgf, y), 21, c.analytic_radius(pgf))?;
        let worst = s.coefficients.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        checks.push(TailCheck::new(name, worst, 0.0, worst, 1e-6, None));
    }
    // the evaluator and the oracle agree away from the origin as well
    let at = |y: f64| total.iter().enumerate().map(|(n, v)| v * y.powi(n as i32)).sum::<f64>();
    let diff = (eval_pgf(&c, Pgf::Total, 0.5)? - at(0.5)).abs();
    checks.push(TailCheck::new("pgf_total_at_half", diff, 0.0, diff, 1e-6, None));

    Ok(TailValidation { params: *p, checks, oracle_rows: rows })
}

/// Tail checks on the normalised vacation model of the base rates; writes
/// `tail_oracle.csv`, `tail_summary.csv` and `tail_report.csv`.
pub fn run_tail_validation(cfg: &ExperimentConfig) -> Result<TailValidation> {
    cfg.validate()?;
    let p = normalize_model2(&cfg.base);
    let v = tail_validation_for(&p, cfg)?;
    let (_, mut w) = create(cfg, "tail_oracle.csv")?;
    writeln!(w, "quantity,n,oracle,asymptote,ratio")?;
    for r in &v.oracle_rows {
        writeln!(w, "{},{},{},{},{}", r.quantity, r.n, r.oracle, r.asymptote, r.ratio)?;
    }
    w.flush()?;
    let (_, mut w) = create(cfg, "tail_summary.csv")?;
    writeln!(w, "check,value,target,error,tolerance,pass,warning")?;
    for c in &v.checks {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            c.name,
            c.value,
            c.target,
            c.error,
            c.tolerance,
            c.pass,
            c.warning.as_deref().unwrap_or("")
        )?;
    }
    w.flush()?;
    let (_, w) = create(cfg, "tail_report.csv")?;
    let mut w = w;
    write_tail_csv(&tail_report(&p, 2)?, &mut w)?;
    w.flush()?;
    Ok(v)
}

/// Total-variation distance of two `[x1][x2]` tables.
pub fn table_tv(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let get = |t: &[Vec<f64>], i: usize, j: usize| t.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0);
    let rows = a.len().max(b.len());
    let cols = a.iter().chain(b).map(Vec::len).max().unwrap_or(0);
    let mut s = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            s += (get(a, i, j) - get(b, i, j)).abs();
        }
    }
    0.5 * s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTrafficRow {
    pub rho: f64,
    /// KS distance of the `(1 - rho) X3` ecdf to `Exp(eta)`.
    pub ks_x3: f64,
    /// TV distance of the simulated `(X1, X2)` occupancy to the vacation
    /// model.
    pub tv_stable: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeavyTrafficReport {
    pub rows: Vec<HeavyTrafficRow>,
    pub ks_pass: bool,
    pub tv_pass: bool,
    /// KS at the largest load below KS at the smallest; `None` with a single
    /// load.
    pub monotone: Option<bool>,
    pub warning: Option<String>,
    pub verdict: [String; 2],
}

impl HeavyTrafficReport {
    pub fn pass(&self) -> bool {
        self.ks_pass && self.tv_pass && self.monotone.unwrap_or(true)
    }
}

pub const HEAVY_TRAFFIC_TOLERANCE: f64 = 0.05;

pub fn heavy_traffic_from(cfg: &ExperimentConfig, runs: &[LoadRun]) -> Result<HeavyTrafficReport> {
    let law = StableQueueLaw::solve(&runs[0].params, &cfg.model2_caps)?;
    let oracle = law.dist.joint_table();
    let mut rows = Vec::new();
    for r in runs {
        let h = eta(&r.params)?;
        let scaled = scaled_samples(&r.stats, &r.params)?;
        let ks_x3 = ks_distance(&scaled.x3_cdf()?, |z| scaled_queue_cdf(&h, z.max(0.0)).unwrap_or(0.0));
        rows.push(HeavyTrafficRow { rho: r.rho, ks_x3, tv_stable: table_tv(&r.stats.stable_queues_joint(), &oracle) });
    }
    let top = rows.iter().copied().fold(rows[0], |a, b| if b.rho > a.rho { b } else { a });
    let bottom = rows.iter().copied().fold(rows[0], |a, b| if b.rho < a.rho { b } else { a });
    let monotone = (rows.len() > 1).then_some(top.ks_x3 < bottom.ks_x3);
    let tol = HEAVY_TRAFFIC_TOLERANCE;
    let ks_pass = top.ks_x3 <= tol;
    let tv_pass = top.tv_stable <= tol;
    let verdict = [
        format!(
            "{} KS((1-rho)X3, Exp(eta)) = {:.4} at rho = {} (tolerance {tol}){}",
            if ks_pass { "PASS" } else { "FAIL" },
            top.ks_x3,
            top.rho,
            match monotone {
                Some(m) => format!(
                    ", {} than {:.4} at rho = {}",
                    if m { "below" } else { "not below" },
                    bottom.ks_x3,
                    bottom.rho
                ),
                None => String::new(),
            }
        ),
        format!(
            "{} TV((X1,X2), vacation model) = {:.4} at rho = {} (tolerance {tol})",
            if tv_pass { "PASS" } else { "FAIL" },
            top.tv_stable,
            top.rho
        ),
    ];
    Ok(HeavyTrafficReport { rows, ks_pass, tv_pass, monotone, warning: law.precision_warning(), verdict })
}

/// Simulates the schedule and writes `heavy_traffic.csv`.
pub fn run_heavy_traffic_check(cfg: &ExperimentConfig) -> Result<HeavyTrafficReport> {
    cfg.validate()?;
    let report = heavy_traffic_from(cfg, &simulate_loads(cfg)?)?;
    let (_, mut w) = create(cfg, "heavy_traffic.csv")?;
    writeln!(w, "rho,ks_x3,tv_stable")?;
    for r in &report.rows {
        writeln!(w, "{},{},{}", r.rho, r.ks_x3, r.tv_stable)?;
    }
    w.flush()?;
    Ok(report)
}
