//! The twelve acceptance criteria, each reported as one pass/fail line.

use std::fmt;
use std::sync::OnceLock;

use anyhow::{anyhow, Result};
use rayon::prelude::*;
use threshold_polling::ctmc::{
    build_truncated_generator, stationary_distribution, Generator, Model1Aggregate, Model1State, Model2Aggregate,
    ModelI, ModelII, StationaryDist, TruncationCaps, DEFAULT_STATE_BUDGET,
};
use threshold_polling::heavy_traffic::eta;
use threshold_polling::model::normalize_model2;
use threshold_polling::sim::{scaled_samples, simulate, total_variation, SimConfig};
use threshold_polling::tails::{constants, series_coefficients, tail_report, tail_total, Pgf};
use threshold_polling::{ModelIIParams, PollingParams, VacationRates};

use crate::config::ExperimentConfig;
use crate::experiments::{heavy_traffic_from, model2_oracle, ratio_error, LoadRun, FIT_RANGE};
use crate::fit::{fitted_decay_rate, linear_fit, log_ratio_decay_rate, log_relative_error};

pub const CRITERIA: usize = 12;

/// Criteria whose stated target is known not to hold; the acceptance suite
/// reports them as failures and checks the accompanying diagnostic instead.
pub const KNOWN_UNATTAINABLE: [u8; 2] = [7, 11];

/// A supplementary check reported next to a criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub diagnostic: Option<Diagnostic>,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {}: {} -- {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail
        )?;
        if let Some(d) = &self.diagnostic {
            write!(f, " [diagnostic {}: {}]", if d.passed { "ok" } else { "FAILED" }, d.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationOptions {
    pub seed: u64,
    /// Run length of the oracle-simulator comparison.
    pub oracle_departures: u64,
    /// Run length at `rho = 0.99`.
    pub heavy_departures: u64,
    /// Run length of each ratio-error cell.
    pub table1_departures: u64,
    pub table1_seeds: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            oracle_departures: 5_000_000,
            heavy_departures: 20_000_000,
            table1_departures: 10_000_000,
            table1_seeds: 3,
        }
    }
}

type Model1Solve = std::result::Result<(Generator<Model1State>, StationaryDist<Model1State>), String>;

/// Shared, lazily solved chains.
pub struct Validator {
    pub opts: ValidationOptions,
    model1: OnceLock<Model1Solve>,
}

fn reference(rho: f64) -> Result<PollingParams> {
    Ok(PollingParams::reference(0.0)?.at_total_load(rho)?)
}

fn normalized_reference() -> Result<ModelIIParams> {
    Ok(normalize_model2(&PollingParams::reference(0.45)?))
}

fn model2_config(cap1: usize, cap2: usize) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig { model2_caps: TruncationCaps::model2(cap1, cap2)?, ..Default::default() })
}

fn verdict(id: u8, title: &'static str, passed: bool, detail: String) -> CriterionResult {
    CriterionResult { id, title, passed, detail, diagnostic: None }
}

impl Validator {
    pub fn new(opts: ValidationOptions) -> Self {
        Self { opts, model1: OnceLock::new() }
    }

    fn model1_oracle(&self) -> Result<&(Generator<Model1State>, StationaryDist<Model1State>)> {
        self.model1
            .get_or_init(|| {
                let run = || -> Result<_> {
                    let p = reference(0.8)?;
                    let g = build_truncated_generator(
                        &ModelI(p),
                        &TruncationCaps::new(30, 30, 150)?,
                        DEFAULT_STATE_BUDGET,
                    )?;
                    let d = stationary_distribution(&g, 1e-10)?;
                    Ok((g, d))
                };
                run().map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| anyhow!("{e}"))
    }

    pub fn run(&self, id: u8) -> CriterionResult {
        let title = TITLES[id as usize - 1];
        let out = match id {
            1 => self.c1(),
            2 => self.c2(),
            3 => self.c3(),
            4 => self.c4(),
            5 => self.c5(),
            6 => self.c6(),
            7 => self.c7(),
            8 => self.c8(),
            9 => self.c9(),
            10 => self.c10(),
            11 => self.c11(),
            12 => self.c12(),
            _ => Err(anyhow!("no criterion {id}")),
        };
        match out {
            Ok(mut r) => {
                r.title = title;
                r
            }
            Err(e) => verdict(id, title, false, format!("error: {e:#}")),
        }
    }

    /// Every criterion, evaluated concurrently and returned in order.
    pub fn run_all(&self) -> Vec<CriterionResult> {
        (1..=CRITERIA as u8).into_par_iter().map(|id| self.run(id)).collect()
    }

    fn c1(&self) -> Result<CriterionResult> {
        let h = eta(&reference(0.9)?)?;
        let inv_err = (1.0 / h.eta - 1.55).abs();
        let err = (h.eta - 1.0 / 1.55).abs();
        let printed = (h.eta - 0.6451613).abs() <= 5e-8;
        Ok(verdict(
            1,
            "",
            inv_err <= 1e-9 && err <= 1e-9 && printed,
            format!("1/eta = {:.12}, eta = {:.10} (|err| {:.1e}, {:.1e})", 1.0 / h.eta, h.eta, inv_err, err),
        ))
    }

    fn c2(&self) -> Result<CriterionResult> {
        let mut worst_row: f64 = 0.0;
        let mut worst_res: f64 = 0.0;
        let mut count = 0;
        let (g, d) = self.model1_oracle()?;
        worst_row = worst_row.max(g.max_abs_row_sum());
        worst_res = worst_res.max(d.residual());
        count += 1;
        let tiny =
            build_truncated_generator(&ModelI(reference(0.8)?), &TruncationCaps::new(1, 1, 1)?, DEFAULT_STATE_BUDGET)?;
        worst_row = worst_row.max(tiny.max_abs_row_sum());
        worst_res = worst_res.max(stationary_distribution(&tiny, 1e-10)?.residual());
        count += 1;
        let p2 = normalized_reference()?;
        let originals = reference(0.99)?.vacation_rates();
        let chains: [(VacationRates, usize, usize); 4] = [
            (VacationRates::new(0.1, 0.3, 0.5, 1.0, 1)?, 2, 2),
            (p2.rates(), 60, 250),
            (p2.rates(), 60, 300),
            (originals, 60, 300),
        ];
        for (rates, c1, c2) in chains {
            let g = build_truncated_generator(&ModelII(rates), &TruncationCaps::model2(c1, c2)?, DEFAULT_STATE_BUDGET)?;
            worst_row = worst_row.max(g.max_abs_row_sum());
            worst_res = worst_res.max(stationary_distribution(&g, 1e-10)?.residual());
            count += 1;
        }
        Ok(verdict(
            2,
            "",
            worst_row <= 1e-12 && worst_res <= 1e-10,
            format!("{count} chains: max |row sum| {worst_row:.1e}, max residual {worst_res:.1e}"),
        ))
    }

    fn c3(&self) -> Result<CriterionResult> {
        let (_, d) = self.model1_oracle()?;
        let p = reference(0.8)?;
        let s = simulate(&p, &SimConfig::new(self.opts.oracle_departures, self.opts.seed)?)?;
        let tvs: Vec<f64> = [Model1Aggregate::X1, Model1Aggregate::X2, Model1Aggregate::X3]
            .iter()
            .map(|&a| total_variation(&s.occupancy_marginal(a), &d.model1_marginal(a)))
            .collect();
        Ok(verdict(
            3,
            "",
            tvs.iter().all(|&t| t <= 0.01),
            format!("TV per queue {:.4} / {:.4} / {:.4} (tolerance 0.01)", tvs[0], tvs[1], tvs[2]),
        ))
    }

    fn c4(&self) -> Result<CriterionResult> {
        let p = normalized_reference()?;
        let (d, _) = model2_oracle(&p, &model2_config(60, 250)?)?;
        let high = d.model2_marginal(Model2Aggregate::High);
        let r1 = p.rho1();
        let worst = (0..=10).map(|i| (high[i] / ((1.0 - r1) * r1.powi(i as i32)) - 1.0).abs()).fold(0.0, f64::max);
        Ok(verdict(4, "", worst <= 1e-6, format!("max relative error {worst:.2e} for i <= 10")))
    }

    fn reference_oracle(&self) -> Result<(ModelIIParams, StationaryDist<threshold_polling::ctmc::Model2State>)> {
        let p = normalized_reference()?;
        let (d, _) = model2_oracle(&p, &model2_config(60, 300)?)?;
        Ok((p, d))
    }

    fn c5(&self) -> Result<CriterionResult> {
        let (p, d) = self.reference_oracle()?;
        let busy = d.model2_marginal(Model2Aggregate::LowBusy);
        let factor = p.mu2 / p.lambda2;
        let worst = (p.threshold_n..=60)
            .map(|n| (busy[n] - factor * d.prob_busy(0, n + 1)).abs() / busy[n])
            .fold(0.0, f64::max);
        Ok(verdict(
            5,
            "",
            worst <= 1e-6,
            format!("max relative residual {worst:.2e} for {} <= n <= 60 (busy-server low marginal)", p.threshold_n),
        ))
    }

    fn c6(&self) -> Result<CriterionResult> {
        let (p, d) = self.reference_oracle()?;
        let c = constants(&p)?;
        let rate = fitted_decay_rate(|n| d.prob_busy(0, n), -1.5, FIT_RANGE);
        let err = log_relative_error(rate, c.b1);
        Ok(verdict(
            6,
            "",
            err <= 0.01,
            format!("fitted rate {rate:.6} vs b1 = {:.6}: {:.2}% on the log scale", c.b1, 100.0 * err),
        ))
    }

    fn c7(&self) -> Result<CriterionResult> {
        let (p, d) = self.reference_oracle()?;
        let c = constants(&p)?;
        let total = d.model2_marginal(Model2Aggregate::Total);
        let plain = log_ratio_decay_rate(|n| total[n], FIT_RANGE);
        let err = log_relative_error(plain, c.rho_bar1);
        let t = tail_total(&p)?;
        let fitted = fitted_decay_rate(|n| total[n], t.power, FIT_RANGE);
        let diag_err = log_relative_error(fitted, t.decay_rate);
        let mut r = verdict(
            7,
            "",
            err <= 0.01,
            format!("log-ratio rate {plain:.5} vs rho_bar1 = {:.5}: {:.2}% on the log scale", c.rho_bar1, 100.0 * err),
        );
        r.diagnostic = Some(Diagnostic {
            passed: diag_err <= 0.01 && t.case == "3b-removable",
            detail: format!(
                "pole at 1/rho_bar1 is removable (case {}); with the n^{} prefactor the fitted rate {fitted:.5} matches b1 = {:.5} to {:.2}%",
                t.case,
                t.power,
                t.decay_rate,
                100.0 * diag_err
            ),
        });
        Ok(r)
    }

    fn c8(&self) -> Result<CriterionResult> {
        let (p, d) = self.reference_oracle()?;
        let c = constants(&p)?;
        let ns: Vec<f64> = (15..=30).map(|n| n as f64).collect();
        let ratios: Vec<f64> = (15..=30).map(|n| d.prob_busy(n, 1) / d.prob_busy(n, 0)).collect();
        let f = linear_fit(&ns, &ratios);
        Ok(verdict(
            8,
            "",
            f.r_squared >= 0.99 && f.slope > 0.0,
            format!("R^2 = {:.6}, slope {:.5} vs c1/c0 = {:.5}", f.r_squared, f.slope, c.c1 / c.c0),
        ))
    }

    fn c9(&self) -> Result<CriterionResult> {
        let (p, d) = self.reference_oracle()?;
        let c = constants(&p)?;
        let total = d.model2_marginal(Model2Aggregate::Total);
        let l2 = series_coefficients(|y| c.eval_complex(Pgf::L2, y), 21, c.analytic_radius(Pgf::L2))?;
        let lt = series_coefficients(|y| c.eval_complex(Pgf::Total, y), 21, c.analytic_radius(Pgf::Total))?;
        let e2 = (0..=20).map(|n| (l2.coefficients[n] - d.prob_busy(0, n + 1)).abs()).fold(0.0, f64::max);
        let et = (0..=20).map(|n| (lt.coefficients[n] - total[n]).abs()).fold(0.0, f64::max);
        Ok(verdict(9, "", e2 <= 1e-6 && et <= 1e-6, format!("max |diff| L2 {e2:.1e}, L_T {et:.1e} for n <= 20")))
    }

    fn c10(&self) -> Result<CriterionResult> {
        let cfg = ExperimentConfig {
            loads: vec![0.99],
            sim: SimConfig::new(self.opts.heavy_departures, self.opts.seed)?,
            ..Default::default()
        };
        let p = cfg.params_at(0.99)?;
        let stats = simulate(&p, &cfg.sim)?;
        let report = heavy_traffic_from(&cfg, &[LoadRun { rho: 0.99, params: p, stats }])?;
        let row = report.rows[0];
        Ok(verdict(
            10,
            "",
            report.ks_pass && report.tv_pass,
            format!(
                "{} departures: KS {:.4}, TV {:.4} (tolerance 0.05){}",
                self.opts.heavy_departures,
                row.ks_x3,
                row.tv_stable,
                report.warning.map(|w| format!("; {w}")).unwrap_or_default()
            ),
        ))
    }

    fn c11(&self) -> Result<CriterionResult> {
        let mut lines = Vec::new();
        let mut pass = true;
        let mut diag = true;
        let mut diag_lines = Vec::new();
        for k in 0..self.opts.table1_seeds {
            let seed = self.opts.seed.wrapping_add(1000 * k as u64);
            let mut stated = [0.0; 2];
            let mut little = [0.0; 2];
            for (slot, rho) in [0.8, 0.99].into_iter().enumerate() {
                let p = reference(rho)?;
                let h = eta(&p)?;
                let s = simulate(&p, &SimConfig::new(self.opts.table1_departures, seed)?)?;
                let w3 = scaled_samples(&s, &p)?.w3;
                let m = w3.iter().sum::<f64>() / w3.len() as f64;
                stated[slot] = ratio_error(1.0 / h.wait_rate(), m);
                // Little's law: eps W3 ~ eps X3 / lambda3, lambda3 -> mu3 (1 - rho1 - rho2)
                let l = p.loads();
                little[slot] = ratio_error(1.0 / (h.eta * p.mu3 * (1.0 - l.rho1 - l.rho2)), m);
            }
            pass &= stated[1].abs() < stated[0].abs();
            diag &= little[1].abs() < little[0].abs();
            lines.push(format!("seed {seed}: {:.1}% at 0.8, {:.1}% at 0.99", stated[0], stated[1]));
            diag_lines.push(format!("{:.1}% -> {:.1}%", little[0], little[1]));
        }
        let mut r = verdict(11, "", pass, format!("ratio error of E[(1-rho)W3] vs 1/(mu3 eta): {}", lines.join("; ")));
        r.diagnostic = Some(Diagnostic {
            passed: diag,
            detail: format!(
                "against the Little's-law limit 1/(eta lambda3*) the error shrinks: {}",
                diag_lines.join(", ")
            ),
        });
        Ok(r)
    }

    fn c12(&self) -> Result<CriterionResult> {
        let instances = [
            PollingParams::reference(0.45)?,
            PollingParams::new(0.01, 0.2, 0.1, 0.49, 0.3, 1.0, 10)?,
            PollingParams::new(0.19, 0.02, 0.2, 1.17, 0.68, 2.0, 3)?,
        ];
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for q in instances {
            let rates = |p: &PollingParams| -> Result<Vec<f64>> {
                let p2 = normalize_model2(p);
                let c = constants(&p2)?;
                let mut v = vec![c.rho1(), c.c0, c.b1, c.eta1, c.rho_bar1];
                v.extend(tail_report(&p2, 3)?.iter().map(|r| r.estimate.decay_rate));
                Ok(v)
            };
            let a = rates(&q)?;
            let b = rates(&q.scaled(7.3)?)?;
            count += a.len();
            worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
        }
        Ok(verdict(12, "", worst <= 1e-12, format!("{count} decay rates, max change {worst:.1e} under x7.3")))
    }
}

pub const TITLES: [&str; CRITERIA] = [
    "heavy-traffic eta closed form",
    "generator conservation and solver residuals",
    "oracle-simulator occupancy agreement at rho = 0.8",
    "high-priority marginal is geometric",
    "low-class marginal identity",
    "decay rate of the low-class boundary probabilities",
    "total-count decay rate is rho_bar1",
    "fixed-low-count ratio grows linearly",
    "generating-function coefficients match the oracle",
    "heavy-traffic law at rho = 0.99",
    "ratio-error trend of the scaled queue-3 wait",
    "decay rates are scale invariant",
];
