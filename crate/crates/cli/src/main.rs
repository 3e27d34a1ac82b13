use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use polling_harness::experiments::simulate_loads;
use polling_harness::validation::{ValidationOptions, Validator};
use polling_harness::{
    run_cdf_export, run_heavy_traffic_check, run_table1, run_tail_validation, ExperimentConfig, Overrides,
};
use threshold_polling::ctmc::{
    build_truncated_generator, stationary_distribution, ModelI, ModelII, DEFAULT_STATE_BUDGET,
};
use threshold_polling::model::normalize_model2;

#[derive(Parser)]
#[command(name = "tpoll", about = "Threshold priority polling: simulation, oracle solves, limits and tails")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated load schedule.
    #[arg(long, global = true, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    /// Model I caps `a,b,c` or model II caps `a,b`.
    #[arg(long, global = true, value_delimiter = ',')]
    caps: Option<Vec<usize>>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Departures per simulation run.
    #[arg(long, global = true)]
    departures: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    /// The three-queue polling system, one solve per load.
    Polling,
    /// The priority queue with vacation on the original rates.
    Vacation,
    /// The vacation model on normalised rates.
    Normalized,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate each load; export waiting times and occupancy.
    Simulate,
    /// Solve a truncated chain and export its stationary distribution.
    Solve {
        #[arg(long, value_enum, default_value = "polling")]
        model: Model,
    },
    /// Compare the simulated queue-3 content with the exponential limit.
    HeavyTraffic,
    /// Check the tail laws against the oracle and export them.
    Tails,
    /// Ratio errors of the scaled queue-3 waiting time.
    Table1,
    /// Empirical and limiting CDFs of the waiting times.
    CdfExport,
    /// Run every acceptance criterion.
    Validate,
}

fn write_file(
    cfg: &ExperimentConfig,
    name: &str,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<PathBuf> {
    let path = cfg.out_path(name);
    let mut w = BufWriter::new(File::create(&path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(path)
}

fn simulate_cmd(cfg: &ExperimentConfig) -> Result<bool> {
    for run in simulate_loads(cfg)? {
        let s = &run.stats;
        let tag = format!("rho{}", run.rho);
        write_file(cfg, &format!("waits_{tag}.csv"), |w| s.write_waits_csv(w))?;
        write_file(cfg, &format!("waits_last_start_{tag}.csv"), |w| s.write_last_start_waits_csv(w))?;
        write_file(cfg, &format!("occupancy_{tag}.csv"), |w| s.write_occupancy_csv(w))?;
        let mean = |q: usize| s.waits_first[q].iter().sum::<f64>() / s.waits_first[q].len() as f64;
        println!(
            "rho {}: time {:.1}, mean queues {:.4} {:.4} {:.4}, mean waits {:.4} {:.4} {:.4}",
            run.rho,
            s.total_time,
            s.mean_queue(0),
            s.mean_queue(1),
            s.mean_queue(2),
            mean(0),
            mean(1),
            mean(2)
        );
    }
    Ok(true)
}

fn solve_cmd(cfg: &ExperimentConfig, model: Model) -> Result<bool> {
    let mut ok = true;
    let mut report = |name: String, rows: f64, residual: f64, states: usize| {
        let good = rows <= 1e-12 && residual <= 1e-10;
        ok &= good;
        println!(
            "{} {name}: {states} states, max |row sum| {rows:.1e}, residual {residual:.1e}",
            if good { "PASS" } else { "FAIL" }
        );
    };
    match model {
        Model::Polling => {
            for &rho in &cfg.loads {
                let g =
                    build_truncated_generator(&ModelI(cfg.params_at(rho)?), &cfg.model1_caps, DEFAULT_STATE_BUDGET)?;
                let d = stationary_distribution(&g, 1e-10)?;
                let name = format!("stationary_polling_rho{rho}.csv");
                write_file(cfg, &name, |w| d.write_csv(w))?;
                report(name, g.max_abs_row_sum(), d.residual(), g.dimension());
            }
        }
        Model::Vacation | Model::Normalized => {
            let rates = match model {
                Model::Vacation => cfg.base.vacation_rates(),
                _ => normalize_model2(&cfg.base).rates(),
            };
            let g = build_truncated_generator(&ModelII(rates), &cfg.model2_caps, DEFAULT_STATE_BUDGET)?;
            let d = stationary_distribution(&g, 1e-10)?;
            let name = match model {
                Model::Vacation => "stationary_vacation.csv".to_string(),
                _ => "stationary_vacation_normalized.csv".to_string(),
            };
            write_file(cfg, &name, |w| d.write_csv(w))?;
            report(name, g.max_abs_row_sum(), d.residual(), g.dimension());
        }
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    let overrides =
        Overrides { seed: cli.seed, rho: cli.rho, caps: cli.caps, out: cli.out, departures: cli.departures };
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    cfg.validate()?;
    match cli.command {
        Command::Simulate => simulate_cmd(&cfg),
        Command::Solve { model } => solve_cmd(&cfg, model),
        Command::HeavyTraffic => {
            let r = run_heavy_traffic_check(&cfg)?;
            for row in &r.rows {
                println!("rho {}: KS {:.4}, TV {:.4}", row.rho, row.ks_x3, row.tv_stable);
            }
            if let Some(w) = &r.warning {
                println!("warning: {w}");
            }
            println!("{}\n{}", r.verdict[0], r.verdict[1]);
            Ok(r.pass())
        }
        Command::Tails => {
            let v = run_tail_validation(&cfg)?;
            for c in &v.checks {
                println!(
                    "{} {}: value {:.6e}, target {:.6e}, error {:.2e} (tolerance {:.0e}){}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.target,
                    c.error,
                    c.tolerance,
                    c.warning.as_deref().map(|w| format!(" warning: {w}")).unwrap_or_default()
                );
            }
            Ok(v.all_pass())
        }
        Command::Table1 => {
            let rows = run_table1(&cfg)?;
            println!("rho     stat  estimated   simulated   ratio error %");
            for r in &rows {
                println!(
                    "{:<7} {:<5} {:<11.6} {:<11.6} {:.4}",
                    r.rho, r.statistic, r.estimated, r.simulated, r.ratio_error
                );
            }
            Ok(true)
        }
        Command::CdfExport => {
            let e = run_cdf_export(&cfg)?;
            println!("wrote {} files to {}", e.files.len(), cfg.out_dir.display());
            println!("largest pairwise KS across loads: W1 {:.4}, W2 {:.4}", e.w1_pairwise_ks, e.w2_pairwise_ks);
            Ok(true)
        }
        Command::Validate => {
            let opts = ValidationOptions { seed: cfg.sim.seed, ..Default::default() };
            let results = Validator::new(opts).run_all();
            for r in &results {
                println!("{r}");
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} of {} criteria pass", results.len() - failed, results.len());
            Ok(failed == 0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
