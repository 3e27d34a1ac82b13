use std::fs;
use std::path::Path;
use std::process::Command;

use polling_harness::experiments::{cdf_export_from, heavy_traffic_from, simulate_loads};
use polling_harness::{run_table1, run_tail_validation, ExperimentConfig, Overrides, Statistic};
use threshold_polling::ctmc::{
    build_truncated_generator, stationary_distribution, ModelI, ModelII, TruncationCaps, DEFAULT_STATE_BUDGET,
};

fn config(dir: &Path, departures: u64) -> ExperimentConfig {
    let o = Overrides { out: Some(dir.to_path_buf()), departures: Some(departures), ..Default::default() };
    ExperimentConfig::from_toml("", &o).unwrap()
}

fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn table1_rows_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let rows = run_table1(&config(dir.path(), 200_000)).unwrap();
    assert_eq!(rows.len(), 10);
    for r in &rows {
        assert!((r.estimated - 1.55 / 1.5).abs() < 1e-12, "{}", r.estimated);
        assert!((r.ratio_error - 100.0 * (r.estimated - r.simulated) / r.simulated).abs() < 1e-9);
    }
    assert!(rows.iter().filter(|r| r.statistic == Statistic::Mean).count() == 5);
    let text = fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    assert!(text.starts_with("rho,statistic,estimated,simulated,ratio_error\n"));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn cdf_export_files_are_distribution_functions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 1_000_000);
    let runs = simulate_loads(&cfg).unwrap();
    let e = cdf_export_from(&cfg, &runs).unwrap();
    assert_eq!(e.files.len(), 15);
    for f in &e.files {
        let (header, rows) = read_csv(f);
        let w3 = f.file_name().unwrap().to_str().unwrap().starts_with("cdf_w3");
        assert_eq!(header, if w3 { "x,ecdf,analytic" } else { "x,ecdf" });
        assert!(rows.windows(2).all(|w| w[1][0] > w[0][0] && w[1][1] >= w[0][1]), "{f:?}");
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r[1])));
        if w3 {
            assert_eq!(rows[0][0], 0.0);
            assert_eq!(rows[0][2], 0.0);
            assert!(rows.windows(2).all(|w| w[1][2] >= w[0][2]));
        }
    }
    // preemptive priority: the queue-1 wait does not depend on the other loads
    assert!(e.w1_pairwise_ks <= 0.05, "{}", e.w1_pairwise_ks);
    // the queue-2 wait does: its mean grows with the load, as the oracle's
    // queue-2 content does between the lightest load and the limit
    let mean = |r: &polling_harness::experiments::LoadRun| {
        let w = &r.stats.waits_first[1];
        w.iter().sum::<f64>() / w.len() as f64
    };
    assert!(runs.windows(2).all(|w| mean(&w[1]) > mean(&w[0])));
    let d1 = stationary_distribution(
        &build_truncated_generator(&ModelI(runs[0].params), &cfg.model1_caps, DEFAULT_STATE_BUDGET).unwrap(),
        1e-10,
    )
    .unwrap();
    let d2 = stationary_distribution(
        &build_truncated_generator(&ModelII(cfg.base.vacation_rates()), &cfg.model2_caps, DEFAULT_STATE_BUDGET)
            .unwrap(),
        1e-10,
    )
    .unwrap();
    assert!(d1.expectation(|s| s.x2 as f64) < d2.expectation(|s| s.j as f64));
}

#[test]
fn tail_validation_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let v = run_tail_validation(&config(dir.path(), 1_000_000)).unwrap();
    for c in &v.checks {
        assert!(c.pass, "{c:?}");
    }
    let summary = fs::read_to_string(dir.path().join("tail_summary.csv")).unwrap();
    assert!(summary.starts_with("check,value,target,error,tolerance,pass,warning\n"));
    assert_eq!(summary.lines().count(), v.checks.len() + 1);
    let oracle = fs::read_to_string(dir.path().join("tail_oracle.csv")).unwrap();
    assert!(oracle.starts_with("quantity,n,oracle,asymptote,ratio\n"));
    let report = fs::read_to_string(dir.path().join("tail_report.csv")).unwrap();
    assert!(report.starts_with("quantity,C,p,gamma,regime\n"));
}

#[test]
fn heavy_traffic_report_structure() {
    let dir = tempfile::tempdir().unwrap();
    let o = Overrides {
        out: Some(dir.path().to_path_buf()),
        departures: Some(2_000_000),
        rho: Some(vec![0.8, 0.95]),
        ..Default::default()
    };
    let cfg = ExperimentConfig::from_toml("", &o).unwrap();
    let r = heavy_traffic_from(&cfg, &simulate_loads(&cfg).unwrap()).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert!(r.warning.is_none());
    assert!(r.rows.iter().all(|x| x.ks_x3 > 0.0 && x.ks_x3 < 1.0 && x.tv_stable >= 0.0));
    // the stable queues approach the vacation model as the load grows
    assert!(r.rows[1].tv_stable < r.rows[0].tv_stable);
    assert!(r.verdict.iter().all(|v| v.starts_with("PASS") || v.starts_with("FAIL")));
}

fn tpoll(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tpoll")).args(args).output().unwrap()
}

#[test]
fn binary_exit_codes_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let r = tpoll(&["tails", "--out", out]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(String::from_utf8_lossy(&r.stdout).lines().all(|l| l.starts_with("PASS")));

    let r = tpoll(&["simulate", "--rho", "0.8", "--departures", "20000", "--out", out]);
    assert!(r.status.success());
    for f in ["waits_rho0.8.csv", "waits_last_start_rho0.8.csv", "occupancy_rho0.8.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }

    let r = tpoll(&["solve", "--model", "vacation", "--caps", "30,120", "--out", out]);
    assert!(r.status.success());
    let (header, rows) = {
        let text = fs::read_to_string(dir.path().join("stationary_vacation.csv")).unwrap();
        let mut l = text.lines();
        (l.next().unwrap().to_string(), l.count())
    };
    assert_eq!(header, "i,j,mode,prob");
    let caps = TruncationCaps::model2(30, 120).unwrap();
    let g = build_truncated_generator(
        &ModelII(ExperimentConfig::default().base.vacation_rates()),
        &caps,
        DEFAULT_STATE_BUDGET,
    )
    .unwrap();
    assert_eq!(rows, g.dimension());

    let config = dir.path().join("run.toml");
    fs::write(&config, "[loads]\nrho = [0.85]\n[sim]\ndepartures = 20000\n").unwrap();
    let r = tpoll(&["simulate", "--config", config.to_str().unwrap(), "--out", out]);
    assert!(r.status.success());
    assert!(dir.path().join("waits_rho0.85.csv").is_file());

    // configuration errors exit with status 2
    for bad in [&["solve", "--caps", "1"][..], &["simulate", "--rho", "1.2"], &["simulate", "--departures", "5"]] {
        let r = tpoll(&[bad, &["--out", out][..]].concat());
        assert_eq!(r.status.code(), Some(2), "{bad:?}");
    }
    fs::write(&config, "[rates]\nlambda9 = 1\n").unwrap();
    assert_eq!(tpoll(&["tails", "--config", config.to_str().unwrap()]).status.code(), Some(2));
}
