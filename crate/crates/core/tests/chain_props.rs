use proptest::prelude::*;
use threshold_polling::ctmc::{
    build_truncated_generator, dispatch, stationary_distribution, Mode, ModelI, ModelII, ServerPos, TruncationCaps,
    DEFAULT_STATE_BUDGET,
};
use threshold_polling::heavy_traffic::{eta, inverse_eta};
use threshold_polling::sim::{scaled_samples, simulate, SimConfig, MIN_DEPARTURES};
use threshold_polling::PollingParams;

fn server() -> impl Strategy<Value = ServerPos> {
    prop_oneof![Just(ServerPos::Q1), Just(ServerPos::Q2), Just(ServerPos::Q3)]
}

// Stable instances: loads drawn first, then rates.
fn stable_params() -> impl Strategy<Value = PollingParams> {
    (0.02..0.3f64, 0.02..0.3f64, 0.02..0.3f64, 0.3..3.0f64, 0.3..3.0f64, 0.3..3.0f64, 1usize..6)
        .prop_map(|(r1, r2, r3, m1, m2, m3, n)| PollingParams::new(r1 * m1, r2 * m2, r3 * m3, m1, m2, m3, n).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dispatch_never_serves_an_empty_queue(
        x1 in 0usize..4, x2 in 0usize..15, x3 in 0usize..4, prev in server(), n in 1usize..12,
    ) {
        let s = dispatch(x1, x2, x3, prev, n);
        if x1 > 0 {
            prop_assert_eq!(s, ServerPos::Q1);
        }
        match s {
            ServerPos::Q1 => prop_assert!(x1 > 0 || x2 + x3 == 0),
            ServerPos::Q2 => prop_assert!(x1 == 0 && x2 > 0),
            ServerPos::Q3 => prop_assert!(x1 == 0 && (x3 > 0 || x2 == 0)),
        }
        // queue 3 keeps the server below the threshold
        if prev == ServerPos::Q3 && x1 == 0 && x3 > 0 && x2 < n {
            prop_assert_eq!(s, ServerPos::Q3);
        }
    }

    #[test]
    fn polling_chain_is_conservative_and_well_solved(p in stable_params(), c1 in 3usize..7, c2 in 3usize..9, c3 in 3usize..12) {
        let g = build_truncated_generator(&ModelI(p), &TruncationCaps::new(c1, c2, c3).unwrap(), DEFAULT_STATE_BUDGET).unwrap();
        prop_assert!(g.max_abs_row_sum() <= 1e-12);
        for k in 0..g.dimension() {
            prop_assert!(g.row(k).all(|(_, r)| r >= 0.0));
        }
        for s in g.states() {
            prop_assert!(s.x1 == 0 || s.server == ServerPos::Q1, "{:?}", s);
            prop_assert!(s.server != ServerPos::Q1 || s.x1 > 0 || s.x2 + s.x3 == 0, "{:?}", s);
        }
        let d = stationary_distribution(&g, 1e-10).unwrap();
        prop_assert!(d.probs().iter().all(|&v| v >= 0.0));
        prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        prop_assert!(d.residual() <= 1e-10);
    }

    #[test]
    fn vacation_chain_states_are_valid(p in stable_params(), c1 in 3usize..8, c2 in 3usize..20) {
        let g = build_truncated_generator(&ModelII(p.vacation_rates()), &TruncationCaps::model2(c1, c2).unwrap(), DEFAULT_STATE_BUDGET).unwrap();
        prop_assert!(g.max_abs_row_sum() <= 1e-12);
        for s in g.states() {
            match s.mode {
                Mode::Vacation => prop_assert!(s.i == 0 && s.j < p.threshold_n, "{:?}", s),
                Mode::Busy => prop_assert!(s.i + s.j > 0, "{:?}", s),
            }
        }
        let d = stationary_distribution(&g, 1e-10).unwrap();
        prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        prop_assert!(d.residual() <= 1e-10);
    }

    #[test]
    fn eta_closed_form(p in stable_params(), l3 in 0.0..1.0f64) {
        let l = p.loads();
        let inv = (1.0 - l.rho1 - l.rho2) + p.mu3 / p.mu1 * l.rho1 + p.mu3 / p.mu2 * l.rho2;
        let h = eta(&p).unwrap();
        prop_assert!(h.eta > 0.0);
        prop_assert!((h.eta * inv - 1.0).abs() <= 1e-12);
        prop_assert!((inverse_eta(&p).unwrap() - inv).abs() <= 1e-12 * inv);
        // eta does not see lambda3, even past the stability boundary
        let q = p.with_lambda3(l3 * p.mu3 * (1.0 - l.rho1 - l.rho2)).unwrap();
        prop_assert_eq!(eta(&q).unwrap().eta, h.eta);
    }

    #[test]
    fn eta_monotonicity_follows_the_service_rate_ratio(p in stable_params(), step in 1e-4..1e-2f64) {
        // d(1/eta)/d rho1 = mu3/mu1 - 1: eta falls in rho1 exactly when mu3 > mu1
        let h = eta(&p).unwrap().eta;
        let up1 = PollingParams { lambda1: p.lambda1 + step * p.mu1, ..p };
        let up2 = PollingParams { lambda2: p.lambda2 + step * p.mu2, ..p };
        for (q, mu) in [(up1, p.mu1), (up2, p.mu2)] {
            let Ok(hq) = eta(&q) else { continue };
            let d = hq.eta - h;
            if p.mu3 > mu * (1.0 + 1e-9) {
                prop_assert!(d < 0.0);
            } else if p.mu3 < mu * (1.0 - 1e-9) {
                prop_assert!(d > 0.0);
            }
        }
    }

    #[test]
    fn epsilon_is_the_load_slack(p in stable_params(), frac in 0.01..0.99f64) {
        let l = p.loads();
        let rho = l.rho1 + l.rho2 + frac * (1.0 - l.rho1 - l.rho2);
        let q = p.at_total_load(rho).unwrap();
        let e = eta(&q).unwrap().epsilon(&q);
        prop_assert!(e > 0.0 && e < 1.0);
        prop_assert!((e - (1.0 - rho)).abs() <= 1e-12);
        let lq = q.loads();
        prop_assert!((lq.rho3 - (1.0 - lq.rho1 - lq.rho2 - e)).abs() <= 1e-12);
    }

    #[test]
    fn sim_config_ordering(d in 0u64..100_000, w in 0u64..100_000, reps in 0usize..4) {
        let ok = d >= MIN_DEPARTURES && w < d && reps >= 1;
        let cfg = SimConfig { min_departures: d, warmup_departures: w, seed: 0, replications: reps };
        prop_assert_eq!(cfg.validate().is_ok(), ok);
        if d >= MIN_DEPARTURES {
            let c = SimConfig::new(d, 1).unwrap();
            prop_assert!(c.min_departures > c.warmup_departures);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulation_statistics_are_consistent(p in stable_params(), seed in 0u64..1000) {
        let s = simulate(&p, &SimConfig::new(MIN_DEPARTURES, seed).unwrap()).unwrap();
        let weight: f64 = s.occupancy.values().sum();
        prop_assert!((weight / s.total_time - 1.0).abs() <= 1e-9);
        prop_assert!(s.occupancy.values().all(|&v| v > 0.0));
        for q in 0..3 {
            prop_assert!(s.waits_first[q].iter().all(|&w| w >= 0.0));
            prop_assert!(s.waits_last[q].iter().zip(&s.waits_first[q]).all(|(l, f)| l >= f));
            prop_assert_eq!(s.waits_first[q].len() as u64, s.served[q]);
        }
        let e = scaled_samples(&s, &p).unwrap().epsilon;
        prop_assert!(e > 0.0 && e < 1.0);
    }
}
