//! Event simulator of the polling system, empirical distribution functions
//! and the scaled heavy-traffic observables.

mod ecdf;
mod stats;

use std::collections::{HashMap, VecDeque};
use std::hash::{BuildHasherDefault, DefaultHasher};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

pub use ecdf::{ks_distance, ks_two_sample, total_variation, EmpiricalCdf};
pub use stats::{batch_means_ci, replication_ci, ConfidenceInterval};

use crate::ctmc::{dispatch, Model1Aggregate, Model1State, ServerPos};
use crate::error::{Error, Result};
use crate::model::PollingParams;

/// Map keyed by state with a fixed hasher, so iteration order (and every
/// floating-point sum over it) is reproducible.
pub type StateMap<V> = HashMap<Model1State, V, BuildHasherDefault<DefaultHasher>>;

/// Smallest admissible run length.
pub const MIN_DEPARTURES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    /// Each replication stops once this many customers have left.
    pub min_departures: u64,
    /// Departures discarded before any statistic is recorded.
    pub warmup_departures: u64,
    pub seed: u64,
    pub replications: usize,
}

impl SimConfig {
    /// One replication with the default warmup of 20% of the run.
    pub fn new(min_departures: u64, seed: u64) -> Result<Self> {
        let cfg = Self { min_departures, warmup_departures: min_departures / 5, seed, replications: 1 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_warmup(self, warmup_departures: u64) -> Result<Self> {
        let cfg = Self { warmup_departures, ..self };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_replications(self, replications: usize) -> Result<Self> {
        let cfg = Self { replications, ..self };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_departures < MIN_DEPARTURES {
            return Err(Error::InvalidParameter(format!(
                "min_departures = {} is below {MIN_DEPARTURES}",
                self.min_departures
            )));
        }
        if self.warmup_departures >= self.min_departures {
            return Err(Error::InvalidParameter(format!(
                "warmup {} must be below min_departures {}",
                self.warmup_departures, self.min_departures
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("at least one replication is required".into()));
        }
        Ok(())
    }

    /// Seed of replication `r`.
    pub fn replication_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }
}

/// Per-replication summary, used for confidence intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationSummary {
    pub seed: u64,
    pub total_time: f64,
    /// Time-average queue contents.
    pub mean_queue: [f64; 3],
    /// Mean first-start waiting time per class; NaN with no departures.
    pub mean_wait: [f64; 3],
}

/// Statistics of one or more merged replications, all after warmup.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationStats {
    /// Time spent in each exact state.
    pub occupancy: StateMap<f64>,
    pub total_time: f64,
    /// Arrival until the first start of service, per class.
    pub waits_first: [Vec<f64>; 3],
    /// Arrival until the last (re)start of service, per class. Differs from
    /// the first start only for customers whose service was interrupted.
    pub waits_last: [Vec<f64>; 3],
    pub served: [u64; 3],
    /// States found by queue-3 arrivals, just before they join.
    pub q3_arrival_states: StateMap<u64>,
    pub replications: Vec<ReplicationSummary>,
}

struct Customer {
    arrival: f64,
    first_start: Option<f64>,
    last_start: f64,
    in_service: bool,
}

impl SimulationStats {
    fn empty() -> Self {
        Self {
            occupancy: StateMap::default(),
            total_time: 0.0,
            waits_first: Default::default(),
            waits_last: Default::default(),
            served: [0; 3],
            q3_arrival_states: StateMap::default(),
            replications: Vec::new(),
        }
    }

    /// Appends `other`; occupancy and counts add up.
    pub fn merge(mut self, other: SimulationStats) -> Self {
        for (s, t) in other.occupancy {
            *self.occupancy.entry(s).or_insert(0.0) += t;
        }
        for (s, c) in other.q3_arrival_states {
            *self.q3_arrival_states.entry(s).or_insert(0) += c;
        }
        self.total_time += other.total_time;
        for q in 0..3 {
            self.waits_first[q].extend(other.waits_first[q].iter());
            self.waits_last[q].extend(other.waits_last[q].iter());
            self.served[q] += other.served[q];
        }
        self.replications.extend(other.replications);
        self
    }

    /// Time-weighted distribution of one coordinate.
    pub fn occupancy_marginal(&self, agg: Model1Aggregate) -> Vec<f64> {
        let mut out = Vec::new();
        for (s, &t) in &self.occupancy {
            let k = agg.key(s);
            if out.len() <= k {
                out.resize(k + 1, 0.0);
            }
            out[k] += t / self.total_time;
        }
        out
    }

    /// Time-weighted distribution of `(x1, x2)` as a `[x1][x2]` table.
    pub fn stable_queues_joint(&self) -> Vec<Vec<f64>> {
        let (m1, m2) = self.occupancy.keys().fold((0, 0), |(a, b), s| (a.max(s.x1), b.max(s.x2)));
        let mut table = vec![vec![0.0; m2 + 1]; m1 + 1];
        for (s, &t) in &self.occupancy {
            table[s.x1][s.x2] += t / self.total_time;
        }
        table
    }

    /// Time-average content of queue `q` (0-based).
    pub fn mean_queue(&self, q: usize) -> f64 {
        self.occupancy.iter().map(|(s, &t)| s.counts()[q] as f64 * t).sum::<f64>() / self.total_time
    }

    /// Occupancy normalised to probabilities, sorted by state.
    pub fn occupancy_distribution(&self) -> Vec<(Model1State, f64)> {
        let mut v: Vec<_> = self.occupancy.iter().map(|(s, &t)| (*s, t / self.total_time)).collect();
        v.sort_by_key(|a| a.0);
        v
    }

    /// Relative frequencies of the states seen by queue-3 arrivals.
    pub fn q3_arrival_distribution(&self) -> Vec<(Model1State, f64)> {
        let total: u64 = self.q3_arrival_states.values().sum();
        let mut v: Vec<_> = self.q3_arrival_states.iter().map(|(s, &c)| (*s, c as f64 / total as f64)).collect();
        v.sort_by_key(|a| a.0);
        v
    }

    /// CSV `class,sample` of first-start waiting times; `class` is 1-based.
    pub fn write_waits_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "class,sample")?;
        for (q, samples) in self.waits_first.iter().enumerate() {
            for x in samples {
                writeln!(w, "{},{}", q + 1, x)?;
            }
        }
        Ok(())
    }

    /// Same layout for the last-start definition.
    pub fn write_last_start_waits_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "class,sample")?;
        for (q, samples) in self.waits_last.iter().enumerate() {
            for x in samples {
                writeln!(w, "{},{}", q + 1, x)?;
            }
        }
        Ok(())
    }

    /// CSV `x1,x2,x3,server,time_fraction`, sorted by state.
    pub fn write_occupancy_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x1,x2,x3,server,time_fraction")?;
        for (s, f) in self.occupancy_distribution() {
            writeln!(w, "{},{},{},{},{}", s.x1, s.x2, s.x3, s.server, f)?;
        }
        Ok(())
    }
}

/// Runs `cfg.replications` independent replications concurrently and merges
/// them in replication order.
pub fn simulate(p: &PollingParams, cfg: &SimConfig) -> Result<SimulationStats> {
    Ok(simulate_replications(p, cfg)?.into_iter().fold(SimulationStats::empty(), SimulationStats::merge))
}

/// The replications, unmerged, in index order.
pub fn simulate_replications(p: &PollingParams, cfg: &SimConfig) -> Result<Vec<SimulationStats>> {
    cfg.validate()?;
    Ok((0..cfg.replications).into_par_iter().map(|r| run_replication(p, cfg, cfg.replication_seed(r))).collect())
}

/// One sequential event loop. Every step draws one event from the competing
/// exponential clocks; the order service completion, then arrivals 1, 2, 3
/// fixes how a uniform draw maps to an event.
fn run_replication(p: &PollingParams, cfg: &SimConfig, seed: u64) -> SimulationStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.threshold_n;
    let arrivals = [p.lambda1, p.lambda2, p.lambda3];
    let service = [p.mu1, p.mu2, p.mu3];
    let mut queues: [VecDeque<Customer>; 3] = Default::default();
    let mut server = ServerPos::Q1;
    let mut now = 0.0;
    let mut departures = 0u64;
    let mut stats = SimulationStats::empty();

    while departures < cfg.min_departures {
        let recording = departures >= cfg.warmup_departures;
        let counts = [queues[0].len(), queues[1].len(), queues[2].len()];
        let state = Model1State::new(counts[0], counts[1], counts[2], server);
        let q = server.index();
        let serving = counts[q] > 0;
        if serving {
            assert!(q == 0 || counts[0] == 0, "served queue {} while queue 1 was nonempty", q + 1);
            assert!(q != 2 || counts[1] < n, "served queue 3 at the threshold");
        }
        let service_rate = if serving { service[q] } else { 0.0 };
        let total = service_rate + arrivals.iter().sum::<f64>();
        let e: f64 = rng.sample(Exp1);
        let dt = e / total;
        if recording {
            *stats.occupancy.entry(state).or_insert(0.0) += dt;
            stats.total_time += dt;
        }
        now += dt;

        let mut u = rng.random::<f64>() * total;
        if u < service_rate {
            let c = queues[q].pop_front().expect("served queue is nonempty");
            departures += 1;
            if recording {
                let first = c.first_start.expect("departing customer was served");
                stats.waits_first[q].push(first - c.arrival);
                stats.waits_last[q].push(c.last_start - c.arrival);
                stats.served[q] += 1;
            }
        } else {
            u -= service_rate;
            let mut k = 0;
            while k < 2 && u >= arrivals[k] {
                u -= arrivals[k];
                k += 1;
            }
            if k == 2 && recording {
                *stats.q3_arrival_states.entry(state).or_insert(0) += 1;
            }
            queues[k].push_back(Customer { arrival: now, first_start: None, last_start: now, in_service: false });
        }

        let next = dispatch(queues[0].len(), queues[1].len(), queues[2].len(), server, n);
        if next != server {
            if let Some(h) = queues[q].front_mut() {
                h.in_service = false;
            }
        }
        server = next;
        if let Some(h) = queues[server.index()].front_mut() {
            if !h.in_service {
                h.in_service = true;
                h.first_start.get_or_insert(now);
                h.last_start = now;
            }
        }
    }

    let mean_wait = std::array::from_fn(|q| {
        let w = &stats.waits_first[q];
        w.iter().sum::<f64>() / w.len() as f64
    });
    let mean_queue = std::array::from_fn(|q| stats.mean_queue(q));
    stats.replications.push(ReplicationSummary { seed, total_time: stats.total_time, mean_queue, mean_wait });
    stats
}

/// Queue-3 content and waiting times scaled by `epsilon = 1 - rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledObservable {
    pub epsilon: f64,
    /// `(epsilon x3, time fraction)`, sorted by level.
    pub x3: Vec<(f64, f64)>,
    /// `epsilon W3` (first-start).
    pub w3: Vec<f64>,
}

impl ScaledObservable {
    pub fn x3_cdf(&self) -> Result<EmpiricalCdf> {
        EmpiricalCdf::weighted(self.x3.iter().copied())
    }

    pub fn w3_cdf(&self) -> Result<EmpiricalCdf> {
        EmpiricalCdf::new(&self.w3)
    }

    pub fn mean_x3(&self) -> f64 {
        self.x3.iter().map(|(z, w)| z * w).sum()
    }
}

pub fn scaled_samples(stats: &SimulationStats, p: &PollingParams) -> Result<ScaledObservable> {
    let rho = p.loads().rho_total;
    if !(rho < 1.0) {
        return Err(Error::Domain(format!("load {rho} is not below 1")));
    }
    let epsilon = 1.0 - rho;
    let x3 = stats
        .occupancy_marginal(Model1Aggregate::X3)
        .into_iter()
        .enumerate()
        .filter(|&(_, w)| w > 0.0)
        .map(|(k, w)| (epsilon * k as f64, w))
        .collect();
    let w3 = stats.waits_first[2].iter().map(|w| epsilon * w).collect();
    Ok(ScaledObservable { epsilon, x3, w3 })
}
