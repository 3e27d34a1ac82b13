//! Experiment configuration: a TOML file with sections, overridable from
//! the command line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use threshold_polling::ctmc::TruncationCaps;
use threshold_polling::sim::SimConfig;
use threshold_polling::PollingParams;

pub const DEFAULT_LOADS: [f64; 5] = [0.8, 0.9, 0.95, 0.975, 0.99];
pub const DEFAULT_DEPARTURES: u64 = 1_000_000;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RatesSection {
    lambda1: f64,
    lambda2: f64,
    mu1: f64,
    mu2: f64,
    mu3: f64,
    threshold_n: usize,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self { lambda1: 0.1, lambda2: 0.3, mu1: 0.5, mu2: 1.0, mu3: 1.5, threshold_n: 10 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct LoadsSection {
    rho: Vec<f64>,
}

impl Default for LoadsSection {
    fn default() -> Self {
        Self { rho: DEFAULT_LOADS.to_vec() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SimSection {
    departures: u64,
    warmup: Option<u64>,
    seed: u64,
    replications: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        Self { departures: DEFAULT_DEPARTURES, warmup: None, seed: 1, replications: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CapsSection {
    model1: [usize; 3],
    model2: [usize; 2],
}

impl Default for CapsSection {
    fn default() -> Self {
        Self { model1: [30, 30, 150], model2: [60, 300] }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OutputSection {
    dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConfigFile {
    rates: RatesSection,
    loads: LoadsSection,
    sim: SimSection,
    caps: CapsSection,
    output: OutputSection,
}

/// Values given on the command line; each replaces the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub rho: Option<Vec<f64>>,
    /// Three values set the model I caps, two the model II caps.
    pub caps: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub departures: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Base rates; `lambda3` is set per load.
    pub base: PollingParams,
    pub loads: Vec<f64>,
    pub sim: SimConfig,
    pub model1_caps: TruncationCaps,
    pub model2_caps: TruncationCaps,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_toml("", &Overrides::default()).expect("defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let text = match path {
            Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn from_toml(text: &str, overrides: &Overrides) -> Result<Self> {
        let mut file: ConfigFile = toml::from_str(text).context("parsing the configuration")?;
        if let Some(seed) = overrides.seed {
            file.sim.seed = seed;
        }
        if let Some(rho) = &overrides.rho {
            file.loads.rho = rho.clone();
        }
        if let Some(d) = overrides.departures {
            file.sim.departures = d;
            file.sim.warmup = None;
        }
        match overrides.caps.as_deref() {
            None => {}
            Some(&[a, b, c]) => file.caps.model1 = [a, b, c],
            Some(&[a, b]) => file.caps.model2 = [a, b],
            Some(other) => bail!("--caps takes two (model II) or three (model I) values, got {}", other.len()),
        }
        if let Some(out) = &overrides.out {
            file.output.dir = out.clone();
        }
        let r = &file.rates;
        let base = PollingParams::new(r.lambda1, r.lambda2, 0.0, r.mu1, r.mu2, r.mu3, r.threshold_n)?;
        let mut sim = SimConfig::new(file.sim.departures, file.sim.seed)?.with_replications(file.sim.replications)?;
        if let Some(w) = file.sim.warmup {
            sim = sim.with_warmup(w)?;
        }
        let [a, b, c] = file.caps.model1;
        let [d, e] = file.caps.model2;
        let cfg = Self {
            base,
            loads: file.loads.rho,
            sim,
            model1_caps: TruncationCaps::new(a, b, c)?,
            model2_caps: TruncationCaps::model2(d, e)?,
            out_dir: file.output.dir,
        };
        cfg.check_loads()?;
        Ok(cfg)
    }

    fn check_loads(&self) -> Result<()> {
        let l = self.base.loads();
        let lo = l.rho1 + l.rho2;
        if self.loads.is_empty() {
            bail!("the load schedule is empty");
        }
        for &rho in &self.loads {
            if !(rho > lo && rho < 1.0) {
                bail!("load {rho} must lie in ({lo}, 1)");
            }
        }
        Ok(())
    }

    /// Checks the schedule and that the output directory can be written,
    /// creating it if needed.
    pub fn validate(&self) -> Result<()> {
        self.check_loads()?;
        self.base.at_total_load(self.loads[0])?;
        fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        let probe = self.out_dir.join(".write-probe");
        fs::write(&probe, b"").with_context(|| format!("{} is not writable", self.out_dir.display()))?;
        fs::remove_file(probe)?;
        Ok(())
    }

    pub fn params_at(&self, rho: f64) -> Result<PollingParams> {
        Ok(self.base.at_total_load(rho)?)
    }

    pub fn largest_load(&self) -> f64 {
        self.loads.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn smallest_load(&self) -> f64 {
        self.loads.iter().copied().fold(f64::MAX, f64::min)
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}
