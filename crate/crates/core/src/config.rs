//! TOML scenario and sweep files.
//!
//! Relative file paths inside a config resolve against the config's own
//! directory. Unknown keys are rejected.

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::demand::load_demand;
use crate::economics::{ChoiceMode, Policy, PricingParams};
use crate::engine::{DemandSource, ScenarioConfig, SupplyConfig};
use crate::error::{Error, Result};
use crate::network::{load_network, Network, NodeId};
use crate::shareability::TravellerPrefs;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::horizon")]
    pub sim_horizon_s: f64,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub demand: DemandSection,
    #[serde(default)]
    pub supply: SupplySection,
    #[serde(default)]
    pub pricing: PricingSection,
    #[serde(default)]
    pub shareability: ShareabilitySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub grid: Option<GridSpec>,
    pub nodes_file: Option<PathBuf>,
    pub edges_file: Option<PathBuf>,
    #[serde(default = "defaults::speed_kmh")]
    pub speed_kmh: f64,
}

#[derive(Copy, Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub edge_len_m: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSection {
    #[serde(default = "defaults::rate")]
    pub rate_per_h: f64,
    #[serde(default = "defaults::patience")]
    pub patience_s: f64,
    /// Explicit request table; replaces Poisson generation.
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplySection {
    #[serde(default = "defaults::drivers")]
    pub drivers: usize,
    pub positions: Option<Vec<u64>>,
    #[serde(default = "defaults::cost_per_km")]
    pub cost_per_km: f64,
    #[serde(default)]
    pub value_of_time_per_s: f64,
    #[serde(default = "defaults::multiplier")]
    pub pool_multiplier: [f64; 2],
    #[serde(default)]
    pub choice: ChoiceKind,
    #[serde(default = "defaults::logit_scale")]
    pub logit_scale: f64,
    #[serde(default)]
    pub decline_allowed: bool,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceKind {
    #[default]
    Deterministic,
    Logit,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingSection {
    /// Required unless overridden on the command line.
    pub policy: Option<Policy>,
    #[serde(default = "defaults::fare_per_km")]
    pub fare_per_km: f64,
    #[serde(default = "defaults::discount")]
    pub discount: f64,
    #[serde(default = "defaults::commission")]
    pub commission: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShareabilitySection {
    #[serde(default = "defaults::max_degree")]
    pub max_degree: usize,
    #[serde(default = "defaults::window")]
    pub window_s: f64,
    #[serde(default = "defaults::vot")]
    pub value_of_time_per_s: f64,
    #[serde(default = "defaults::sharing_penalty")]
    pub sharing_penalty: f64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Also write `rides.csv` with every enumerated candidate.
    #[serde(default)]
    pub dump_rides: bool,
}

mod defaults {
    pub fn horizon() -> f64 {
        4.0 * 3600.0
    }
    pub fn speed_kmh() -> f64 {
        36.0
    }
    pub fn rate() -> f64 {
        200.0
    }
    pub fn patience() -> f64 {
        300.0
    }
    pub fn drivers() -> usize {
        10
    }
    pub fn cost_per_km() -> f64 {
        0.5
    }
    pub fn multiplier() -> [f64; 2] {
        [1.0, 1.0]
    }
    pub fn logit_scale() -> f64 {
        1.0
    }
    pub fn fare_per_km() -> f64 {
        1.5
    }
    pub fn discount() -> f64 {
        0.25
    }
    pub fn commission() -> f64 {
        0.25
    }
    pub fn max_degree() -> usize {
        3
    }
    pub fn window() -> f64 {
        600.0
    }
    pub fn vot() -> f64 {
        0.0025
    }
    pub fn sharing_penalty() -> f64 {
        1.3
    }
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            grid: Some(GridSpec { rows: 6, cols: 6, edge_len_m: 500.0 }),
            nodes_file: None,
            edges_file: None,
            speed_kmh: defaults::speed_kmh(),
        }
    }
}

impl Default for DemandSection {
    fn default() -> Self {
        Self { rate_per_h: defaults::rate(), patience_s: defaults::patience(), file: None }
    }
}

impl Default for SupplySection {
    fn default() -> Self {
        Self {
            drivers: defaults::drivers(),
            positions: None,
            cost_per_km: defaults::cost_per_km(),
            value_of_time_per_s: 0.0,
            pool_multiplier: defaults::multiplier(),
            choice: ChoiceKind::Deterministic,
            logit_scale: defaults::logit_scale(),
            decline_allowed: false,
        }
    }
}

impl Default for PricingSection {
    fn default() -> Self {
        Self {
            policy: None,
            fare_per_km: defaults::fare_per_km(),
            discount: defaults::discount(),
            commission: defaults::commission(),
        }
    }
}

impl Default for ShareabilitySection {
    fn default() -> Self {
        Self {
            max_degree: defaults::max_degree(),
            window_s: defaults::window(),
            value_of_time_per_s: defaults::vot(),
            sharing_penalty: defaults::sharing_penalty(),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn toml_error(path: &Path, text: &str, err: &toml::de::Error) -> Error {
    let line = err.span().map_or(1, |s: Range<usize>| line_of(text, s.start));
    Error::Config(format!("{}:{line}: {}", path.display(), err.message()))
}

/// Line of the `[section]` header, or 1 when the section is absent.
fn section_line(text: &str, section: &str) -> usize {
    let header = format!("[{section}]");
    text.lines().position(|l| l.trim() == header).map_or(1, |i| i + 1)
}

fn parse_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, String)> {
    let text = std::fs::read_to_string(path)?;
    let value = toml::from_str(&text).map_err(|e| toml_error(path, &text, &e))?;
    Ok((value, text))
}

/// A parsed scenario file together with where it came from.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub path: PathBuf,
    text: String,
}

impl LoadedScenario {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let (file, text) = parse_file(&path)?;
        Ok(Self { file, path, text })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match self.path.parent() {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn config_err(&self, section: &str, msg: impl std::fmt::Display) -> Error {
        Error::Config(format!("{}:{}: {msg}", self.path.display(), section_line(&self.text, section)))
    }

    /// Loads the network described by the `[network]` section.
    pub fn network(&self) -> Result<Network> {
        let n = &self.file.network;
        let speed = n.speed_kmh / 3.6;
        let net = match (&n.grid, &n.nodes_file, &n.edges_file) {
            (None, Some(nodes), Some(edges)) => load_network(self.resolve(nodes), self.resolve(edges), speed)?,
            (Some(g), None, None) => Network::grid(g.rows, g.cols, g.edge_len_m)
                .and_then(|net| net.with_speed(speed))
                .map_err(|e| self.config_err("network", e))?,
            _ => {
                return Err(self.config_err(
                    "network",
                    "`network` needs either `grid` or both `nodes_file` and `edges_file`",
                ))
            }
        };
        Ok(net)
    }

    /// Builds the runnable scenario, applying command-line overrides.
    pub fn scenario(&self, seed: Option<u64>, policy: Option<Policy>) -> Result<ScenarioConfig> {
        self.scenario_on(Arc::new(self.network()?), seed, policy)
    }

    /// As [`scenario`](Self::scenario) on an already loaded network.
    pub fn scenario_on(&self, network: Arc<Network>, seed: Option<u64>, policy: Option<Policy>) -> Result<ScenarioConfig> {
        let f = &self.file;
        let policy = policy
            .or(f.pricing.policy)
            .ok_or_else(|| self.config_err("pricing", "missing field `pricing.policy`"))?;
        let seed = seed.unwrap_or(f.seed);

        let demand = match &f.demand.file {
            Some(p) => DemandSource::Requests(load_demand(self.resolve(p), &network)?),
            None => DemandSource::Poisson { rate_per_hour: f.demand.rate_per_h, patience: f.demand.patience_s },
        };
        let s = &f.supply;
        let supply = SupplyConfig {
            drivers: s.drivers,
            positions: s.positions.as_ref().map(|p| p.iter().map(|&n| NodeId(n)).collect()),
            cost_per_km: s.cost_per_km,
            value_of_time: s.value_of_time_per_s,
            pool_multiplier: (s.pool_multiplier[0], s.pool_multiplier[1]),
            choice: match s.choice {
                ChoiceKind::Deterministic => ChoiceMode::Deterministic,
                ChoiceKind::Logit => ChoiceMode::Logit { scale: s.logit_scale },
            },
            decline_allowed: s.decline_allowed,
        };
        let pricing = PricingParams {
            fare_per_km: f.pricing.fare_per_km,
            discount: f.pricing.discount,
            commission: f.pricing.commission,
            policy,
        };
        let cfg = ScenarioConfig {
            network,
            demand,
            supply,
            pricing,
            travellers: TravellerPrefs {
                value_of_time: f.shareability.value_of_time_per_s,
                sharing_penalty: f.shareability.sharing_penalty,
            },
            max_degree: f.shareability.max_degree,
            pooling_window: f.shareability.window_s,
            horizon: f.sim_horizon_s,
            seed,
        };
        cfg.validate().map_err(|e| Error::Config(format!("{}: {e}", self.path.display())))?;
        Ok(cfg)
    }
}

/// A supply × demand × policy grid over a base scenario.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub drivers: Vec<usize>,
    pub rates_per_h: Vec<f64>,
    pub policies: Vec<Policy>,
    #[serde(default = "one")]
    pub seeds: u64,
    #[serde(default)]
    pub base_seed: u64,
    /// Scenario file the cells override, relative to the sweep file.
    pub base: PathBuf,
}

fn one() -> u64 {
    1
}

/// One (drivers, rate, policy, seed) sweep cell.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub policy: Policy,
    pub drivers: usize,
    pub rate_per_h: f64,
    pub seed: u64,
}

impl SweepSpec {
    pub fn read(path: impl AsRef<Path>) -> Result<(Self, LoadedScenario)> {
        let path = path.as_ref();
        let (spec, _): (SweepSpec, String) = parse_file(path)?;
        let err = |msg: &str| Error::Config(format!("{}:1: {msg}", path.display()));
        if spec.drivers.is_empty() || spec.rates_per_h.is_empty() || spec.policies.is_empty() {
            return Err(err("`drivers`, `rates_per_h` and `policies` must be nonempty"));
        }
        if spec.seeds < 1 {
            return Err(err("`seeds` must be at least 1"));
        }
        let base = match path.parent() {
            Some(dir) if spec.base.is_relative() => dir.join(&spec.base),
            _ => spec.base.clone(),
        };
        let base = LoadedScenario::read(base)?;
        Ok((spec, base))
    }

    /// Cells sorted by (policy, drivers, rate, seed).
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut policies = self.policies.clone();
        policies.sort();
        policies.dedup();
        let mut drivers = self.drivers.clone();
        drivers.sort_unstable();
        drivers.dedup();
        let mut rates = self.rates_per_h.clone();
        rates.sort_by(f64::total_cmp);
        rates.dedup();
        let mut out = Vec::new();
        for &policy in &policies {
            for &d in &drivers {
                for &r in &rates {
                    for s in 0..self.seeds {
                        out.push(SweepCell { policy, drivers: d, rate_per_h: r, seed: self.base_seed + s });
                    }
                }
            }
        }
        out
    }
}
