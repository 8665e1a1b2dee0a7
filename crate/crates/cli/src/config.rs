//! Run configuration: a TOML file layered over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use pathtune::rl::TrainingConfig;
use pathtune::scenario::{Drive, LaneChangeGeometry, RoundaboutGeometry};
use pathtune::supervisor::{GainSchedule, RewardMonitor, SpeedLimit};
use pathtune::{Error, Maneuver, NoiseModel, Scenario, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSection {
    pub alphas: Vec<f64>,
    #[serde(rename = "lane-change")]
    pub lane_change: TrainingConfig,
    pub roundabout: TrainingConfig,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            alphas: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            lane_change: TrainingConfig::lane_change(),
            roundabout: TrainingConfig::roundabout(),
        }
    }
}

impl TrainingSection {
    pub fn get(&self, m: Maneuver) -> Result<&TrainingConfig> {
        match m {
            Maneuver::LaneChange => Ok(&self.lane_change),
            Maneuver::Roundabout => Ok(&self.roundabout),
            Maneuver::Default => bail!("the default maneuver has no training section"),
        }
    }

    pub fn get_mut(&mut self, m: Maneuver) -> Result<&mut TrainingConfig> {
        match m {
            Maneuver::LaneChange => Ok(&mut self.lane_change),
            Maneuver::Roundabout => Ok(&mut self.roundabout),
            Maneuver::Default => bail!("the default maneuver has no training section"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsSection {
    #[serde(rename = "lane-change")]
    pub lane_change: LaneChangeGeometry,
    pub roundabout: RoundaboutGeometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriveSection {
    #[serde(rename = "lane-change")]
    pub lane_change: Drive,
    pub roundabout: Drive,
    pub circuit: Drive,
}

impl Default for DriveSection {
    fn default() -> Self {
        Self { lane_change: Drive::lane_change(), roundabout: Drive::roundabout(), circuit: Drive::circuit() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    pub runs: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { runs: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorSection {
    pub enabled: bool,
    /// Learning-curve CSV written by `train`.
    pub curve_file: Option<PathBuf>,
    pub window: usize,
    pub threshold: f64,
}

impl Default for MonitorSection {
    fn default() -> Self {
        Self { enabled: false, curve_file: None, window: 100, threshold: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub output: PathBuf,
    /// `sim.seed` is the base seed for everything random.
    pub sim: SimConfig,
    pub noise: NoiseModel,
    pub training: TrainingSection,
    pub schedule: GainSchedule,
    pub limit: SpeedLimit,
    pub paths: PathsSection,
    pub drive: DriveSection,
    pub eval: EvalSection,
    pub monitor: MonitorSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output: PathBuf::from("out"),
            sim: SimConfig::default(),
            noise: NoiseModel::default(),
            training: TrainingSection::default(),
            schedule: GainSchedule::default(),
            limit: SpeedLimit::default(),
            paths: PathsSection::default(),
            drive: DriveSection::default(),
            eval: EvalSection::default(),
            monitor: MonitorSection::default(),
        }
    }
}

/// Overlays `patch` on `base`, collecting keys that `base` lacks.
fn merge(base: &mut toml::Value, patch: toml::Value, path: &str, added: &mut Vec<String>) {
    match (base, patch) {
        (toml::Value::Table(b), toml::Value::Table(p)) => {
            for (k, v) in p {
                let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &sub, added),
                    None => {
                        added.push(sub);
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

fn lookup<'a>(v: &'a toml::Value, path: &str) -> Option<&'a toml::Value> {
    path.split('.').try_fold(v, |node, key| node.get(key))
}

/// Rewrites a core validation error so it names the config field.
fn prefixed(e: Error, from: &str, to: &str) -> anyhow::Error {
    match e {
        Error::Invalid { field, reason } => {
            let field = match field.strip_prefix(from) {
                Some(rest) if !from.is_empty() => format!("{to}{rest}"),
                _ => format!("{to}.{field}"),
            };
            anyhow::anyhow!("invalid {field}: {reason}")
        }
        other => anyhow::anyhow!("invalid {to}: {other}"),
    }
}

/// Scenario errors come from either the geometry or the drive section.
fn scenario_error(e: Error, m: &str) -> anyhow::Error {
    match &e {
        Error::Invalid { field, .. } if ["start_s", "eval_time", "reference"].contains(&field.as_str()) => {
            prefixed(e, "", &format!("drive.{m}"))
        }
        _ => prefixed(e, "", &format!("paths.{m}")),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let patch: toml::Value = toml::from_str(text).context("config is not valid TOML")?;
        let mut merged = toml::Value::try_from(Self::default()).context("serializing defaults")?;
        let mut added = Vec::new();
        merge(&mut merged, patch, "", &mut added);
        let cfg: Self = merged.clone().try_into().context("config has a field of the wrong type")?;
        // keys absent from the defaults must survive a round trip, otherwise
        // they were silently ignored
        let back = toml::Value::try_from(&cfg).context("serializing config")?;
        if let Some(unknown) = added.iter().find(|p| lookup(&back, p).is_none()) {
            bail!("unknown config field `{unknown}`");
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn seed(&self) -> u64 {
        self.sim.seed
    }

    /// Checks every section, reporting the first offending field.
    pub fn validate(&self) -> Result<()> {
        self.sim.validate().map_err(|e| prefixed(e, "sim", "sim"))?;
        self.noise.validate().map_err(|e| prefixed(e, "noise", "noise"))?;
        if self.training.alphas.is_empty() {
            bail!("invalid training.alphas: list must not be empty");
        }
        if let Some(a) = self.training.alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            bail!("invalid training.alphas: {a} is outside (0, 1]");
        }
        for m in [Maneuver::LaneChange, Maneuver::Roundabout] {
            let section = format!("training.{m}");
            let t = self.training.get(m)?;
            if t.maneuver != m {
                bail!("invalid {section}.maneuver: must be {m}");
            }
            t.validate().map_err(|e| prefixed(e, "training", &section))?;
        }
        self.schedule.default.validate().map_err(|e| prefixed(e, "gains", "schedule.default"))?;
        for (m, g) in &self.schedule.entries {
            g.validate().map_err(|e| prefixed(e, "gains", &format!("schedule.{m}")))?;
        }
        self.limit.validate().map_err(|e| prefixed(e, "limit", "limit"))?;
        for m in [Maneuver::LaneChange, Maneuver::Roundabout] {
            self.scenario(m)?;
        }
        let circuit = self.circuit_scenario()?;
        self.schedule.validate(&circuit.zones).map_err(|e| prefixed(e, "schedule", "schedule"))?;
        if self.eval.runs == 0 {
            bail!("invalid eval.runs: must be at least 1");
        }
        if self.monitor.window == 0 {
            bail!("invalid monitor.window: must be positive");
        }
        if !(self.monitor.threshold > 0.0 && self.monitor.threshold <= 1.0) {
            bail!("invalid monitor.threshold: must lie in (0, 1]");
        }
        if self.monitor.enabled && self.monitor.curve_file.is_none() {
            bail!("invalid monitor.curve_file: required when monitor.enabled is true");
        }
        Ok(())
    }

    pub fn scenario(&self, m: Maneuver) -> Result<Scenario> {
        match m {
            Maneuver::LaneChange => Scenario::lane_change(&self.paths.lane_change, self.drive.lane_change)
                .map_err(|e| scenario_error(e, "lane-change")),
            Maneuver::Roundabout => Scenario::roundabout(&self.paths.roundabout, self.drive.roundabout)
                .map_err(|e| scenario_error(e, "roundabout")),
            Maneuver::Default => bail!("no scenario for the default maneuver"),
        }
    }

    pub fn circuit_scenario(&self) -> Result<Scenario> {
        Scenario::circuit(self.drive.circuit).map_err(|e| scenario_error(e, "circuit"))
    }

    /// Builds the reward monitor from the configured learning curve, if enabled.
    pub fn reward_monitor(&self) -> Result<Option<RewardMonitor>> {
        if !self.monitor.enabled {
            return Ok(None);
        }
        let path = self.monitor.curve_file.as_ref().context("monitor.curve_file is not set")?;
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let curve = crate::output::parse_reward_column(&text).with_context(|| format!("in {}", path.display()))?;
        Ok(Some(RewardMonitor { training_curve: curve, window: self.monitor.window, threshold: self.monitor.threshold }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
        assert_eq!(RunConfig::from_toml_str("").unwrap(), cfg);
    }

    #[test]
    fn partial_sections_keep_their_own_defaults() {
        let cfg = RunConfig::from_toml_str("[training.roundabout]\nepisodes = 4\n").unwrap();
        assert_eq!(cfg.training.roundabout.episodes, 4);
        assert_eq!(cfg.training.roundabout.step_limit, 100);
        assert_eq!(cfg.training.roundabout.k_max.kv, 5.8);
        assert_eq!(cfg.training.lane_change, TrainingConfig::lane_change());
    }

    #[test]
    fn schedule_entries_and_optional_fields_are_accepted() {
        let text = "[schedule.roundabout]\nkv = 4.0\nkl = 11.0\nks = 16.0\nki = 0.91\n\
                    [training.lane-change]\nepsilon_decay = 0.1\n\
                    [monitor]\ncurve_file = \"curve.csv\"\n";
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.schedule.entries[&Maneuver::Roundabout].kv, 4.0);
        assert_eq!(cfg.training.lane_change.epsilon_decay, Some(0.1));
        assert_eq!(cfg.monitor.curve_file, Some(PathBuf::from("curve.csv")));
    }

    #[test]
    fn unknown_and_mistyped_fields_are_rejected() {
        let e = RunConfig::from_toml_str("[sim]\ndtt = 0.1\n").unwrap_err();
        assert!(e.to_string().contains("sim.dtt"), "{e}");
        assert!(RunConfig::from_toml_str("[sim]\ndt = \"fast\"\n").is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let check = |text: &str, field: &str| {
            let cfg = RunConfig::from_toml_str(text).unwrap();
            let msg = cfg.validate().unwrap_err().to_string();
            assert!(msg.contains(field), "{msg} should mention {field}");
        };
        check("[sim]\ndt = -1.0\n", "sim.dt");
        check("[training.roundabout]\ngamma = 1.5\n", "training.roundabout.gamma");
        check("[training]\nalphas = []\n", "training.alphas");
        check("[schedule.lane-change]\nkv = 1.0\nkl = 1.0\nks = 1.0\nki = 1.5\n", "schedule.lane-change");
        check("[limit]\nv_max = 0.0\n", "limit.v_max");
        check("[eval]\nruns = 0\n", "eval.runs");
        check("[monitor]\nenabled = true\n", "monitor.curve_file");
        check("[drive.lane-change]\nstart_s = 500.0\n", "drive.lane-change.start_s");
        check("[paths.roundabout]\nradius = -2.0\n", "paths.roundabout");
    }
}
