//! Zone-based gain scheduling, speed-limit override, and reward monitoring.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::controller::{ControlCommand, GainSet};
use crate::error::{Error, Result};
use crate::paths::{zone_of, Maneuver, Zone};

pub const LANE_CHANGE_GAINS: GainSet = GainSet::new(3.0, 21.0, 21.0, 0.7);
pub const ROUNDABOUT_GAINS: GainSet = GainSet::new(3.4, 21.0, 1.0, 0.84);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSchedule {
    pub default: GainSet,
    #[serde(flatten)]
    pub entries: BTreeMap<Maneuver, GainSet>,
}

impl Default for GainSchedule {
    fn default() -> Self {
        Self::new(LANE_CHANGE_GAINS)
            .with(Maneuver::LaneChange, LANE_CHANGE_GAINS)
            .with(Maneuver::Roundabout, ROUNDABOUT_GAINS)
    }
}

impl GainSchedule {
    pub fn new(default: GainSet) -> Self {
        Self { default, entries: BTreeMap::new() }
    }

    pub fn with(mut self, maneuver: Maneuver, gains: GainSet) -> Self {
        match maneuver {
            Maneuver::Default => self.default = gains,
            m => {
                self.entries.insert(m, gains);
            }
        }
        self
    }

    /// Checks every gain set and that each zone's maneuver is scheduled.
    pub fn validate(&self, zones: &[Zone]) -> Result<()> {
        self.default.validate()?;
        for g in self.entries.values() {
            g.validate()?;
        }
        for z in zones {
            if z.maneuver != Maneuver::Default && !self.entries.contains_key(&z.maneuver) {
                return Err(Error::invalid(
                    format!("schedule.{}", z.maneuver),
                    format!("zone {:?} has no scheduled gains", z.id),
                ));
            }
        }
        Ok(())
    }
}

pub fn select_gains(schedule: &GainSchedule, maneuver: Maneuver) -> GainSet {
    match maneuver {
        Maneuver::Default => schedule.default,
        m => schedule.entries.get(&m).copied().unwrap_or(schedule.default),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimit {
    pub v_max: f64,
}

impl Default for SpeedLimit {
    fn default() -> Self {
        Self { v_max: 4.0 }
    }
}

impl SpeedLimit {
    pub fn validate(&self) -> Result<()> {
        if self.v_max > 0.0 && self.v_max.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid("limit.v_max", "must be positive"))
        }
    }
}

pub fn enforce_speed_limit(cmd: ControlCommand, limit: SpeedLimit) -> ControlCommand {
    ControlCommand { v: cmd.v.min(limit.v_max), ..cmd }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonitorStatus {
    Nominal,
    Degraded,
}

impl MonitorStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            MonitorStatus::Nominal => "nominal",
            MonitorStatus::Degraded => "degraded",
        }
    }
}

/// Compares accumulated reward in operation against the accumulated reward
/// recorded while training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardMonitor {
    /// Per-episode reward sums from training.
    pub training_curve: Vec<f64>,
    /// Control steps per comparison window.
    pub window: usize,
    pub threshold: f64,
}

impl RewardMonitor {
    pub fn new(training_curve: Vec<f64>) -> Self {
        Self { training_curve, window: 100, threshold: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.training_curve.is_empty() {
            return Err(Error::invalid("monitor.training_curve", "must not be empty"));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::invalid("monitor.threshold", "must lie in (0, 1]"));
        }
        if self.window == 0 {
            return Err(Error::invalid("monitor.window", "must be positive"));
        }
        Ok(())
    }

    /// Running sum of the training curve at `fraction` of its length,
    /// linearly interpolated between episodes.
    pub fn reference_at(&self, fraction: f64) -> f64 {
        let n = self.training_curve.len();
        let pos = fraction.clamp(0.0, 1.0) * n as f64;
        let whole = pos.floor() as usize;
        let done: f64 = self.training_curve[..whole.min(n)].iter().sum();
        if whole >= n {
            return done;
        }
        done + (pos - whole as f64) * self.training_curve[whole]
    }
}

/// `Degraded` when the observed running sum falls short of the training
/// reference by more than `1 - threshold` of its magnitude.
pub fn monitor_reward(monitor: &RewardMonitor, observed_running_sum: f64, episode_fraction: f64) -> MonitorStatus {
    if episode_fraction <= 0.0 {
        return MonitorStatus::Nominal;
    }
    let reference = monitor.reference_at(episode_fraction);
    let floor = reference - (1.0 - monitor.threshold) * reference.abs();
    if observed_running_sum < floor {
        MonitorStatus::Degraded
    } else {
        MonitorStatus::Nominal
    }
}

/// The high-level decision point used inside a run: picks gains by zone and
/// caps the commanded speed.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervisor {
    pub schedule: GainSchedule,
    pub zones: Vec<Zone>,
    pub limit: SpeedLimit,
}

impl Supervisor {
    pub fn new(schedule: GainSchedule, zones: Vec<Zone>, limit: SpeedLimit) -> Result<Self> {
        schedule.validate(&zones)?;
        limit.validate()?;
        Ok(Self { schedule, zones, limit })
    }

    pub fn maneuver_at(&self, x: f64, y: f64) -> Maneuver {
        zone_of(&self.zones, x, y)
    }

    pub fn gains_at(&self, x: f64, y: f64) -> GainSet {
        select_gains(&self.schedule, self.maneuver_at(x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::Region;
    use proptest::prelude::*;

    #[test]
    fn preset_schedule() {
        let s = GainSchedule::default();
        assert_eq!(select_gains(&s, Maneuver::LaneChange), GainSet::new(3.0, 21.0, 21.0, 0.7));
        assert_eq!(select_gains(&s, Maneuver::Roundabout), GainSet::new(3.4, 21.0, 1.0, 0.84));
        let custom = GainSchedule::new(GainSet::new(1.0, 6.0, 6.0, 0.77));
        assert_eq!(select_gains(&custom, Maneuver::Default), GainSet::new(1.0, 6.0, 6.0, 0.77));
    }

    #[test]
    fn schedule_must_cover_zones() {
        let zones = vec![Zone {
            id: "rb".into(),
            region: Region::Circle { cx: 0.0, cy: 0.0, r: 1.0 },
            maneuver: Maneuver::Roundabout,
        }];
        let partial = GainSchedule::new(LANE_CHANGE_GAINS).with(Maneuver::LaneChange, LANE_CHANGE_GAINS);
        assert!(partial.validate(&zones).is_err());
        assert!(GainSchedule::default().validate(&zones).is_ok());
    }

    #[test]
    fn speed_limit_cases() {
        let lim = SpeedLimit::default();
        let cmd = |v| ControlCommand { v, omega_s: 0.3, phi: 0.1 };
        assert_eq!(enforce_speed_limit(cmd(6.0), lim).v, 4.0);
        assert_eq!(enforce_speed_limit(cmd(2.0), lim).v, 2.0);
        assert_eq!(enforce_speed_limit(cmd(4.0), lim).v, 4.0);
        let out = enforce_speed_limit(cmd(6.0), lim);
        assert_eq!((out.omega_s, out.phi), (0.3, 0.1));
    }

    #[test]
    fn monitor_cases() {
        let m = RewardMonitor::new(vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(m.reference_at(0.5), 2.0);
        assert_eq!(m.reference_at(0.625), 2.5);
        assert_eq!(monitor_reward(&m, 2.0, 0.5), MonitorStatus::Nominal);
        assert_eq!(monitor_reward(&m, 0.2, 0.5), MonitorStatus::Degraded);
        assert_eq!(monitor_reward(&m, -100.0, 0.0), MonitorStatus::Nominal);
        // negative training sums: falling further below is degraded, doing better is not
        let neg = RewardMonitor::new(vec![-1.0, -1.0]);
        assert_eq!(monitor_reward(&neg, -1.0, 1.0), MonitorStatus::Nominal);
        assert_eq!(monitor_reward(&neg, -3.5, 1.0), MonitorStatus::Degraded);
    }

    #[test]
    fn supervisor_switches_by_zone() {
        let zones = vec![Zone {
            id: "lc".into(),
            region: Region::Rect { min_x: 0.0, min_y: -1.0, max_x: 10.0, max_y: 1.0 },
            maneuver: Maneuver::LaneChange,
        }];
        let sched = GainSchedule::new(GainSet::new(1.0, 1.0, 1.0, 0.5)).with(Maneuver::LaneChange, LANE_CHANGE_GAINS);
        let sup = Supervisor::new(sched, zones, SpeedLimit::default()).unwrap();
        assert_eq!(sup.gains_at(5.0, 0.0), LANE_CHANGE_GAINS);
        assert_eq!(sup.gains_at(15.0, 0.0), GainSet::new(1.0, 1.0, 1.0, 0.5));
    }

    proptest! {
        #[test]
        fn speed_limit_idempotent_and_non_increasing(v in 0.0..50.0f64, vmax in 0.1..20.0f64) {
            let lim = SpeedLimit { v_max: vmax };
            let cmd = ControlCommand { v, omega_s: 1.0, phi: 0.2 };
            let once = enforce_speed_limit(cmd, lim);
            prop_assert_eq!(enforce_speed_limit(once, lim), once);
            prop_assert!(once.v <= cmd.v);
            prop_assert!(once.v <= vmax);
        }

        #[test]
        fn monitor_is_monotone(curve in proptest::collection::vec(-2.0..2.0f64, 1..20),
                               a in -40.0..40.0f64, b in -40.0..40.0f64, f in 0.0..1.0f64) {
            let m = RewardMonitor::new(curve);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if monitor_reward(&m, lo, f) == MonitorStatus::Nominal {
                prop_assert_eq!(monitor_reward(&m, hi, f), MonitorStatus::Nominal);
            }
        }
    }
}
