//! Maneuver scenarios: the path a run follows, how the reference advances,
//! where the vehicle starts, and how long validation runs last.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{make_full_circuit, make_lane_change_path, make_roundabout_path, Maneuver, ReferencePath, Zone};
use crate::sim::{ReferenceMode, RunSetup};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaneChangeGeometry {
    pub lane_width: f64,
    pub approach: f64,
    pub transition: f64,
    pub exit: f64,
}

impl Default for LaneChangeGeometry {
    fn default() -> Self {
        Self { lane_width: 3.5, approach: 15.0, transition: 20.0, exit: 15.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoundaboutGeometry {
    pub radius: f64,
    pub entry: f64,
    pub sweep: f64,
    pub exit: f64,
}

impl Default for RoundaboutGeometry {
    fn default() -> Self {
        Self { radius: 20.0, entry: 10.0, sweep: 1.5 * PI, exit: 10.0 }
    }
}

/// Run parameters that are independent of the path shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Drive {
    pub reference: ReferenceMode,
    /// Arc length at which the vehicle starts, at rest.
    pub start_s: f64,
    /// Duration of a validation run.
    pub eval_time: f64,
}

/// Reference progress for every scenario. Matches the circuit speed limit so
/// maneuver gains are tuned in the regime they are scheduled in.
pub const CRUISE_SPEED: f64 = 4.0;

impl Drive {
    /// Starts 5 m before the transition so short training loops still see it.
    pub fn lane_change() -> Self {
        Self { reference: ReferenceMode::Timed { speed: CRUISE_SPEED }, start_s: 10.0, eval_time: 12.0 }
    }

    pub fn roundabout() -> Self {
        Self { reference: ReferenceMode::Timed { speed: CRUISE_SPEED }, start_s: 0.0, eval_time: 30.0 }
    }

    pub fn circuit() -> Self {
        Self { reference: ReferenceMode::Timed { speed: CRUISE_SPEED }, start_s: 0.0, eval_time: 50.0 }
    }
}

impl Default for Drive {
    fn default() -> Self {
        Self::lane_change()
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    pub path: ReferencePath,
    pub zones: Vec<Zone>,
    pub drive: Drive,
}

impl Scenario {
    pub fn lane_change(geom: &LaneChangeGeometry, drive: Drive) -> Result<Self> {
        let path = make_lane_change_path(geom.lane_width, geom.approach, geom.transition, geom.exit)?;
        Self::new(Maneuver::LaneChange.as_str(), path, Vec::new(), drive)
    }

    pub fn roundabout(geom: &RoundaboutGeometry, drive: Drive) -> Result<Self> {
        let path = make_roundabout_path(geom.radius, geom.entry, geom.sweep, geom.exit)?;
        Self::new(Maneuver::Roundabout.as_str(), path, Vec::new(), drive)
    }

    pub fn circuit(drive: Drive) -> Result<Self> {
        let c = make_full_circuit()?;
        Self::new("circuit", c.path, c.zones, drive)
    }

    /// Default scenario for a trained maneuver.
    pub fn for_maneuver(maneuver: Maneuver) -> Result<Self> {
        match maneuver {
            Maneuver::LaneChange => Self::lane_change(&LaneChangeGeometry::default(), Drive::lane_change()),
            Maneuver::Roundabout => Self::roundabout(&RoundaboutGeometry::default(), Drive::roundabout()),
            Maneuver::Default => Err(Error::invalid("maneuver", "no scenario for the default maneuver")),
        }
    }

    pub fn new(label: &str, path: ReferencePath, zones: Vec<Zone>, drive: Drive) -> Result<Self> {
        drive.reference.validate()?;
        if !(drive.start_s >= 0.0 && drive.start_s < path.last().s) {
            return Err(Error::invalid("start_s", "must lie on the path"));
        }
        if !(drive.eval_time > 0.0) {
            return Err(Error::invalid("eval_time", "must be positive"));
        }
        Ok(Self { label: label.to_string(), path, zones, drive })
    }

    pub fn setup(&self, duration: f64) -> RunSetup<'_> {
        RunSetup::on_path(&self.path, self.drive.reference, self.drive.start_s, duration)
    }

    pub fn eval_setup(&self) -> RunSetup<'_> {
        self.setup(self.drive.eval_time)
    }
}
