//! Fixed-step kinematic vehicle simulator and the closed-loop run.
//!
//! The plant is a kinematic bicycle with first-order lags on speed and
//! steering, integrated with explicit Euler at `dt`. Odometry noise is
//! applied to the measured pose only.

use std::f64::consts::PI;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Triangular};
use serde::{Deserialize, Serialize};

use crate::controller::{body_error, control_step, world_error, ControlCommand, ControllerState, GainSet};
use crate::error::{Error, Result};
use crate::paths::{reference_pose, LookaheadPolicy, PathCursor, ReferencePath};
use crate::supervisor::{enforce_speed_limit, Supervisor};

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: wrap_angle(theta) }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub pose: Pose,
    pub v_actual: f64,
    pub phi_actual: f64,
}

impl VehicleState {
    pub fn at_rest(pose: Pose) -> Self {
        Self { pose, v_actual: 0.0, phi_actual: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    pub wheelbase: f64,
    /// Speed lag time constant; zero means the command is applied directly.
    pub actuator_tau: f64,
    pub steer_tau: f64,
    pub phi_max: f64,
    pub goal_tolerance: f64,
    /// Lateral distance from the path treated as a collision.
    pub offpath_limit: f64,
    /// Base seed for derived noise streams.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            wheelbase: 2.875,
            actuator_tau: 0.5,
            steer_tau: 0.1,
            phi_max: 30f64.to_radians(),
            goal_tolerance: 1.0,
            offpath_limit: 2.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("sim.dt", self.dt > 0.0),
            ("sim.wheelbase", self.wheelbase > 0.0),
            ("sim.actuator_tau", self.actuator_tau >= 0.0),
            ("sim.steer_tau", self.steer_tau >= 0.0),
            ("sim.phi_max", self.phi_max > 0.0 && self.phi_max < PI / 2.0),
            ("sim.goal_tolerance", self.goal_tolerance > 0.0),
            ("sim.offpath_limit", self.offpath_limit > 0.0),
        ];
        for (field, ok) in checks {
            if !ok {
                return Err(Error::invalid(field, "out of range"));
            }
        }
        Ok(())
    }
}

fn lag_factor(dt: f64, tau: f64) -> f64 {
    if tau == 0.0 {
        1.0
    } else {
        (dt / tau).min(1.0)
    }
}

/// Advances the vehicle by one `dt`.
pub fn step_vehicle(state: &VehicleState, cmd: &ControlCommand, cfg: &SimConfig) -> Result<VehicleState> {
    let finite = [
        state.pose.x,
        state.pose.y,
        state.pose.theta,
        state.v_actual,
        state.phi_actual,
        cmd.v,
        cmd.phi,
    ]
    .iter()
    .all(|v| v.is_finite());
    if !finite {
        return Err(Error::NonFinite("vehicle state or command"));
    }
    if cmd.v < 0.0 {
        return Err(Error::invalid("command speed", "must be non-negative"));
    }
    let phi_target = cmd.phi.clamp(-cfg.phi_max, cfg.phi_max);
    let v = state.v_actual + lag_factor(cfg.dt, cfg.actuator_tau) * (cmd.v - state.v_actual);
    let phi = (state.phi_actual + lag_factor(cfg.dt, cfg.steer_tau) * (phi_target - state.phi_actual))
        .clamp(-cfg.phi_max, cfg.phi_max);
    let p = &state.pose;
    let (s, c) = p.theta.sin_cos();
    let pose = Pose::new(
        p.x + cfg.dt * v * c,
        p.y + cfg.dt * v * s,
        p.theta + cfg.dt * v / cfg.wheelbase * phi.tan(),
    );
    Ok(VehicleState { pose, v_actual: v.max(0.0), phi_actual: phi })
}

/// Odometry noise settings. Position noise is Gaussian, heading noise
/// triangular on `[-orient_halfwidth, orient_halfwidth]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub enabled: bool,
    pub pos_sigma: f64,
    pub orient_halfwidth: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { enabled: false, pos_sigma: 0.1, orient_halfwidth: 0.088, seed: 0 }
    }
}

impl NoiseModel {
    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn enabled(seed: u64) -> Self {
        Self { enabled: true, seed, ..Self::default() }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pos_sigma >= 0.0 && self.pos_sigma.is_finite()) {
            return Err(Error::invalid("noise.pos_sigma", "must be non-negative"));
        }
        if !(self.orient_halfwidth >= 0.0 && self.orient_halfwidth.is_finite()) {
            return Err(Error::invalid("noise.orient_halfwidth", "must be non-negative"));
        }
        Ok(())
    }

    pub fn stream(&self) -> NoiseStream {
        NoiseStream {
            model: *self,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }
}

/// Seeded random source drawn by [`read_odometry`].
#[derive(Debug, Clone)]
pub struct NoiseStream {
    model: NoiseModel,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    fn position(&mut self) -> f64 {
        if self.model.pos_sigma == 0.0 {
            return 0.0;
        }
        Normal::new(0.0, self.model.pos_sigma)
            .expect("sigma validated")
            .sample(&mut self.rng)
    }

    fn heading(&mut self) -> f64 {
        let hw = self.model.orient_halfwidth;
        if hw == 0.0 {
            return 0.0;
        }
        Triangular::new(-hw, hw, 0.0)
            .expect("halfwidth validated")
            .sample(&mut self.rng)
    }
}

pub fn read_odometry(state: &VehicleState, noise: &mut NoiseStream) -> Pose {
    if !noise.model.enabled {
        return state.pose;
    }
    let dx = noise.position();
    let dy = noise.position();
    let dth = noise.heading();
    Pose::new(state.pose.x + dx, state.pose.y + dy, state.pose.theta + dth)
}

/// How the reference pose advances during a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ReferenceMode {
    /// Reference moves along the path at a constant speed from the start point.
    Timed { speed: f64 },
    /// Nearest point to the odometry pose plus a fixed arc-length lookahead.
    Lookahead { lookahead_dist: f64 },
}

impl ReferenceMode {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ReferenceMode::Timed { speed } => speed > 0.0 && speed.is_finite(),
            ReferenceMode::Lookahead { lookahead_dist } => lookahead_dist > 0.0 && lookahead_dist.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("reference", "speed or lookahead must be positive"))
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum GainSource<'a> {
    Fixed(GainSet),
    Supervised(&'a Supervisor),
}

/// Everything that defines one closed-loop run apart from the plant and noise.
#[derive(Debug, Clone)]
pub struct RunSetup<'a> {
    pub path: &'a ReferencePath,
    pub reference: ReferenceMode,
    pub start: VehicleState,
    /// Arc length at which a timed reference starts.
    pub start_s: f64,
    pub duration: f64,
}

impl<'a> RunSetup<'a> {
    /// Vehicle at rest on the path at arc length `start_s`.
    pub fn on_path(path: &'a ReferencePath, reference: ReferenceMode, start_s: f64, duration: f64) -> Self {
        Self {
            path,
            reference,
            start: VehicleState::at_rest(path.pose_at(start_s)),
            start_s,
            duration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    GoalReached,
    Collision,
    TimeUp,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::GoalReached => "GoalReached",
            Outcome::Collision => "Collision",
            Outcome::TimeUp => "TimeUp",
        }
    }
}

/// One logged control period. `v`, `omega` and `phi` are the commands sent
/// to the vehicle after supervision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub odo_x: f64,
    pub odo_y: f64,
    pub odo_theta: f64,
    pub bex: f64,
    pub bey: f64,
    pub betheta: f64,
    pub v: f64,
    pub omega: f64,
    pub phi: f64,
}

impl Sample {
    pub fn true_pose(&self) -> Pose {
        Pose { x: self.x, y: self.y, theta: self.theta }
    }

    pub fn odom_pose(&self) -> Pose {
        Pose { x: self.odo_x, y: self.odo_y, theta: self.odo_theta }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub samples: Vec<Sample>,
    pub outcome: Outcome,
}

pub const TRAJECTORY_HEADER: &str = "t,x,y,theta,odo_x,odo_y,odo_theta,bex,bey,betheta,v,omega,phi,outcome";

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// One row per sample; the outcome column is filled on the last row only.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRAJECTORY_HEADER}")?;
        let n = self.samples.len();
        for (i, s) in self.samples.iter().enumerate() {
            let outcome = if i + 1 == n { self.outcome.as_str() } else { "" };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.t, s.x, s.y, s.theta, s.odo_x, s.odo_y, s.odo_theta, s.bex, s.bey, s.betheta, s.v,
                s.omega, s.phi, outcome
            )?;
        }
        Ok(())
    }
}

/// Runs the closed loop (odometry, reference, controller, plant) until the
/// goal is reached, the vehicle leaves the path corridor, or time runs out.
pub fn run_simulation(
    cfg: &SimConfig,
    gains: GainSource<'_>,
    setup: &RunSetup<'_>,
    noise: &NoiseModel,
) -> Result<TrajectoryLog> {
    cfg.validate()?;
    noise.validate()?;
    setup.reference.validate()?;
    if let GainSource::Fixed(g) = gains {
        g.validate()?;
    }
    if !(setup.duration > 0.0 && setup.duration.is_finite()) {
        return Err(Error::invalid("duration", "must be positive"));
    }
    let path = setup.path;
    let steps = (setup.duration / cfg.dt + 1e-9).floor() as usize;
    let goal = *path.last();
    let mut stream = noise.stream();
    let mut state = setup.start;
    let mut ctrl = ControllerState::default();
    let mut cursor = PathCursor::new(path, state.pose.x, state.pose.y);
    let mut samples = Vec::with_capacity(steps);
    let mut outcome = Outcome::TimeUp;

    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        let odom = read_odometry(&state, &mut stream);
        let reference = match setup.reference {
            ReferenceMode::Timed { speed } => path.pose_at(setup.start_s + speed * t),
            ReferenceMode::Lookahead { lookahead_dist } => {
                reference_pose(path, &odom, &LookaheadPolicy { lookahead_dist })
            }
        };
        let be = body_error(&world_error(&reference, &odom), odom.theta);
        let (active, limit) = match gains {
            GainSource::Fixed(g) => (g, None),
            GainSource::Supervised(sup) => (sup.gains_at(odom.x, odom.y), Some(sup.limit)),
        };
        let (mut cmd, next) = control_step(&be, &active, ctrl, cfg.dt, cfg.phi_max)?;
        if let Some(limit) = limit {
            cmd = enforce_speed_limit(cmd, limit);
        }
        ctrl = next;
        samples.push(Sample {
            t,
            x: state.pose.x,
            y: state.pose.y,
            theta: state.pose.theta,
            odo_x: odom.x,
            odo_y: odom.y,
            odo_theta: odom.theta,
            bex: be.bex,
            bey: be.bey,
            betheta: be.betheta,
            v: cmd.v,
            omega: cmd.omega_s,
            phi: cmd.phi,
        });
        if odom.distance_to(goal.x, goal.y) < cfg.goal_tolerance {
            outcome = Outcome::GoalReached;
            break;
        }
        cursor.update(path, state.pose.x, state.pose.y);
        if cursor.distance_to_path(path, state.pose.x, state.pose.y) > cfg.offpath_limit {
            outcome = Outcome::Collision;
            break;
        }
        state = step_vehicle(&state, &cmd, cfg)?;
    }
    Ok(TrajectoryLog { samples, outcome })
}
