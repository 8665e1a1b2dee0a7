//! Four-parameter trajectory controller.
//!
//! The pose error is taken in the world frame, rotated into the vehicle
//! frame, and fed through
//!
//! ```text
//! v       = Kv * bex
//! omega_s = Ks * betheta + Kl * bey
//! phi_k   = Ki * phi_{k-1} + Ki * h * omega_s
//! ```
//!
//! where the last line is a first-order low-pass on the steering command.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{wrap_angle, Pose};

/// Controller gains: longitudinal `kv`, lateral `kl`, heading `ks`, and
/// the steering filter coefficient `ki`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub kv: f64,
    pub kl: f64,
    pub ks: f64,
    pub ki: f64,
}

impl GainSet {
    pub const fn new(kv: f64, kl: f64, ks: f64, ki: f64) -> Self {
        Self { kv, kl, ks, ki }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.kv, self.kl, self.ks, self.ki]
    }

    pub fn validate(&self) -> Result<()> {
        if !self.to_array().iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite("gains"));
        }
        if self.kv < 0.0 || self.kl < 0.0 || self.ks < 0.0 {
            return Err(Error::invalid("gains", "kv, kl and ks must be non-negative"));
        }
        if !(self.ki > 0.0 && self.ki < 1.0) {
            return Err(Error::invalid("gains", "ki must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Integer key (nano-units) so that gain sets reached through different
    /// sequences of additions compare equal.
    pub fn key(&self) -> [i64; 4] {
        self.to_array().map(|g| (g * 1e9).round() as i64)
    }

    /// Parses `"kv,kl,ks,ki"`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!(
                "expected 4 comma-separated gains, got {:?}",
                text
            )));
        }
        let mut out = [0.0; 4];
        for (slot, p) in out.iter_mut().zip(&parts) {
            *slot = p
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{p:?}: {e}")))?;
        }
        Ok(Self::from_array(out))
    }
}

impl std::fmt::Display for GainSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {}, {})", self.kv, self.kl, self.ks, self.ki)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WorldError {
    pub ex: f64,
    pub ey: f64,
    pub etheta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyError {
    pub bex: f64,
    pub bey: f64,
    pub betheta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlCommand {
    pub v: f64,
    pub omega_s: f64,
    pub phi: f64,
}

/// Filter memory. Holds the previous (saturated) steering output.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerState {
    pub phi_prev: f64,
}

pub fn world_error(reference: &Pose, pose: &Pose) -> WorldError {
    WorldError {
        ex: reference.x - pose.x,
        ey: reference.y - pose.y,
        etheta: wrap_angle(reference.theta - pose.theta),
    }
}

/// Rotates a world-frame error into the frame of a vehicle with heading `theta`.
pub fn body_error(we: &WorldError, theta: f64) -> BodyError {
    let (s, c) = theta.sin_cos();
    BodyError {
        bex: c * we.ex + s * we.ey,
        bey: -s * we.ex + c * we.ey,
        betheta: we.etheta,
    }
}

/// One control update. `h` is the control period, `phi_max` the steering
/// saturation. Speed is clamped at zero (forward-only vehicle).
pub fn control_step(
    be: &BodyError,
    gains: &GainSet,
    state: ControllerState,
    h: f64,
    phi_max: f64,
) -> Result<(ControlCommand, ControllerState)> {
    if !(be.bex.is_finite() && be.bey.is_finite() && be.betheta.is_finite()) {
        return Err(Error::NonFinite("body error"));
    }
    if !gains.to_array().iter().all(|g| g.is_finite()) {
        return Err(Error::NonFinite("gains"));
    }
    if !(h > 0.0) {
        return Err(Error::invalid("h", "time step must be positive"));
    }
    let v = (gains.kv * be.bex).max(0.0);
    let omega_s = gains.ks * be.betheta + gains.kl * be.bey;
    let phi_raw = gains.ki * state.phi_prev + gains.ki * h * omega_s;
    let phi = phi_raw.clamp(-phi_max, phi_max);
    Ok((
        ControlCommand { v, omega_s, phi },
        ControllerState { phi_prev: phi },
    ))
}
