use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BINS: usize = 40;

/// Mean absolute lateral (m) and heading (rad) errors over one run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorState {
    pub ey: f64,
    pub etheta: f64,
}

impl ErrorState {
    pub fn new(ey: f64, etheta: f64) -> Self {
        Self { ey, etheta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct StateBin {
    pub iy: usize,
    pub itheta: usize,
}

fn bin(e: f64, low: f64, high: f64) -> usize {
    let raw = (BINS as f64 * (e - low) / (high - low)).floor();
    raw.clamp(0.0, (BINS - 1) as f64) as usize
}

pub fn discretize(e: &ErrorState, low: [f64; 2], high: [f64; 2]) -> Result<StateBin> {
    if !(e.ey.is_finite() && e.etheta.is_finite()) {
        return Err(Error::NonFinite("error state"));
    }
    if e.ey < 0.0 || e.etheta < 0.0 {
        return Err(Error::invalid("error state", "averages of absolute errors cannot be negative"));
    }
    if !(low[0] < high[0] && low[1] < high[1]) {
        return Err(Error::invalid("state limits", "E_low must be below E_high"));
    }
    Ok(StateBin {
        iy: bin(e.ey, low[0], high[0]),
        itheta: bin(e.etheta, low[1], high[1]),
    })
}

/// Distance to the zero-error state, heading weighted by 10 under the root.
pub fn weighted_distance(e: &ErrorState) -> f64 {
    (e.ey * e.ey + 10.0 * e.etheta * e.etheta).sqrt()
}
