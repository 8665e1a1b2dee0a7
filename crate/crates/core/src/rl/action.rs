use serde::{Deserialize, Serialize};

use crate::controller::GainSet;
use crate::error::{Error, Result};

pub const NUM_ACTIONS: usize = 81;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionIndex(usize);

impl ActionIndex {
    pub fn new(idx: usize) -> Result<Self> {
        if idx < NUM_ACTIONS {
            Ok(Self(idx))
        } else {
            Err(Error::ActionOutOfRange(idx))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Base-3 digits of the index, most significant first, shifted to {-1, 0, 1}.
pub fn decode_action(idx: ActionIndex) -> [i8; 4] {
    let mut rest = idx.0;
    let mut out = [0i8; 4];
    for slot in out.iter_mut().rev() {
        *slot = (rest % 3) as i8 - 1;
        rest /= 3;
    }
    out
}

pub fn encode_action(a: [i8; 4]) -> Result<ActionIndex> {
    let mut idx = 0usize;
    for d in a {
        if !(-1..=1).contains(&d) {
            return Err(Error::invalid("action", "components must be -1, 0 or 1"));
        }
        idx = idx * 3 + (d + 1) as usize;
    }
    ActionIndex::new(idx)
}

/// `g_j + h_j * a_j` clamped to `[k_min_j, k_max_j]`; locked components
/// are left unchanged.
pub fn apply_action(
    g: &GainSet,
    a: [i8; 4],
    h: [f64; 4],
    k_min: &GainSet,
    k_max: &GainSet,
    locked: [bool; 4],
) -> GainSet {
    let (cur, lo, hi) = (g.to_array(), k_min.to_array(), k_max.to_array());
    let mut out = cur;
    for j in 0..4 {
        if !locked[j] {
            // snap to the nano grid so repeated steps print and compare cleanly
            let v = ((cur[j] + h[j] * f64::from(a[j])) * 1e9).round() / 1e9;
            out[j] = v.clamp(lo[j], hi[j]);
        }
    }
    GainSet::from_array(out)
}
