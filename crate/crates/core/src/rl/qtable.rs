use std::io::{BufRead, Write};

use rand::Rng;

use super::action::{ActionIndex, NUM_ACTIONS};
use super::state::{StateBin, BINS};
use crate::error::{Error, Result};

/// Dense `40 x 40 x 81` action-value table, zero-initialised.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
}

impl Default for QTable {
    fn default() -> Self {
        Self::new()
    }
}

impl QTable {
    pub fn new() -> Self {
        Self { values: vec![0.0; BINS * BINS * NUM_ACTIONS] }
    }

    fn offset(s: StateBin) -> usize {
        (s.iy * BINS + s.itheta) * NUM_ACTIONS
    }

    pub fn row(&self, s: StateBin) -> &[f64] {
        let o = Self::offset(s);
        &self.values[o..o + NUM_ACTIONS]
    }

    pub fn get(&self, s: StateBin, a: ActionIndex) -> f64 {
        self.values[Self::offset(s) + a.get()]
    }

    pub fn set(&mut self, s: StateBin, a: ActionIndex, v: f64) {
        self.values[Self::offset(s) + a.get()] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self, s: StateBin) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First action attaining the row maximum.
    pub fn greedy(&self, s: StateBin) -> ActionIndex {
        let row = self.row(s);
        let mut best = 0;
        for (i, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = i;
            }
        }
        ActionIndex::new(best).expect("row has NUM_ACTIONS entries")
    }

    /// Dimensions line, then one line of comma-separated values per state
    /// in row-major `(iy, itheta)` order.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", BINS, BINS, NUM_ACTIONS)?;
        for row in self.values.chunks(NUM_ACTIONS) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .map(|l| l.map_err(|e| Error::Parse(e.to_string())))
            .filter(|l| l.as_ref().map_or(true, |s| !s.starts_with('#') && !s.trim().is_empty()));
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|d| d.parse().map_err(|e| Error::Parse(format!("header: {e}"))))
            .collect::<Result<_>>()?;
        if dims != [BINS, BINS, NUM_ACTIONS] {
            return Err(Error::Parse(format!("unexpected dimensions {dims:?}")));
        }
        let mut values = Vec::with_capacity(BINS * BINS * NUM_ACTIONS);
        for line in lines {
            for v in line?.split(',') {
                values.push(v.trim().parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?);
            }
        }
        if values.len() != BINS * BINS * NUM_ACTIONS {
            return Err(Error::Parse(format!("expected {} values, got {}", BINS * BINS * NUM_ACTIONS, values.len())));
        }
        Ok(Self { values })
    }
}

/// One-step Q-Learning update of a single entry.
pub fn q_update(q: &mut QTable, s: StateBin, a: ActionIndex, r: f64, next: StateBin, alpha: f64, gamma: f64) {
    let old = q.get(s, a);
    let target = r + gamma * q.max_value(next);
    q.set(s, a, old + alpha * (target - old));
}

pub fn epsilon_greedy<R: Rng + ?Sized>(q: &QTable, s: StateBin, epsilon: f64, rng: &mut R) -> ActionIndex {
    if rng.random::<f64>() < epsilon {
        ActionIndex::new(rng.random_range(0..NUM_ACTIONS)).expect("range is bounded")
    } else {
        q.greedy(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(iy: usize, itheta: usize) -> StateBin {
        StateBin { iy, itheta }
    }

    fn a(i: usize) -> ActionIndex {
        ActionIndex::new(i).unwrap()
    }

    #[test]
    fn hand_evaluated_update() {
        let mut q = QTable::new();
        q_update(&mut q, s(3, 4), a(10), 1.0, s(5, 5), 0.5, 0.9);
        assert!((q.get(s(3, 4), a(10)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_alpha_leaves_table() {
        let mut q = QTable::new();
        q.set(s(1, 1), a(2), 0.3);
        let before = q.clone();
        q_update(&mut q, s(1, 1), a(2), 5.0, s(1, 1), 0.0, 0.9);
        assert_eq!(q, before);
    }

    #[test]
    fn bellman_fixed_point() {
        let mut q = QTable::new();
        q.set(s(0, 0), a(7), 1.0);
        q.set(s(2, 2), a(3), 1.0);
        q_update(&mut q, s(0, 0), a(7), 0.0, s(2, 2), 0.5, 1.0);
        assert!((q.get(s(0, 0), a(7)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn update_touches_one_entry() {
        let mut q = QTable::new();
        let before = q.clone();
        q_update(&mut q, s(7, 9), a(44), -0.3, s(7, 10), 0.3, 0.9);
        let changed = before.values().iter().zip(q.values()).filter(|(x, y)| x != y).count();
        assert_eq!(changed, 1);
    }

    #[test]
    fn greedy_and_ties() {
        let mut q = QTable::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(epsilon_greedy(&q, s(0, 0), 0.0, &mut rng).get(), 0);
        q.set(s(0, 0), a(57), 0.2);
        for _ in 0..10 {
            assert_eq!(epsilon_greedy(&q, s(0, 0), 0.0, &mut rng).get(), 57);
        }
    }

    #[test]
    fn uniform_exploration() {
        let q = QTable::new();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 10_000;
        let mut counts = [0usize; NUM_ACTIONS];
        for _ in 0..n {
            counts[epsilon_greedy(&q, s(0, 0), 1.0, &mut rng).get()] += 1;
        }
        let p = 1.0 / NUM_ACTIONS as f64;
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() <= 3.0 * sd + 1.0, "count {c}");
        }
    }

    #[test]
    fn text_round_trip() {
        let mut q = QTable::new();
        q.set(s(39, 0), a(80), -1.25e-7);
        q.set(s(0, 39), a(0), 0.1 + 0.2);
        let mut buf = Vec::new();
        q.write_text(&mut buf).unwrap();
        assert!(buf.starts_with(b"40 40 81\n"));
        assert_eq!(QTable::read_text(buf.as_slice()).unwrap(), q);
        assert!(QTable::read_text("2 2 2\n".as_bytes()).is_err());
    }
}
