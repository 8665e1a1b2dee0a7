use std::collections::{HashMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::{apply_action, decode_action};
use super::qtable::{epsilon_greedy, q_update, QTable};
use super::reward::reward;
use super::state::{discretize, weighted_distance, ErrorState};
use crate::controller::GainSet;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::paths::Maneuver;
use crate::scenario::Scenario;
use crate::sim::{run_simulation, GainSource, NoiseModel, Outcome, SimConfig};

/// Number of trailing terminal gain sets inspected for locking.
pub const LOCK_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub maneuver: Maneuver,
    /// Simulated seconds per training step.
    pub loop_time: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub e_low: [f64; 2],
    pub e_high: [f64; 2],
    pub k_min: GainSet,
    pub k_max: GainSet,
    pub h: [f64; 4],
    pub epsilon_start: f64,
    /// Per-episode decrement; `None` means `1 / (episodes / 2)`.
    pub epsilon_decay: Option<f64>,
    pub step_limit: usize,
    pub episodes: usize,
    pub collision_penalty: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self::lane_change()
    }
}

impl TrainingConfig {
    pub fn lane_change() -> Self {
        Self {
            maneuver: Maneuver::LaneChange,
            loop_time: 5.0,
            gamma: 0.9,
            alpha: 0.5,
            e_low: [0.0, 0.0],
            e_high: [3.0, 0.4],
            k_min: GainSet::new(0.1, 1.0, 1.0, 0.7),
            k_max: GainSet::new(3.0, 21.0, 21.0, 0.98),
            h: [0.58, 5.0, 5.0, 0.07],
            epsilon_start: 1.0,
            epsilon_decay: None,
            step_limit: 130,
            episodes: 30,
            collision_penalty: 1.0,
            seed: 0,
        }
    }

    pub fn roundabout() -> Self {
        Self {
            maneuver: Maneuver::Roundabout,
            loop_time: 30.0,
            e_high: [1.0, 0.1],
            k_min: GainSet::new(1.0, 1.0, 1.0, 0.7),
            k_max: GainSet::new(5.8, 21.0, 21.0, 0.98),
            h: [1.2, 5.0, 5.0, 0.07],
            step_limit: 100,
            episodes: 20,
            ..Self::lane_change()
        }
    }

    pub fn for_maneuver(maneuver: Maneuver) -> Result<Self> {
        match maneuver {
            Maneuver::LaneChange => Ok(Self::lane_change()),
            Maneuver::Roundabout => Ok(Self::roundabout()),
            Maneuver::Default => Err(Error::invalid("maneuver", "only lane-change and roundabout are trainable")),
        }
    }

    pub fn decay(&self) -> f64 {
        self.epsilon_decay
            .unwrap_or_else(|| 1.0 / (self.episodes as f64 / 2.0).max(1.0))
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str| format!("training.{name}");
        if !(self.loop_time > 0.0) {
            return Err(Error::invalid(field("loop_time"), "must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid(field("gamma"), "must lie in (0, 1]"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(field("alpha"), "must lie in (0, 1]"));
        }
        if !(self.e_low[0] < self.e_high[0] && self.e_low[1] < self.e_high[1]) {
            return Err(Error::invalid(field("e_low"), "must be below e_high componentwise"));
        }
        self.k_min.validate().map_err(|e| Error::invalid(field("k_min"), e.to_string()))?;
        self.k_max.validate().map_err(|e| Error::invalid(field("k_max"), e.to_string()))?;
        if self.k_min.to_array().iter().zip(self.k_max.to_array()).any(|(lo, hi)| *lo > hi) {
            return Err(Error::invalid(field("k_min"), "must not exceed k_max"));
        }
        if self.h.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::invalid(field("h"), "step constants must be positive"));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) {
            return Err(Error::invalid(field("epsilon_start"), "must lie in [0, 1]"));
        }
        if !(self.decay() >= 0.0) {
            return Err(Error::invalid(field("epsilon_decay"), "must be non-negative"));
        }
        if self.step_limit == 0 {
            return Err(Error::invalid(field("step_limit"), "must be positive"));
        }
        if self.episodes == 0 {
            return Err(Error::invalid(field("episodes"), "must be positive"));
        }
        if !(self.collision_penalty >= 0.0) {
            return Err(Error::invalid(field("collision_penalty"), "must be non-negative"));
        }
        Ok(())
    }
}

/// Simulator context shared by every training step.
#[derive(Debug, Clone)]
pub struct TrainingEnv {
    pub sim: SimConfig,
    pub scenario: Scenario,
}

impl TrainingEnv {
    pub fn new(sim: SimConfig, scenario: Scenario) -> Self {
        Self { sim, scenario }
    }
}

/// Runs one noise-free simulation of `loop_time` seconds and returns the
/// mean absolute lateral and heading errors, plus whether it collided.
pub fn run_step(gains: &GainSet, loop_time: f64, env: &TrainingEnv) -> Result<(ErrorState, bool)> {
    let setup = env.scenario.setup(loop_time);
    let log = run_simulation(&env.sim, GainSource::Fixed(*gains), &setup, &NoiseModel::disabled())?;
    let n = log.samples.len();
    if n == 0 {
        return Ok((ErrorState::default(), false));
    }
    let (sy, st) = log
        .samples
        .iter()
        .fold((0.0, 0.0), |(a, b), s| (a + s.bey.abs(), b + s.betheta.abs()));
    Ok((
        ErrorState::new(sy / n as f64, st / n as f64),
        log.outcome == Outcome::Collision,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalRecord {
    pub episode: usize,
    pub step: usize,
    pub gains: GainSet,
    pub distance: f64,
}

/// Closest-state bookkeeping and range locking.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalTracker {
    pub best_distance: f64,
    recent: VecDeque<GainSet>,
    locked: [Option<f64>; 4],
}

impl Default for TerminalTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl TerminalTracker {
    pub fn new() -> Self {
        Self {
            best_distance: f64::INFINITY,
            recent: VecDeque::with_capacity(LOCK_WINDOW),
            locked: [None; 4],
        }
    }

    /// True when `distance` beats every state seen so far.
    pub fn is_terminal(&self, distance: f64) -> bool {
        distance < self.best_distance
    }

    pub fn record(&mut self, gains: GainSet, distance: f64) {
        self.best_distance = self.best_distance.min(distance);
        if self.recent.len() == LOCK_WINDOW {
            self.recent.pop_front();
        }
        self.recent.push_back(gains);
    }

    /// Locks every component that is constant over the last
    /// [`LOCK_WINDOW`] terminal sets. Locks are never released.
    pub fn update_locks(&mut self) {
        if self.recent.len() < LOCK_WINDOW {
            return;
        }
        let first = self.recent[0];
        let first_key = first.key();
        for j in 0..4 {
            if self.locked[j].is_none() && self.recent.iter().all(|g| g.key()[j] == first_key[j]) {
                self.locked[j] = Some(first.to_array()[j]);
            }
        }
    }

    pub fn locked(&self) -> [Option<f64>; 4] {
        self.locked
    }

    pub fn locked_mask(&self) -> [bool; 4] {
        self.locked.map(|l| l.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode: usize,
    pub reward_sum: f64,
    pub steps: usize,
    pub terminal: Option<GainSet>,
    pub final_gains: GainSet,
    pub final_state: ErrorState,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub config: TrainingConfig,
    pub qtable: QTable,
    pub curve: Vec<EpisodeResult>,
    pub terminals: Vec<TerminalRecord>,
    pub locked: [Option<f64>; 4],
}

impl TrainingOutcome {
    pub fn reward_sums(&self) -> Vec<f64> {
        self.curve.iter().map(|e| e.reward_sum).collect()
    }
}

fn reset_gains(cfg: &TrainingConfig, locked: [Option<f64>; 4]) -> GainSet {
    let (lo, hi) = (cfg.k_min.to_array(), cfg.k_max.to_array());
    let mut g = [0.0; 4];
    for j in 0..4 {
        g[j] = locked[j].unwrap_or((0.5 * (lo[j] + hi[j]) * 1e9).round() / 1e9);
    }
    GainSet::from_array(g)
}

/// Full training run: episodes of epsilon-greedy steps over gain space,
/// terminating on improvement of the closest state seen so far.
pub fn train(cfg: &TrainingConfig, env: &TrainingEnv) -> Result<TrainingOutcome> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut q = QTable::new();
    let mut tracker = TerminalTracker::new();
    let mut curve = Vec::with_capacity(cfg.episodes);
    let mut terminals = Vec::new();
    let mut epsilon = cfg.epsilon_start;
    // training runs are noise-free, so a gain set always yields the same step
    let mut cache: HashMap<[i64; 4], (ErrorState, bool)> = HashMap::new();
    let mut step_once = |g: &GainSet| -> Result<(ErrorState, bool)> {
        if let Some(hit) = cache.get(&g.key()) {
            return Ok(*hit);
        }
        let out = run_step(g, cfg.loop_time, env)?;
        cache.insert(g.key(), out);
        Ok(out)
    };

    for episode in 0..cfg.episodes {
        let locked = tracker.locked();
        let mask = tracker.locked_mask();
        let mut gains = reset_gains(cfg, locked);
        let (mut err, _) = step_once(&gains)?;
        let mut state = discretize(&err, cfg.e_low, cfg.e_high)?;
        let mut d_old = weighted_distance(&err);
        let mut reward_sum = 0.0;
        let mut steps = 0;
        let mut terminal = None;

        while steps < cfg.step_limit {
            let action = epsilon_greedy(&q, state, epsilon, &mut rng);
            gains = apply_action(&gains, decode_action(action), cfg.h, &cfg.k_min, &cfg.k_max, mask);
            let (next_err, collided) = step_once(&gains)?;
            let d_new = weighted_distance(&next_err);
            let r = reward(d_new, d_old, collided, cfg.collision_penalty);
            if !r.is_finite() {
                return Err(Error::NonFinite("reward"));
            }
            let next = discretize(&next_err, cfg.e_low, cfg.e_high)?;
            q_update(&mut q, state, action, r, next, cfg.alpha, cfg.gamma);
            reward_sum += r;
            steps += 1;
            err = next_err;
            state = next;
            d_old = d_new;
            if !collided && tracker.is_terminal(d_new) {
                tracker.record(gains, d_new);
                terminals.push(TerminalRecord { episode, step: steps, gains, distance: d_new });
                terminal = Some(gains);
                break;
            }
        }

        curve.push(EpisodeResult {
            episode,
            reward_sum,
            steps,
            terminal,
            final_gains: gains,
            final_state: err,
            epsilon,
        });
        epsilon = (epsilon - cfg.decay()).max(0.0);
        tracker.update_locks();
    }

    Ok(TrainingOutcome {
        config: cfg.clone(),
        qtable: q,
        curve,
        terminals,
        locked: tracker.locked(),
    })
}

/// One training per learning rate, seeded `cfg.seed + index`.
pub fn train_sweep(
    cfg: &TrainingConfig,
    alphas: &[f64],
    env: &TrainingEnv,
    exec: Exec,
) -> Result<Vec<TrainingOutcome>> {
    let configs: Vec<TrainingConfig> = alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| TrainingConfig { alpha, seed: cfg.seed.wrapping_add(i as u64), ..cfg.clone() })
        .collect();
    exec.map(&configs, |c| train(c, env)).into_iter().collect()
}

/// Modal terminal gain set over several trainings. Ties go to the set with
/// the smallest recorded distance, then to the one seen first.
pub fn most_frequent_terminal_gains<'a, I>(histories: I) -> Result<GainSet>
where
    I: IntoIterator<Item = &'a [TerminalRecord]>,
{
    // key -> (count, best distance, first-seen order, gains)
    let mut tally: HashMap<[i64; 4], (usize, f64, usize, GainSet)> = HashMap::new();
    let mut order = 0;
    for history in histories {
        for rec in history {
            let e = tally.entry(rec.gains.key()).or_insert_with(|| {
                order += 1;
                (0, f64::INFINITY, order, rec.gains)
            });
            e.0 += 1;
            e.1 = e.1.min(rec.distance);
        }
    }
    tally
        .into_values()
        .min_by(|a, b| b.0.cmp(&a.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)))
        .map(|(_, _, _, g)| g)
        .ok_or(Error::EmptyHistory)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(gains: GainSet, distance: f64) -> TerminalRecord {
        TerminalRecord { episode: 0, step: 1, gains, distance }
    }

    const A: GainSet = GainSet::new(3.0, 21.0, 21.0, 0.7);
    const B: GainSet = GainSet::new(1.26, 6.0, 11.0, 0.84);

    #[test]
    fn modal_gains() {
        let one = [rec(A, 1.0)];
        assert_eq!(most_frequent_terminal_gains([&one[..]]).unwrap(), A);
        let aab = [rec(A, 1.0), rec(A, 0.9), rec(B, 0.1)];
        assert_eq!(most_frequent_terminal_gains([&aab[..]]).unwrap(), A);
        let h1 = [rec(A, 0.8), rec(B, 0.5)];
        let h2 = [rec(B, 0.6), rec(A, 0.7)];
        assert_eq!(most_frequent_terminal_gains([&h1[..], &h2[..]]).unwrap(), B);
        assert_eq!(most_frequent_terminal_gains(std::iter::empty::<&[TerminalRecord]>()), Err(Error::EmptyHistory));
    }

    #[test]
    fn modal_gains_absorb_rounding() {
        let drifted = GainSet::new(0.1 + 0.58 + 0.58 + 0.58, 6.0, 11.0, 0.7 + 0.07);
        let exact = GainSet::new(1.84, 6.0, 11.0, 0.77);
        let h = [rec(drifted, 1.0), rec(exact, 1.0), rec(A, 0.1)];
        assert_eq!(most_frequent_terminal_gains([&h[..]]).unwrap().key(), exact.key());
    }

    #[test]
    fn locks_constant_components_only() {
        let mut t = TerminalTracker::new();
        let seq = [
            GainSet::new(1.0, 6.0, 11.0, 0.84),
            GainSet::new(1.58, 6.0, 16.0, 0.84),
            GainSet::new(2.16, 6.0, 11.0, 0.91),
            GainSet::new(2.74, 6.0, 21.0, 0.84),
        ];
        for (i, g) in seq.iter().enumerate() {
            t.record(*g, 10.0 - i as f64);
            t.update_locks();
        }
        assert_eq!(t.locked_mask(), [false; 4]);
        t.record(GainSet::new(3.0, 6.0, 16.0, 0.84), 1.0);
        t.update_locks();
        assert_eq!(t.locked_mask(), [false, true, false, false]);
        assert_eq!(t.locked()[1], Some(6.0));
        // a later change in the window does not release the lock
        t.record(GainSet::new(3.0, 11.0, 16.0, 0.84), 0.5);
        t.update_locks();
        assert_eq!(t.locked()[1], Some(6.0));
    }

    #[test]
    fn best_distance_only_improves() {
        let mut t = TerminalTracker::new();
        assert!(t.is_terminal(1e9));
        t.record(A, 2.0);
        assert!(!t.is_terminal(2.0));
        assert!(t.is_terminal(1.9));
    }

    #[test]
    fn default_decay_reaches_zero_at_half() {
        let cfg = TrainingConfig::lane_change();
        assert!((cfg.decay() - 1.0 / 15.0).abs() < 1e-15);
        let mut eps = cfg.epsilon_start;
        for _ in 0..15 {
            eps = f64::max(eps - cfg.decay(), 0.0);
        }
        assert!(eps < 1e-12);
    }

    #[test]
    fn table_one_defaults_validate() {
        TrainingConfig::lane_change().validate().unwrap();
        TrainingConfig::roundabout().validate().unwrap();
        let bad = TrainingConfig { gamma: 0.0, ..TrainingConfig::lane_change() };
        assert!(bad.validate().is_err());
        let bad = TrainingConfig { k_min: GainSet::new(4.0, 1.0, 1.0, 0.7), ..TrainingConfig::lane_change() };
        assert!(bad.validate().is_err());
    }
}
