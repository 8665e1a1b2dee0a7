use pathtune::rl::{most_frequent_terminal_gains, train, train_sweep, TrainingConfig, TrainingEnv};
use pathtune::{Exec, Maneuver, Scenario, SimConfig};

fn env(m: Maneuver) -> TrainingEnv {
    TrainingEnv::new(SimConfig::default(), Scenario::for_maneuver(m).unwrap())
}

fn quick(seed: u64) -> TrainingConfig {
    TrainingConfig { loop_time: 2.0, episodes: 8, seed, ..TrainingConfig::lane_change() }
}

#[test]
fn training_is_deterministic() {
    let e = env(Maneuver::LaneChange);
    let a = train(&quick(4), &e).unwrap();
    let b = train(&quick(4), &e).unwrap();
    assert_eq!(a.curve, b.curve);
    assert_eq!(a.terminals, b.terminals);
    assert_eq!(a.qtable, b.qtable);
}

#[test]
fn curve_and_terminal_bookkeeping() {
    let cfg = quick(1);
    let out = train(&cfg, &env(Maneuver::LaneChange)).unwrap();
    assert_eq!(out.curve.len(), cfg.episodes);
    assert!(out.curve.iter().all(|e| e.steps <= cfg.step_limit));
    // the first step of a training always improves on an infinite best
    assert_eq!(out.curve[0].steps, 1);
    assert!(out.terminals.windows(2).all(|w| w[1].distance < w[0].distance));
    for e in &out.curve {
        assert_eq!(e.terminal.is_some(), out.terminals.iter().any(|t| t.episode == e.episode));
    }
    let eps: Vec<f64> = out.curve.iter().map(|e| e.epsilon).collect();
    assert!(eps.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(eps[cfg.episodes / 2], 0.0);
}

#[test]
fn gains_stay_in_range_and_locks_hold() {
    let cfg = TrainingConfig { loop_time: 2.0, episodes: 20, seed: 2, ..TrainingConfig::roundabout() };
    let out = train(&cfg, &env(Maneuver::Roundabout)).unwrap();
    let lo = cfg.k_min.to_array();
    let hi = cfg.k_max.to_array();
    for e in &out.curve {
        let g = e.final_gains.to_array();
        assert!((0..4).all(|j| g[j] >= lo[j] - 1e-12 && g[j] <= hi[j] + 1e-12), "{}", e.final_gains);
    }
    for (j, lock) in out.locked.iter().enumerate() {
        if let Some(v) = lock {
            // once locked, every later terminal set carries the locked value
            let since = out.terminals.iter().rposition(|t| (t.gains.to_array()[j] - v).abs() > 1e-9);
            if let Some(i) = since {
                assert!(out.terminals[i + 1..].iter().all(|t| (t.gains.to_array()[j] - v).abs() <= 1e-9));
            }
        }
    }
}

#[test]
fn sweep_matches_individual_runs() {
    let cfg = quick(10);
    let e = env(Maneuver::LaneChange);
    let alphas = [0.2, 0.8];
    let seq = train_sweep(&cfg, &alphas, &e, Exec::Sequential).unwrap();
    let par = train_sweep(&cfg, &alphas, &e, Exec::Parallel).unwrap();
    for (a, b) in seq.iter().zip(&par) {
        assert_eq!(a.curve, b.curve);
    }
    let single = train(&TrainingConfig { alpha: 0.8, seed: 11, ..cfg }, &e).unwrap();
    assert_eq!(single.curve, seq[1].curve);
    let chosen = most_frequent_terminal_gains(seq.iter().map(|o| o.terminals.as_slice())).unwrap();
    assert!(seq.iter().flat_map(|o| &o.terminals).any(|t| t.gains == chosen));
}
