use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use pathtune::eval::{self, MseReport};
use pathtune::rl::{most_frequent_terminal_gains, train_sweep, TrainingEnv};
use pathtune::supervisor::{GainSchedule, MonitorStatus};
use pathtune::{Exec, GainSet, Maneuver, NoiseModel, Outcome};

use crate::config::RunConfig;
use crate::output::{alpha_tag, write_curve, write_terminals, OutputTree};

/// How a command finished when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Collision,
}

fn noise_tag(noise: &NoiseModel) -> &'static str {
    if noise.enabled {
        "noise"
    } else {
        "clean"
    }
}

#[derive(Serialize)]
struct ChosenGains<'a> {
    maneuver: Maneuver,
    alphas: &'a [f64],
    gains: GainSet,
    terminal_sets: usize,
    locked: Vec<[Option<f64>; 4]>,
}

pub fn train(cfg: &RunConfig, maneuver: Maneuver) -> Result<Status> {
    let seed = cfg.seed();
    let mut tcfg = cfg.training.get(maneuver)?.clone();
    tcfg.seed = seed;
    let env = TrainingEnv::new(cfg.sim, cfg.scenario(maneuver)?);
    let alphas = &cfg.training.alphas;
    log::info!("training {maneuver}: {} episodes for each alpha in {alphas:?}", tcfg.episodes);
    let outs = train_sweep(&tcfg, alphas, &env, Exec::default())?;

    let tree = OutputTree::create(&cfg.output)?;
    for o in &outs {
        let tag = format!("{maneuver}_alpha{}", alpha_tag(o.config.alpha));
        tree.text("learning_curves", &format!("{tag}.csv"), o.config.seed, |w| write_curve(w, o))?;
        tree.text("qtables", &format!("{tag}.txt"), o.config.seed, |w| o.qtable.write_text(w))?;
    }
    tree.text("reports", &format!("{maneuver}_terminals.csv"), seed, |w| write_terminals(w, &outs))?;

    let terminal_sets: usize = outs.iter().map(|o| o.terminals.len()).sum();
    let gains = most_frequent_terminal_gains(outs.iter().map(|o| o.terminals.as_slice()))
        .context("no training run reached a terminal state")?;
    let chosen = ChosenGains {
        maneuver,
        alphas,
        gains,
        terminal_sets,
        locked: outs.iter().map(|o| o.locked).collect(),
    };
    let path = tree.json("reports", &format!("{maneuver}_chosen_gains.json"), seed, &chosen)?;
    println!("{maneuver}: chosen gains {gains} from {terminal_sets} terminal sets");
    println!("wrote {}", path.display());
    Ok(Status::Success)
}

/// Reads gains from a chosen-gains JSON file or a text file whose first
/// non-comment line is `kv,kl,ks,ki`.
pub fn read_gains_file(path: &Path) -> Result<GainSet> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) {
        let g = v.get("gains").context("JSON gains file has no `gains` field")?;
        return serde_json::from_value(g.clone()).context("malformed `gains` object");
    }
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .with_context(|| format!("{} has no gains line", path.display()))?;
    Ok(GainSet::parse(line)?)
}

fn warn_outside_range(cfg: &RunConfig, maneuver: Maneuver, g: &GainSet) -> Result<()> {
    let t = cfg.training.get(maneuver)?;
    let (lo, hi, v) = (t.k_min.to_array(), t.k_max.to_array(), g.to_array());
    if (0..4).any(|j| v[j] < lo[j] || v[j] > hi[j]) {
        log::warn!("gains {g} lie outside the {maneuver} training range [{}, {}]", t.k_min, t.k_max);
    }
    Ok(())
}

pub fn eval(cfg: &RunConfig, maneuver: Maneuver, gains: GainSet) -> Result<Status> {
    gains.validate().context("invalid gains")?;
    warn_outside_range(cfg, maneuver, &gains)?;
    let seed = cfg.seed();
    let scenario = cfg.scenario(maneuver)?;
    let result = eval::evaluate_gains(&gains, &scenario, &cfg.sim, &cfg.noise, cfg.eval.runs, seed, Exec::default())?;
    let report = &result.report;

    let tree = OutputTree::create(&cfg.output)?;
    let tag = format!("eval_{maneuver}_{}", noise_tag(&cfg.noise));
    for (i, log) in result.logs.iter().enumerate() {
        tree.text("trajectories", &format!("{tag}_run{i:02}.csv"), report.seeds[i], |w| log.write_csv(w))?;
    }
    tree.text("reports", &format!("{tag}.csv"), seed, |w| report.write_csv(w))?;
    let path = tree.json("reports", &format!("{tag}.json"), seed, report)?;
    print_report(report);
    println!("wrote {}", path.display());
    Ok(Status::Success)
}

fn print_report(r: &MseReport) {
    println!(
        "{} gains {} noise={} runs={} reported_mse={} collisions={}",
        r.maneuver,
        r.gains,
        if r.noise_enabled { "on" } else { "off" },
        r.runs,
        r.reported_mse,
        r.collisions()
    );
}

#[derive(Serialize)]
struct CircuitSummary<'a> {
    report: &'a MseReport,
    outcome: Outcome,
    max_speed: f64,
    speed_limit: f64,
    schedule: &'a GainSchedule,
    monitor: Option<MonitorStatus>,
}

pub fn circuit(cfg: &RunConfig) -> Result<Status> {
    let seed = cfg.seed();
    let scenario = cfg.circuit_scenario()?;
    let monitor = cfg.reward_monitor()?;
    let noise = cfg.noise.with_seed(seed);
    let run = eval::run_circuit(&cfg.schedule, cfg.limit, &noise, &cfg.sim, &scenario, monitor.as_ref())?;
    let max_speed = run.log.samples.iter().map(|s| s.v).fold(0.0, f64::max);

    let tree = OutputTree::create(&cfg.output)?;
    let tag = format!("circuit_{}", noise_tag(&noise));
    tree.text("trajectories", &format!("{tag}.csv"), seed, |w| {
        run.log.write_csv(&mut *w)?;
        match run.monitor {
            Some(m) => writeln!(w, "# monitor={}", m.as_str()),
            None => Ok(()),
        }
    })?;
    tree.text("reports", &format!("{tag}.csv"), seed, |w| run.report.write_csv(w))?;
    let summary = CircuitSummary {
        report: &run.report,
        outcome: run.log.outcome,
        max_speed,
        speed_limit: cfg.limit.v_max,
        schedule: &run.schedule,
        monitor: run.monitor,
    };
    let path = tree.json("reports", &format!("{tag}.json"), seed, &summary)?;
    println!(
        "circuit noise={} outcome={} mse={} max_speed={max_speed}{}",
        if noise.enabled { "on" } else { "off" },
        run.log.outcome.as_str(),
        run.report.reported_mse,
        run.monitor.map(|m| format!(" monitor={}", m.as_str())).unwrap_or_default()
    );
    println!("wrote {}", path.display());
    if run.log.outcome == Outcome::Collision {
        log::error!("circuit run ended in a collision");
        return Ok(Status::Collision);
    }
    Ok(Status::Success)
}

/// Parses one gain set per line, skipping blanks and `#` comments. Malformed
/// lines are reported and skipped.
pub fn parse_gains_list(text: &str) -> Result<Vec<GainSet>> {
    let mut sets = Vec::new();
    let mut malformed = 0;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match GainSet::parse(line).and_then(|g| g.validate().map(|_| g)) {
            Ok(g) => sets.push(g),
            Err(e) => {
                malformed += 1;
                log::warn!("gains list line {}: {e}; skipped", n + 1);
            }
        }
    }
    if sets.is_empty() {
        if malformed > 0 {
            bail!("all {malformed} gains lines are malformed");
        }
        bail!("gains list is empty");
    }
    Ok(sets)
}

pub fn compare(cfg: &RunConfig, maneuver: Maneuver, list: &Path) -> Result<Status> {
    let text = std::fs::read_to_string(list).with_context(|| format!("reading {}", list.display()))?;
    let sets = parse_gains_list(&text).with_context(|| format!("in {}", list.display()))?;
    for g in &sets {
        warn_outside_range(cfg, maneuver, g)?;
    }
    let seed = cfg.seed();
    let scenario = cfg.scenario(maneuver)?;
    let noise = [NoiseModel { enabled: false, ..cfg.noise }, NoiseModel { enabled: true, ..cfg.noise }];
    let cmp = eval::grid_compare(&sets, &scenario, &cfg.sim, &noise, cfg.eval.runs, seed, Exec::default())?;

    let tree = OutputTree::create(&cfg.output)?;
    let tag = format!("compare_{maneuver}");
    tree.text("reports", &format!("{tag}.csv"), seed, |w| cmp.write_csv(w))?;
    tree.text("reports", &format!("{tag}_runs.csv"), seed, |w| {
        writeln!(w, "{}", eval::REPORT_HEADER)?;
        cmp.rows.iter().try_for_each(|r| r.write_rows(&mut *w))
    })?;
    let path = tree.json("reports", &format!("{tag}.json"), seed, &cmp)?;
    for r in cmp.rows.iter().filter(|r| !r.noise_enabled) {
        print_report(r);
    }
    println!("wrote {}", path.display());
    Ok(Status::Success)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gains_list_skips_bad_lines() {
        let sets = parse_gains_list("# header\n3,21,21,0.7\n\nnot,gains\n1,2,3\n3.4,21,1,0.84\n2,2,2,1.5\n").unwrap();
        assert_eq!(sets, vec![GainSet::new(3.0, 21.0, 21.0, 0.7), GainSet::new(3.4, 21.0, 1.0, 0.84)]);
        let e = parse_gains_list("x\ny,1\n").unwrap_err();
        assert!(e.to_string().contains("all 2"), "{e}");
        assert!(parse_gains_list("\n# only comments\n").is_err());
    }
}
