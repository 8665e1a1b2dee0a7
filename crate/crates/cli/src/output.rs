//! Output tree layout and file writers. Every text artifact opens with a
//! `# seed=N` line; JSON artifacts carry a `seed` field.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use pathtune::rl::TrainingOutcome;

pub struct OutputTree {
    root: PathBuf,
}

impl OutputTree {
    pub const DIRS: [&'static str; 4] = ["learning_curves", "qtables", "trajectories", "reports"];

    pub fn create(root: &Path) -> Result<Self> {
        for d in Self::DIRS {
            let p = root.join(d);
            fs::create_dir_all(&p).with_context(|| format!("creating {}", p.display()))?;
        }
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, dir: &str, name: &str) -> PathBuf {
        self.root.join(dir).join(name)
    }

    /// Writes a text file whose first line records the seed.
    pub fn text<F>(&self, dir: &str, name: &str, seed: u64, body: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.path(dir, name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "# seed={seed}")?;
        body(&mut w)?;
        w.flush()?;
        log::debug!("wrote {}", path.display());
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, dir: &str, name: &str, seed: u64, value: &T) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Seeded<'a, T> {
            seed: u64,
            #[serde(flatten)]
            value: &'a T,
        }
        let path = self.path(dir, name);
        let mut text = serde_json::to_string_pretty(&Seeded { seed, value })?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub const CURVE_HEADER: &str = "episode,reward_sum,steps,terminal,kv,kl,ks,ki,epsilon,ey,etheta";

pub fn write_curve<W: Write>(w: &mut W, out: &TrainingOutcome) -> std::io::Result<()> {
    writeln!(w, "# alpha={}", out.config.alpha)?;
    writeln!(w, "{CURVE_HEADER}")?;
    for e in &out.curve {
        let g = e.final_gains;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            e.episode,
            e.reward_sum,
            e.steps,
            e.terminal.is_some(),
            g.kv,
            g.kl,
            g.ks,
            g.ki,
            e.epsilon,
            e.final_state.ey,
            e.final_state.etheta
        )?;
    }
    Ok(())
}

pub const TERMINALS_HEADER: &str = "alpha,episode,step,kv,kl,ks,ki,distance";

pub fn write_terminals<W: Write>(w: &mut W, outs: &[TrainingOutcome]) -> std::io::Result<()> {
    writeln!(w, "{TERMINALS_HEADER}")?;
    for o in outs {
        for t in &o.terminals {
            let g = t.gains;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                o.config.alpha, t.episode, t.step, g.kv, g.kl, g.ks, g.ki, t.distance
            )?;
        }
    }
    Ok(())
}

/// Reads the `reward_sum` column of a learning-curve CSV.
pub fn parse_reward_column(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().context("learning curve is empty")?;
    let col = header
        .split(',')
        .position(|c| c.trim() == "reward_sum")
        .context("learning curve has no reward_sum column")?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let cell = line.split(',').nth(col).with_context(|| format!("row {} is too short", i + 1))?;
        out.push(cell.trim().parse::<f64>().with_context(|| format!("row {}: bad reward {cell:?}", i + 1))?);
    }
    if out.is_empty() {
        bail!("learning curve has no episodes");
    }
    Ok(out)
}

/// Formats alpha for file names: `0.5` becomes `0p5`.
pub fn alpha_tag(alpha: f64) -> String {
    format!("{alpha}").replace('.', "p").replace('-', "m")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_column_parses_written_curves() {
        let text = "# seed=3\n# alpha=0.5\nepisode,reward_sum,steps\n0,0.25,4\n1,-1.5,130\n";
        assert_eq!(parse_reward_column(text).unwrap(), vec![0.25, -1.5]);
        assert!(parse_reward_column("# seed=3\nepisode,steps\n0,1\n").is_err());
        assert!(parse_reward_column("episode,reward_sum\n").is_err());
        assert!(parse_reward_column("episode,reward_sum\n0,abc\n").is_err());
    }

    #[test]
    fn alpha_tags() {
        assert_eq!(alpha_tag(0.5), "0p5");
        assert_eq!(alpha_tag(1.0), "1");
        assert_eq!(alpha_tag(0.125), "0p125");
    }
}
