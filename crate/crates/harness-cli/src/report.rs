//! Run reports: a config echo, per-metric tables persisted as CSV, one
//! pass/fail line per check, and a gnuplot-compatible plot script. Every
//! reported verdict is recomputable from the persisted artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Inconclusive => 1,
            Verdict::Fail => 2,
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct RunReport {
    pub experiment: String,
    pub config_echo: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
    pub wall_clock_s: f64,
}

impl RunReport {
    pub fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            detail,
        });
    }

    pub fn inconclusive(&mut self, name: &str, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            verdict: Verdict::Inconclusive,
            detail,
        });
    }

    pub fn verdict(&self) -> Verdict {
        if self.checks.iter().any(|c| c.verdict == Verdict::Fail) {
            Verdict::Fail
        } else if self
            .checks
            .iter()
            .any(|c| c.verdict == Verdict::Inconclusive)
        {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "experiment {}", self.experiment);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "wall_clock_s {:.1}", self.wall_clock_s);
        out.push_str("--- config ---\n");
        out.push_str(&self.config_echo);
        out.push_str("--- checks ---\n");
        for c in &self.checks {
            let _ = writeln!(out, "{}: {} ({})", c.name, c.verdict.word(), c.detail);
        }
        for a in &self.artifacts {
            let _ = writeln!(out, "artifact {}", a.display());
        }
        let _ = writeln!(out, "verdict {}", self.verdict().word());
        out
    }

    pub fn write_csv(
        &mut self,
        out_dir: &Path,
        name: &str,
        header: &str,
        rows: &[String],
    ) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join(name);
        let mut text = String::from(header);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        std::fs::write(&path, text)?;
        self.artifacts.push(path.clone());
        Ok(path)
    }

    /// Emit a gnuplot script plotting the named CSV columns.
    pub fn write_plot_script(
        &mut self,
        out_dir: &Path,
        name: &str,
        csv: &str,
        title: &str,
        logscale: bool,
    ) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join(name);
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set title '{title}'");
        if logscale {
            let _ = writeln!(s, "set logscale xy");
        }
        let _ = writeln!(s, "plot '{csv}' using 1:2 with linespoints title '{title}'");
        std::fs::write(&path, s)?;
        self.artifacts.push(path.clone());
        Ok(path)
    }
}
