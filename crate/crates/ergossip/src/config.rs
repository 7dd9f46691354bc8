//! Experiment configuration as flat `key=value` text. Lists are written
//! `a,b,c`; blank lines and `#` comments are ignored. Keys that are absent
//! take the defaults of the named experiment.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ergossip_core::spectral::BRUTEFORCE_MAX_NODES;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    Result1CBarbell,
    Result2Barbell,
    Result3Bounds,
    DrkConvergence,
    FmmcVsEr,
    ExtraComparison,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::Result1CBarbell,
        ExperimentId::Result2Barbell,
        ExperimentId::Result3Bounds,
        ExperimentId::DrkConvergence,
        ExperimentId::FmmcVsEr,
        ExperimentId::ExtraComparison,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Result1CBarbell => "result1_cbarbell",
            ExperimentId::Result2Barbell => "result2_barbell",
            ExperimentId::Result3Bounds => "result3_bounds",
            ExperimentId::DrkConvergence => "drk_convergence",
            ExperimentId::FmmcVsEr => "fmmc_vs_er",
            ExperimentId::ExtraComparison => "extra_comparison",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    /// Acceptance criteria whose checks this experiment reports.
    pub fn criteria(self) -> &'static [u8] {
        match self {
            ExperimentId::Result1CBarbell => &[2, 3],
            ExperimentId::Result2Barbell => &[1, 4, 5, 6],
            ExperimentId::Result3Bounds => &[7, 8],
            ExperimentId::DrkConvergence => &[9],
            ExperimentId::FmmcVsEr => &[11],
            ExperimentId::ExtraComparison => &[10],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub clique_sizes: Vec<usize>,
    pub clique_counts: Vec<usize>,
    pub node_counts: Vec<usize>,
    pub eps: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub sigmas: Vec<f64>,
    /// Graphs per node count (bounds), seeds (D-RK) or problem instances
    /// (EXTRA).
    pub instances: u64,
    pub rounds: usize,
    pub iters: u64,
    /// Trace thinning for long runs.
    pub record_every: u64,
    /// Also evaluate the acceptance checks listed for this experiment.
    pub checks: bool,
}

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentId) -> Self {
        let mut c = ExperimentConfig {
            experiment,
            clique_sizes: vec![],
            clique_counts: vec![],
            node_counts: vec![],
            eps: vec![0.01],
            trials: 200,
            seed: 0,
            out_dir: PathBuf::from("out"),
            sigmas: vec![],
            instances: 20,
            rounds: 10_000,
            iters: 5000,
            record_every: 250,
            checks: true,
        };
        match experiment {
            ExperimentId::Result1CBarbell => {
                c.clique_sizes = vec![2, 3, 4];
                c.clique_counts = vec![2, 3, 4];
            }
            ExperimentId::Result2Barbell => c.clique_sizes = vec![5, 10, 15],
            ExperimentId::Result3Bounds => {
                c.clique_sizes = vec![3, 5, 10];
                c.node_counts = vec![10, 15, 20, 25, 30];
            }
            ExperimentId::DrkConvergence => {
                c.clique_sizes = vec![5];
                c.node_counts = vec![10, 20];
            }
            ExperimentId::FmmcVsEr => {
                c.clique_sizes = vec![5];
                c.iters = 2000;
                c.record_every = 1;
            }
            ExperimentId::ExtraComparison => {
                c.clique_sizes = vec![10, 20];
                c.sigmas = vec![1.0, 2.0];
                c.record_every = 10;
            }
        }
        c
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[String]| v.join(",");
        let ints = |v: &[usize]| list(&v.iter().map(|x| x.to_string()).collect::<Vec<_>>());
        let floats = |v: &[f64]| list(&v.iter().map(|x| x.to_string()).collect::<Vec<_>>());
        writeln!(s, "experiment={}", self.experiment.name()).unwrap();
        writeln!(s, "clique_sizes={}", ints(&self.clique_sizes)).unwrap();
        writeln!(s, "clique_counts={}", ints(&self.clique_counts)).unwrap();
        writeln!(s, "node_counts={}", ints(&self.node_counts)).unwrap();
        writeln!(s, "eps={}", floats(&self.eps)).unwrap();
        writeln!(s, "trials={}", self.trials).unwrap();
        writeln!(s, "seed={}", self.seed).unwrap();
        writeln!(s, "out_dir={}", self.out_dir.display()).unwrap();
        writeln!(s, "sigmas={}", floats(&self.sigmas)).unwrap();
        writeln!(s, "instances={}", self.instances).unwrap();
        writeln!(s, "rounds={}", self.rounds).unwrap();
        writeln!(s, "iters={}", self.iters).unwrap();
        writeln!(s, "record_every={}", self.record_every).unwrap();
        writeln!(s, "checks={}", self.checks).unwrap();
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", k + 1)))?;
            pairs.push((k + 1, key.trim(), value.trim()));
        }
        let id = pairs
            .iter()
            .find(|p| p.1 == "experiment")
            .ok_or_else(|| Error::Config("missing `experiment`".into()))?;
        let experiment = ExperimentId::parse(id.2)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{}`", id.2)))?;
        let mut c = Self::defaults(experiment);
        let mut seen = std::collections::HashSet::new();
        for (line, key, value) in pairs {
            if !seen.insert(key) {
                return Err(Error::Config(format!("line {line}: duplicate key `{key}`")));
            }
            let bad = |e: String| Error::Config(format!("line {line}: {key}: {e}"));
            match key {
                "experiment" => {}
                "clique_sizes" => c.clique_sizes = parse_list(value).map_err(bad)?,
                "clique_counts" => c.clique_counts = parse_list(value).map_err(bad)?,
                "node_counts" => c.node_counts = parse_list(value).map_err(bad)?,
                "eps" => c.eps = parse_list(value).map_err(bad)?,
                "trials" => c.trials = parse_one(value).map_err(bad)?,
                "seed" => c.seed = parse_one(value).map_err(bad)?,
                "out_dir" => c.out_dir = PathBuf::from(value),
                "sigmas" => c.sigmas = parse_list(value).map_err(bad)?,
                "instances" => c.instances = parse_one(value).map_err(bad)?,
                "rounds" => c.rounds = parse_one(value).map_err(bad)?,
                "iters" => c.iters = parse_one(value).map_err(bad)?,
                "record_every" => c.record_every = parse_one(value).map_err(bad)?,
                "checks" => c.checks = parse_one(value).map_err(bad)?,
                other => return Err(Error::Config(format!("line {line}: unknown key `{other}`"))),
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Checks every parameter the experiment will touch.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(format!("{}: {m}", self.experiment.name())));
        let nonempty = |name: &str, len: usize| {
            if len == 0 {
                fail(format!("`{name}` must not be empty"))
            } else {
                Ok(())
            }
        };
        if self.out_dir.as_os_str().is_empty() {
            return fail("`out_dir` must not be empty".into());
        }
        if let Some(&e) = self.eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return fail(format!("eps {e} outside (0, 1)"));
        }
        if self.clique_sizes.iter().any(|&s| s < 2) {
            return fail("clique sizes must be at least 2".into());
        }
        match self.experiment {
            ExperimentId::Result1CBarbell => {
                nonempty("clique_sizes", self.clique_sizes.len())?;
                nonempty("clique_counts", self.clique_counts.len())?;
                if self.clique_counts.iter().any(|&c| c < 2) {
                    return fail("clique counts must be at least 2".into());
                }
                for &s in &self.clique_sizes {
                    for &c in &self.clique_counts {
                        if s * c > BRUTEFORCE_MAX_NODES {
                            return fail(format!(
                                "c-barbell {s}x{c} has {} nodes; brute force allows {BRUTEFORCE_MAX_NODES}",
                                s * c
                            ));
                        }
                    }
                }
            }
            ExperimentId::Result2Barbell => {
                nonempty("clique_sizes", self.clique_sizes.len())?;
                nonempty("eps", self.eps.len())?;
                if self.trials < 100 {
                    return fail(format!("trials = {} (need at least 100)", self.trials));
                }
            }
            ExperimentId::Result3Bounds => {
                nonempty("node_counts", self.node_counts.len())?;
                if self.node_counts.iter().any(|&n| !(4..=2000).contains(&n)) {
                    return fail("node counts must lie in 4..=2000".into());
                }
                if self.instances == 0 {
                    return fail("instances must be positive".into());
                }
            }
            ExperimentId::DrkConvergence => {
                nonempty("clique_sizes", self.clique_sizes.len())?;
                if self.node_counts.iter().any(|&n| n < 4) {
                    return fail("node counts must be at least 4".into());
                }
                if self.instances == 0 || self.iters == 0 || self.record_every == 0 {
                    return fail("instances, iters and record_every must be positive".into());
                }
            }
            ExperimentId::FmmcVsEr => {
                nonempty("clique_sizes", self.clique_sizes.len())?;
                if self.iters == 0 || self.record_every == 0 {
                    return fail("iters and record_every must be positive".into());
                }
            }
            ExperimentId::ExtraComparison => {
                nonempty("clique_sizes", self.clique_sizes.len())?;
                nonempty("sigmas", self.sigmas.len())?;
                if let Some(s) = self.sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
                    return fail(format!("sigma {s} must be positive"));
                }
                if self.instances == 0 || self.rounds == 0 || self.record_every == 0 {
                    return fail("instances, rounds and record_every must be positive".into());
                }
            }
        }
        Ok(())
    }
}

fn parse_one<T: FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| format!("`{s}`: {e}"))
}

fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(',').map(|x| parse_one(x.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        for id in ExperimentId::ALL {
            let c = ExperimentConfig::defaults(id);
            c.validate().unwrap();
            assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        }
    }

    #[test]
    fn odd_floats_round_trip() {
        let mut c = ExperimentConfig::defaults(ExperimentId::Result2Barbell);
        c.eps = vec![0.1 + 0.2, 1e-7, 0.01];
        c.seed = u64::MAX;
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn partial_text_takes_defaults() {
        let c = ExperimentConfig::parse("# x\nexperiment=result1_cbarbell\nclique_sizes=3, 4\n").unwrap();
        assert_eq!(c.clique_sizes, vec![3, 4]);
        assert_eq!(c.clique_counts, vec![2, 3, 4]);
    }

    #[test]
    fn validation_errors() {
        let e = ExperimentConfig::parse("experiment=result2_barbell\nclique_sizes=\n").unwrap();
        assert!(e.validate().is_err());
        let e = ExperimentConfig::parse("experiment=result1_cbarbell\nclique_sizes=6\nclique_counts=4\n").unwrap();
        assert!(e.validate().is_err());
        assert!(ExperimentConfig::parse("experiment=nope\n").is_err());
        assert!(ExperimentConfig::parse("clique_sizes=3\n").is_err());
        assert!(ExperimentConfig::parse("experiment=fmmc_vs_er\nbogus=1\n").is_err());
        assert!(ExperimentConfig::parse("experiment=fmmc_vs_er\niters=x\n").is_err());
        assert!(ExperimentConfig::parse("experiment=fmmc_vs_er\niters=1\niters=2\n").is_err());
    }
}
