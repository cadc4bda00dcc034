//! Experiment configuration: a TOML key set mirroring the CLI flags.
//! Unknown keys are hard errors, and parse-then-print round-trips.

use serde::{Deserialize, Serialize};

use jigsaw::engine::{DynamicsParams, MergeRule, Theta};
use jigsaw::topology::Topology;

/// Critical-probability search block.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PcBlock {
    pub tol: f64,
    pub trials_per_level: u32,
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
}

/// The full configuration; every field has a matching CLI flag and flags
/// override file values.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<u32>,
    /// Integer or the string "inf".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,
    /// "threshold" or "basic".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Sweep grid "start:stop:step".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pc: Option<PcBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<u32>,
    /// Growth box side for the `grow` subcommand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r#box: Option<u32>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// File values overlaid with flag values; flags win.
    pub fn merged_with(&self, overrides: &ExperimentConfig) -> ExperimentConfig {
        macro_rules! pick {
            ($field:ident) => {
                overrides.$field.clone().or_else(|| self.$field.clone())
            };
        }
        ExperimentConfig {
            topology: pick!(topology),
            sigma: pick!(sigma),
            tau: pick!(tau),
            theta: pick!(theta),
            rule: pick!(rule),
            p: pick!(p),
            p_grid: pick!(p_grid),
            pc: pick!(pc),
            trials: pick!(trials),
            seed: pick!(seed),
            parallelism: pick!(parallelism),
            out: pick!(out),
            snapshot_every: pick!(snapshot_every),
            r#box: pick!(r#box),
        }
    }
}

/// Seeds parse as decimal or `0x` hex.
pub fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).map_err(|e| format!("bad hex seed '{s}': {e}"))
    } else {
        s.parse().map_err(|e| format!("bad seed '{s}': {e}"))
    }
}

pub fn parse_theta(s: &str) -> Result<Theta, String> {
    if s.trim().eq_ignore_ascii_case("inf") {
        Ok(Theta::Infinite)
    } else {
        s.trim()
            .parse::<u32>()
            .map(Theta::Finite)
            .map_err(|e| format!("theta must be an integer or 'inf': {e}"))
    }
}

pub fn parse_rule(s: &str) -> Result<MergeRule, String> {
    match s.trim() {
        "threshold" => Ok(MergeRule::Threshold),
        "basic" => Ok(MergeRule::Basic),
        other => Err(format!("rule must be 'threshold' or 'basic', got '{other}'")),
    }
}

/// Grid spec "start:stop:step", inclusive of the stop within half a step.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid '{s}' must be start:stop:step"));
    }
    let start: f64 = parts[0].trim().parse().map_err(|e| format!("bad grid start: {e}"))?;
    let stop: f64 = parts[1].trim().parse().map_err(|e| format!("bad grid stop: {e}"))?;
    let step: f64 = parts[2].trim().parse().map_err(|e| format!("bad grid step: {e}"))?;
    if !(step > 0.0) || stop < start {
        return Err(format!("grid '{s}' must have positive step and stop >= start"));
    }
    let mut grid = Vec::new();
    let mut i = 0u32;
    loop {
        let p = start + step * i as f64;
        if p > stop + step * 0.5 {
            break;
        }
        grid.push(p.min(1.0));
        i += 1;
    }
    if grid.is_empty() {
        return Err(format!("grid '{s}' is empty"));
    }
    Ok(grid)
}

/// Resolved, validated experiment inputs.
pub struct Resolved {
    pub topology: Topology,
    pub params: DynamicsParams,
    pub seed: u64,
    pub trials: u32,
    pub parallelism: usize,
}

impl ExperimentConfig {
    /// Applies defaults and validates the simulation-facing fields.
    /// `JIGSAW_THREADS` supplies the parallelism default.
    pub fn resolve(&self) -> Result<Resolved, String> {
        let topo_spec = self.topology.as_deref().ok_or("missing topology")?;
        let topology: Topology = topo_spec.parse().map_err(|e| format!("{e}"))?;
        let sigma = self.sigma.unwrap_or(1);
        let tau = self.tau.unwrap_or(1);
        let theta = parse_theta(self.theta.as_deref().unwrap_or("inf"))?;
        let rule = parse_rule(self.rule.as_deref().unwrap_or("threshold"))?;
        let params = DynamicsParams::new(sigma, tau, theta, rule).map_err(|e| format!("{e}"))?;
        let seed = parse_seed(self.seed.as_deref().unwrap_or("0"))?;
        let parallelism = match self.parallelism {
            Some(p) => p,
            None => std::env::var("JIGSAW_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(0),
        };
        Ok(Resolved {
            topology,
            params,
            seed,
            trials: self.trials.unwrap_or(100),
            parallelism,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig {
            topology: Some("ring:n=1024".into()),
            sigma: Some(2),
            tau: Some(1),
            theta: Some("inf".into()),
            rule: Some("threshold".into()),
            p: Some(0.2),
            trials: Some(100),
            seed: Some("7".into()),
            ..Default::default()
        };
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(ExperimentConfig::from_toml("topology = \"ring:n=8\"\nbogus = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("[pc]\ntol = 0.1\ntrials_per_level = 10\nzzz = 1\n")
            .is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let file = ExperimentConfig {
            topology: Some("ring:n=8".into()),
            p: Some(0.1),
            trials: Some(50),
            ..Default::default()
        };
        let flags = ExperimentConfig {
            p: Some(0.3),
            ..Default::default()
        };
        let eff = file.merged_with(&flags);
        assert_eq!(eff.p, Some(0.3));
        assert_eq!(eff.trials, Some(50));
        assert_eq!(eff.topology.as_deref(), Some("ring:n=8"));
    }

    #[test]
    fn seed_and_theta_and_grid_parsers() {
        assert_eq!(parse_seed("123").unwrap(), 123);
        assert_eq!(parse_seed("0xff").unwrap(), 255);
        assert!(parse_seed("nope").is_err());
        assert_eq!(parse_theta("inf").unwrap(), Theta::Infinite);
        assert_eq!(parse_theta("3").unwrap(), Theta::Finite(3));
        let g = parse_grid("0.1:0.3:0.1").unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[2] - 0.3).abs() < 1e-12);
        assert!(parse_grid("0.5:0.1:0.1").is_err());
        assert!(parse_grid("1:2").is_err());
    }
}
