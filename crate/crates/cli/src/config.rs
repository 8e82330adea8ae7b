//! Flat key=value experiment configuration with lossless round-tripping.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("invalid value for `{key}`: {reason}")]
    BadValue { key: &'static str, reason: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("config is empty")]
    Empty,
}

/// One experiment: a landscape, an initial point, a step-decay schedule, and
/// recording flags.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub landscape: String,
    pub x0: Vec<f64>,
    /// `(start_step, rate)` pairs, first at step 0.
    pub schedule: Vec<(usize, f64)>,
    pub steps: usize,
    pub record_sharpness: bool,
    pub quasistatic_compare: bool,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(landscape: &str, x0: Vec<f64>, schedule: Vec<(usize, f64)>, steps: usize) -> Self {
        Self {
            landscape: landscape.to_string(),
            x0,
            schedule,
            steps,
            record_sharpness: false,
            quasistatic_compare: false,
            out_dir: None,
            seed: 0,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut landscape = None;
        let mut x0 = None;
        let mut schedule = None;
        let mut steps = None;
        let mut record_sharpness = false;
        let mut quasistatic_compare = false;
        let mut out_dir = None;
        let mut seed = 0u64;
        let mut seen = BTreeSet::new();
        let mut any = false;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            any = true;
            let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                text: trimmed.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
            }
            match key {
                "landscape" => landscape = Some(value.to_string()),
                "x0" => x0 = Some(parse_vec(value).map_err(|reason| ConfigError::BadValue { key: "x0", reason })?),
                "schedule" => {
                    schedule = Some(parse_schedule(value).map_err(|reason| ConfigError::BadValue {
                        key: "schedule",
                        reason,
                    })?)
                }
                "steps" => {
                    steps = Some(value.parse::<usize>().map_err(|e| ConfigError::BadValue {
                        key: "steps",
                        reason: e.to_string(),
                    })?)
                }
                "record_sharpness" => {
                    record_sharpness = parse_bool(value).map_err(|reason| ConfigError::BadValue {
                        key: "record_sharpness",
                        reason,
                    })?
                }
                "quasistatic_compare" => {
                    quasistatic_compare = parse_bool(value).map_err(|reason| ConfigError::BadValue {
                        key: "quasistatic_compare",
                        reason,
                    })?
                }
                "out_dir" => out_dir = Some(PathBuf::from(value)),
                "seed" => {
                    seed = value.parse::<u64>().map_err(|e| ConfigError::BadValue {
                        key: "seed",
                        reason: e.to_string(),
                    })?
                }
                other => {
                    return Err(ConfigError::UnknownKey { line, key: other.to_string() });
                }
            }
        }
        if !any {
            return Err(ConfigError::Empty);
        }
        Ok(Self {
            landscape: landscape.ok_or(ConfigError::Missing("landscape"))?,
            x0: x0.ok_or(ConfigError::Missing("x0"))?,
            schedule: schedule.ok_or(ConfigError::Missing("schedule"))?,
            steps: steps.ok_or(ConfigError::Missing("steps"))?,
            record_sharpness,
            quasistatic_compare,
            out_dir,
            seed,
        })
    }

    /// Serialize back to the key=value format; `parse` of the output yields
    /// an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("landscape={}\n", self.landscape));
        let x0: Vec<String> = self.x0.iter().map(|v| format_f64(*v)).collect();
        out.push_str(&format!("x0={}\n", x0.join(",")));
        let sched: Vec<String> = self
            .schedule
            .iter()
            .map(|(s, r)| format!("{s}:{}", format_f64(*r)))
            .collect();
        out.push_str(&format!("schedule={}\n", sched.join(",")));
        out.push_str(&format!("steps={}\n", self.steps));
        out.push_str(&format!("record_sharpness={}\n", self.record_sharpness));
        out.push_str(&format!("quasistatic_compare={}\n", self.quasistatic_compare));
        if let Some(dir) = &self.out_dir {
            out.push_str(&format!("out_dir={}\n", dir.display()));
        }
        out.push_str(&format!("seed={}\n", self.seed));
        out
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

fn format_f64(v: f64) -> String {
    // shortest representation that parses back exactly
    let s = format!("{v}");
    debug_assert_eq!(s.parse::<f64>().unwrap(), v);
    s
}

fn parse_vec(value: &str) -> Result<Vec<f64>, String> {
    value
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected true or false, got `{other}`")),
    }
}

/// `start:rate[,start:rate...]`, e.g. `0:5,100:3,150:1`.
pub fn parse_schedule(value: &str) -> Result<Vec<(usize, f64)>, String> {
    value
        .split(',')
        .map(|seg| {
            let (s, r) = seg
                .split_once(':')
                .ok_or_else(|| format!("`{seg}`: expected start:rate"))?;
            let start = s.trim().parse::<usize>().map_err(|e| format!("`{s}`: {e}"))?;
            let rate = r.trim().parse::<f64>().map_err(|e| format!("`{r}`: {e}"))?;
            Ok((start, rate))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "landscape=f1\nx0=-5\nschedule=0:5,100:3,150:1\nsteps=300\nseed=7\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.landscape, "f1");
        assert_eq!(cfg.x0, vec![-5.0]);
        assert_eq!(cfg.schedule, vec![(0, 5.0), (100, 3.0), (150, 1.0)]);
        assert_eq!(cfg.steps, 300);
        assert_eq!(cfg.seed, 7);
        let reparsed = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(cfg, reparsed);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let r = ExperimentConfig::parse("landscape=f1\nbogus=1\n");
        assert!(matches!(r, Err(ConfigError::UnknownKey { .. })));
        let r = ExperimentConfig::parse("landscape=f1\nlandscape=f3\n");
        assert!(matches!(r, Err(ConfigError::DuplicateKey { .. })));
    }

    #[test]
    fn empty_config_is_an_error() {
        assert!(matches!(ExperimentConfig::parse(""), Err(ConfigError::Empty)));
        assert!(matches!(
            ExperimentConfig::parse("# only comments\n"),
            Err(ConfigError::Empty)
        ));
    }

    #[test]
    fn missing_required_key() {
        let r = ExperimentConfig::parse("landscape=f1\nx0=1\nschedule=0:1\n");
        assert!(matches!(r, Err(ConfigError::Missing("steps"))));
    }

    #[test]
    fn fractional_rates_round_trip() {
        let cfg = ExperimentConfig::new("f2:C=3", vec![-5.0], vec![(0, 2.0), (500, 0.5)], 1000);
        let text = cfg.to_text();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
    }
}
