//! Run configuration: a TOML file layered under command-line overrides.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rfim_core::disorder::DEFAULT_GAMMA;
use rfim_core::experiments::{
    ExperimentKind, ExperimentParams, ScaleMode, DEFAULT_ALPHA, DEFAULT_ALPHA_PRIME, DEFAULT_ASPECT,
    DEFAULT_FACTOR, DEFAULT_SHIFT_MAX,
};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{HarnessError, Result};

pub const SEED_ENV: &str = "RFIM_LAB_SEED";
pub const DEFAULT_SEED: u64 = 0x00C0_FFEE;
pub const DEFAULT_SAMPLES: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    #[serde(rename = "N")]
    pub n: Vec<u32>,
    pub eps: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(with = "seed_repr")]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Defaults to `results/<experiment>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub diagnostic: bool,
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default)]
    pub geometry: Geometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Perturbation {
    pub gamma: f64,
    pub scale_mode: ScaleMode,
    pub alpha: f64,
    pub alpha_prime: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub shift_max: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            scale_mode: ScaleMode::Linear,
            alpha: DEFAULT_ALPHA,
            alpha_prime: DEFAULT_ALPHA_PRIME,
            delta: None,
            shift_max: DEFAULT_SHIFT_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Geometry {
    pub aspect: u32,
    pub factor: u32,
    pub n_prime: u32,
}

impl Default for Geometry {
    fn default() -> Self {
        Self { aspect: DEFAULT_ASPECT, factor: DEFAULT_FACTOR, n_prime: 2 }
    }
}

fn default_samples() -> u64 {
    DEFAULT_SAMPLES
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => s.replace('_', "").parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

/// TOML integers are signed, so seeds above `i64::MAX` round-trip as hex strings.
mod seed_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&format!("{seed:#x}")),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Int(v) => u64::try_from(v).map_err(|_| de::Error::custom(format!("negative seed {v}"))),
            Raw::Str(s) => super::parse_seed(&s).map_err(de::Error::custom),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub eps: Option<Vec<f64>>,
    pub n: Option<Vec<u32>>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub diagnostic: bool,
    pub timing: bool,
    pub gamma: Option<f64>,
    pub scale_mode: Option<ScaleMode>,
    pub alpha: Option<f64>,
    pub alpha_prime: Option<f64>,
    pub delta: Option<f64>,
    pub shift_max: Option<f64>,
    pub aspect: Option<u32>,
    pub factor: Option<u32>,
    pub n_prime: Option<u32>,
}

fn section<'a>(table: &'a mut Table, name: &str) -> Result<&'a mut Table> {
    table
        .entry(name)
        .or_insert_with(|| Value::Table(Table::new()))
        .as_table_mut()
        .ok_or_else(|| HarnessError::Validation(format!("[{name}] must be a table")))
}

impl Overrides {
    fn apply(&self, table: &mut Table) -> Result<()> {
        let set = |t: &mut Table, key: &str, v: Option<Value>| {
            if let Some(v) = v {
                t.insert(key.to_owned(), v);
            }
        };
        let int = |x: u64| i64::try_from(x).map(Value::Integer).unwrap_or_else(|_| Value::String(format!("{x:#x}")));
        set(table, "seed", self.seed.map(int));
        set(table, "samples", self.samples.map(int));
        set(table, "eps", self.eps.as_ref().map(|e| Value::Array(e.iter().map(|&x| Value::Float(x)).collect())));
        set(table, "N", self.n.as_ref().map(|n| Value::Array(n.iter().map(|&x| Value::Integer(x.into())).collect())));
        set(table, "workers", self.workers.map(|w| int(w as u64)));
        set(table, "out", self.out.as_ref().map(|p| Value::String(p.display().to_string())));
        set(table, "diagnostic", self.diagnostic.then_some(Value::Boolean(true)));
        set(table, "timing", self.timing.then_some(Value::Boolean(true)));

        let mode = self.scale_mode.map(|m| {
            Value::String(match m {
                ScaleMode::Linear => "linear".into(),
                ScaleMode::Polynomial => "polynomial".into(),
            })
        });
        let p = section(table, "perturbation")?;
        set(p, "gamma", self.gamma.map(Value::Float));
        set(p, "scale_mode", mode);
        set(p, "alpha", self.alpha.map(Value::Float));
        set(p, "alpha_prime", self.alpha_prime.map(Value::Float));
        set(p, "delta", self.delta.map(Value::Float));
        set(p, "shift_max", self.shift_max.map(Value::Float));
        let g = section(table, "geometry")?;
        set(g, "aspect", self.aspect.map(|x| Value::Integer(x.into())));
        set(g, "factor", self.factor.map(|x| Value::Integer(x.into())));
        set(g, "n_prime", self.n_prime.map(|x| Value::Integer(x.into())));
        Ok(())
    }
}

impl RunConfig {
    /// Layer `overrides` over the file (if any), fill the seed from `env_seed`
    /// or the built-in default, and validate.
    pub fn resolve(
        kind: ExperimentKind,
        file: Option<&Path>,
        overrides: &Overrides,
        env_seed: Option<&str>,
    ) -> Result<Self> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
                text.parse::<Table>()
                    .map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))?
            }
            None => Table::new(),
        };
        match table.get("experiment") {
            None => {
                table.insert("experiment".into(), Value::String(kind.name().into()));
            }
            Some(Value::String(s)) if s == kind.name() => {}
            Some(other) => {
                return Err(HarnessError::Validation(format!(
                    "config is for experiment {other}, but the {kind} command was given"
                )))
            }
        }
        overrides.apply(&mut table)?;
        if !table.contains_key("seed") {
            let seed = match env_seed {
                Some(s) => parse_seed(s).map_err(|e| HarnessError::Validation(format!("{SEED_ENV}: {e}")))?,
                None => DEFAULT_SEED,
            };
            table.insert("seed".into(), Value::String(format!("{seed:#x}")));
        }
        let config: RunConfig =
            Table::try_into(table).map_err(|e| HarnessError::Validation(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(HarnessError::Validation("at least one epsilon is required".into()));
        }
        let mut seen = HashSet::new();
        if let Some(e) = self.eps.iter().find(|e| !seen.insert(e.to_bits())) {
            return Err(HarnessError::Validation(format!("epsilon {e} is listed twice")));
        }
        if self.workers == 0 {
            return Err(HarnessError::Validation("workers must be at least 1".into()));
        }
        for &eps in &self.eps {
            self.params(eps).validate().map_err(|e| HarnessError::Validation(e.to_string()))?;
        }
        Ok(())
    }

    pub fn params(&self, epsilon: f64) -> ExperimentParams {
        let mut p = ExperimentParams::new(self.experiment, self.n.clone(), epsilon, self.samples, self.seed);
        let (pt, g) = (&self.perturbation, &self.geometry);
        p.gamma = pt.gamma;
        p.scale_mode = pt.scale_mode;
        p.alpha = pt.alpha;
        p.alpha_prime = pt.alpha_prime;
        p.delta = pt.delta;
        p.shift_max = pt.shift_max;
        p.aspect = g.aspect;
        p.factor = g.factor;
        p.n_prime = g.n_prime;
        p.diagnostic = self.diagnostic;
        p.timing = self.timing;
        p
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| Path::new("results").join(self.experiment.name()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        let config: RunConfig =
            toml::from_str(&text).map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overrides(n: &[u32], eps: &[f64]) -> Overrides {
        Overrides { n: Some(n.to_vec()), eps: Some(eps.to_vec()), ..Default::default() }
    }

    #[test]
    fn seed_formats() {
        assert_eq!(parse_seed("0x00C0FFEE"), Ok(0xC0FFEE));
        assert_eq!(parse_seed("12"), Ok(12));
        assert!(parse_seed("-1").is_err());
    }

    #[test]
    fn flags_override_the_file_and_env_fills_the_seed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "N = [0]\neps = [4.0]\nsamples = 200\n[perturbation]\ndelta = 0.5\n").unwrap();
        let o = Overrides { samples: Some(300), ..Default::default() };
        let c = RunConfig::resolve(ExperimentKind::Mn, Some(&path), &o, Some("0x10")).unwrap();
        assert_eq!((c.samples, c.seed, c.n.clone()), (300, 16, vec![0]));
        assert_eq!(c.perturbation.delta, Some(0.5));
        assert_eq!(c.out_dir(), Path::new("results/mn"));

        let seeded = Overrides { seed: Some(7), ..o };
        assert_eq!(RunConfig::resolve(ExperimentKind::Mn, Some(&path), &seeded, Some("0x10")).unwrap().seed, 7);
        let none = RunConfig::resolve(ExperimentKind::Mn, None, &overrides(&[0], &[1.0]), None).unwrap();
        assert_eq!(none.seed, DEFAULT_SEED);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::resolve(ExperimentKind::Perturb, None, &overrides(&[16, 32], &[0.5, 1.0]), None).unwrap();
        c.seed = u64::MAX;
        c.perturbation.delta = Some(0.125);
        let text = c.to_toml();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), c);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let kind = ExperimentKind::Mn;
        let zero = Overrides { samples: Some(0), ..overrides(&[0], &[1.0]) };
        assert!(matches!(RunConfig::resolve(kind, None, &zero, None), Err(HarnessError::Validation(_))));
        let twice = overrides(&[0], &[1.0, 1.0]);
        assert!(RunConfig::resolve(kind, None, &twice, None).is_err());
        assert!(RunConfig::resolve(kind, None, &overrides(&[0], &[]), None).is_err());
        assert!(RunConfig::resolve(kind, None, &overrides(&[0], &[1.0]), Some("nope")).is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "experiment = \"star\"\nN = [8]\neps = [1.0]\n").unwrap();
        assert!(RunConfig::resolve(kind, Some(&path), &Overrides::default(), None).is_err());
        std::fs::write(&path, "N = [8]\neps = [1.0]\ncolour = 3\n").unwrap();
        assert!(RunConfig::resolve(ExperimentKind::Star, Some(&path), &Overrides::default(), None).is_err());
    }
}
