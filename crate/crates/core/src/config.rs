//! TOML experiment configuration.
//!
//! ```toml
//! [system]
//! kind = "angelesco"            # angelesco | jacobi-pineiro | nikishin | single-with-atom | legendre
//! intervals = ["-1,0", "0,1"]   # angelesco supports, nikishin generator supports
//! alphas = ["0", "1/2"]         # jacobi-pineiro exponents at 0
//! beta = "0"                    # jacobi-pineiro exponent at 1
//! interval = "-1,1"             # single-with-atom continuous part
//! atoms = [{ at = "2", mass = "1/2" }]
//! reference = "sum"             # sum | first
//!
//! [path]
//! kind = "stepline"             # stepline | direction | steps
//! direction = ["1/2", "1/2"]
//! steps = [1, 2, 1]             # 1-based component numbers
//!
//! [run]
//! precision = 256
//! seed = 7
//! exact = false
//! threads = 0                   # 0 = all cores
//! ```

use std::path::Path as FsPath;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{Interval, MeasureSystem, ReferenceRule, WeightComponent};
use crate::paths::Path;
use crate::scalar::parse_ratio;

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub path: PathConfig,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub kind: String,
    #[serde(default)]
    pub intervals: Vec<String>,
    #[serde(default)]
    pub alphas: Vec<String>,
    pub beta: Option<String>,
    pub interval: Option<String>,
    #[serde(default)]
    pub atoms: Vec<AtomConfig>,
    pub reference: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub at: String,
    pub mass: String,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    #[serde(default = "default_path_kind")]
    pub kind: String,
    #[serde(default)]
    pub direction: Vec<String>,
    #[serde(default)]
    pub steps: Vec<usize>,
}

fn default_path_kind() -> String {
    "stepline".into()
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig { kind: default_path_kind(), direction: Vec::new(), steps: Vec::new() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_precision")]
    pub precision: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exact: bool,
    #[serde(default)]
    pub threads: usize,
}

fn default_precision() -> u32 {
    crate::scalar::DEFAULT_PRECISION_BITS
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { precision: default_precision(), seed: 0, exact: false, threads: 0 }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Builds everything once so that invalid input fails before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.run.precision < 24 {
            return Err(Error::Config(format!("precision {} is below 24 bits", self.run.precision)));
        }
        let sys = self.system.build()?;
        self.path.build(sys.r(), 0)?;
        Ok(())
    }

    pub fn build_system(&self) -> Result<MeasureSystem> {
        self.system.build()
    }

    pub fn build_path(&self, r: usize, len: usize) -> Result<Path> {
        self.path.build(r, len)
    }
}

fn intervals(texts: &[String]) -> Result<Vec<Interval>> {
    texts.iter().map(|t| Interval::parse(t)).collect()
}

fn ratios(texts: &[String]) -> Result<Vec<BigRational>> {
    texts.iter().map(|t| parse_ratio(t.trim())).collect()
}

impl SystemConfig {
    pub fn build(&self) -> Result<MeasureSystem> {
        let reference = match self.reference.as_deref() {
            None | Some("sum") => ReferenceRule::SumOfComponents,
            Some("first") => ReferenceRule::FirstComponent,
            Some(other) => return Err(Error::Config(format!("unknown reference rule '{other}' (sum | first)"))),
        };
        match self.kind.as_str() {
            "angelesco" => {
                let ivs = intervals(&self.intervals)?;
                if ivs.is_empty() {
                    return Err(Error::Config("angelesco needs at least one interval".into()));
                }
                MeasureSystem::angelesco(ivs)?.with_reference(reference)
            }
            "jacobi-pineiro" => {
                let alphas = ratios(&self.alphas)?;
                if alphas.is_empty() {
                    return Err(Error::Config("jacobi-pineiro needs alphas".into()));
                }
                let beta = parse_ratio(self.beta.as_deref().unwrap_or("0"))?;
                MeasureSystem::jacobi_pineiro(&alphas, &beta, reference)
            }
            "nikishin" => {
                let ivs = intervals(&self.intervals)?;
                if ivs.is_empty() {
                    return Err(Error::Config("nikishin needs generator intervals".into()));
                }
                MeasureSystem::nikishin(ivs.into_iter().map(WeightComponent::lebesgue).collect())?.with_reference(reference)
            }
            "single-with-atom" | "legendre" | "single" => {
                let iv = match &self.interval {
                    Some(t) => Interval::parse(t)?,
                    None if self.kind == "legendre" => Interval::from_ints(-1, 1)?,
                    None => return Err(Error::Config(format!("{} needs an interval", self.kind))),
                };
                let mut c = WeightComponent::lebesgue(iv);
                for a in &self.atoms {
                    let mass = parse_ratio(&a.mass)?;
                    if mass <= BigRational::from_integer(0.into()) {
                        return Err(Error::Config(format!("atom mass {mass} must be positive")));
                    }
                    c = c.with_atom(parse_ratio(&a.at)?, mass);
                }
                MeasureSystem::single(c)
            }
            other => Err(Error::Config(format!(
                "unknown system kind '{other}' (angelesco | jacobi-pineiro | nikishin | single-with-atom | legendre)"
            ))),
        }
    }
}

impl PathConfig {
    pub fn build(&self, r: usize, len: usize) -> Result<Path> {
        match self.kind.as_str() {
            "stepline" => Ok(Path::stepline(r, len)),
            "direction" => {
                let s = ratios(&self.direction)?;
                if s.len() != r {
                    return Err(Error::Config(format!("direction has {} entries for r = {r}", s.len())));
                }
                Path::direction(&s, len)
            }
            "steps" => {
                if self.steps.iter().any(|&s| s == 0 || s > r) {
                    return Err(Error::Config(format!("steps must be component numbers 1..={r}")));
                }
                if len > self.steps.len() {
                    return Err(Error::Config(format!("path needs {len} steps, config lists {}", self.steps.len())));
                }
                Path::from_steps(r, self.steps[..len].iter().map(|s| s - 1).collect())
            }
            other => Err(Error::Config(format!("unknown path kind '{other}' (stepline | direction | steps)"))),
        }
    }
}
