use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use mopkit::config::{AtomConfig, ExperimentConfig, PathConfig, SystemConfig};
use mopkit::scalar::set_precision_bits;
use mopkit::{MeasureSystem, Mop, PathFamily, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Legendre,
    Angelesco,
    JacobiPineiro,
    Nikishin,
    SingleWithAtom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Reference {
    Sum,
    First,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PathKind {
    Stepline,
    Direction,
}

/// System, path and run options shared by the polynomial subcommands.
#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    /// TOML experiment file. Replaces the preset flags.
    #[arg(long, value_name = "FILE")]
    pub system: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "legendre")]
    pub preset: Preset,
    /// Intervals separated by ';', e.g. "-1,0;0,1".
    #[arg(long, allow_hyphen_values = true)]
    pub intervals: Option<String>,
    /// Jacobi-Pineiro exponents at 0.
    #[arg(long, default_value = "0,1/2")]
    pub alphas: String,
    /// Jacobi-Pineiro exponent at 1.
    #[arg(long, default_value = "0")]
    pub beta: String,
    /// Atoms as "at:mass" pairs separated by ';'.
    #[arg(long, allow_hyphen_values = true)]
    pub atoms: Option<String>,
    #[arg(long, value_enum)]
    pub reference: Option<Reference>,
    #[arg(long, value_enum)]
    pub path: Option<PathKind>,
    /// Direction for `--path direction`, e.g. "2/3,1/3".
    #[arg(long)]
    pub direction: Option<String>,
    /// Exact rational arithmetic instead of binary floats.
    #[arg(long)]
    pub exact: bool,
    /// Float precision in bits.
    #[arg(long, env = "MOPKIT_PRECISION_BITS")]
    pub precision: Option<u32>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Significant digits in decimal output.
    #[arg(long, default_value_t = 30)]
    pub digits: usize,
}

pub struct Setup {
    pub config: ExperimentConfig,
    pub system: MeasureSystem,
    pub digits: usize,
}

fn split(text: &str, sep: char) -> Vec<String> {
    text.split(sep).map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

impl SystemArgs {
    fn preset_config(&self) -> Result<ExperimentConfig> {
        let (kind, default_intervals) = match self.preset {
            Preset::Legendre => ("legendre", None),
            Preset::Angelesco => ("angelesco", Some("-1,0;0,1")),
            Preset::JacobiPineiro => ("jacobi-pineiro", None),
            Preset::Nikishin => ("nikishin", Some("0,1;-2,-1")),
            Preset::SingleWithAtom => ("single-with-atom", Some("-1,1")),
        };
        let intervals = self.intervals.as_deref().or(default_intervals).map(|t| split(t, ';')).unwrap_or_default();
        let mut system = SystemConfig {
            kind: kind.into(),
            reference: self.reference.map(|r| match r {
                Reference::Sum => "sum".into(),
                Reference::First => "first".into(),
            }),
            ..SystemConfig::default()
        };
        match self.preset {
            Preset::Legendre | Preset::SingleWithAtom => system.interval = intervals.first().cloned(),
            Preset::Angelesco | Preset::Nikishin => system.intervals = intervals,
            Preset::JacobiPineiro => {
                system.alphas = split(&self.alphas, ',');
                system.beta = Some(self.beta.clone());
            }
        }
        if let Some(atoms) = &self.atoms {
            for pair in split(atoms, ';') {
                let (at, mass) = pair.split_once(':').with_context(|| format!("atom '{pair}' is not of the form at:mass"))?;
                system.atoms.push(AtomConfig { at: at.trim().into(), mass: mass.trim().into() });
            }
        }
        Ok(ExperimentConfig { system, ..ExperimentConfig::default() })
    }

    /// Validates everything and applies precision and thread settings.
    pub fn resolve(&self) -> Result<Setup> {
        let mut config = match &self.system {
            Some(file) => ExperimentConfig::load(file)?,
            None => self.preset_config()?,
        };
        if let Some(kind) = self.path {
            config.path = PathConfig {
                kind: match kind {
                    PathKind::Stepline => "stepline".into(),
                    PathKind::Direction => "direction".into(),
                },
                direction: self.direction.as_deref().map(|d| split(d, ',')).unwrap_or_default(),
                steps: Vec::new(),
            };
        }
        if let Some(p) = self.precision {
            config.run.precision = p;
        }
        if let Some(s) = self.seed {
            config.run.seed = s;
        }
        if let Some(t) = self.threads {
            config.run.threads = t;
        }
        config.run.exact |= self.exact;
        config.validate()?;
        set_precision_bits(config.run.precision);
        if config.run.threads > 0 {
            // only the first call in a process can size the global pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(config.run.threads).build_global();
        }
        let system = config.build_system()?;
        Ok(Setup { config, system, digits: self.digits })
    }
}

impl Setup {
    pub fn exact(&self) -> bool {
        self.config.run.exact
    }

    pub fn family<S: Scalar>(&self, size: usize) -> Result<Arc<PathFamily<S>>> {
        let path = self.config.build_path(self.system.r(), size)?;
        let mop = Arc::new(Mop::new(self.system.clone()));
        Ok(Arc::new(PathFamily::build(mop, &path, size)?))
    }

    pub fn mop<S: Scalar>(&self) -> Mop<S> {
        Mop::new(self.system.clone())
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.config.system.kind,
            "r": self.system.r(),
            "reference": self.system.reference().name(),
            "path": self.config.path.kind,
            "exact": self.exact(),
            "precision": self.config.run.precision,
        })
    }
}
