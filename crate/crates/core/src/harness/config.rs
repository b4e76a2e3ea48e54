//! Experiment configuration, read from TOML.
//!
//! ```toml
//! dims = [50, 100, 150]
//! T = 1000
//! seeds = [0, 1, 2]
//! target_precision = 1e-2
//! noise_sigma = 0.2
//! output_dir = "out/table2"
//!
//! [oracle]
//! kind = "smoothing"
//! k = 1
//! epsilon = 1e-2
//!
//! [[solvers]]
//! kind = "oblivious_smd"
//! degree = 1
//!
//! [[solvers]]
//! kind = "levy"
//! hyper_tuned = true
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::OracleSpec;
use crate::parallel::Execution;

use super::reference::MIN_REFERENCE_BUDGET;

pub const TUNE_L: f64 = 50.0;
pub const TUNE_D: f64 = 10.0;
pub const TUNE_LSTAR: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_target")]
    pub target_precision: f64,
    #[serde(default = "default_sigma")]
    pub noise_sigma: f64,
    /// Seed of the generated instance; solver seeds come from `seeds`.
    #[serde(default = "default_instance_seed")]
    pub instance_seed: u64,
    pub output_dir: PathBuf,
    pub oracle: OracleSpec,
    pub solvers: Vec<SolverSpec>,
    /// Divides the supplied `L`, `D` and `L⋆` by 50, 10 and 50.
    #[serde(default)]
    pub hyper_tuned: bool,
    /// Overrides `μ = 1/√T` for the oblivious solvers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default = "default_budget")]
    pub reference_budget: usize,
    #[serde(default)]
    pub execution: Execution,
}

fn default_target() -> f64 {
    1e-2
}
fn default_sigma() -> f64 {
    0.2
}
fn default_instance_seed() -> u64 {
    1
}
fn default_budget() -> usize {
    MIN_REFERENCE_BUDGET
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("dims must be a nonempty list of positive integers".into());
        }
        if self.horizon < 1 {
            return bad("T must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty".into());
        }
        if !(self.target_precision > 0.0) {
            return bad(format!("target_precision must be positive, got {}", self.target_precision));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return bad(format!("noise_sigma must be nonnegative, got {}", self.noise_sigma));
        }
        if self.solvers.is_empty() {
            return bad("at least one solver is required".into());
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0) || !mu.is_finite() {
                return bad(format!("mu must be positive, got {mu}"));
            }
        }
        if self.reference_budget < MIN_REFERENCE_BUDGET {
            return bad(format!("reference_budget must be at least {MIN_REFERENCE_BUDGET}"));
        }
        self.oracle.validate().map_err(|e| Error::Config(e.to_string()))?;
        let mut labels: Vec<String> = self.solvers.iter().map(|s| s.label(self.hyper_tuned)).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("solver `{}` listed twice", w[0]));
        }
        Ok(())
    }

    /// The configuration as `# key = value` lines, for the head of every output file.
    pub fn echo(&self) -> String {
        self.to_toml()
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| format!("# {l}\n"))
            .collect()
    }
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverSpec {
    ObliviousSmd {
        degree: u32,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    ObliviousAcsmd {
        degree: u32,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// `D` and `M` default to the instance's theory values.
    Levy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hyper_tuned: Option<bool>,
        #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
        diameter: Option<f64>,
        #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
        m: Option<f64>,
    },
    Lan {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hyper_tuned: Option<bool>,
        #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
        l: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    Relative {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hyper_tuned: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lstar: Option<f64>,
        #[serde(rename = "Gamma", default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
}

impl SolverSpec {
    /// Per-solver flag, falling back to the experiment-wide one.
    pub fn tuned(&self, global: bool) -> bool {
        match self {
            SolverSpec::Levy { hyper_tuned, .. }
            | SolverSpec::Lan { hyper_tuned, .. }
            | SolverSpec::Relative { hyper_tuned, .. } => hyper_tuned.unwrap_or(global),
            _ => false,
        }
    }

    /// Column label in reports and trace file names.
    pub fn label(&self, global_tuned: bool) -> String {
        let suffix = if self.tuned(global_tuned) { "-tuned" } else { "" };
        match self {
            SolverSpec::ObliviousSmd { degree, .. } => format!("oblivious_smd-{degree}"),
            SolverSpec::ObliviousAcsmd { degree, .. } => format!("oblivious_acsmd-{degree}"),
            SolverSpec::Levy { .. } => format!("levy{suffix}"),
            SolverSpec::Lan { .. } => format!("lan{suffix}"),
            SolverSpec::Relative { .. } => format!("relative{suffix}"),
        }
    }
}

impl fmt::Display for SolverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label(false))
    }
}

/// Short forms used on the command line: `oblivious_smd:2`, `acsmd`,
/// `levy`, `lan-tuned`, `relative`.
impl FromStr for SolverSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let (name, tuned) = match name.strip_suffix("-tuned") {
            Some(base) => (base, Some(true)),
            None => (name, None),
        };
        let degree = || -> Result<u32> {
            arg.map_or(Ok(1), |a| {
                a.parse().map_err(|_| Error::Config(format!("bad degree `{a}` in `{s}`")))
            })
        };
        let no_arg = || match arg {
            Some(a) => Err(Error::Config(format!("solver `{name}` takes no argument, got `{a}`"))),
            None => Ok(()),
        };
        Ok(match (name, tuned) {
            ("oblivious_smd" | "smd", None) => SolverSpec::ObliviousSmd {
                degree: degree()?,
                scale: 1.0,
            },
            ("oblivious_acsmd" | "acsmd", None) => SolverSpec::ObliviousAcsmd {
                degree: degree()?,
                scale: 1.0,
            },
            ("levy", hyper_tuned) => {
                no_arg()?;
                SolverSpec::Levy {
                    hyper_tuned,
                    diameter: None,
                    m: None,
                }
            }
            ("lan", hyper_tuned) => {
                no_arg()?;
                SolverSpec::Lan {
                    hyper_tuned,
                    l: None,
                    sigma: None,
                }
            }
            ("relative", hyper_tuned) => {
                no_arg()?;
                SolverSpec::Relative {
                    hyper_tuned,
                    lstar: None,
                    gamma: None,
                }
            }
            _ => return Err(Error::Config(format!("unknown solver `{s}`"))),
        })
    }
}

/// `smoothing`, `smoothing:k=2,epsilon=0.01`, `power:p=21,square_input=false`, `exact`.
pub fn parse_oracle(s: &str) -> Result<OracleSpec> {
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    let mut kv = Vec::new();
    for part in args.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value in `{part}`")))?;
        kv.push((k.trim(), v.trim()));
    }
    let bad = |k: &str, v: &str| Error::Config(format!("bad value `{v}` for `{k}`"));
    let spec = match name {
        "smoothing" => {
            let (mut k, mut epsilon) = (1usize, 1e-2);
            for (key, v) in kv {
                match key {
                    "k" => k = v.parse().map_err(|_| bad(key, v))?,
                    "epsilon" | "eps" => epsilon = v.parse().map_err(|_| bad(key, v))?,
                    _ => return Err(Error::Config(format!("unknown smoothing option `{key}`"))),
                }
            }
            OracleSpec::Smoothing { k, epsilon }
        }
        "power" => {
            let (mut p, mut square_input) = (21usize, true);
            for (key, v) in kv {
                match key {
                    "p" => p = v.parse().map_err(|_| bad(key, v))?,
                    "square_input" => square_input = v.parse().map_err(|_| bad(key, v))?,
                    _ => return Err(Error::Config(format!("unknown power option `{key}`"))),
                }
            }
            OracleSpec::Power { p, square_input }
        }
        "exact" if kv.is_empty() => OracleSpec::Exact,
        _ => return Err(Error::Config(format!("unknown oracle `{s}`"))),
    };
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(spec)
}
