//! Scenario configuration files.
//!
//! A config is one JSON document. Unknown keys are rejected everywhere, and
//! every built-in or inline object is constructed once during validation so
//! a config that parses is a config that runs.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qrseal::bounds::{BoundId, BoundPoint};
use qrseal::frontier::{BuiltinFamily, OptimizerConfig};
use qrseal::verify::Tolerances;
use qrseal::{BuiltinDevice, BuiltinEncoding, BuiltinSeal, ClassicalEncoding, RepeatingDevice, SealProtocol};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Output,
    /// Exit with status 2 if any evaluated bound is violated.
    #[serde(default)]
    pub assert_bounds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub n: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            n: 100_000,
            seed: 0,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    /// Directory for `report.json` and any CSV tables. Without it the
    /// report goes to stdout and nothing is written.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Scenario {
    Device {
        device: DeviceRef,
        /// Required for classical-decode devices.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        encoding: Option<EncodingRef>,
        /// Also estimate the Haar averages by Monte Carlo.
        #[serde(default)]
        monte_carlo: bool,
        /// Bounds to evaluate; defaults depend on the estimation kind.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<Vec<BoundId>>,
    },
    Seal {
        seal: SealRef,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<Vec<BoundId>>,
    },
    Bridge {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        device: Option<DeviceRef>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        encoding: Option<EncodingRef>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seal: Option<SealRef>,
    },
    Bounds {
        point: BoundPoint,
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<Vec<BoundId>>,
    },
    Frontier {
        families: Vec<BuiltinFamily>,
        grid: Vec<usize>,
        /// Floors on `F` at which to maximise `G`, per family.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        f_min: Vec<f64>,
        #[serde(default)]
        optimizer: OptimizerConfig,
    },
    VerifyAll {},
    PaperTable {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DeviceRef {
    Builtin(BuiltinDevice),
    Inline(RepeatingDevice),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EncodingRef {
    Builtin(BuiltinEncoding),
    Inline(ClassicalEncoding),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SealRef {
    Builtin(BuiltinSeal),
    Inline(SealProtocol),
}

impl DeviceRef {
    pub fn resolve(&self) -> qrseal::Result<RepeatingDevice> {
        match self {
            Self::Builtin(b) => b.build(),
            Self::Inline(d) => Ok(d.clone()),
        }
    }
}

impl EncodingRef {
    pub fn resolve(&self) -> qrseal::Result<ClassicalEncoding> {
        match self {
            Self::Builtin(b) => b.build(),
            Self::Inline(e) => Ok(e.clone()),
        }
    }
}

impl SealRef {
    pub fn resolve(&self) -> qrseal::Result<SealProtocol> {
        match self {
            Self::Builtin(b) => b.build(),
            Self::Inline(p) => Ok(p.clone()),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub tol_exact: Option<f64>,
    pub tol_mc: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.sampling.seed = s;
        }
        if let Some(n) = o.samples {
            self.sampling.n = n;
        }
        if let Some(w) = o.workers {
            self.sampling.workers = w;
        }
        if let Some(dir) = &o.out {
            self.output.dir = Some(dir.clone());
        }
        if let Some(t) = o.tol_exact {
            self.tolerances.exact = Some(t);
        }
        if let Some(t) = o.tol_mc {
            self.tolerances.mc_sigmas = t;
        }
        self.validate()
    }

    /// Checks that serde cannot express: value ranges and that every
    /// referenced object can be built.
    pub fn validate(&self) -> Result<()> {
        let s = &self.sampling;
        anyhow::ensure!(s.n >= 2, "sampling.n must be at least 2, got {}", s.n);
        anyhow::ensure!(s.workers >= 1, "sampling.workers must be at least 1");
        if let Some(t) = self.tolerances.exact {
            anyhow::ensure!(t.is_finite() && t >= 0.0, "tolerances.exact must be a nonnegative number");
        }
        let m = self.tolerances.mc_sigmas;
        anyhow::ensure!(m.is_finite() && m >= 0.0, "tolerances.mc_sigmas must be a nonnegative number");

        match &self.scenario {
            Scenario::Device {
                device,
                encoding,
                monte_carlo,
                ..
            } => {
                let dev = device.resolve().context("scenario.device")?;
                if let Some(e) = encoding {
                    e.resolve().context("scenario.encoding")?;
                }
                if dev.kind() == qrseal::EstimationKind::ClassicalDecode {
                    anyhow::ensure!(
                        encoding.is_some(),
                        "scenario.encoding is required for a classical-decode device"
                    );
                    anyhow::ensure!(
                        !monte_carlo,
                        "scenario.monte_carlo applies to quantum-estimate devices only"
                    );
                }
            }
            Scenario::Seal { seal, .. } => {
                seal.resolve().context("scenario.seal")?;
            }
            Scenario::Bridge { device, encoding, seal } => match (device, encoding, seal) {
                (Some(d), Some(e), None) => {
                    d.resolve().context("scenario.device")?;
                    e.resolve().context("scenario.encoding")?;
                }
                (None, None, Some(p)) => {
                    p.resolve().context("scenario.seal")?;
                }
                _ => anyhow::bail!("bridge scenario needs either device and encoding, or seal"),
            },
            Scenario::Bounds { d, .. } => {
                anyhow::ensure!(*d >= 2, "scenario.d must be at least 2");
            }
            Scenario::Frontier { families, grid, f_min, .. } => {
                anyhow::ensure!(!families.is_empty(), "scenario.families is empty");
                for (i, f) in families.iter().enumerate() {
                    let fam = f.build().with_context(|| format!("scenario.families[{i}]"))?;
                    anyhow::ensure!(
                        grid.len() == fam.params().len(),
                        "scenario.grid has {} entries but {} takes {} parameters",
                        grid.len(),
                        fam.name(),
                        fam.params().len()
                    );
                }
                anyhow::ensure!(grid.iter().all(|&n| n >= 2), "scenario.grid entries must be at least 2");
                anyhow::ensure!(f_min.iter().all(|f| f.is_finite()), "scenario.f_min must be finite");
            }
            Scenario::VerifyAll {} | Scenario::PaperTable {} => {}
        }
        Ok(())
    }
}
