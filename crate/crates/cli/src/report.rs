//! Run reports.
//!
//! Scalars that come out of a computation are [`Value`]s, tagged `exact`
//! or `mc`; larger blocks (bound reports, frontiers, the verify report)
//! carry one tag for everything inside them.

use qrseal::bounds::{BoundReport, QuantumSealScenario};
use qrseal::frontier::{FrontierResult, Optimum, RegionRow};
use qrseal::seal::EigenstateCheck;
use qrseal::verify::VerifyReport;
use qrseal::{EquivalenceReport, EstimationKind, McEstimate, SealPoint, TradeoffPoint};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Value {
    Exact { value: f64 },
    Mc { value: f64, samples: u64, std_err: f64 },
}

impl Value {
    pub fn exact(value: f64) -> Self {
        Self::Exact { value }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Self::Exact { value } | Self::Mc { value, .. } => value,
        }
    }
}

/// Mode tag for a block of numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Mc { samples: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tagged<T> {
    #[serde(flatten)]
    pub mode: Mode,
    pub data: T,
}

impl<T> Tagged<T> {
    pub fn exact(data: T) -> Self {
        Self { mode: Mode::Exact, data }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub f: Value,
    pub g: Value,
    pub dim: usize,
    pub kind: EstimationKind,
}

impl From<TradeoffPoint> for FidelityPoint {
    fn from(p: TradeoffPoint) -> Self {
        Self {
            f: Value::exact(p.f),
            g: Value::exact(p.g),
            dim: p.dim,
            kind: p.kind,
        }
    }
}

impl From<McEstimate> for FidelityPoint {
    fn from(e: McEstimate) -> Self {
        if e.exact {
            return e.point.into();
        }
        Self {
            f: Value::Mc {
                value: e.point.f,
                samples: e.samples,
                std_err: e.f_std_err,
            },
            g: Value::Mc {
                value: e.point.g,
                samples: e.samples,
                std_err: e.g_std_err,
            },
            dim: e.point.dim,
            kind: e.point.kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SealValues {
    pub alpha: Value,
    pub beta: Value,
}

impl From<SealPoint> for SealValues {
    fn from(p: SealPoint) -> Self {
        Self {
            alpha: Value::exact(p.alpha),
            beta: Value::exact(p.beta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceResult {
    pub exact: FidelityPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<FidelityPoint>,
    pub bounds: Tagged<BoundReport>,
    /// `G >= 2/3`: no quantum-estimate qubit device reaches this.
    pub g_witness: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SealResult {
    pub point: SealValues,
    pub eigenstates: Vec<EigenstateCheck>,
    pub bounds: Tagged<BoundReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "direction", rename_all = "snake_case")]
pub enum BridgeResult {
    DeviceToSeal {
        device: FidelityPoint,
        seal: SealValues,
        equivalence: Tagged<EquivalenceReport>,
    },
    SealToDevice {
        seal: SealValues,
        device: FidelityPoint,
        equivalence: Tagged<EquivalenceReport>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumEntry {
    pub family: String,
    pub f_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimum: Option<Tagged<Optimum>>,
    /// Set instead of `optimum` when no parameter reaches `f_min`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasible: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierOutput {
    pub families: Vec<Tagged<FrontierResult>>,
    pub optima: Vec<OptimumEntry>,
    /// Merged envelope with bound checks, one per dimension present.
    pub regions: Vec<Tagged<Vec<RegionRow>>>,
}

/// One line of the reproduction table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Results {
    Device(DeviceResult),
    Seal(SealResult),
    Bridge(BridgeResult),
    Bounds(Tagged<BoundReport>),
    Frontier(FrontierOutput),
    VerifyAll(Tagged<VerifyReport>),
    PaperTable {
        rows: Vec<TableRow>,
        quantum_seal: Vec<Tagged<QuantumSealScenario>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    pub samples: u64,
    pub workers: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub results: Results,
    /// Every violated bound, whether or not bounds were asserted.
    pub violations: Vec<String>,
    pub provenance: Provenance,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports contain only finite numbers");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
