//! Tradeoff and security inequalities.
//!
//! Each inequality is evaluated as `lhs <= rhs` with `margin = rhs - lhs`
//! (two-sided ranges report the slack to the nearer side). Nothing is
//! applied automatically: callers choose which bounds are meaningful for a
//! point, since the quantum-estimation bounds do not govern classical
//! decoding.
//!
//! Device points and seal points are interchangeable through
//! `alpha = G`, `beta = 1 - F`, so any bound can be requested for either.

use serde::{Deserialize, Serialize};

use crate::device::{BuiltinDevice, TradeoffPoint};
use crate::error::{Error, Result};
use crate::seal::SealPoint;
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundId {
    /// `2/(d+1) <= F <= 1`
    FRange,
    /// `1/d <= G <= 2/(d+1)`
    GRange,
    /// `(F-F0)^2 + d^2 (G-G0)^2 + 2(d-2)(F-F0)(G-G0) <= (d-1)/(d+1)^2`
    TradeoffGeneral,
    /// `(F-2/3)^2 + 4(G-1/2)^2 <= 1/9`, qubits only
    TradeoffD2,
    /// `beta <= 1/2`
    BetaHalf,
    /// `alpha + beta <= 9/8`
    AlphaBetaNineEighths,
    /// `G - F <= 1/8`
    GMinusFEighth,
    /// `beta <= 1 - 2/(d+1)`
    QuantumSealD,
    /// `beta <= 1/3`, qubits only
    QuantumSealD2,
}

impl BoundId {
    pub const ALL: [BoundId; 9] = [
        Self::FRange,
        Self::GRange,
        Self::TradeoffGeneral,
        Self::TradeoffD2,
        Self::BetaHalf,
        Self::AlphaBetaNineEighths,
        Self::GMinusFEighth,
        Self::QuantumSealD,
        Self::QuantumSealD2,
    ];

    /// Bounds that hold for quantum-state estimation over Haar inputs.
    pub fn quantum_estimation(d: usize) -> Vec<BoundId> {
        let mut ids = vec![Self::FRange, Self::GRange, Self::TradeoffGeneral];
        if d == 2 {
            ids.push(Self::TradeoffD2);
        }
        ids
    }

    /// Bounds that hold for decoding one classical bit.
    pub fn single_bit_decoding() -> Vec<BoundId> {
        vec![Self::BetaHalf, Self::AlphaBetaNineEighths, Self::GMinusFEighth]
    }
}

/// `F0 = (d+2) / (2(d+1))`
pub fn f0(d: usize) -> f64 {
    let d = d as f64;
    (d + 2.0) / (2.0 * (d + 1.0))
}

/// `G0 = 3 / (2(d+1))`
pub fn g0(d: usize) -> f64 {
    3.0 / (2.0 * (d as f64 + 1.0))
}

/// Left-hand side of the general-dimension tradeoff ellipse.
pub fn tradeoff_general_lhs(f: f64, g: f64, d: usize) -> f64 {
    let df = d as f64;
    let x = f - f0(d);
    let y = g - g0(d);
    x * x + df * df * y * y + 2.0 * (df - 2.0) * x * y
}

pub fn tradeoff_general_rhs(d: usize) -> f64 {
    let d = d as f64;
    (d - 1.0) / ((d + 1.0) * (d + 1.0))
}

pub fn tradeoff_d2_lhs(f: f64, g: f64) -> f64 {
    (f - 2.0 / 3.0).powi(2) + 4.0 * (g - 0.5).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundPoint {
    Tradeoff { f: f64, g: f64 },
    Seal { alpha: f64, beta: f64 },
}

impl BoundPoint {
    pub fn fg(&self) -> (f64, f64) {
        match *self {
            Self::Tradeoff { f, g } => (f, g),
            Self::Seal { alpha, beta } => (1.0 - beta, alpha),
        }
    }

    pub fn alpha_beta(&self) -> (f64, f64) {
        match *self {
            Self::Tradeoff { f, g } => (g, 1.0 - f),
            Self::Seal { alpha, beta } => (alpha, beta),
        }
    }
}

impl From<TradeoffPoint> for BoundPoint {
    fn from(p: TradeoffPoint) -> Self {
        Self::Tradeoff { f: p.f, g: p.g }
    }
}

impl From<SealPoint> for BoundPoint {
    fn from(p: SealPoint) -> Self {
        Self::Seal {
            alpha: p.alpha,
            beta: p.beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub id: BoundId,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub margin: f64,
}

impl BoundEntry {
    fn upper(id: BoundId, lhs: f64, rhs: f64) -> Self {
        Self::with_margin(id, lhs, rhs, rhs - lhs)
    }

    fn range(id: BoundId, value: f64, lo: f64, hi: f64) -> Self {
        let (below, above) = (value - lo, hi - value);
        let rhs = if below < above { lo } else { hi };
        Self::with_margin(id, value, rhs, below.min(above))
    }

    fn with_margin(id: BoundId, lhs: f64, rhs: f64, margin: f64) -> Self {
        Self {
            id,
            lhs,
            rhs,
            satisfied: margin >= -tol::BOUND_MARGIN,
            margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub dim: usize,
    pub entries: Vec<BoundEntry>,
}

impl BoundReport {
    pub fn get(&self, id: BoundId) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    pub fn violations(&self) -> impl Iterator<Item = &BoundEntry> {
        self.entries.iter().filter(|e| !e.satisfied)
    }
}

/// Evaluate the requested bounds on a point, in the order given.
pub fn evaluate(point: BoundPoint, d: usize, ids: &[BoundId]) -> Result<BoundReport> {
    if d < 2 {
        return Err(Error::Dimension(format!("bounds need d >= 2, got {d}")));
    }
    let (f, g) = point.fg();
    let (alpha, beta) = point.alpha_beta();
    for (name, v) in [("F", f), ("G", g)] {
        if !(-tol::STRUCTURAL..=1.0 + tol::STRUCTURAL).contains(&v) {
            return Err(Error::Config(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let df = d as f64;
    let entries = ids
        .iter()
        .map(|&id| {
            Ok(match id {
                BoundId::FRange => BoundEntry::range(id, f, 2.0 / (df + 1.0), 1.0),
                BoundId::GRange => BoundEntry::range(id, g, 1.0 / df, 2.0 / (df + 1.0)),
                BoundId::TradeoffGeneral => {
                    BoundEntry::upper(id, tradeoff_general_lhs(f, g, d), tradeoff_general_rhs(d))
                }
                BoundId::TradeoffD2 => {
                    require_qubit(id, d)?;
                    BoundEntry::upper(id, tradeoff_d2_lhs(f, g), 1.0 / 9.0)
                }
                BoundId::BetaHalf => BoundEntry::upper(id, beta, 0.5),
                BoundId::AlphaBetaNineEighths => BoundEntry::upper(id, alpha + beta, 9.0 / 8.0),
                BoundId::GMinusFEighth => BoundEntry::upper(id, g - f, 1.0 / 8.0),
                BoundId::QuantumSealD => BoundEntry::upper(id, beta, 1.0 - 2.0 / (df + 1.0)),
                BoundId::QuantumSealD2 => {
                    require_qubit(id, d)?;
                    BoundEntry::upper(id, beta, 1.0 / 3.0)
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport { dim: d, entries })
}

fn require_qubit(id: BoundId, d: usize) -> Result<()> {
    if d != 2 {
        return Err(Error::Scope(format!("{id:?} only applies to d = 2, got d = {d}")));
    }
    Ok(())
}

/// `G - 1/2 > 1/6` alone forces `(F-2/3)^2 + 4(G-1/2)^2 > 1/9`, whatever `F`.
pub fn violation_witness_g(g: f64) -> bool {
    g >= 2.0 / 3.0 + 1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumSealScenario {
    pub dim: usize,
    pub device: TradeoffPoint,
    pub beta: f64,
    pub report: BoundReport,
}

/// Sealing unknown quantum data in dimension `d`: the most informative
/// reader (measure and re-prepare) gives `beta = 1 - F`, which meets the
/// `beta <= 1 - 2/(d+1)` bound with equality.
pub fn quantum_seal_bound_scenario(d: usize) -> Result<QuantumSealScenario> {
    let device = BuiltinDevice::MeasureReprepare { d }.build()?.average_fidelities_exact()?;
    let mut ids = vec![BoundId::QuantumSealD];
    if d == 2 {
        ids.push(BoundId::QuantumSealD2);
    }
    let report = evaluate(device.into(), d, &ids)?;
    Ok(QuantumSealScenario {
        dim: d,
        device,
        beta: 1.0 - device.f,
        report,
    })
}
