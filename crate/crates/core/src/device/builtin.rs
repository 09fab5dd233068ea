use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use serde::{Deserialize, Serialize};

use super::{ClassicalEncoding, EstimationRule, MeasurementInstrument, RepeatingDevice};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, PureState, C64};
use crate::rng::{haar_sample, RngStream};
use crate::tol;

/// Named device constructions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinDevice {
    /// Leave the carrier alone and guess `|guess>`.
    DoNothing {
        d: usize,
        #[serde(default)]
        guess: usize,
    },
    /// Measure in the computational basis and report the outcome as the
    /// estimate; the re-prepared carrier is the same basis state.
    MeasureReprepare { d: usize },
    /// Computational-basis measurement decoding outcome `k` as symbol `k`.
    MeasureKeep { d: usize },
    /// Qubit measurement in the basis rotated by pi/8, decoding 0/1.
    Breidbart,
    /// Qubit measurement in `{cos a|0> + sin a|1>, -sin a|0> + cos a|1>}`,
    /// decoding 0/1.
    BasisAngle { angle: f64 },
    /// Qubit weak measurement `M_0 = sqrt(1/2+l)|0><0| + sqrt(1/2-l)|1><1|`,
    /// `M_1` with `l -> -l`, estimates `|0>`, `|1>`; `l` in `[0, 1/2]`.
    WeakFamily { lambda: f64 },
    /// `d`-dimensional generalisation of the weak family:
    /// `M_k = a|k><k| + b(I - |k><k|)` with `a^2 + (d-1) b^2 = 1` and
    /// `a^2 = 1/d + s (1 - 1/d)`, `s` in `[0, 1]`.
    DiagonalWeak { d: usize, strength: f64 },
    /// Seeded random instrument with Haar-random estimates.
    Random { d: usize, outcomes: usize, seed: u64 },
}

/// One-line catalog entry for listings.
#[derive(Debug, Clone, Serialize)]
pub struct DeviceInfo {
    pub name: &'static str,
    pub params: &'static str,
    pub kind: &'static str,
    pub summary: &'static str,
}

fn check_dim(d: usize) -> Result<()> {
    if !(2..=tol::MAX_DIM).contains(&d) {
        return Err(Error::Config(format!("dimension {d} outside 2..={}", tol::MAX_DIM)));
    }
    Ok(())
}

fn computational_basis(d: usize) -> Vec<PureState> {
    (0..d).map(|k| PureState::basis(d, k).expect("k < d")).collect()
}

fn identity_decode(n: usize) -> EstimationRule {
    EstimationRule::Classical {
        decode: (0..n).map(Some).collect(),
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl BuiltinDevice {
    pub fn catalog() -> Vec<DeviceInfo> {
        vec![
            DeviceInfo {
                name: "do_nothing",
                params: "d, guess=0",
                kind: "quantum_estimate",
                summary: "identity instrument with a fixed guess",
            },
            DeviceInfo {
                name: "measure_reprepare",
                params: "d",
                kind: "quantum_estimate",
                summary: "computational-basis measurement, estimate = outcome state",
            },
            DeviceInfo {
                name: "measure_keep",
                params: "d",
                kind: "classical_decode",
                summary: "computational-basis measurement decoding k -> k",
            },
            DeviceInfo {
                name: "breidbart",
                params: "",
                kind: "classical_decode",
                summary: "qubit measurement in the pi/8-rotated basis",
            },
            DeviceInfo {
                name: "basis_angle",
                params: "angle",
                kind: "classical_decode",
                summary: "qubit measurement in a real basis rotated by angle",
            },
            DeviceInfo {
                name: "weak_family",
                params: "lambda in [0, 1/2]",
                kind: "quantum_estimate",
                summary: "qubit weak measurement saturating the d=2 tradeoff ellipse",
            },
            DeviceInfo {
                name: "diagonal_weak",
                params: "d, strength in [0, 1]",
                kind: "quantum_estimate",
                summary: "d-dimensional weak measurement interpolating do_nothing and measure_reprepare",
            },
            DeviceInfo {
                name: "random",
                params: "d, outcomes, seed",
                kind: "quantum_estimate",
                summary: "seeded random instrument with Haar-random estimates",
            },
        ]
    }

    pub fn build(&self) -> Result<RepeatingDevice> {
        match *self {
            Self::DoNothing { d, guess } => {
                check_dim(d)?;
                if guess >= d {
                    return Err(Error::Config(format!("guess index {guess} out of range for d={d}")));
                }
                RepeatingDevice::new(
                    MeasurementInstrument::identity(d)?,
                    EstimationRule::Quantum {
                        estimates: vec![PureState::basis(d, guess)?],
                    },
                )
            }
            Self::MeasureReprepare { d } => {
                check_dim(d)?;
                let basis = computational_basis(d);
                RepeatingDevice::new(
                    MeasurementInstrument::measure_reprepare(&basis, &basis)?,
                    EstimationRule::Quantum { estimates: basis },
                )
            }
            Self::MeasureKeep { d } => {
                check_dim(d)?;
                RepeatingDevice::new(
                    MeasurementInstrument::projective(&computational_basis(d))?,
                    identity_decode(d),
                )
            }
            Self::Breidbart => Self::BasisAngle { angle: FRAC_PI_8 }.build(),
            Self::BasisAngle { angle } => {
                if !angle.is_finite() {
                    return Err(Error::Config("basis angle must be finite".into()));
                }
                let basis = [PureState::real_qubit(angle), PureState::real_qubit(angle + FRAC_PI_2)];
                RepeatingDevice::new(MeasurementInstrument::projective(&basis)?, identity_decode(2))
            }
            Self::WeakFamily { lambda } => {
                if !(0.0..=0.5).contains(&lambda) {
                    return Err(Error::Config(format!("weak_family lambda {lambda} outside [0, 1/2]")));
                }
                let hi = (0.5 + lambda).sqrt();
                let lo = (0.5 - lambda).max(0.0).sqrt();
                let kraus = vec![
                    ComplexMatrix::from_diag(&[real(hi), real(lo)]),
                    ComplexMatrix::from_diag(&[real(lo), real(hi)]),
                ];
                RepeatingDevice::new(
                    MeasurementInstrument::new(kraus)?,
                    EstimationRule::Quantum {
                        estimates: computational_basis(2),
                    },
                )
            }
            Self::DiagonalWeak { d, strength } => {
                check_dim(d)?;
                if !(0.0..=1.0).contains(&strength) {
                    return Err(Error::Config(format!("diagonal_weak strength {strength} outside [0, 1]")));
                }
                let df = d as f64;
                let a2 = 1.0 / df + strength * (1.0 - 1.0 / df);
                let a = a2.sqrt();
                let b = ((1.0 - a2) / (df - 1.0)).max(0.0).sqrt();
                let kraus = (0..d)
                    .map(|k| {
                        let diag: Vec<C64> = (0..d).map(|j| real(if j == k { a } else { b })).collect();
                        ComplexMatrix::from_diag(&diag)
                    })
                    .collect();
                RepeatingDevice::new(
                    MeasurementInstrument::new(kraus)?,
                    EstimationRule::Quantum {
                        estimates: computational_basis(d),
                    },
                )
            }
            Self::Random { d, outcomes, seed } => {
                check_dim(d)?;
                random_device(d, outcomes, &mut RngStream::new(seed, 0))
            }
        }
    }
}

/// Random single-Kraus-per-outcome instrument with Haar-random estimates.
///
/// Draws Ginibre matrices `A_k` and sets `M_k = A_k S^{-1/2}` with
/// `S = sum_k A_k^dag A_k`, which is complete by construction.
pub fn random_device(d: usize, outcomes: usize, rng: &mut RngStream) -> Result<RepeatingDevice> {
    if outcomes == 0 {
        return Err(Error::Config("random device needs at least one outcome".into()));
    }
    let raw: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let data = (0..d * d).map(|_| rng.complex_gaussian()).collect();
            ComplexMatrix::new(d, d, data)
        })
        .collect::<Result<_>>()?;
    let mut s = ComplexMatrix::zeros(d, d);
    for a in &raw {
        s = s.add(&a.gram())?;
    }
    // Symmetrise away rounding so the eigensolver sees an exact Hermitian.
    let s = s.add(&s.adjoint())?.scale(real(0.5));
    let inv = s.pd_inv_sqrt()?;
    let kraus = raw.iter().map(|a| a.matmul(&inv)).collect::<Result<Vec<_>>>()?;
    let estimates = (0..outcomes).map(|_| haar_sample(d, rng)).collect::<Result<Vec<_>>>()?;
    RepeatingDevice::new(
        MeasurementInstrument::new(kraus)?,
        EstimationRule::Quantum { estimates },
    )
}

/// Named classical encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinEncoding {
    /// 0 -> {|0>, |+>}, 1 -> {|1>, |->}.
    Bb84,
    /// 0 -> {(sqrt3/2)|0> +- (1/2)|1>}, 1 -> {(1/2)|0> +- (sqrt3/2)|1>}.
    Simplified,
    /// Symbol `k` -> `|k>` in dimension `d`.
    Orthogonal { d: usize },
}

impl BuiltinEncoding {
    pub fn names() -> &'static [&'static str] {
        &["bb84", "simplified", "orthogonal"]
    }

    pub fn build(&self) -> Result<ClassicalEncoding> {
        let q = PureState::real_qubit;
        match *self {
            Self::Bb84 => ClassicalEncoding::uniform(vec![
                vec![q(0.0), q(FRAC_PI_4)],
                vec![q(FRAC_PI_2), q(-FRAC_PI_4)],
            ]),
            Self::Simplified => {
                // pi/6 puts sqrt(3)/2 on |0>, pi/3 puts it on |1>.
                let a = std::f64::consts::FRAC_PI_6;
                let b = std::f64::consts::FRAC_PI_3;
                ClassicalEncoding::uniform(vec![vec![q(a), q(-a)], vec![q(b), q(-b)]])
            }
            Self::Orthogonal { d } => {
                check_dim(d)?;
                ClassicalEncoding::uniform(computational_basis(d).into_iter().map(|s| vec![s]).collect())
            }
        }
    }
}
