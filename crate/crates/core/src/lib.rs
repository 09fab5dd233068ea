//! Executable models of quantum repeating devices and quantum seals.
//!
//! A repeating device measures a carrier state, infers an estimate of what
//! was sent, and passes the disturbed carrier on. A quantum seal encodes data
//! so that anyone can read it, but reading leaves a detectable disturbance.
//! The two are the same object viewed from different ends, and this crate
//! computes both sets of figures of merit:
//!
//! - transmission fidelity `F` and estimation fidelity `G` of a device,
//!   exactly (via the unitary 2-design identity) or by Monte Carlo;
//! - readability `alpha` and detection probability `beta` of a seal;
//! - the conversions between the two pictures, under which `F = 1 - beta`
//!   and `G = alpha` hold exactly;
//! - evaluation of the known tradeoff and security inequalities on any
//!   computed point;
//! - sweeps and derivative-free searches over parameterised device families
//!   to map the achievable `(F, G)` region.
//!
//! Everything is dense complex linear algebra on small dimensions
//! (`d <= 64`), implemented in [`linalg`].

#![forbid(unsafe_code)]

pub mod bounds;
pub mod bridge;
pub mod device;
pub mod error;
pub mod frontier;
pub mod linalg;
pub mod rng;
pub mod seal;
pub mod tol;
pub mod verify;

pub use bounds::{BoundEntry, BoundId, BoundPoint, BoundReport};
pub use bridge::{device_to_seal, seal_to_device, verify_equivalence, EquivalenceReport};
pub use device::{
    Alphabet, BuiltinDevice, BuiltinEncoding, ClassicalEncoding, EstimationKind, EstimationRule,
    McConfig, McEstimate, MeasurementInstrument, Outcome, RepeatingDevice, TradeoffPoint,
};
pub use error::{Error, Result};
pub use frontier::{DeviceFamily, FrontierPoint, FrontierResult, OptimizerConfig, RegionRow};
pub use linalg::{ComplexMatrix, PureState, C64};
pub use rng::{haar_sample, RngStream};
pub use seal::{BuiltinSeal, SealPoint, SealProtocol};
