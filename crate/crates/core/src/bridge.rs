//! Conversions between repeating devices and seals.
//!
//! A classical-decode device together with the encoding it reads is a seal
//! with no Alice-side system: the carrier is the sealed state, the device's
//! instrument is the advertised decoder, and the verifier is the projector
//! onto the carrier that was sent. Under that identification `F = 1 - beta`
//! and `G = alpha` hold term by term.

use serde::{Deserialize, Serialize};

use crate::device::{ClassicalEncoding, EstimationKind, EstimationRule, RepeatingDevice, TradeoffPoint};
use crate::error::{Error, Result};
use crate::seal::{bob_factor, schmidt_coefficients, SealPoint, SealProtocol};

pub fn device_to_seal(dev: &RepeatingDevice, enc: &ClassicalEncoding) -> Result<SealProtocol> {
    let decode = match dev.rule() {
        EstimationRule::Classical { decode } => decode.clone(),
        EstimationRule::Quantum { .. } => {
            return Err(Error::RuleKind {
                expected: "a classical-decode rule",
            })
        }
    };
    if enc.dim() != dev.dim() {
        return Err(Error::Dimension(format!(
            "encoding of dim {} for a {}-dimensional device",
            enc.dim(),
            dev.dim()
        )));
    }
    if let Some(bad) = decode.iter().flatten().find(|&&b| b >= enc.symbols()) {
        return Err(Error::Encoding(format!(
            "decode target {bad} out of range for {} symbols",
            enc.symbols()
        )));
    }
    SealProtocol::new(
        1,
        dev.dim(),
        enc.table().to_vec(),
        enc.prior().to_vec(),
        dev.instrument().clone(),
        decode,
    )
}

/// Read a seal as a device. Every sealed state must factor as
/// `|phi> (x) |psi>`; the `Psi` factors become the carriers.
pub fn seal_to_device(p: &SealProtocol) -> Result<(RepeatingDevice, ClassicalEncoding)> {
    let (da, db) = (p.dim_alice(), p.dim_bob());
    let mut table = Vec::with_capacity(p.values());
    for (symbol, states) in p.encodings().iter().enumerate() {
        let mut carriers = Vec::with_capacity(states.len());
        for (index, (s, w)) in states.iter().enumerate() {
            let carrier = if da == 1 {
                s.clone()
            } else {
                match bob_factor(s, da, db)? {
                    Ok(psi) => psi,
                    Err(_) => {
                        let schmidt = schmidt_coefficients(s, da, db)?.get(1).copied().unwrap_or(0.0);
                        return Err(Error::NotProduct {
                            symbol,
                            index,
                            schmidt,
                        });
                    }
                }
            };
            carriers.push((carrier, *w));
        }
        table.push(carriers);
    }
    let dev = RepeatingDevice::new(
        p.decoder().clone(),
        EstimationRule::Classical {
            decode: p.decode_map().to_vec(),
        },
    )?;
    let enc = ClassicalEncoding::new(table, p.prior().to_vec())?;
    Ok((dev, enc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub device: TradeoffPoint,
    pub seal: SealPoint,
    /// `|F - (1 - beta)|`
    pub f_gap: f64,
    /// `|G - alpha|`
    pub g_gap: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Evaluate both pictures independently and compare.
pub fn verify_equivalence(dev: &RepeatingDevice, enc: &ClassicalEncoding, tol: f64) -> Result<EquivalenceReport> {
    let device = dev.classical_estimation_fidelity(enc)?;
    debug_assert_eq!(device.kind, EstimationKind::ClassicalDecode);
    let seal = device_to_seal(dev, enc)?.point();
    let f_gap = (device.f - (1.0 - seal.beta)).abs();
    let g_gap = (device.g - seal.alpha).abs();
    Ok(EquivalenceReport {
        device,
        seal,
        f_gap,
        g_gap,
        tol,
        pass: f_gap <= tol && g_gap <= tol,
    })
}
