//! Quantum seals.
//!
//! Alice maps a value `b` to a joint state of her system `Phi` and a public
//! system `Psi`. Any reader applies the advertised decoding instrument to
//! `Psi` and maps the outcome to a value (or guesses if the outcome is
//! unidentified). Alice later checks whether the joint state is still the
//! one she prepared.
//!
//! - readability `alpha`: average probability the reader's value is right;
//! - detection probability `beta`: average probability Alice's projective
//!   test onto the original joint state fails after one reading.

use serde::{Deserialize, Serialize};

use crate::device::MeasurementInstrument;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, PureState, C64};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SealPoint {
    pub alpha: f64,
    pub beta: f64,
}

/// A seal protocol. Each value `b` may be sealed into an ensemble of joint
/// states (weights summing to one), which is how a device-side encoding
/// with several carriers per symbol is represented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeal", into = "RawSeal")]
pub struct SealProtocol {
    dim_alice: usize,
    dim_bob: usize,
    encodings: Vec<Vec<(PureState, f64)>>,
    prior: Vec<f64>,
    decoder: MeasurementInstrument,
    decode_map: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeal {
    dim_alice: usize,
    dim_bob: usize,
    encodings: Vec<Vec<(PureState, f64)>>,
    prior: Vec<f64>,
    decoder: MeasurementInstrument,
    decode_map: Vec<Option<usize>>,
}

impl TryFrom<RawSeal> for SealProtocol {
    type Error = Error;

    fn try_from(r: RawSeal) -> Result<Self> {
        Self::new(r.dim_alice, r.dim_bob, r.encodings, r.prior, r.decoder, r.decode_map)
    }
}

impl From<SealProtocol> for RawSeal {
    fn from(p: SealProtocol) -> Self {
        Self {
            dim_alice: p.dim_alice,
            dim_bob: p.dim_bob,
            encodings: p.encodings,
            prior: p.prior,
            decoder: p.decoder,
            decode_map: p.decode_map,
        }
    }
}

/// Whether one sealed state is left untouched by the decoder with certainty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigenstateCheck {
    pub symbol: usize,
    pub index: usize,
    pub eigenstate: bool,
}

impl SealProtocol {
    pub fn new(
        dim_alice: usize,
        dim_bob: usize,
        encodings: Vec<Vec<(PureState, f64)>>,
        prior: Vec<f64>,
        decoder: MeasurementInstrument,
        decode_map: Vec<Option<usize>>,
    ) -> Result<Self> {
        if dim_alice == 0 || dim_alice > tol::MAX_DIM {
            return Err(Error::Protocol(format!("Alice dimension {dim_alice} unsupported")));
        }
        if decoder.dim() != dim_bob {
            return Err(Error::Protocol(format!(
                "decoder acts on dimension {}, Psi has dimension {dim_bob}",
                decoder.dim()
            )));
        }
        if encodings.is_empty() || encodings.len() != prior.len() {
            return Err(Error::Protocol(format!(
                "{} sealed values but prior of length {}",
                encodings.len(),
                prior.len()
            )));
        }
        let joint = dim_alice * dim_bob;
        for (b, states) in encodings.iter().enumerate() {
            if states.is_empty() {
                return Err(Error::Protocol(format!("value {b} has no sealed state")));
            }
            if let Some(i) = states.iter().position(|(s, _)| s.dim() != joint) {
                return Err(Error::Protocol(format!(
                    "sealed state {i} of value {b} has dimension {}, expected {joint}",
                    states[i].0.dim()
                )));
            }
            probability_vector(states.iter().map(|(_, w)| *w), &format!("weights of value {b}"))?;
        }
        probability_vector(prior.iter().copied(), "prior")?;
        if decode_map.len() != decoder.outcomes() {
            return Err(Error::Protocol(format!(
                "decode map covers {} outcomes, decoder has {}",
                decode_map.len(),
                decoder.outcomes()
            )));
        }
        if let Some(bad) = decode_map.iter().flatten().find(|&&v| v >= encodings.len()) {
            return Err(Error::Protocol(format!("decode target {bad} is not a sealed value")));
        }
        Ok(Self {
            dim_alice,
            dim_bob,
            encodings,
            prior,
            decoder,
            decode_map,
        })
    }

    /// One sealed state per value, uniform prior.
    pub fn uniform(
        dim_alice: usize,
        dim_bob: usize,
        states: Vec<PureState>,
        decoder: MeasurementInstrument,
        decode_map: Vec<Option<usize>>,
    ) -> Result<Self> {
        let m = states.len().max(1);
        let encodings = states.into_iter().map(|s| vec![(s, 1.0)]).collect();
        Self::new(dim_alice, dim_bob, encodings, vec![1.0 / m as f64; m], decoder, decode_map)
    }

    pub fn dim_alice(&self) -> usize {
        self.dim_alice
    }

    pub fn dim_bob(&self) -> usize {
        self.dim_bob
    }

    pub fn values(&self) -> usize {
        self.encodings.len()
    }

    pub fn encodings(&self) -> &[Vec<(PureState, f64)>] {
        &self.encodings
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn decoder(&self) -> &MeasurementInstrument {
        &self.decoder
    }

    pub fn decode_map(&self) -> &[Option<usize>] {
        &self.decode_map
    }

    /// Same protocol with a different prior over sealed values.
    pub fn with_prior(&self, prior: Vec<f64>) -> Result<Self> {
        Self::new(
            self.dim_alice,
            self.dim_bob,
            self.encodings.clone(),
            prior,
            self.decoder.clone(),
            self.decode_map.clone(),
        )
    }

    /// `(I_Phi (x) M) |v>` with `v` indexed as `a * d_B + j`.
    fn apply_on_bob(&self, m: &ComplexMatrix, v: &[C64]) -> Vec<C64> {
        v.chunks_exact(self.dim_bob)
            .flat_map(|row| m.apply(row).expect("decoder dimension checked"))
            .collect()
    }

    /// For each decoder outcome, `(p_k, <enc|(I (x) M_k)|enc>)`.
    fn outcome_terms(&self, s: &PureState) -> Vec<(f64, C64)> {
        self.decoder
            .kraus()
            .iter()
            .map(|m| {
                let after = self.apply_on_bob(m, s.amplitudes());
                (linalg::norm(&after).powi(2), linalg::dot(s.amplitudes(), &after))
            })
            .collect()
    }

    fn weighted(&self) -> impl Iterator<Item = (usize, usize, &PureState, f64)> {
        self.encodings.iter().enumerate().flat_map(move |(b, states)| {
            states
                .iter()
                .enumerate()
                .map(move |(i, (s, w))| (b, i, s, self.prior[b] * w))
        })
    }

    /// Readability `alpha`.
    pub fn readability(&self) -> f64 {
        let guess = 1.0 / self.values() as f64;
        self.weighted()
            .map(|(b, _, s, w)| {
                let correct: f64 = self
                    .outcome_terms(s)
                    .iter()
                    .zip(&self.decode_map)
                    .map(|((p, _), target)| match target {
                        Some(t) if *t == b => *p,
                        Some(_) => 0.0,
                        None => guess * p,
                    })
                    .sum();
                w * correct
            })
            .sum()
    }

    /// Detection probability `beta`.
    ///
    /// Per outcome, `p_k (1 - |<enc|post_k>|^2) = p_k - |<enc|(I (x) M_k)|enc>|^2`,
    /// which also covers outcomes with `p_k = 0`.
    pub fn detection_probability(&self) -> f64 {
        self.weighted()
            .map(|(_, _, s, w)| {
                let lost: f64 = self
                    .outcome_terms(s)
                    .iter()
                    .map(|(p, amp)| p - amp.norm_sqr())
                    .sum();
                w * lost
            })
            .sum()
    }

    pub fn point(&self) -> SealPoint {
        SealPoint {
            alpha: self.readability(),
            beta: self.detection_probability(),
        }
    }

    /// Per sealed state: is it an eigenstate of the decoding operation,
    /// i.e. does one outcome occur with certainty and leave the joint state
    /// unchanged? No aggregation across states is attempted.
    pub fn eigenstate_checks(&self) -> Vec<EigenstateCheck> {
        self.weighted()
            .map(|(symbol, index, s, _)| {
                let eigenstate = self.outcome_terms(s).iter().any(|(p, amp)| {
                    *p >= 1.0 - tol::STRUCTURAL && amp.norm_sqr() >= 1.0 - tol::STRUCTURAL
                });
                EigenstateCheck {
                    symbol,
                    index,
                    eigenstate,
                }
            })
            .collect()
    }
}

fn probability_vector(p: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for x in p {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::Protocol(format!("{what}: invalid weight {x}")));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > tol::PROBABILITY_SUM {
        return Err(Error::Protocol(format!("{what} sum to {sum}")));
    }
    Ok(())
}

/// Schmidt coefficients of a joint state on `C^{d_A} (x) C^{d_B}`, largest first.
pub fn schmidt_coefficients(joint: &PureState, dim_alice: usize, dim_bob: usize) -> Result<Vec<f64>> {
    if joint.dim() != dim_alice * dim_bob {
        return Err(Error::Dimension(format!(
            "joint state of dim {} is not {dim_alice}x{dim_bob}",
            joint.dim()
        )));
    }
    let coeffs = ComplexMatrix::new(dim_alice, dim_bob, joint.amplitudes().to_vec())?;
    let reduced = coeffs.matmul(&coeffs.adjoint())?;
    let reduced = reduced.add(&reduced.adjoint())?.scale(C64::new(0.5, 0.0));
    let (mut vals, _) = reduced.hermitian_eigen()?;
    vals.reverse();
    Ok(vals.into_iter().map(|x| x.max(0.0).sqrt()).collect())
}

/// Split a joint state into its `Psi` factor if it is a product state.
///
/// Returns the normalised `Psi` factor (global phase is arbitrary) or the
/// residual distance from the best product decomposition found.
pub fn bob_factor(joint: &PureState, dim_alice: usize, dim_bob: usize) -> Result<std::result::Result<PureState, f64>> {
    if joint.dim() != dim_alice * dim_bob {
        return Err(Error::Dimension(format!(
            "joint state of dim {} is not {dim_alice}x{dim_bob}",
            joint.dim()
        )));
    }
    let rows: Vec<&[C64]> = joint.amplitudes().chunks_exact(dim_bob).collect();
    let lead = rows
        .iter()
        .copied()
        .max_by(|a, b| linalg::norm(a).total_cmp(&linalg::norm(b)))
        .expect("dim_alice >= 1");
    let psi = PureState::normalized(lead.to_vec())?;
    let mut residual = 0.0;
    for row in &rows {
        let phi = linalg::dot(psi.amplitudes(), row);
        residual += row
            .iter()
            .zip(psi.amplitudes())
            .map(|(r, p)| (r - phi * p).norm_sqr())
            .sum::<f64>();
    }
    let residual = residual.sqrt();
    Ok(if residual <= tol::STRUCTURAL { Ok(psi) } else { Err(residual) })
}

/// Named seal protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinSeal {
    /// `|b> -> (sqrt3/2)|f_b>|e_b> + (1/2)|f_~b>|e_~b>` on two qubits, read
    /// by measuring `Psi` in `{|e_0>, |e_1>}`.
    OptimalQbs,
    /// Orthogonal seal: `b -> |b>` on `Psi` alone, read in the same basis.
    PerfectSeal,
    /// The four-state qubit encoding read in the computational basis,
    /// with no Alice-side system.
    SimplifiedSeal,
}

impl BuiltinSeal {
    pub fn names() -> &'static [&'static str] {
        &["optimal_qbs", "perfect_seal", "simplified_seal"]
    }

    pub fn build(&self) -> Result<SealProtocol> {
        let basis = || -> Result<Vec<PureState>> { (0..2).map(|k| PureState::basis(2, k)).collect() };
        let decode = vec![Some(0), Some(1)];
        match self {
            Self::OptimalQbs => {
                let e = basis()?;
                let f = basis()?;
                let major = 3f64.sqrt() / 2.0;
                let seal = |b: usize| -> Result<PureState> {
                    let hi = f[b].tensor(&e[b]);
                    let lo = f[1 - b].tensor(&e[1 - b]);
                    let amps = hi
                        .amplitudes()
                        .iter()
                        .zip(lo.amplitudes())
                        .map(|(x, y)| x * major + y * 0.5)
                        .collect();
                    PureState::new(amps)
                };
                SealProtocol::uniform(
                    2,
                    2,
                    vec![seal(0)?, seal(1)?],
                    MeasurementInstrument::projective(&e)?,
                    decode,
                )
            }
            Self::PerfectSeal => {
                let e = basis()?;
                SealProtocol::uniform(1, 2, e.clone(), MeasurementInstrument::projective(&e)?, decode)
            }
            Self::SimplifiedSeal => {
                let enc = crate::device::BuiltinEncoding::Simplified.build()?;
                SealProtocol::new(
                    1,
                    2,
                    enc.table().to_vec(),
                    enc.prior().to_vec(),
                    MeasurementInstrument::projective(&basis()?)?,
                    decode,
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn builtin_points() {
        let p = BuiltinSeal::OptimalQbs.build().unwrap().point();
        assert_abs_diff_eq!(p.alpha, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(p.beta, 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(p.alpha + p.beta, 1.125, epsilon = 1e-12);

        let p = BuiltinSeal::PerfectSeal.build().unwrap().point();
        assert_abs_diff_eq!(p.alpha, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.beta, 0.0, epsilon = 1e-12);

        // Enumeration: each carrier gives the right value with 3/4 and
        // survives the reading with 9/16 + 1/16 = 5/8.
        let p = BuiltinSeal::SimplifiedSeal.build().unwrap().point();
        assert_abs_diff_eq!(p.alpha, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(p.beta, 0.375, epsilon = 1e-12);
    }

    #[test]
    fn ignoring_psi_is_pure_guessing() {
        let qbs = BuiltinSeal::OptimalQbs.build().unwrap();
        let blind = SealProtocol::new(
            2,
            2,
            qbs.encodings().to_vec(),
            qbs.prior().to_vec(),
            MeasurementInstrument::identity(2).unwrap(),
            vec![None],
        )
        .unwrap();
        let p = blind.point();
        assert_abs_diff_eq!(p.alpha, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.beta, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bit_swap_symmetry_makes_prior_irrelevant() {
        let qbs = BuiltinSeal::OptimalQbs.build().unwrap();
        for p0 in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let p = qbs.with_prior(vec![p0, 1.0 - p0]).unwrap().point();
            assert_abs_diff_eq!(p.alpha, 0.75, epsilon = 1e-12);
            assert_abs_diff_eq!(p.beta, 0.375, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigenstate_classifier() {
        let perfect = BuiltinSeal::PerfectSeal.build().unwrap();
        assert!(perfect.eigenstate_checks().iter().all(|c| c.eigenstate));
        let qbs = BuiltinSeal::OptimalQbs.build().unwrap();
        assert!(qbs.eigenstate_checks().iter().all(|c| !c.eigenstate));
    }

    #[test]
    fn schmidt_of_optimal_qbs() {
        let qbs = BuiltinSeal::OptimalQbs.build().unwrap();
        let s = schmidt_coefficients(&qbs.encodings()[0][0].0, 2, 2).unwrap();
        assert_abs_diff_eq!(s[0], 3f64.sqrt() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s[1], 0.5, epsilon = 1e-12);
        assert!(bob_factor(&qbs.encodings()[0][0].0, 2, 2).unwrap().is_err());
    }

    #[test]
    fn product_state_factorises() {
        let a = PureState::real_qubit(0.3);
        let b = PureState::real_qubit(1.1);
        let psi = bob_factor(&a.tensor(&b), 2, 2).unwrap().unwrap();
        assert_abs_diff_eq!(psi.overlap(&b).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn structural_violations() {
        let e: Vec<PureState> = (0..2).map(|k| PureState::basis(2, k).unwrap()).collect();
        let instr = MeasurementInstrument::projective(&e).unwrap();
        // Decoder on the wrong system size.
        assert!(SealProtocol::uniform(2, 3, e.clone(), instr.clone(), vec![Some(0), Some(1)]).is_err());
        // Decode target not a sealed value.
        assert!(SealProtocol::uniform(1, 2, e.clone(), instr.clone(), vec![Some(0), Some(2)]).is_err());
        // Decode map length.
        assert!(SealProtocol::uniform(1, 2, e, instr, vec![Some(0)]).is_err());
    }
}
