//! Quantum repeating devices.
//!
//! A device measures the incoming carrier with an instrument (one Kraus
//! operator per outcome), turns the outcome into an estimate, and forwards
//! the post-measurement carrier. Two estimation rules are supported: a
//! quantum estimate `k -> |phi_k>` and a classical decode `k -> symbol`
//! (or "unidentified", in which case the reader guesses uniformly).
//!
//! Fidelities are available pointwise for a single input, averaged exactly
//! over the Haar measure, averaged by Monte Carlo, and averaged over a
//! discrete classical encoding.

mod builtin;

pub use builtin::{random_device, BuiltinDevice, BuiltinEncoding, DeviceInfo};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, PureState};
use crate::rng::{haar_sample, RngStream};
use crate::tol;

/// One Kraus operator per outcome; outcome labels are the indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ComplexMatrix>", into = "Vec<ComplexMatrix>")]
pub struct MeasurementInstrument {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl TryFrom<Vec<ComplexMatrix>> for MeasurementInstrument {
    type Error = Error;

    fn try_from(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(kraus)
    }
}

impl From<MeasurementInstrument> for Vec<ComplexMatrix> {
    fn from(m: MeasurementInstrument) -> Self {
        m.kraus
    }
}

/// A single observed outcome of an instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub index: usize,
    pub probability: f64,
    pub state: PureState,
}

impl MeasurementInstrument {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = kraus
            .first()
            .map(ComplexMatrix::rows)
            .ok_or_else(|| Error::Dimension("instrument with no outcomes".into()))?;
        if !(2..=tol::MAX_DIM).contains(&dim) {
            return Err(Error::Dimension(format!("instrument dimension {dim} unsupported")));
        }
        if let Some((k, m)) = kraus
            .iter()
            .enumerate()
            .find(|(_, m)| m.rows() != dim || m.cols() != dim)
        {
            return Err(Error::Dimension(format!(
                "Kraus operator {k} is {}x{}, expected {dim}x{dim}",
                m.rows(),
                m.cols()
            )));
        }
        let instr = Self { dim, kraus };
        let deviation = instr.completeness_defect();
        if deviation > tol::COMPLETENESS {
            return Err(Error::Completeness { deviation });
        }
        Ok(instr)
    }

    /// The single-outcome instrument `M = I`.
    pub fn identity(d: usize) -> Result<Self> {
        Self::new(vec![ComplexMatrix::identity(d)])
    }

    /// Realise a bare POVM with the canonical Kraus choice `M_k = sqrt(Pi_k)`.
    pub fn from_povm(povm: &[ComplexMatrix]) -> Result<Self> {
        let kraus = povm.iter().map(ComplexMatrix::psd_sqrt).collect::<Result<Vec<_>>>()?;
        Self::new(kraus)
    }

    /// Projective measurement `M_k = |b_k><b_k|` in an orthonormal basis.
    pub fn projective(basis: &[PureState]) -> Result<Self> {
        Self::new(basis.iter().map(ComplexMatrix::projector).collect())
    }

    /// Measure in `basis` and re-prepare `prepared[k]`: `M_k = |phi_k><b_k|`.
    pub fn measure_reprepare(basis: &[PureState], prepared: &[PureState]) -> Result<Self> {
        if basis.len() != prepared.len() {
            return Err(Error::Dimension("basis and prepared states differ in count".into()));
        }
        Self::new(
            basis
                .iter()
                .zip(prepared)
                .map(|(b, p)| ComplexMatrix::outer(p.amplitudes(), b.amplitudes()))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.kraus.len()
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `Pi_k = M_k^dag M_k`
    pub fn povm_element(&self, k: usize) -> ComplexMatrix {
        self.kraus[k].gram()
    }

    pub fn completeness_defect(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim, self.dim);
        for m in &self.kraus {
            sum = sum.add(&m.gram()).expect("shapes checked");
        }
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim))
    }

    fn check_dim(&self, psi: &PureState) -> Result<()> {
        if psi.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "state of dim {} fed to a {}-dimensional instrument",
                psi.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `<psi| Pi_k |psi>` for every outcome, including negligible ones.
    pub fn probabilities(&self, psi: &PureState) -> Result<Vec<f64>> {
        self.check_dim(psi)?;
        self.kraus
            .iter()
            .map(|m| Ok(crate::linalg::norm(&m.apply(psi.amplitudes())?).powi(2)))
            .collect()
    }

    /// Apply the instrument to `psi`, returning every outcome with
    /// probability above [`tol::NEGLIGIBLE_PROBABILITY`] together with the
    /// normalised conditional state `M_k psi / sqrt(p_k)`.
    pub fn apply(&self, psi: &PureState) -> Result<Vec<Outcome>> {
        self.check_dim(psi)?;
        let mut out = Vec::with_capacity(self.kraus.len());
        for (index, m) in self.kraus.iter().enumerate() {
            let v = m.apply(psi.amplitudes())?;
            let probability = crate::linalg::norm(&v).powi(2);
            if probability <= tol::NEGLIGIBLE_PROBABILITY {
                continue;
            }
            let s = probability.sqrt();
            let state = PureState::normalized(v.into_iter().map(|z| z / s).collect())?;
            out.push(Outcome {
                index,
                probability,
                state,
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationKind {
    QuantumEstimate,
    ClassicalDecode,
}

/// What the reader infers from each outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationRule {
    /// Outcome `k` means "the input was probably `estimates[k]`".
    Quantum { estimates: Vec<PureState> },
    /// Outcome `k` decodes to `decode[k]`; `None` is unidentified.
    Classical { decode: Vec<Option<usize>> },
}

impl EstimationRule {
    pub fn kind(&self) -> EstimationKind {
        match self {
            Self::Quantum { .. } => EstimationKind::QuantumEstimate,
            Self::Classical { .. } => EstimationKind::ClassicalDecode,
        }
    }

    fn len(&self) -> usize {
        match self {
            Self::Quantum { estimates } => estimates.len(),
            Self::Classical { decode } => decode.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDevice", into = "RawDevice")]
pub struct RepeatingDevice {
    instrument: MeasurementInstrument,
    rule: EstimationRule,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDevice {
    instrument: MeasurementInstrument,
    rule: EstimationRule,
}

impl TryFrom<RawDevice> for RepeatingDevice {
    type Error = Error;

    fn try_from(raw: RawDevice) -> Result<Self> {
        Self::new(raw.instrument, raw.rule)
    }
}

impl From<RepeatingDevice> for RawDevice {
    fn from(d: RepeatingDevice) -> Self {
        Self {
            instrument: d.instrument,
            rule: d.rule,
        }
    }
}

/// Average fidelities of a device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub f: f64,
    pub g: f64,
    pub dim: usize,
    pub kind: EstimationKind,
}

impl TradeoffPoint {
    pub fn new(f: f64, g: f64, dim: usize, kind: EstimationKind) -> Result<Self> {
        for (name, v) in [("F", f), ("G", g)] {
            if !(-tol::STRUCTURAL..=1.0 + tol::STRUCTURAL).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if dim < 2 {
            return Err(Error::Dimension(format!("tradeoff point with d = {dim}")));
        }
        Ok(Self { f, g, dim, kind })
    }
}

/// Set of possible inputs for averaging.
#[derive(Debug, Clone, PartialEq)]
pub enum Alphabet {
    HaarUniform(usize),
    Discrete(Vec<(PureState, f64)>),
}

impl Alphabet {
    pub fn discrete(members: Vec<(PureState, f64)>) -> Result<Self> {
        let d = members
            .first()
            .map(|(s, _)| s.dim())
            .ok_or_else(|| Error::Encoding("empty alphabet".into()))?;
        if members.iter().any(|(s, _)| s.dim() != d) {
            return Err(Error::Dimension("alphabet states differ in dimension".into()));
        }
        check_distribution(members.iter().map(|(_, p)| *p), "alphabet weights")?;
        Ok(Self::Discrete(members))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::HaarUniform(d) => *d,
            Self::Discrete(m) => m[0].0.dim(),
        }
    }
}

fn check_distribution(p: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for x in p {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::Encoding(format!("{what}: negative or non-finite weight {x}")));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > tol::PROBABILITY_SUM {
        return Err(Error::Encoding(format!("{what} sum to {sum}, not 1")));
    }
    Ok(())
}

/// Classical symbols `b in 0..m` carried by ensembles of pure states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEncoding", into = "RawEncoding")]
pub struct ClassicalEncoding {
    table: Vec<Vec<(PureState, f64)>>,
    prior: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEncoding {
    table: Vec<Vec<(PureState, f64)>>,
    prior: Vec<f64>,
}

impl TryFrom<RawEncoding> for ClassicalEncoding {
    type Error = Error;

    fn try_from(raw: RawEncoding) -> Result<Self> {
        Self::new(raw.table, raw.prior)
    }
}

impl From<ClassicalEncoding> for RawEncoding {
    fn from(e: ClassicalEncoding) -> Self {
        Self {
            table: e.table,
            prior: e.prior,
        }
    }
}

impl ClassicalEncoding {
    pub fn new(table: Vec<Vec<(PureState, f64)>>, prior: Vec<f64>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::Encoding("no symbols".into()));
        }
        if table.len() != prior.len() {
            return Err(Error::Encoding(format!(
                "{} symbols but prior of length {}",
                table.len(),
                prior.len()
            )));
        }
        let d = table
            .iter()
            .flatten()
            .map(|(s, _)| s.dim())
            .next()
            .ok_or_else(|| Error::Encoding("no carrier states".into()))?;
        for (b, states) in table.iter().enumerate() {
            if states.is_empty() {
                return Err(Error::Encoding(format!("symbol {b} has no carrier states")));
            }
            if states.iter().any(|(s, _)| s.dim() != d) {
                return Err(Error::Dimension(format!("symbol {b} mixes carrier dimensions")));
            }
            check_distribution(states.iter().map(|(_, p)| *p), &format!("symbol {b} weights"))?;
        }
        check_distribution(prior.iter().copied(), "prior")?;
        Ok(Self { table, prior })
    }

    /// Uniform prior and uniform conditional weights.
    pub fn uniform(states: Vec<Vec<PureState>>) -> Result<Self> {
        let m = states.len();
        let table = states
            .into_iter()
            .map(|v| {
                let w = 1.0 / v.len().max(1) as f64;
                v.into_iter().map(|s| (s, w)).collect()
            })
            .collect();
        Self::new(table, vec![1.0 / m.max(1) as f64; m])
    }

    pub fn symbols(&self) -> usize {
        self.table.len()
    }

    pub fn dim(&self) -> usize {
        self.table[0][0].0.dim()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn states(&self, b: usize) -> &[(PureState, f64)] {
        &self.table[b]
    }

    pub fn table(&self) -> &[Vec<(PureState, f64)>] {
        &self.table
    }

    /// Every carrier as `(symbol, state, prior(b) * p(s|b))`.
    pub fn weighted(&self) -> impl Iterator<Item = (usize, &PureState, f64)> {
        self.table.iter().enumerate().flat_map(move |(b, states)| {
            states.iter().map(move |(s, p)| (b, s, self.prior[b] * p))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 0,
            workers: 1,
        }
    }
}

/// Averaged fidelities with their statistical uncertainty.
///
/// `exact` is set when the alphabet was discrete and the average is a
/// weighted sum rather than a sample mean; the standard errors are then zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub point: TradeoffPoint,
    pub f_std_err: f64,
    pub g_std_err: f64,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub exact: bool,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    f: f64,
    f2: f64,
    g: f64,
    g2: f64,
}

impl RepeatingDevice {
    pub fn new(instrument: MeasurementInstrument, rule: EstimationRule) -> Result<Self> {
        if rule.len() != instrument.outcomes() {
            return Err(Error::Config(format!(
                "rule covers {} outcomes, instrument has {}",
                rule.len(),
                instrument.outcomes()
            )));
        }
        if let EstimationRule::Quantum { estimates } = &rule {
            if let Some(k) = estimates.iter().position(|s| s.dim() != instrument.dim()) {
                return Err(Error::Dimension(format!("estimate {k} has the wrong dimension")));
            }
        }
        Ok(Self { instrument, rule })
    }

    pub fn instrument(&self) -> &MeasurementInstrument {
        &self.instrument
    }

    pub fn rule(&self) -> &EstimationRule {
        &self.rule
    }

    pub fn dim(&self) -> usize {
        self.instrument.dim()
    }

    pub fn kind(&self) -> EstimationKind {
        self.rule.kind()
    }

    /// Same instrument, classical decode rule.
    pub fn with_decode(&self, decode: Vec<Option<usize>>) -> Result<Self> {
        Self::new(self.instrument.clone(), EstimationRule::Classical { decode })
    }

    fn estimates(&self) -> Result<&[PureState]> {
        match &self.rule {
            EstimationRule::Quantum { estimates } => Ok(estimates),
            EstimationRule::Classical { .. } => Err(Error::RuleKind {
                expected: "a quantum-estimate rule",
            }),
        }
    }

    fn decode_map(&self) -> Result<&[Option<usize>]> {
        match &self.rule {
            EstimationRule::Classical { decode } => Ok(decode),
            EstimationRule::Quantum { .. } => Err(Error::RuleKind {
                expected: "a classical-decode rule",
            }),
        }
    }

    /// `F_psi = sum_k p_k |<psi|psi_k>|^2`
    pub fn transmission_fidelity(&self, psi: &PureState) -> Result<f64> {
        self.instrument
            .apply(psi)?
            .iter()
            .map(|o| Ok(o.probability * psi.overlap(&o.state)?))
            .sum()
    }

    /// `G_psi = sum_k p_k |<psi|phi_k>|^2`
    pub fn estimation_fidelity(&self, psi: &PureState) -> Result<f64> {
        let estimates = self.estimates()?;
        self.instrument
            .apply(psi)?
            .iter()
            .map(|o| Ok(o.probability * psi.overlap(&estimates[o.index])?))
            .sum()
    }

    /// Haar-averaged `(F, G)` in closed form.
    ///
    /// With `int dpsi (|psi><psi|)^{(x)2} = (I + SWAP) / (d(d+1))`:
    /// `F = sum_k (|tr M_k|^2 + tr Pi_k) / (d(d+1))` and
    /// `G = sum_k (tr Pi_k + <phi_k|Pi_k|phi_k>) / (d(d+1))`.
    pub fn average_fidelities_exact(&self) -> Result<TradeoffPoint> {
        let estimates = self.estimates()?;
        let d = self.dim();
        let norm = (d * (d + 1)) as f64;
        let mut f = 0.0;
        let mut g = 0.0;
        for (m, phi) in self.instrument.kraus().iter().zip(estimates) {
            let pi = m.gram();
            let tr_pi = pi.trace().re;
            f += m.trace().norm_sqr() + tr_pi;
            g += tr_pi + pi.sandwich(phi.amplitudes(), phi.amplitudes())?.re;
        }
        TradeoffPoint::new(f / norm, g / norm, d, EstimationKind::QuantumEstimate)
    }

    /// Sample-mean `(F, G)` over an alphabet. Haar alphabets are sampled
    /// with `cfg.workers` threads, worker `w` drawing from stream `w`;
    /// discrete alphabets are summed exactly.
    pub fn average_fidelities_mc(&self, alphabet: &Alphabet, cfg: &McConfig) -> Result<McEstimate> {
        self.estimates()?;
        let d = self.dim();
        if alphabet.dim() != d {
            return Err(Error::Dimension(format!(
                "alphabet of dim {} for a {d}-dimensional device",
                alphabet.dim()
            )));
        }
        match alphabet {
            Alphabet::Discrete(members) => {
                let mut f = 0.0;
                let mut g = 0.0;
                for (s, w) in members {
                    f += w * self.transmission_fidelity(s)?;
                    g += w * self.estimation_fidelity(s)?;
                }
                Ok(McEstimate {
                    point: TradeoffPoint::new(f, g, d, EstimationKind::QuantumEstimate)?,
                    f_std_err: 0.0,
                    g_std_err: 0.0,
                    samples: 0,
                    seed: cfg.seed,
                    workers: cfg.workers,
                    exact: true,
                })
            }
            Alphabet::HaarUniform(_) => self.haar_mc(cfg),
        }
    }

    fn haar_mc(&self, cfg: &McConfig) -> Result<McEstimate> {
        if cfg.samples == 0 {
            return Err(Error::Config("Monte Carlo needs at least one sample".into()));
        }
        let workers = cfg.workers.max(1);
        let d = self.dim();
        let n = cfg.samples;
        let chunk = |w: u64| n / workers as u64 + u64::from(w < n % workers as u64);

        let run = |w: usize| -> Result<Moments> {
            let mut rng = RngStream::new(cfg.seed, w as u64);
            let mut acc = Moments::default();
            for _ in 0..chunk(w as u64) {
                let psi = haar_sample(d, &mut rng)?;
                let f = self.transmission_fidelity(&psi)?;
                let g = self.estimation_fidelity(&psi)?;
                acc.f += f;
                acc.f2 += f * f;
                acc.g += g;
                acc.g2 += g * g;
            }
            Ok(acc)
        };

        let parts: Vec<Result<Moments>> = if workers == 1 {
            vec![run(0)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = (0..workers).map(|w| scope.spawn(move || run(w))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("Monte Carlo worker panicked"))
                    .collect()
            })
        };
        let mut total = Moments::default();
        for p in parts {
            let p = p?;
            total.f += p.f;
            total.f2 += p.f2;
            total.g += p.g;
            total.g2 += p.g2;
        }
        let nf = n as f64;
        let (f, g) = (total.f / nf, total.g / nf);
        let std_err = |mean: f64, sq: f64| {
            if n < 2 {
                return 0.0;
            }
            let var = ((sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        };
        Ok(McEstimate {
            point: TradeoffPoint::new(f, g, d, EstimationKind::QuantumEstimate)?,
            f_std_err: std_err(f, total.f2),
            g_std_err: std_err(g, total.g2),
            samples: n,
            seed: cfg.seed,
            workers,
            exact: false,
        })
    }

    /// `(F, G)` of a classical decoder over a discrete encoding.
    ///
    /// `G` is the probability of decoding the right symbol; an unidentified
    /// outcome is credited `1/m` for the reader's uniform guess. `F` is the
    /// carrier-weighted average of the pointwise transmission fidelity.
    pub fn classical_estimation_fidelity(&self, enc: &ClassicalEncoding) -> Result<TradeoffPoint> {
        let decode = self.decode_map()?;
        let d = self.dim();
        if enc.dim() != d {
            return Err(Error::Dimension(format!(
                "encoding of dim {} for a {d}-dimensional device",
                enc.dim()
            )));
        }
        let m = enc.symbols();
        if let Some(bad) = decode.iter().flatten().find(|&&b| b >= m) {
            return Err(Error::Encoding(format!("decode target {bad} out of range for {m} symbols")));
        }
        let guess = 1.0 / m as f64;
        let mut f = 0.0;
        let mut g = 0.0;
        for (b, s, w) in enc.weighted() {
            let probs = self.instrument.probabilities(s)?;
            let correct: f64 = probs
                .iter()
                .zip(decode)
                .map(|(p, target)| match target {
                    Some(t) if *t == b => *p,
                    Some(_) => 0.0,
                    None => guess * p,
                })
                .sum();
            g += w * correct;
            f += w * self.transmission_fidelity(s)?;
        }
        TradeoffPoint::new(f, g, d, EstimationKind::ClassicalDecode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::linalg::C64;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    fn zero() -> PureState {
        PureState::basis(2, 0).unwrap()
    }

    fn one() -> PureState {
        PureState::basis(2, 1).unwrap()
    }

    fn plus() -> PureState {
        PureState::real_qubit(FRAC_PI_4)
    }

    fn basis_instrument() -> MeasurementInstrument {
        MeasurementInstrument::projective(&[zero(), one()]).unwrap()
    }

    #[test]
    fn identity_instrument_passes_state_through() {
        let instr = MeasurementInstrument::identity(2).unwrap();
        let out = instr.apply(&plus()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].index, 0);
        assert_abs_diff_eq!(out[0].probability, 1.0, epsilon = 1e-15);
        assert!((out[0].state.overlap(&plus()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn basis_measurement_of_plus() {
        let out = basis_instrument().apply(&plus()).unwrap();
        assert_eq!(out.len(), 2);
        assert_abs_diff_eq!(out[0].probability, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1].probability, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out[0].state.overlap(&zero()).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1].state.overlap(&one()).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn breidbart_measurement_of_zero() {
        let dev = BuiltinDevice::Breidbart.build().unwrap();
        let out = dev.instrument().apply(&zero()).unwrap();
        let c2 = FRAC_PI_8.cos().powi(2);
        assert_abs_diff_eq!(out[0].probability, c2, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1].probability, 1.0 - c2, epsilon = 1e-15);
        assert_abs_diff_eq!(out[0].probability, 0.85355, epsilon = 1e-5);
        let b0 = PureState::real_qubit(FRAC_PI_8);
        assert_abs_diff_eq!(out[0].state.overlap(&b0).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn negligible_outcomes_are_dropped() {
        let out = basis_instrument().apply(&zero()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].index, 0);
    }

    #[test]
    fn incomplete_instrument_rejected() {
        let half = ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0));
        assert!(matches!(
            MeasurementInstrument::new(vec![half]),
            Err(Error::Completeness { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let three = PureState::basis(3, 0).unwrap();
        assert!(matches!(basis_instrument().apply(&three), Err(Error::Dimension(_))));
    }

    #[test]
    fn pointwise_transmission() {
        let id = BuiltinDevice::DoNothing { d: 2, guess: 0 }.build().unwrap();
        assert_abs_diff_eq!(id.transmission_fidelity(&plus()).unwrap(), 1.0, epsilon = 1e-15);

        // Outcome enumeration: 0.5 * 0.5 + 0.5 * 0.5.
        let keep = BuiltinDevice::MeasureKeep { d: 2 }.build().unwrap();
        assert_abs_diff_eq!(keep.transmission_fidelity(&plus()).unwrap(), 0.5, epsilon = 1e-15);

        let breid = BuiltinDevice::Breidbart.build().unwrap();
        let expected = FRAC_PI_8.cos().powi(4) + FRAC_PI_8.sin().powi(4);
        let f = breid.transmission_fidelity(&zero()).unwrap();
        assert_abs_diff_eq!(f, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(f, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn pointwise_estimation() {
        let id = BuiltinDevice::DoNothing { d: 2, guess: 0 }.build().unwrap();
        assert_abs_diff_eq!(id.estimation_fidelity(&zero()).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(id.estimation_fidelity(&one()).unwrap(), 0.0, epsilon = 1e-15);
        let mr = BuiltinDevice::MeasureReprepare { d: 2 }.build().unwrap();
        assert_abs_diff_eq!(mr.estimation_fidelity(&plus()).unwrap(), 0.5, epsilon = 1e-15);
        let breid = BuiltinDevice::Breidbart.build().unwrap();
        assert!(matches!(breid.estimation_fidelity(&zero()), Err(Error::RuleKind { .. })));
    }

    #[test]
    fn exact_extremes() {
        for d in 2..=6 {
            let p = BuiltinDevice::DoNothing { d, guess: 0 }.build().unwrap();
            let p = p.average_fidelities_exact().unwrap();
            assert_abs_diff_eq!(p.f, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(p.g, 1.0 / d as f64, epsilon = 1e-12);

            let q = BuiltinDevice::MeasureReprepare { d }.build().unwrap();
            let q = q.average_fidelities_exact().unwrap();
            let v = 2.0 / (d as f64 + 1.0);
            assert_abs_diff_eq!(q.f, v, epsilon = 1e-12);
            assert_abs_diff_eq!(q.g, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_weak_family_point() {
        let p = BuiltinDevice::WeakFamily { lambda: 0.3 }.build().unwrap();
        let p = p.average_fidelities_exact().unwrap();
        assert_abs_diff_eq!(p.f, 14.0 / 15.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.g, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn classical_rule_rejected_by_exact_average() {
        let breid = BuiltinDevice::Breidbart.build().unwrap();
        assert!(matches!(breid.average_fidelities_exact(), Err(Error::RuleKind { .. })));
        let mr = BuiltinDevice::MeasureReprepare { d: 2 }.build().unwrap();
        let enc = BuiltinEncoding::Bb84.build().unwrap();
        assert!(matches!(mr.classical_estimation_fidelity(&enc), Err(Error::RuleKind { .. })));
    }

    #[test]
    fn mc_extremes() {
        let cfg = McConfig {
            samples: 100_000,
            seed: 3,
            workers: 1,
        };
        let id = BuiltinDevice::DoNothing { d: 2, guess: 0 }.build().unwrap();
        let est = id.average_fidelities_mc(&Alphabet::HaarUniform(2), &cfg).unwrap();
        assert_eq!(est.point.f, 1.0);
        assert!((est.point.g - 0.5).abs() < 0.005);

        for (d, v) in [(2usize, 2.0 / 3.0), (3, 0.5)] {
            let mr = BuiltinDevice::MeasureReprepare { d }.build().unwrap();
            let est = mr.average_fidelities_mc(&Alphabet::HaarUniform(d), &cfg).unwrap();
            assert!((est.point.f - v).abs() < 0.005, "d={d} F={}", est.point.f);
            assert!((est.point.g - v).abs() < 0.005, "d={d} G={}", est.point.g);
        }
    }

    #[test]
    fn mc_is_deterministic_per_worker_count() {
        let dev = BuiltinDevice::WeakFamily { lambda: 0.2 }.build().unwrap();
        let cfg = McConfig {
            samples: 5_000,
            seed: 9,
            workers: 3,
        };
        let a = dev.average_fidelities_mc(&Alphabet::HaarUniform(2), &cfg).unwrap();
        let b = dev.average_fidelities_mc(&Alphabet::HaarUniform(2), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.workers, 3);
    }

    #[test]
    fn mc_discrete_alphabet_is_exact_sum() {
        let mr = BuiltinDevice::MeasureReprepare { d: 2 }.build().unwrap();
        let alph = Alphabet::discrete(vec![(zero(), 0.5), (plus(), 0.5)]).unwrap();
        let est = mr.average_fidelities_mc(&alph, &McConfig::default()).unwrap();
        assert!(est.exact);
        assert_abs_diff_eq!(est.point.f, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(est.point.g, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn classical_fidelities_of_headline_examples() {
        let bb84 = BuiltinEncoding::Bb84.build().unwrap();
        let p = BuiltinDevice::Breidbart.build().unwrap().classical_estimation_fidelity(&bb84).unwrap();
        assert_abs_diff_eq!(p.g, FRAC_PI_8.cos().powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(p.f, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(p.g - p.f, 0.10355, epsilon = 1e-5);

        let simp = BuiltinEncoding::Simplified.build().unwrap();
        let keep = BuiltinDevice::MeasureKeep { d: 2 }.build().unwrap();
        let p = keep.classical_estimation_fidelity(&simp).unwrap();
        // Enumeration over the four carriers: p(correct) = 3/4 each,
        // F_s = (3/4)^2 + (1/4)^2 = 5/8 each.
        assert_abs_diff_eq!(p.g, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(p.f, 0.625, epsilon = 1e-12);

        let orth = BuiltinEncoding::Orthogonal { d: 2 }.build().unwrap();
        let p = keep.classical_estimation_fidelity(&orth).unwrap();
        assert_abs_diff_eq!(p.g, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.f, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unidentified_outcomes_score_a_fair_guess() {
        let id = BuiltinDevice::DoNothing { d: 2, guess: 0 }.build().unwrap();
        let guesser = id.with_decode(vec![None]).unwrap();
        let enc = BuiltinEncoding::Bb84.build().unwrap();
        let p = guesser.classical_estimation_fidelity(&enc).unwrap();
        assert_abs_diff_eq!(p.g, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.f, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn decode_out_of_range_rejected() {
        let keep = BuiltinDevice::MeasureKeep { d: 2 }.build().unwrap();
        let bad = keep.with_decode(vec![Some(0), Some(5)]).unwrap();
        let enc = BuiltinEncoding::Bb84.build().unwrap();
        assert!(matches!(bad.classical_estimation_fidelity(&enc), Err(Error::Encoding(_))));
    }

    #[test]
    fn encoding_validation() {
        assert!(ClassicalEncoding::new(vec![vec![(zero(), 0.7)]], vec![1.0]).is_err());
        assert!(ClassicalEncoding::new(vec![vec![(zero(), 1.0)]], vec![0.5]).is_err());
        assert!(Alphabet::discrete(vec![(zero(), 0.5), (plus(), 0.6)]).is_err());
    }

    #[test]
    fn rule_outcome_count_must_match() {
        let instr = basis_instrument();
        assert!(RepeatingDevice::new(instr, EstimationRule::Classical { decode: vec![Some(0)] }).is_err());
    }

    #[test]
    fn povm_default_kraus_is_square_root() {
        let pi0 = ComplexMatrix::from_real_rows(&[&[0.8, 0.0], &[0.0, 0.3]]).unwrap();
        let pi1 = ComplexMatrix::from_real_rows(&[&[0.2, 0.0], &[0.0, 0.7]]).unwrap();
        let instr = MeasurementInstrument::from_povm(&[pi0.clone(), pi1]).unwrap();
        assert!(instr.povm_element(0).max_abs_diff(&pi0) < 1e-12);
        assert_abs_diff_eq!(instr.kraus()[0].get(0, 0).re, 0.8f64.sqrt(), epsilon = 1e-12);
    }
}
