//! The acceptance criteria as a library routine.
//!
//! Each criterion is a list of individual [`Check`]s. A check keeps its raw
//! error and the scale it is judged on, so a failure can be re-judged at
//! the default tolerances: if it would pass there, it is reported as a
//! tolerance failure rather than a correctness failure.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundId};
use crate::bridge::{device_to_seal, seal_to_device, verify_equivalence};
use crate::device::{
    random_device, Alphabet, BuiltinDevice, BuiltinEncoding, McConfig,
};
use crate::error::Result;
use crate::frontier::{self, BuiltinFamily, OptimizerConfig};
use crate::rng::RngStream;
use crate::seal::BuiltinSeal;
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Replaces the stated tolerance of every closed-form check when set.
    pub exact: Option<f64>,
    /// Allowed deviation of Monte Carlo checks, in standard errors, on top
    /// of a rounding floor of `1e-12` for zero-variance estimates.
    pub mc_sigmas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact: None,
            mc_sigmas: tol::MC_SIGMAS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum CheckMode {
    /// Closed-form value with an absolute tolerance.
    Exact { stated: f64 },
    /// Sample mean compared in units of its standard error.
    Mc { std_err: f64, samples: u64 },
    /// Result of a numerical search, judged on its own stated tolerance.
    Search { stated: f64 },
    /// A yes/no property.
    Logical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub mode: CheckMode,
    /// Absolute deviation from the oracle (0 or 1 for logical checks).
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn judge(&self, t: &Tolerances) -> (f64, bool) {
        match self.mode {
            CheckMode::Exact { stated } => {
                let tol = t.exact.unwrap_or(stated);
                (tol, self.error <= tol)
            }
            CheckMode::Mc { std_err, .. } => {
                let tol = t.mc_sigmas * std_err + tol::EXACT_CHECK;
                (tol, self.error <= tol)
            }
            CheckMode::Search { stated } => (stated, self.error <= stated),
            CheckMode::Logical => (0.0, self.error == 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionMode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// Passes at the default tolerances.
    Tolerance,
    Correctness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub mode: CriterionMode,
    pub pass: bool,
    pub failure: Option<FailureKind>,
    pub checks: Vec<Check>,
}

impl CriterionResult {
    /// One line summary, e.g. `PASS  3  weak family saturation [mc]`.
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let mode = match self.mode {
            CriterionMode::Exact => "exact",
            CriterionMode::Mc => "mc",
        };
        let mut s = format!("{status} {:>2}  {} [{mode}]", self.id, self.title);
        if let Some(kind) = self.failure {
            let worst = self.checks.iter().find(|c| !c.pass).expect("a failing check");
            let kind = match kind {
                FailureKind::Tolerance => "tolerance",
                FailureKind::Correctness => "correctness",
            };
            s.push_str(&format!(
                "  ({kind}: {} error {:.3e} > {:.3e})",
                worst.label, worst.error, worst.tolerance
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub seed: u64,
    pub samples: u64,
    pub workers: usize,
    pub tolerances: Tolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 100_000,
            workers: 1,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub criteria: Vec<CriterionResult>,
    pub all_pass: bool,
}

struct Collector {
    checks: Vec<Check>,
}

impl Collector {
    fn new() -> Self {
        Self { checks: Vec::new() }
    }

    fn push(&mut self, label: String, mode: CheckMode, error: f64) {
        self.checks.push(Check {
            label,
            mode,
            error,
            tolerance: 0.0,
            pass: false,
        });
    }

    fn exact(&mut self, label: impl Into<String>, got: f64, want: f64, stated: f64) {
        self.push(label.into(), CheckMode::Exact { stated }, abs_err(got, want));
    }

    fn mc(&mut self, label: impl Into<String>, got: f64, want: f64, std_err: f64, samples: u64) {
        self.push(label.into(), CheckMode::Mc { std_err, samples }, abs_err(got, want));
    }

    fn search(&mut self, label: impl Into<String>, got: f64, want: f64, stated: f64) {
        self.push(label.into(), CheckMode::Search { stated }, abs_err(got, want));
    }

    fn logical(&mut self, label: impl Into<String>, ok: bool) {
        self.push(label.into(), CheckMode::Logical, if ok { 0.0 } else { 1.0 });
    }

    fn finish(mut self, id: u8, title: &str, t: &Tolerances) -> CriterionResult {
        let defaults = Tolerances::default();
        let mut pass = true;
        let mut at_default = true;
        for c in &mut self.checks {
            let (tol, ok) = c.judge(t);
            c.tolerance = tol;
            c.pass = ok;
            pass &= ok;
            at_default &= c.judge(&defaults).1;
        }
        let mode = if self.checks.iter().any(|c| matches!(c.mode, CheckMode::Mc { .. })) {
            CriterionMode::Mc
        } else {
            CriterionMode::Exact
        };
        let failure = match (pass, at_default) {
            (true, _) => None,
            (false, true) => Some(FailureKind::Tolerance),
            (false, false) => Some(FailureKind::Correctness),
        };
        CriterionResult {
            id,
            title: title.to_string(),
            mode,
            pass,
            failure,
            checks: self.checks,
        }
    }
}

fn abs_err(got: f64, want: f64) -> f64 {
    let e = (got - want).abs();
    if e.is_nan() {
        f64::INFINITY
    } else {
        e
    }
}

fn mc_config(cfg: &VerifyConfig, stream: u64) -> McConfig {
    McConfig {
        samples: cfg.samples,
        seed: cfg.seed.wrapping_add(stream),
        workers: cfg.workers,
    }
}

/// `(F, G)` of the qubit weak family in closed form.
pub fn weak_closed_form(lambda: f64) -> (f64, f64) {
    (
        (2.0 + 2.0 * (0.25 - lambda * lambda).max(0.0).sqrt()) / 3.0,
        0.5 + lambda / 3.0,
    )
}

/// Largest `G` of the weak family at transmission fidelity `f`.
pub fn weak_inverse(f: f64) -> f64 {
    let x = (3.0 * f - 2.0) / 2.0;
    0.5 + (0.25 - x * x).max(0.0).sqrt() / 3.0
}

fn criterion_1(t: &Tolerances) -> Result<CriterionResult> {
    let mut c = Collector::new();
    for d in 2..=6 {
        let p = BuiltinDevice::DoNothing { d, guess: 0 }.build()?.average_fidelities_exact()?;
        c.exact(format!("F d={d}"), p.f, 1.0, 1e-12);
        c.exact(format!("G d={d}"), p.g, 1.0 / d as f64, 1e-12);
    }
    Ok(c.finish(1, "do-nothing device: F = 1, G = 1/d", t))
}

fn criterion_2(t: &Tolerances) -> Result<CriterionResult> {
    let mut c = Collector::new();
    for d in 2..=6 {
        let p = BuiltinDevice::MeasureReprepare { d }.build()?.average_fidelities_exact()?;
        let want = 2.0 / (d as f64 + 1.0);
        c.exact(format!("F d={d}"), p.f, want, 1e-12);
        c.exact(format!("G d={d}"), p.g, want, 1e-12);
    }
    Ok(c.finish(2, "measure-and-reprepare: F = G = 2/(d+1)", t))
}

fn criterion_3(cfg: &VerifyConfig) -> Result<CriterionResult> {
    let mut c = Collector::new();
    for i in 0..=10 {
        let lambda = 0.05 * i as f64;
        let dev = BuiltinDevice::WeakFamily { lambda }.build()?;
        let p = dev.average_fidelities_exact()?;
        c.exact(
            format!("ellipse lambda={lambda:.2}"),
            bounds::tradeoff_d2_lhs(p.f, p.g),
            1.0 / 9.0,
            1e-10,
        );
        let (f, g) = weak_closed_form(lambda);
        c.exact(format!("closed-form F lambda={lambda:.2}"), p.f, f, 1e-12);
        c.exact(format!("closed-form G lambda={lambda:.2}"), p.g, g, 1e-12);
        let mc = dev.average_fidelities_mc(&Alphabet::HaarUniform(2), &mc_config(cfg, i))?;
        c.mc(format!("mc F lambda={lambda:.2}"), mc.point.f, p.f, mc.f_std_err, mc.samples);
        c.mc(format!("mc G lambda={lambda:.2}"), mc.point.g, p.g, mc.g_std_err, mc.samples);
    }
    Ok(c.finish(3, "weak family saturates the qubit ellipse", &cfg.tolerances))
}

fn criterion_4(t: &Tolerances) -> Result<CriterionResult> {
    let mut c = Collector::new();
    let p = BuiltinDevice::Breidbart
        .build()?
        .classical_estimation_fidelity(&BuiltinEncoding::Bb84.build()?)?;
    let g = FRAC_PI_8.cos().powi(2);
    c.exact("G", p.g, g, 1e-12);
    c.exact("F", p.f, 0.75, 1e-12);
    c.exact("F = 1 - 2G(1-G)", p.f, 1.0 - 2.0 * g * (1.0 - g), 1e-12);
    c.exact("G - F", p.g - p.f, 0.1035533905932737, 1e-12);
    let r = bounds::evaluate(p.into(), 2, &[BoundId::GMinusFEighth, BoundId::TradeoffD2])?;
    let eighth = r.get(BoundId::GMinusFEighth).expect("requested");
    let ellipse = r.get(BoundId::TradeoffD2).expect("requested");
    c.logical("G - F < 1/8", eighth.satisfied && eighth.margin > 0.0);
    c.exact("ellipse lhs", ellipse.lhs, 1.0 / 144.0 + 0.5, 1e-12);
    c.logical("ellipse reported violated", !ellipse.satisfied);
    c.logical("G >= 2/3 witness", bounds::violation_witness_g(p.g));
    Ok(c.finish(4, "Breidbart on BB84 violates the quantum tradeoff", t))
}

fn criterion_5(t: &Tolerances) -> Result<CriterionResult> {
    let mut c = Collector::new();
    let p = BuiltinSeal::OptimalQbs.build()?.point();
    c.exact("alpha", p.alpha, 0.75, 1e-12);
    c.exact("beta", p.beta, 0.375, 1e-12);
    c.exact("alpha + beta", p.alpha + p.beta, 9.0 / 8.0, 1e-12);
    let r = bounds::evaluate(p.into(), 2, &[BoundId::BetaHalf, BoundId::AlphaBetaNineEighths])?;
    c.logical("beta <= 1/2", r.get(BoundId::BetaHalf).expect("requested").satisfied);
    let ab = r.get(BoundId::AlphaBetaNineEighths).expect("requested");
    c.logical("alpha + beta <= 9/8", ab.satisfied);
    c.exact("alpha + beta margin", ab.margin, 0.0, 1e-12);
    Ok(c.finish(5, "optimal bit seal: alpha = 3/4, beta = 3/8", t))
}

fn criterion_6(t: &Tolerances) -> Result<CriterionResult> {
    let mut c = Collector::new();
    let seal = BuiltinSeal::SimplifiedSeal.build()?.point();
    c.exact("seal alpha", seal.alpha, 0.75, 1e-12);
    c.exact("seal beta", seal.beta, 0.375, 1e-12);
    let p = BuiltinDevice::MeasureKeep { d: 2 }
        .build()?
        .classical_estimation_fidelity(&BuiltinEncoding::Simplified.build()?)?;
    c.exact("device G", p.g, 0.75, 1e-12);
    c.exact("device F", p.f, 0.625, 1e-12);
    c.exact("G - F", p.g - p.f, 0.125, 1e-12);
    let r = bounds::evaluate(p.into(), 2, &[BoundId::GMinusFEighth])?;
    let e = r.get(BoundId::GMinusFEighth).expect("requested");
    c.logical("G - F <= 1/8", e.satisfied);
    c.exact("G - F margin", e.margin, 0.0, 1e-12);
    Ok(c.finish(6, "simplified example saturates G - F <= 1/8", t))
}

fn criterion_7(t: &Tolerances) -> Result<CriterionResult> {
    let mut c = Collector::new();
    let p = BuiltinSeal::PerfectSeal.build()?.point();
    c.exact("alpha", p.alpha, 1.0, 1e-12);
    c.exact("beta", p.beta, 0.0, 1e-12);
    Ok(c.finish(7, "perfect seal: alpha = 1, beta = 0", t))
}

/// Every built-in classical-decode device paired with every built-in
/// encoding of matching dimension.
pub fn builtin_classical_pairs() -> Vec<(BuiltinDevice, BuiltinEncoding)> {
    let qubit_devices = [
        BuiltinDevice::MeasureKeep { d: 2 },
        BuiltinDevice::Breidbart,
        BuiltinDevice::BasisAngle { angle: 0.0 },
        BuiltinDevice::BasisAngle { angle: FRAC_PI_8 / 2.0 },
        BuiltinDevice::BasisAngle { angle: FRAC_PI_4 },
    ];
    let qubit_encodings = [
        BuiltinEncoding::Bb84,
        BuiltinEncoding::Simplified,
        BuiltinEncoding::Orthogonal { d: 2 },
    ];
    let mut pairs: Vec<_> = qubit_devices
        .iter()
        .flat_map(|&dev| qubit_encodings.iter().map(move |&enc| (dev, enc)))
        .collect();
    pairs.extend((3..=6).map(|d| (BuiltinDevice::MeasureKeep { d }, BuiltinEncoding::Orthogonal { d })));
    pairs
}

fn criterion_8(t: &Tolerances) -> Result<CriterionResult> {
    let mut c = Collector::new();
    for (dev, enc) in builtin_classical_pairs() {
        let r = verify_equivalence(&dev.build()?, &enc.build()?, 1e-12)?;
        c.exact(format!("F vs 1-beta {dev:?}/{enc:?}"), r.f_gap, 0.0, 1e-12);
        c.exact(format!("G vs alpha {dev:?}/{enc:?}"), r.g_gap, 0.0, 1e-12);
    }
    for seal in [BuiltinSeal::PerfectSeal, BuiltinSeal::SimplifiedSeal] {
        let p = seal.build()?;
        let (dev, enc) = seal_to_device(&p)?;
        let back = device_to_seal(&dev, &enc)?.point();
        let orig = p.point();
        c.exact(format!("round trip alpha {seal:?}"), back.alpha, orig.alpha, 1e-12);
        c.exact(format!("round trip beta {seal:?}"), back.beta, orig.beta, 1e-12);
    }
    c.logical(
        "entangled seal refused",
        seal_to_device(&BuiltinSeal::OptimalQbs.build()?).is_err(),
    );
    Ok(c.finish(8, "device and seal pictures agree", t))
}

fn criterion_9(t: &Tolerances) -> Result<CriterionResult> {
    let mut c = Collector::new();
    for d in 2..=8 {
        let s = bounds::quantum_seal_bound_scenario(d)?;
        let df = d as f64;
        c.exact(format!("beta d={d}"), s.beta, (df - 1.0) / (df + 1.0), 1e-12);
        let e = s.report.get(BoundId::QuantumSealD).expect("always evaluated");
        c.exact(format!("saturation margin d={d}"), e.margin, 0.0, 1e-12);
        if d == 2 {
            c.exact("beta d=2 is 1/3", s.beta, 1.0 / 3.0, 1e-12);
            let e2 = s.report.get(BoundId::QuantumSealD2).expect("evaluated at d=2");
            c.exact("qubit saturation margin", e2.margin, 0.0, 1e-12);
        }
    }
    Ok(c.finish(9, "quantum-data seal: beta = (d-1)/(d+1)", t))
}

fn criterion_10(cfg: &VerifyConfig) -> Result<CriterionResult> {
    let mut c = Collector::new();
    let mut rng = RngStream::new(cfg.seed, 1_000);
    for i in 0..20u64 {
        let d = 2 + (i % 3) as usize;
        let outcomes = 2 + (i % 4) as usize;
        let dev = random_device(d, outcomes, &mut rng)?;
        let exact = dev.average_fidelities_exact()?;
        let mc = dev.average_fidelities_mc(&Alphabet::HaarUniform(d), &mc_config(cfg, 100 + i))?;
        c.mc(format!("F device {i} d={d}"), mc.point.f, exact.f, mc.f_std_err, mc.samples);
        c.mc(format!("G device {i} d={d}"), mc.point.g, exact.g, mc.g_std_err, mc.samples);
    }
    Ok(c.finish(10, "Monte Carlo agrees with exact averages", &cfg.tolerances))
}

fn criterion_11(t: &Tolerances) -> Result<CriterionResult> {
    let mut c = Collector::new();
    let weak = BuiltinFamily::WeakFamily.build()?;
    let opt = OptimizerConfig::default();
    for i in 0..10 {
        let f_min = 2.0 / 3.0 + i as f64 / 27.0;
        let r = frontier::maximize_g_at_f(&weak, f_min, &opt)?;
        c.search(format!("max G at F >= {f_min:.4}"), r.point.g, weak_inverse(f_min), 1e-5);
        c.logical(format!("feasible at F >= {f_min:.4}"), r.point.f >= f_min - tol::BOUND_MARGIN);
    }
    let grid = 101;
    let sweep = frontier::sweep(&BuiltinFamily::BreidbartAngle.build()?, &[grid])?;
    let best = sweep
        .points
        .iter()
        .max_by(|a, b| a.point.g.total_cmp(&b.point.g))
        .expect("nonempty sweep");
    let resolution = FRAC_PI_4 / (grid - 1) as f64;
    c.logical(
        "Breidbart-angle argmax within one grid step of pi/8",
        (best.theta[0] - FRAC_PI_8).abs() <= resolution,
    );
    Ok(c.finish(11, "frontier search recovers the weak-family inverse", t))
}

/// Run all criteria in order.
pub fn run_all(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let t = &cfg.tolerances;
    let criteria = vec![
        criterion_1(t)?,
        criterion_2(t)?,
        criterion_3(cfg)?,
        criterion_4(t)?,
        criterion_5(t)?,
        criterion_6(t)?,
        criterion_7(t)?,
        criterion_8(t)?,
        criterion_9(t)?,
        criterion_10(cfg)?,
        criterion_11(t)?,
    ];
    let all_pass = criteria.iter().all(|c| c.pass);
    Ok(VerifyReport {
        config: *cfg,
        criteria,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_invert() {
        for i in 0..=10 {
            let lambda = 0.05 * i as f64;
            let (f, g) = weak_closed_form(lambda);
            assert!((weak_inverse(f) - g).abs() < 1e-9);
        }
    }

    #[test]
    fn tightened_mc_tolerance_is_a_tolerance_failure() {
        let cfg = VerifyConfig {
            samples: 2_000,
            tolerances: Tolerances {
                exact: None,
                mc_sigmas: 1e-15,
            },
            ..VerifyConfig::default()
        };
        let r = criterion_10(&cfg).unwrap();
        assert!(!r.pass);
        assert_eq!(r.failure, Some(FailureKind::Tolerance));
        assert!(r.line().starts_with("FAIL 10"));
        assert!(r.line().contains("tolerance"));
    }

    #[test]
    fn exact_criteria_ignore_seed() {
        let t = Tolerances::default();
        let a = criterion_2(&t).unwrap();
        let b = criterion_2(&t).unwrap();
        assert_eq!(a, b);
        assert!(a.pass);
    }

    #[test]
    fn pairs_cover_every_qubit_encoding() {
        let pairs = builtin_classical_pairs();
        for enc in [BuiltinEncoding::Bb84, BuiltinEncoding::Simplified] {
            assert!(pairs.iter().any(|(_, e)| *e == enc));
        }
    }
}
