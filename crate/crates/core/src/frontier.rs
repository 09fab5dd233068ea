//! Mapping the achievable `(F, G)` region.
//!
//! A [`DeviceFamily`] is a parameterised device constructor. Families can be
//! swept on a grid (every point evaluated exactly, then the upper envelope
//! extracted) or searched for the largest `G` subject to a floor on `F`
//! with grid seeding followed by compass search.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundId, BoundReport};
use crate::device::{BuiltinDevice, BuiltinEncoding, ClassicalEncoding, EstimationKind, RepeatingDevice, TradeoffPoint};
use crate::error::{Error, Result};
use crate::tol;

/// Width of the `F` buckets used when extracting the envelope.
pub const BUCKET_WIDTH: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl ParamRange {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        Self {
            name: name.to_string(),
            lo,
            hi,
        }
    }

    fn span(&self) -> f64 {
        self.hi - self.lo
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    fn grid(&self, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![self.lo];
        }
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.hi
                } else {
                    self.lo + i as f64 * self.span() / (n - 1) as f64
                }
            })
            .collect()
    }
}

type Builder = dyn Fn(&[f64]) -> Result<RepeatingDevice> + Send + Sync;

#[derive(Clone)]
pub struct DeviceFamily {
    name: String,
    params: Vec<ParamRange>,
    dim: usize,
    encoding: Option<ClassicalEncoding>,
    builder: Arc<Builder>,
}

impl fmt::Debug for DeviceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeviceFamily")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("dim", &self.dim)
            .field("kind", &self.kind())
            .finish()
    }
}

impl DeviceFamily {
    /// Quantum-estimate family, evaluated with exact Haar averages.
    pub fn quantum(
        name: &str,
        params: Vec<ParamRange>,
        dim: usize,
        builder: impl Fn(&[f64]) -> Result<RepeatingDevice> + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::new(name, params, dim, None, Arc::new(builder))
    }

    /// Classical-decode family read against a fixed encoding.
    pub fn classical(
        name: &str,
        params: Vec<ParamRange>,
        encoding: ClassicalEncoding,
        builder: impl Fn(&[f64]) -> Result<RepeatingDevice> + Send + Sync + 'static,
    ) -> Result<Self> {
        let dim = encoding.dim();
        Self::new(name, params, dim, Some(encoding), Arc::new(builder))
    }

    fn new(
        name: &str,
        params: Vec<ParamRange>,
        dim: usize,
        encoding: Option<ClassicalEncoding>,
        builder: Arc<Builder>,
    ) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::Config(format!("family {name} has no parameters")));
        }
        if let Some(p) = params.iter().find(|p| !(p.lo.is_finite() && p.hi.is_finite() && p.lo <= p.hi)) {
            return Err(Error::Config(format!("family {name}: bad range for {}", p.name)));
        }
        Ok(Self {
            name: name.to_string(),
            params,
            dim,
            encoding,
            builder,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[ParamRange] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> EstimationKind {
        if self.encoding.is_some() {
            EstimationKind::ClassicalDecode
        } else {
            EstimationKind::QuantumEstimate
        }
    }

    pub fn build(&self, theta: &[f64]) -> Result<RepeatingDevice> {
        if theta.len() != self.params.len() {
            return Err(Error::Dimension(format!(
                "family {} takes {} parameters, got {}",
                self.name,
                self.params.len(),
                theta.len()
            )));
        }
        (self.builder)(theta).map_err(|e| self.wrap(theta, e))
    }

    fn wrap(&self, theta: &[f64], e: Error) -> Error {
        Error::Family {
            family: self.name.clone(),
            theta: theta.to_vec(),
            source: Box::new(e),
        }
    }

    /// Exact `(F, G)` at `theta`.
    pub fn evaluate(&self, theta: &[f64]) -> Result<TradeoffPoint> {
        let dev = self.build(theta)?;
        let point = match &self.encoding {
            None => dev.average_fidelities_exact(),
            Some(enc) => dev.classical_estimation_fidelity(enc),
        };
        point.map_err(|e| self.wrap(theta, e))
    }
}

/// Built-in families, addressable by name from configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinFamily {
    /// Qubit weak measurement, `lambda` in `[0, 1/2]`.
    WeakFamily,
    /// `d`-dimensional weak measurement, `strength` in `[0, 1]`.
    DiagonalWeak { d: usize },
    /// Real-basis qubit measurement on the BB84 encoding, angle in `[0, pi/4]`.
    BreidbartAngle,
    /// Real-basis qubit measurement on a chosen encoding, angle in `[0, pi/4]`.
    BasisAngle { encoding: BuiltinEncoding },
}

impl BuiltinFamily {
    pub fn names() -> &'static [&'static str] {
        &["weak_family", "diagonal_weak", "breidbart_angle", "basis_angle"]
    }

    pub fn build(&self) -> Result<DeviceFamily> {
        match *self {
            Self::WeakFamily => DeviceFamily::quantum("weak_family", vec![ParamRange::new("lambda", 0.0, 0.5)], 2, |t| {
                BuiltinDevice::WeakFamily { lambda: t[0] }.build()
            }),
            Self::DiagonalWeak { d } => {
                if !(2..=tol::MAX_DIM).contains(&d) {
                    return Err(Error::Config(format!("diagonal_weak dimension {d} unsupported")));
                }
                DeviceFamily::quantum(
                    &format!("diagonal_weak_d{d}"),
                    vec![ParamRange::new("strength", 0.0, 1.0)],
                    d,
                    move |t| BuiltinDevice::DiagonalWeak { d, strength: t[0] }.build(),
                )
            }
            Self::BreidbartAngle => DeviceFamily::classical(
                "breidbart_angle",
                vec![ParamRange::new("angle", 0.0, FRAC_PI_4)],
                BuiltinEncoding::Bb84.build()?,
                |t| BuiltinDevice::BasisAngle { angle: t[0] }.build(),
            ),
            Self::BasisAngle { encoding } => {
                let enc = encoding.build()?;
                if enc.dim() != 2 {
                    return Err(Error::Config("basis_angle needs a qubit encoding".into()));
                }
                DeviceFamily::classical(
                    &format!("basis_angle_{}", serde_name(&encoding)),
                    vec![ParamRange::new("angle", 0.0, FRAC_PI_4)],
                    enc,
                    |t| BuiltinDevice::BasisAngle { angle: t[0] }.build(),
                )
            }
        }
    }
}

fn serde_name(e: &BuiltinEncoding) -> &'static str {
    match e {
        BuiltinEncoding::Bb84 => "bb84",
        BuiltinEncoding::Simplified => "simplified",
        BuiltinEncoding::Orthogonal { .. } => "orthogonal",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub family: String,
    pub theta: Vec<f64>,
    pub point: TradeoffPoint,
}

#[cfg(test)]
fn dominates(q: &TradeoffPoint, p: &TradeoffPoint) -> bool {
    (q.f > p.f && q.g >= p.g) || (q.f >= p.f && q.g > p.g)
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// Indices of the upper envelope, sorted by increasing `F`.
///
/// First the non-dominated subset is taken; then within each `F` bucket of
/// width [`BUCKET_WIDTH`] only the point with the largest `G` survives (ties:
/// smaller `F`, then lexicographically smaller `theta`, then family name).
pub fn envelope(points: &[FrontierPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&points[a].point, &points[b].point);
        pb.f.total_cmp(&pa.f).then(pb.g.total_cmp(&pa.g))
    });

    let mut front = Vec::new();
    let mut best_g_at_higher_f = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        let f = points[order[i]].point.f;
        let mut j = i;
        while j < order.len() && points[order[j]].point.f == f {
            j += 1;
        }
        let group_max = points[order[i]].point.g;
        if group_max > best_g_at_higher_f {
            front.extend(order[i..j].iter().copied().filter(|&k| points[k].point.g == group_max));
        }
        best_g_at_higher_f = best_g_at_higher_f.max(group_max);
        i = j;
    }

    let mut buckets: BTreeMap<i64, usize> = BTreeMap::new();
    for k in front {
        let key = (points[k].point.f / BUCKET_WIDTH).floor() as i64;
        buckets
            .entry(key)
            .and_modify(|cur| {
                let (c, n) = (&points[*cur], &points[k]);
                let better = n
                    .point
                    .g
                    .total_cmp(&c.point.g)
                    .then(c.point.f.total_cmp(&n.point.f))
                    .then(lexicographic(&c.theta, &n.theta))
                    .then(c.family.cmp(&n.family));
                if better == Ordering::Greater {
                    *cur = k;
                }
            })
            .or_insert(k);
    }
    let mut env: Vec<usize> = buckets.into_values().collect();
    env.sort_by(|&a, &b| points[a].point.f.total_cmp(&points[b].point.f));
    env
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub evaluations: usize,
    pub step: f64,
    pub theta: Vec<f64>,
    pub f: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierResult {
    pub family: String,
    pub dim: usize,
    pub kind: EstimationKind,
    pub grid: Vec<usize>,
    pub points: Vec<FrontierPoint>,
    pub envelope: Vec<FrontierPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceStep>,
}

/// Evaluate a family on a full grid (`grid[i]` points for parameter `i`).
pub fn sweep(family: &DeviceFamily, grid: &[usize]) -> Result<FrontierResult> {
    if grid.len() != family.params.len() {
        return Err(Error::Config(format!(
            "grid has {} resolutions for {} parameters",
            grid.len(),
            family.params.len()
        )));
    }
    if let Some(&n) = grid.iter().find(|&&n| n < 2) {
        return Err(Error::Config(format!("grid resolution {n} < 2")));
    }
    let thetas = cartesian(family, grid);
    let points = thetas
        .into_par_iter()
        .map(|theta| {
            let point = family.evaluate(&theta)?;
            Ok(FrontierPoint {
                family: family.name.clone(),
                theta,
                point,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let envelope = envelope(&points).into_iter().map(|k| points[k].clone()).collect();
    Ok(FrontierResult {
        family: family.name.clone(),
        dim: family.dim,
        kind: family.kind(),
        grid: grid.to_vec(),
        points,
        envelope,
        trace: Vec::new(),
    })
}

fn cartesian(family: &DeviceFamily, grid: &[usize]) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = family.params.iter().zip(grid).map(|(p, &n)| p.grid(n)).collect();
    let mut out = vec![Vec::new()];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut t = prefix.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Seed-grid points per parameter.
    pub seed_grid: usize,
    /// Weight on `max(0, f_min - F)` when ranking infeasible points.
    pub penalty: f64,
    /// First compass step, as a fraction of each parameter range.
    pub initial_step: f64,
    /// Stop once the step falls below this fraction of the range.
    pub final_step: f64,
    pub max_evaluations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            seed_grid: 21,
            penalty: 1e3,
            initial_step: 0.1,
            final_step: 1e-7,
            max_evaluations: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub theta: Vec<f64>,
    pub point: TradeoffPoint,
    pub seed_theta: Vec<f64>,
    pub seed_point: TradeoffPoint,
    pub evaluations: usize,
    pub trace: Vec<TraceStep>,
}

/// Ranking used by the search: feasible points beat infeasible ones and are
/// compared on `G`; infeasible points are compared on the penalised `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    feasible: bool,
    value: f64,
}

impl Score {
    fn of(p: &TradeoffPoint, f_min: f64, penalty: f64) -> Self {
        let feasible = p.f >= f_min - tol::EXACT_CHECK;
        let value = if feasible {
            p.g
        } else {
            p.g - penalty * (f_min - p.f).max(0.0)
        };
        Self { feasible, value }
    }

    fn beats(&self, other: &Self) -> bool {
        match (self.feasible, other.feasible) {
            (true, false) => true,
            (false, true) => false,
            _ => self.value > other.value,
        }
    }
}

/// Largest `G` over the family subject to `F >= f_min`.
///
/// The best point of a coarse grid seeds a compass search whose step starts
/// at `initial_step` of each parameter range and halves on every failed poll
/// until it drops below `final_step`. Moves are accepted only on strict
/// improvement, so the result is never worse than the seed.
pub fn maximize_g_at_f(family: &DeviceFamily, f_min: f64, opt: &OptimizerConfig) -> Result<Optimum> {
    let d = family.dim as f64;
    if !f_min.is_finite() || f_min < 2.0 / (d + 1.0) - 1e-12 || f_min > 1.0 + 1e-12 {
        return Err(Error::Infeasible { f_min, best_f: f64::NAN });
    }
    if opt.seed_grid < 2 || !(opt.final_step > 0.0 && opt.final_step <= opt.initial_step) {
        return Err(Error::Config("optimizer needs seed_grid >= 2 and 0 < final_step <= initial_step".into()));
    }
    let evaluations = Cell::new(0usize);
    let best_f = Cell::new(f64::NEG_INFINITY);
    let eval = |theta: &[f64]| -> Result<(TradeoffPoint, Score)> {
        evaluations.set(evaluations.get() + 1);
        let p = family.evaluate(theta)?;
        best_f.set(best_f.get().max(p.f));
        Ok((p, Score::of(&p, f_min, opt.penalty)))
    };

    let seeds = cartesian(family, &vec![opt.seed_grid; family.params.len()]);
    let mut best: Option<(Vec<f64>, TradeoffPoint, Score)> = None;
    for theta in seeds {
        let (p, s) = eval(&theta)?;
        if best.as_ref().is_none_or(|(_, _, b)| s.beats(b)) {
            best = Some((theta, p, s));
        }
    }
    let (mut theta, mut point, mut score) = best.expect("seed grid is nonempty");
    let (seed_theta, seed_point) = (theta.clone(), point);

    let mut trace = Vec::new();
    let mut step = opt.initial_step;
    'search: while step >= opt.final_step {
        let mut improved = false;
        for i in 0..family.params.len() {
            let range = &family.params[i];
            for dir in [1.0, -1.0] {
                let x = range.clamp(theta[i] + dir * step * range.span());
                if x == theta[i] {
                    continue;
                }
                let mut cand = theta.clone();
                cand[i] = x;
                let (p, s) = eval(&cand)?;
                if s.beats(&score) {
                    theta = cand;
                    point = p;
                    score = s;
                    improved = true;
                    break;
                }
            }
            if improved {
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
        trace.push(TraceStep {
            evaluations: 0,
            step,
            theta: theta.clone(),
            f: point.f,
            g: point.g,
        });
        if evaluations.get() >= opt.max_evaluations {
            break 'search;
        }
    }
    let total = evaluations.get();
    if let Some(last) = trace.last_mut() {
        last.evaluations = total;
    }
    if !score.feasible {
        return Err(Error::Infeasible {
            f_min,
            best_f: best_f.get(),
        });
    }
    Ok(Optimum {
        theta,
        point,
        seed_theta,
        seed_point,
        evaluations: total,
        trace,
    })
}

/// One row of a merged region report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub family: String,
    pub theta: Vec<f64>,
    pub point: TradeoffPoint,
    pub bounds: BoundReport,
    /// Some quantum-estimation tradeoff bound is violated by this point.
    pub quantum_bound_violated: bool,
    /// `G >= 2/3`, which alone rules out the qubit ellipse.
    pub g_witness: bool,
}

/// Merge several frontier results into one envelope and evaluate the
/// bounds relevant to each point's estimation kind.
pub fn region_report(results: &[FrontierResult]) -> Result<Vec<RegionRow>> {
    let first = results
        .first()
        .ok_or_else(|| Error::Config("region report needs at least one frontier result".into()))?;
    if let Some(r) = results.iter().find(|r| r.dim != first.dim) {
        return Err(Error::Dimension(format!(
            "cannot merge frontiers of dimension {} and {}",
            first.dim, r.dim
        )));
    }
    let d = first.dim;
    let all: Vec<FrontierPoint> = results.iter().flat_map(|r| r.points.iter().cloned()).collect();
    let tradeoff = if d == 2 { BoundId::TradeoffD2 } else { BoundId::TradeoffGeneral };
    envelope(&all)
        .into_iter()
        .map(|k| {
            let fp = &all[k];
            let ids = match fp.point.kind {
                EstimationKind::QuantumEstimate => BoundId::quantum_estimation(d),
                EstimationKind::ClassicalDecode => vec![tradeoff, BoundId::GMinusFEighth],
            };
            let report = bounds::evaluate(fp.point.into(), d, &ids)?;
            let quantum_bound_violated = report
                .violations()
                .any(|e| matches!(e.id, BoundId::TradeoffD2 | BoundId::TradeoffGeneral));
            Ok(RegionRow {
                family: fp.family.clone(),
                theta: fp.theta.clone(),
                point: fp.point,
                bounds: report,
                quantum_bound_violated,
                g_witness: bounds::violation_witness_g(fp.point.g),
            })
        })
        .collect()
}
