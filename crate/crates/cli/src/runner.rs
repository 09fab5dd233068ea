//! Executing a scenario.

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{Context, Result};
use qrseal::bounds::{self, BoundId, BoundReport};
use qrseal::frontier::{self, FrontierResult};
use qrseal::verify::{self, VerifyConfig};
use qrseal::{
    device_to_seal, seal_to_device, verify_equivalence, Alphabet, BuiltinDevice, BuiltinEncoding, BuiltinSeal,
    EstimationKind, McConfig, TradeoffPoint,
};

use crate::config::{DeviceRef, EncodingRef, Scenario, ScenarioConfig, SealRef};
use crate::report::{
    BridgeResult, DeviceResult, FidelityPoint, FrontierOutput, Mode, OptimumEntry, Provenance, Results, RunReport,
    SealResult, TableRow, Tagged, Value,
};
use crate::table::Table;

/// Everything a run produces, before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub tables: Vec<Table>,
}

impl RunOutput {
    /// 0 on success, 2 if asserted bounds were violated or a verify
    /// criterion failed.
    pub fn exit_code(&self) -> i32 {
        let verify_failed = matches!(&self.report.results, Results::VerifyAll(v) if !v.data.all_pass);
        let asserted = self.report.config.assert_bounds && !self.report.violations.is_empty();
        if verify_failed || asserted {
            2
        } else {
            0
        }
    }
}

pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let mut tables = Vec::new();
    let mut violations = Vec::new();
    let results = match &cfg.scenario {
        Scenario::Device {
            device,
            encoding,
            monte_carlo,
            bounds,
        } => Results::Device(run_device(cfg, device, encoding.as_ref(), *monte_carlo, bounds.as_deref(), &mut violations)?),
        Scenario::Seal { seal, bounds } => Results::Seal(run_seal(seal, bounds.as_deref(), &mut violations)?),
        Scenario::Bridge { device, encoding, seal } => {
            Results::Bridge(run_bridge(device.as_ref(), encoding.as_ref(), seal.as_ref())?)
        }
        Scenario::Bounds { point, d, bounds } => {
            let ids = bounds.clone().unwrap_or_else(|| match point {
                bounds::BoundPoint::Tradeoff { .. } => BoundId::quantum_estimation(*d),
                bounds::BoundPoint::Seal { .. } => {
                    let mut ids = BoundId::single_bit_decoding();
                    ids.push(BoundId::QuantumSealD);
                    ids
                }
            });
            let report = bounds::evaluate(*point, *d, &ids)?;
            collect_violations("bounds", &report, &mut violations);
            Results::Bounds(Tagged::exact(report))
        }
        Scenario::Frontier {
            families,
            grid,
            f_min,
            optimizer,
        } => {
            let mut out = FrontierOutput {
                families: Vec::new(),
                optima: Vec::new(),
                regions: Vec::new(),
            };
            for spec in families {
                let family = spec.build()?;
                let result = frontier::sweep(&family, grid)?;
                tables.push(crate::table::frontier(&family, &result));
                for &f in f_min {
                    let entry = match frontier::maximize_g_at_f(&family, f, optimizer) {
                        Ok(o) => OptimumEntry {
                            family: family.name().to_string(),
                            f_min: f,
                            optimum: Some(Tagged::exact(o)),
                            infeasible: None,
                        },
                        Err(e @ qrseal::Error::Infeasible { .. }) => OptimumEntry {
                            family: family.name().to_string(),
                            f_min: f,
                            optimum: None,
                            infeasible: Some(e.to_string()),
                        },
                        Err(e) => return Err(e.into()),
                    };
                    out.optima.push(entry);
                }
                out.families.push(Tagged::exact(result));
            }
            let mut by_dim: BTreeMap<usize, Vec<FrontierResult>> = BTreeMap::new();
            for r in &out.families {
                by_dim.entry(r.data.dim).or_default().push(r.data.clone());
            }
            for (d, group) in by_dim {
                let rows = frontier::region_report(&group)?;
                for r in &rows {
                    let what = format!("region d={d} {} {:?}", r.family, r.theta);
                    collect_violations(&what, &r.bounds, &mut violations);
                }
                tables.push(crate::table::region(d, &rows));
                out.regions.push(Tagged::exact(rows));
            }
            Results::Frontier(out)
        }
        Scenario::VerifyAll {} => {
            let report = verify::run_all(&VerifyConfig {
                seed: cfg.sampling.seed,
                samples: cfg.sampling.n,
                workers: cfg.sampling.workers,
                tolerances: cfg.tolerances,
            })?;
            Results::VerifyAll(Tagged {
                mode: Mode::Mc {
                    samples: cfg.sampling.n,
                },
                data: report,
            })
        }
        Scenario::PaperTable {} => {
            let (rows, quantum_seal) = paper_table()?;
            tables.push(crate::table::paper_table(&rows));
            Results::PaperTable { rows, quantum_seal }
        }
    };
    let report = RunReport {
        config: cfg.clone(),
        results,
        violations,
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.sampling.seed,
            samples: cfg.sampling.n,
            workers: cfg.sampling.workers,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    };
    Ok(RunOutput { report, tables })
}

fn collect_violations(what: &str, report: &BoundReport, out: &mut Vec<String>) {
    for e in report.violations() {
        out.push(format!(
            "{what}: {:?} lhs {} exceeds {} (margin {})",
            e.id, e.lhs, e.rhs, e.margin
        ));
    }
}

fn run_device(
    cfg: &ScenarioConfig,
    device: &DeviceRef,
    encoding: Option<&EncodingRef>,
    monte_carlo: bool,
    ids: Option<&[BoundId]>,
    violations: &mut Vec<String>,
) -> Result<DeviceResult> {
    let dev = device.resolve()?;
    let d = dev.dim();
    let (exact, symbols) = match dev.kind() {
        EstimationKind::QuantumEstimate => (dev.average_fidelities_exact()?, None),
        EstimationKind::ClassicalDecode => {
            let enc = encoding.context("classical-decode device without an encoding")?.resolve()?;
            (dev.classical_estimation_fidelity(&enc)?, Some(enc.symbols()))
        }
    };
    let monte_carlo = if monte_carlo && dev.kind() == EstimationKind::QuantumEstimate {
        let est = dev.average_fidelities_mc(
            &Alphabet::HaarUniform(d),
            &McConfig {
                samples: cfg.sampling.n,
                seed: cfg.sampling.seed,
                workers: cfg.sampling.workers,
            },
        )?;
        Some(FidelityPoint::from(est))
    } else {
        None
    };
    let ids = ids.map(<[BoundId]>::to_vec).unwrap_or_else(|| match symbols {
        None => BoundId::quantum_estimation(d),
        Some(2) if d == 2 => BoundId::single_bit_decoding(),
        Some(_) => Vec::new(),
    });
    let report = bounds::evaluate(exact.into(), d, &ids)?;
    collect_violations("device", &report, violations);
    Ok(DeviceResult {
        exact: exact.into(),
        monte_carlo,
        bounds: Tagged::exact(report),
        g_witness: d == 2 && bounds::violation_witness_g(exact.g),
    })
}

fn run_seal(seal: &SealRef, ids: Option<&[BoundId]>, violations: &mut Vec<String>) -> Result<SealResult> {
    let p = seal.resolve()?;
    let point = p.point();
    let ids = ids.map(<[BoundId]>::to_vec).unwrap_or_else(|| {
        if p.values() == 2 {
            BoundId::single_bit_decoding()
        } else {
            Vec::new()
        }
    });
    let report = bounds::evaluate(point.into(), p.dim_bob(), &ids)?;
    collect_violations("seal", &report, violations);
    Ok(SealResult {
        point: point.into(),
        eigenstates: p.eigenstate_checks(),
        bounds: Tagged::exact(report),
    })
}

fn run_bridge(device: Option<&DeviceRef>, encoding: Option<&EncodingRef>, seal: Option<&SealRef>) -> Result<BridgeResult> {
    match (device, encoding, seal) {
        (Some(d), Some(e), None) => {
            let (dev, enc) = (d.resolve()?, e.resolve()?);
            let eq = verify_equivalence(&dev, &enc, qrseal::tol::EXACT_CHECK)?;
            Ok(BridgeResult::DeviceToSeal {
                device: eq.device.into(),
                seal: eq.seal.into(),
                equivalence: Tagged::exact(eq),
            })
        }
        (None, None, Some(s)) => {
            let p = s.resolve()?;
            let (dev, enc) = seal_to_device(&p)?;
            let eq = verify_equivalence(&dev, &enc, qrseal::tol::EXACT_CHECK)?;
            Ok(BridgeResult::SealToDevice {
                seal: p.point().into(),
                device: eq.device.into(),
                equivalence: Tagged::exact(eq),
            })
        }
        _ => anyhow::bail!("bridge scenario needs either device and encoding, or seal"),
    }
}

fn row(label: &str, dim: usize, fg: Option<TradeoffPoint>, ab: Option<qrseal::SealPoint>) -> TableRow {
    TableRow {
        label: label.to_string(),
        dim,
        f: fg.map(|p| Value::exact(p.f)),
        g: fg.map(|p| Value::exact(p.g)),
        alpha: ab.map(|p| Value::exact(p.alpha)),
        beta: ab.map(|p| Value::exact(p.beta)),
    }
}

/// Headline values of every built-in, all computed exactly.
pub fn paper_table() -> Result<(Vec<TableRow>, Vec<Tagged<bounds::QuantumSealScenario>>)> {
    let mut rows = Vec::new();
    for d in 2..=6 {
        let p = BuiltinDevice::DoNothing { d, guess: 0 }.build()?.average_fidelities_exact()?;
        rows.push(row(&format!("do_nothing d={d}"), d, Some(p), None));
    }
    for d in 2..=6 {
        let p = BuiltinDevice::MeasureReprepare { d }.build()?.average_fidelities_exact()?;
        rows.push(row(&format!("measure_reprepare d={d}"), d, Some(p), None));
    }
    let pairs = [
        ("breidbart on bb84", BuiltinDevice::Breidbart, BuiltinEncoding::Bb84),
        ("simplified", BuiltinDevice::MeasureKeep { d: 2 }, BuiltinEncoding::Simplified),
    ];
    for (label, dev, enc) in pairs {
        let (dev, enc) = (dev.build()?, enc.build()?);
        let fg = dev.classical_estimation_fidelity(&enc)?;
        let ab = device_to_seal(&dev, &enc)?.point();
        rows.push(row(label, 2, Some(fg), Some(ab)));
    }
    let qbs = BuiltinSeal::OptimalQbs.build()?;
    rows.push(row("optimal_qbs", qbs.dim_bob(), None, Some(qbs.point())));
    let perfect = BuiltinSeal::PerfectSeal.build()?;
    let (dev, enc) = seal_to_device(&perfect)?;
    rows.push(row(
        "perfect_seal",
        perfect.dim_bob(),
        Some(dev.classical_estimation_fidelity(&enc)?),
        Some(perfect.point()),
    ));
    let quantum_seal = (2..=8)
        .map(|d| bounds::quantum_seal_bound_scenario(d).map(Tagged::exact))
        .collect::<qrseal::Result<Vec<_>>>()?;
    Ok((rows, quantum_seal))
}
