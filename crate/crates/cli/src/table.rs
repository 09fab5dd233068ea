//! CSV tables written next to the report.

use std::path::Path;

use anyhow::Result;
use qrseal::bounds;
use qrseal::frontier::{DeviceFamily, FrontierResult, RegionRow};
use qrseal::EstimationKind;

use crate::report::{TableRow, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File name, including the `.csv` extension.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(dir.join(&self.name))?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn kind(k: EstimationKind) -> &'static str {
    match k {
        EstimationKind::QuantumEstimate => "quantum_estimate",
        EstimationKind::ClassicalDecode => "classical_decode",
    }
}

/// Distance of `(f, g)` from the boundary of the quantum tradeoff region.
pub fn saturation(f: f64, g: f64, d: usize) -> f64 {
    if d == 2 {
        (bounds::tradeoff_d2_lhs(f, g) - 1.0 / 9.0).abs()
    } else {
        (bounds::tradeoff_general_lhs(f, g, d) - bounds::tradeoff_general_rhs(d)).abs()
    }
}

pub fn frontier(family: &DeviceFamily, r: &FrontierResult) -> Table {
    let mut header = vec!["family".to_string()];
    header.extend(family.params().iter().map(|p| p.name.clone()));
    header.extend(["f", "g", "saturation", "envelope"].map(String::from));
    let rows = r
        .points
        .iter()
        .map(|p| {
            let on_envelope = r.envelope.iter().any(|e| e.theta == p.theta);
            let mut row = vec![p.family.clone()];
            row.extend(p.theta.iter().map(|&t| float(t)));
            row.push(float(p.point.f));
            row.push(float(p.point.g));
            row.push(float(saturation(p.point.f, p.point.g, r.dim)));
            row.push(u8::from(on_envelope).to_string());
            row
        })
        .collect();
    Table {
        name: format!("frontier_{}.csv", r.family),
        header,
        rows,
    }
}

pub fn region(d: usize, rows: &[RegionRow]) -> Table {
    let header = ["family", "theta", "f", "g", "kind", "quantum_bound_violated", "g_witness"]
        .map(String::from)
        .to_vec();
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.family.clone(),
                r.theta.iter().map(|&t| float(t)).collect::<Vec<_>>().join(";"),
                float(r.point.f),
                float(r.point.g),
                kind(r.point.kind).to_string(),
                r.quantum_bound_violated.to_string(),
                r.g_witness.to_string(),
            ]
        })
        .collect();
    Table {
        name: format!("region_d{d}.csv"),
        header,
        rows,
    }
}

pub fn paper_table(rows: &[TableRow]) -> Table {
    let cell = |v: &Option<Value>| v.map(|v| float(v.value())).unwrap_or_default();
    let header = ["label", "d", "f", "g", "alpha", "beta"].map(String::from).to_vec();
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                r.dim.to_string(),
                cell(&r.f),
                cell(&r.g),
                cell(&r.alpha),
                cell(&r.beta),
            ]
        })
        .collect();
    Table {
        name: "paper_table.csv".into(),
        header,
        rows,
    }
}
