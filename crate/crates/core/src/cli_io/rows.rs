//! One JSONL row per branch point, a CSV summary, and run records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary::{FourierBoundary, PairKind};
use crate::continuation::Termination;
use crate::diagnostics::{Diagnostics, MonitorVector};
use crate::error::{Error, Result};
use crate::operator::{SpeedKind, SpeedValue};
use crate::solver::SolutionPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub index: usize,
    pub pair_kind: PairKind,
    pub l: f64,
    pub nodes: usize,
    pub s: f64,
    /// Step that produced this point; zero for a seed.
    pub ds: f64,
    /// Step the continuation would try next from this point.
    pub ds_next: f64,
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    pub residual: f64,
    pub mode1_residual: f64,
    pub monitors: MonitorVector,
    pub winding: Option<i64>,
    pub koebe_sup: f64,
    pub polar_margin: f64,
    pub symmetry_ok: bool,
    pub speed_bounds_ok: bool,
    pub residual_recheck: Option<f64>,
    pub im_a_phi_prime: Option<f64>,
    pub rh_phi_prime_error: Option<f64>,
    pub jacobian_condition: f64,
    pub iterations: usize,
    pub coeffs: Vec<f64>,
}

impl BranchRow {
    pub fn from_point(index: usize, p: &SolutionPoint, nodes: usize, s: f64, ds: f64, ds_next: f64) -> Self {
        let (omega, v) = match p.speed.kind {
            SpeedKind::Angular => (Some(p.speed.value), None),
            SpeedKind::Translational => (None, Some(p.speed.value)),
        };
        let d = &p.diagnostics;
        Self {
            index,
            pair_kind: p.boundary.kind(),
            l: p.boundary.l(),
            nodes,
            s,
            ds,
            ds_next,
            eps: p.boundary.eps(),
            omega,
            v,
            residual: p.residual_norm,
            mode1_residual: p.mode1_residual,
            monitors: d.monitors,
            winding: d.winding_a,
            koebe_sup: d.koebe_sup,
            polar_margin: d.polar_margin,
            symmetry_ok: d.symmetry_ok,
            speed_bounds_ok: d.omega_bounds_ok,
            residual_recheck: d.residual_recheck,
            im_a_phi_prime: d.im_a_phi_prime,
            rh_phi_prime_error: d.rh_phi_prime_error,
            jacobian_condition: p.jacobian_condition,
            iterations: p.iterations,
            coeffs: p.boundary.coeffs().to_vec(),
        }
    }

    pub fn boundary(&self) -> Result<FourierBoundary> {
        FourierBoundary::new(self.l, self.eps, self.pair_kind, self.coeffs.clone())
    }

    pub fn speed(&self) -> Result<SpeedValue> {
        let value = match self.pair_kind {
            PairKind::Corotating => self.omega,
            PairKind::Translating => self.v,
        };
        let value = value.ok_or_else(|| Error::Config(format!("row {} has no speed for its pair kind", self.index)))?;
        Ok(SpeedValue::for_pair(self.pair_kind, value))
    }

    /// The solution point this row was written from (without residual history).
    pub fn to_point(&self) -> Result<SolutionPoint> {
        Ok(SolutionPoint {
            boundary: self.boundary()?,
            speed: self.speed()?,
            residual_norm: self.residual,
            mode1_residual: self.mode1_residual,
            diagnostics: Diagnostics {
                monitors: self.monitors,
                winding_a: self.winding,
                koebe_sup: self.koebe_sup,
                polar_margin: self.polar_margin,
                symmetry_ok: self.symmetry_ok,
                omega_bounds_ok: self.speed_bounds_ok,
                residual_recheck: self.residual_recheck,
                im_a_phi_prime: self.im_a_phi_prime,
                rh_phi_prime_error: self.rh_phi_prime_error,
            },
            jacobian_condition: self.jacobian_condition,
            iterations: self.iterations,
            residual_history: Vec::new(),
        })
    }

    pub fn speed_value(&self) -> f64 {
        self.omega.or(self.v).unwrap_or(f64::NAN)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

pub fn write_jsonl(path: &Path, rows: &[BranchRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        let line = serde_json::to_string(row).map_err(|e| io_err(path, e))?;
        writeln!(w, "{line}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<BranchRow>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| io_err(path, format!("line {}: {e}", i + 1)))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(io_err(path, "no branch rows"));
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Summary columns; the speed column is `omega` or `v` depending on the pair.
pub fn write_csv(path: &Path, rows: &[BranchRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let speed = match rows.first().map(|r| r.pair_kind) {
        Some(PairKind::Translating) => "v",
        _ => "omega",
    };
    let header = [
        "index", "s", "eps", speed, "residual", "min_a", "angle_margin", "min_phi_prime", "min_phi", "separation",
        "winding", "koebe_sup",
    ];
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        let m = &r.monitors;
        let min_a = if m.min_a.is_finite() { format!("{:?}", m.min_a) } else { String::new() };
        let record = [
            r.index.to_string(),
            format!("{:?}", r.s),
            format!("{:?}", r.eps),
            opt(r.omega.or(r.v)),
            format!("{:?}", r.residual),
            min_a,
            format!("{:?}", m.angle_margin),
            format!("{:?}", m.min_phi_prime),
            format!("{:?}", m.min_phi),
            format!("{:?}", m.separation),
            r.winding.map(|w| w.to_string()).unwrap_or_default(),
            format!("{:?}", r.koebe_sup),
        ];
        w.write_record(&record).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminationRecord {
    pub termination: Termination,
    pub points: usize,
    pub final_s: f64,
    pub final_eps: f64,
    pub final_monitors: MonitorVector,
}

/// Machine-readable failure record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub exit_code: i32,
    pub kind: String,
    pub message: String,
}

impl ErrorRecord {
    pub fn from_error(e: &Error, exit_code: i32) -> Self {
        let debug = format!("{e:?}");
        let kind = debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("").to_string();
        Self { exit_code, kind, message: e.to_string() }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}
