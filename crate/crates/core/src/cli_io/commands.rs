//! The `local`, `continue`, `diagnose` and `plot` commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cli_io::config::ContinuationConfig;
use crate::cli_io::rows::{self, BranchRow, ErrorRecord, TerminationRecord};
use crate::cli_io::svg;
use crate::continuation::{self, branch_state, BranchRecord, ResumeState, Termination};
use crate::diagnostics::{self, Diagnostics};
use crate::error::{Error, Result};
use crate::integrals::QuadratureRule;
use crate::operator;
use crate::solver;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_FLOOR: i32 = 4;

/// Exit code of a command and the files it wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub message: String,
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Aliasing { .. } | Error::InvalidBoundary(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))
}

fn write_error(cfg: &ContinuationConfig, e: &Error, files: &mut Vec<PathBuf>) -> Result<i32> {
    let code = exit_code_for(e);
    let path = cfg.error_path();
    rows::write_json(&path, &ErrorRecord::from_error(e, code))?;
    files.push(path);
    Ok(code)
}

fn write_branch(cfg: &ContinuationConfig, rows: &[BranchRow], files: &mut Vec<PathBuf>) -> Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    rows::write_jsonl(&cfg.jsonl_path(), rows)?;
    rows::write_csv(&cfg.csv_path(), rows)?;
    files.push(cfg.jsonl_path());
    files.push(cfg.csv_path());
    Ok(())
}

/// Warm-started solves at `local_eps`; rows carry chord-length `s`.
pub fn cmd_local(cfg: &ContinuationConfig) -> Result<Outcome> {
    cfg.validate()?;
    create_dir(&cfg.output.dir)?;
    let rule = QuadratureRule::new(cfg.nodes);
    let (points, failure) = solver::local_curve_partial(
        cfg.l,
        cfg.pair_kind,
        cfg.n_modes,
        &cfg.local_eps,
        &cfg.continuation.newton,
        &rule,
    );
    let mut s = 0.0;
    let mut rows_out = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let ds = if i == 0 { 0.0 } else { (branch_state(&p.boundary) - branch_state(&points[i - 1].boundary)).norm() };
        s += ds;
        rows_out.push(BranchRow::from_point(i, p, cfg.nodes, s, ds, 0.0));
    }
    let mut files = Vec::new();
    write_branch(cfg, &rows_out, &mut files)?;
    match failure {
        None => Ok(Outcome { exit_code: EXIT_OK, files, message: format!("{} points solved", rows_out.len()) }),
        Some(e) => {
            let code = write_error(cfg, &e, &mut files)?;
            Ok(Outcome { exit_code: code, files, message: e.to_string() })
        }
    }
}

/// Rebuilds the continuation state from saved rows; the last row is resumed.
pub fn resume_state(cfg: &ContinuationConfig, saved: &[BranchRow]) -> Result<ResumeState> {
    let last = saved.last().ok_or_else(|| Error::Config("no rows to resume from".into()))?;
    for r in saved {
        if r.pair_kind != cfg.pair_kind || r.l != cfg.l || r.nodes != cfg.nodes || r.coeffs.len() != cfg.n_modes {
            return Err(Error::Config(format!("row {} does not match the configured pair, l, N or M", r.index)));
        }
    }
    let points = saved.iter().map(BranchRow::to_point).collect::<Result<Vec<_>>>()?;
    let prev = if saved.len() >= 2 {
        saved[saved.len() - 2].boundary()?
    } else {
        let rule = QuadratureRule::new(cfg.nodes);
        continuation::seed(cfg.l, cfg.pair_kind, cfg.n_modes, &cfg.continuation, &rule)?.0.boundary
    };
    let record = BranchRecord {
        final_monitors: last.monitors,
        points,
        s: saved.iter().map(|r| r.s).collect(),
        step_sizes: saved.iter().map(|r| r.ds).collect(),
        next_step: saved
            .iter()
            .map(|r| if r.ds_next > 0.0 { r.ds_next } else { cfg.continuation.ds_init })
            .collect(),
        termination: Termination::MaxSteps,
    };
    Ok(ResumeState { record, prev })
}

pub fn record_rows(record: &BranchRecord, nodes: usize) -> Vec<BranchRow> {
    record
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| BranchRow::from_point(i, p, nodes, record.s[i], record.step_sizes[i], record.next_step[i]))
        .collect()
}

/// Global continuation from the seed, or from the last row of `seed_from`.
pub fn cmd_continue(cfg: &ContinuationConfig, seed_from: Option<&Path>) -> Result<Outcome> {
    cfg.validate()?;
    let saved = seed_from.map(rows::read_jsonl).transpose()?;
    let rule = QuadratureRule::new(cfg.nodes);
    let state = saved.as_deref().map(|rows| resume_state(cfg, rows)).transpose()?;
    create_dir(&cfg.output.dir)?;
    let mut files = Vec::new();
    let result = match state {
        Some(state) => continuation::continue_branch(state, &cfg.continuation, &rule),
        None => continuation::run_continuation(cfg.l, cfg.pair_kind, cfg.n_modes, &cfg.continuation, &rule),
    };
    let record = match result {
        Ok(r) => r,
        Err(e) => {
            let code = write_error(cfg, &e, &mut files)?;
            return Ok(Outcome { exit_code: code, files, message: e.to_string() });
        }
    };
    let rows_out = record_rows(&record, cfg.nodes);
    write_branch(cfg, &rows_out, &mut files)?;
    let last = rows_out.last().expect("nonempty record");
    let term = TerminationRecord {
        termination: record.termination.clone(),
        points: rows_out.len(),
        final_s: last.s,
        final_eps: last.eps,
        final_monitors: record.final_monitors,
    };
    rows::write_json(&cfg.termination_path(), &term)?;
    files.push(cfg.termination_path());
    let exit_code = match &record.termination {
        Termination::MonitorFloor { .. } => EXIT_FLOOR,
        Termination::MaxSteps | Termination::EpsCeiling => EXIT_OK,
        Termination::SolverFailure { reason } => {
            let e = Error::NewtonDiverged { iterations: 0, residual: f64::NAN };
            let mut rec = ErrorRecord::from_error(&e, EXIT_SOLVER);
            rec.kind = "SolverFailure".into();
            rec.message = reason.clone();
            rows::write_json(&cfg.error_path(), &rec)?;
            files.push(cfg.error_path());
            EXIT_SOLVER
        }
    };
    Ok(Outcome { exit_code, files, message: format!("{} points, terminated by {}", rows_out.len(), record.termination) })
}

/// Independent re-check of one saved row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub index: usize,
    pub eps: f64,
    /// Residual recomputed from the stored coefficients.
    pub residual: f64,
    pub speed: f64,
    /// `|speed - stored speed|`.
    pub speed_drift: f64,
    /// Normal relative velocity on the boundary from the direct velocity
    /// integral, relative to the largest relative speed.
    pub steadiness: Option<f64>,
    pub failures: Vec<String>,
    pub diagnostics: Diagnostics,
}

pub fn diagnose_row(row: &BranchRow) -> Result<DiagnosticReport> {
    let b = row.boundary()?;
    let rule = QuadratureRule::new(row.nodes);
    let eval = operator::evaluate(&b, &rule)?;
    let diag = diagnostics::diagnose(&b, eval.speed, &rule);
    let steadiness = if b.eps() > 0.0 {
        diagnostics::boundary_normal_velocity(&b, eval.speed, 2 * row.nodes).ok()
    } else {
        None
    };
    Ok(DiagnosticReport {
        index: row.index,
        eps: row.eps,
        residual: eval.residual.sup_norm(),
        speed: eval.speed.value,
        speed_drift: (eval.speed.value - row.speed_value()).abs(),
        steadiness,
        failures: diag.failures().into_iter().map(String::from).collect(),
        diagnostics: diag,
    })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("branch");
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Recomputes diagnostics for every row; exit 3 if any row fails a certificate.
pub fn cmd_diagnose(branch: &Path, out: Option<&Path>) -> Result<Outcome> {
    let saved = rows::read_jsonl(branch)?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| sibling(branch, ".diagnostics.jsonl"));
    let mut lines = String::new();
    let mut failed = 0;
    for row in &saved {
        let report = diagnose_row(row)?;
        if !report.failures.is_empty() {
            failed += 1;
        }
        lines.push_str(&serde_json::to_string(&report).map_err(|e| Error::Config(e.to_string()))?);
        lines.push('\n');
    }
    std::fs::write(&out, lines).map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
    let exit_code = if failed == 0 { EXIT_OK } else { EXIT_SOLVER };
    Ok(Outcome {
        exit_code,
        files: vec![out],
        message: format!("{} rows checked, {failed} with failed certificates", saved.len()),
    })
}

/// One contour plot per requested index plus the monitor plot.
pub fn cmd_plot(branch: &Path, indices: &[usize], out_dir: &Path) -> Result<Outcome> {
    let saved = rows::read_jsonl(branch)?;
    create_dir(out_dir)?;
    let stem = branch.file_stem().and_then(|s| s.to_str()).unwrap_or("branch");
    let mut files = Vec::new();
    for &i in indices {
        let row = saved
            .iter()
            .find(|r| r.index == i)
            .ok_or_else(|| Error::Config(format!("no row with index {i} in {}", branch.display())))?;
        let path = out_dir.join(format!("{stem}_contour_{i}.svg"));
        std::fs::write(&path, svg::contour_svg(row)?).map_err(|e| Error::Config(e.to_string()))?;
        files.push(path);
    }
    let path = out_dir.join(format!("{stem}_monitors.svg"));
    std::fs::write(&path, svg::monitor_svg(&saved)).map_err(|e| Error::Config(e.to_string()))?;
    files.push(path);
    Ok(Outcome { exit_code: EXIT_OK, message: format!("{} plots written", files.len()), files })
}
