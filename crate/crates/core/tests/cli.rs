use std::path::{Path, PathBuf};
use std::process::Command;

use vortex_pairs::cli_io::commands::{self, EXIT_CONFIG, EXIT_FLOOR, EXIT_OK, EXIT_SOLVER};
use vortex_pairs::cli_io::rows::{self, BranchRow, ErrorRecord, TerminationRecord};
use vortex_pairs::cli_io::{cmd_continue, cmd_diagnose, cmd_local, cmd_plot, ContinuationConfig};
use vortex_pairs::continuation::Termination;
use vortex_pairs::diagnostics::point_vortex_params;
use vortex_pairs::integrals::QuadratureRule;
use vortex_pairs::solver::{self, NewtonSettings};
use vortex_pairs::{FourierBoundary, PairKind};

fn small_config(dir: &Path) -> ContinuationConfig {
    let mut cfg = ContinuationConfig::default();
    cfg.n_modes = 8;
    cfg.nodes = 64;
    cfg.output.dir = dir.to_path_buf();
    cfg
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vortex-pairs"))
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn local_default_corotating_speed_tends_to_point_vortex_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ContinuationConfig::default();
    cfg.output.dir = dir.path().to_path_buf();
    let out = cmd_local(&cfg).unwrap();
    assert_eq!(out.exit_code, EXIT_OK);
    let rows = rows::read_jsonl(&cfg.jsonl_path()).unwrap();
    assert_eq!(rows.len(), 5);
    let omega0 = point_vortex_params(1.0, PairKind::Corotating).unwrap().value;
    let gaps: Vec<f64> = rows.iter().map(|r| (r.omega.unwrap() - omega0).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[0] < w[1]), "{gaps:?}");
    assert!(gaps[0] < 1e-9);
    let omegas: Vec<f64> = rows.iter().map(|r| r.omega.unwrap()).collect();
    assert!(omegas.windows(2).all(|w| w[0] < w[1]), "speed is monotone along the local curve: {omegas:?}");
    assert!(rows.iter().all(|r| r.v.is_none() && r.residual < 1e-11));
    let csv = std::fs::read_to_string(cfg.csv_path()).unwrap();
    assert!(csv.starts_with("index,s,eps,omega,residual"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn translating_rows_carry_v_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.pair_kind = PairKind::Translating;
    cmd_local(&cfg).unwrap();
    let text = std::fs::read_to_string(cfg.jsonl_path()).unwrap();
    for line in text.lines() {
        assert!(line.contains("\"v\":"));
        assert!(!line.contains("\"omega\""));
    }
    let csv = std::fs::read_to_string(cfg.csv_path()).unwrap();
    assert!(csv.starts_with("index,s,eps,v,"));
}

#[test]
fn underresolved_grid_is_a_config_error_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let status = bin()
        .args(["local", "--set", "nodes=64", "-o"])
        .arg(&out_dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_CONFIG));
    assert!(!out_dir.exists());
}

#[test]
fn config_file_and_flags_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, "n_modes = 8\nnodes = 64\nlocal_eps = [0.02, 0.04]\n").unwrap();
    let out_dir = dir.path().join("run");
    let status = bin()
        .arg("local")
        .arg("--config")
        .arg(&cfg_path)
        .args(["--set", "output.name=\"short\"", "-o"])
        .arg(&out_dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_OK));
    let rows = rows::read_jsonl(&out_dir.join("short.jsonl")).unwrap();
    assert_eq!(rows.iter().map(|r| r.eps).collect::<Vec<_>>(), vec![0.02, 0.04]);
    assert!(rows.iter().all(|r| r.coeffs.len() == 8 && r.nodes == 64));
}

#[test]
fn solver_failure_writes_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.local_eps = vec![0.01, 0.05];
    cfg.continuation.newton = NewtonSettings { max_iter: 1, tol_residual: 1e-30, ..Default::default() };
    let out = cmd_local(&cfg).unwrap();
    assert_eq!(out.exit_code, EXIT_SOLVER);
    let rec: ErrorRecord = read_json(&cfg.error_path());
    assert_eq!(rec.exit_code, EXIT_SOLVER);
    assert_eq!(rec.kind, "LocalCurve");
    assert!(rec.message.contains("index 0"), "{}", rec.message);
}

#[test]
fn large_scale_start_fails_without_panicking() {
    let rule = QuadratureRule::new(64);
    let b = FourierBoundary::disks(1.0, 0.9, PairKind::Corotating, 8).unwrap();
    let s = NewtonSettings { max_iter: 3, ..Default::default() };
    // either converges or reports a typed error
    let _ = solver::newton_solve(&b, &s, &rule);
}

#[test]
fn zero_steps_writes_only_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.continuation.max_steps = 0;
    let out = cmd_continue(&cfg, None).unwrap();
    assert_eq!(out.exit_code, EXIT_OK);
    let rows = rows::read_jsonl(&cfg.jsonl_path()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].eps, cfg.continuation.eps_seed);
    let term: TerminationRecord = read_json(&cfg.termination_path());
    assert_eq!(term.termination, Termination::MaxSteps);
}

#[test]
fn high_floors_give_a_short_branch_and_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.continuation.floors.separation = 0.5 * 2.0 * 1.5;
    let out = cmd_continue(&cfg, None).unwrap();
    assert_eq!(out.exit_code, EXIT_FLOOR);
    let term: TerminationRecord = read_json(&cfg.termination_path());
    assert_eq!(term.termination, Termination::MonitorFloor { monitor: "separation".into() });
    assert!(term.final_monitors.separation <= 1.5);
    let rows = rows::read_jsonl(&cfg.jsonl_path()).unwrap();
    assert!(rows.iter().all(|r| r.monitors.separation > 1.5));
    let s: Vec<f64> = rows.iter().map(|r| r.s).collect();
    assert!(s.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn uniform_floor_of_one_half_terminates_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.continuation.floors = vortex_pairs::MonitorFloors::uniform(0.5);
    let out = cmd_continue(&cfg, None).unwrap();
    assert_eq!(out.exit_code, EXIT_FLOOR);
    let term: TerminationRecord = read_json(&cfg.termination_path());
    assert!(matches!(term.termination, Termination::MonitorFloor { .. }));
}

#[test]
fn resumed_branch_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut full = small_config(&dir.path().join("full"));
    full.continuation.max_steps = 10;
    cmd_continue(&full, None).unwrap();

    for cut in [0, 4] {
        let mut part = small_config(&dir.path().join(format!("part{cut}")));
        part.continuation.max_steps = cut;
        cmd_continue(&part, None).unwrap();
        let mut resumed = small_config(&dir.path().join(format!("resumed{cut}")));
        resumed.continuation.max_steps = 10;
        cmd_continue(&resumed, Some(&part.jsonl_path())).unwrap();
        assert_eq!(
            std::fs::read(full.jsonl_path()).unwrap(),
            std::fs::read(resumed.jsonl_path()).unwrap(),
            "resume after {cut} steps"
        );
    }
}

#[test]
fn resume_rejects_mismatched_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.continuation.max_steps = 0;
    cmd_continue(&cfg, None).unwrap();
    let mut other = small_config(&dir.path().join("other"));
    other.l = 2.0;
    let err = cmd_continue(&other, Some(&cfg.jsonl_path())).unwrap_err();
    assert_eq!(commands::exit_code_for(&err), EXIT_CONFIG);
}

#[test]
fn branch_row_round_trip_is_exact() {
    let rule = QuadratureRule::new(64);
    let pts = solver::local_curve(1.0, PairKind::Corotating, 8, &[0.03, 0.07], &NewtonSettings::default(), &rule).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.jsonl");
    let written: Vec<BranchRow> =
        pts.iter().enumerate().map(|(i, p)| BranchRow::from_point(i, p, 64, 0.1 * i as f64, 0.1, 0.2)).collect();
    rows::write_jsonl(&path, &written).unwrap();
    let read = rows::read_jsonl(&path).unwrap();
    assert_eq!(read, written);
    for (r, p) in read.iter().zip(&pts) {
        let mut back = r.to_point().unwrap();
        back.residual_history = p.residual_history.clone();
        assert_eq!(&back, p);
        assert_eq!(r.coeffs.iter().map(|c| c.to_bits()).collect::<Vec<_>>(), p.boundary.coeffs().iter().map(|c| c.to_bits()).collect::<Vec<_>>());
    }
}

fn polygons(svg: &str) -> Vec<Vec<(f64, f64)>> {
    svg.lines()
        .filter(|l| l.starts_with("<polygon"))
        .map(|l| {
            let start = l.find("points=\"").unwrap() + 8;
            let end = start + l[start..].find('"').unwrap();
            l[start..end]
                .split(' ')
                .map(|p| {
                    let (x, y) = p.split_once(',').unwrap();
                    (x.parse().unwrap(), y.parse().unwrap())
                })
                .collect()
        })
        .collect()
}

fn trivial_branch_file(dir: &Path, eps: f64) -> PathBuf {
    let rule = QuadratureRule::new(64);
    let b = FourierBoundary::disks(1.0, eps, PairKind::Corotating, 8).unwrap();
    let eval = vortex_pairs::operator::evaluate(&b, &rule).unwrap();
    let diagnostics = vortex_pairs::diagnostics::diagnose(&b, eval.speed, &rule);
    let point = vortex_pairs::SolutionPoint {
        boundary: b,
        speed: eval.speed,
        residual_norm: eval.residual.sup_norm(),
        mode1_residual: eval.residual.mode1_monitor,
        diagnostics,
        jacobian_condition: 1.0,
        iterations: 0,
        residual_history: vec![],
    };
    let path = dir.join("trivial.jsonl");
    rows::write_jsonl(&path, &[BranchRow::from_point(0, &point, 64, 0.0, 0.0, 0.0)]).unwrap();
    path
}

#[test]
fn trivial_row_plots_two_circles() {
    let dir = tempfile::tempdir().unwrap();
    let path = trivial_branch_file(dir.path(), 0.3);
    let out = cmd_plot(&path, &[0], dir.path()).unwrap();
    assert_eq!(out.files.len(), 2);
    let svg = std::fs::read_to_string(dir.path().join("trivial_contour_0.svg")).unwrap();
    let polys = polygons(&svg);
    assert_eq!(polys.len(), 2);
    let mut centers = Vec::new();
    let mut radii = Vec::new();
    for poly in &polys {
        let n = poly.len() as f64;
        let cx = poly.iter().map(|p| p.0).sum::<f64>() / n;
        let cy = poly.iter().map(|p| p.1).sum::<f64>() / n;
        let r: Vec<f64> = poly.iter().map(|p| ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()).collect();
        let (lo, hi) = r.iter().fold((f64::MAX, 0.0_f64), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(hi - lo < 2e-3, "not a circle: {lo} .. {hi}");
        centers.push((cx, cy));
        radii.push(lo);
    }
    // centers at +-l, radius eps, in the same canvas scale
    let gap = (centers[0].0 - centers[1].0).abs();
    assert!((centers[0].1 - centers[1].1).abs() < 1e-3);
    assert!((radii[0] / gap - 0.3 / 2.0).abs() < 1e-4, "{} {}", radii[0], gap);
}

#[test]
fn empty_index_list_draws_monitors_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = trivial_branch_file(dir.path(), 0.1);
    let out = cmd_plot(&path, &[], dir.path()).unwrap();
    assert_eq!(out.files, vec![dir.path().join("trivial_monitors.svg")]);
    let a = std::fs::read(&out.files[0]).unwrap();
    cmd_plot(&path, &[], dir.path()).unwrap();
    assert_eq!(a, std::fs::read(&out.files[0]).unwrap());
    assert!(cmd_plot(&path, &[3], dir.path()).is_err());
}

#[test]
fn diagnose_recomputes_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.continuation.max_steps = 3;
    cmd_continue(&cfg, None).unwrap();
    let out = cmd_diagnose(&cfg.jsonl_path(), None).unwrap();
    assert_eq!(out.exit_code, EXIT_OK);
    let text = std::fs::read_to_string(&out.files[0]).unwrap();
    let reports: Vec<commands::DiagnosticReport> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(reports.len(), 4);
    for r in &reports {
        assert!(r.failures.is_empty());
        assert!(r.residual < 1e-11);
        assert_eq!(r.speed_drift, 0.0);
        assert!(r.steadiness.unwrap() < 1e-9, "{:?}", r.steadiness);
    }
}

#[test]
fn binary_continue_exit_code_for_floor() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["continue", "--set", "n_modes=8", "--set", "nodes=64", "--set", "continuation.floors.separation=1.6", "-o"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_FLOOR));
    assert!(dir.path().join("branch.termination.json").exists());
}
