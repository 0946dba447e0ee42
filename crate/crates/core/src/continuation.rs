//! Pseudo-arclength continuation in `(a_1..a_N, eps)` with blow-up monitors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::boundary::{self, FourierBoundary, PairKind};
use crate::diagnostics::{MonitorVector, MONITOR_NAMES};
use crate::error::{Error, Result};
use crate::integrals::QuadratureRule;
use crate::operator;
use crate::solver::{self, NewtonSettings, SolutionPoint};

/// Tolerance on the arclength constraint `<x - x_pred, t>`.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// Jacobian condition number treated as a secondary bifurcation.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Floors on the scaled monitors, see [`MonitorVector::scaled`]; the `eps`
/// floor is relative to the seed scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorFloors {
    pub min_a: f64,
    pub angle_margin: f64,
    pub min_phi_prime: f64,
    pub min_phi: f64,
    pub separation: f64,
    pub eps: f64,
}

impl Default for MonitorFloors {
    fn default() -> Self {
        Self::uniform(5e-2)
    }
}

impl MonitorFloors {
    pub fn uniform(v: f64) -> Self {
        Self { min_a: v, angle_margin: v, min_phi_prime: v, min_phi: v, separation: v, eps: v }
    }

    fn as_array(&self) -> [f64; 6] {
        [self.min_a, self.angle_margin, self.min_phi_prime, self.min_phi, self.separation, self.eps]
    }

    /// Name of the first monitor at or below its floor.
    pub fn violated(&self, m: &MonitorVector, l: f64, eps_seed: f64) -> Option<&'static str> {
        let mut scaled = m.scaled(l);
        scaled[5] = m.eps / eps_seed;
        let floors = self.as_array();
        (0..6).find(|&i| !(scaled[i] > floors[i])).map(|i| MONITOR_NAMES[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationSettings {
    pub eps_seed: f64,
    pub ds_min: f64,
    pub ds_init: f64,
    pub ds_max: f64,
    pub max_steps: usize,
    /// Stop once `eps >= eps_ceiling * l`.
    pub eps_ceiling: f64,
    /// Corrector iterations at or below which the step grows.
    pub fast_iterations: usize,
    pub floors: MonitorFloors,
    pub newton: NewtonSettings,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            eps_seed: 0.08,
            ds_min: 1e-5,
            ds_init: 1e-2,
            ds_max: 5e-2,
            max_steps: 400,
            eps_ceiling: 10.0,
            fast_iterations: 3,
            floors: MonitorFloors::default(),
            newton: NewtonSettings::default(),
        }
    }
}

impl ContinuationSettings {
    pub fn validate(&self, l: f64) -> Result<()> {
        self.newton.validate()?;
        if !(self.eps_seed > 0.0 && self.eps_seed < 0.1 * l) {
            return Err(Error::Config(format!("eps_seed must lie in (0, 0.1 l), got {}", self.eps_seed)));
        }
        if !(self.ds_min > 0.0 && self.ds_min <= self.ds_init && self.ds_init <= self.ds_max) {
            return Err(Error::Config("step sizes need 0 < ds_min <= ds_init <= ds_max".into()));
        }
        if self.floors.as_array().iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::Config("monitor floors must be nonnegative".into()));
        }
        if !(self.eps_ceiling > self.eps_seed / l) {
            return Err(Error::Config("eps_ceiling must exceed eps_seed / l".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    MonitorFloor { monitor: String },
    EpsCeiling,
    MaxSteps,
    SolverFailure { reason: String },
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::MonitorFloor { monitor } => write!(f, "monitor_floor({monitor})"),
            Termination::EpsCeiling => f.write_str("eps_ceiling"),
            Termination::MaxSteps => f.write_str("max_steps"),
            Termination::SolverFailure { reason } => write!(f, "solver_failure({reason})"),
        }
    }
}

/// An accepted branch: the seed followed by arclength steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub points: Vec<SolutionPoint>,
    /// Cumulative arclength; zero at the seed.
    pub s: Vec<f64>,
    /// Step used to reach each point; zero at the seed.
    pub step_sizes: Vec<f64>,
    /// Step size the next step would have tried from each point.
    pub next_step: Vec<f64>,
    pub termination: Termination,
    /// Monitors of the last converged point, including a rejected one that
    /// crossed a floor.
    pub final_monitors: MonitorVector,
}

/// Branch coordinates `(a_1..a_N, eps)`.
pub fn branch_state(b: &FourierBoundary) -> DVector<f64> {
    let n = b.n_modes();
    DVector::from_fn(n + 1, |i, _| if i < n { b.coeffs()[i] } else { b.eps() })
}

fn boundary_at(template: &FourierBoundary, x: &DVector<f64>) -> Result<FourierBoundary> {
    let n = template.n_modes();
    FourierBoundary::new(template.l(), x[n], template.kind(), x.as_slice()[..n].to_vec())
}

/// Normalized secant from `prev` to `curr`.
pub fn tangent(prev: &FourierBoundary, curr: &FourierBoundary) -> Result<DVector<f64>> {
    let d = branch_state(curr) - branch_state(prev);
    let norm = d.norm();
    if !(norm > 1e-14) {
        return Err(Error::CoincidentPoints);
    }
    Ok(d / norm)
}

/// A corrected point with the number of corrector iterations it took.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub point: SolutionPoint,
    pub iterations: usize,
}

/// Predictor `curr + ds t`, then Newton on the bordered system
/// `{R(x) = 0, <x - x_pred, t> = 0}` in `(a, eps)`.
pub fn arclength_step(
    curr: &SolutionPoint,
    t: &DVector<f64>,
    ds: f64,
    settings: &NewtonSettings,
    rule: &QuadratureRule,
) -> Result<StepOutcome> {
    let template = &curr.boundary;
    let n = template.n_modes();
    let x_pred = branch_state(template) + t * ds;
    let mut x = x_pred.clone();
    let mut b = boundary_at(template, &x)?;
    let mut eval = solver::admissible_eval(&b, rule)?;
    let constraint = |x: &DVector<f64>| t.dot(&(x - &x_pred));
    let measure = |r: &[f64], c: f64| r.iter().fold(c.abs(), |acc, v| acc.max(v.abs()));
    let mut norm = measure(&eval.residual.coeffs, constraint(&x));
    let mut history = vec![norm];
    let mut iterations = 0;
    let mut condition = f64::NAN;
    while eval.residual.sup_norm() > settings.tol_residual || constraint(&x).abs() > CONSTRAINT_TOL {
        if iterations == settings.max_iter {
            return Err(Error::NewtonDiverged { iterations, residual: norm });
        }
        iterations += 1;
        let j = solver::jacobian_with_eps(&b, settings.fd_step, rule)?;
        condition = solver::condition_number(&j.columns(0, n).into_owned());
        if condition > CONDITION_LIMIT {
            return Err(Error::SingularJacobian);
        }
        let mut bordered = DMatrix::zeros(n + 1, n + 1);
        bordered.rows_mut(0, n).copy_from(&j);
        bordered.row_mut(n).copy_from(&t.transpose());
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            rhs[i] = -eval.residual.coeffs[i];
        }
        rhs[n] = -constraint(&x);
        let delta = solver::solve_linear(bordered, &rhs)?;

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=settings.max_backtracks {
            let cand = &x + &delta * step;
            if let Ok(cb) = boundary_at(template, &cand) {
                if let Ok(e) = solver::admissible_eval(&cb, rule) {
                    if measure(&e.residual.coeffs, constraint(&cand)) < norm {
                        accepted = Some((cand, cb, e));
                        break;
                    }
                }
            }
            step *= settings.backtrack_factor;
        }
        let Some((cand, cb, e)) = accepted else {
            return Err(Error::LineSearchFailed { iteration: iterations, residual: norm });
        };
        x = cand;
        b = cb;
        eval = e;
        norm = measure(&eval.residual.coeffs, constraint(&x));
        history.push(norm);
    }
    if condition.is_nan() {
        condition = solver::condition_number(&solver::jacobian_fd(&b, settings.fd_step, rule)?);
    }
    // accepted points are judged on a from-scratch evaluation
    let fresh = operator::evaluate(&b, rule)?;
    let point = solver::finish(b, &fresh, condition, iterations, history, rule);
    Ok(StepOutcome { point, iterations })
}

/// Scales of the two local-curve solves used to seed the branch.
pub fn seed_scales(settings: &ContinuationSettings) -> [f64; 2] {
    [0.9 * settings.eps_seed, settings.eps_seed]
}

/// Solves the two seed points; the second one opens the branch.
pub fn seed(
    l: f64,
    kind: PairKind,
    n: usize,
    settings: &ContinuationSettings,
    rule: &QuadratureRule,
) -> Result<(SolutionPoint, SolutionPoint)> {
    let mut pts = solver::local_curve(l, kind, n, &seed_scales(settings), &settings.newton, rule)?;
    let curr = pts.pop().expect("two seed points");
    let prev = pts.pop().expect("two seed points");
    Ok((prev, curr))
}

/// Where a branch resumes: the last accepted point, the point before it (for
/// the secant) and the running arclength bookkeeping.
#[derive(Debug, Clone)]
pub struct ResumeState {
    pub record: BranchRecord,
    pub prev: FourierBoundary,
}

/// Runs from the seed until a termination condition.
pub fn run_continuation(
    l: f64,
    kind: PairKind,
    n: usize,
    settings: &ContinuationSettings,
    rule: &QuadratureRule,
) -> Result<BranchRecord> {
    settings.validate(l)?;
    boundary::check_resolution(rule.m(), n)?;
    let (prev, curr) = seed(l, kind, n, settings, rule)?;
    let record = BranchRecord {
        final_monitors: curr.diagnostics.monitors,
        points: vec![curr],
        s: vec![0.0],
        step_sizes: vec![0.0],
        next_step: vec![settings.ds_init],
        termination: Termination::MaxSteps,
    };
    continue_branch(ResumeState { record, prev: prev.boundary }, settings, rule)
}


/// Continues an existing record; the result depends only on its last two
/// states and `next_step`, so a resumed run reproduces the original.
pub fn continue_branch(state: ResumeState, settings: &ContinuationSettings, rule: &QuadratureRule) -> Result<BranchRecord> {
    settings.validate(state.record.points[0].boundary.l())?;
    let ResumeState { mut record, mut prev } = state;
    let l = prev.l();
    let seed_eps = record.points[0].boundary.eps();
    let last = record.points.last().expect("nonempty record");
    if let Some(name) = settings.floors.violated(&last.diagnostics.monitors, l, seed_eps) {
        record.termination = Termination::MonitorFloor { monitor: name.to_string() };
        return Ok(record);
    }
    let mut ds = *record.next_step.last().expect("nonempty record");
    record.termination = loop {
        let steps_taken = record.points.len() - 1;
        if steps_taken >= settings.max_steps {
            break Termination::MaxSteps;
        }
        let curr = record.points.last().expect("nonempty record").clone();
        let t = tangent(&prev, &curr.boundary)?;
        let outcome = arclength_step(&curr, &t, ds, &settings.newton, rule).and_then(|o| {
            let jump = (state_of(&o.point) - branch_state(&curr.boundary)).amax();
            if jump > 2.0 * ds {
                Err(Error::NewtonDiverged { iterations: o.iterations, residual: jump })
            } else {
                Ok(o)
            }
        });
        match outcome {
            Ok(StepOutcome { point, iterations }) => {
                record.final_monitors = point.diagnostics.monitors;
                if let Some(name) = settings.floors.violated(&point.diagnostics.monitors, l, seed_eps) {
                    break Termination::MonitorFloor { monitor: name.to_string() };
                }
                let next = if iterations <= settings.fast_iterations { (ds * 1.3).min(settings.ds_max) } else { ds };
                let reached_ceiling = point.boundary.eps() >= settings.eps_ceiling * l;
                prev = curr.boundary;
                record.s.push(record.s.last().expect("nonempty record") + ds);
                record.step_sizes.push(ds);
                record.next_step.push(next);
                record.points.push(point);
                ds = next;
                if reached_ceiling {
                    break Termination::EpsCeiling;
                }
            }
            Err(e) => {
                ds *= 0.5;
                if ds < settings.ds_min {
                    break Termination::SolverFailure { reason: e.to_string() };
                }
            }
        }
    };
    Ok(record)
}

fn state_of(p: &SolutionPoint) -> DVector<f64> {
    branch_state(&p.boundary)
}
