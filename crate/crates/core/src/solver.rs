//! Damped Newton solve at fixed patch scale with a central-difference Jacobian.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{FourierBoundary, PairKind};
use crate::diagnostics::{self, Diagnostics};
use crate::error::{Error, Result};
use crate::integrals::QuadratureRule;
use crate::operator::{self, Evaluation, SpeedValue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonSettings {
    /// Sup norm of the projected residual accepted as converged.
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Central-difference step.
    pub fd_step: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tol_residual: 1e-11, max_iter: 25, fd_step: 1e-6, backtrack_factor: 0.5, max_backtracks: 10 }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) || self.max_iter < 1 || !(self.fd_step > 0.0) {
            return Err(Error::Config("newton settings need tol_residual > 0, max_iter >= 1, fd_step > 0".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::Config("backtrack_factor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// A converged, certified boundary with its enslaved speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPoint {
    pub boundary: FourierBoundary,
    pub speed: SpeedValue,
    pub residual_norm: f64,
    pub mode1_residual: f64,
    pub diagnostics: Diagnostics,
    /// 2-norm condition number of the last Newton Jacobian.
    pub jacobian_condition: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

pub(crate) fn admissible_eval(b: &FourierBoundary, rule: &QuadratureRule) -> Result<Evaluation> {
    diagnostics::check_admissible(b, rule)?;
    operator::evaluate(b, rule)
}

fn perturbed(b: &FourierBoundary, index: usize, delta: f64) -> Result<FourierBoundary> {
    let n = b.n_modes();
    if index < n {
        let mut a = b.coeffs().to_vec();
        a[index] += delta;
        b.with_coeffs(a)
    } else {
        b.with_eps(b.eps() + delta)
    }
}

fn fd_column(b: &FourierBoundary, index: usize, h: f64, rule: &QuadratureRule) -> Result<Vec<f64>> {
    let column = |h: f64| -> Result<Vec<f64>> {
        // one-sided in eps when a central stencil would cross eps = 0
        let (lo_shift, hi_shift) = if index == b.n_modes() && b.eps() < h { (0.0, h) } else { (-h, h) };
        let hi = operator::evaluate(&perturbed(b, index, hi_shift)?, rule)?;
        let lo = operator::evaluate(&perturbed(b, index, lo_shift)?, rule)?;
        let span = hi_shift - lo_shift;
        Ok(hi.residual.coeffs.iter().zip(&lo.residual.coeffs).map(|(p, q)| (p - q) / span).collect())
    };
    column(h).or_else(|_| column(h / 10.0))
}

fn assemble(b: &FourierBoundary, cols: usize, h: f64, rule: &QuadratureRule) -> Result<DMatrix<f64>> {
    let columns = (0..cols)
        .into_par_iter()
        .map(|i| fd_column(b, i, h, rule))
        .collect::<Result<Vec<_>>>()?;
    let n = b.n_modes();
    Ok(DMatrix::from_fn(n, cols, |r, c| columns[c][r]))
}

/// `N x N` Jacobian of the projected residual with respect to `a_1..a_N`;
/// row `i` is mode `sin((i + 2) theta)`.
pub fn jacobian_fd(b: &FourierBoundary, h: f64, rule: &QuadratureRule) -> Result<DMatrix<f64>> {
    assemble(b, b.n_modes(), h, rule)
}

/// `N x (N + 1)` Jacobian whose last column is the derivative in `eps`.
pub fn jacobian_with_eps(b: &FourierBoundary, h: f64, rule: &QuadratureRule) -> Result<DMatrix<f64>> {
    assemble(b, b.n_modes() + 1, h, rule)
}

/// Ratio of extreme singular values.
pub fn condition_number(j: &DMatrix<f64>) -> f64 {
    let sv = j.singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

pub(crate) fn solve_linear(j: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = j.amax();
    let lu = j.lu();
    let u_min = (0..rhs.len()).map(|i| lu.u()[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if !(u_min > 1e-14 * scale) {
        return Err(Error::SingularJacobian);
    }
    lu.solve(rhs).ok_or(Error::SingularJacobian)
}

/// Packages a converged boundary with diagnostics.
pub(crate) fn finish(
    b: FourierBoundary,
    eval: &Evaluation,
    jacobian_condition: f64,
    iterations: usize,
    residual_history: Vec<f64>,
    rule: &QuadratureRule,
) -> SolutionPoint {
    let diagnostics = diagnostics::diagnose(&b, eval.speed, rule);
    SolutionPoint {
        boundary: b,
        speed: eval.speed,
        residual_norm: eval.residual.sup_norm(),
        mode1_residual: eval.residual.mode1_monitor,
        diagnostics,
        jacobian_condition,
        iterations,
        residual_history,
    }
}

/// Solves for `a_1..a_N` at the scale of `initial`, starting from its coefficients.
pub fn newton_solve(initial: &FourierBoundary, settings: &NewtonSettings, rule: &QuadratureRule) -> Result<SolutionPoint> {
    settings.validate()?;
    let mut b = initial.clone();
    let mut eval = admissible_eval(&b, rule)?;
    let mut norm = eval.residual.sup_norm();
    let mut history = vec![norm];
    let mut last_jacobian = None;
    let mut iterations = 0;
    while norm > settings.tol_residual {
        if iterations == settings.max_iter {
            return Err(Error::NewtonDiverged { iterations, residual: norm });
        }
        iterations += 1;
        let j = jacobian_fd(&b, settings.fd_step, rule)?;
        let rhs = -DVector::from_column_slice(&eval.residual.coeffs);
        let step = solve_linear(j.clone(), &rhs)?;
        last_jacobian = Some(j);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=settings.max_backtracks {
            let coeffs: Vec<f64> = b.coeffs().iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            if let Ok(candidate) = b.with_coeffs(coeffs) {
                if let Ok(e) = admissible_eval(&candidate, rule) {
                    if e.residual.sup_norm() < norm {
                        accepted = Some((candidate, e));
                        break;
                    }
                }
            }
            t *= settings.backtrack_factor;
        }
        let Some((candidate, e)) = accepted else {
            return Err(Error::LineSearchFailed { iteration: iterations, residual: norm });
        };
        b = candidate;
        eval = e;
        norm = eval.residual.sup_norm();
        history.push(norm);
    }
    let j = match last_jacobian {
        Some(j) => j,
        None => jacobian_fd(&b, settings.fd_step, rule)?,
    };
    Ok(finish(b, &eval, condition_number(&j), iterations, history, rule))
}

/// Warm-started solves along an increasing list of scales; each solve starts
/// from the previous solution.
pub fn local_curve(
    l: f64,
    kind: PairKind,
    n: usize,
    eps_list: &[f64],
    settings: &NewtonSettings,
    rule: &QuadratureRule,
) -> Result<Vec<SolutionPoint>> {
    match local_curve_partial(l, kind, n, eps_list, settings, rule) {
        (points, None) => Ok(points),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`local_curve`], but keeps the points solved before a failure.
pub fn local_curve_partial(
    l: f64,
    kind: PairKind,
    n: usize,
    eps_list: &[f64],
    settings: &NewtonSettings,
    rule: &QuadratureRule,
) -> (Vec<SolutionPoint>, Option<Error>) {
    if eps_list.windows(2).any(|w| !(w[1] > w[0])) {
        return (Vec::new(), Some(Error::Config("eps list must be strictly increasing".into())));
    }
    let mut out: Vec<SolutionPoint> = Vec::with_capacity(eps_list.len());
    for (index, &eps) in eps_list.iter().enumerate() {
        let wrap = |source: Error| Error::LocalCurve { index, eps, source: Box::new(source) };
        let start = match out.last() {
            Some(prev) => prev.boundary.with_eps(eps),
            None => FourierBoundary::disks(l, eps, kind, n),
        };
        match start.and_then(|b| newton_solve(&b, settings, rule)) {
            Ok(point) => out.push(point),
            Err(e) => return (out, Some(wrap(e))),
        }
    }
    (out, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn jacobian_at_origin_is_shifted_diagonal() {
        let rule = QuadratureRule::new(32);
        let b = FourierBoundary::disks(1.0, 0.0, PairKind::Corotating, 4).unwrap();
        let j = jacobian_fd(&b, 1e-6, &rule).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expected = if r == c { (c + 1) as f64 / (2.0 * PI) } else { 0.0 };
                assert!((j[(r, c)] - expected).abs() < 1e-8, "({r},{c}) = {}", j[(r, c)]);
            }
        }
        assert!((j[(0, 0)] - 0.159155).abs() < 1e-6);
        assert!((condition_number(&j) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn trivial_solution_needs_no_iteration() {
        let rule = QuadratureRule::new(64);
        let b = FourierBoundary::disks(1.0, 0.0, PairKind::Corotating, 8).unwrap();
        let p = newton_solve(&b, &NewtonSettings::default(), &rule).unwrap();
        assert_eq!(p.iterations, 0);
        assert_eq!(p.boundary.coeffs(), b.coeffs());
    }

    #[test]
    fn small_patch_converges() {
        let rule = QuadratureRule::new(64);
        let b = FourierBoundary::disks(1.0, 0.05, PairKind::Corotating, 8).unwrap();
        let p = newton_solve(&b, &NewtonSettings::default(), &rule).unwrap();
        assert!(p.residual_norm <= 1e-11);
        assert!(p.boundary.coeff_sup() < 0.1);
        let omega0 = 1.0 / (4.0 * PI);
        assert!((p.speed.value - omega0).abs() < 1e-3 * omega0, "{} {omega0}", p.speed.value);
        assert!(p.diagnostics.certified());
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let rule = QuadratureRule::new(32);
        let b = FourierBoundary::disks(1.0, 0.0, PairKind::Corotating, 4).unwrap();
        let s = NewtonSettings { max_iter: 0, ..Default::default() };
        assert!(matches!(newton_solve(&b, &s, &rule), Err(Error::Config(_))));
    }
}
