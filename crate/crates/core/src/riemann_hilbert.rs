//! Scalar Riemann-Hilbert problems `Im(a g') = 0` on the unit circle.
//!
//! For a coefficient `a` with winding number zero and `a(conj w) = conj(a(w))`
//! the homogeneous problem has the explicit solution
//! `g0'(w) = exp{(w / 2pi) oint (theta(tau)/tau - theta(w)/w) / (tau - w) dtau}`
//! with `theta = arg(a / conj a)` normalized by `theta(1) = 0`, and the
//! inhomogeneous problem `Im(a g') = h` is inverted by a Cauchy-type formula
//! built on `g0'`. Both are used here as independent checks on computed
//! solutions, never in the production solve.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::boundary::{self, GridSample};
use crate::error::{Error, Result};
use crate::integrals::QuadratureRule;
use crate::operator::SinSeries;

/// Largest admissible change of unwrapped argument between adjacent nodes.
const MAX_JUMP: f64 = PI / 2.0;
/// Relative modulus below which a coefficient counts as vanishing.
const VANISHING_TOL: f64 = 1e-13;

/// Winding number with its unrounded value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    pub number: i64,
    /// Total argument change over `2 pi`; distance from an integer measures
    /// how well the grid resolves the argument.
    pub raw: f64,
}

fn check_nonvanishing(values: &[Complex64]) -> Result<()> {
    let max = values.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let min = values.iter().fold(f64::INFINITY, |m, v| m.min(v.norm()));
    if !(min > VANISHING_TOL * max.max(1e-300)) {
        return Err(Error::VanishingFunction(min));
    }
    Ok(())
}

/// Continuous argument along the grid starting at node 0, closing back at node 0.
///
/// Returns `M + 1` values; the last is the argument after one full turn.
pub fn unwrapped_arg(values: &[Complex64]) -> Result<Vec<f64>> {
    check_nonvanishing(values)?;
    let mut out = Vec::with_capacity(values.len() + 1);
    let mut current = values[0].arg();
    out.push(current);
    for k in 1..=values.len() {
        let next = values[k % values.len()];
        let prev = values[k - 1];
        let jump = (next / prev).arg();
        if jump.abs() > MAX_JUMP {
            return Err(Error::UnwrapJump(jump));
        }
        current += jump;
        out.push(current);
    }
    Ok(out)
}

/// Number of turns of `a` around the origin along the circle.
pub fn winding_number(a: &GridSample) -> Result<Winding> {
    let args = unwrapped_arg(&a.values)?;
    let raw = (args[args.len() - 1] - args[0]) / (2.0 * PI);
    Ok(Winding { number: raw.round() as i64, raw })
}

/// Coefficient `a` together with its argument function `theta`.
#[derive(Debug, Clone)]
pub struct RhCoefficient {
    pub a: GridSample,
    /// `theta = arg(a / conj a)`, continuous, with `theta(1) = 0`.
    pub theta: Vec<f64>,
}

impl RhCoefficient {
    pub fn new(a: GridSample) -> Result<Self> {
        if a.offset != 0.0 {
            return Err(Error::InvalidBoundary("Riemann-Hilbert data must live on the standard grid".into()));
        }
        let winding = winding_number(&a)?;
        if winding.number != 0 {
            return Err(Error::NonzeroWinding(winding.number));
        }
        if !boundary::symmetry_check(&a) {
            return Err(Error::SymmetryViolation(
                (a.values[0].im.abs()).max(a.values[a.len() / 2].im.abs()),
            ));
        }
        let ratio: Vec<Complex64> = a.values.iter().map(|v| v / v.conj()).collect();
        let mut theta = unwrapped_arg(&ratio)?;
        theta.pop();
        let base = theta[0];
        theta.iter_mut().for_each(|t| *t -= base);
        Ok(Self { a, theta })
    }

    pub fn m(&self) -> usize {
        self.theta.len()
    }
}

/// `g0'` from the explicit exponential formula, normalized so that its mean
/// over the circle (the value at infinity) is one.
pub fn rh_solve_homogeneous(coef: &RhCoefficient) -> Result<GridSample> {
    let m = coef.m();
    let rule = QuadratureRule::new(m);
    let ws = rule.nodes();
    // h(tau) = theta(tau) / tau and its derivative along the circle
    let h = GridSample::new(coef.theta.iter().zip(ws).map(|(t, w)| *t / w).collect(), 0.0);
    let dh = boundary::spectral_derivative(&h);
    let exponent: Vec<Complex64> = (0..m)
        .map(|k| {
            let w = ws[k];
            let sum: Complex64 = (0..m)
                .map(|j| {
                    let q = if j == k { dh.values[k] } else { (h.values[j] - h.values[k]) / (ws[j] - w) };
                    q * rule.weights()[j]
                })
                .sum();
            w / (2.0 * PI) * sum
        })
        .collect();
    let g = GridSample::new(exponent.iter().map(|e| e.exp()).collect(), 0.0);
    Ok(normalize_at_infinity(&g))
}

/// Divides by the mean value, i.e. the limit at infinity of the exterior extension.
pub fn normalize_at_infinity(g: &GridSample) -> GridSample {
    let mean = boundary::fourier_mode(g, 0);
    GridSample::new(g.values.iter().map(|v| v / mean).collect(), g.offset)
}

/// Samples `h(theta) = sum b_m sin(m theta)` including the mode-1 monitor.
pub fn sin_series_samples(h: &SinSeries, m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| {
            let t = boundary::node_angle(j, m, 0.0);
            h.mode1_monitor * t.sin()
                + h.coeffs.iter().enumerate().map(|(i, c)| c * ((i + 2) as f64 * t).sin()).sum::<f64>()
        })
        .collect()
}

/// Derivative of `L^{-1} h` for `L g = Im(a g')`:
/// `-(w g0'(w) / pi) oint (q(tau) - q(w)) / (tau - w) dtau` with
/// `q = h / (a g0' tau)`.
pub fn rh_inverse(coef: &RhCoefficient, g0_prime: &GridSample, h: &SinSeries) -> Result<GridSample> {
    let m = coef.m();
    rh_inverse_samples(coef, g0_prime, &sin_series_samples(h, m))
}

/// [`rh_inverse`] for right-hand sides given as grid samples.
pub fn rh_inverse_samples(coef: &RhCoefficient, g0_prime: &GridSample, h: &[f64]) -> Result<GridSample> {
    let m = coef.m();
    if g0_prime.len() != m || h.len() != m {
        return Err(Error::InvalidBoundary("Riemann-Hilbert inputs live on different grids".into()));
    }
    check_nonvanishing(&g0_prime.values)?;
    let rule = QuadratureRule::new(m);
    let ws = rule.nodes();
    let q = GridSample::new(
        (0..m).map(|j| h[j] / (coef.a.values[j] * g0_prime.values[j] * ws[j])).collect(),
        0.0,
    );
    let dq = boundary::spectral_derivative(&q);
    let values = (0..m)
        .map(|k| {
            let w = ws[k];
            let sum: Complex64 = (0..m)
                .map(|j| {
                    let d = if j == k { dq.values[k] } else { (q.values[j] - q.values[k]) / (ws[j] - w) };
                    d * rule.weights()[j]
                })
                .sum();
            -(w * g0_prime.values[k] / PI) * sum
        })
        .collect();
    Ok(GridSample::new(values, 0.0))
}

/// Applies `L g = Im(a g')` to samples of `g'`.
pub fn apply_l(a: &GridSample, g_prime: &GridSample) -> Vec<f64> {
    a.values.iter().zip(&g_prime.values).map(|(x, y)| (x * y).im).collect()
}

/// Reconstruction of `phi'` from `A`, normalized to agree with `phi'` at `w = 1`.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub phi_prime: GridSample,
    /// `max |reconstructed - phi'|` after the one-point normalization.
    pub max_error: f64,
    /// `max |phi|` of the antiderivative of the reconstruction.
    pub koebe_sup: f64,
}

/// Rebuilds `phi'` from the coefficient `a` of `Im(a phi') = 0`.
pub fn reconstruct_phi_prime(a: &GridSample, phi_prime: &GridSample) -> Result<Reconstruction> {
    let coef = RhCoefficient::new(a.clone())?;
    let g0 = rh_solve_homogeneous(&coef)?;
    let scale = phi_prime.values[0] / g0.values[0];
    let rebuilt = GridSample::new(g0.values.iter().map(|v| v * scale).collect(), 0.0);
    let max_error = rebuilt
        .values
        .iter()
        .zip(&phi_prime.values)
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()));
    let (phi, _) = boundary::spectral_antiderivative(&rebuilt);
    Ok(Reconstruction { koebe_sup: phi.max_modulus(), phi_prime: rebuilt, max_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn winding_of_simple_functions() {
        let one = GridSample::from_fn(32, 0.0, |_| c(1.0, 0.0));
        assert_eq!(winding_number(&one).unwrap().number, 0);
        let w = GridSample::from_fn(32, 0.0, |w| w);
        let wn = winding_number(&w).unwrap();
        assert_eq!(wn.number, 1);
        assert!((wn.raw - 1.0).abs() < 1e-12);
        let w3 = GridSample::from_fn(32, 0.0, |w| w.powi(-3));
        assert_eq!(winding_number(&w3).unwrap().number, -3);
    }

    #[test]
    fn coarse_grid_fails_loudly() {
        let w = GridSample::from_fn(8, 0.0, |w| w.powi(3));
        assert!(matches!(winding_number(&w), Err(Error::UnwrapJump(_))));
        let z = GridSample::from_fn(8, 0.0, |w| w - 1.0);
        assert!(matches!(winding_number(&z), Err(Error::VanishingFunction(_))));
    }

    #[test]
    fn trivial_coefficients_give_unit_solution() {
        for a in [GridSample::from_fn(32, 0.0, |_| c(1.0, 0.0)), GridSample::from_fn(32, 0.0, |w| c(2.0 + w.re, 0.0))] {
            let coef = RhCoefficient::new(a).unwrap();
            assert!(coef.theta.iter().all(|t| t.abs() < 1e-15));
            let g = rh_solve_homogeneous(&coef).unwrap();
            assert!(g.values.iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-14));
        }
    }

    #[test]
    fn nonzero_winding_is_rejected() {
        let a = GridSample::from_fn(32, 0.0, |w| w);
        assert!(matches!(RhCoefficient::new(a), Err(Error::NonzeroWinding(1))));
    }

    #[test]
    fn homogeneous_solution_recovers_exponential_derivative() {
        // phi' = exp(G) with G = 0.2/w^2 - 0.1/w^3; a = conj(phi') solves Im(a phi') = 0
        let m = 64;
        let target = GridSample::from_fn(m, 0.0, |w| (0.2 * w.powi(-2) - 0.1 * w.powi(-3)).exp());
        let a = GridSample::new(target.values.iter().map(|v| -3.0 * v.conj()).collect(), 0.0);
        let coef = RhCoefficient::new(a).unwrap();
        let g = rh_solve_homogeneous(&coef).unwrap();
        for (x, y) in g.values.iter().zip(&target.values) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_with_unit_coefficient() {
        let m = 32;
        let coef = RhCoefficient::new(GridSample::from_fn(m, 0.0, |_| c(1.0, 0.0))).unwrap();
        let g0 = rh_solve_homogeneous(&coef).unwrap();
        // Im g' = sin(2 theta) for g = 1/w, so g' = -1/w^2
        let h = SinSeries { coeffs: vec![1.0, 0.0, 0.0], mode1_monitor: 0.0, tail: 0.0 };
        let gp = rh_inverse(&coef, &g0, &h).unwrap();
        for (v, w) in gp.values.iter().zip(boundary::nodes(m, 0.0)) {
            assert!((v + w.powi(-2)).norm() < 1e-12);
        }
        let zero = SinSeries { coeffs: vec![0.0; 3], mode1_monitor: 0.0, tail: 0.0 };
        assert!(rh_inverse(&coef, &g0, &zero).unwrap().max_modulus() < 1e-15);
    }

    #[test]
    fn inverse_round_trip_for_known_derivative() {
        // L(g) for g = w^{-2} with a = 1 recovers g' = -2 w^{-3}.
        let m = 32;
        let coef = RhCoefficient::new(GridSample::from_fn(m, 0.0, |_| c(1.0, 0.0))).unwrap();
        let g0 = rh_solve_homogeneous(&coef).unwrap();
        let gp = GridSample::from_fn(m, 0.0, |w| -2.0 * w.powi(-3));
        let h = apply_l(&coef.a, &gp);
        let back = rh_inverse_samples(&coef, &g0, &h).unwrap();
        for (x, y) in back.values.iter().zip(&gp.values) {
            assert!((x - y).norm() < 1e-8);
        }
    }
}
