//! Nonlinear residuals for corotating and translating pairs.
//!
//! Both residuals use the eps-regular rearrangement
//! `(1/2pi) Im f' + Im[{J(f, eps) - S} w phi']` where the speed term `S` is
//! `Omega (eps conj(phi) + l)` for rotation and `-V` for translation. The
//! speed is enslaved: it is the unique value annihilating the `sin(theta)`
//! mode of the residual, so the remaining modes `2..=N+1` form a square
//! system for `a_1..a_N`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{FourierBoundary, GridSample, PairKind};
use crate::error::{Error, Result};
use crate::integrals::{self, BoundaryGrid, Contour, QuadratureRule};

/// Denominators of the speed ratios below this magnitude are rejected.
const NORMALIZATION_TOL: f64 = 1e-12;
/// Relative size allowed for the imaginary part of the angular speed ratio.
const SPEED_IMAG_TOL: f64 = 1e-10;
/// Allowed even (cosine) content of a grid residual.
const ODD_TOL: f64 = 1e-9;

/// Residual coefficients of `sin(m theta)` for `m = 2..=N+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinSeries {
    /// `coeffs[i]` multiplies `sin((i + 2) theta)`.
    pub coeffs: Vec<f64>,
    /// Coefficient of `sin(theta)`; annihilated by the enslaved speed.
    pub mode1_monitor: f64,
    /// Largest coefficient above mode `N+1`, a truncation indicator.
    pub tail: f64,
}

impl SinSeries {
    pub fn sup_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedKind {
    Angular,
    Translational,
}

/// Rotation rate `Omega` or translation speed `V` (pair moving along `-y`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedValue {
    pub kind: SpeedKind,
    pub value: f64,
}

impl SpeedValue {
    pub fn for_pair(kind: PairKind, value: f64) -> Self {
        let kind = match kind {
            PairKind::Corotating => SpeedKind::Angular,
            PairKind::Translating => SpeedKind::Translational,
        };
        Self { kind, value }
    }
}

/// Everything produced by one residual evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub residual: SinSeries,
    pub speed: SpeedValue,
    /// Residual samples on the grid before projection.
    pub grid_residual: Vec<f64>,
}

/// Projects real odd grid data onto `sin(m theta)`, `m = 1..M/2-1`.
pub fn sin_coefficients(values: &[f64], max_mode: usize) -> Vec<f64> {
    let m = values.len();
    (1..=max_mode)
        .map(|mode| {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| v * crate::boundary::node_power(mode as i64, j, m, 0.0).im)
                .sum();
            2.0 * s / m as f64
        })
        .collect()
}

/// Builds the `SinSeries` from grid residual samples for `n` unknowns.
pub fn project(values: &[f64], n: usize) -> Result<SinSeries> {
    let m = values.len();
    let even = (1..m / 2).fold(0.0_f64, |acc, j| acc.max((values[j] + values[m - j]).abs()));
    let even = even.max(values[0].abs()).max(values[m / 2].abs());
    if even > ODD_TOL {
        return Err(Error::SymmetryViolation(even));
    }
    let all = sin_coefficients(values, m / 2 - 1);
    let tail = all[n + 1..].iter().fold(0.0_f64, |acc, c| acc.max(c.abs()));
    Ok(SinSeries { coeffs: all[1..=n].to_vec(), mode1_monitor: all[0], tail })
}

struct Pieces {
    grid: BoundaryGrid,
    j: GridSample,
}

fn pieces(b: &FourierBoundary, rule: &QuadratureRule) -> Result<Pieces> {
    let grid = BoundaryGrid::new(b, rule.m())?;
    let j = integrals::kernel_parts(b, &grid, rule)?.combine(b.kind());
    Ok(Pieces { grid, j })
}

/// `sum_j Im[h_j w_j phi'_j] sin(theta_j)`, the `sin(theta)` moment of `Im[h w phi']`.
fn first_moment(h: impl Fn(usize) -> Complex64, grid: &BoundaryGrid, rule: &QuadratureRule) -> Complex64 {
    // Contour form: oint h (w - conj w) phi' dw = -2 sum_j h_j w_j phi'_j sin(theta_j) dtheta.
    let values: Vec<Complex64> = rule
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, w)| h(k) * (w - w.conj()) * grid.phi_prime.values[k])
        .collect();
    rule.contour_integral(&values)
}

fn angular_speed(b: &FourierBoundary, p: &Pieces, rule: &QuadratureRule) -> Result<f64> {
    let (eps, l) = (b.eps(), b.l());
    let num = first_moment(|k| p.j.values[k], &p.grid, rule);
    let den = first_moment(|k| eps * p.grid.phi.values[k].conj() + l, &p.grid, rule);
    if den.norm() < NORMALIZATION_TOL {
        return Err(Error::DegenerateNormalization(den.norm()));
    }
    let ratio = num / den;
    if ratio.im.abs() > SPEED_IMAG_TOL * ratio.re.abs().max(1.0) {
        return Err(Error::SymmetryViolation(ratio.im.abs()));
    }
    Ok(ratio.re)
}

fn translational_speed(p: &Pieces, rule: &QuadratureRule) -> Result<f64> {
    let num = first_moment(|k| p.j.values[k], &p.grid, rule);
    let den = first_moment(|_| Complex64::new(1.0, 0.0), &p.grid, rule);
    if den.norm() < NORMALIZATION_TOL {
        return Err(Error::DegenerateNormalization(den.norm()));
    }
    let ratio = -num / den;
    if ratio.im.abs() > SPEED_IMAG_TOL * ratio.re.abs().max(1.0) {
        return Err(Error::SymmetryViolation(ratio.im.abs()));
    }
    Ok(ratio.re)
}

/// Enslaved angular velocity `Omega(f, eps)`.
pub fn omega_of(b: &FourierBoundary, rule: &QuadratureRule) -> Result<SpeedValue> {
    let p = pieces(&b.with_kind(PairKind::Corotating)?, rule)?;
    Ok(SpeedValue { kind: SpeedKind::Angular, value: angular_speed(b, &p, rule)? })
}

/// Enslaved translation speed `V(f, eps)`.
pub fn speed_v_of(b: &FourierBoundary, rule: &QuadratureRule) -> Result<SpeedValue> {
    let p = pieces(&b.with_kind(PairKind::Translating)?, rule)?;
    Ok(SpeedValue { kind: SpeedKind::Translational, value: translational_speed(&p, rule)? })
}

fn grid_residual(b: &FourierBoundary, p: &Pieces, rule: &QuadratureRule, speed: f64) -> Vec<f64> {
    let (eps, l) = (b.eps(), b.l());
    rule.nodes()
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let phi = p.grid.phi.values[k];
            let shift = match b.kind() {
                PairKind::Corotating => speed * (eps * phi.conj() + l),
                PairKind::Translating => Complex64::new(-speed, 0.0),
            };
            p.grid.f_prime.values[k].im / (2.0 * PI) + ((p.j.values[k] - shift) * w * p.grid.phi_prime.values[k]).im
        })
        .collect()
}

/// Full residual evaluation for the pair kind stored in `b`.
pub fn evaluate(b: &FourierBoundary, rule: &QuadratureRule) -> Result<Evaluation> {
    let p = pieces(b, rule)?;
    let speed = match b.kind() {
        PairKind::Corotating => angular_speed(b, &p, rule)?,
        PairKind::Translating => translational_speed(&p, rule)?,
    };
    let grid_residual = grid_residual(b, &p, rule, speed);
    let residual = project(&grid_residual, b.n_modes())?;
    Ok(Evaluation { residual, speed: SpeedValue::for_pair(b.kind(), speed), grid_residual })
}

/// Corotating residual `F(f, eps)` projected onto `sin(m theta)`, `m >= 2`.
pub fn residual_f(b: &FourierBoundary, rule: &QuadratureRule) -> Result<SinSeries> {
    Ok(evaluate(&b.with_kind(PairKind::Corotating)?, rule)?.residual)
}

/// Translating residual `G(f, eps)` projected onto `sin(m theta)`, `m >= 2`.
pub fn residual_g(b: &FourierBoundary, rule: &QuadratureRule) -> Result<SinSeries> {
    Ok(evaluate(&b.with_kind(PairKind::Translating)?, rule)?.residual)
}

/// Samples the Riemann-Hilbert coefficient `A` for which the steady
/// condition reads `Im(A phi') = 0`:
///
/// corotating: `A = ((1/2 pi eps)(C(phi) conj(phi) - C~(phi) conj(phi)) + Omega (eps conj(phi) + l)) w`,
/// translating: `A = ((1/2 pi eps)(C(phi) conj(phi) + C~(phi) conj(phi)) - V) w`.
///
/// On the grid `Im(A phi') = -residual`.
pub fn a_coefficient(b: &FourierBoundary, speed: SpeedValue, rule: &QuadratureRule) -> Result<GridSample> {
    let (eps, l) = (b.eps(), b.l());
    if eps == 0.0 {
        return Err(Error::SingularFormulation);
    }
    let m = rule.m();
    let grid = BoundaryGrid::new(b, m)?;
    let ws = rule.nodes();
    let conj_phi = GridSample::new(grid.phi.values.iter().map(|v| v.conj()).collect(), 0.0);
    // d/dw conj(phi(w)) = -conj(phi'(w)) / w^2 on the circle
    let conj_phi_prime =
        GridSample::new(grid.phi_prime.values.iter().zip(ws).map(|(d, w)| -d.conj() / (w * w)).collect(), 0.0);
    let contour = Contour { phi: &grid.phi, phi_prime: &grid.phi_prime, g: &conj_phi, g_prime: Some(&conj_phi_prime) };
    let cauchy = integrals::cauchy_op(&contour, &contour)?;
    let mirror = integrals::interaction_op(&contour, &contour, eps, l)?;
    let scale = 1.0 / (2.0 * PI * eps);
    let values = (0..m)
        .map(|k| {
            let inner = match b.kind() {
                PairKind::Corotating => {
                    scale * (cauchy.values[k] - mirror.values[k]) + speed.value * (eps * conj_phi.values[k] + l)
                }
                PairKind::Translating => scale * (cauchy.values[k] + mirror.values[k]) - speed.value,
            };
            inner * ws[k]
        })
        .collect();
    Ok(GridSample::new(values, 0.0))
}

impl FourierBoundary {
    /// Copy with a different pair kind.
    pub fn with_kind(&self, kind: PairKind) -> Result<Self> {
        FourierBoundary::new(self.l(), self.eps(), kind, self.coeffs().to_vec())
    }
}
