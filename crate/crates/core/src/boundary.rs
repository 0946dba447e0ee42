//! Patch boundaries as truncated Fourier series of the conformal trace.
//!
//! The right patch is `eps * phi(D) + l` with `phi(w) = w + eps * f(w)` and
//! `f(w) = sum_{n=1}^N a_n w^{-n}`. Real coefficients encode symmetry about
//! the x-axis; the left patch is the point reflection of the right one.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of Fourier modes.
pub const DEFAULT_MODES: usize = 32;
/// Default number of grid nodes.
pub const DEFAULT_NODES: usize = 256;

/// Relative tolerance for spurious content in [`coeffs_from_grid`].
const MODE_TOL: f64 = 1e-9;
/// Tolerance of [`symmetry_check`].
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    /// Equal circulations, rigid rotation about the origin.
    Corotating,
    /// Opposite circulations, uniform translation.
    Translating,
}

impl std::fmt::Display for PairKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PairKind::Corotating => f.write_str("corotating"),
            PairKind::Translating => f.write_str("translating"),
        }
    }
}

/// Geometric state of one symmetric patch pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierBoundary {
    l: f64,
    eps: f64,
    kind: PairKind,
    coeffs: Vec<f64>,
}

impl FourierBoundary {
    /// Builds a boundary, enforcing `l > 0`, `eps >= 0` and `N >= 1`.
    ///
    /// The scale is not capped by `l`: the patch only has to stay in the right
    /// half-plane, which is the separation predicate checked on the grid.
    pub fn new(l: f64, eps: f64, kind: PairKind, coeffs: Vec<f64>) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidBoundary(format!("l must be positive, got {l}")));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidBoundary(format!("eps must be nonnegative, got {eps}")));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidBoundary("at least one Fourier mode is required".into()));
        }
        if let Some(bad) = coeffs.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidBoundary(format!("non-finite coefficient {bad}")));
        }
        Ok(Self { l, eps, kind, coeffs })
    }

    /// The undeformed pair of disks with `n` zero coefficients.
    pub fn disks(l: f64, eps: f64, kind: PairKind, n: usize) -> Result<Self> {
        Self::new(l, eps, kind, vec![0.0; n])
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn kind(&self) -> PairKind {
        self.kind
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    /// Copy with a different scale.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.l, eps, self.kind, self.coeffs.clone())
    }

    /// Copy with different coefficients.
    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(self.l, self.eps, self.kind, coeffs)
    }

    /// Sup norm of the coefficient vector.
    pub fn coeff_sup(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, a| m.max(a.abs()))
    }

    /// Sup over the circle of `|f|`, bounded by the l1 norm of the coefficients.
    pub fn f_sup(&self, m: usize) -> Result<f64> {
        let f = eval_f(self, m, 0.0)?;
        Ok(f.values.iter().fold(0.0_f64, |acc, v| acc.max(v.norm())))
    }
}

/// Complex samples at `w_j = exp(i (2 pi j / M + offset))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSample {
    pub values: Vec<Complex64>,
    pub offset: f64,
}

impl GridSample {
    pub fn new(values: Vec<Complex64>, offset: f64) -> Self {
        Self { values, offset }
    }

    /// Samples `func` at the nodes of an `m`-point grid.
    pub fn from_fn(m: usize, offset: f64, func: impl Fn(Complex64) -> Complex64) -> Self {
        let values = (0..m).map(|j| func(node(j, m, offset))).collect();
        Self { values, offset }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nodes(&self) -> Vec<Complex64> {
        nodes(self.values.len(), self.offset)
    }

    pub fn min_modulus(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.norm()))
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }
}

/// Angle of node `j` on an `m`-point grid.
pub fn node_angle(j: usize, m: usize, offset: f64) -> f64 {
    2.0 * PI * j as f64 / m as f64 + offset
}

pub fn node(j: usize, m: usize, offset: f64) -> Complex64 {
    Complex64::cis(node_angle(j, m, offset))
}

pub fn nodes(m: usize, offset: f64) -> Vec<Complex64> {
    (0..m).map(|j| node(j, m, offset)).collect()
}

/// `w_j^k` with the phase reduced modulo the grid so that conjugate nodes
/// produce exactly conjugate values.
pub(crate) fn node_power(k: i64, j: usize, m: usize, offset: f64) -> Complex64 {
    let mi = m as i64;
    let r = (k * j as i64).rem_euclid(mi);
    Complex64::cis(2.0 * PI * r as f64 / m as f64 + k as f64 * offset)
}

/// Smallest admissible node count for `n` modes.
pub fn min_nodes(n: usize) -> usize {
    4 * (n + 1)
}

pub fn check_resolution(m: usize, n: usize) -> Result<()> {
    let min = min_nodes(n);
    if m % 2 != 0 || m < min {
        return Err(Error::Aliasing { m, n, min });
    }
    Ok(())
}

fn series(b: &FourierBoundary, m: usize, offset: f64, term: impl Fn(usize, f64, usize) -> (i64, f64)) -> Result<GridSample> {
    check_resolution(m, b.n_modes())?;
    let values = (0..m)
        .map(|j| {
            b.coeffs
                .iter()
                .enumerate()
                .map(|(i, &a)| {
                    let (power, scale) = term(i + 1, a, j);
                    node_power(power, j, m, offset) * scale
                })
                .sum()
        })
        .collect();
    Ok(GridSample::new(values, offset))
}

/// `f(w_j) = sum a_n w_j^{-n}`.
pub fn eval_f(b: &FourierBoundary, m: usize, offset: f64) -> Result<GridSample> {
    series(b, m, offset, |n, a, _| (-(n as i64), a))
}

/// `f'(w_j) = -sum n a_n w_j^{-n-1}`.
pub fn eval_f_prime(b: &FourierBoundary, m: usize, offset: f64) -> Result<GridSample> {
    series(b, m, offset, |n, a, _| (-(n as i64) - 1, -(n as f64) * a))
}

/// Samples the conformal trace `phi = w + eps f`.
pub fn eval_phi(b: &FourierBoundary, m: usize, offset: f64) -> Result<GridSample> {
    let mut g = eval_f(b, m, offset)?;
    for (j, v) in g.values.iter_mut().enumerate() {
        *v = node(j, m, offset) + b.eps * *v;
    }
    Ok(g)
}

/// Samples `phi' = 1 + eps f'` by term-wise differentiation.
pub fn eval_phi_prime(b: &FourierBoundary, m: usize, offset: f64) -> Result<GridSample> {
    let mut g = eval_f_prime(b, m, offset)?;
    for v in g.values.iter_mut() {
        *v = Complex64::new(1.0, 0.0) + b.eps * *v;
    }
    Ok(g)
}

/// Discrete Fourier coefficient of `w^k` in grid data.
pub(crate) fn fourier_mode(g: &GridSample, k: i64) -> Complex64 {
    let m = g.values.len();
    let sum: Complex64 = g
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| v * node_power(-k, j, m, g.offset))
        .sum();
    sum / m as f64
}

/// Complex derivative along the circle, `d/dw = (1 / (i w)) d/dtheta`,
/// computed spectrally (the Nyquist mode is dropped).
pub fn spectral_derivative(g: &GridSample) -> GridSample {
    let m = g.values.len() as i64;
    let modes: Vec<(i64, Complex64)> = ((1 - m / 2)..(m / 2)).map(|k| (k, fourier_mode(g, k))).collect();
    let values = (0..g.values.len())
        .map(|j| {
            modes
                .iter()
                .filter(|(k, _)| *k != 0)
                .map(|(k, c)| *k as f64 * c * node_power(k - 1, j, m as usize, g.offset))
                .sum()
        })
        .collect();
    GridSample::new(values, g.offset)
}

/// Spectral antiderivative along the circle with zero mean, dropping the
/// `w^{-1}` mode; returns the samples and the modulus of the dropped mode.
pub fn spectral_antiderivative(g: &GridSample) -> (GridSample, f64) {
    let m = g.values.len() as i64;
    let modes: Vec<(i64, Complex64)> = ((1 - m / 2)..(m / 2)).map(|k| (k, fourier_mode(g, k))).collect();
    let dropped = modes.iter().find(|(k, _)| *k == -1).map_or(0.0, |(_, c)| c.norm());
    let values = (0..g.values.len())
        .map(|j| {
            modes
                .iter()
                .filter(|(k, _)| *k != -1)
                .map(|(k, c)| c / (*k + 1) as f64 * node_power(k + 1, j, m as usize, g.offset))
                .sum()
        })
        .collect();
    (GridSample::new(values, g.offset), dropped)
}

/// Recovers `a_1..a_N` from samples of `f` on the standard grid.
///
/// Fails when the data carries energy in modes other than `w^{-1}..w^{-N}`
/// or has complex coefficients.
pub fn coeffs_from_grid(g: &GridSample, n: usize) -> Result<Vec<f64>> {
    let m = g.values.len();
    check_resolution(m, n)?;
    if g.offset != 0.0 {
        return Err(Error::InvalidBoundary("coefficient extraction needs the standard grid".into()));
    }
    let half = (m / 2) as i64;
    let mut coeffs = vec![0.0; n];
    let mut stray = 0.0_f64;
    let mut scale = 0.0_f64;
    for k in (1 - half)..=half {
        let c = fourier_mode(g, k);
        scale = scale.max(c.norm());
        if k < 0 && (-k) as usize <= n {
            coeffs[(-k - 1) as usize] = c.re;
            stray = stray.max(c.im.abs());
        } else {
            stray = stray.max(c.norm());
        }
    }
    if stray > MODE_TOL * scale.max(1.0) {
        return Err(Error::DisallowedModes { energy: stray });
    }
    Ok(coeffs)
}

/// `min_j Re(w_j phi'(w_j) / phi(w_j))`; positive iff the discrete boundary
/// is a polar graph.
pub fn polar_graph_margin(b: &FourierBoundary, m: usize) -> Result<f64> {
    let phi = eval_phi(b, m, 0.0)?;
    let dphi = eval_phi_prime(b, m, 0.0)?;
    let ws = nodes(m, 0.0);
    let mut margin = f64::INFINITY;
    for ((w, p), dp) in ws.iter().zip(&phi.values).zip(&dphi.values) {
        if p.norm() < 1e-14 {
            return Err(Error::NotAdmissible {
                predicate: crate::error::Predicate::PolarGraph,
                value: p.norm(),
            });
        }
        margin = margin.min((w * dp / p).re);
    }
    Ok(margin)
}

/// Discrete injectivity margin: `min |phi(tau) - phi(w)| / |tau - w|` over
/// distinct node pairs, together with `min |phi'|`.
pub fn injectivity_margin(b: &FourierBoundary, m: usize) -> Result<f64> {
    let phi = eval_phi(b, m, 0.0)?;
    let dphi = eval_phi_prime(b, m, 0.0)?;
    let ws = nodes(m, 0.0);
    let mut margin = dphi.min_modulus();
    for j in 0..m {
        for k in (j + 1)..m {
            let q = (phi.values[j] - phi.values[k]).norm() / (ws[j] - ws[k]).norm();
            margin = margin.min(q);
        }
    }
    Ok(margin)
}

/// True when values at conjugate nodes are conjugate (real Fourier data).
pub fn symmetry_check(g: &GridSample) -> bool {
    let m = g.values.len();
    if m == 0 {
        return true;
    }
    let step = 2.0 * PI / m as f64;
    let scale = g.max_modulus().max(1.0);
    let half_shift = (g.offset - 0.5 * step).abs() < 1e-14;
    if g.offset != 0.0 && !half_shift {
        return false;
    }
    (0..m).all(|j| {
        let partner = if half_shift { m - 1 - j } else { (m - j) % m };
        (g.values[partner] - g.values[j].conj()).norm() <= SYMMETRY_TOL * scale
    })
}
