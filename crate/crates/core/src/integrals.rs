//! Trapezoidal contour integrals on the unit circle and the boundary
//! operators built from them.
//!
//! Every kernel here has at most a removable singularity on the diagonal, so
//! the trapezoidal rule keeps its exponential convergence provided the
//! diagonal node carries the analytic limit of the kernel.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::boundary::{self, FourierBoundary, GridSample, PairKind};
use crate::error::{Error, Result};

/// Chords shorter than this between distinct nodes count as self-contact.
pub const SELF_CONTACT_TOL: f64 = 1e-10;
/// Relative (to `l`) separation below which the patches count as touching.
pub const TOUCHING_TOL: f64 = 1e-8;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Trapezoidal rule for `oint_T h(tau) dtau` on `m` equispaced nodes.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    m: usize,
    nodes: Vec<Complex64>,
    weights: Vec<Complex64>,
}

impl QuadratureRule {
    pub fn new(m: usize) -> Self {
        let nodes = boundary::nodes(m, 0.0);
        let h = 2.0 * PI / m as f64;
        let weights = nodes.iter().map(|w| I * h * w).collect();
        Self { m, nodes, weights }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    /// Approximates `oint_T h(tau) dtau` from samples on the rule nodes.
    pub fn contour_integral(&self, values: &[Complex64]) -> Complex64 {
        debug_assert_eq!(values.len(), self.m);
        values.iter().zip(&self.weights).map(|(v, wt)| v * wt).sum()
    }
}

/// A boundary curve and a density sampled on a common grid.
///
/// `g_prime` is the complex derivative of `g` along the contour and is only
/// consulted on the diagonal when sources and targets share a grid.
#[derive(Debug, Clone, Copy)]
pub struct Contour<'a> {
    pub phi: &'a GridSample,
    pub phi_prime: &'a GridSample,
    pub g: &'a GridSample,
    pub g_prime: Option<&'a GridSample>,
}

fn same_grid(a: &GridSample, b: &GridSample) -> bool {
    a.values.len() == b.values.len() && a.offset == b.offset
}

/// Cauchy integral operator of the curve `phi` applied to `g`:
/// `(1/2 pi i) oint (g(tau) - g(w)) / (phi(tau) - phi(w)) phi'(tau) dtau`
/// evaluated at the target nodes.
pub fn cauchy_op(src: &Contour<'_>, tgt: &Contour<'_>) -> Result<GridSample> {
    let m = src.phi.values.len();
    let rule = QuadratureRule::new(m);
    let diagonal = same_grid(src.phi, tgt.phi);
    let g_prime = match (diagonal, tgt.g_prime) {
        (true, Some(gp)) => Some(gp),
        (true, None) => {
            return Err(Error::InvalidBoundary(
                "diagonal evaluation of the Cauchy operator needs g'".into(),
            ))
        }
        (false, _) => None,
    };
    let values = (0..tgt.phi.values.len())
        .into_par_iter()
        .map(|k| {
            let (pw, gw) = (tgt.phi.values[k], tgt.g.values[k]);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                let term = if diagonal && j == k {
                    g_prime.map_or(Complex64::new(0.0, 0.0), |gp| gp.values[k])
                } else {
                    let d = src.phi.values[j] - pw;
                    if d.norm() < SELF_CONTACT_TOL {
                        return Err(Error::NearSelfIntersection(d.norm()));
                    }
                    (src.g.values[j] - gw) / d * src.phi_prime.values[j]
                };
                acc += term * rule.weights[j];
            }
            Ok(acc / (2.0 * PI * I))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridSample::new(values, tgt.phi.offset))
}

/// Interaction operator between a patch and its point reflection:
/// `(1/2 pi i) oint (eps g(tau) + eps g(w) + 2l) / (eps phi(tau) + eps phi(w) + 2l) phi'(tau) dtau`.
pub fn interaction_op(src: &Contour<'_>, tgt: &Contour<'_>, eps: f64, l: f64) -> Result<GridSample> {
    let m = src.phi.values.len();
    let rule = QuadratureRule::new(m);
    let values = (0..tgt.phi.values.len())
        .into_par_iter()
        .map(|k| {
            let (pw, gw) = (tgt.phi.values[k], tgt.g.values[k]);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                let den = eps * src.phi.values[j] + eps * pw + 2.0 * l;
                if den.norm() < TOUCHING_TOL * l {
                    return Err(Error::PatchesTouching(den.norm()));
                }
                let num = eps * src.g.values[j] + eps * gw + 2.0 * l;
                acc += num / den * src.phi_prime.values[j] * rule.weights[j];
            }
            Ok(acc / (2.0 * PI * I))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridSample::new(values, tgt.phi.offset))
}

/// Samples of `phi`, `phi'`, `f` and `f'` on the standard grid.
#[derive(Debug, Clone)]
pub struct BoundaryGrid {
    pub phi: GridSample,
    pub phi_prime: GridSample,
    pub f: GridSample,
    pub f_prime: GridSample,
}

impl BoundaryGrid {
    pub fn new(b: &FourierBoundary, m: usize) -> Result<Self> {
        Ok(Self {
            phi: boundary::eval_phi(b, m, 0.0)?,
            phi_prime: boundary::eval_phi_prime(b, m, 0.0)?,
            f: boundary::eval_f(b, m, 0.0)?,
            f_prime: boundary::eval_f_prime(b, m, 0.0)?,
        })
    }
}

/// The self-induced and mirror-patch pieces of the regularized kernel `J`.
///
/// `mirror` is the interaction term for equal circulations; opposite
/// circulations flip its sign.
#[derive(Debug, Clone)]
pub struct KernelParts {
    pub self_induced: GridSample,
    pub mirror: GridSample,
}

impl KernelParts {
    pub fn combine(&self, kind: PairKind) -> GridSample {
        let sign = match kind {
            PairKind::Corotating => 1.0,
            PairKind::Translating => -1.0,
        };
        let values = self
            .self_induced
            .values
            .iter()
            .zip(&self.mirror.values)
            .map(|(s, t)| s + sign * t)
            .collect();
        GridSample::new(values, 0.0)
    }
}

/// Evaluates the two pieces of `J(f, eps)` at every node.
///
/// The self-induced part is
/// `(i/4pi^2) oint conj(dphi)/dphi f'(xi) dxi
///   - (1/2pi^2) oint Im[(w - xi) conj(f(w) - f(xi))] / ((w - xi) dphi) dxi`
/// with `dphi = phi(w) - phi(xi)`; the mirror part is
/// `-(i/4pi^2) oint conj(phi(xi)) phi'(xi) / (eps phi(xi) + eps phi(w) + 2l) dxi`.
pub fn kernel_parts(b: &FourierBoundary, grid: &BoundaryGrid, rule: &QuadratureRule) -> Result<KernelParts> {
    let m = rule.m();
    let (eps, l) = (b.eps(), b.l());
    let ws = rule.nodes();
    let wts = rule.weights();
    let phi = &grid.phi.values;
    let dphi = &grid.phi_prime.values;
    let f = &grid.f.values;
    let df = &grid.f_prime.values;
    let weighted_df: Vec<Complex64> = df.iter().zip(wts).map(|(a, b)| a * b).collect();
    let weighted_mirror: Vec<Complex64> = (0..m).map(|j| phi[j].conj() * dphi[j] * wts[j]).collect();

    let rows = (0..m)
        .into_par_iter()
        .map(|k| {
            let (w, pw, fw) = (ws[k], phi[k], f[k]);
            let mut s1 = Complex64::new(0.0, 0.0);
            let mut s2 = Complex64::new(0.0, 0.0);
            let mut s3 = Complex64::new(0.0, 0.0);
            for j in 0..m {
                if j == k {
                    let t = I * w * dphi[k];
                    s1 += t.conj() / t * weighted_df[k];
                    s2 += df[k].im / (w * w * dphi[k]) * wts[k];
                } else {
                    let d = pw - phi[j];
                    if d.norm() < SELF_CONTACT_TOL {
                        return Err(Error::NearSelfIntersection(d.norm()));
                    }
                    let dw = w - ws[j];
                    s1 += d.conj() / d * weighted_df[j];
                    let im = (dw * (fw - f[j]).conj()).im;
                    s2 += im / (dw * d) * wts[j];
                }
                let den = eps * phi[j] + eps * pw + 2.0 * l;
                if den.norm() < TOUCHING_TOL * l {
                    return Err(Error::PatchesTouching(den.norm()));
                }
                s3 += weighted_mirror[j] / den;
            }
            let c1 = I / (4.0 * PI * PI);
            let c2 = 1.0 / (2.0 * PI * PI);
            Ok((c1 * s1 - c2 * s2, -c1 * s3))
        })
        .collect::<Result<Vec<_>>>()?;
    let (self_induced, mirror): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(KernelParts {
        self_induced: GridSample::new(self_induced, 0.0),
        mirror: GridSample::new(mirror, 0.0),
    })
}

/// `J(f, eps)` at every node of `rule`, with the mirror sign set by the pair kind.
pub fn j_op(b: &FourierBoundary, rule: &QuadratureRule) -> Result<GridSample> {
    let grid = BoundaryGrid::new(b, rule.m())?;
    Ok(kernel_parts(b, &grid, rule)?.combine(b.kind()))
}

/// Minimum over node pairs of `|eps phi(tau) + eps phi(w) + 2l|`, the
/// distance between the two physical boundaries.
pub fn separation(b: &FourierBoundary, phi: &GridSample) -> f64 {
    let (eps, l) = (b.eps(), b.l());
    let v = &phi.values;
    let mut min = f64::INFINITY;
    for (k, pw) in v.iter().enumerate() {
        for pt in &v[k..] {
            min = min.min((eps * pt + eps * pw + 2.0 * l).norm());
        }
    }
    min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::PairKind;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn circle_data(m: usize, offset: f64) -> (GridSample, GridSample) {
        (GridSample::from_fn(m, offset, |w| w), GridSample::from_fn(m, offset, |_| c(1.0, 0.0)))
    }

    #[test]
    fn discrete_residues() {
        let rule = QuadratureRule::new(16);
        let ones = vec![c(1.0, 0.0); 16];
        assert!(rule.contour_integral(&ones).norm() < 1e-14);
        let inv: Vec<_> = rule.nodes().iter().map(|w| w.inv()).collect();
        assert!((rule.contour_integral(&inv) - c(0.0, 2.0 * PI)).norm() < 1e-14);
        let p5: Vec<_> = rule.nodes().iter().map(|w| w.powi(-5)).collect();
        assert!(rule.contour_integral(&p5).norm() < 1e-14);
    }

    #[test]
    fn cauchy_of_conjugate_on_circle() {
        let m = 64;
        let (phi, dphi) = circle_data(m, 0.0);
        let g = GridSample::from_fn(m, 0.0, |w| w.conj());
        let gp = GridSample::from_fn(m, 0.0, |w| -w.conj() * w.conj());
        let src = Contour { phi: &phi, phi_prime: &dphi, g: &g, g_prime: Some(&gp) };
        let out = cauchy_op(&src, &src).unwrap();
        for (v, w) in out.values.iter().zip(phi.values.iter()) {
            assert!((v + w.conj()).norm() < 1e-12);
        }
        let g = phi.clone();
        let src = Contour { phi: &phi, phi_prime: &dphi, g: &g, g_prime: Some(&dphi) };
        let out = cauchy_op(&src, &src).unwrap();
        assert!(out.max_modulus() < 1e-13);
    }

    #[test]
    fn cauchy_on_half_shifted_targets() {
        let m = 64;
        let (phi, dphi) = circle_data(m, 0.0);
        let g = GridSample::from_fn(m, 0.0, |w| w.conj());
        let src = Contour { phi: &phi, phi_prime: &dphi, g: &g, g_prime: None };
        let off = PI / m as f64;
        let (tphi, tdphi) = circle_data(m, off);
        let tg = GridSample::from_fn(m, off, |w| w.conj());
        let tgt = Contour { phi: &tphi, phi_prime: &tdphi, g: &tg, g_prime: None };
        let out = cauchy_op(&src, &tgt).unwrap();
        for (v, w) in out.values.iter().zip(tphi.values.iter()) {
            assert!((v + w.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn interaction_of_conjugate_on_circle() {
        let m = 64;
        let (phi, dphi) = circle_data(m, 0.0);
        let g = GridSample::from_fn(m, 0.0, |w| w.conj());
        let src = Contour { phi: &phi, phi_prime: &dphi, g: &g, g_prime: None };
        let zero = interaction_op(&src, &src, 0.0, 1.0).unwrap();
        assert!(zero.max_modulus() < 1e-14);
        let out = interaction_op(&src, &src, 0.1, 1.0).unwrap();
        assert!((out.values[0] - c(0.1 / 2.1, 0.0)).norm() < 1e-12);
        for (v, w) in out.values.iter().zip(phi.values.iter()) {
            assert!((v - 0.1 / (0.1 * w + 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn touching_patches_are_reported() {
        let m = 16;
        let (phi, dphi) = circle_data(m, 0.0);
        let src = Contour { phi: &phi, phi_prime: &dphi, g: &phi, g_prime: None };
        assert!(matches!(interaction_op(&src, &src, 1.0, 1.0), Err(Error::PatchesTouching(_))));
    }

    #[test]
    fn kernel_at_trivial_points() {
        let rule = QuadratureRule::new(64);
        let b = FourierBoundary::disks(1.0, 0.0, PairKind::Corotating, 8).unwrap();
        let j = j_op(&b, &rule).unwrap();
        for v in &j.values {
            assert!((v - 1.0 / (4.0 * PI)).norm() < 1e-14);
        }
        let b = FourierBoundary::disks(1.0, 0.2, PairKind::Corotating, 8).unwrap();
        let j = j_op(&b, &rule).unwrap();
        for (v, w) in j.values.iter().zip(rule.nodes()) {
            assert!((v - 1.0 / (2.0 * PI) / (0.2 * w + 2.0)).norm() < 1e-14);
        }
        assert!((j.values[32] - c(0.0884194128288308, 0.0)).norm() < 1e-12);
        let b = FourierBoundary::disks(2.0, 0.0, PairKind::Translating, 8).unwrap();
        let j = j_op(&b, &rule).unwrap();
        assert!((j.values[5] + 1.0 / (8.0 * PI)).norm() < 1e-14);
    }

    #[test]
    fn separation_of_disks() {
        let b = FourierBoundary::disks(1.0, 0.1, PairKind::Corotating, 4).unwrap();
        let phi = boundary::eval_phi(&b, 64, 0.0).unwrap();
        assert!((separation(&b, &phi) - 1.8).abs() < 1e-14);
    }
}
