//! Admissibility margins, solution certificates, point-vortex reference
//! speeds and the physical velocity field.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{self, FourierBoundary, GridSample, PairKind};
use crate::error::{Error, Predicate, Result};
use crate::integrals::{self, QuadratureRule};
use crate::operator::{self, SpeedKind, SpeedValue};
use crate::riemann_hilbert;
use crate::solver::SolutionPoint;

/// Sup bound on the trace of a normalized exterior conformal map.
pub const KOEBE_BOUND: f64 = 4.0;

/// The six margins whose positivity defines the admissible set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorVector {
    /// `min |A|` on the circle; infinite at `eps = 0` where `A` blows up.
    #[serde(with = "finite_or_null")]
    pub min_a: f64,
    /// `pi/2 - max |arg(w phi' / phi)|`.
    pub angle_margin: f64,
    pub min_phi_prime: f64,
    pub min_phi: f64,
    /// `min |eps phi(tau) + eps phi(w) + 2l|` over node pairs.
    pub separation: f64,
    pub eps: f64,
}

/// Monitor names in the order used by [`MonitorVector::scaled`].
pub const MONITOR_NAMES: [&str; 6] = ["min_a", "angle_margin", "min_phi_prime", "min_phi", "separation", "eps"];

impl MonitorVector {
    pub fn compute(b: &FourierBoundary, speed: SpeedValue, rule: &QuadratureRule) -> Result<Self> {
        let m = rule.m();
        let phi = boundary::eval_phi(b, m, 0.0)?;
        let dphi = boundary::eval_phi_prime(b, m, 0.0)?;
        let min_a = if b.eps() > 0.0 {
            operator::a_coefficient(b, speed, rule)?.min_modulus()
        } else {
            f64::INFINITY
        };
        Ok(Self {
            min_a,
            angle_margin: angle_margin(&phi, &dphi),
            min_phi_prime: dphi.min_modulus(),
            min_phi: phi.min_modulus(),
            separation: integrals::separation(b, &phi),
            eps: b.eps(),
        })
    }

    /// Dimensionless monitors: `min_a` over `Omega_0 l` (equal to `V_0`),
    /// separation and scale over `l`.
    pub fn scaled(&self, l: f64) -> [f64; 6] {
        let speed_scale = 1.0 / (4.0 * PI * l);
        [
            self.min_a / speed_scale,
            self.angle_margin,
            self.min_phi_prime,
            self.min_phi,
            self.separation / l,
            self.eps / l,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let raw = [self.min_a, self.angle_margin, self.min_phi_prime, self.min_phi, self.separation, self.eps];
        MONITOR_NAMES.iter().position(|n| *n == name).map(|i| raw[i])
    }
}

/// `pi/2 - max_j |arg(w_j phi'_j / phi_j)|`.
pub fn angle_margin(phi: &GridSample, dphi: &GridSample) -> f64 {
    let ws = phi.nodes();
    let max = ws
        .iter()
        .zip(&phi.values)
        .zip(&dphi.values)
        .fold(0.0_f64, |acc, ((w, p), d)| acc.max((w * d / p).arg().abs()));
    PI / 2.0 - max
}

/// Certificates and margins for one boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub monitors: MonitorVector,
    /// Winding number of `A` (of `phi'` at `eps = 0`).
    pub winding_a: Option<i64>,
    pub koebe_sup: f64,
    pub polar_margin: f64,
    pub symmetry_ok: bool,
    pub omega_bounds_ok: bool,
    /// Residual sup norm re-evaluated on a grid of twice the size.
    pub residual_recheck: Option<f64>,
    /// `max |Im(A phi')|` on the grid.
    pub im_a_phi_prime: Option<f64>,
    /// Max deviation of the Riemann-Hilbert reconstruction of `phi'`.
    pub rh_phi_prime_error: Option<f64>,
}

impl Diagnostics {
    /// Names of failed certificates; empty for a certified solution.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.winding_a != Some(0) {
            out.push("winding");
        }
        if !(self.koebe_sup <= KOEBE_BOUND) {
            out.push("koebe");
        }
        if !(self.polar_margin > 0.0) {
            out.push("polar_graph");
        }
        if !self.symmetry_ok {
            out.push("symmetry");
        }
        if !self.omega_bounds_ok {
            out.push("speed_bounds");
        }
        out
    }

    pub fn certified(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Rigidity bounds: `0 < Omega < 1/(2 pi eps^2)` for `eps > 0`, `Omega = Omega_0`
/// at `eps = 0`; translating pairs only need a positive speed.
pub fn speed_bounds_ok(b: &FourierBoundary, speed: SpeedValue) -> bool {
    match speed.kind {
        SpeedKind::Angular if b.eps() > 0.0 => {
            speed.value > 0.0 && speed.value < 1.0 / (2.0 * PI * b.eps() * b.eps())
        }
        SpeedKind::Angular => (speed.value - 1.0 / (4.0 * PI * b.l() * b.l())).abs() < 1e-12,
        SpeedKind::Translational => speed.value > 0.0,
    }
}

/// Computes every diagnostic field; failures show up as `None` or `false`.
pub fn diagnose(b: &FourierBoundary, speed: SpeedValue, rule: &QuadratureRule) -> Diagnostics {
    let m = rule.m();
    let nan = f64::NAN;
    let phi = boundary::eval_phi(b, m, 0.0).ok();
    let dphi = boundary::eval_phi_prime(b, m, 0.0).ok();
    let monitors = MonitorVector::compute(b, speed, rule).unwrap_or(MonitorVector {
        min_a: nan,
        angle_margin: nan,
        min_phi_prime: nan,
        min_phi: nan,
        separation: nan,
        eps: b.eps(),
    });
    let a = if b.eps() > 0.0 { operator::a_coefficient(b, speed, rule).ok() } else { None };
    let winding_a = match (&a, &dphi) {
        (Some(a), _) => riemann_hilbert::winding_number(a).ok().map(|w| w.number),
        (None, Some(d)) if b.eps() == 0.0 => riemann_hilbert::winding_number(d).ok().map(|w| w.number),
        _ => None,
    };
    let im_a_phi_prime = match (&a, &dphi) {
        (Some(a), Some(d)) => Some(riemann_hilbert::apply_l(a, d).iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))),
        _ => None,
    };
    let rh_phi_prime_error = match (&a, &dphi) {
        (Some(a), Some(d)) => riemann_hilbert::reconstruct_phi_prime(a, d).ok().map(|r| r.max_error),
        _ => None,
    };
    let symmetry_ok = phi.as_ref().is_some_and(boundary::symmetry_check)
        && a.as_ref().map_or(true, boundary::symmetry_check);
    let residual_recheck = operator::evaluate(b, &QuadratureRule::new(2 * m)).ok().map(|e| e.residual.sup_norm());
    Diagnostics {
        monitors,
        winding_a,
        koebe_sup: phi.as_ref().map_or(nan, |p| p.max_modulus()),
        polar_margin: boundary::polar_graph_margin(b, m).unwrap_or(nan),
        symmetry_ok,
        omega_bounds_ok: speed_bounds_ok(b, speed),
        residual_recheck,
        im_a_phi_prime,
        rh_phi_prime_error,
    }
}

/// Diagnostics of a solution point on an `m`-node grid.
pub fn compute_diagnostics(point: &SolutionPoint, m: usize) -> Diagnostics {
    diagnose(&point.boundary, point.speed, &QuadratureRule::new(m))
}

/// Checks the admissible-set predicates that do not need the speed.
pub fn check_admissible(b: &FourierBoundary, rule: &QuadratureRule) -> Result<()> {
    let margin = boundary::polar_graph_margin(b, rule.m())?;
    if !(margin > 0.0) {
        return Err(Error::NotAdmissible { predicate: Predicate::PolarGraph, value: margin });
    }
    let phi = boundary::eval_phi(b, rule.m(), 0.0)?;
    // the right patch must stay in the open right half-plane, which by the
    // point symmetry of the pair keeps the two patches apart
    let leftmost = phi.values.iter().fold(f64::INFINITY, |acc, p| acc.min(b.eps() * p.re + b.l()));
    if !(leftmost > 0.0) {
        return Err(Error::NotAdmissible { predicate: Predicate::Separation, value: 2.0 * leftmost });
    }
    let sep = integrals::separation(b, &phi);
    if sep < integrals::TOUCHING_TOL * b.l() {
        return Err(Error::NotAdmissible { predicate: Predicate::Separation, value: sep });
    }
    Ok(())
}

/// Point-vortex speed: `Omega_0 = 1/(4 pi l^2)` or `V_0 = 1/(4 pi l)`.
pub fn point_vortex_params(l: f64, kind: PairKind) -> Result<SpeedValue> {
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidBoundary(format!("l must be positive, got {l}")));
    }
    Ok(match kind {
        PairKind::Corotating => SpeedValue { kind: SpeedKind::Angular, value: 1.0 / (4.0 * PI * l * l) },
        PairKind::Translating => SpeedValue { kind: SpeedKind::Translational, value: 1.0 / (4.0 * PI * l) },
    })
}

/// The two physical boundaries `z = eps phi + l` and `z = -(eps phi + l)`,
/// with `dz/dxi`, on an `m`-node grid.
fn physical_boundaries(b: &FourierBoundary, m: usize) -> Result<[(Vec<Complex64>, Vec<Complex64>); 2]> {
    let phi = boundary::eval_phi(b, m, 0.0)?;
    let dphi = boundary::eval_phi_prime(b, m, 0.0)?;
    let (eps, l) = (b.eps(), b.l());
    let right: Vec<Complex64> = phi.values.iter().map(|p| eps * p + l).collect();
    let dright: Vec<Complex64> = dphi.values.iter().map(|d| eps * d).collect();
    let left = right.iter().map(|z| -z).collect();
    let dleft = dright.iter().map(|d| -d).collect();
    Ok([(right, dright), (left, dleft)])
}

fn circulations(kind: PairKind) -> [f64; 2] {
    match kind {
        PairKind::Corotating => [1.0, 1.0],
        PairKind::Translating => [1.0, -1.0],
    }
}

/// Velocity `u_0(z)` induced by the pair, as `u_1 + i u_2`, from the
/// Cauchy-Pompeiu boundary form
/// `u_0(z) = sum_m (Gamma_m / 4 pi^2 eps^2) conj(oint_{dD_m} (conj z - conj zeta)/(z - zeta) dzeta)`.
pub fn velocity_field(b: &FourierBoundary, m: usize, queries: &[Complex64]) -> Result<Vec<Complex64>> {
    let (eps, l) = (b.eps(), b.l());
    let gammas = circulations(b.kind());
    if eps == 0.0 {
        let centers = [Complex64::new(l, 0.0), Complex64::new(-l, 0.0)];
        return queries
            .iter()
            .map(|z| {
                let mut u = Complex64::new(0.0, 0.0);
                for (c, g) in centers.iter().zip(gammas) {
                    let d = z - c;
                    if d.norm() < 1e-6 * l {
                        return Err(Error::QueryTooClose(format!("{z}")));
                    }
                    u += Complex64::new(0.0, g / (2.0 * PI)) / d.conj();
                }
                Ok(u)
            })
            .collect();
    }
    let curves = physical_boundaries(b, m)?;
    let rule = QuadratureRule::new(m);
    let scale = 1.0 / (4.0 * PI * PI * eps * eps);
    queries
        .iter()
        .map(|z| {
            let mut u = Complex64::new(0.0, 0.0);
            for ((zeta, dzeta), g) in curves.iter().zip(gammas) {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..m {
                    let d = z - zeta[j];
                    if d.norm() < 1e-6 * l {
                        return Err(Error::QueryTooClose(format!("{z}")));
                    }
                    acc += d.conj() / d * dzeta[j] * rule.weights()[j];
                }
                u += g * scale * acc.conj();
            }
            Ok(u)
        })
        .collect()
}

/// Largest normal component of the relative velocity on the right boundary,
/// divided by the largest relative speed there.
///
/// The velocity is evaluated on the boundary itself on an `m`-node grid using
/// the continuous limit of the Cauchy-Pompeiu kernel on the diagonal, so this
/// is a discretization of the steady boundary condition that does not go
/// through the regularized residual.
pub fn boundary_normal_velocity(b: &FourierBoundary, speed: SpeedValue, m: usize) -> Result<f64> {
    let eps = b.eps();
    if eps == 0.0 {
        return Err(Error::SingularFormulation);
    }
    let curves = physical_boundaries(b, m)?;
    let gammas = circulations(b.kind());
    let rule = QuadratureRule::new(m);
    let ws = rule.nodes();
    let scale = 1.0 / (4.0 * PI * PI * eps * eps);
    let (right, dright) = &curves[0];
    let mut max_normal = 0.0_f64;
    let mut max_speed = 0.0_f64;
    for k in 0..m {
        let z = right[k];
        let mut u = Complex64::new(0.0, 0.0);
        for (c, ((zeta, dzeta), g)) in curves.iter().zip(gammas).enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                let kernel = if c == 0 && j == k {
                    let t = Complex64::i() * ws[k] * dright[k];
                    t.conj() / t
                } else {
                    let d = z - zeta[j];
                    d.conj() / d
                };
                acc += kernel * dzeta[j] * rule.weights()[j];
            }
            u += g * scale * acc.conj();
        }
        let frame = match speed.kind {
            SpeedKind::Angular => Complex64::i() * speed.value * z,
            SpeedKind::Translational => Complex64::new(0.0, -speed.value),
        };
        let rel = u - frame;
        let tangent = Complex64::i() * ws[k] * dright[k];
        let normal = -Complex64::i() * tangent / tangent.norm();
        max_normal = max_normal.max((rel * normal.conj()).re.abs());
        max_speed = max_speed.max(rel.norm());
    }
    Ok(max_normal / max_speed)
}

mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_speeds() {
        let v = point_vortex_params(1.0, PairKind::Corotating).unwrap();
        assert!((v.value - 0.0795774715459477).abs() < 1e-15);
        let v = point_vortex_params(2.0, PairKind::Corotating).unwrap();
        assert!((v.value - 0.0198943678864869).abs() < 1e-15);
        let v = point_vortex_params(1.0, PairKind::Translating).unwrap();
        assert_eq!(v.kind, SpeedKind::Translational);
        assert!((v.value - 1.0 / (4.0 * PI)).abs() < 1e-16);
        assert!(point_vortex_params(0.0, PairKind::Corotating).is_err());
    }

    #[test]
    fn disk_pair_diagnostics() {
        let rule = QuadratureRule::new(64);
        let b = FourierBoundary::disks(1.0, 0.1, PairKind::Corotating, 8).unwrap();
        let speed = point_vortex_params(1.0, PairKind::Corotating).unwrap();
        let d = diagnose(&b, speed, &rule);
        assert!((d.monitors.separation - 1.8).abs() < 1e-14);
        assert!((d.koebe_sup - 1.0).abs() < 1e-15);
        assert!((d.polar_margin - 1.0).abs() < 1e-15);
        assert_eq!(d.winding_a, Some(0));
        assert!(d.certified(), "{:?}", d.failures());

        let b0 = FourierBoundary::disks(1.0, 0.0, PairKind::Corotating, 8).unwrap();
        let d0 = diagnose(&b0, speed, &rule);
        assert_eq!(d0.winding_a, Some(0));
        assert!(d0.monitors.min_a.is_infinite());
        assert!(d0.certified());
    }

    #[test]
    fn rigidity_bounds() {
        let b = FourierBoundary::disks(1.0, 0.5, PairKind::Corotating, 4).unwrap();
        let ok = SpeedValue { kind: SpeedKind::Angular, value: 0.1 };
        let too_fast = SpeedValue { kind: SpeedKind::Angular, value: 1.0 / (2.0 * PI * 0.25) };
        assert!(speed_bounds_ok(&b, ok));
        assert!(!speed_bounds_ok(&b, too_fast));
        assert!(!speed_bounds_ok(&b, SpeedValue { kind: SpeedKind::Angular, value: -0.01 }));
    }

    #[test]
    fn two_disks_act_as_point_vortices_outside() {
        let b = FourierBoundary::disks(1.0, 0.1, PairKind::Corotating, 4).unwrap();
        let b0 = b.with_eps(0.0).unwrap();
        let queries = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.5), Complex64::new(2.0, 1.0), Complex64::new(0.7, -0.2)];
        let u = velocity_field(&b, 128, &queries).unwrap();
        let u0 = velocity_field(&b0, 128, &queries).unwrap();
        assert!(u[0].norm() < 1e-14);
        for (a, c) in u.iter().zip(&u0) {
            assert!((a - c).norm() < 1e-10, "{a} vs {c}");
        }
    }

    #[test]
    fn far_field_decay() {
        let b = FourierBoundary::new(1.0, 0.2, PairKind::Corotating, vec![0.05, 0.01]).unwrap();
        let z = Complex64::new(600.0, 800.0);
        let u = velocity_field(&b, 64, &[z]).unwrap()[0];
        // circulation of each patch is its area over pi eps^2
        let circulation = 1.0 - 0.04 * (0.05 * 0.05 + 2.0 * 0.01 * 0.01);
        let expected = 2.0 * circulation / (2.0 * PI * 1000.0);
        assert!((u.norm() - expected).abs() < 1e-5 * expected, "{} vs {expected}", u.norm());
    }

    #[test]
    fn close_queries_are_rejected() {
        let b = FourierBoundary::disks(1.0, 0.1, PairKind::Corotating, 4).unwrap();
        let z = Complex64::new(1.1, 0.0);
        assert!(matches!(velocity_field(&b, 64, &[z]), Err(Error::QueryTooClose(_))));
    }

    #[test]
    fn admissibility_predicates() {
        let rule = QuadratureRule::new(64);
        let looped = FourierBoundary::new(1.0, 0.5, PairKind::Corotating, vec![3.0]).unwrap();
        assert!(matches!(
            check_admissible(&looped, &rule),
            Err(Error::NotAdmissible { predicate: Predicate::PolarGraph, .. })
        ));
        let ok = FourierBoundary::disks(1.0, 0.5, PairKind::Corotating, 4).unwrap();
        assert!(check_admissible(&ok, &rule).is_ok());
        let overlapping = FourierBoundary::disks(1.0, 1.2, PairKind::Corotating, 4).unwrap();
        assert!(check_admissible(&overlapping, &rule).is_err());
    }
}
