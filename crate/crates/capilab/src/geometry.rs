//! Analytic description of the domain family: spherical caps resting on the
//! boundary plane, perturbed by windowed radial Fourier modes.
//!
//! A domain is a radial graph about the origin. In planar mode the profile
//! `x(phi) = g(phi) (cos phi, sin phi)`, `phi in [0, pi]`, bounds a region of
//! the upper half-plane; in axisymmetric mode the same profile on
//! `[0, pi/2]` is the meridian of a body of revolution about the vertical
//! axis, with coordinates `(s, z)` = (distance from axis, height).
//!
//! All measures, curvatures and condition checks here are evaluated from the
//! analytic radius function, never from a mesh.

use crate::error::{Error, Result};
use crate::quad::PanelRule;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Default nodes per quadrature panel for curve integrals.
pub const QUAD_ORDER: usize = 16;
/// Default panel count for curve integrals.
pub const QUAD_PANELS: usize = 64;
/// Sample count for the star-shapedness gate.
const STAR_SAMPLES: usize = 4096;
/// Sample count for diameter and radii scans.
const SCAN_SAMPLES: usize = 2048;
/// Relative agreement required between quadrature order p and p + 4.
const QUAD_AGREEMENT_TOL: f64 = 1e-10;
/// Slope bound for star-shapedness: |g'/g| must stay below tan(80 deg).
const STAR_SLOPE_MAX: f64 = 5.671281819617709; // tan(80 deg)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Planar,
    Axisymmetric,
}

impl Mode {
    /// Dimension n of the free surface (1 for planar sections, 2 for bodies
    /// of revolution); the ambient space has dimension n + 1.
    pub fn n(self) -> usize {
        match self {
            Mode::Planar => 1,
            Mode::Axisymmetric => 2,
        }
    }

    /// Length of the profile parameter interval.
    pub fn phi_max(self) -> f64 {
        match self {
            Mode::Planar => PI,
            Mode::Axisymmetric => FRAC_PI_2,
        }
    }
}

/// One windowed radial Fourier mode `a * w(phi) * cos(k phi + delta)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationMode {
    pub k: u32,
    pub a: f64,
    #[serde(default)]
    pub delta: f64,
}

/// Parameters of one domain: cap radius, contact angle, and an optional list
/// of perturbation modes. The window factor pins the profile and its slope at
/// both parameter endpoints to the unperturbed cap, so the contact angle of a
/// perturbed domain is still exactly `theta`; `windowed = false` disables the
/// window for diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub mode: Mode,
    pub r: f64,
    pub theta: f64,
    #[serde(default)]
    pub perturbation: Vec<PerturbationMode>,
    #[serde(default = "default_true")]
    pub windowed: bool,
}

fn default_true() -> bool {
    true
}

/// Analytic summary of one domain. Quantities follow the geometric setup:
/// `volume` is the bulk measure, `surface_area` the free-surface measure,
/// `base_area` the wetted part of the supporting plane, `contact_measure`
/// the measure of their common boundary (the two contact points count as 2
/// in planar mode).
#[derive(Debug, Clone, Serialize)]
pub struct GeometricSummary {
    pub mode: Mode,
    pub volume: f64,
    pub surface_area: f64,
    pub base_area: f64,
    pub contact_measure: f64,
    pub diameter: f64,
    pub contact_angles: Vec<f64>,
    pub curvature_samples: Vec<(f64, f64)>,
    pub min_curvature: f64,
    pub star_slope_max: f64,
    /// Relative shift of the measures when the panel order is raised by 4.
    pub quad_agreement: f64,
}

/// Result of the exterior tangent-ball probe; `violations` lists the probe
/// parameters where one of the two conditions failed.
#[derive(Debug, Clone, Serialize)]
pub struct ExteriorCapCheck {
    pub r_probe: f64,
    pub theta: f64,
    pub satisfied: bool,
    pub violations: Vec<CapViolation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapViolation {
    pub phi: f64,
    /// 1 = a boundary sample fell strictly inside the probe ball,
    /// 2 = the ball center sat too low for the prescribed angle.
    pub condition: u8,
    pub margin: f64,
}

impl DomainSpec {
    pub fn new(
        mode: Mode,
        r: f64,
        theta: f64,
        perturbation: Vec<PerturbationMode>,
    ) -> Result<Self> {
        let spec = DomainSpec {
            mode,
            r,
            theta,
            perturbation,
            windowed: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Unperturbed cap of radius `r` meeting the plane at angle `theta`.
    pub fn cap(mode: Mode, r: f64, theta: f64) -> Result<Self> {
        Self::new(mode, r, theta, Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "cap radius must be positive, got {}",
                self.r
            )));
        }
        if !(self.theta > 0.0 && self.theta <= FRAC_PI_2 * (1.0 + 1e-12)) {
            return Err(Error::InvalidDomain(format!(
                "contact angle must lie in (0, pi/2], got {}",
                self.theta
            )));
        }
        for m in &self.perturbation {
            if m.k == 0 {
                return Err(Error::InvalidDomain(
                    "perturbation frequency k must be >= 1".into(),
                ));
            }
            if !m.a.is_finite() || !m.delta.is_finite() {
                return Err(Error::InvalidDomain(
                    "perturbation amplitude and phase must be finite".into(),
                ));
            }
        }
        // Star-shapedness and positivity gate on a fixed dense grid.
        let phi_max = self.mode.phi_max();
        for i in 0..=STAR_SAMPLES {
            let phi = phi_max * i as f64 / STAR_SAMPLES as f64;
            let (g, dg, _) = self.radius_derivs(phi);
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "profile radius must stay positive; g({phi:.6}) = {g:.6}"
                )));
            }
            if dg.abs() >= STAR_SLOPE_MAX * g {
                return Err(Error::InvalidDomain(format!(
                    "domain is not star-shaped about the anchor: |g'/g| = {:.3} at phi = {:.6}",
                    (dg / g).abs(),
                    phi
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.mode.n()
    }

    pub fn phi_max(&self) -> f64 {
        self.mode.phi_max()
    }

    /// Profile radius `g(phi)`.
    pub fn radius(&self, phi: f64) -> f64 {
        self.radius_derivs(phi).0
    }

    /// `(g, g', g'')` at `phi`; the cap part and the perturbation factor are
    /// differentiated analytically.
    pub fn radius_derivs(&self, phi: f64) -> (f64, f64, f64) {
        let a = self.r * self.theta.cos();
        let b = self.r * self.theta.sin();
        let (sin, cos) = phi.sin_cos();
        let q = (a * a * sin * sin + b * b).sqrt();
        let g0 = -a * sin + q;
        let dq = a * a * sin * cos / q;
        let dg0 = -a * cos + dq;
        let cos2 = (2.0 * phi).cos();
        let ddq = a * a * cos2 / q - (a * a * sin * cos).powi(2) / (q * q * q);
        let ddg0 = a * sin + ddq;

        if self.perturbation.is_empty() {
            return (g0, dg0, ddg0);
        }

        let m = PI / self.phi_max();
        let (w, dw, ddw) = if self.windowed {
            let sw = (m * phi).sin();
            let (s2m, c2m) = (2.0 * m * phi).sin_cos();
            (sw * sw, m * s2m, 2.0 * m * m * c2m)
        } else {
            (1.0, 0.0, 0.0)
        };

        let mut p = 1.0;
        let mut dp = 0.0;
        let mut ddp = 0.0;
        for mode in &self.perturbation {
            let k = mode.k as f64;
            let (sk, ck) = (k * phi + mode.delta).sin_cos();
            p += mode.a * w * ck;
            dp += mode.a * (dw * ck - k * w * sk);
            ddp += mode.a * (ddw * ck - 2.0 * k * dw * sk - k * k * w * ck);
        }
        (
            g0 * p,
            dg0 * p + g0 * dp,
            ddg0 * p + 2.0 * dg0 * dp + g0 * ddp,
        )
    }

    /// Point on the profile. Planar mode returns `(x, y)`, axisymmetric mode
    /// `(s, z)`. The components on the base plane and on the axis are snapped
    /// to exact zero.
    pub fn point(&self, phi: f64) -> [f64; 2] {
        let g = self.radius(phi);
        let (sin, cos) = phi.sin_cos();
        let mut p = [g * cos, g * sin];
        if phi == 0.0 {
            p = [g, 0.0];
        }
        if phi == self.phi_max() {
            match self.mode {
                Mode::Planar => p = [-g, 0.0],
                Mode::Axisymmetric => p = [0.0, g],
            }
        }
        p
    }

    /// Metric factor `|x'(phi)|` of the profile.
    pub fn speed(&self, phi: f64) -> f64 {
        let (g, dg, _) = self.radius_derivs(phi);
        (g * g + dg * dg).sqrt()
    }

    /// Outward unit normal of the domain along the profile.
    pub fn unit_normal(&self, phi: f64) -> [f64; 2] {
        let (g, dg, _) = self.radius_derivs(phi);
        let (sin, cos) = phi.sin_cos();
        let tx = dg * cos - g * sin;
        let ty = dg * sin + g * cos;
        let len = (tx * tx + ty * ty).sqrt();
        [ty / len, -tx / len]
    }

    /// Surface measure density per unit `phi`: arc length in planar mode,
    /// `2 pi s` times arc length for the surface of revolution.
    pub fn area_weight(&self, phi: f64) -> f64 {
        let speed = self.speed(phi);
        match self.mode {
            Mode::Planar => speed,
            Mode::Axisymmetric => {
                let s = self.radius(phi) * phi.cos();
                2.0 * PI * s * speed
            }
        }
    }

    /// Mean curvature (sum of principal curvatures) of the free surface with
    /// respect to the outward normal. On the axis of symmetry both principal
    /// curvatures coincide, so the limit value is used there.
    pub fn curvature(&self, phi: f64) -> f64 {
        let (g, dg, ddg) = self.radius_derivs(phi);
        let denom = (g * g + dg * dg).sqrt();
        let profile = (g * g + 2.0 * dg * dg - g * ddg) / (denom * denom * denom);
        match self.mode {
            Mode::Planar => profile,
            Mode::Axisymmetric => {
                let (sin, cos) = phi.sin_cos();
                let s = g * cos;
                if s <= 1e-9 * g {
                    2.0 * profile
                } else {
                    let dz = dg * sin + g * cos;
                    profile + dz / (s * denom)
                }
            }
        }
    }

    /// Angles between the free surface and the base plane at the contact set:
    /// two values (right and left endpoint) in planar mode, one by symmetry
    /// for bodies of revolution.
    pub fn contact_angles(&self) -> Vec<f64> {
        let (g0, dg0, _) = self.radius_derivs(0.0);
        let right = g0.atan2(-dg0);
        match self.mode {
            Mode::Planar => {
                let (g1, dg1, _) = self.radius_derivs(PI);
                vec![right, g1.atan2(dg1)]
            }
            Mode::Axisymmetric => vec![right],
        }
    }

    /// Measures, diameter, contact angles and curvature diagnostics. Fails if
    /// raising the quadrature order moves any measure by more than 1e-10
    /// relative.
    pub fn measures(&self) -> Result<GeometricSummary> {
        let (vol, surf) = self.bulk_measures(QUAD_ORDER);
        let (vol_hi, surf_hi) = self.bulk_measures(QUAD_ORDER + 4);
        let agree = rel_diff(vol, vol_hi).max(rel_diff(surf, surf_hi));
        if agree > QUAD_AGREEMENT_TOL {
            return Err(Error::Quadrature(format!(
                "measures moved by {agree:.3e} relative when the panel order was raised; \
                 profile too rough for the configured rule"
            )));
        }

        let g0 = self.radius(0.0);
        let (base, contact) = match self.mode {
            Mode::Planar => (g0 + self.radius(PI), 2.0),
            Mode::Axisymmetric => (PI * g0 * g0, 2.0 * PI * g0),
        };

        let phi_max = self.phi_max();
        let mut min_h = f64::INFINITY;
        let mut slope_max: f64 = 0.0;
        for i in 0..=SCAN_SAMPLES {
            let phi = phi_max * i as f64 / SCAN_SAMPLES as f64;
            min_h = min_h.min(self.curvature(phi));
            let (g, dg, _) = self.radius_derivs(phi);
            slope_max = slope_max.max((dg / g).abs());
        }
        let curvature_samples = (0..=32)
            .map(|i| {
                let phi = phi_max * i as f64 / 32.0;
                (phi, self.curvature(phi))
            })
            .collect();

        Ok(GeometricSummary {
            mode: self.mode,
            volume: vol,
            surface_area: surf,
            base_area: base,
            contact_measure: contact,
            diameter: self.diameter(),
            contact_angles: self.contact_angles(),
            curvature_samples,
            min_curvature: min_h,
            star_slope_max: slope_max,
            quad_agreement: agree,
        })
    }

    fn bulk_measures(&self, order: usize) -> (f64, f64) {
        let rule = PanelRule::new(0.0, self.phi_max(), order, QUAD_PANELS);
        match self.mode {
            Mode::Planar => {
                let vol = rule.integrate(|phi| 0.5 * self.radius(phi).powi(2));
                let surf = rule.integrate(|phi| self.speed(phi));
                (vol, surf)
            }
            Mode::Axisymmetric => {
                let vol = rule.integrate(|phi| {
                    let g = self.radius(phi);
                    2.0 * PI / 3.0 * g * g * g * phi.cos()
                });
                let surf = rule.integrate(|phi| self.area_weight(phi));
                (vol, surf)
            }
        }
    }

    /// Extrinsic diameter of the closed domain, from a dense boundary scan.
    /// For bodies of revolution the scan accounts for antipodal azimuths.
    pub fn diameter(&self) -> f64 {
        let pts = self.surface_samples(SCAN_SAMPLES);
        let mut best: f64 = 0.0;
        match self.mode {
            Mode::Planar => {
                for i in 0..pts.len() {
                    for j in (i + 1)..pts.len() {
                        let dx = pts[i][0] - pts[j][0];
                        let dy = pts[i][1] - pts[j][1];
                        best = best.max(dx * dx + dy * dy);
                    }
                }
            }
            Mode::Axisymmetric => {
                for i in 0..pts.len() {
                    for j in i..pts.len() {
                        let ds = pts[i][0] + pts[j][0];
                        let dz = pts[i][1] - pts[j][1];
                        best = best.max(ds * ds + dz * dz);
                    }
                }
            }
        }
        best.sqrt()
    }

    /// Inner and outer radius of the free surface as seen from `center`.
    /// In axisymmetric mode `center[0]` is the horizontal distance of the
    /// center from the axis (0 for centers on the axis).
    pub fn radii(&self, center: [f64; 2]) -> (f64, f64) {
        let pts = self.surface_samples(SCAN_SAMPLES);
        let mut rho_i = f64::INFINITY;
        let mut rho_e: f64 = 0.0;
        match self.mode {
            Mode::Planar => {
                for p in &pts {
                    let d = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                    rho_i = rho_i.min(d);
                    rho_e = rho_e.max(d);
                }
            }
            Mode::Axisymmetric => {
                let off = center[0].abs();
                for p in &pts {
                    let near = ((p[0] - off).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                    let far = ((p[0] + off).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                    rho_i = rho_i.min(near);
                    rho_e = rho_e.max(far);
                }
            }
        }
        (rho_i, rho_e)
    }

    /// Profile points at `count + 1` evenly spaced parameters.
    pub fn surface_samples(&self, count: usize) -> Vec<[f64; 2]> {
        let phi_max = self.phi_max();
        (0..=count)
            .map(|i| self.point(phi_max * i as f64 / count as f64))
            .collect()
    }

    /// Probe the exterior tangent-ball condition with balls of radius
    /// `r_probe` prescribed to meet the plane at angle `theta`. The check is
    /// sampled: a pass certifies the condition up to the probe and scan
    /// resolutions (256 probe points, 2048 boundary samples).
    pub fn check_exterior_cap(&self, theta: f64, r_probe: f64) -> ExteriorCapCheck {
        let probes = 256;
        let samples = self.surface_samples(SCAN_SAMPLES);
        let phi_max = self.phi_max();
        let slack = 1e-9 * r_probe;
        let mut violations = Vec::new();
        for i in 1..probes {
            let phi = phi_max * i as f64 / probes as f64;
            let x = self.point(phi);
            let nu = self.unit_normal(phi);
            let cx = x[0] + r_probe * nu[0];
            let cz = x[1] + r_probe * nu[1];
            if cz < r_probe * theta.cos() - slack {
                violations.push(CapViolation {
                    phi,
                    condition: 2,
                    margin: r_probe * theta.cos() - cz,
                });
                continue;
            }
            let mut worst = f64::INFINITY;
            for p in &samples {
                let d = match self.mode {
                    Mode::Planar => ((p[0] - cx).powi(2) + (p[1] - cz).powi(2)).sqrt(),
                    Mode::Axisymmetric => {
                        (((p[0] - cx.abs()).powi(2)) + (p[1] - cz).powi(2)).sqrt()
                    }
                };
                worst = worst.min(d);
            }
            // Base samples: the wetted disk / segment can also intrude.
            let base_d = match self.mode {
                Mode::Planar => {
                    let lo = -self.radius(PI);
                    let hi = self.radius(0.0);
                    let px = cx.clamp(lo, hi);
                    ((cx - px).powi(2) + cz * cz).sqrt()
                }
                Mode::Axisymmetric => {
                    let rim = self.radius(0.0);
                    let ps = cx.abs().clamp(0.0, rim);
                    ((cx.abs() - ps).powi(2) + cz * cz).sqrt()
                }
            };
            worst = worst.min(base_d);
            if worst < r_probe - slack - 1e-12 {
                violations.push(CapViolation {
                    phi,
                    condition: 1,
                    margin: r_probe - worst,
                });
            }
        }
        ExteriorCapCheck {
            r_probe,
            theta,
            satisfied: violations.is_empty(),
            violations,
        }
    }

    /// Distance from a point of the closed domain to its boundary (free
    /// surface or base). Uses a coarse-to-fine parameter scan of the profile.
    pub fn boundary_distance(&self, p: [f64; 2]) -> f64 {
        let phi_max = self.phi_max();
        let coarse_n = 256usize;
        let mut best_i = 0usize;
        let mut best = f64::INFINITY;
        for i in 0..=coarse_n {
            let q = self.point(phi_max * i as f64 / coarse_n as f64);
            let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            if d < best {
                best = d;
                best_i = i;
            }
        }
        let lo = phi_max * (best_i.saturating_sub(2)) as f64 / coarse_n as f64;
        let hi = phi_max * ((best_i + 2).min(coarse_n)) as f64 / coarse_n as f64;
        let fine_n = 128;
        for i in 0..=fine_n {
            let phi = lo + (hi - lo) * i as f64 / fine_n as f64;
            let q = self.point(phi);
            let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            best = best.min(d);
        }
        let sigma = best.sqrt();
        let base = match self.mode {
            Mode::Planar => {
                let lo = -self.radius(PI);
                let hi = self.radius(0.0);
                let px = p[0].clamp(lo, hi);
                ((p[0] - px).powi(2) + p[1] * p[1]).sqrt()
            }
            Mode::Axisymmetric => {
                let rim = self.radius(0.0);
                let ps = p[0].clamp(0.0, rim);
                ((p[0] - ps).powi(2) + p[1] * p[1]).sqrt()
            }
        };
        sigma.min(base)
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::FRAC_PI_3;

    fn half_disk() -> DomainSpec {
        DomainSpec::cap(Mode::Planar, 1.0, FRAC_PI_2).unwrap()
    }

    fn planar_third() -> DomainSpec {
        DomainSpec::cap(Mode::Planar, 1.0, FRAC_PI_3).unwrap()
    }

    fn perturbed(mode: Mode, theta: f64, k: u32, a: f64) -> DomainSpec {
        DomainSpec::new(mode, 1.0, theta, vec![PerturbationMode { k, a, delta: 0.0 }]).unwrap()
    }

    #[test]
    fn profile_radius_matches_cap_closed_form() {
        assert_relative_eq!(half_disk().radius(FRAC_PI_2 / 2.0), 1.0, epsilon = 1e-14);
        let c = planar_third();
        assert_relative_eq!(c.radius(0.0), 3f64.sqrt() / 2.0, epsilon = 1e-14);
        assert_relative_eq!(c.radius(FRAC_PI_2), 0.5, epsilon = 1e-14);
        // Profile points stay on the circle |x - z| = r with z = (0, -cos theta).
        for i in 0..=64 {
            let phi = PI * i as f64 / 64.0;
            let p = c.point(phi);
            let d = (p[0] * p[0] + (p[1] + 0.5) * (p[1] + 0.5)).sqrt();
            assert_relative_eq!(d, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DomainSpec::cap(Mode::Planar, 1.0, 9.0).is_err());
        assert!(DomainSpec::cap(Mode::Planar, -1.0, 1.0).is_err());
        assert!(DomainSpec::cap(Mode::Planar, 1.0, 0.0).is_err());
        // Amplitude large enough to pinch the profile radius to zero.
        assert!(DomainSpec::new(
            Mode::Planar,
            1.0,
            FRAC_PI_2,
            vec![PerturbationMode { k: 2, a: 1.5, delta: 0.0 }],
        )
        .is_err());
        // Slope bound: a steep high-frequency ripple breaks star-shapedness.
        assert!(DomainSpec::new(
            Mode::Planar,
            1.0,
            FRAC_PI_2,
            vec![PerturbationMode { k: 24, a: 0.35, delta: 0.0 }],
        )
        .is_err());
    }

    #[test]
    fn measures_match_closed_forms() {
        let gs = half_disk().measures().unwrap();
        assert_relative_eq!(gs.volume, FRAC_PI_2, max_relative = 1e-13);
        assert_relative_eq!(gs.surface_area, PI, max_relative = 1e-13);
        assert_relative_eq!(gs.base_area, 2.0, max_relative = 1e-14);
        assert_relative_eq!(gs.contact_measure, 2.0, max_relative = 1e-14);
        assert_relative_eq!(gs.diameter, 2.0, max_relative = 1e-7);
        assert!(gs.quad_agreement <= 1e-10);

        let gs = planar_third().measures().unwrap();
        assert_relative_eq!(gs.volume, PI / 3.0 - 3f64.sqrt() / 4.0, max_relative = 1e-13);
        assert_relative_eq!(gs.surface_area, 2.0 * PI / 3.0, max_relative = 1e-13);
        assert_relative_eq!(gs.base_area, 3f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gs.diameter, 3f64.sqrt(), max_relative = 1e-7);

        let gs = DomainSpec::cap(Mode::Axisymmetric, 1.0, FRAC_PI_2)
            .unwrap()
            .measures()
            .unwrap();
        assert_relative_eq!(gs.volume, 2.0 * PI / 3.0, max_relative = 1e-13);
        assert_relative_eq!(gs.surface_area, 2.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(gs.base_area, PI, max_relative = 1e-14);
        assert_relative_eq!(gs.contact_measure, 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(gs.diameter, 2.0, max_relative = 1e-7);

        // Spherical cap at theta = pi/3: zone area 2 pi r^2 (1 - cos theta),
        // volume pi h^2 (3r - h) / 3 with h = r (1 - cos theta).
        let gs = DomainSpec::cap(Mode::Axisymmetric, 1.0, FRAC_PI_3)
            .unwrap()
            .measures()
            .unwrap();
        assert_relative_eq!(gs.volume, 5.0 * PI / 24.0, max_relative = 1e-13);
        assert_relative_eq!(gs.surface_area, PI, max_relative = 1e-13);
        assert_relative_eq!(gs.base_area, 0.75 * PI, max_relative = 1e-14);
        assert_relative_eq!(gs.contact_measure, 3f64.sqrt() * PI, max_relative = 1e-14);
    }

    #[test]
    fn cap_curvature_is_n_over_r() {
        for (mode, r, theta) in [
            (Mode::Planar, 1.0, FRAC_PI_2),
            (Mode::Planar, 2.5, 1.1),
            (Mode::Axisymmetric, 1.0, FRAC_PI_2),
            (Mode::Axisymmetric, 0.7, FRAC_PI_3),
        ] {
            let spec = DomainSpec::cap(mode, r, theta).unwrap();
            let want = mode.n() as f64 / r;
            for i in 0..=48 {
                let phi = spec.phi_max() * i as f64 / 48.0;
                assert_relative_eq!(spec.curvature(phi), want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn perturbed_curvature_matches_frozen_value_and_fd_oracle() {
        // r = 1, theta = pi/2, mode (k=2, a=0.05, delta=0), at phi = pi/2:
        // g = 0.95, g' = 0, g'' = 0.3 exactly, so the profile curvature is
        // (g^2 - g g'') / g^3 = 0.6175 / 0.857375.
        let spec = perturbed(Mode::Planar, FRAC_PI_2, 2, 0.05);
        let frozen = 0.6175 / 0.857375;
        assert_relative_eq!(spec.curvature(FRAC_PI_2), frozen, epsilon = 1e-13);

        // Independent check: five-point finite differences on curve samples.
        for &phi in &[0.4, FRAC_PI_2, 1.9, 2.6] {
            let fd = fd_curvature(&spec, phi);
            assert_relative_eq!(spec.curvature(phi), fd, max_relative = 1e-7);
        }
        let axi = perturbed(Mode::Axisymmetric, FRAC_PI_3, 3, 0.08);
        for &phi in &[0.3, 0.7, 1.1] {
            let fd = fd_meridian_curvature(&axi, phi);
            let parallel = {
                let (g, dg, _) = axi.radius_derivs(phi);
                let (sin, cos) = phi.sin_cos();
                (dg * sin + g * cos) / (g * cos * (g * g + dg * dg).sqrt())
            };
            assert_relative_eq!(axi.curvature(phi), fd + parallel, max_relative = 1e-6);
        }
    }

    /// Plane-curve curvature from position samples only.
    fn fd_curvature(spec: &DomainSpec, phi: f64) -> f64 {
        let d = 1e-3;
        let p = |t: f64| spec.point(t);
        let (m2, m1, p0, p1, p2) = (p(phi - 2.0 * d), p(phi - d), p(phi), p(phi + d), p(phi + 2.0 * d));
        let d1 = |a: usize| (-p2[a] + 8.0 * p1[a] - 8.0 * m1[a] + m2[a]) / (12.0 * d);
        let d2 = |a: usize| {
            (-p2[a] + 16.0 * p1[a] - 30.0 * p0[a] + 16.0 * m1[a] - m2[a]) / (12.0 * d * d)
        };
        let (xp, yp, xpp, ypp) = (d1(0), d1(1), d2(0), d2(1));
        (xp * ypp - yp * xpp) / (xp * xp + yp * yp).powf(1.5)
    }

    fn fd_meridian_curvature(spec: &DomainSpec, phi: f64) -> f64 {
        fd_curvature(spec, phi)
    }

    #[test]
    fn contact_angles_are_exact_for_windowed_profiles() {
        for theta in [0.4, FRAC_PI_3, 1.2, FRAC_PI_2] {
            let spec = DomainSpec::new(
                Mode::Planar,
                1.3,
                theta,
                vec![PerturbationMode { k: 3, a: 0.12, delta: 0.7 }],
            )
            .unwrap();
            for angle in spec.contact_angles() {
                assert_abs_diff_eq!(angle, theta, epsilon = 1e-12);
            }
            let spec = DomainSpec::new(
                Mode::Axisymmetric,
                0.9,
                theta,
                vec![PerturbationMode { k: 2, a: 0.1, delta: 0.3 }],
            )
            .unwrap();
            assert_abs_diff_eq!(spec.contact_angles()[0], theta, epsilon = 1e-12);
        }
    }

    #[test]
    fn unwindowed_perturbation_shifts_the_contact_angle() {
        let mut spec = DomainSpec::new(
            Mode::Planar,
            1.0,
            FRAC_PI_3,
            vec![PerturbationMode { k: 2, a: 0.1, delta: 0.9 }],
        )
        .unwrap();
        spec.windowed = false;
        spec.validate().unwrap();
        let angles = spec.contact_angles();
        assert!((angles[0] - FRAC_PI_3).abs() > 1e-3);
        // The windowed version of the same mode keeps the angle exact.
        spec.windowed = true;
        assert_abs_diff_eq!(spec.contact_angles()[0], FRAC_PI_3, epsilon = 1e-12);
    }

    #[test]
    fn surface_flux_balance_identities_hold_analytically() {
        // Divergence theorem for the vertical field: integral of nu_z over
        // the free surface equals the base measure. The balance of curvature
        // against the contact measure and the Minkowski-type combination are
        // consequences of the constant contact angle.
        for spec in [
            half_disk(),
            planar_third(),
            perturbed(Mode::Planar, FRAC_PI_3, 3, 0.15),
            DomainSpec::cap(Mode::Axisymmetric, 1.0, FRAC_PI_3).unwrap(),
            perturbed(Mode::Axisymmetric, 1.1, 2, 0.1),
        ] {
            let gs = spec.measures().unwrap();
            let rule = PanelRule::new(0.0, spec.phi_max(), QUAD_ORDER, QUAD_PANELS);
            let n = spec.n() as f64;

            let flux = rule.integrate(|phi| spec.unit_normal(phi)[1] * spec.area_weight(phi));
            assert_relative_eq!(flux, gs.base_area, max_relative = 1e-12);

            let teeter = rule.integrate(|phi| {
                spec.curvature(phi) * spec.unit_normal(phi)[1] * spec.area_weight(phi)
            });
            assert_relative_eq!(
                teeter,
                spec.theta.sin() * gs.contact_measure,
                max_relative = 1e-10
            );

            let mink = rule.integrate(|phi| {
                let nu = spec.unit_normal(phi);
                let x = spec.point(phi);
                let support = x[0] * nu[0] + x[1] * nu[1];
                (n * (1.0 - spec.theta.cos() * nu[1]) - spec.curvature(phi) * support)
                    * spec.area_weight(phi)
            });
            assert_abs_diff_eq!(mink, 0.0, epsilon = 1e-10 * gs.surface_area);
        }
    }

    #[test]
    fn radii_about_the_cap_center_collapse() {
        let (ri, re) = planar_third().radii([0.0, -0.5]);
        assert_relative_eq!(ri, 1.0, epsilon = 1e-12);
        assert_relative_eq!(re, 1.0, epsilon = 1e-12);
        let (ri, re) = half_disk().radii([0.0, 0.0]);
        assert_relative_eq!(ri, 1.0, epsilon = 1e-12);
        assert_relative_eq!(re, 1.0, epsilon = 1e-12);
        let (ri, re) = perturbed(Mode::Planar, FRAC_PI_2, 2, 0.1).radii([0.0, 0.0]);
        assert!(re - ri > 0.05);
        let (ri, re) = DomainSpec::cap(Mode::Axisymmetric, 1.0, FRAC_PI_3)
            .unwrap()
            .radii([0.0, -0.5]);
        assert_relative_eq!(ri, 1.0, epsilon = 1e-12);
        assert_relative_eq!(re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exterior_ball_probe_accepts_caps_and_flags_dents() {
        let check = planar_third().check_exterior_cap(FRAC_PI_3, 0.5);
        assert!(check.satisfied, "{:?}", check.violations.first());
        let check = planar_third().check_exterior_cap(FRAC_PI_3, 1.0);
        assert!(check.satisfied);
        let check = half_disk().check_exterior_cap(FRAC_PI_2, 1e6);
        assert!(check.satisfied);
        let check = DomainSpec::cap(Mode::Axisymmetric, 1.0, FRAC_PI_3)
            .unwrap()
            .check_exterior_cap(FRAC_PI_3, 0.8);
        assert!(check.satisfied);

        let dented = perturbed(Mode::Planar, FRAC_PI_3, 4, 0.3);
        let check = dented.check_exterior_cap(FRAC_PI_3, 0.5);
        assert!(!check.satisfied);
        assert!(!check.violations.is_empty());
    }

    #[test]
    fn boundary_distance_examples() {
        let hd = half_disk();
        assert_abs_diff_eq!(hd.boundary_distance([0.0, 0.0]), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(hd.boundary_distance([0.0, 0.5]), 0.5, epsilon = 1e-7);
        assert_abs_diff_eq!(hd.boundary_distance([0.3, 0.2]), 0.2, epsilon = 1e-7);
        assert_abs_diff_eq!(hd.boundary_distance([0.0, 0.95]), 0.05, epsilon = 1e-7);
    }

    #[test]
    fn diameter_dominates_profile_radius() {
        for spec in [
            half_disk(),
            planar_third(),
            perturbed(Mode::Planar, 1.0, 2, 0.2),
            perturbed(Mode::Axisymmetric, FRAC_PI_3, 2, 0.1),
        ] {
            let gmax = (0..=512)
                .map(|i| spec.radius(spec.phi_max() * i as f64 / 512.0))
                .fold(0.0f64, f64::max);
            assert!(spec.diameter() >= gmax);
        }
    }
}
