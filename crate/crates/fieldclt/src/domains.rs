//! Convex observation windows K, their dilations TK, Dirichlet-type
//! kernels, L_p norm constants C_p(K) and the Fejer-type approximate
//! identity built from |Delta_T|^2.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use thiserror::Error;

use crate::bessel;
use crate::quad;

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("p = {p} is outside Assumption K range: requires p > p_* = {p_star}")]
    NormOutsideRange { p: f64, p_star: f64 },
    #[error("unsupported body configuration: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    Cube,
    Ball,
    Rectangle,
}

/// A bounded convex window containing the origin.
///
/// The cube is [-1/2, 1/2]^d, the ball has radius 1/2, and a rectangle is
/// the product of [-h_j, h_j]. A rectangle may instead sit with a corner
/// at the origin (product of [0, 2 h_j]); that variant only matters for
/// weighted functionals since every kernel quantity depends on |Delta|,
/// which is translation invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexBody {
    pub kind: BodyKind,
    pub dimension: usize,
    pub half_widths: Vec<f64>,
    #[serde(default)]
    pub corner_at_origin: bool,
}

impl ConvexBody {
    pub fn cube(dimension: usize) -> Self {
        assert!((1..=3).contains(&dimension), "dimension must be 1..=3");
        ConvexBody {
            kind: BodyKind::Cube,
            dimension,
            half_widths: vec![0.5; dimension],
            corner_at_origin: false,
        }
    }

    pub fn ball(dimension: usize) -> Self {
        assert!((1..=3).contains(&dimension), "dimension must be 1..=3");
        ConvexBody {
            kind: BodyKind::Ball,
            dimension,
            half_widths: vec![0.5; dimension],
            corner_at_origin: false,
        }
    }

    pub fn rectangle(half_widths: Vec<f64>) -> Self {
        assert!(
            (1..=3).contains(&half_widths.len()),
            "dimension must be 1..=3"
        );
        assert!(half_widths.iter().all(|&h| h > 0.0));
        ConvexBody {
            kind: BodyKind::Rectangle,
            dimension: half_widths.len(),
            half_widths,
            corner_at_origin: false,
        }
    }

    /// The unit box [0, 1]^d used by the weighted-functional path.
    pub fn unit_box_at_origin(dimension: usize) -> Self {
        let mut body = ConvexBody::rectangle(vec![0.5; dimension]);
        body.corner_at_origin = true;
        body
    }

    /// Lebesgue measure of K.
    pub fn volume(&self) -> f64 {
        match self.kind {
            BodyKind::Cube | BodyKind::Rectangle => {
                self.half_widths.iter().map(|h| 2.0 * h).product()
            }
            BodyKind::Ball => {
                // unit-ball volume by the recurrence V_d = (2 pi / d) V_{d-2},
                // which avoids the rounding error of gamma(d/2 + 1)
                let mut v = if self.dimension % 2 == 0 { 1.0 } else { 2.0 };
                let mut d = if self.dimension % 2 == 0 { 2 } else { 3 };
                while d <= self.dimension {
                    v *= 2.0 * PI / d as f64;
                    d += 2;
                }
                v * 0.5f64.powi(self.dimension as i32)
            }
        }
    }

    /// (d-1)-measure of the boundary of K.
    pub fn surface_area(&self) -> f64 {
        match self.kind {
            BodyKind::Cube | BodyKind::Rectangle => match self.dimension {
                1 => 2.0,
                _ => {
                    let sides: f64 = (0..self.dimension)
                        .map(|j| {
                            2.0 * self
                                .half_widths
                                .iter()
                                .enumerate()
                                .filter(|(i, _)| *i != j)
                                .map(|(_, h)| 2.0 * h)
                                .product::<f64>()
                        })
                        .sum();
                    sides
                }
            },
            BodyKind::Ball => {
                // S = d V(r) / r with r = 1/2
                self.dimension as f64 * self.volume() / 0.5
            }
        }
    }

    /// Radius of the largest origin-centered ball inside K.
    pub fn inradius(&self) -> f64 {
        self.half_widths.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Norm-divergence threshold: C_p(K) is finite exactly for p > p_*.
    pub fn p_star(&self) -> f64 {
        match self.kind {
            BodyKind::Cube | BodyKind::Rectangle => 1.0,
            BodyKind::Ball => {
                let d = self.dimension as f64;
                2.0 * d / (d + 1.0)
            }
        }
    }

    /// Per-axis bounding interval of TK.
    pub fn bounding_box(&self, scale: f64) -> Vec<(f64, f64)> {
        self.half_widths
            .iter()
            .map(|&h| {
                if self.corner_at_origin {
                    (0.0, 2.0 * h * scale)
                } else {
                    (-h * scale, h * scale)
                }
            })
            .collect()
    }

    /// Membership of a point in the dilation TK.
    pub fn contains(&self, t: &[f64], scale: f64) -> bool {
        debug_assert_eq!(t.len(), self.dimension);
        match self.kind {
            BodyKind::Cube | BodyKind::Rectangle => {
                t.iter().zip(&self.half_widths).all(|(&x, &h)| {
                    if self.corner_at_origin {
                        (0.0..=2.0 * h * scale).contains(&x)
                    } else {
                        x.abs() <= h * scale
                    }
                })
            }
            BodyKind::Ball => {
                t.iter().map(|x| x * x).sum::<f64>().sqrt() <= 0.5 * scale
            }
        }
    }

    /// Dirichlet-type kernel Delta_T(lambda) = integral of e^{i t lambda} over TK.
    ///
    /// Closed forms: product of sines per axis for cube/rectangle, Bessel
    /// J_{d/2} for the ball. Delta_T(0) = T^d |K| exactly.
    pub fn dirichlet_kernel(&self, t_scale: f64, lambda: &[f64]) -> Complex64 {
        assert!(t_scale > 0.0);
        assert_eq!(lambda.len(), self.dimension);
        match self.kind {
            BodyKind::Cube | BodyKind::Rectangle => {
                let mut out = Complex64::new(1.0, 0.0);
                for (&l, &h) in lambda.iter().zip(&self.half_widths) {
                    let a = h * t_scale;
                    let magnitude = if l == 0.0 {
                        2.0 * a
                    } else {
                        2.0 * (a * l).sin() / l
                    };
                    let factor = if self.corner_at_origin {
                        // interval [0, 2a]: extra phase e^{i a lambda}
                        Complex64::from_polar(1.0, a * l) * magnitude
                    } else {
                        Complex64::new(magnitude, 0.0)
                    };
                    out *= factor;
                }
                out
            }
            BodyKind::Ball => {
                let d = self.dimension;
                let r = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
                let x = r * t_scale / 2.0;
                let val = (PI * t_scale).powf(d as f64 / 2.0) * bessel_ratio(d, x)
                    * (t_scale / 2.0).powf(d as f64 / 2.0);
                Complex64::new(val, 0.0)
            }
        }
    }

    /// Numerical C_p(K) = ||Delta_1||_p with a reported error bound.
    pub fn kernel_norm(&self, p: f64, tolerance: f64) -> Result<(f64, f64), DomainError> {
        let p_star = self.p_star();
        if p <= p_star {
            return Err(DomainError::NormOutsideRange { p, p_star });
        }
        assert!(tolerance > 0.0);
        match self.kind {
            BodyKind::Cube | BodyKind::Rectangle => {
                let mut norm_p = 1.0;
                let mut rel_err = 0.0;
                for &h in &self.half_widths {
                    // per-axis: int |2 sin(h l)/l|^p dl = (2h)^p / h * I_p,
                    // I_p = int_R |sin z / z|^p dz
                    let (ip, ip_err) = sinc_power_integral(p, tolerance / 4.0);
                    let axis = (2.0 * h).powf(p) / h * ip;
                    norm_p *= axis;
                    rel_err += ip_err / ip;
                }
                let c = norm_p.powf(1.0 / p);
                Ok((c, c * rel_err / p))
            }
            BodyKind::Ball => {
                let d = self.dimension as f64;
                let (radial, radial_err) = ball_radial_integral(self.dimension, p, tolerance / 4.0);
                let sphere = 2.0 * PI.powf(d / 2.0) / gamma(d / 2.0);
                let c = (2.0 * PI).powf(d / 2.0)
                    * 2.0f64.powf(-d * (1.0 - 1.0 / p))
                    * (sphere * radial).powf(1.0 / p);
                Ok((c, c * radial_err / (radial * p)))
            }
        }
    }

    /// ||Delta_T||_p = T^{d (1 - 1/p)} C_p(K).
    pub fn scaled_kernel_norm(&self, p: f64, t_scale: f64) -> Result<f64, DomainError> {
        assert!(t_scale > 0.0);
        let (c, _) = self.kernel_norm(p, 1e-8)?;
        Ok(t_scale.powf(self.dimension as f64 * (1.0 - 1.0 / p)) * c)
    }

    /// Mass balance of the Fejer-type kernel Phi_T^{(2)}.
    ///
    /// `total_mass` targets 1 exactly; `tail_mass` is the mass outside
    /// epsilon K and must vanish as T grows. `hertz_bound` is the analytic
    /// surface-area tail ceiling, scaled to the dilation TK.
    pub fn fejer_mass(&self, t_scale: f64, epsilon: f64) -> FejerMass {
        assert!(t_scale > 0.0 && epsilon > 0.0);
        let (total, inside) = match self.kind {
            BodyKind::Cube | BodyKind::Rectangle => {
                let mut total = 1.0;
                let mut inside = 1.0;
                for &h in &self.half_widths {
                    // per-axis mass reduces to (2/pi) int_0^U sin^2 z / z^2 dz
                    // with U = h T L for the window |l| <= L; epsilon K per
                    // axis is |l| <= epsilon h
                    let u_inside = h * t_scale * (epsilon * h);
                    total *= axis_fejer_mass(f64::INFINITY);
                    inside *= axis_fejer_mass(u_inside);
                }
                (total, inside)
            }
            BodyKind::Ball => {
                let d = self.dimension;
                // radial variable u = r T / 2; epsilon K is the ball of
                // radius epsilon / 2, so the cutoff is u = epsilon T / 4
                let u_eps = epsilon * t_scale / 4.0;
                (ball_fejer_mass(d, f64::INFINITY), ball_fejer_mass(d, u_eps))
            }
        };
        let tail = (total - inside).max(0.0);
        let bound = self.hertz_tail_bound(t_scale, epsilon);
        FejerMass {
            total_mass: total,
            tail_mass: tail,
            hertz_bound: bound,
        }
    }

    /// Surface-area tail bound for the Fejer mass outside epsilon K:
    /// (2 pi)^{d-1} (8 / r) * surface(TK) / (int_0^pi sin^d z dz)
    /// normalized by (2 pi)^d |K| T^d, with r the inradius of epsilon K.
    /// The (2 pi)^{d-1} factor converts the classical surface-area
    /// inequality to the unnormalized Fourier convention used here; direct
    /// quadrature of the ball tail confirms it is needed for d >= 2.
    pub fn hertz_tail_bound(&self, t_scale: f64, epsilon: f64) -> f64 {
        let d = self.dimension as f64;
        let r = epsilon * self.inradius();
        let sin_int = match self.dimension {
            1 => 2.0,
            2 => PI / 2.0,
            3 => 4.0 / 3.0,
            _ => unreachable!(),
        };
        let surf_tk = self.surface_area() * t_scale.powf(d - 1.0);
        8.0 / r * surf_tk / sin_int / (2.0 * PI * self.volume() * t_scale.powf(d))
    }
}

/// Result of the approximate-identity mass check.
#[derive(Debug, Clone, Serialize)]
pub struct FejerMass {
    pub total_mass: f64,
    pub tail_mass: f64,
    pub hertz_bound: f64,
}

/// Table of C_p(K) values with error bounds.
#[derive(Debug, Clone, Serialize)]
pub struct KernelNormTable {
    pub body: ConvexBody,
    pub entries: Vec<KernelNormEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelNormEntry {
    pub p: f64,
    pub c_p: f64,
    pub tail_error_bound: f64,
}

impl KernelNormTable {
    pub fn build(body: &ConvexBody, ps: &[f64], tolerance: f64) -> Result<Self, DomainError> {
        let entries = ps
            .iter()
            .map(|&p| {
                body.kernel_norm(p, tolerance).map(|(c, e)| KernelNormEntry {
                    p,
                    c_p: c,
                    tail_error_bound: e,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(KernelNormTable {
            body: body.clone(),
            entries,
        })
    }
}

/// J_{d/2}(x) / x^{d/2}, with the series limit at small argument.
fn bessel_ratio(d: usize, x: f64) -> f64 {
    let nu = d as f64 / 2.0;
    if x.abs() < 1e-3 {
        // J_nu(x)/x^nu = (1/(2^nu Gamma(nu+1))) (1 - x^2/(4(nu+1)) + x^4/(32(nu+1)(nu+2)))
        let lead = 1.0 / (2.0f64.powf(nu) * gamma(nu + 1.0));
        let x2 = x * x;
        lead * (1.0 - x2 / (4.0 * (nu + 1.0)) + x2 * x2 / (32.0 * (nu + 1.0) * (nu + 2.0)))
    } else {
        bessel::j_half_order(d, x) / x.powf(nu)
    }
}

/// Mean of |sin z|^p over a period.
fn sin_power_mean(p: f64) -> f64 {
    gamma((p + 1.0) / 2.0) / (PI.sqrt() * gamma(p / 2.0 + 1.0))
}

/// I_p = int_R |sin z / z|^p dz, by panel quadrature on [0, R] plus an
/// averaged analytic tail (the envelope is |z|^{-p} beyond R).
fn sinc_power_integral(p: f64, tol: f64) -> (f64, f64) {
    debug_assert!(p > 1.0);
    let m = sin_power_mean(p);
    // oscillatory tail remainder after averaging is O(R^{-p}); pick R so it
    // is below tol, capped for very small p-1 where R would explode
    let r_target = (4.0 * PI * p / tol).powf(1.0 / p);
    let r_panels = ((r_target / PI).ceil() as usize).clamp(64, 2_000_000);
    let r = r_panels as f64 * PI;
    let f = |z: f64| {
        if z == 0.0 {
            1.0
        } else {
            (z.sin() / z).abs().powf(p)
        }
    };
    let (body, quad_err) = quad::composite(&f, 0.0, r, r_panels);
    let tail = m * r.powf(1.0 - p) / (p - 1.0);
    let tail_err = 4.0 * PI * p * r.powf(-p);
    (2.0 * (body + tail), 2.0 * (quad_err + tail_err))
}

/// int_0^inf rho^{d-1} |J_{d/2}(rho)/rho^{d/2}|^p drho with averaged tail.
fn ball_radial_integral(d: usize, p: f64, tol: f64) -> (f64, f64) {
    let dd = d as f64;
    let decay = p * (dd + 1.0) / 2.0 - dd; // tail exponent minus one
    debug_assert!(decay > 0.0);
    let m = sin_power_mean(p) * (2.0 / PI).powf(p / 2.0);
    let r_target = (4.0 * PI * p / tol).powf(1.0 / (decay + 1.0));
    let r_panels = ((r_target / PI).ceil() as usize * 2).clamp(128, 2_000_000);
    let r = r_panels as f64 * PI / 2.0;
    let f = |rho: f64| rho.powf(dd - 1.0) * bessel_ratio(d, rho).abs().powf(p);
    let (body, quad_err) = quad::composite(&f, 0.0, r, r_panels);
    // |J_{d/2}(rho)|^p averages to m rho^{-p/2}
    let tail = m * r.powf(-decay) / decay;
    let tail_err = 4.0 * PI * p * r.powf(-decay - 1.0) + 0.1 * tail / r;
    (body + tail, quad_err + tail_err)
}

/// (2/pi) int_0^U sin^2 z / z^2 dz, numerically; the U = infinity case is
/// quadrature to a far cutoff plus the averaged 1/(pi R) tail so that the
/// unit total mass is an outcome, not an assumption.
fn axis_fejer_mass(u: f64) -> f64 {
    if u.is_infinite() {
        let r = 20_000.0;
        return axis_fejer_mass(r) + 1.0 / (PI * r);
    }
    if u <= 0.0 {
        return 0.0;
    }
    let f = |z: f64| {
        if z == 0.0 {
            1.0
        } else {
            (z.sin() / z).powi(2)
        }
    };
    let panels = ((u / (PI / 2.0)).ceil() as usize).max(16);
    let (v, _) = quad::composite(&f, 0.0, u, panels);
    2.0 / PI * v
}

/// d * int_0^U J_{d/2}(u)^2 / u du; U = infinity gives 1.
fn ball_fejer_mass(d: usize, u: f64) -> f64 {
    if u.is_infinite() {
        // quadrature to a far cutoff plus the averaged 1/(pi u) tail
        let r = 20_000.0;
        let body = ball_fejer_mass_to(d, r);
        return body + d as f64 / (PI * r);
    }
    ball_fejer_mass_to(d, u)
}

fn ball_fejer_mass_to(d: usize, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let nu = d as f64 / 2.0;
    let f = |x: f64| {
        if x == 0.0 {
            0.0
        } else {
            // J_nu(x)^2 / x = (J_nu(x)/x^nu)^2 x^{2 nu - 1}
            bessel_ratio(d, x).powi(2) * x.powf(2.0 * nu - 1.0)
        }
    };
    let panels = ((u / (PI / 2.0)).ceil() as usize).max(16);
    let (v, _) = quad::composite(&f, 0.0, u, panels);
    d as f64 * v
}
