//! Parametric spectral-density families with analytic L_p membership
//! rules, their Fourier covariance pairs, the second-order output density
//! of the Hermite-squared field, and homogeneous weight functions.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use thiserror::Error;

use crate::domains::{BodyKind, ConvexBody};
use crate::quad;

#[derive(Debug, Error, PartialEq)]
pub enum SpectraError {
    #[error("density is not in L_{p}: {rule}")]
    NotInLp { p: f64, rule: String },
    #[error("unsupported combination: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum DensityFamily {
    /// c (1 + |lambda|^2)^{-alpha}
    CauchyType { alpha: f64, amplitude: f64 },
    /// c exp(-|lambda|^2 / (2 s^2))
    GaussianType { scale: f64, amplitude: f64 },
    /// c on the box |lambda|_inf <= cutoff, zero outside
    BoundedCompact { cutoff: f64, amplitude: f64 },
}

/// A second-order (or Gaussian base) spectral density on R^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    #[serde(flatten)]
    pub family: DensityFamily,
    pub dimension: usize,
}

/// Outcome of an analytic L_p membership test.
#[derive(Debug, Clone, Serialize)]
pub struct LpCertificate {
    pub member: bool,
    pub rule: String,
}

impl SpectralDensity {
    pub fn cauchy(dimension: usize, alpha: f64, amplitude: f64) -> Self {
        assert!(alpha > 0.0 && amplitude >= 0.0);
        SpectralDensity {
            family: DensityFamily::CauchyType { alpha, amplitude },
            dimension,
        }
    }

    pub fn gaussian(dimension: usize, scale: f64, amplitude: f64) -> Self {
        assert!(scale > 0.0 && amplitude >= 0.0);
        SpectralDensity {
            family: DensityFamily::GaussianType { scale, amplitude },
            dimension,
        }
    }

    pub fn bounded_compact(dimension: usize, cutoff: f64, amplitude: f64) -> Self {
        assert!(cutoff > 0.0 && amplitude >= 0.0);
        SpectralDensity {
            family: DensityFamily::BoundedCompact { cutoff, amplitude },
            dimension,
        }
    }

    /// Pointwise value f(lambda).
    pub fn evaluate(&self, lambda: &[f64]) -> f64 {
        assert_eq!(lambda.len(), self.dimension);
        match self.family {
            DensityFamily::CauchyType { alpha, amplitude } => {
                let r2: f64 = lambda.iter().map(|x| x * x).sum();
                amplitude * (1.0 + r2).powf(-alpha)
            }
            DensityFamily::GaussianType { scale, amplitude } => {
                let r2: f64 = lambda.iter().map(|x| x * x).sum();
                amplitude * (-r2 / (2.0 * scale * scale)).exp()
            }
            DensityFamily::BoundedCompact { cutoff, amplitude } => {
                if lambda.iter().all(|x| x.abs() <= cutoff) {
                    amplitude
                } else {
                    0.0
                }
            }
        }
    }

    pub fn value_at_zero(&self) -> f64 {
        self.evaluate(&vec![0.0; self.dimension])
    }

    /// Per-axis frequency cutoff Lambda for truncated spectral sums: the
    /// mass outside [-Lambda, Lambda]^d is negligible (compact support),
    /// super-exponentially small (Gaussian), or below about 1e-3 of the
    /// total for the polynomial Cauchy tail.
    pub fn truncation_cutoff(&self) -> f64 {
        match self.family {
            DensityFamily::BoundedCompact { cutoff, .. } => cutoff,
            DensityFamily::GaussianType { scale, .. } => 8.0 * scale,
            DensityFamily::CauchyType { alpha, .. } => {
                // 1-d tail of (1+l^2)^(-alpha) ~ L^(1-2a)/(2a-1); solve for
                // a relative tail of 1e-3 and clamp to a workable range
                let a = alpha.max(0.51);
                (1.0e3 / (2.0 * a - 1.0))
                    .powf(1.0 / (2.0 * a - 1.0))
                    .clamp(10.0, 1.0e3)
            }
        }
    }

    /// Analytic L_p membership: power-law rule for the Cauchy family,
    /// always true for the Gaussian and compactly supported families.
    pub fn lp_membership(&self, p: f64) -> LpCertificate {
        assert!(p >= 1.0);
        match self.family {
            DensityFamily::CauchyType { alpha, .. } => {
                let member = 2.0 * alpha * p > self.dimension as f64;
                LpCertificate {
                    member,
                    rule: format!(
                        "power-law decay: (1+|l|^2)^(-alpha p) integrable iff 2 alpha p > d; \
                         2*{alpha}*{p} {} {}",
                        if member { ">" } else { "<=" },
                        self.dimension
                    ),
                }
            }
            DensityFamily::GaussianType { .. } => LpCertificate {
                member: true,
                rule: "gaussian decay dominates every polynomial: in L_p for all p".into(),
            },
            DensityFamily::BoundedCompact { .. } => LpCertificate {
                member: true,
                rule: "bounded with compact support: in L_p for all p".into(),
            },
        }
    }

    fn require_lp(&self, p: f64) -> Result<(), SpectraError> {
        let cert = self.lp_membership(p);
        if cert.member {
            Ok(())
        } else {
            Err(SpectraError::NotInLp { p, rule: cert.rule })
        }
    }

    /// Covariance c_2(tau) = int e^{i lambda tau} f(lambda) dlambda.
    ///
    /// Closed forms for the Gaussian and compact families in any
    /// dimension, for the Cauchy family at alpha = 1, d = 1; other Cauchy
    /// parameters in d = 1 fall back to tail-bounded quadrature.
    pub fn covariance(&self, tau: &[f64]) -> Result<f64, SpectraError> {
        assert_eq!(tau.len(), self.dimension);
        self.require_lp(1.0)?;
        match self.family {
            DensityFamily::GaussianType { scale, amplitude } => {
                let r2: f64 = tau.iter().map(|x| x * x).sum();
                Ok(amplitude
                    * (scale * (2.0 * PI).sqrt()).powi(self.dimension as i32)
                    * (-scale * scale * r2 / 2.0).exp())
            }
            DensityFamily::BoundedCompact { cutoff, amplitude } => {
                let mut v = amplitude;
                for &t in tau {
                    v *= if t == 0.0 {
                        2.0 * cutoff
                    } else {
                        2.0 * (cutoff * t).sin() / t
                    };
                }
                Ok(v)
            }
            DensityFamily::CauchyType { alpha, amplitude } => {
                if self.dimension != 1 {
                    return Err(SpectraError::Unsupported(
                        "cauchy_type covariance implemented for d = 1 only".into(),
                    ));
                }
                let t = tau[0].abs();
                if (alpha - 1.0).abs() < 1e-12 {
                    // Fourier pair of the Cauchy density
                    return Ok(amplitude * PI * (-t).exp());
                }
                // 2 c int_0^R (1+l^2)^{-alpha} cos(l t) dl + tail
                let r = (1e10f64).powf(1.0 / (2.0 * alpha)).min(1e6).max(50.0);
                let f = |l: f64| (1.0 + l * l).powf(-alpha) * (l * t).cos();
                let (v, _) = quad::adaptive(&f, 0.0, r, 1e-11, 40);
                Ok(2.0 * amplitude * v)
            }
        }
    }

    /// int f^2, closed form per family.
    pub fn l2_norm_squared(&self) -> Result<f64, SpectraError> {
        self.require_lp(2.0)?;
        let d = self.dimension as f64;
        Ok(match self.family {
            DensityFamily::GaussianType { scale, amplitude } => {
                amplitude * amplitude * (scale * PI.sqrt()).powi(self.dimension as i32)
            }
            DensityFamily::BoundedCompact { cutoff, amplitude } => {
                amplitude * amplitude * (2.0 * cutoff).powi(self.dimension as i32)
            }
            DensityFamily::CauchyType { alpha, amplitude } => {
                // int (1+|l|^2)^{-beta} dl = pi^{d/2} Gamma(beta - d/2)/Gamma(beta)
                let beta = 2.0 * alpha;
                amplitude * amplitude * PI.powf(d / 2.0) * gamma(beta - d / 2.0) / gamma(beta)
            }
        })
    }

    /// Second-order output density of the Hermite-squared field:
    /// the autoconvolution g_2(lambda) = int f(u) f(lambda + u) du.
    pub fn h2_output_density(&self, lambda: &[f64]) -> Result<f64, SpectraError> {
        assert_eq!(lambda.len(), self.dimension);
        self.require_lp(2.0)?;
        match self.family {
            DensityFamily::GaussianType { scale, amplitude } => {
                let r2: f64 = lambda.iter().map(|x| x * x).sum();
                Ok(amplitude * amplitude * (scale * PI.sqrt()).powi(self.dimension as i32)
                    * (-r2 / (4.0 * scale * scale)).exp())
            }
            DensityFamily::BoundedCompact { cutoff, amplitude } => {
                // per-axis triangular overlap of two boxes
                let mut v = amplitude * amplitude;
                for &l in lambda {
                    v *= (2.0 * cutoff - l.abs()).max(0.0);
                }
                Ok(v)
            }
            DensityFamily::CauchyType { alpha, amplitude } => {
                if self.dimension != 1 {
                    return Err(SpectraError::Unsupported(
                        "cauchy_type autoconvolution implemented for d = 1 only".into(),
                    ));
                }
                let l0 = lambda[0];
                let f = |u: f64| {
                    (1.0 + u * u).powf(-alpha) * (1.0 + (l0 + u) * (l0 + u)).powf(-alpha)
                };
                let r = 1e5f64;
                let (v, _) = quad::adaptive(&f, -r, r, 1e-11, 44);
                Ok(amplitude * amplitude * v)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "weight_family")]
pub enum WeightFamily {
    /// |t|^nu (euclidean norm), degree nu
    PowerNorm { nu: f64 },
    /// |t_1 + ... + t_d|^nu, degree nu
    PowerSum { nu: f64 },
    /// (|t_1|^gamma + ... + |t_d|^gamma)^nu, degree nu * gamma
    PowerGammaSum { nu: f64, gamma: f64 },
    /// arithmetic mean of |t_1|, ..., |t_d|, degree 1
    AverageModuli,
}

/// A positively homogeneous weight w(a t) = a^beta w(t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    #[serde(flatten)]
    pub family: WeightFamily,
    pub dimension: usize,
}

impl WeightFunction {
    pub fn power_norm(dimension: usize, nu: f64) -> Self {
        WeightFunction {
            family: WeightFamily::PowerNorm { nu },
            dimension,
        }
    }

    pub fn power_sum(dimension: usize, nu: f64) -> Self {
        WeightFunction {
            family: WeightFamily::PowerSum { nu },
            dimension,
        }
    }

    pub fn power_gamma_sum(dimension: usize, nu: f64, gamma: f64) -> Self {
        WeightFunction {
            family: WeightFamily::PowerGammaSum { nu, gamma },
            dimension,
        }
    }

    pub fn average_moduli(dimension: usize) -> Self {
        WeightFunction {
            family: WeightFamily::AverageModuli,
            dimension,
        }
    }

    /// Homogeneity degree beta.
    pub fn degree(&self) -> f64 {
        match self.family {
            WeightFamily::PowerNorm { nu } | WeightFamily::PowerSum { nu } => nu,
            WeightFamily::PowerGammaSum { nu, gamma } => nu * gamma,
            WeightFamily::AverageModuli => 1.0,
        }
    }

    pub fn evaluate(&self, t: &[f64]) -> f64 {
        assert_eq!(t.len(), self.dimension);
        match self.family {
            WeightFamily::PowerNorm { nu } => {
                let r = t.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nu == 0.0 {
                    1.0
                } else {
                    r.powf(nu)
                }
            }
            WeightFamily::PowerSum { nu } => {
                let s: f64 = t.iter().sum();
                if nu == 0.0 {
                    1.0
                } else {
                    s.abs().powf(nu)
                }
            }
            WeightFamily::PowerGammaSum { nu, gamma } => {
                let s: f64 = t.iter().map(|x| x.abs().powf(gamma)).sum();
                s.powf(nu)
            }
            WeightFamily::AverageModuli => {
                t.iter().map(|x| x.abs()).sum::<f64>() / self.dimension as f64
            }
        }
    }

    /// w_T(lambda) = int_{TK} w(t) e^{i t lambda} dt, computed through the
    /// scaling identity w_T(lambda) = T^{d + beta} w_1(lambda T).
    pub fn weight_fourier(
        &self,
        body: &ConvexBody,
        t_scale: f64,
        lambda: &[f64],
    ) -> Result<Complex64, SpectraError> {
        assert_eq!(lambda.len(), self.dimension);
        assert_eq!(body.dimension, self.dimension);
        let beta = self.degree();
        let scaled: Vec<f64> = lambda.iter().map(|l| l * t_scale).collect();
        let w1 = self.base_fourier(body, &scaled)?;
        Ok(w1 * t_scale.powf(self.dimension as f64 + beta))
    }

    /// w_1(lambda) over the unit body K.
    fn base_fourier(&self, body: &ConvexBody, lambda: &[f64]) -> Result<Complex64, SpectraError> {
        if body.kind == BodyKind::Ball {
            return Err(SpectraError::Unsupported(
                "weight Fourier transform over a ball window is not implemented".into(),
            ));
        }
        // closed form: t^nu on [0, 1] for integer nu in 0..=2
        if self.dimension == 1 && body.corner_at_origin && (body.half_widths[0] - 0.5).abs() < 1e-14
        {
            if let WeightFamily::PowerNorm { nu } | WeightFamily::PowerSum { nu } = self.family {
                if nu.fract() == 0.0 && (0.0..=2.0).contains(&nu) {
                    return Ok(moment_fourier_unit_interval(nu as u32, lambda[0]));
                }
            }
        }
        Ok(self.quadrature_fourier(body, lambda))
    }

    fn quadrature_fourier(&self, body: &ConvexBody, lambda: &[f64]) -> Complex64 {
        let boxes = body.bounding_box(1.0);
        let re = tensor_integrate(&boxes, &|t| {
            self.evaluate(t) * dot(t, lambda).cos()
        });
        let im = tensor_integrate(&boxes, &|t| {
            self.evaluate(t) * dot(t, lambda).sin()
        });
        Complex64::new(re, im)
    }

    /// W^2(T) = int_{TK} w^2(t) dt = T^{d + 2 beta} W^2(1).
    pub fn weight_l2(&self, body: &ConvexBody, t_scale: f64) -> Result<f64, SpectraError> {
        assert!(t_scale > 0.0);
        let w1 = self.base_l2(body)?;
        Ok(t_scale.powf(self.dimension as f64 + 2.0 * self.degree()) * w1)
    }

    /// W^2(T) by direct quadrature over the scaled window, bypassing the
    /// scaling identity so it can serve as its independent check.
    pub fn weight_l2_quadrature(
        &self,
        body: &ConvexBody,
        t_scale: f64,
    ) -> Result<f64, SpectraError> {
        assert_eq!(body.dimension, self.dimension);
        if body.kind == BodyKind::Ball {
            return Err(SpectraError::Unsupported(
                "weight L2 norm over a ball window is not implemented".into(),
            ));
        }
        let boxes = body.bounding_box(t_scale);
        Ok(tensor_integrate(&boxes, &|t| self.evaluate(t).powi(2)))
    }

    /// W^2(1) = int_K w^2, closed forms where easy, else quadrature.
    pub fn base_l2(&self, body: &ConvexBody) -> Result<f64, SpectraError> {
        assert_eq!(body.dimension, self.dimension);
        if body.kind == BodyKind::Ball {
            return Err(SpectraError::Unsupported(
                "weight L2 norm over a ball window is not implemented".into(),
            ));
        }
        if self.dimension == 1 && body.corner_at_origin && (body.half_widths[0] - 0.5).abs() < 1e-14
        {
            if let WeightFamily::PowerNorm { nu } | WeightFamily::PowerSum { nu } = self.family {
                // int_0^1 t^{2 nu} dt
                return Ok(1.0 / (2.0 * nu + 1.0));
            }
        }
        let boxes = body.bounding_box(1.0);
        let v = tensor_integrate(&boxes, &|t| self.evaluate(t).powi(2));
        Ok(v)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// int_0^1 t^nu e^{i t l} dt for nu in {0, 1, 2}.
fn moment_fourier_unit_interval(nu: u32, l: f64) -> Complex64 {
    if l.abs() < 1e-8 {
        // series around l = 0: int t^nu (1 + i t l - t^2 l^2 / 2) dt
        let n = nu as f64;
        return Complex64::new(
            1.0 / (n + 1.0) - l * l / (2.0 * (n + 3.0)),
            l / (n + 2.0),
        );
    }
    let il = Complex64::new(0.0, l);
    let e = Complex64::from_polar(1.0, l);
    match nu {
        0 => (e - 1.0) / il,
        1 => (e * (il - 1.0) + 1.0) / (il * il),
        2 => (e * (il * il - 2.0 * il + 2.0) - 2.0) / (il * il * il),
        _ => unreachable!(),
    }
}

/// Tensor-product quadrature over an axis-aligned box, 24 GK15 panels per
/// axis. Adequate for the moderate frequencies exercised by the weighted
/// path; d <= 3 by construction.
fn tensor_integrate(boxes: &[(f64, f64)], f: &dyn Fn(&[f64]) -> f64) -> f64 {
    fn rec(
        boxes: &[(f64, f64)],
        point: &mut Vec<f64>,
        f: &dyn Fn(&[f64]) -> f64,
    ) -> f64 {
        if boxes.is_empty() {
            return f(point);
        }
        let (a, b) = boxes[0];
        let rest = &boxes[1..];
        let g = |x: f64| {
            let mut p = point.clone();
            p.push(x);
            rec(rest, &mut p, f)
        };
        quad::composite(&g, a, b, 24).0
    }
    rec(boxes, &mut Vec::new(), f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};

    fn std_gaussian(d: usize) -> SpectralDensity {
        SpectralDensity::gaussian(d, 1.0, 1.0 / (2.0 * PI).sqrt())
    }

    #[test]
    fn evaluate_examples() {
        let f = SpectralDensity::cauchy(1, 1.0, 1.0);
        assert_abs_diff_eq!(f.evaluate(&[0.0]), 1.0);
        let g = std_gaussian(1);
        assert_abs_diff_eq!(g.evaluate(&[0.0]), 1.0 / (2.0 * PI).sqrt());
        let b = SpectralDensity::bounded_compact(1, 1.0, 0.5);
        assert_abs_diff_eq!(b.evaluate(&[2.0]), 0.0);
        assert_abs_diff_eq!(b.evaluate(&[0.9]), 0.5);
    }

    #[test]
    fn lp_membership_rules() {
        assert!(SpectralDensity::cauchy(1, 1.0, 1.0).lp_membership(2.0).member);
        assert!(!SpectralDensity::cauchy(1, 0.2, 1.0).lp_membership(2.0).member);
        assert!(std_gaussian(2).lp_membership(7.5).member);
        assert!(SpectralDensity::bounded_compact(3, 2.0, 1.0).lp_membership(1.0).member);
    }

    #[test]
    fn covariance_total_mass() {
        // tau = 0 gives int f
        let g = std_gaussian(1);
        assert_abs_diff_eq!(g.covariance(&[0.0]).unwrap(), 1.0, epsilon = 1e-12);
        let c = SpectralDensity::cauchy(1, 1.0, 1.0 / PI);
        assert_abs_diff_eq!(c.covariance(&[0.0]).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cauchy_covariance_quadrature_matches_closed_form() {
        // quadrature branch (alpha != 1) cross-checked at alpha = 1 via a
        // slightly perturbed exponent against the exact pi e^{-|tau|}
        let c = SpectralDensity::cauchy(1, 1.0 + 1e-9, 1.0);
        for tau in [0.0, 0.5, 2.0] {
            assert_relative_eq!(
                c.covariance(&[tau]).unwrap(),
                PI * (-tau).exp(),
                max_relative = 1e-5
            );
        }
    }

    #[test]
    fn covariance_even() {
        let g = std_gaussian(2);
        let v1 = g.covariance(&[0.4, -1.2]).unwrap();
        let v2 = g.covariance(&[-0.4, 1.2]).unwrap();
        assert_abs_diff_eq!(v1, v2, epsilon = 1e-15);
    }

    #[test]
    fn h2_density_examples() {
        let g = std_gaussian(1);
        // quadrature oracle for the autoconvolution at 0
        let alpha = |u: f64| g.evaluate(&[u]) * g.evaluate(&[u]);
        let (oracle, _) = quad::adaptive(&alpha, -40.0, 40.0, 1e-12, 40);
        let v = g.h2_output_density(&[0.0]).unwrap();
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-10);
        assert_abs_diff_eq!(v, 1.0 / (2.0 * PI.sqrt()), epsilon = 1e-12);

        let narrow = SpectralDensity::cauchy(1, 0.2, 1.0);
        assert!(matches!(
            narrow.h2_output_density(&[1.0]),
            Err(SpectraError::NotInLp { .. })
        ));
    }

    #[test]
    fn h2_density_matches_l2_at_zero() {
        for f in [
            std_gaussian(1),
            SpectralDensity::bounded_compact(1, 1.0, 0.5),
            SpectralDensity::cauchy(1, 1.0, 1.0 / PI),
            std_gaussian(2),
        ] {
            let zero = vec![0.0; f.dimension];
            let g0 = f.h2_output_density(&zero);
            let l2 = f.l2_norm_squared();
            match (g0, l2) {
                (Ok(a), Ok(b)) => assert_relative_eq!(a, b, max_relative = 1e-8),
                (Err(SpectraError::Unsupported(_)), _) => {}
                other => panic!("unexpected: {other:?}"),
            }
        }
    }

    #[test]
    fn l2_norm_examples() {
        let b = SpectralDensity::bounded_compact(1, 1.0, 0.5);
        assert_abs_diff_eq!(b.l2_norm_squared().unwrap(), 0.5, epsilon = 1e-15);
        // scaling: double the amplitude, quadruple the norm
        let b2 = SpectralDensity::bounded_compact(1, 1.0, 1.0);
        assert_abs_diff_eq!(
            b2.l2_norm_squared().unwrap(),
            4.0 * b.l2_norm_squared().unwrap(),
            epsilon = 1e-15
        );
        // cauchy closed form vs quadrature oracle
        let c = SpectralDensity::cauchy(1, 1.0, 1.0);
        let (oracle, _) = quad::adaptive(&|l: f64| (1.0 + l * l).powi(-2), -1e4, 1e4, 1e-10, 48);
        assert_relative_eq!(c.l2_norm_squared().unwrap(), oracle, max_relative = 1e-7);
    }

    #[test]
    fn density_even_nonnegative_random_points() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let fams = [
            SpectralDensity::cauchy(2, 1.5, 0.7),
            std_gaussian(2),
            SpectralDensity::bounded_compact(2, 1.3, 0.2),
        ];
        for _ in 0..2000 {
            let l = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let neg = [-l[0], -l[1]];
            for f in &fams {
                let v = f.evaluate(&l);
                assert!(v >= 0.0);
                assert_abs_diff_eq!(v, f.evaluate(&neg), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn weight_homogeneity() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let ws = [
            WeightFunction::power_norm(2, 1.5),
            WeightFunction::power_sum(2, 2.0),
            WeightFunction::power_gamma_sum(2, 1.0, 2.0),
            WeightFunction::average_moduli(2),
        ];
        for _ in 0..1000 {
            let t = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let a: f64 = rng.gen_range(0.1..4.0);
            let at = [a * t[0], a * t[1]];
            for w in &ws {
                let lhs = w.evaluate(&at);
                let rhs = a.powf(w.degree()) * w.evaluate(&t);
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn example1_fourier_closed_form() {
        // nu = 0, K = [0, 1]: (e^{i l} - 1)/(i l)
        let w = WeightFunction::power_norm(1, 0.0);
        let body = ConvexBody::unit_box_at_origin(1);
        let l = 2.3;
        let got = w.weight_fourier(&body, 1.0, &[l]).unwrap();
        let il = Complex64::new(0.0, l);
        let want = (Complex64::from_polar(1.0, l) - 1.0) / il;
        assert_abs_diff_eq!(got.re, want.re, epsilon = 1e-12);
        assert_abs_diff_eq!(got.im, want.im, epsilon = 1e-12);
    }

    #[test]
    fn weight_fourier_at_zero_is_integral() {
        let w = WeightFunction::power_norm(1, 1.0);
        let body = ConvexBody::unit_box_at_origin(1);
        // int_{[0,2]} t dt = 2
        let got = w.weight_fourier(&body, 2.0, &[0.0]).unwrap();
        assert_abs_diff_eq!(got.re, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn weight_fourier_scaling_identity() {
        // w(t) = t on [0, 1], T = 2: w_T(l) = 2^{1+1} w_1(2 l)
        let w = WeightFunction::power_norm(1, 1.0);
        let body = ConvexBody::unit_box_at_origin(1);
        let l = 0.9;
        let lhs = w.weight_fourier(&body, 2.0, &[l]).unwrap();
        let rhs = w.weight_fourier(&body, 1.0, &[2.0 * l]).unwrap() * 4.0;
        assert_abs_diff_eq!(lhs.re, rhs.re, epsilon = 1e-10);
        assert_abs_diff_eq!(lhs.im, rhs.im, epsilon = 1e-10);
    }

    #[test]
    fn weight_l2_closed_forms() {
        let w = WeightFunction::power_norm(1, 1.0);
        let body = ConvexBody::unit_box_at_origin(1);
        for t in [1.0, 3.0, 7.5] {
            assert_relative_eq!(
                w.weight_l2(&body, t).unwrap(),
                t * t * t / 3.0,
                max_relative = 1e-12
            );
        }
        let flat = WeightFunction::power_norm(2, 0.0);
        let cube = ConvexBody::cube(2);
        assert_relative_eq!(
            flat.weight_l2(&cube, 5.0).unwrap(),
            25.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn weight_l2_scaling_quadrature_family() {
        // Example 3 with nu = 1, gamma = 2, d = 2 on the cube: ratio is T^{d+2beta}
        let w = WeightFunction::power_gamma_sum(2, 1.0, 2.0);
        let cube = ConvexBody::cube(2);
        let w1 = w.weight_l2(&cube, 1.0).unwrap();
        let w2 = w.weight_l2(&cube, 2.0).unwrap();
        assert_relative_eq!(w2 / w1, 2.0f64.powf(2.0 + 4.0), max_relative = 1e-9);
        // W^2(1) for (t1^2+t2^2)^2 on [-1/2,1/2]^2: int (x^2+y^2)^2 = 7/180
        assert_relative_eq!(w1, 7.0 / 180.0, max_relative = 1e-8);
    }

    #[test]
    fn covariance_gram_matrix_psd() {
        // positive semidefiniteness of the covariance on a small grid,
        // checked through diagonally loaded Cholesky
        for f in [
            std_gaussian(1),
            SpectralDensity::bounded_compact(1, 1.0, 0.5),
            SpectralDensity::cauchy(1, 1.0, 1.0 / PI),
        ] {
            let pts: Vec<f64> = (0..12).map(|i| i as f64 * 0.45).collect();
            let n = pts.len();
            let mut g = vec![vec![0.0; n]; n];
            let mut trace = 0.0;
            for i in 0..n {
                for j in 0..n {
                    g[i][j] = f.covariance(&[pts[i] - pts[j]]).unwrap();
                }
                trace += g[i][i];
            }
            let load = 1e-10 * trace;
            assert!(cholesky_ok(&mut g, load), "not PSD for {f:?}");
        }
    }

    fn cholesky_ok(g: &mut [Vec<f64>], load: f64) -> bool {
        let n = g.len();
        for i in 0..n {
            g[i][i] += load;
        }
        for k in 0..n {
            if g[k][k] <= 0.0 {
                return false;
            }
            let pivot = g[k][k].sqrt();
            for i in (k + 1)..n {
                g[i][k] /= pivot;
            }
            for i in (k + 1)..n {
                for j in (k + 1)..=i {
                    g[i][j] -= g[i][k] * g[j][k];
                }
            }
        }
        true
    }
}
