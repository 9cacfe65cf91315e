//! Empirical cumulant estimation via Fisher k-statistics with jackknife
//! standard errors, and the theoretical variance / cumulant-bound
//! integrals driving the limit theorems.

use crate::domains::{BodyKind, ConvexBody, DomainError};
use crate::quad;
use crate::spectra::{DensityFamily, SpectraError, SpectralDensity};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CumulantError {
    #[error("cumulant order {0} outside 2..=4")]
    Order(u32),
    #[error("need more than {need} samples for order {order}, got {got}")]
    TooFewSamples { order: u32, need: usize, got: usize },
    #[error("(k={k}, p1={p1}) inadmissible: requires p1 > {p_star} and p1 >= k/(k-1) = {kmin}")]
    Inadmissible {
        k: u32,
        p1: f64,
        p_star: f64,
        kmin: f64,
    },
    #[error("kernel property asserted for rectangles only (got {0:?})")]
    KernelScope(BodyKind),
    #[error("high-order kernel quadrature supports k in {{2, 3}} at d = 1, got k={k}, d={d}")]
    KernelSize { k: u32, d: usize },
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    THalfD,
    WT,
}

/// Empirical cumulant of one normalized-functional sample.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CumulantReport {
    pub order: u32,
    pub estimate: f64,
    pub standard_error: f64,
    pub n: usize,
    pub normalization: Normalization,
}

/// Central power sums of (x - mean) with deterministic pairwise summation.
fn centered_power_sums(samples: &[f64]) -> (f64, [f64; 4]) {
    let n = samples.len() as f64;
    let mean = quad::pairwise_sum(samples) / n;
    let mut sums = [0.0; 4];
    for r in 1..=4 {
        sums[r - 1] = quad::pairwise_sum_by(samples, |&x| (x - mean).powi(r as i32));
    }
    (mean, sums)
}

/// Fisher k-statistic from raw power sums p_r = sum x^r of m samples.
fn k_stat_from_sums(order: u32, p: [f64; 4], m: usize) -> f64 {
    let n = m as f64;
    let mean = p[0] / n;
    // central moments from raw moments
    let m2 = p[1] / n - mean * mean;
    let m3 = p[2] / n - 3.0 * mean * p[1] / n + 2.0 * mean.powi(3);
    let m4 = p[3] / n - 4.0 * mean * p[2] / n + 6.0 * mean * mean * p[1] / n
        - 3.0 * mean.powi(4);
    match order {
        2 => n * m2 / (n - 1.0),
        3 => n * n * m3 / ((n - 1.0) * (n - 2.0)),
        4 => {
            n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2)
                / ((n - 1.0) * (n - 2.0) * (n - 3.0))
        }
        _ => unreachable!(),
    }
}

/// Unbiased k-statistic (Fisher) of order 2, 3 or 4 with a delete-1
/// jackknife standard error.
pub fn k_statistic(samples: &[f64], order: u32) -> Result<CumulantReport, CumulantError> {
    if !(2..=4).contains(&order) {
        return Err(CumulantError::Order(order));
    }
    let n = samples.len();
    let need = if order == 4 { 8 } else { order as usize + 1 };
    if n <= need {
        return Err(CumulantError::TooFewSamples {
            order,
            need,
            got: n,
        });
    }
    // center by the grand mean: k-statistics of order >= 2 are
    // translation invariant, and centered raw sums are well conditioned
    let (mean, _) = centered_power_sums(samples);
    let centered: Vec<f64> = samples.iter().map(|&x| x - mean).collect();
    let mut totals = [0.0; 4];
    for r in 1..=4usize {
        totals[r - 1] = quad::pairwise_sum_by(&centered, |&x| x.powi(r as i32));
    }
    let estimate = k_stat_from_sums(order, totals, n);

    // delete-1 jackknife via leave-one-out power sums
    let mut loo = Vec::with_capacity(n);
    for &x in &centered {
        let p = [
            totals[0] - x,
            totals[1] - x * x,
            totals[2] - x * x * x,
            totals[3] - x * x * x * x,
        ];
        loo.push(k_stat_from_sums(order, p, n - 1));
    }
    let loo_mean = quad::pairwise_sum(&loo) / n as f64;
    let ss = quad::pairwise_sum_by(&loo, |&v| (v - loo_mean).powi(2));
    let standard_error = ((n as f64 - 1.0) / n as f64 * ss).sqrt();

    Ok(CumulantReport {
        order,
        estimate,
        standard_error,
        n,
        normalization: Normalization::THalfD,
    })
}

/// Finite-T and limiting variance of S_T / T^{d/2}.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct VarianceLimits {
    /// (2 pi)^d |K| int Phi_T^(2) f2, by quadrature.
    pub finite_t: f64,
    /// (2 pi)^d |K| f2(0).
    pub limit: f64,
    /// Set when f2(0) = 0: the CLT variance degenerates.
    pub degenerate: bool,
}

/// Variance of the normalized base functional against the spectral
/// density f2: finite-T kernel-smoothed value and its T -> infinity limit.
///
/// Quadrature support: d = 1 for any density with a pointwise
/// evaluation; d >= 2 for separable densities (Gaussian, compact) on
/// cube/rectangle windows via per-axis factorization.
pub fn theoretical_variance(
    f2: &SpectralDensity,
    body: &ConvexBody,
    t_scale: f64,
) -> Result<VarianceLimits, CumulantError> {
    let d = body.dimension;
    let volume = body.volume();
    let limit = (2.0 * PI).powi(d as i32) * volume * f2.value_at_zero();
    let finite_t = match d {
        1 => {
            let half_width = body.half_widths[0];
            axis_variance_integral(t_scale, half_width, &|l| f2.evaluate(&[l]))
        }
        _ => match (body.kind, &f2.family) {
            (BodyKind::Cube | BodyKind::Rectangle, DensityFamily::GaussianType { .. })
            | (BodyKind::Cube | BodyKind::Rectangle, DensityFamily::BoundedCompact { .. }) => {
                // separable density on a product window: the integral
                // factorizes into per-axis 1-d integrals
                let mut product = 1.0;
                for axis in 0..d {
                    let marginal = axis_profile(f2, axis);
                    product *=
                        axis_variance_integral(t_scale, body.half_widths[axis], &marginal);
                }
                product
            }
            _ => {
                return Err(CumulantError::Unsupported(format!(
                    "finite-T variance quadrature needs d = 1 or a separable density on a \
                     product window (d = {d}, {:?}, {:?})",
                    body.kind, f2.family
                )))
            }
        },
    };
    Ok(VarianceLimits {
        finite_t,
        limit,
        degenerate: f2.value_at_zero() == 0.0,
    })
}

/// 1-d factor of a separable density: the profile along one axis with the
/// amplitude folded into axis 0.
fn axis_profile(f2: &SpectralDensity, axis: usize) -> impl Fn(f64) -> f64 + '_ {
    let d = f2.dimension;
    move |l: f64| {
        let mut lambda = vec![0.0; d];
        lambda[axis] = l;
        let on_axis = f2.evaluate(&lambda);
        let at_zero = f2.value_at_zero();
        if axis == 0 {
            on_axis
        } else if at_zero != 0.0 {
            on_axis / at_zero
        } else {
            0.0
        }
    }
}

/// int |2 sin(a T l) / l|^2 g(l) dl / T for one axis, kernel half-width a.
///
/// Main lobe region by oscillation-resolving composite panels; beyond the
/// window the squared sine is replaced by its mean 1/2 and the smooth
/// remainder handled adaptively.
fn axis_variance_integral(t_scale: f64, half_width: f64, g: &dyn Fn(f64) -> f64) -> f64 {
    let a = half_width * t_scale;
    let window = 60.0f64.max(20.0 / a.max(1e-12));
    let integrand = |l: f64| {
        if l.abs() < 1e-12 {
            4.0 * a * a * g(0.0)
        } else {
            let s = 2.0 * (a * l).sin() / l;
            s * s * g(l)
        }
    };
    let panel = (PI / (2.0 * a)).min(0.25);
    let panels = ((2.0 * window / panel).ceil() as usize).max(64);
    let (main, _) = quad::composite(&integrand, -window, window, panels);
    // averaged tail: <4 sin^2> = 2
    let tail_integrand = |l: f64| 2.0 / (l * l) * g(l);
    let far = 1.0e5;
    let (tail_hi, _) = quad::adaptive(&tail_integrand, window, far, 1e-10, 40);
    let (tail_lo, _) = quad::adaptive(&tail_integrand, -far, -window, 1e-10, 40);
    (main + tail_hi + tail_lo) / t_scale
}

/// sigma^2 = 2 (2 pi)^d |K| int (f / r(0))^2 for the second Hermite
/// chaos of the standardized field X / sqrt(r(0)).
///
/// Cov(H_2, H_2) = 2 rho^2 with rho = r / r(0) the correlation, so the
/// output spectral density at zero is 2 int f^2 / r(0)^2 and the limit
/// carries both the factor 2 and the standardization. Amplitude scaling
/// of f cancels.
pub fn theoretical_h2_variance(
    f: &SpectralDensity,
    body: &ConvexBody,
) -> Result<f64, CumulantError> {
    let d = body.dimension as i32;
    let r0 = f.covariance(&vec![0.0; body.dimension])?;
    if !(r0 > 0.0) {
        return Err(CumulantError::Unsupported(format!(
            "degenerate field variance r(0) = {r0}"
        )));
    }
    Ok(2.0 * (2.0 * PI).powi(d) * body.volume() * f.l2_norm_squared()? / (r0 * r0))
}

/// Power-counting bound on the order-k cumulant of S_T / T^{d/2}:
/// C_{p1}(K)^k * f_norm * T^(k d (1 - 1/p1) - k d / 2), constant set to 1.
///
/// Only the decay exponent carries meaning; absolute levels are not
/// calibrated.
pub fn cumulant_bound(
    k: u32,
    body: &ConvexBody,
    p1: f64,
    f_norm: f64,
    t_scale: f64,
) -> Result<f64, CumulantError> {
    assert!(f_norm > 0.0 && t_scale > 0.0);
    let p_star = body.p_star();
    let kmin = k as f64 / (k as f64 - 1.0);
    if k < 2 || p1 <= p_star || p1 < kmin {
        return Err(CumulantError::Inadmissible {
            k,
            p1,
            p_star,
            kmin,
        });
    }
    let (c_p, _) = body.kernel_norm(p1, 1e-8)?;
    let exponent = cumulant_bound_exponent(k, body.dimension, p1);
    Ok(c_p.powi(k as i32) * f_norm * t_scale.powf(exponent))
}

/// The T-exponent k d (1 - 1/p1) - k d / 2; exactly 0 at p1 = 2.
pub fn cumulant_bound_exponent(k: u32, d: usize, p1: f64) -> f64 {
    let kd = k as f64 * d as f64;
    if p1 == 2.0 {
        return 0.0;
    }
    kd * (1.0 - 1.0 / p1) - kd / 2.0
}

/// Mass and epsilon-concentration of the order-k kernel Phi_T^(k).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct KernelPropertyReport {
    pub mass: f64,
    /// Mass inside the concentration window epsilon K^(k-1).
    pub concentration: f64,
    /// |mass at box L - mass at box 2L|, the truncation estimate.
    pub truncation_error: f64,
}

/// Numerical check of the kernel property of Phi_T^(k) for rectangles:
/// total mass (target 1 / |K|^(k-2) scaling folded in, i.e. target 1 for
/// the unit cube) and the share inside epsilon K^(k-1).
///
/// Supports k = 2 (1-d quadrature) and k = 3 at d = 1 (2-d lattice with
/// truncation estimated by doubling the box once).
pub fn kernel_property_highorder(
    body: &ConvexBody,
    t_scale: f64,
    k: u32,
    epsilon: f64,
) -> Result<KernelPropertyReport, CumulantError> {
    if !matches!(body.kind, BodyKind::Cube | BodyKind::Rectangle) {
        return Err(CumulantError::KernelScope(body.kind));
    }
    assert!(epsilon > 0.0 && t_scale > 0.0);
    match (k, body.dimension) {
        (2, _) => {
            let fm = body.fejer_mass(t_scale, epsilon);
            Ok(KernelPropertyReport {
                mass: fm.total_mass,
                concentration: fm.total_mass - fm.tail_mass,
                truncation_error: 0.0,
            })
        }
        (3, 1) => third_order_kernel_1d(body, t_scale, epsilon),
        _ => Err(CumulantError::KernelSize {
            k,
            d: body.dimension,
        }),
    }
}

fn third_order_kernel_1d(
    body: &ConvexBody,
    t_scale: f64,
    epsilon: f64,
) -> Result<KernelPropertyReport, CumulantError> {
    let h = body.half_widths[0];
    let volume = 2.0 * h;
    let norm = 1.0 / ((2.0 * PI).powi(2) * volume * volume * t_scale);
    let delta = |l: f64| {
        if l.abs() < 1e-12 {
            2.0 * h * t_scale
        } else {
            2.0 * (h * t_scale * l).sin() / l
        }
    };
    let half_window = epsilon * h;
    let integrate = |box_l: f64| {
        // tensor midpoint lattice resolving the oscillation scale
        let step = PI / (2.0 * h * t_scale) / 4.0;
        let cells = (2.0 * box_l / step).ceil() as usize;
        let step = 2.0 * box_l / cells as f64;
        let mut mass = 0.0;
        let mut inside = 0.0;
        let mut rows = Vec::with_capacity(cells);
        for i in 0..cells {
            let l1 = -box_l + (i as f64 + 0.5) * step;
            let mut row = 0.0;
            let mut row_inside = 0.0;
            for j in 0..cells {
                let l2 = -box_l + (j as f64 + 0.5) * step;
                let v = delta(l1) * delta(l2) * delta(-l1 - l2);
                row += v;
                if l1.abs() <= half_window && l2.abs() <= half_window {
                    row_inside += v;
                }
            }
            rows.push((row, row_inside));
        }
        mass += quad::pairwise_sum_by(&rows, |r| r.0);
        inside += quad::pairwise_sum_by(&rows, |r| r.1);
        (mass * step * step * norm, inside * step * step * norm)
    };
    let box_l = 12.0f64.max(4.0 / (h * t_scale));
    let (mass, inside) = integrate(box_l);
    let (mass2, _) = integrate(2.0 * box_l);
    Ok(KernelPropertyReport {
        mass: mass2,
        concentration: inside,
        truncation_error: (mass2 - mass).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let v: f64 = rng.gen();
        (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
    }

    #[test]
    fn constant_samples_have_zero_k2() {
        let samples = vec![3.25; 100];
        let r = k_statistic(&samples, 2).unwrap();
        assert!(r.estimate.abs() < 1e-12);
        assert!(r.standard_error.abs() < 1e-12);
    }

    #[test]
    fn exponential_cumulants() {
        // kappa_k = (k-1)! for Exp(1)
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        for (order, expect) in [(2, 1.0), (3, 2.0), (4, 6.0)] {
            let r = k_statistic(&samples, order).unwrap();
            assert!(
                (r.estimate - expect).abs() < 4.0 * r.standard_error,
                "order {order}: {} vs {expect} (se {})",
                r.estimate,
                r.standard_error
            );
        }
    }

    #[test]
    fn gaussian_higher_cumulants_vanish() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let samples: Vec<f64> = (0..100_000).map(|_| standard_normal(&mut rng)).collect();
        for order in [3, 4] {
            let r = k_statistic(&samples, order).unwrap();
            assert!(
                r.estimate.abs() < 4.0 * r.standard_error,
                "order {order}: {} (se {})",
                r.estimate,
                r.standard_error
            );
        }
    }

    #[test]
    fn k2_unbiased_on_synthetic_gaussian() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let v = 2.5f64;
        let reps = 200;
        let n = 500;
        let mut estimates = Vec::new();
        let mut se_sq = 0.0;
        for _ in 0..reps {
            let samples: Vec<f64> = (0..n)
                .map(|_| v.sqrt() * standard_normal(&mut rng))
                .collect();
            let r = k_statistic(&samples, 2).unwrap();
            estimates.push(r.estimate);
            se_sq += r.standard_error * r.standard_error;
        }
        let mean = quad::pairwise_sum(&estimates) / reps as f64;
        let combined_se = (se_sq / (reps * reps) as f64).sqrt();
        assert!(
            (mean - v).abs() < 3.0 * combined_se,
            "mean {mean} vs {v} (se {combined_se})"
        );
    }

    #[test]
    fn k_statistic_rejections() {
        let few = vec![1.0, 2.0, 3.0];
        assert!(matches!(
            k_statistic(&few, 5),
            Err(CumulantError::Order(5))
        ));
        assert!(matches!(
            k_statistic(&few, 4),
            Err(CumulantError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn variance_limit_constant_density() {
        // constant density over a wide compact support against the
        // unit-mass kernel: finite_T is close to (2 pi) c
        let f2 = SpectralDensity::bounded_compact(1, 200.0, 0.3);
        let body = ConvexBody::cube(1);
        let v = theoretical_variance(&f2, &body, 50.0).unwrap();
        assert_relative_eq!(v.limit, 2.0 * PI * 0.3, max_relative = 1e-12);
        assert_relative_eq!(v.finite_t, v.limit, max_relative = 1e-3);
    }

    #[test]
    fn variance_limit_cauchy_is_two() {
        let f2 = SpectralDensity::cauchy(1, 1.0, 1.0 / PI);
        let body = ConvexBody::cube(1);
        let v = theoretical_variance(&f2, &body, 8.0).unwrap();
        assert_relative_eq!(v.limit, 2.0, max_relative = 1e-12);
        assert!(!v.degenerate);
    }

    #[test]
    fn variance_monotone_approach() {
        for f2 in [
            SpectralDensity::gaussian(1, 1.0, 1.0),
            SpectralDensity::cauchy(1, 1.0, 1.0 / PI),
        ] {
            let body = ConvexBody::cube(1);
            let mut prev = f64::INFINITY;
            for t in [8.0, 16.0, 32.0] {
                let v = theoretical_variance(&f2, &body, t).unwrap();
                let gap = (v.finite_t - v.limit).abs();
                assert!(gap <= prev + 1e-6, "T={t}: gap {gap} prev {prev}");
                prev = gap;
            }
        }
    }

    #[test]
    fn separable_2d_variance_matches_product_oracle() {
        let f2 = SpectralDensity::gaussian(2, 1.0, 1.0);
        let body = ConvexBody::cube(2);
        let v2 = theoretical_variance(&f2, &body, 10.0).unwrap();
        // product of two 1-d runs with the same axis profile
        let f1 = SpectralDensity::gaussian(1, 1.0, 1.0);
        let v1 = theoretical_variance(&f1, &ConvexBody::cube(1), 10.0).unwrap();
        assert_relative_eq!(v2.finite_t, v1.finite_t * v1.finite_t, max_relative = 1e-8);
        assert_relative_eq!(v2.limit, v1.limit * v1.limit, max_relative = 1e-12);
    }

    #[test]
    fn h2_variance_examples() {
        let body = ConvexBody::cube(1);
        // gaussian scale s: sigma^2 = 2 sqrt(pi) / s, amplitude-free
        let f = SpectralDensity::gaussian(1, 2.0, 1.0);
        let sigma2 = theoretical_h2_variance(&f, &body).unwrap();
        assert_relative_eq!(sigma2, PI.sqrt(), max_relative = 1e-12);

        // flat density on [-c, c]: rho(tau) = sinc, sigma^2 = 2 pi / c
        let f = SpectralDensity::bounded_compact(1, 1.0, 0.5);
        assert_relative_eq!(
            theoretical_h2_variance(&f, &body).unwrap(),
            2.0 * PI,
            max_relative = 1e-12
        );

        // amplitude cancels after standardization
        let f2x = SpectralDensity::bounded_compact(1, 1.0, 1.0);
        assert_relative_eq!(
            theoretical_h2_variance(&f2x, &body).unwrap(),
            theoretical_h2_variance(&f, &body).unwrap(),
            max_relative = 1e-12
        );

        let bad = SpectralDensity::cauchy(1, 0.2, 1.0);
        assert!(theoretical_h2_variance(&bad, &body).is_err());
    }

    #[test]
    fn cumulant_bound_exponents() {
        assert_eq!(cumulant_bound_exponent(4, 1, 2.0), 0.0);
        assert_relative_eq!(
            cumulant_bound_exponent(4, 1, 4.0 / 3.0),
            -1.0,
            max_relative = 1e-12
        );
        assert_eq!(cumulant_bound_exponent(3, 2, 2.0), 0.0);

        // T-invariance at p1 = 2
        let body = ConvexBody::cube(1);
        let b1 = cumulant_bound(4, &body, 2.0, 1.0, 8.0).unwrap();
        let b2 = cumulant_bound(4, &body, 2.0, 1.0, 64.0).unwrap();
        assert_relative_eq!(b1, b2, max_relative = 1e-12);

        // bound at p1 = 4/3 decays like 1/T
        let b1 = cumulant_bound(4, &body, 4.0 / 3.0, 1.0, 8.0).unwrap();
        let b2 = cumulant_bound(4, &body, 4.0 / 3.0, 1.0, 16.0).unwrap();
        assert_relative_eq!(b1 / b2, 2.0, max_relative = 1e-12);

        // inadmissible below the ball integrability threshold
        let ball = ConvexBody::ball(3);
        assert!(cumulant_bound(4, &ball, 1.2, 1.0, 8.0).is_err());
    }

    #[test]
    fn kernel_property_second_order() {
        let body = ConvexBody::cube(1);
        // the window tail decays like 1/(epsilon T), so T must be well
        // past 1/epsilon before most of the mass sits inside epsilon K
        let r = kernel_property_highorder(&body, 40.0, 2, 0.5).unwrap();
        assert!((r.mass - 1.0).abs() < 1e-4, "mass {}", r.mass);
        assert!(r.concentration > 0.8 && r.concentration <= 1.0);
        let r10 = kernel_property_highorder(&body, 10.0, 2, 0.5).unwrap();
        assert!(r10.concentration < r.concentration);
    }

    #[test]
    fn kernel_property_third_order() {
        let body = ConvexBody::cube(1);
        let mut prev = 0.0;
        for t in [5.0, 10.0, 20.0] {
            let r = kernel_property_highorder(&body, t, 3, 0.5).unwrap();
            assert!(
                (r.mass - 1.0).abs() < 0.02 + r.truncation_error,
                "T={t}: mass {} (trunc {})",
                r.mass,
                r.truncation_error
            );
            assert!(
                r.concentration > prev,
                "T={t}: concentration {} prev {prev}",
                r.concentration
            );
            prev = r.concentration;
        }
        assert!(prev > 0.8);
    }

    #[test]
    fn kernel_property_scope() {
        assert!(matches!(
            kernel_property_highorder(&ConvexBody::ball(1), 5.0, 3, 0.5),
            Err(CumulantError::KernelScope(BodyKind::Ball))
        ));
        assert!(matches!(
            kernel_property_highorder(&ConvexBody::cube(2), 5.0, 3, 0.5),
            Err(CumulantError::KernelSize { k: 3, d: 2 })
        ));
    }
}
