//! End-to-end experiments: CLT convergence across a T ladder, Kolmogorov
//! distance and the Berry-Esseen-type cumulant bound, log-log rate fits,
//! the fourth-moment tightness criterion, and weighted-functional scaling.

use crate::cumulants::{self, CumulantError};
use crate::domains::ConvexBody;
use crate::quad;
use crate::simulate::{self, FieldSampler, SimConfig, SimError};
use crate::spectra::{SpectraError, SpectralDensity, WeightFunction};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("Assumption {name} violated: {detail}")]
    Assumption { name: String, detail: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate variance {0}")]
    DegenerateVariance(f64),
    #[error("pair ({u}, {v}) invalid: need 0 <= u < v <= 1")]
    BadPair { u: f64, v: f64 },
    #[error("rate fit needs at least 3 ladder points with positive values, got {0}")]
    RateFitInput(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Cumulant(#[from] CumulantError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Base,
    Hermite2,
    Weighted,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct StatEst {
    pub est: f64,
    pub se: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct LadderPoint {
    pub t: f64,
    pub k2: StatEst,
    pub k3: StatEst,
    pub k4: StatEst,
    pub sigma2_theory: f64,
    /// True when sigma2_theory is the mu_T plug-in estimate (weighted
    /// mode), not an analytic limit.
    pub sigma2_is_estimate: bool,
    pub dkol: f64,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct RateFits {
    pub dkol: Option<RateFit>,
    pub cum4: Option<RateFit>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CltExperimentReport {
    pub config: String,
    pub mode: Mode,
    pub ladder: Vec<LadderPoint>,
    pub ratefits: RateFits,
}

/// A ladder of T values run on one simulation configuration; the
/// config's own t_scale is overridden per ladder point.
#[derive(Debug, Clone)]
pub struct CltLadderConfig {
    pub sim: SimConfig,
    pub ladder: Vec<f64>,
    pub mode: Mode,
    pub weight: Option<WeightFunction>,
}

/// Exact two-sided Kolmogorov distance between the empirical CDF and
/// N(mean, variance): sup of both one-sided gaps at every order statistic.
pub fn kolmogorov_distance(
    samples: &[f64],
    mean: f64,
    variance: f64,
) -> Result<f64, AsymptoticsError> {
    if samples.len() < 2 {
        return Err(AsymptoticsError::Config(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(variance > 0.0) {
        return Err(AsymptoticsError::DegenerateVariance(variance));
    }
    let normal = Normal::new(mean, variance.sqrt()).expect("positive sd");
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, &z) in sorted.iter().enumerate() {
        let phi = normal.cdf(z);
        let below = (phi - i as f64 / n).abs();
        let above = ((i as f64 + 1.0) / n - phi).abs();
        sup = sup.max(below).max(above);
    }
    Ok(sup.min(1.0))
}

/// sqrt(cum4 / 6 + (cum2 - 1)^2); the boolean flags a clamped negative
/// radicand (possible only for strongly negative estimated cum4).
pub fn berry_esseen_bound(cum2: f64, cum4: f64) -> (f64, bool) {
    let radicand = cum4 / 6.0 + (cum2 - 1.0) * (cum2 - 1.0);
    if radicand < 0.0 {
        (0.0, true)
    } else {
        (radicand.sqrt(), false)
    }
}

fn check_assumptions(config: &CltLadderConfig) -> Result<(), AsymptoticsError> {
    let body = &config.sim.body;
    let density = &config.sim.density;
    // Assumption K: kernel norm finite above p_*, with p_* < 2
    if body.p_star() >= 2.0 {
        return Err(AsymptoticsError::Assumption {
            name: "K".into(),
            detail: format!("p_* = {} >= 2 for this window", body.p_star()),
        });
    }
    match config.mode {
        Mode::Base => {
            // Assumption B: f2 bounded, continuous at 0, f2(0) != 0
            if density.value_at_zero() == 0.0 {
                return Err(AsymptoticsError::Assumption {
                    name: "B".into(),
                    detail: "f2(0) = 0: the limiting variance (2 pi)^d |K| f2(0) degenerates"
                        .into(),
                });
            }
        }
        Mode::Hermite2 => {
            let cert = density.lp_membership(2.0);
            if !cert.member {
                return Err(AsymptoticsError::Assumption {
                    name: "B".into(),
                    detail: format!("second chaos needs f in L_2: {}", cert.rule),
                });
            }
        }
        Mode::Weighted => {
            let weight = config.weight.as_ref().ok_or_else(|| {
                AsymptoticsError::Config("weighted mode requires a weight function".into())
            })?;
            // Assumption F at p = 2: finite base L2 norm of the weight
            let w2 = weight.base_l2(body)?;
            if !w2.is_finite() || w2 <= 0.0 {
                return Err(AsymptoticsError::Assumption {
                    name: "F".into(),
                    detail: format!("C_2,w(K)^2 = {w2} is not finite and positive"),
                });
            }
            // Assumption B for the base field feeding the weighted sum
            if density.value_at_zero() == 0.0 {
                return Err(AsymptoticsError::Assumption {
                    name: "B".into(),
                    detail: "f2(0) = 0 under the weighted functional".into(),
                });
            }
        }
    }
    Ok(())
}

fn config_fingerprint(config: &CltLadderConfig) -> String {
    format!(
        "mode={:?};body={:?}d{};density={:?};h={};N={};seed={};generator={:?};ladder={:?}",
        config.mode,
        config.sim.body.kind,
        config.sim.body.dimension,
        config.sim.density.family,
        config.sim.spacing,
        config.sim.replications,
        config.sim.seed,
        config.sim.generator,
        config.ladder,
    )
}

/// Run the ladder: per T, simulate N replications, normalize, estimate
/// k-statistics and the Kolmogorov distance to N(0, sigma^2_theory).
pub fn run_clt_experiment(
    config: &CltLadderConfig,
) -> Result<CltExperimentReport, AsymptoticsError> {
    if config.ladder.is_empty() {
        return Err(AsymptoticsError::Config("empty T ladder".into()));
    }
    if config.ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AsymptoticsError::Config(
            "T ladder must be strictly increasing".into(),
        ));
    }
    check_assumptions(config)?;
    let d = config.sim.body.dimension as f64;
    let top_t = *config.ladder.last().unwrap();
    // weighted sigma^2: mu_T plug-in at the top ladder T, flagged
    let weighted_sigma2 = if config.mode == Mode::Weighted {
        let weight = config.weight.as_ref().unwrap();
        Some(weighted_sigma2_plugin(
            &config.sim.density,
            weight,
            &config.sim.body,
            top_t,
        )?)
    } else {
        None
    };

    let mut ladder = Vec::new();
    for &t in &config.ladder {
        let mut sim = config.sim.clone();
        sim.t_scale = t;
        let (samples, sigma2, is_estimate) = match config.mode {
            Mode::Base => {
                let vals = simulate::replicate_functionals(&sim, None, None)?;
                let norm = t.powf(d / 2.0);
                let samples: Vec<f64> = vals.iter().map(|v| v / norm).collect();
                let v = cumulants::theoretical_variance(&sim.density, &sim.body, t)?;
                (samples, v.limit, false)
            }
            Mode::Hermite2 => {
                let vals = simulate::replicate_functionals(&sim, None, Some(2))?;
                let norm = t.powf(d / 2.0);
                let samples: Vec<f64> = vals.iter().map(|v| v / norm).collect();
                let sigma2 = cumulants::theoretical_h2_variance(&sim.density, &sim.body)?;
                (samples, sigma2, false)
            }
            Mode::Weighted => {
                let weight = config.weight.as_ref().unwrap();
                let vals = simulate::replicate_functionals(&sim, Some(weight), None)?;
                let w_t = weight.weight_l2(&sim.body, t)?.sqrt();
                let samples: Vec<f64> = vals.iter().map(|v| v / w_t).collect();
                (samples, weighted_sigma2.unwrap(), true)
            }
        };
        if !(sigma2 > 0.0) {
            return Err(AsymptoticsError::DegenerateVariance(sigma2));
        }
        let k2 = cumulants::k_statistic(&samples, 2)?;
        let k3 = cumulants::k_statistic(&samples, 3)?;
        let k4 = cumulants::k_statistic(&samples, 4)?;
        let dkol = kolmogorov_distance(&samples, 0.0, sigma2)?;
        ladder.push(LadderPoint {
            t,
            k2: StatEst {
                est: k2.estimate,
                se: k2.standard_error,
            },
            k3: StatEst {
                est: k3.estimate,
                se: k3.standard_error,
            },
            k4: StatEst {
                est: k4.estimate,
                se: k4.standard_error,
            },
            sigma2_theory: sigma2,
            sigma2_is_estimate: is_estimate,
            dkol,
            n: samples.len(),
            seed: sim.seed,
        });
    }
    let mut report = CltExperimentReport {
        config: config_fingerprint(config),
        mode: config.mode,
        ladder,
        ratefits: RateFits::default(),
    };
    report.ratefits.dkol = rate_fit(&report, RateQuantity::Dkol).ok();
    report.ratefits.cum4 = rate_fit(&report, RateQuantity::Cum4).ok();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateQuantity {
    Dkol,
    Cum4,
}

/// Least-squares slope (with standard error) of log(quantity) vs log(T).
pub fn rate_fit(
    report: &CltExperimentReport,
    quantity: RateQuantity,
) -> Result<RateFit, AsymptoticsError> {
    let points: Vec<(f64, f64)> = report
        .ladder
        .iter()
        .map(|p| {
            let q = match quantity {
                RateQuantity::Dkol => p.dkol,
                RateQuantity::Cum4 => p.k4.est,
            };
            (p.t, q)
        })
        .filter(|&(_, q)| q > 0.0)
        .collect();
    if points.len() < 3 || points.len() < report.ladder.len() {
        return Err(AsymptoticsError::RateFitInput(points.len()));
    }
    Ok(ols_loglog(&points))
}

fn ols_loglog(points: &[(f64, f64)]) -> RateFit {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, q)| q.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = if points.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    RateFit { slope, stderr }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TightnessReport {
    pub pairs: Vec<(f64, f64)>,
    /// E|Y_T(v) - Y_T(u)|^4 per pair.
    pub fourth_moments: Vec<f64>,
    /// fourth moment / (v - u)^2.
    pub ratios: Vec<f64>,
    pub pass: bool,
}

/// Fourth-moment tightness criterion for Y_T(u) = T^{-d/2} S over the
/// subwindow u^{1/d} T K: Monte Carlo E|Y_T(v) - Y_T(u)|^4 must scale
/// like (v - u)^2 with a bounded constant (max/min ratio below 10).
pub fn tightness_check(
    config: &SimConfig,
    pairs: &[(f64, f64)],
) -> Result<TightnessReport, AsymptoticsError> {
    for &(u, v) in pairs {
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) || u >= v {
            return Err(AsymptoticsError::BadPair { u, v });
        }
    }
    if pairs.is_empty() {
        return Err(AsymptoticsError::Config("no (u, v) pairs given".into()));
    }
    let d = config.body.dimension as f64;
    let t = config.t_scale;
    // distinct scale fractions appearing in any pair
    let mut fractions: Vec<f64> = pairs
        .iter()
        .flat_map(|&(u, v)| [u, v])
        .filter(|&x| x > 0.0)
        .collect();
    fractions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    fractions.dedup();
    let sampler = FieldSampler::new(config)?;
    let cell = config.spacing.powi(config.body.dimension as i32);
    let per_rep: Vec<Vec<f64>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let grid = sampler.sample(config, rep);
            fractions
                .iter()
                .map(|&frac| {
                    let scale = frac.powf(1.0 / d) * t;
                    let mut acc = 0.0;
                    for flat in 0..grid.len() {
                        let point = grid.point(flat);
                        if grid.body.contains(&point, scale) {
                            acc += grid.values[flat];
                        }
                    }
                    cell * acc / t.powf(d / 2.0)
                })
                .collect()
        })
        .collect();
    let integral_at = |rep: usize, frac: f64| -> f64 {
        if frac == 0.0 {
            0.0
        } else {
            let idx = fractions
                .iter()
                .position(|&x| x == frac)
                .expect("fraction registered");
            per_rep[rep][idx]
        }
    };
    let mut fourth_moments = Vec::new();
    let mut ratios = Vec::new();
    for &(u, v) in pairs {
        let diffs: Vec<f64> = (0..per_rep.len())
            .map(|r| {
                let diff = integral_at(r, v) - integral_at(r, u);
                diff.powi(4)
            })
            .collect();
        let m4 = quad::pairwise_sum(&diffs) / diffs.len() as f64;
        fourth_moments.push(m4);
        ratios.push(m4 / ((v - u) * (v - u)));
    }
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let pass = min > 0.0 && max / min < 10.0;
    Ok(TightnessReport {
        pairs: pairs.to_vec(),
        fourth_moments,
        ratios,
        pass,
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct WeightedScalingRow {
    pub t: f64,
    /// W^2(T) / W^2(1), both by direct quadrature.
    pub ratio: f64,
    /// T^{d + 2 beta}.
    pub expected: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct WeightedScalingReport {
    pub rows: Vec<WeightedScalingRow>,
    /// Relative gap between time-domain int w^2 and the frequency-domain
    /// (2 pi)^{-d} |w_T|_2^2 at the top T (d = 1 only).
    pub plancherel_gap: Option<f64>,
    pub pass: bool,
}

/// Verify W^2(T) / W^2(1) = T^{d + 2 beta} by direct quadrature over the
/// scaled windows, plus a Plancherel cross-check in d = 1.
pub fn weighted_scaling_check(
    weight: &WeightFunction,
    body: &ConvexBody,
    ladder: &[f64],
    tolerance: f64,
) -> Result<WeightedScalingReport, AsymptoticsError> {
    if ladder.is_empty() {
        return Err(AsymptoticsError::Config("empty T ladder".into()));
    }
    let d = body.dimension as f64;
    let beta = weight.degree();
    let base = weight.weight_l2_quadrature(body, 1.0)?;
    if !base.is_finite() || base <= 0.0 {
        return Err(AsymptoticsError::Assumption {
            name: "F".into(),
            detail: format!("W^2(1) = {base} is not finite and positive"),
        });
    }
    let mut rows = Vec::new();
    let mut pass = true;
    for &t in ladder {
        let w2 = weight.weight_l2_quadrature(body, t)?;
        let ratio = w2 / base;
        let expected = t.powf(d + 2.0 * beta);
        if (ratio / expected - 1.0).abs() > tolerance {
            pass = false;
        }
        rows.push(WeightedScalingRow { t, ratio, expected });
    }
    let plancherel_gap = if body.dimension == 1 {
        let t = *ladder.last().unwrap();
        let freq = frequency_l2(weight, body, t)?;
        let time = weight.weight_l2_quadrature(body, t)?;
        let gap = (freq / time - 1.0).abs();
        if gap > 5e-3 {
            pass = false;
        }
        Some(gap)
    } else {
        None
    };
    Ok(WeightedScalingReport {
        rows,
        plancherel_gap,
        pass,
    })
}

/// (2 pi)^{-1} int |w_T(lambda)|^2 dlambda in d = 1: oscillation-resolving
/// composite panels on a central window plus an averaged 1/lambda^2 tail.
fn frequency_l2(
    weight: &WeightFunction,
    body: &ConvexBody,
    t_scale: f64,
) -> Result<f64, AsymptoticsError> {
    let g = |l: f64| -> f64 {
        weight
            .weight_fourier(body, t_scale, &[l])
            .map(|z| z.norm_sqr())
            .unwrap_or(f64::NAN)
    };
    let window = 400.0 / t_scale;
    let step = PI / (4.0 * t_scale);
    let panels = ((2.0 * window / step).ceil() as usize).max(64);
    let (main, _) = quad::composite(&g, -window, window, panels);
    // averaged tail: fit A from a window past the cutoff, tail ~ 2A/window
    let probe_span = 2.0 * PI / t_scale * 8.0;
    let (probe, _) = quad::composite(
        &|l: f64| g(l) * l * l,
        window,
        window + probe_span,
        256,
    );
    let a = probe / probe_span;
    let tail = 2.0 * a / window;
    Ok((main + tail) / (2.0 * PI))
}

/// sigma^2 plug-in for the weighted CLT: int f2 |w_T|^2 / W^2(T) at the
/// given T (the mu_T approximation to Theorem 4's unidentified limit).
fn weighted_sigma2_plugin(
    density: &SpectralDensity,
    weight: &WeightFunction,
    body: &ConvexBody,
    t_scale: f64,
) -> Result<f64, AsymptoticsError> {
    if body.dimension != 1 {
        return Err(AsymptoticsError::Config(
            "weighted sigma^2 plug-in supports d = 1 only".into(),
        ));
    }
    let g = |l: f64| -> f64 {
        weight
            .weight_fourier(body, t_scale, &[l])
            .map(|z| z.norm_sqr() * density.evaluate(&[l]))
            .unwrap_or(f64::NAN)
    };
    let window = 400.0 / t_scale;
    let step = PI / (4.0 * t_scale);
    let panels = ((2.0 * window / step).ceil() as usize).max(64);
    let (main, _) = quad::composite(&g, -window, window, panels);
    let probe_span = 2.0 * PI / t_scale * 8.0;
    let (probe, _) = quad::composite(
        &|l: f64| g(l) * l * l,
        window,
        window + probe_span,
        256,
    );
    let tail = 2.0 * (probe / probe_span) / window;
    let w2t = weight.weight_l2(body, t_scale)?;
    Ok((main + tail) / w2t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::Generator;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn inverse_normal(p: f64) -> f64 {
        let n = Normal::new(0.0, 1.0).unwrap();
        n.inverse_cdf(p)
    }

    #[test]
    fn kolmogorov_stratified_quantiles() {
        let n = 100;
        let samples: Vec<f64> = (1..=n)
            .map(|i| inverse_normal((i as f64 - 0.5) / n as f64))
            .collect();
        // tolerance reflects the accuracy of the quantile inversion used
        // to build the stratified sample, not the distance computation
        let d = kolmogorov_distance(&samples, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(d, 0.005, epsilon = 1e-7);
    }

    #[test]
    fn kolmogorov_point_mass() {
        let samples = vec![0.0; 50];
        let d = kolmogorov_distance(&samples, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn kolmogorov_normal_draws_below_critical() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = 1.0 - rng.gen::<f64>();
                let v: f64 = rng.gen();
                (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
            })
            .collect();
        let d = kolmogorov_distance(&samples, 0.0, 1.0).unwrap();
        assert!(d < 1.63 / (n as f64).sqrt(), "d = {d}");
    }

    #[test]
    fn kolmogorov_matches_grid_scan() {
        let mut rng = ChaCha12Rng::seed_from_u64(88);
        let grid = 10_000;
        for _ in 0..50 {
            let n = 40 + (rng.gen::<u64>() % 60) as usize;
            let samples: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let exact = kolmogorov_distance(&samples, 0.0, 1.0).unwrap();
            let normal = Normal::new(0.0, 1.0).unwrap();
            let mut sorted = samples.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut scan = 0.0f64;
            for i in 0..grid {
                let z = -4.0 + 8.0 * i as f64 / grid as f64;
                let emp = sorted.partition_point(|&x| x <= z) as f64 / n as f64;
                scan = scan.max((emp - normal.cdf(z)).abs());
            }
            assert!(
                exact >= scan - 1e-12 && exact - scan < 0.5 / grid as f64 + 8.0 / grid as f64,
                "exact {exact} vs scan {scan}"
            );
        }
    }

    #[test]
    fn kolmogorov_rejections() {
        assert!(kolmogorov_distance(&[1.0], 0.0, 1.0).is_err());
        assert!(kolmogorov_distance(&[1.0, 2.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn berry_esseen_examples() {
        assert_eq!(berry_esseen_bound(1.0, 0.0), (0.0, false));
        let (b, flagged) = berry_esseen_bound(1.0, 6.0);
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-12);
        assert!(!flagged);
        // monotone in cum4 for fixed cum2
        let (b1, _) = berry_esseen_bound(1.1, 0.5);
        let (b2, _) = berry_esseen_bound(1.1, 1.0);
        assert!(b2 > b1);
        let (b, flagged) = berry_esseen_bound(1.0, -1.0);
        assert_eq!(b, 0.0);
        assert!(flagged);
    }

    fn synthetic_report(values: &[(f64, f64)]) -> CltExperimentReport {
        CltExperimentReport {
            config: "synthetic".into(),
            mode: Mode::Base,
            ladder: values
                .iter()
                .map(|&(t, q)| LadderPoint {
                    t,
                    k2: StatEst { est: 1.0, se: 0.0 },
                    k3: StatEst { est: 0.0, se: 0.0 },
                    k4: StatEst { est: q, se: 0.0 },
                    sigma2_theory: 1.0,
                    sigma2_is_estimate: false,
                    dkol: q,
                    n: 100,
                    seed: 0,
                })
                .collect(),
            ratefits: RateFits::default(),
        }
    }

    #[test]
    fn rate_fit_power_laws() {
        let report = synthetic_report(&[(2.0, 0.5), (4.0, 0.25), (8.0, 0.125), (16.0, 0.0625)]);
        let fit = rate_fit(&report, RateQuantity::Dkol).unwrap();
        assert_abs_diff_eq!(fit.slope, -1.0, epsilon = 1e-12);
        assert!(fit.stderr < 1e-12);

        let report = synthetic_report(&[(2.0, 0.3), (4.0, 0.3), (8.0, 0.3)]);
        let fit = rate_fit(&report, RateQuantity::Dkol).unwrap();
        assert_abs_diff_eq!(fit.slope, 0.0, epsilon = 1e-12);

        let report = synthetic_report(&[(2.0, 0.5), (4.0, -0.25), (8.0, 0.1)]);
        assert!(rate_fit(&report, RateQuantity::Cum4).is_err());
    }

    fn small_sim(seed: u64, n: usize) -> SimConfig {
        SimConfig {
            seed,
            density: SpectralDensity::cauchy(1, 1.0, 1.0 / PI),
            body: ConvexBody::cube(1),
            t_scale: 8.0,
            spacing: 0.25,
            generator: Generator::CirculantEmbedding,
            spectral_nodes: 512,
            replications: n,
        }
    }

    #[test]
    fn clt_base_small_ladder() {
        let config = CltLadderConfig {
            sim: small_sim(314, 200),
            ladder: vec![4.0, 8.0],
            mode: Mode::Base,
            weight: None,
        };
        let report = run_clt_experiment(&config).unwrap();
        assert_eq!(report.ladder.len(), 2);
        for p in &report.ladder {
            assert!((0.0..=1.0).contains(&p.dkol));
            assert_abs_diff_eq!(p.sigma2_theory, 2.0, epsilon = 1e-9);
            assert!(!p.sigma2_is_estimate);
            // base Gaussian S_T is exactly Gaussian: d_Kol stays at the
            // KS noise floor scale
            assert!(p.dkol < 4.0 / (p.n as f64).sqrt(), "dkol {}", p.dkol);
        }
    }

    #[test]
    fn clt_assumption_violations() {
        // f2(0) = 0 (degenerate amplitude) names Assumption B
        let mut sim = small_sim(1, 64);
        sim.density = SpectralDensity::gaussian(1, 1.0, 0.0);
        let config = CltLadderConfig {
            sim,
            ladder: vec![4.0, 8.0],
            mode: Mode::Base,
            weight: None,
        };
        match run_clt_experiment(&config) {
            Err(AsymptoticsError::Assumption { name, .. }) => assert_eq!(name, "B"),
            other => panic!("expected Assumption B, got {other:?}"),
        }

        // f not in L2 rejected in hermite2 mode
        let mut sim = small_sim(1, 64);
        sim.density = SpectralDensity::cauchy(1, 0.2, 1.0);
        let config = CltLadderConfig {
            sim,
            ladder: vec![4.0, 8.0],
            mode: Mode::Hermite2,
            weight: None,
        };
        match run_clt_experiment(&config) {
            Err(AsymptoticsError::Assumption { detail, .. }) => {
                assert!(detail.contains("L_2"), "{detail}")
            }
            other => panic!("expected L2 violation, got {other:?}"),
        }

        // non-increasing ladder rejected
        let config = CltLadderConfig {
            sim: small_sim(1, 64),
            ladder: vec![8.0, 8.0],
            mode: Mode::Base,
            weight: None,
        };
        assert!(matches!(
            run_clt_experiment(&config),
            Err(AsymptoticsError::Config(_))
        ));
    }

    #[test]
    fn tightness_small_run() {
        let config = small_sim(2718, 500);
        let pairs = [(0.0, 0.25), (0.0, 0.5), (0.0, 1.0)];
        let report = tightness_check(&config, &pairs).unwrap();
        assert_eq!(report.ratios.len(), 3);
        assert!(report.pass, "ratios {:?}", report.ratios);

        assert!(matches!(
            tightness_check(&config, &[(0.3, 0.3)]),
            Err(AsymptoticsError::BadPair { .. })
        ));
    }

    #[test]
    fn tightness_iid_surrogate_constant_ratio() {
        // white-noise surrogate: independent N(0, s^2) cell sums make
        // Y(v) - Y(u) Gaussian with variance proportional to (v - u), so
        // the fourth moment is 3 sigma^4 (v-u)^2: ratios constant
        let mut rng = ChaCha12Rng::seed_from_u64(5150);
        let n = 20_000;
        let pairs = [(0.0, 0.25), (0.0, 0.5), (0.0, 1.0)];
        let mut ratios = Vec::new();
        for &(u, v) in &pairs {
            let span: f64 = v - u;
            let diffs: Vec<f64> = (0..n)
                .map(|_| {
                    let z: f64 = {
                        let a: f64 = 1.0 - rng.gen::<f64>();
                        let b: f64 = rng.gen();
                        (-2.0 * a.ln()).sqrt() * (2.0 * PI * b).cos()
                    };
                    (span.sqrt() * z).powi(4)
                })
                .collect();
            let m4 = quad::pairwise_sum(&diffs) / n as f64;
            ratios.push(m4 / (span * span));
        }
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 1.2, "ratios {ratios:?}");
        for r in &ratios {
            assert!((r - 3.0).abs() < 0.25, "ratio {r} vs 3");
        }
    }

    #[test]
    fn weighted_scaling_closed_forms() {
        // w(t) = t on [0, 1]: d = 1, beta = 1, ratio at T = 3 is 27
        let body = ConvexBody::unit_box_at_origin(1);
        let weight = WeightFunction::power_norm(1, 1.0);
        let report = weighted_scaling_check(&weight, &body, &[3.0], 1e-6).unwrap();
        assert!(report.pass, "{report:?}");
        assert_abs_diff_eq!(report.rows[0].ratio, 27.0, epsilon = 1e-6 * 27.0);

        // w = 1 on the cube d = 2: beta = 0, ratio at T = 5 is 25
        let body = ConvexBody::cube(2);
        let weight = WeightFunction::power_norm(2, 0.0);
        let report = weighted_scaling_check(&weight, &body, &[5.0], 1e-6).unwrap();
        assert!(report.pass);
        assert_abs_diff_eq!(report.rows[0].ratio, 25.0, epsilon = 1e-6 * 25.0);
    }

    #[test]
    fn weighted_scaling_quadrature_2d() {
        // |t| weight on [0,1]^2: beta = 1, ratio at T = 2 is 2^4
        let body = ConvexBody::unit_box_at_origin(2);
        let weight = WeightFunction::power_norm(2, 1.0);
        let report = weighted_scaling_check(&weight, &body, &[2.0], 1e-4).unwrap();
        assert!(report.pass, "{report:?}");
        assert_abs_diff_eq!(report.rows[0].ratio, 16.0, epsilon = 1e-4 * 16.0);
    }

    #[test]
    fn plancherel_cross_check() {
        let body = ConvexBody::unit_box_at_origin(1);
        let weight = WeightFunction::power_norm(1, 0.0);
        let report = weighted_scaling_check(&weight, &body, &[2.0, 4.0], 1e-6).unwrap();
        let gap = report.plancherel_gap.unwrap();
        assert!(gap < 5e-3, "plancherel gap {gap}");
        assert!(report.pass);
    }
}
