//! Stationary Gaussian field simulation on lattices covering the scaled
//! window TK, Hermite transforms, and Riemann-sum evaluation of the
//! additive functionals S_T and S_T^w.
//!
//! The default generator is circulant embedding, which reproduces the
//! target covariance exactly at lattice lags; spectral superposition is
//! kept as a fallback and cross-check with an explicitly reported
//! truncation error. Every replication draws from its own counter-based
//! RNG stream keyed by (seed, replication index), so results are a pure
//! function of the configuration and independent of execution order.

use crate::domains::ConvexBody;
use crate::spectra::{SpectraError, SpectralDensity, WeightFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(
        "circulant embedding not nonnegative-definite after {retries} padding doublings \
         (most negative eigenvalue {worst:.3e}); try generator = spectral_superposition"
    )]
    EmbeddingFailed { retries: usize, worst: f64 },
    #[error("hermite order {0} outside 1..=4")]
    HermiteOrder(u32),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    CirculantEmbedding,
    SpectralSuperposition,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub seed: u64,
    pub density: SpectralDensity,
    pub body: ConvexBody,
    pub t_scale: f64,
    pub spacing: f64,
    pub generator: Generator,
    /// Nodes per axis for spectral superposition.
    pub spectral_nodes: usize,
    pub replications: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.spacing > 0.0) {
            return Err(SimError::Config(format!("spacing {} <= 0", self.spacing)));
        }
        if !(self.t_scale > 0.0) {
            return Err(SimError::Config(format!("T {} <= 0", self.t_scale)));
        }
        if self.replications < 2 {
            return Err(SimError::Config(format!(
                "replication count {} < 2",
                self.replications
            )));
        }
        if self.density.dimension != self.body.dimension {
            return Err(SimError::Config(format!(
                "density dimension {} != body dimension {}",
                self.density.dimension, self.body.dimension
            )));
        }
        if self.generator == Generator::SpectralSuperposition && self.spectral_nodes == 0 {
            return Err(SimError::Config("spectral_nodes must be positive".into()));
        }
        Ok(())
    }
}

/// A sampled realization of the field on a regular lattice covering TK.
/// Cell centers are origin + (i + 1/2) h per axis, row-major storage.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub dimension: usize,
    pub spacing: f64,
    pub origin: Vec<f64>,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub t_scale: f64,
    pub body: ConvexBody,
    /// Estimated relative spectral mass lost to Lambda-truncation
    /// (spectral superposition only).
    pub truncation_error: Option<f64>,
}

impl FieldGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cell center for a flat row-major index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let mut idx = vec![0usize; self.dimension];
        for axis in (0..self.dimension).rev() {
            idx[axis] = rem % self.shape[axis];
            rem /= self.shape[axis];
        }
        idx.iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + (i as f64 + 0.5) * self.spacing)
            .collect()
    }
}

fn grid_geometry(body: &ConvexBody, t_scale: f64, spacing: f64) -> (Vec<f64>, Vec<usize>) {
    let bbox = body.bounding_box(t_scale);
    let origin: Vec<f64> = bbox.iter().map(|&(lo, _)| lo).collect();
    let shape: Vec<usize> = bbox
        .iter()
        .map(|&(lo, hi)| ((hi - lo) / spacing).ceil().max(1.0) as usize)
        .collect();
    (origin, shape)
}

/// Unnormalized multi-dimensional FFT along all axes (row-major layout).
fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let total = data.len();
    let mut planner = FftPlanner::new();
    for (axis, &n) in shape.iter().enumerate() {
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let stride: usize = shape[axis + 1..].iter().product();
        let outer = total / (n * stride);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for i in 0..n {
                    line[i] = data[base + i * stride];
                }
                fft.process(&mut line);
                for i in 0..n {
                    data[base + i * stride] = line[i];
                }
            }
        }
    }
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller on (0, 1] uniforms
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
}

const EMBED_RETRIES: usize = 3;
const EIG_TOL: f64 = 1e-8;

/// Precomputed generator state shared by all replications of one config.
enum Prepared {
    Circulant {
        padded: Vec<usize>,
        sqrt_eigs: Vec<f64>,
    },
    Spectral {
        /// (frequency, sqrt of Riemann weight) pairs.
        nodes: Vec<(Vec<f64>, f64)>,
        truncation_error: f64,
    },
}

/// Generator state prepared once per configuration and shared by all
/// replications (covariance FFT or spectral node table).
pub struct FieldSampler {
    origin: Vec<f64>,
    shape: Vec<usize>,
    spacing: f64,
    state: Prepared,
}

impl FieldSampler {
    pub fn new(config: &SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let (origin, shape) = grid_geometry(&config.body, config.t_scale, config.spacing);
        let state = match config.generator {
            Generator::CirculantEmbedding => prepare_circulant(config, &shape)?,
            Generator::SpectralSuperposition => prepare_spectral(config)?,
        };
        Ok(FieldSampler {
            origin,
            shape,
            spacing: config.spacing,
            state,
        })
    }

    pub fn sample(&self, config: &SimConfig, replication_index: u64) -> FieldGrid {
        let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
        rng.set_stream(replication_index);
        let (values, truncation_error) = match &self.state {
            Prepared::Circulant { padded, sqrt_eigs } => {
                (self.sample_circulant(padded, sqrt_eigs, &mut rng), None)
            }
            Prepared::Spectral {
                nodes,
                truncation_error,
            } => (
                self.sample_spectral(nodes, &mut rng),
                Some(*truncation_error),
            ),
        };
        FieldGrid {
            dimension: config.body.dimension,
            spacing: self.spacing,
            origin: self.origin.clone(),
            shape: self.shape.clone(),
            values,
            t_scale: config.t_scale,
            body: config.body.clone(),
            truncation_error,
        }
    }

    fn sample_circulant(
        &self,
        padded: &[usize],
        sqrt_eigs: &[f64],
        rng: &mut ChaCha12Rng,
    ) -> Vec<f64> {
        let total: usize = padded.iter().product();
        let mut work: Vec<Complex64> = (0..total)
            .map(|k| {
                Complex64::new(standard_normal(rng), standard_normal(rng)) * sqrt_eigs[k]
            })
            .collect();
        fft_nd(&mut work, padded, true);
        let norm = 1.0 / (total as f64).sqrt();
        // gather the leading block of each axis
        let n: usize = self.shape.len();
        let cells: usize = self.shape.iter().product();
        let mut out = vec![0.0; cells];
        let mut idx = vec![0usize; n];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut rem = flat;
            for axis in (0..n).rev() {
                idx[axis] = rem % self.shape[axis];
                rem /= self.shape[axis];
            }
            let mut padded_flat = 0usize;
            for axis in 0..n {
                padded_flat = padded_flat * padded[axis] + idx[axis];
            }
            *slot = work[padded_flat].re * norm;
        }
        out
    }

    fn sample_spectral(&self, nodes: &[(Vec<f64>, f64)], rng: &mut ChaCha12Rng) -> Vec<f64> {
        let amplitudes: Vec<(f64, f64)> = nodes
            .iter()
            .map(|_| (standard_normal(rng), standard_normal(rng)))
            .collect();
        let cells: usize = self.shape.iter().product();
        let n = self.shape.len();
        let mut out = vec![0.0; cells];
        let mut idx = vec![0usize; n];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut rem = flat;
            for axis in (0..n).rev() {
                idx[axis] = rem % self.shape[axis];
                rem /= self.shape[axis];
            }
            let t: Vec<f64> = (0..n)
                .map(|a| self.origin[a] + (idx[a] as f64 + 0.5) * self.spacing)
                .collect();
            let mut acc = 0.0;
            for ((lambda, sw), (a, b)) in nodes.iter().zip(&amplitudes) {
                let phase: f64 = lambda.iter().zip(&t).map(|(&l, &x)| l * x).sum();
                acc += sw * (a * phase.cos() + b * phase.sin());
            }
            *slot = acc;
        }
        out
    }
}

fn prepare_circulant(config: &SimConfig, shape: &[usize]) -> Result<Prepared, SimError> {
    let h = config.spacing;
    let d = shape.len();
    let mut padded: Vec<usize> = shape
        .iter()
        .map(|&n| (2 * n).next_power_of_two())
        .collect();
    let mut worst = 0.0f64;
    for _retry in 0..=EMBED_RETRIES {
        let total: usize = padded.iter().product();
        let mut cov = vec![Complex64::new(0.0, 0.0); total];
        let mut idx = vec![0usize; d];
        for (flat, slot) in cov.iter_mut().enumerate() {
            let mut rem = flat;
            for axis in (0..d).rev() {
                idx[axis] = rem % padded[axis];
                rem /= padded[axis];
            }
            let tau: Vec<f64> = (0..d)
                .map(|a| {
                    let m = padded[a];
                    let j = idx[a];
                    let wrapped = if j <= m / 2 { j as i64 } else { j as i64 - m as i64 };
                    h * wrapped as f64
                })
                .collect();
            *slot = Complex64::new(config.density.covariance(&tau)?, 0.0);
        }
        fft_nd(&mut cov, &padded, false);
        let max_eig = cov.iter().map(|z| z.re).fold(0.0f64, f64::max);
        let min_eig = cov.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if min_eig >= -EIG_TOL * max_eig.max(1.0) {
            let sqrt_eigs = cov.iter().map(|z| z.re.max(0.0).sqrt()).collect();
            return Ok(Prepared::Circulant { padded, sqrt_eigs });
        }
        worst = min_eig;
        for m in padded.iter_mut() {
            *m *= 2;
        }
    }
    Err(SimError::EmbeddingFailed {
        retries: EMBED_RETRIES,
        worst,
    })
}

fn prepare_spectral(config: &SimConfig) -> Result<Prepared, SimError> {
    let d = config.body.dimension;
    let cutoff = config.density.truncation_cutoff();
    let m = config.spectral_nodes;
    let delta = 2.0 * cutoff / m as f64;
    let total_mass = config.density.covariance(&vec![0.0; d])?;
    let mut nodes = Vec::new();
    let mut kept_mass = 0.0;
    let mut idx = vec![0usize; d];
    let count = m.pow(d as u32);
    for flat in 0..count {
        let mut rem = flat;
        for axis in (0..d).rev() {
            idx[axis] = rem % m;
            rem /= m;
        }
        let lambda: Vec<f64> = idx
            .iter()
            .map(|&i| -cutoff + (i as f64 + 0.5) * delta)
            .collect();
        let w = config.density.evaluate(&lambda) * delta.powi(d as i32);
        if w > 0.0 {
            kept_mass += w;
            nodes.push((lambda, w.sqrt()));
        }
    }
    let truncation_error = ((total_mass - kept_mass) / total_mass).abs();
    Ok(Prepared::Spectral {
        nodes,
        truncation_error,
    })
}

/// One zero-mean Gaussian realization for the given replication index.
pub fn generate_field(config: &SimConfig, replication_index: u64) -> Result<FieldGrid, SimError> {
    let prepared = FieldSampler::new(config)?;
    Ok(prepared.sample(config, replication_index))
}

/// Pointwise H_m(X(t) / sigma0) with the probabilists' Hermite polynomials.
pub fn hermite_transform(grid: &FieldGrid, m: u32, sigma0: f64) -> Result<FieldGrid, SimError> {
    if !(1..=4).contains(&m) {
        return Err(SimError::HermiteOrder(m));
    }
    if !(sigma0 > 0.0) {
        return Err(SimError::Config(format!("sigma0 {sigma0} <= 0")));
    }
    let mut out = grid.clone();
    for v in out.values.iter_mut() {
        let x = *v / sigma0;
        *v = match m {
            1 => x,
            2 => x * x - 1.0,
            3 => x * x * x - 3.0 * x,
            4 => x * x * x * x - 6.0 * x * x + 3.0,
            _ => unreachable!(),
        };
    }
    Ok(out)
}

/// Midpoint Riemann sum h^d sum w(t_i) X(t_i) over cells with centers in TK.
pub fn integrate_functional(grid: &FieldGrid, weight: Option<&WeightFunction>) -> f64 {
    let cell = grid.spacing.powi(grid.dimension as i32);
    let mut acc = 0.0;
    for flat in 0..grid.len() {
        let t = grid.point(flat);
        if !grid.body.contains(&t, grid.t_scale) {
            continue;
        }
        let w = weight.map_or(1.0, |w| w.evaluate(&t));
        acc += w * grid.values[flat];
    }
    cell * acc
}

/// N functional values from independent replications; a pure function of
/// the configuration, regardless of thread count or execution order.
pub fn replicate_functionals(
    config: &SimConfig,
    weight: Option<&WeightFunction>,
    hermite_m: Option<u32>,
) -> Result<Vec<f64>, SimError> {
    let prepared = FieldSampler::new(config)?;
    let sigma0 = match hermite_m {
        Some(_) => {
            let c0 = config
                .density
                .covariance(&vec![0.0; config.body.dimension])?;
            c0.sqrt()
        }
        None => 1.0,
    };
    (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let grid = prepared.sample(config, rep);
            let grid = match hermite_m {
                Some(m) => hermite_transform(&grid, m, sigma0)?,
                None => grid,
            };
            Ok(integrate_functional(&grid, weight))
        })
        .collect()
}
