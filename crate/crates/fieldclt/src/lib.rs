//! Simulation and verification laboratory for central limit theorems of
//! additive functionals of stationary random fields.
//!
//! The library evaluates the analytic objects that drive such limit
//! theorems (Dirichlet-type kernels over convex windows, kernel norm
//! constants, spectral densities and their L_p memberships, variance
//! limits, Hoelder-Young-Brascamp-Lieb feasibility conditions) and checks
//! them empirically via seeded Monte Carlo experiments on simulated
//! Gaussian and Hermite-transformed fields.

pub mod asymptotics;
pub mod cli;
pub mod cumulants;
pub mod domains;
pub mod hybl;
pub mod quad;
pub mod simulate;
pub mod spectra;

mod bessel;

pub use domains::{BodyKind, ConvexBody, KernelNormTable};
pub use spectra::{SpectralDensity, WeightFunction};
