//! Classification-distortion-perception tradeoffs for discrete two-class
//! sources.
//!
//! A source `X` drawn from a two-class mixture passes through a degradation
//! channel to `Y`; a restoration kernel maps `Y` to `X̂`. The crate computes
//! the smallest achievable classification error on `X̂` under a distortion
//! budget `D` and a perception budget `P`, for a fixed classifier
//! ([`solve_cdp`]) and for the Bayes classifier ([`solve_scdp`]), plus
//! brute-force oracles and randomized property audits.
//!
//! Probability and classification code is generic over [`Scalar`] (`f32`,
//! `f64`, exact rationals); divergences and solvers need [`Real`].
//!
//! ```
//! use cdp_core::*;
//!
//! let two = Alphabet::new(2).unwrap();
//! let src = MixtureSourceF64::new(
//!     0.5,
//!     0.5,
//!     ProbVector::new(vec![0.8, 0.2]).unwrap(),
//!     ProbVector::new(vec![0.2, 0.8]).unwrap(),
//! )
//! .unwrap();
//! let prob = ProblemInstance::new(
//!     src,
//!     Channel::binary_symmetric(0.1).unwrap(),
//!     DistortionMatrix::hamming(two),
//!     DivergenceKind::TotalVariation,
//!     DecisionRegion::from_symbols(two, &[0]).unwrap(),
//! )
//! .unwrap();
//! let r = solve_cdp(&prob, f64::INFINITY, f64::INFINITY).unwrap();
//! assert!((r.value.unwrap() - 0.26).abs() < 1e-12);
//! ```

pub mod audit;
pub mod classify;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod prob;
pub mod scalar;
pub mod solver;

pub use classify::{
    bayes_error, bayes_error_abs_form, bayes_error_after, bayes_region, dpi_equality_holds, error_rate,
    region_partition, DecisionRegion, RegionPartition,
};
pub use error::{CdpError, Result};
pub use metrics::{divergence, expected_distortion, total_variation, DistortionMatrix, DivergenceKind};
pub use oracle::{
    enumerate_deterministic_kernels, grid_search_cdp, grid_search_scdp, probe_scdp_convexity, ConvexityProbe,
    KernelGrid, LatticeKernel, OracleResult,
};
pub use prob::{compose, mix_mixtures, push_forward, Alphabet, Channel, MixtureSource, ProbVector};
pub use scalar::{exact, Real, Scalar};
pub use solver::{
    min_distortion, solve_cdp, solve_scdp, sweep_surface, Certificate, ConvexityViolation, InfeasibleReason, Method,
    ProblemInstance, Replay, Status, SurfaceTable, Tradeoff, TradeoffResult,
};

pub type ProbVectorF64 = ProbVector<f64>;
pub type ChannelF64 = Channel<f64>;
pub type MixtureSourceF64 = MixtureSource<f64>;
pub type DistortionMatrixF64 = DistortionMatrix<f64>;
pub type ProblemInstanceF64 = ProblemInstance<f64>;
pub type TradeoffResultF64 = TradeoffResult<f64>;
pub type SurfaceTableF64 = SurfaceTable<f64>;
pub type OracleResultF64 = OracleResult<f64>;

pub type ProbVectorF32 = ProbVector<f32>;
pub type ChannelF32 = Channel<f32>;
pub type MixtureSourceF32 = MixtureSource<f32>;
pub type ProblemInstanceF32 = ProblemInstance<f32>;

pub type ExactProbVector = ProbVector<num_rational::BigRational>;
pub type ExactChannel = Channel<num_rational::BigRational>;
pub type ExactMixtureSource = MixtureSource<num_rational::BigRational>;
pub type ExactDistortionMatrix = DistortionMatrix<num_rational::BigRational>;
