//! Lyapunov machinery, performance metrics, noise generation and the
//! bound-verification sweeps built on top of them.

pub mod bounds;
pub mod lyapunov;
pub mod metrics;
pub mod noise;

pub use bounds::{lemma2_check, verify_theorem1, BoundCell, BoundReport, Lemma2Report};
pub use lyapunov::{
    companion_matrix, solve_lyapunov, theorem1_bound, LyapunovError, LyapunovResult, SquareMatrix,
};
pub use metrics::{isu, itae, Metrics, MetricsError};
pub use noise::{gaussian_noise, SampledSignal};
