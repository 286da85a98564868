//! Active disturbance rejection control with a single linear extended state
//! observer (C-ADRC) or a nested inner/outer observer pair (N-ADRC).
//!
//! * [`ode`]: fixed-step RK4 and adaptive Dormand-Prince integrators.
//! * [`plants`]: the benchmark plant, its signals and the ground-truth
//!   total disturbance.
//! * [`observers`]: bandwidth-parameterized LESOs and their error channels.
//! * [`control`]: tracking differentiator, state-error feedback, control laws.
//! * [`analysis`]: Lyapunov solutions, error bounds, metrics, noise.
//! * [`harness`]: scenarios, closed-loop runs, comparisons, CSV/SVG export.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod control;
pub mod harness;
pub mod observers;
pub mod ode;
pub mod plants;
