//! Linear extended state observers (LESO) with bandwidth-parameterized gains,
//! and the nested inner/outer pair.
//!
//! For a plant of order `n` the observer carries `n + 1` estimates; the last
//! one is the extended state (the total disturbance for the inner observer,
//! the inner observer's residual for the outer one).

use thiserror::Error;

use crate::analysis::lyapunov::{companion_matrix, solve_lyapunov};
use crate::ode::SimulationTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObserverError {
    #[error("invalid observer configuration: {0}")]
    InvalidConfig(String),
    #[error("trace is missing channel '{0}'")]
    MissingChannel(String),
}

/// Binomial coefficient `C(n, k)` as a float; exact for the small orders used here.
fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Characteristic-polynomial coefficients `a_i = C(n+1, i)`, `i = 1..=n+1`:
/// the polynomial `(s + 1)^(n+1)` without its leading term.
pub fn binomial_coeffs(n: usize) -> Vec<f64> {
    (1..=n + 1).map(|i| binomial(n + 1, i)).collect()
}

/// Observer gains `beta_i = C(n+1, i) * omega0^i`, which place every observer
/// pole at `-omega0`.
pub fn bandwidth_gains(n: usize, omega0: f64) -> Result<Vec<f64>, ObserverError> {
    if n == 0 {
        return Err(ObserverError::InvalidConfig("order must be at least 1".into()));
    }
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(ObserverError::InvalidConfig(format!(
            "bandwidth must be positive, got {omega0}"
        )));
    }
    Ok(binomial_coeffs(n)
        .iter()
        .zip(1..)
        .map(|(a, i)| a * omega0.powi(i))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LesoConfig {
    n: usize,
    omega0: f64,
    coeffs: Vec<f64>,
    gains: Vec<f64>,
}

impl LesoConfig {
    /// Bandwidth-parameterized observer with binomial coefficients.
    pub fn bandwidth(n: usize, omega0: f64) -> Result<Self, ObserverError> {
        Self::with_coeffs(n, omega0, binomial_coeffs(n))
    }

    /// Observer with gains `beta_i = coeffs[i-1] * omega0^i`. The coefficients
    /// must make the companion matrix Hurwitz, which is checked by solving the
    /// Lyapunov equation for it.
    pub fn with_coeffs(n: usize, omega0: f64, coeffs: Vec<f64>) -> Result<Self, ObserverError> {
        if n == 0 {
            return Err(ObserverError::InvalidConfig("order must be at least 1".into()));
        }
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(ObserverError::InvalidConfig(format!(
                "bandwidth must be positive, got {omega0}"
            )));
        }
        if coeffs.len() != n + 1 {
            return Err(ObserverError::InvalidConfig(format!(
                "order {n} needs {} coefficients, got {}",
                n + 1,
                coeffs.len()
            )));
        }
        let a = companion_matrix(&coeffs)
            .map_err(|e| ObserverError::InvalidConfig(e.to_string()))?;
        solve_lyapunov(&a).map_err(|e| {
            ObserverError::InvalidConfig(format!("coefficients are not Hurwitz: {e}"))
        })?;
        let gains = coeffs
            .iter()
            .zip(1..)
            .map(|(a, i)| a * omega0.powi(i))
            .collect();
        Ok(Self {
            n,
            omega0,
            coeffs,
            gains,
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// Dimension of the observer state, `n + 1`.
    pub fn dim(&self) -> usize {
        self.n + 1
    }
}

/// Observer state `xhat_1..xhat_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LesoState {
    pub xhat: Vec<f64>,
}

impl LesoState {
    pub fn zeros(cfg: &LesoConfig) -> Self {
        Self {
            xhat: vec![0.0; cfg.dim()],
        }
    }

    /// The extended-state estimate.
    pub fn extended(&self) -> f64 {
        *self.xhat.last().expect("observer state is never empty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestedConfig {
    pub inner: LesoConfig,
    pub outer: LesoConfig,
}

impl NestedConfig {
    pub fn new(inner: LesoConfig, outer: LesoConfig) -> Result<Self, ObserverError> {
        if inner.order() != outer.order() {
            return Err(ObserverError::InvalidConfig(format!(
                "inner order {} differs from outer order {}",
                inner.order(),
                outer.order()
            )));
        }
        Ok(Self { inner, outer })
    }
}

/// Writes the LESO derivative into `out`:
///
/// ```text
/// dxhat_i     = xhat_{i+1} + beta_i (y - xhat_1)          i < n
/// dxhat_n     = xhat_{n+1} + u + beta_n (y - xhat_1)
/// dxhat_{n+1} = beta_{n+1} (y - xhat_1)
/// ```
pub fn leso_deriv_into(xhat: &[f64], y: f64, u: f64, gains: &[f64], out: &mut [f64]) {
    let m = xhat.len();
    debug_assert_eq!(gains.len(), m);
    let innovation = y - xhat[0];
    for i in 0..m - 1 {
        out[i] = xhat[i + 1] + gains[i] * innovation;
    }
    out[m - 2] += u;
    out[m - 1] = gains[m - 1] * innovation;
}

pub fn leso_deriv(state: &LesoState, y: f64, u: f64, cfg: &LesoConfig) -> Vec<f64> {
    assert_eq!(state.xhat.len(), cfg.dim(), "observer state dimension");
    let mut out = vec![0.0; cfg.dim()];
    leso_deriv_into(&state.xhat, y, u, cfg.gains(), &mut out);
    out
}

/// The outer observer has the inner structure, driven by the intermediate
/// control `v` and its own gains.
pub fn outer_leso_deriv(state: &LesoState, y: f64, v: f64, cfg: &LesoConfig) -> Vec<f64> {
    leso_deriv(state, y, v, cfg)
}

/// Estimation error channels derived from a simulation trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationErrors {
    /// `e_i = x_i - xhat_i`, with `x_{n+1}` the ground-truth total disturbance.
    pub inner: Vec<Vec<f64>>,
    /// `zeta_i = x_i - zhat_i`, where the outer extended state's truth is the
    /// inner residual `e_{n+1}`. Empty when the trace has no outer observer.
    pub outer: Vec<Vec<f64>>,
}

fn channel<'a>(trace: &'a SimulationTrace, name: &str) -> Result<&'a [f64], ObserverError> {
    trace
        .channel(name)
        .ok_or_else(|| ObserverError::MissingChannel(name.to_string()))
}

/// Computes `e_i` and (when `zhat*` channels are present) `zeta_i` from the
/// trace channels `x1..xn`, `xhat1..xhat{n+1}`, `zhat1..zhat{n+1}` and `L`.
pub fn estimation_errors(trace: &SimulationTrace) -> Result<EstimationErrors, ObserverError> {
    let m = (1..).take_while(|i| trace.has_channel(&format!("xhat{i}"))).count();
    if m < 2 {
        return Err(ObserverError::MissingChannel("xhat1".into()));
    }
    let n = m - 1;
    let mut truth: Vec<&[f64]> = (1..=n)
        .map(|i| channel(trace, &format!("x{i}")))
        .collect::<Result<_, _>>()?;
    truth.push(channel(trace, "L")?);

    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>();
    let mut inner = Vec::with_capacity(m);
    for (i, x) in truth.iter().enumerate() {
        inner.push(diff(x, channel(trace, &format!("xhat{}", i + 1))?));
    }

    let mut outer = Vec::new();
    if trace.has_channel("zhat1") {
        for (i, x) in truth.iter().enumerate().take(n) {
            outer.push(diff(x, channel(trace, &format!("zhat{}", i + 1))?));
        }
        outer.push(diff(&inner[n], channel(trace, &format!("zhat{m}"))?));
    }
    Ok(EstimationErrors { inner, outer })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gains_first_order() {
        assert_eq!(bandwidth_gains(1, 1.0).unwrap(), vec![2.0, 1.0]);
    }

    #[test]
    fn gains_second_order() {
        let g = bandwidth_gains(2, 10.0).unwrap();
        assert_eq!(g, vec![30.0, 300.0, 1000.0]);
    }

    #[test]
    fn gains_reject_zero_bandwidth() {
        assert!(bandwidth_gains(2, 0.0).is_err());
        assert!(bandwidth_gains(2, -3.0).is_err());
        assert!(bandwidth_gains(0, 3.0).is_err());
        assert!(LesoConfig::bandwidth(2, 0.0).is_err());
    }

    #[test]
    fn non_hurwitz_coefficients_rejected() {
        assert!(LesoConfig::with_coeffs(2, 10.0, vec![-3.0, 3.0, 1.0]).is_err());
        assert!(LesoConfig::with_coeffs(2, 10.0, vec![3.0, 3.0]).is_err());
    }

    #[test]
    fn leso_zero_innovation() {
        let cfg = LesoConfig::bandwidth(2, 10.0).unwrap();
        let st = LesoState { xhat: vec![0.7, 0.0, 0.0] };
        assert_eq!(leso_deriv(&st, 0.7, 0.0, &cfg), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn leso_innovation_scaled_by_gains() {
        let cfg = LesoConfig::bandwidth(2, 10.0).unwrap();
        let st = LesoState { xhat: vec![0.0, 0.0, 0.0] };
        let d = leso_deriv(&st, 0.1, 0.0, &cfg);
        for (a, b) in d.iter().zip([3.0, 30.0, 100.0]) {
            assert!((a - b).abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn leso_chain_term_and_input() {
        let cfg = LesoConfig::bandwidth(2, 10.0).unwrap();
        let st = LesoState { xhat: vec![0.0, 1.0, 0.0] };
        assert_eq!(leso_deriv(&st, 0.0, 0.0, &cfg), vec![1.0, 0.0, 0.0]);
        let st = LesoState { xhat: vec![0.0, 0.0, 0.5] };
        assert_eq!(leso_deriv(&st, 0.0, 2.0, &cfg), vec![0.0, 2.5, 0.0]);
    }

    #[test]
    fn outer_leso_examples() {
        let cfg = LesoConfig::bandwidth(2, 20.0).unwrap();
        assert_eq!(cfg.gains(), &[60.0, 1200.0, 8000.0]);
        let st = LesoState { xhat: vec![0.3, 0.0, 0.0] };
        assert_eq!(outer_leso_deriv(&st, 0.3, 0.0, &cfg), vec![0.0, 0.0, 0.0]);
        let st = LesoState { xhat: vec![0.0, 0.0, 0.0] };
        let d = outer_leso_deriv(&st, 0.05, 0.0, &cfg);
        for (a, b) in d.iter().zip([3.0, 60.0, 400.0]) {
            assert!((a - b).abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn inner_and_outer_agree_structurally() {
        let cfg = LesoConfig::bandwidth(3, 7.5).unwrap();
        let st = LesoState { xhat: vec![0.1, -0.4, 2.0, 0.3] };
        assert_eq!(
            leso_deriv(&st, 1.1, -0.6, &cfg),
            outer_leso_deriv(&st, 1.1, -0.6, &cfg)
        );
    }

    #[test]
    fn nested_requires_same_order() {
        let a = LesoConfig::bandwidth(2, 10.0).unwrap();
        let b = LesoConfig::bandwidth(3, 20.0).unwrap();
        assert!(NestedConfig::new(a.clone(), b).is_err());
        assert!(NestedConfig::new(a.clone(), a).is_ok());
    }

    fn trace_with(cols: &[(&str, Vec<f64>)]) -> SimulationTrace {
        let len = cols[0].1.len();
        let mut tr = SimulationTrace::new(cols.iter().map(|(n, _)| n.to_string()).collect());
        for k in 0..len {
            let row: Vec<f64> = cols.iter().map(|(_, c)| c[k]).collect();
            tr.push(k as f64, &row);
        }
        tr
    }

    #[test]
    fn errors_vanish_for_exact_estimates() {
        let x1 = vec![0.0, 0.5, 1.0];
        let x2 = vec![1.0, 1.0, 0.5];
        let l = vec![0.2, 0.1, 0.0];
        let tr = trace_with(&[
            ("x1", x1.clone()),
            ("x2", x2.clone()),
            ("L", l.clone()),
            ("xhat1", x1),
            ("xhat2", x2),
            ("xhat3", l),
        ]);
        let e = estimation_errors(&tr).unwrap();
        assert_eq!(e.inner.len(), 3);
        assert!(e.inner.iter().flatten().all(|&v| v == 0.0));
        assert!(e.outer.is_empty());
    }

    #[test]
    fn offset_estimate_gives_constant_error() {
        let x1 = vec![0.0, 0.5, 1.0];
        let tr = trace_with(&[
            ("x1", x1.clone()),
            ("x2", vec![0.0; 3]),
            ("L", vec![0.0; 3]),
            ("xhat1", x1.iter().map(|v| v + 0.5).collect()),
            ("xhat2", vec![0.0; 3]),
            ("xhat3", vec![0.0; 3]),
        ]);
        let e = estimation_errors(&tr).unwrap();
        assert!(e.inner[0].iter().all(|&v| v == -0.5));
    }

    #[test]
    fn outer_extended_error_is_residual_of_inner() {
        let tr = trace_with(&[
            ("x1", vec![1.0]),
            ("x2", vec![2.0]),
            ("L", vec![1.0]),
            ("xhat1", vec![1.0]),
            ("xhat2", vec![2.0]),
            ("xhat3", vec![0.75]),
            ("zhat1", vec![0.5]),
            ("zhat2", vec![2.0]),
            ("zhat3", vec![0.25]),
        ]);
        let e = estimation_errors(&tr).unwrap();
        assert_eq!(e.inner[2], vec![0.25]);
        assert_eq!(e.outer[0], vec![0.5]);
        assert_eq!(e.outer[1], vec![0.0]);
        assert_eq!(e.outer[2], vec![0.0]);
    }

    #[test]
    fn missing_ground_truth_is_reported() {
        let tr = trace_with(&[
            ("x1", vec![0.0]),
            ("x2", vec![0.0]),
            ("xhat1", vec![0.0]),
            ("xhat2", vec![0.0]),
            ("xhat3", vec![0.0]),
        ]);
        assert_eq!(
            estimation_errors(&tr).unwrap_err(),
            ObserverError::MissingChannel("L".into())
        );
    }
}
