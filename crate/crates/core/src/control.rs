//! Tracking differentiator, state-error feedback and the two ADRC control
//! laws (conventional and nested).

use std::fmt;
use std::str::FromStr;

use crate::observers::{LesoConfig, NestedConfig};

/// `sign` with `sign(0) = 0`.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdConfig {
    /// Acceleration limit `R`.
    pub r: f64,
}

impl Default for TdConfig {
    fn default() -> Self {
        Self { r: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TdState {
    pub r1: f64,
    pub r2: f64,
}

/// Tracking differentiator:
///
/// ```text
/// dr1 = r2
/// dr2 = -R sign(r1 - r + r2 |r2| / (2R))
/// ```
pub fn td_deriv(state: TdState, r: f64, limit: f64) -> (f64, f64) {
    let s = state.r1 - r + state.r2 * state.r2.abs() / (2.0 * limit);
    (state.r2, -limit * sign(s))
}

/// Han's `fal`: linear inside `|e| <= delta`, power law `|e|^alpha sign(e)` outside.
pub fn fal(e: f64, alpha: f64, delta: f64) -> f64 {
    if e.abs() <= delta {
        e / delta.powf(1.0 - alpha)
    } else {
        e.abs().powf(alpha) * sign(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackLaw {
    NonlinearFal,
    LinearPd,
}

impl FeedbackLaw {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackLaw::NonlinearFal => "nonlinear-fal",
            FeedbackLaw::LinearPd => "linear-pd",
        }
    }
}

impl fmt::Display for FeedbackLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeedbackLaw {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nonlinear-fal" => Ok(FeedbackLaw::NonlinearFal),
            "linear-pd" => Ok(FeedbackLaw::LinearPd),
            other => Err(format!("unknown feedback law '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackConfig {
    pub law: FeedbackLaw,
    pub k1: f64,
    pub k2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta: f64,
}

impl FeedbackConfig {
    /// PD gains `k1 = wc^2`, `k2 = 2 wc` (closed-loop poles at `-wc`).
    pub fn linear_pd(wc: f64) -> Self {
        Self {
            law: FeedbackLaw::LinearPd,
            k1: wc * wc,
            k2: 2.0 * wc,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err("feedback gains k1, k2 must be positive".into());
        }
        for a in [self.alpha1, self.alpha2] {
            if !(a > 0.0 && a <= 1.0) {
                return Err(format!("fal exponent {a} must lie in (0, 1]"));
            }
        }
        if !(self.delta > 0.0) {
            return Err("fal delta must be positive".into());
        }
        Ok(())
    }
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        Self {
            law: FeedbackLaw::LinearPd,
            k1: 25.0,
            k2: 10.0,
            alpha1: 0.75,
            alpha2: 0.5,
            delta: 0.1,
        }
    }
}

pub fn state_error_feedback(e1: f64, e2: f64, cfg: &FeedbackConfig) -> f64 {
    match cfg.law {
        FeedbackLaw::LinearPd => cfg.k1 * e1 + cfg.k2 * e2,
        FeedbackLaw::NonlinearFal => {
            cfg.k1 * fal(e1, cfg.alpha1, cfg.delta) + cfg.k2 * fal(e2, cfg.alpha2, cfg.delta)
        }
    }
}

/// Conventional ADRC: cancel the inner disturbance estimate.
pub fn cadrc_control(u0: f64, xhat_np1: f64) -> f64 {
    u0 - xhat_np1
}

/// Nested ADRC. The outer estimate cancels the inner observer's residual,
/// giving the intermediate control `v`; the inner estimate then cancels the
/// total disturbance. Returns `(v, u)`.
pub fn nadrc_control(u0: f64, zhat_np1: f64, xhat_np1: f64) -> (f64, f64) {
    let v = u0 - zhat_np1;
    (v, v - xhat_np1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    Conventional,
    Nested,
}

impl VariantKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VariantKind::Conventional => "conventional",
            VariantKind::Nested => "nested",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VariantKind::Conventional => "C-ADRC",
            VariantKind::Nested => "N-ADRC",
        }
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conventional" => Ok(VariantKind::Conventional),
            "nested" => Ok(VariantKind::Nested),
            other => Err(format!("unknown variant '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObserverSetup {
    Single(LesoConfig),
    Nested(NestedConfig),
}

/// A fully specified controller.
#[derive(Debug, Clone, PartialEq)]
pub struct AdrcVariant {
    pub observers: ObserverSetup,
    pub feedback: FeedbackConfig,
    pub td: TdConfig,
}

impl AdrcVariant {
    pub fn kind(&self) -> VariantKind {
        match self.observers {
            ObserverSetup::Single(_) => VariantKind::Conventional,
            ObserverSetup::Nested(_) => VariantKind::Nested,
        }
    }

    pub fn inner(&self) -> &LesoConfig {
        match &self.observers {
            ObserverSetup::Single(c) => c,
            ObserverSetup::Nested(n) => &n.inner,
        }
    }

    pub fn outer(&self) -> Option<&LesoConfig> {
        match &self.observers {
            ObserverSetup::Single(_) => None,
            ObserverSetup::Nested(n) => Some(&n.outer),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn td_equilibrium() {
        assert_eq!(td_deriv(TdState { r1: 0.4, r2: 0.0 }, 0.4, 10.0), (0.0, 0.0));
    }

    #[test]
    fn td_pushes_towards_reference() {
        assert_eq!(td_deriv(TdState { r1: 1.0, r2: 0.0 }, 0.0, 1.0), (0.0, -1.0));
        assert_eq!(td_deriv(TdState { r1: 0.0, r2: 0.0 }, 1.0, 4.0), (0.0, 4.0));
    }

    #[test]
    fn fal_examples() {
        assert_eq!(fal(0.0, 0.5, 0.1), 0.0);
        assert!((fal(0.04, 0.5, 0.1) - 0.04 / 0.1f64.sqrt()).abs() < 1e-15);
        assert!((fal(0.04, 0.5, 0.1) - 0.126491).abs() < 1e-6);
        assert_eq!(fal(4.0, 0.5, 0.1), 2.0);
        assert_eq!(fal(-4.0, 0.5, 0.1), -2.0);
    }

    #[test]
    fn fal_continuous_at_threshold() {
        for (alpha, delta) in [(0.5, 0.1), (0.25, 0.01), (0.9, 2.0), (1.0, 0.3)] {
            for e in [delta, -delta] {
                let inside = fal(e, alpha, delta);
                let outside = e.abs().powf(alpha) * sign(e);
                assert!((inside - outside).abs() < 1e-12);
                let nudged = fal(e * (1.0 + 1e-13), alpha, delta);
                assert!((inside - nudged).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pd_feedback() {
        let cfg = FeedbackConfig { k1: 4.0, k2: 2.0, ..Default::default() };
        assert_eq!(state_error_feedback(0.5, -0.25, &cfg), 1.5);
        assert_eq!(state_error_feedback(0.0, 0.0, &cfg), 0.0);
        let nl = FeedbackConfig { law: FeedbackLaw::NonlinearFal, ..cfg };
        assert_eq!(state_error_feedback(0.0, 0.0, &nl), 0.0);
    }

    #[test]
    fn control_laws() {
        assert!((cadrc_control(0.5, 0.2) - 0.3).abs() < 1e-15);
        assert_eq!(cadrc_control(0.7, 0.0), 0.7);
        assert_eq!(cadrc_control(0.0, 1.0), -1.0);
        let (v, u) = nadrc_control(0.5, 0.1, 0.2);
        assert!((v - 0.4).abs() < 1e-15 && (u - 0.2).abs() < 1e-15);
        assert_eq!(nadrc_control(0.0, 0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn feedback_validation() {
        assert!(FeedbackConfig::default().validate().is_ok());
        assert!(FeedbackConfig { alpha1: 1.5, ..Default::default() }.validate().is_err());
        assert!(FeedbackConfig { alpha2: 0.0, ..Default::default() }.validate().is_err());
        assert!(FeedbackConfig { delta: 0.0, ..Default::default() }.validate().is_err());
        assert!(FeedbackConfig { k1: -1.0, ..Default::default() }.validate().is_err());
        let pd = FeedbackConfig::linear_pd(5.0);
        assert_eq!((pd.k1, pd.k2), (25.0, 10.0));
    }

    proptest! {
        #[test]
        fn fal_is_odd(e in -100.0f64..100.0, alpha in 0.05f64..=1.0, delta in 1e-3f64..10.0) {
            prop_assert_eq!(fal(-e, alpha, delta), -fal(e, alpha, delta));
        }

        #[test]
        fn fal_unit_exponent_is_identity(e in -100.0f64..100.0, delta in 1e-3f64..10.0) {
            prop_assert!((fal(e, 1.0, delta) - e).abs() <= 1e-12 * e.abs().max(1.0));
        }

        #[test]
        fn unit_exponent_fal_matches_pd(
            e1 in -10.0f64..10.0,
            e2 in -10.0f64..10.0,
            k1 in 0.1f64..100.0,
            k2 in 0.1f64..100.0,
            delta in 1e-3f64..5.0,
        ) {
            let pd = FeedbackConfig { law: FeedbackLaw::LinearPd, k1, k2, alpha1: 1.0, alpha2: 1.0, delta };
            let nl = FeedbackConfig { law: FeedbackLaw::NonlinearFal, ..pd };
            let a = state_error_feedback(e1, e2, &pd);
            let b = state_error_feedback(e1, e2, &nl);
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn nested_without_outer_estimate_is_conventional(u0 in -1e3f64..1e3, x in -1e3f64..1e3) {
            prop_assert_eq!(nadrc_control(u0, 0.0, x).1, cadrc_control(u0, x));
        }
    }
}
