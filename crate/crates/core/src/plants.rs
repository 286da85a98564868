//! Benchmark second-order plant, exogenous signals and the ground-truth
//! total disturbance.
//!
//! The plant is
//!
//! ```text
//! dx1 = x2
//! dx2 = a1*x1 + a2*sin(x2) + w(t) + (1 + a3*sin(t)) * u
//! y   = x1
//! ```

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Cosine,
    ExpCosine,
    Constant,
    Zero,
}

impl SignalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::Cosine => "cosine",
            SignalKind::ExpCosine => "exp-cosine",
            SignalKind::Constant => "constant",
            SignalKind::Zero => "zero",
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(SignalKind::Cosine),
            "exp-cosine" => Ok(SignalKind::ExpCosine),
            "constant" => Ok(SignalKind::Constant),
            "zero" => Ok(SignalKind::Zero),
            other => Err(format!("unknown signal kind '{other}'")),
        }
    }
}

/// A scalar time signal.
///
/// * `cosine`: `offset + amplitude * cos(frequency * t)`
/// * `exp-cosine`: `offset + amplitude * exp(-t) * cos(frequency * t)`
/// * `constant`: `offset + amplitude`
/// * `zero`: identically zero
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub amplitude: f64,
    /// rad/s
    pub frequency: f64,
    pub offset: f64,
}

impl SignalSpec {
    pub const fn zero() -> Self {
        Self {
            kind: SignalKind::Zero,
            amplitude: 0.0,
            frequency: 0.0,
            offset: 0.0,
        }
    }

    /// `cos(0.5 t)`
    pub const fn benchmark_reference() -> Self {
        Self {
            kind: SignalKind::Cosine,
            amplitude: 1.0,
            frequency: 0.5,
            offset: 0.0,
        }
    }

    /// `exp(-t) cos(t)`
    pub const fn benchmark_disturbance() -> Self {
        Self {
            kind: SignalKind::ExpCosine,
            amplitude: 1.0,
            frequency: 1.0,
            offset: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            SignalKind::Cosine => self.offset + self.amplitude * (self.frequency * t).cos(),
            SignalKind::ExpCosine => {
                self.offset + self.amplitude * (-t).exp() * (self.frequency * t).cos()
            }
            SignalKind::Constant => self.offset + self.amplitude,
            SignalKind::Zero => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.frequency >= 0.0) {
            return Err("frequency must be non-negative".into());
        }
        if !(self.amplitude.is_finite() && self.frequency.is_finite() && self.offset.is_finite()) {
            return Err("signal parameters must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    /// Linear state gain in `f(x1, x2)`.
    pub a1: f64,
    /// Sinusoidal state gain in `f(x1, x2)`.
    pub a2: f64,
    /// Input-gain perturbation amplitude; the effective gain is `1 + a3 sin t`.
    pub a3: f64,
    pub disturbance_on: bool,
    /// Exogenous disturbance `w(t)` applied when `disturbance_on` is set.
    pub disturbance: SignalSpec,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            a1: 0.2,
            a2: 0.1,
            a3: 0.2,
            disturbance_on: true,
            disturbance: SignalSpec::benchmark_disturbance(),
        }
    }
}

impl PlantParams {
    /// Pure double integrator: no nonlinearity, no disturbance, unit input gain.
    pub fn double_integrator() -> Self {
        Self {
            a1: 0.0,
            a2: 0.0,
            a3: 0.0,
            disturbance_on: false,
            disturbance: SignalSpec::zero(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.a1.is_finite() && self.a2.is_finite() && self.a3.is_finite()) {
            return Err("plant gains must be finite".into());
        }
        if !(self.a3 > -1.0 && self.a3 < 1.0) {
            return Err(format!(
                "a3 = {} must lie in (-1, 1) so the input gain never vanishes",
                self.a3
            ));
        }
        self.disturbance.validate()
    }

    pub fn w(&self, t: f64) -> f64 {
        if self.disturbance_on {
            self.disturbance.eval(t)
        } else {
            0.0
        }
    }

    /// `f(x1, x2) = a1 x1 + a2 sin(x2)`
    pub fn nonlinearity(&self, x1: f64, x2: f64) -> f64 {
        self.a1 * x1 + self.a2 * x2.sin()
    }

    pub fn input_gain(&self, t: f64) -> f64 {
        1.0 + self.a3 * t.sin()
    }
}

/// `w(t) = exp(-t) cos(t)`
pub fn exogenous_disturbance(t: f64) -> f64 {
    (-t).exp() * t.cos()
}

/// `r(t) = cos(0.5 t)`
pub fn reference(t: f64) -> f64 {
    (0.5 * t).cos()
}

pub fn benchmark_plant_deriv(t: f64, x: [f64; 2], u: f64, p: &PlantParams) -> [f64; 2] {
    [
        x[1],
        p.nonlinearity(x[0], x[1]) + p.w(t) + p.input_gain(t) * u,
    ]
}

/// Ground truth for the extended state: everything in `dx2` other than the
/// nominal unit-gain input, `f + w + a3 sin(t) u`.
pub fn total_disturbance(t: f64, x: [f64; 2], u: f64, p: &PlantParams) -> f64 {
    p.nonlinearity(x[0], x[1]) + p.w(t) + p.a3 * t.sin() * u
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn no_dist() -> PlantParams {
        PlantParams {
            disturbance_on: false,
            ..Default::default()
        }
    }

    #[test]
    fn plant_origin_is_equilibrium_without_disturbance() {
        assert_eq!(benchmark_plant_deriv(0.0, [0.0, 0.0], 0.0, &no_dist()), [0.0, 0.0]);
    }

    #[test]
    fn plant_sees_disturbance_at_origin() {
        let d = benchmark_plant_deriv(0.0, [0.0, 0.0], 0.0, &PlantParams::default());
        assert_eq!(d, [0.0, 1.0]);
    }

    #[test]
    fn plant_linear_term() {
        let d = benchmark_plant_deriv(0.0, [1.0, 0.0], 0.0, &no_dist());
        assert!((d[0]).abs() < 1e-15);
        assert!((d[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn disturbance_values() {
        assert_eq!(exogenous_disturbance(0.0), 1.0);
        assert!(exogenous_disturbance(FRAC_PI_2).abs() < 1e-16);
        assert!(exogenous_disturbance(50.0).abs() < 1e-21);
        let spec = SignalSpec::benchmark_disturbance();
        for t in [0.0, 0.3, 1.7, 4.0] {
            assert_eq!(spec.eval(t), exogenous_disturbance(t));
        }
    }

    #[test]
    fn reference_values() {
        assert_eq!(reference(0.0), 1.0);
        assert!(reference(PI).abs() < 1e-15);
        assert!((reference(2.0 * PI) + 1.0).abs() < 1e-15);
        assert_eq!(SignalSpec::benchmark_reference().eval(1.3), reference(1.3));
    }

    #[test]
    fn total_disturbance_values() {
        let p = PlantParams::default();
        assert_eq!(total_disturbance(0.0, [0.0, 0.0], 0.0, &p), 1.0);
        assert_eq!(total_disturbance(0.0, [0.0, 0.0], 0.0, &no_dist()), 0.0);
        let l = total_disturbance(FRAC_PI_2, [0.0, 0.0], 1.0, &p);
        assert!((l - 0.2).abs() < 1e-15);
    }

    #[test]
    fn a3_must_keep_gain_positive() {
        let p = PlantParams { a3: 1.5, ..Default::default() };
        assert!(p.validate().is_err());
        let p = PlantParams { a3: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
        assert!(PlantParams::default().validate().is_ok());
    }

    #[test]
    fn signal_kind_round_trip() {
        for k in [SignalKind::Cosine, SignalKind::ExpCosine, SignalKind::Constant, SignalKind::Zero] {
            assert_eq!(k.as_str().parse::<SignalKind>().unwrap(), k);
        }
        assert!("square".parse::<SignalKind>().is_err());
    }

    proptest! {
        #[test]
        fn ground_truth_matches_dynamics(
            t in 0.0f64..50.0,
            x1 in -10.0f64..10.0,
            x2 in -10.0f64..10.0,
            u in -50.0f64..50.0,
            a3 in -0.9f64..0.9,
            on in any::<bool>(),
        ) {
            let p = PlantParams { a3, disturbance_on: on, ..Default::default() };
            let d = benchmark_plant_deriv(t, [x1, x2], u, &p);
            let l = total_disturbance(t, [x1, x2], u, &p);
            prop_assert!((d[1] - u - l).abs() <= 1e-12 * (1.0 + u.abs() + l.abs()));
        }

        #[test]
        fn disturbance_envelope(t in 0.0f64..100.0) {
            prop_assert!(exogenous_disturbance(t).abs() <= (-t).exp());
        }
    }
}
