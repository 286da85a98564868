//! Scenario documents: a flat `key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! name = benchmark
//! variant = nested
//! plant.a3 = 0.2
//! observer.inner.omega0 = 10
//! ```
//!
//! Every key is optional; missing keys take the defaults of
//! [`Scenario::default`]. Unknown keys, duplicate keys, malformed values and
//! invariant violations are all rejected with the offending key named.

use std::fmt::Write as _;

use thiserror::Error;

use crate::control::{
    AdrcVariant, FeedbackConfig, FeedbackLaw, ObserverSetup, TdConfig, VariantKind,
};
use crate::observers::{binomial_coeffs, LesoConfig, NestedConfig};
use crate::ode::{IntegratorConfig, Method};
use crate::plants::{PlantParams, SignalKind, SignalSpec};

/// Order of the benchmark plant, and hence of both observers.
pub const PLANT_ORDER: usize = 2;

/// The committed benchmark scenario file.
pub const BENCHMARK_SCENARIO: &str = include_str!("../../../../scenarios/benchmark.scn");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: expected 'key = value'")]
    Syntax { line: usize },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key '{key}' given twice")]
    DuplicateKey { key: String, line: usize },
    #[error("key '{key}': cannot read '{value}' as {expected}")]
    TypeMismatch {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("key '{key}': {reason}")]
    Invalid { key: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub variance: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            variance: 1e-4,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverTuning {
    pub omega0: f64,
    pub coeffs: Vec<f64>,
}

impl ObserverTuning {
    pub fn bandwidth(omega0: f64) -> Self {
        Self {
            omega0,
            coeffs: binomial_coeffs(PLANT_ORDER),
        }
    }

    pub fn config(&self) -> Result<LesoConfig, String> {
        LesoConfig::with_coeffs(PLANT_ORDER, self.omega0, self.coeffs.clone())
            .map_err(|e| e.to_string())
    }
}

/// One complete simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub variant: VariantKind,
    pub plant: PlantParams,
    /// Plant initial state `(x1, x2)`.
    pub initial_state: [f64; 2],
    pub reference: SignalSpec,
    pub inner: ObserverTuning,
    /// Used by the nested variant only.
    pub outer: ObserverTuning,
    pub feedback: FeedbackConfig,
    pub td: TdConfig,
    pub integrator: IntegratorConfig,
    /// Seconds.
    pub horizon: f64,
    pub noise: NoiseConfig,
    /// Spacing of the recorded trace and of the noise samples, seconds.
    pub output_grid_step: f64,
}

impl Default for Scenario {
    /// The benchmark setup with the repository's committed tuning.
    fn default() -> Self {
        Self {
            name: "benchmark".into(),
            variant: VariantKind::Conventional,
            plant: PlantParams::default(),
            initial_state: [0.0, 0.0],
            reference: SignalSpec::benchmark_reference(),
            inner: ObserverTuning::bandwidth(3.0),
            outer: ObserverTuning::bandwidth(10.0),
            feedback: FeedbackConfig::linear_pd(5.0),
            td: TdConfig { r: 10.0 },
            integrator: IntegratorConfig::default(),
            horizon: 20.0,
            noise: NoiseConfig::default(),
            output_grid_step: 1e-3,
        }
    }
}

impl Scenario {
    pub fn with_variant(&self, variant: VariantKind) -> Self {
        Self {
            variant,
            ..self.clone()
        }
    }

    pub fn with_noise(&self, enabled: bool) -> Self {
        let mut s = self.clone();
        s.noise.enabled = enabled;
        s
    }

    /// Controller assembled from the tuning for the selected variant.
    pub fn adrc_variant(&self) -> Result<AdrcVariant, ScenarioError> {
        let inner = self.inner.config().map_err(|reason| ScenarioError::Invalid {
            key: "observer.inner".into(),
            reason,
        })?;
        let observers = match self.variant {
            VariantKind::Conventional => ObserverSetup::Single(inner),
            VariantKind::Nested => {
                let outer = self.outer.config().map_err(|reason| ScenarioError::Invalid {
                    key: "observer.outer".into(),
                    reason,
                })?;
                ObserverSetup::Nested(NestedConfig::new(inner, outer).map_err(|e| {
                    ScenarioError::Invalid {
                        key: "observer.outer".into(),
                        reason: e.to_string(),
                    }
                })?)
            }
        };
        Ok(AdrcVariant {
            observers,
            feedback: self.feedback,
            td: self.td,
        })
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |key: &str, reason: String| ScenarioError::Invalid {
            key: key.into(),
            reason,
        };
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", "must be positive".into()));
        }
        if !(self.output_grid_step > 0.0) {
            return Err(invalid("output_grid_step", "must be positive".into()));
        }
        for (key, v) in [
            ("plant.a1", self.plant.a1),
            ("plant.a2", self.plant.a2),
            ("plant.a3", self.plant.a3),
            ("plant.x1_0", self.initial_state[0]),
            ("plant.x2_0", self.initial_state[1]),
        ] {
            if !v.is_finite() {
                return Err(invalid(key, "must be finite".into()));
            }
        }
        if !(self.plant.a3 > -1.0 && self.plant.a3 < 1.0) {
            return Err(invalid(
                "plant.a3",
                format!("{} outside (-1, 1); the input gain 1 + a3 sin t could vanish", self.plant.a3),
            ));
        }
        self.plant
            .disturbance
            .validate()
            .map_err(|r| invalid("disturbance.frequency", r))?;
        self.reference
            .validate()
            .map_err(|r| invalid("reference.frequency", r))?;
        for (prefix, tuning) in [("observer.inner", &self.inner), ("observer.outer", &self.outer)] {
            if !(tuning.omega0 > 0.0 && tuning.omega0.is_finite()) {
                return Err(invalid(&format!("{prefix}.omega0"), "must be positive".into()));
            }
            tuning
                .config()
                .map_err(|r| invalid(&format!("{prefix}.coeffs"), r))?;
        }
        let f = &self.feedback;
        let i = &self.integrator;
        for (key, v) in [
            ("feedback.k1", f.k1),
            ("feedback.k2", f.k2),
            ("feedback.delta", f.delta),
            ("td.r", self.td.r),
            ("integrator.step", i.step),
            ("integrator.abs_tol", i.abs_tol),
            ("integrator.rel_tol", i.rel_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, format!("{v} must be positive")));
            }
        }
        for (key, v) in [("feedback.alpha1", f.alpha1), ("feedback.alpha2", f.alpha2)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(key, format!("{v} must lie in (0, 1]")));
            }
        }
        if !(i.max_step >= i.step) {
            return Err(invalid("integrator.max_step", "must be at least integrator.step".into()));
        }
        f.validate().map_err(|r| invalid("feedback", r))?;
        i.validate().map_err(|r| invalid("integrator", r))?;
        if !(self.noise.variance >= 0.0 && self.noise.variance.is_finite()) {
            return Err(invalid("noise.variance", "must be non-negative".into()));
        }
        Ok(())
    }

    /// Writes every key; `parse_scenario(&s.to_document())` reproduces `s`.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let coeffs = |c: &[f64]| c.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        kv("name", self.name.clone());
        kv("variant", self.variant.to_string());
        kv("horizon", self.horizon.to_string());
        kv("output_grid_step", self.output_grid_step.to_string());
        kv("plant.a1", self.plant.a1.to_string());
        kv("plant.a2", self.plant.a2.to_string());
        kv("plant.a3", self.plant.a3.to_string());
        kv("plant.disturbance_on", self.plant.disturbance_on.to_string());
        kv("plant.x1_0", self.initial_state[0].to_string());
        kv("plant.x2_0", self.initial_state[1].to_string());
        for (prefix, s) in [("disturbance", &self.plant.disturbance), ("reference", &self.reference)] {
            kv(&format!("{prefix}.kind"), s.kind.to_string());
            kv(&format!("{prefix}.amplitude"), s.amplitude.to_string());
            kv(&format!("{prefix}.frequency"), s.frequency.to_string());
            kv(&format!("{prefix}.offset"), s.offset.to_string());
        }
        kv("observer.inner.omega0", self.inner.omega0.to_string());
        kv("observer.inner.coeffs", coeffs(&self.inner.coeffs));
        kv("observer.outer.omega0", self.outer.omega0.to_string());
        kv("observer.outer.coeffs", coeffs(&self.outer.coeffs));
        kv("feedback.law", self.feedback.law.to_string());
        kv("feedback.k1", self.feedback.k1.to_string());
        kv("feedback.k2", self.feedback.k2.to_string());
        kv("feedback.alpha1", self.feedback.alpha1.to_string());
        kv("feedback.alpha2", self.feedback.alpha2.to_string());
        kv("feedback.delta", self.feedback.delta.to_string());
        kv("td.r", self.td.r.to_string());
        kv("integrator.method", self.integrator.method.as_str().to_string());
        kv("integrator.step", self.integrator.step.to_string());
        kv("integrator.abs_tol", self.integrator.abs_tol.to_string());
        kv("integrator.rel_tol", self.integrator.rel_tol.to_string());
        kv("integrator.max_step", self.integrator.max_step.to_string());
        kv("noise.enabled", self.noise.enabled.to_string());
        kv("noise.variance", self.noise.variance.to_string());
        kv("noise.seed", self.noise.seed.to_string());
        out
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ScenarioError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ScenarioError::TypeMismatch {
            key: key.into(),
            value: value.into(),
            expected: "a finite number",
        })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ScenarioError> {
    match value {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(ScenarioError::TypeMismatch {
            key: key.into(),
            value: value.into(),
            expected: "a boolean (true/false)",
        }),
    }
}

fn parse_enum<T: std::str::FromStr>(
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<T, ScenarioError> {
    value.parse().map_err(|_| ScenarioError::TypeMismatch {
        key: key.into(),
        value: value.into(),
        expected,
    })
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ScenarioError> {
    value
        .split(',')
        .map(|s| parse_f64(key, s.trim()))
        .collect()
}

fn set_signal(spec: &mut SignalSpec, field: &str, key: &str, value: &str) -> Result<bool, ScenarioError> {
    match field {
        "kind" => {
            spec.kind = parse_enum::<SignalKind>(key, value, "cosine|exp-cosine|constant|zero")?
        }
        "amplitude" => spec.amplitude = parse_f64(key, value)?,
        "frequency" => spec.frequency = parse_f64(key, value)?,
        "offset" => spec.offset = parse_f64(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn apply(s: &mut Scenario, key: &str, value: &str) -> Result<bool, ScenarioError> {
    let f = |v: &str| parse_f64(key, v);
    match key {
        "name" => s.name = value.to_string(),
        "variant" => s.variant = parse_enum(key, value, "conventional|nested")?,
        "horizon" => s.horizon = f(value)?,
        "output_grid_step" => s.output_grid_step = f(value)?,
        "plant.a1" => s.plant.a1 = f(value)?,
        "plant.a2" => s.plant.a2 = f(value)?,
        "plant.a3" => s.plant.a3 = f(value)?,
        "plant.disturbance_on" => s.plant.disturbance_on = parse_bool(key, value)?,
        "plant.x1_0" => s.initial_state[0] = f(value)?,
        "plant.x2_0" => s.initial_state[1] = f(value)?,
        "observer.inner.omega0" => s.inner.omega0 = f(value)?,
        "observer.inner.coeffs" => s.inner.coeffs = parse_list(key, value)?,
        "observer.outer.omega0" => s.outer.omega0 = f(value)?,
        "observer.outer.coeffs" => s.outer.coeffs = parse_list(key, value)?,
        "feedback.law" => s.feedback.law = parse_enum::<FeedbackLaw>(key, value, "linear-pd|nonlinear-fal")?,
        "feedback.k1" => s.feedback.k1 = f(value)?,
        "feedback.k2" => s.feedback.k2 = f(value)?,
        "feedback.alpha1" => s.feedback.alpha1 = f(value)?,
        "feedback.alpha2" => s.feedback.alpha2 = f(value)?,
        "feedback.delta" => s.feedback.delta = f(value)?,
        "td.r" => s.td.r = f(value)?,
        "integrator.method" => {
            s.integrator.method = parse_enum::<Method>(key, value, "fixed-rk4|adaptive-rk45")?
        }
        "integrator.step" => s.integrator.step = f(value)?,
        "integrator.abs_tol" => s.integrator.abs_tol = f(value)?,
        "integrator.rel_tol" => s.integrator.rel_tol = f(value)?,
        "integrator.max_step" => s.integrator.max_step = f(value)?,
        "noise.enabled" => s.noise.enabled = parse_bool(key, value)?,
        "noise.variance" => s.noise.variance = f(value)?,
        "noise.seed" => {
            s.noise.seed = value.parse().map_err(|_| ScenarioError::TypeMismatch {
                key: key.into(),
                value: value.into(),
                expected: "an unsigned integer",
            })?
        }
        _ => {
            if let Some(field) = key.strip_prefix("disturbance.") {
                return set_signal(&mut s.plant.disturbance, field, key, value);
            }
            if let Some(field) = key.strip_prefix("reference.") {
                return set_signal(&mut s.reference, field, key, value);
            }
            return Ok(false);
        }
    }
    Ok(true)
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut scenario = Scenario::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .filter(|(k, v)| !k.is_empty() && !v.is_empty())
            .ok_or(ScenarioError::Syntax { line: line_no })?;
        if seen.iter().any(|k| k == key) {
            return Err(ScenarioError::DuplicateKey {
                key: key.into(),
                line: line_no,
            });
        }
        if !apply(&mut scenario, key, value)? {
            return Err(ScenarioError::UnknownKey {
                key: key.into(),
                line: line_no,
            });
        }
        seen.push(key.to_string());
    }
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_fills_defaults() {
        let s = parse_scenario("variant = conventional\n").unwrap();
        assert_eq!(s, Scenario::default());
        let s = parse_scenario("# only a comment\nvariant=nested").unwrap();
        assert_eq!(s.variant, VariantKind::Nested);
        assert_eq!(s.inner, Scenario::default().inner);
    }

    #[test]
    fn rejects_vanishing_input_gain() {
        let err = parse_scenario("plant.a3 = 1.5").unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { ref key, .. } if key == "plant.a3"), "{err}");
    }

    #[test]
    #[allow(clippy::field_reassign_with_default)]
    fn round_trip() {
        let mut s = Scenario::default();
        s.name = "custom".into();
        s.variant = VariantKind::Nested;
        s.plant.a3 = -0.35;
        s.noise.enabled = true;
        s.noise.seed = 7;
        s.feedback.law = FeedbackLaw::NonlinearFal;
        s.integrator.method = Method::AdaptiveRk45;
        s.reference.offset = 0.1;
        s.outer.omega0 = 12.5;
        let doc = s.to_document();
        let back = parse_scenario(&doc).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_document(), doc);
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse_scenario("plant.a4 = 1").unwrap_err();
        assert_eq!(e, ScenarioError::UnknownKey { key: "plant.a4".into(), line: 1 });
        let e = parse_scenario("horizon = soon").unwrap_err();
        assert!(matches!(e, ScenarioError::TypeMismatch { ref key, .. } if key == "horizon"));
        let e = parse_scenario("horizon = -1").unwrap_err();
        assert!(matches!(e, ScenarioError::Invalid { ref key, .. } if key == "horizon"));
        let e = parse_scenario("noise.enabled = maybe").unwrap_err();
        assert!(matches!(e, ScenarioError::TypeMismatch { ref key, .. } if key == "noise.enabled"));
        let e = parse_scenario("observer.inner.omega0 = 0").unwrap_err();
        assert!(matches!(e, ScenarioError::Invalid { ref key, .. } if key == "observer.inner.omega0"));
        let e = parse_scenario("td.r = 1\ntd.r = 2").unwrap_err();
        assert_eq!(e, ScenarioError::DuplicateKey { key: "td.r".into(), line: 2 });
        let e = parse_scenario("just words").unwrap_err();
        assert_eq!(e, ScenarioError::Syntax { line: 1 });
        let e = parse_scenario("reference.phase = 1").unwrap_err();
        assert!(matches!(e, ScenarioError::UnknownKey { .. }));
        let e = parse_scenario("observer.outer.coeffs = 1, -3, 1").unwrap_err();
        assert!(matches!(e, ScenarioError::Invalid { ref key, .. } if key == "observer.outer.coeffs"));
    }

    #[test]
    fn adrc_variant_follows_kind() {
        let s = Scenario::default();
        assert_eq!(s.adrc_variant().unwrap().kind(), VariantKind::Conventional);
        let n = s.with_variant(VariantKind::Nested).adrc_variant().unwrap();
        assert_eq!(n.kind(), VariantKind::Nested);
        assert_eq!(n.outer().unwrap().omega0(), 10.0);
    }

    #[test]
    fn committed_file_is_the_default() {
        assert_eq!(parse_scenario(BENCHMARK_SCENARIO).unwrap(), Scenario::default());
    }

}
