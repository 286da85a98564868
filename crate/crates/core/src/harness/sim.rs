//! Closed-loop simulation: plant, tracking differentiator, inner observer and
//! (for the nested variant) outer observer integrated as one ODE.

use thiserror::Error;

use crate::analysis::metrics::{itae, isu, Metrics, MetricsError};
use crate::analysis::noise::{gaussian_noise, SampledSignal};
use crate::control::{
    cadrc_control, nadrc_control, state_error_feedback, td_deriv, AdrcVariant, FeedbackConfig,
    TdState, VariantKind,
};
use crate::observers::{estimation_errors, leso_deriv_into, ObserverError};
use crate::ode::{integrate, uniform_grid, IntegrationError, OdeSystem, Recorder, SimulationTrace, StateVector};
use crate::plants::{benchmark_plant_deriv, total_disturbance, PlantParams, SignalSpec};

use super::scenario::{Scenario, ScenarioError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("integration failed: {0}")]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

// State layout.
const X1: usize = 0;
const X2: usize = 1;
const R1: usize = 2;
const R2: usize = 3;
const XHAT: usize = 4;
const ZHAT: usize = 7;
const OBS: usize = 3;

/// Algebraic signals at one instant.
#[derive(Debug, Clone, Copy)]
struct Signals {
    r: f64,
    y: f64,
    u0: f64,
    v: f64,
    u: f64,
}

/// The augmented closed-loop vector field.
pub struct ClosedLoop {
    plant: PlantParams,
    reference: SignalSpec,
    feedback: FeedbackConfig,
    td_limit: f64,
    inner_gains: Vec<f64>,
    outer_gains: Option<Vec<f64>>,
    noise: Option<SampledSignal>,
}

impl ClosedLoop {
    pub fn new(
        plant: PlantParams,
        reference: SignalSpec,
        variant: &AdrcVariant,
        noise: Option<SampledSignal>,
    ) -> Self {
        Self {
            plant,
            reference,
            feedback: variant.feedback,
            td_limit: variant.td.r,
            inner_gains: variant.inner().gains().to_vec(),
            outer_gains: variant.outer().map(|c| c.gains().to_vec()),
            noise,
        }
    }

    pub fn kind(&self) -> VariantKind {
        if self.outer_gains.is_some() {
            VariantKind::Nested
        } else {
            VariantKind::Conventional
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind() {
            VariantKind::Conventional => ZHAT,
            VariantKind::Nested => ZHAT + OBS,
        }
    }

    /// Initial state: plant at `x0`, TD and observers at rest at zero.
    pub fn initial_state(&self, x0: [f64; 2]) -> Vec<f64> {
        let mut s = vec![0.0; self.dim()];
        s[X1] = x0[0];
        s[X2] = x0[1];
        s
    }

    fn signals(&self, t: f64, s: &[f64]) -> Signals {
        let r = self.reference.eval(t);
        let y = s[X1] + self.noise.as_ref().map_or(0.0, |n| n.eval(t));
        let xhat_ext = s[XHAT + 2];
        match self.kind() {
            VariantKind::Conventional => {
                let u0 = state_error_feedback(s[R1] - s[XHAT], s[R2] - s[XHAT + 1], &self.feedback);
                Signals { r, y, u0, v: u0, u: cadrc_control(u0, xhat_ext) }
            }
            VariantKind::Nested => {
                let u0 = state_error_feedback(s[R1] - s[ZHAT], s[R2] - s[ZHAT + 1], &self.feedback);
                let (v, u) = nadrc_control(u0, s[ZHAT + 2], xhat_ext);
                Signals { r, y, u0, v, u }
            }
        }
    }
}

impl OdeSystem for ClosedLoop {
    fn deriv(&self, t: f64, s: &[f64], dx: &mut [f64]) {
        let sig = self.signals(t, s);
        let [d1, d2] = benchmark_plant_deriv(t, [s[X1], s[X2]], sig.u, &self.plant);
        dx[X1] = d1;
        dx[X2] = d2;
        let (dr1, dr2) = td_deriv(TdState { r1: s[R1], r2: s[R2] }, sig.r, self.td_limit);
        dx[R1] = dr1;
        dx[R2] = dr2;
        leso_deriv_into(
            &s[XHAT..XHAT + OBS],
            sig.y,
            sig.u,
            &self.inner_gains,
            &mut dx[XHAT..XHAT + OBS],
        );
        if let Some(g) = &self.outer_gains {
            leso_deriv_into(&s[ZHAT..ZHAT + OBS], sig.y, sig.v, g, &mut dx[ZHAT..ZHAT + OBS]);
        }
    }
}

impl Recorder for ClosedLoop {
    fn channel_names(&self, _dim: usize) -> Vec<String> {
        let mut names: Vec<String> = ["r", "r1", "r2", "x1", "x2", "y", "xhat1", "xhat2", "xhat3"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        if self.kind() == VariantKind::Nested {
            names.extend(["zhat1", "zhat2", "zhat3"].map(String::from));
        }
        names.push("u0".into());
        if self.kind() == VariantKind::Nested {
            names.push("v".into());
        }
        names.extend(["u", "w", "L"].map(String::from));
        names
    }

    fn record(&self, t: f64, s: &[f64], out: &mut Vec<f64>) {
        let sig = self.signals(t, s);
        out.extend_from_slice(&[sig.r, s[R1], s[R2], s[X1], s[X2], sig.y]);
        out.extend_from_slice(&s[XHAT..XHAT + OBS]);
        if self.kind() == VariantKind::Nested {
            out.extend_from_slice(&s[ZHAT..ZHAT + OBS]);
        }
        out.push(sig.u0);
        if self.kind() == VariantKind::Nested {
            out.push(sig.v);
        }
        out.push(sig.u);
        out.push(self.plant.w(t));
        out.push(total_disturbance(t, [s[X1], s[X2]], sig.u, &self.plant));
    }
}

/// ITAE of the disturbance estimation errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    /// Inner observer, `e3 = L - xhat3`.
    pub itae_e3: f64,
    /// Nested pair, `zeta3 = e3 - zhat3`; `None` for the conventional variant.
    pub itae_zeta3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub name: String,
    pub variant: VariantKind,
    pub noisy: bool,
    pub trace: SimulationTrace,
    pub metrics: Metrics,
    pub error_metrics: ErrorMetrics,
}

/// Integrates a scenario and computes its metrics on the output grid.
///
/// Recorded channels: `r r1 r2 x1 x2 y xhat1..3 [zhat1..3] u0 [v] u w L`,
/// followed by the derived `err = r - x1`, `e1..e3` and `[zeta1..3]`.
pub fn run_scenario(s: &Scenario) -> Result<RunResult, RunError> {
    s.validate()?;
    let variant = s.adrc_variant()?;
    if s.horizon < s.output_grid_step {
        return Err(ScenarioError::Invalid {
            key: "horizon".into(),
            reason: format!(
                "horizon {} is shorter than one output step {}",
                s.horizon, s.output_grid_step
            ),
        }
        .into());
    }
    let noise = s.noise.enabled.then(|| {
        let grid = uniform_grid(0.0, s.horizon, s.output_grid_step);
        let samples = gaussian_noise(s.noise.seed, s.noise.variance, &grid);
        SampledSignal::new(grid, samples)
    });
    let sys = ClosedLoop::new(s.plant, s.reference, &variant, noise);
    let x0 = StateVector::new(0.0, sys.initial_state(s.initial_state));
    let mut trace = integrate(&sys, &x0, s.horizon, &s.integrator, Some(s.output_grid_step), &sys)?;

    let grid = trace.grid().to_vec();
    let r = trace.channel("r").expect("recorded");
    let x1 = trace.channel("x1").expect("recorded");
    let err: Vec<f64> = r.iter().zip(x1).map(|(a, b)| a - b).collect();
    let errors = estimation_errors(&trace)?;
    trace.add_channel("err", err);
    for (i, e) in errors.inner.into_iter().enumerate() {
        trace.add_channel(format!("e{}", i + 1), e);
    }
    for (i, z) in errors.outer.into_iter().enumerate() {
        trace.add_channel(format!("zeta{}", i + 1), z);
    }

    let tracking = itae(trace.channel("err").expect("added"), &grid, 0.0)?;
    let energy = isu(trace.channel("u").expect("recorded"), &grid)?;
    let mut per_channel = Vec::new();
    for name in ["e1", "e2", "e3", "zeta1", "zeta2", "zeta3"] {
        if let Some(c) = trace.channel(name) {
            per_channel.push((name.to_string(), itae(c, &grid, 0.0)?));
        }
    }
    let metrics = Metrics {
        itae: tracking,
        isu: energy,
        per_channel,
    };
    let error_metrics = ErrorMetrics {
        itae_e3: metrics.channel("e3").expect("inner errors always present"),
        itae_zeta3: metrics.channel("zeta3"),
    };
    Ok(RunResult {
        name: s.name.clone(),
        variant: s.variant,
        noisy: s.noise.enabled,
        trace,
        metrics,
        error_metrics,
    })
}
