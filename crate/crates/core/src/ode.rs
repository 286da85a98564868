//! Deterministic integration of the coupled plant/observer/controller ODE.
//!
//! Two integrators are provided: classical fixed-step RK4 and an adaptive
//! Dormand-Prince 5(4) pair. Both optionally sample the solution on a uniform
//! output grid; integration steps are always aligned to that grid so that any
//! piecewise forcing defined on the grid (measurement noise) is never straddled.

use thiserror::Error;

/// Smallest step the adaptive controller may shrink to before giving up.
pub const MIN_ADAPTIVE_STEP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("non-finite derivative at t = {t}, channel {index}")]
    NonFiniteDerivative { t: f64, index: usize },
    #[error("non-finite state after t = {last_good_t}, channel {index}")]
    NonFiniteState { last_good_t: f64, index: usize },
    #[error("step size underflow ({step:e} s) at t = {t}; system is too stiff")]
    StepUnderflow { t: f64, step: f64 },
    #[error("invalid integration setup: {0}")]
    InvalidSetup(String),
}

/// A time-stamped state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub t: f64,
    pub values: Vec<f64>,
}

impl StateVector {
    pub fn new(t: f64, values: Vec<f64>) -> Self {
        Self { t, values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// A continuous vector field `dx = f(t, x)`.
///
/// Any `Fn(f64, &[f64], &mut [f64])` closure is a system.
pub trait OdeSystem {
    fn deriv(&self, t: f64, x: &[f64], dx: &mut [f64]);
}

impl<F> OdeSystem for F
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn deriv(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        self(t, x, dx)
    }
}

/// Turns a state sample into the channels stored in a trace.
pub trait Recorder {
    fn channel_names(&self, dim: usize) -> Vec<String>;
    fn record(&self, t: f64, x: &[f64], out: &mut Vec<f64>);
}

/// Records the raw state as channels `x0, x1, ...`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StateRecorder;

impl Recorder for StateRecorder {
    fn channel_names(&self, dim: usize) -> Vec<String> {
        (0..dim).map(|i| format!("x{i}")).collect()
    }

    fn record(&self, _t: f64, x: &[f64], out: &mut Vec<f64>) {
        out.extend_from_slice(x);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FixedRk4,
    AdaptiveRk45,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::FixedRk4 => "fixed-rk4",
            Method::AdaptiveRk45 => "adaptive-rk45",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed-rk4" => Ok(Method::FixedRk4),
            "adaptive-rk45" => Ok(Method::AdaptiveRk45),
            other => Err(format!("unknown integration method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step, or the initial trial step for the adaptive method.
    pub step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::FixedRk4,
            step: 1e-4,
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            max_step: 1e-3,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err("step must be positive".into());
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if !(self.max_step >= self.step) {
            return Err("max_step must be at least step".into());
        }
        Ok(())
    }
}

/// Time-indexed record of named channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    grid: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl SimulationTrace {
    pub fn new(names: Vec<String>) -> Self {
        let columns = vec![Vec::new(); names.len()];
        Self {
            grid: Vec::new(),
            names,
            columns,
        }
    }

    /// Appends one sample. Panics if the row width or time ordering is wrong,
    /// both of which are programming errors.
    pub fn push(&mut self, t: f64, row: &[f64]) {
        assert_eq!(row.len(), self.names.len(), "row width mismatch");
        if let Some(&last) = self.grid.last() {
            assert!(t > last, "trace grid must be strictly increasing");
        }
        self.grid.push(t);
        for (col, &v) in self.columns.iter_mut().zip(row) {
            col.push(v);
        }
    }

    /// Adds a derived channel aligned to the existing grid.
    pub fn add_channel(&mut self, name: impl Into<String>, values: Vec<f64>) {
        assert_eq!(values.len(), self.grid.len(), "channel length mismatch");
        self.names.push(name.into());
        self.columns.push(values);
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn has_channel(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.columns.iter().map(Vec::as_slice))
    }

    pub fn last_row(&self) -> Option<Vec<f64>> {
        let last = self.grid.len().checked_sub(1)?;
        Some(self.columns.iter().map(|c| c[last]).collect())
    }
}

fn eval(
    sys: &impl OdeSystem,
    t: f64,
    x: &[f64],
    dx: &mut [f64],
) -> Result<(), IntegrationError> {
    sys.deriv(t, x, dx);
    match dx.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(IntegrationError::NonFiniteDerivative { t, index }),
        None => Ok(()),
    }
}

/// Stage buffers for RK4, reused across steps.
struct Rk4Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Work {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    fn step(
        &mut self,
        sys: &impl OdeSystem,
        t: f64,
        x: &mut [f64],
        h: f64,
    ) -> Result<(), IntegrationError> {
        let half = 0.5 * h;
        eval(sys, t, x, &mut self.k1)?;
        for i in 0..x.len() {
            self.tmp[i] = x[i] + half * self.k1[i];
        }
        eval(sys, t + half, &self.tmp, &mut self.k2)?;
        for i in 0..x.len() {
            self.tmp[i] = x[i] + half * self.k2[i];
        }
        eval(sys, t + half, &self.tmp, &mut self.k3)?;
        for i in 0..x.len() {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        eval(sys, t + h, &self.tmp, &mut self.k4)?;
        for i in 0..x.len() {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

/// One classical fourth-order Runge-Kutta step from `x` to `x.t + h`.
pub fn rk4_step(
    sys: &impl OdeSystem,
    x: &StateVector,
    h: f64,
) -> Result<StateVector, IntegrationError> {
    if !(h > 0.0) {
        return Err(IntegrationError::InvalidSetup(format!("step {h} must be positive")));
    }
    let mut work = Rk4Work::new(x.dim());
    let mut values = x.values.clone();
    work.step(sys, x.t, &mut values, h)?;
    Ok(StateVector::new(x.t + h, values))
}

/// Uniform grid `t0, t0 + dt, ...` ending exactly at `tf`; the last interval
/// may be shorter. Points within a relative 1e-9 of `tf` are merged into it.
pub fn uniform_grid(t0: f64, tf: f64, dt: f64) -> Vec<f64> {
    let span = tf - t0;
    let n = (span / dt - 1e-9).ceil().max(1.0) as usize;
    let mut grid: Vec<f64> = (0..n).map(|k| t0 + k as f64 * dt).collect();
    grid.push(tf);
    grid
}

fn check_span(t0: f64, tf: f64) -> Result<(), IntegrationError> {
    if !(tf > t0) || !t0.is_finite() || !tf.is_finite() {
        return Err(IntegrationError::InvalidSetup(format!(
            "need finite tf > t0, got [{t0}, {tf}]"
        )));
    }
    Ok(())
}

fn check_state(x: &[f64], last_good_t: f64) -> Result<(), IntegrationError> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(IntegrationError::NonFiniteState { last_good_t, index }),
        None => Ok(()),
    }
}

fn probe_dim(sys: &impl OdeSystem, x0: &StateVector) -> Result<(), IntegrationError> {
    // A derivative that writes fewer entries than the state is not detectable
    // through a slice, so only the state itself is checked here.
    check_state(&x0.values, x0.t)?;
    let mut dx = vec![0.0; x0.dim()];
    eval(sys, x0.t, &x0.values, &mut dx)
}

/// Fixed-step RK4 from `x0.t` to `tf`.
///
/// With `output_step = None` every integration step is recorded; otherwise the
/// trace holds the uniform output grid and each output interval is split into
/// equal substeps no longer than `h`.
pub fn integrate_fixed<S: OdeSystem, R: Recorder>(
    sys: &S,
    x0: &StateVector,
    tf: f64,
    h: f64,
    output_step: Option<f64>,
    recorder: &R,
) -> Result<SimulationTrace, IntegrationError> {
    check_span(x0.t, tf)?;
    if !(h > 0.0) {
        return Err(IntegrationError::InvalidSetup(format!("step {h} must be positive")));
    }
    probe_dim(sys, x0)?;
    let grid = uniform_grid(x0.t, tf, output_step.unwrap_or(h));
    let mut trace = SimulationTrace::new(recorder.channel_names(x0.dim()));
    let mut row = Vec::new();
    let mut x = x0.values.clone();
    let mut work = Rk4Work::new(x.len());

    recorder.record(grid[0], &x, &mut row);
    trace.push(grid[0], &row);
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let sub = ((b - a) / h - 1e-9).ceil().max(1.0) as usize;
        let hs = (b - a) / sub as f64;
        for k in 0..sub {
            let t = a + k as f64 * hs;
            work.step(sys, t, &mut x, hs)?;
            check_state(&x, t)?;
        }
        row.clear();
        recorder.record(b, &x, &mut row);
        trace.push(b, &row);
    }
    Ok(trace)
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th-order and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct DoPriWork {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    next: Vec<f64>,
}

impl DoPriWork {
    fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            next: vec![0.0; dim],
        }
    }

    /// Attempts one step; leaves the candidate in `self.next` and returns
    /// the max-norm of the local error estimate.
    fn attempt(
        &mut self,
        sys: &impl OdeSystem,
        t: f64,
        x: &[f64],
        h: f64,
    ) -> Result<f64, IntegrationError> {
        let n = x.len();
        eval(sys, t, x, &mut self.k[0])?;
        let stages: [(f64, &[f64]); 5] = [
            (C2, &[A21]),
            (C3, &[A31, A32]),
            (C4, &[A41, A42, A43]),
            (C5, &[A51, A52, A53, A54]),
            (1.0, &[A61, A62, A63, A64, A65]),
        ];
        for (s, (c, row)) in stages.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in row.iter().enumerate() {
                    acc += a * self.k[j][i];
                }
                self.tmp[i] = x[i] + h * acc;
            }
            eval(sys, t + c * h, &self.tmp, &mut self.k[s + 1])?;
        }
        for i in 0..n {
            self.next[i] = x[i]
                + h * (B1 * self.k[0][i]
                    + B3 * self.k[2][i]
                    + B4 * self.k[3][i]
                    + B5 * self.k[4][i]
                    + B6 * self.k[5][i]);
        }
        eval(sys, t + h, &self.next, &mut self.k[6])?;
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * self.k[0][i]
                    + E3 * self.k[2][i]
                    + E4 * self.k[3][i]
                    + E5 * self.k[4][i]
                    + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
            err = err.max(e.abs());
        }
        Ok(err)
    }
}

fn max_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Adaptive Dormand-Prince 5(4) integration.
///
/// A step is accepted when `max|err| <= abs_tol + rel_tol * max(|x|, |x_new|)`
/// (max-norms). With `output_step = None` every accepted step is recorded;
/// otherwise steps are clipped at output grid points and only those are stored.
pub fn integrate_adaptive<S: OdeSystem, R: Recorder>(
    sys: &S,
    x0: &StateVector,
    tf: f64,
    cfg: &IntegratorConfig,
    output_step: Option<f64>,
    recorder: &R,
) -> Result<SimulationTrace, IntegrationError> {
    check_span(x0.t, tf)?;
    cfg.validate().map_err(IntegrationError::InvalidSetup)?;
    probe_dim(sys, x0)?;

    let targets = match output_step {
        Some(dt) => uniform_grid(x0.t, tf, dt),
        None => vec![x0.t, tf],
    };
    let record_all = output_step.is_none();
    let mut trace = SimulationTrace::new(recorder.channel_names(x0.dim()));
    let mut row = Vec::new();
    let mut x = x0.values.clone();
    let mut work = DoPriWork::new(x.len());
    let mut h = cfg.step.min(cfg.max_step);
    let mut t = x0.t;

    recorder.record(t, &x, &mut row);
    trace.push(t, &row);
    for &target in &targets[1..] {
        while t < target {
            let remaining = target - t;
            let snap = remaining <= h * (1.0 + 1e-9) || remaining <= 1e-12 * target.abs().max(1.0);
            let h_try = if snap { remaining } else { h };
            let err = work.attempt(sys, t, &x, h_try)?;
            let tol = cfg.abs_tol + cfg.rel_tol * max_norm(&x).max(max_norm(&work.next));
            let ratio = err / tol;
            if ratio <= 1.0 {
                let t_new = if snap { target } else { t + h_try };
                check_state(&work.next, t)?;
                std::mem::swap(&mut x, &mut work.next);
                t = t_new;
                if record_all && t < target {
                    row.clear();
                    recorder.record(t, &x, &mut row);
                    trace.push(t, &row);
                }
                let grow = if ratio == 0.0 {
                    5.0
                } else {
                    (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
                };
                // A clipped step says nothing about the attainable step size.
                if !snap || h_try >= h {
                    h = (h_try * grow).min(cfg.max_step);
                }
            } else {
                h = h_try * (0.9 * ratio.powf(-0.2)).clamp(0.1, 1.0);
                if h < MIN_ADAPTIVE_STEP {
                    return Err(IntegrationError::StepUnderflow { t, step: h });
                }
            }
        }
        row.clear();
        recorder.record(t, &x, &mut row);
        trace.push(t, &row);
    }
    Ok(trace)
}

/// Dispatches on `cfg.method`.
pub fn integrate<S: OdeSystem, R: Recorder>(
    sys: &S,
    x0: &StateVector,
    tf: f64,
    cfg: &IntegratorConfig,
    output_step: Option<f64>,
    recorder: &R,
) -> Result<SimulationTrace, IntegrationError> {
    match cfg.method {
        Method::FixedRk4 => integrate_fixed(sys, x0, tf, cfg.step, output_step, recorder),
        Method::AdaptiveRk45 => integrate_adaptive(sys, x0, tf, cfg, output_step, recorder),
    }
}
