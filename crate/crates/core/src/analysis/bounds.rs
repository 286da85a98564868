//! Numerical checks of the observer convergence results against simulation:
//! the steady-state error bound swept over observer bandwidth, and the
//! per-sample bound on the rate of the disturbance estimation error.

use thiserror::Error;

use crate::control::VariantKind;
use crate::harness::export::format_number;
use crate::harness::scenario::{Scenario, PLANT_ORDER};
use crate::harness::sim::{run_scenario, RunError, RunResult};
use crate::observers::{estimation_errors, LesoConfig, ObserverError};
use crate::ode::SimulationTrace;

use super::lyapunov::{companion_matrix, solve_lyapunov, theorem1_bound, LyapunovError, LyapunovResult};

/// Portion of the horizon, counted back from the end, treated as steady state.
pub const STEADY_FRACTION: f64 = 0.2;

/// Empirical errors at or below this count as zero (nothing to estimate).
pub const ZERO_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("bandwidth sweep is empty")]
    EmptySweep,
    #[error("bound verification needs a noise-free scenario")]
    NoisyScenario,
    #[error("window fraction {0} must lie in (0, 1]")]
    BadWindow(f64),
    #[error("trace too short for finite differences")]
    TooShort,
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
}

/// Central differences in the interior, one-sided at the ends.
pub fn derivative(values: &[f64], grid: &[f64]) -> Vec<f64> {
    let n = values.len();
    assert_eq!(n, grid.len());
    assert!(n >= 2);
    (0..n)
        .map(|k| {
            let (a, b) = match k {
                0 => (0, 1),
                k if k == n - 1 => (n - 2, n - 1),
                k => (k - 1, k + 1),
            };
            (values[b] - values[a]) / (grid[b] - grid[a])
        })
        .collect()
}

/// Index of the first sample inside the trailing `fraction` of the grid span.
fn window_start(grid: &[f64], fraction: f64) -> usize {
    let t0 = grid[0];
    let tf = grid[grid.len() - 1];
    let cut = tf - fraction * (tf - t0);
    grid.iter().position(|&t| t >= cut - 1e-12).unwrap_or(0)
}

fn steady_max(values: &[f64], start: usize) -> f64 {
    values[start..].iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Least-squares slope of `ln y` against `ln x`; `None` if any `y <= 0`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || y.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCell {
    pub omega0: f64,
    /// State index `i` in `1..=n+1`.
    pub index: usize,
    pub theoretical_bound: f64,
    pub empirical_steady_error: f64,
    /// empirical / theoretical
    pub ratio: f64,
}

impl BoundCell {
    pub fn within(&self) -> bool {
        self.empirical_steady_error <= self.theoretical_bound
            || self.empirical_steady_error <= ZERO_FLOOR
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub order: usize,
    pub lyapunov: LyapunovResult,
    /// `(omega0, M)` with `M = max |dL/dt|` over the estimation window.
    pub m_estimates: Vec<(f64, f64)>,
    pub cells: Vec<BoundCell>,
    /// Fitted log-log slope of steady error against `omega0`, per index `1..=n+1`.
    pub slopes: Vec<Option<f64>>,
}

impl BoundReport {
    pub fn all_within(&self) -> bool {
        self.cells.iter().all(BoundCell::within)
    }

    pub fn cell(&self, omega0: f64, index: usize) -> Option<&BoundCell> {
        self.cells
            .iter()
            .find(|c| c.omega0 == omega0 && c.index == index)
    }

    pub fn slope(&self, index: usize) -> Option<f64> {
        self.slopes.get(index.checked_sub(1)?).copied().flatten()
    }

    /// One row per cell: `omega0,index,m,theoretical_bound,empirical_steady_error,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega0,index,m,theoretical_bound,empirical_steady_error,ratio\n");
        for c in &self.cells {
            let m = self
                .m_estimates
                .iter()
                .find(|(w, _)| *w == c.omega0)
                .map_or(f64::NAN, |(_, m)| *m);
            let row = [c.omega0, m, c.theoretical_bound, c.empirical_steady_error, c.ratio]
                .map(format_number);
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row[0], c.index, row[1], row[2], row[3], row[4]
            ));
        }
        out
    }

    /// Steady errors of index `i` in sweep order.
    pub fn empirical(&self, index: usize) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| c.index == index)
            .map(|c| c.empirical_steady_error)
            .collect()
    }
}

fn sweep_runs(base: &Scenario, omegas: &[f64]) -> Result<Vec<RunResult>, RunError> {
    // Runs are independent; one thread each.
    std::thread::scope(|scope| {
        let handles: Vec<_> = omegas
            .iter()
            .map(|&w| {
                let mut s = base.with_variant(VariantKind::Conventional);
                s.inner.omega0 = w;
                scope.spawn(move || run_scenario(&s))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}

/// Runs the conventional controller for each bandwidth, estimates
/// `M = max |dL/dt|` over the trailing `m_window` fraction of the horizon and
/// compares the steady-state (trailing 20%) errors `max |e_i|` with the limit
/// bound computed from the Lyapunov solution of the observer's coefficients.
pub fn verify_theorem1(
    base: &Scenario,
    omega0_sweep: &[f64],
    m_window: f64,
) -> Result<BoundReport, BoundsError> {
    if omega0_sweep.is_empty() {
        return Err(BoundsError::EmptySweep);
    }
    if base.noise.enabled {
        return Err(BoundsError::NoisyScenario);
    }
    if !(m_window > 0.0 && m_window <= 1.0) {
        return Err(BoundsError::BadWindow(m_window));
    }
    let n = PLANT_ORDER;
    let lyap = solve_lyapunov(&companion_matrix(&base.inner.coeffs)?)?;
    let runs = sweep_runs(base, omega0_sweep)?;

    let mut m_estimates = Vec::new();
    let mut cells = Vec::new();
    for (&w, run) in omega0_sweep.iter().zip(&runs) {
        let grid = run.trace.grid();
        if grid.len() < 3 {
            return Err(BoundsError::TooShort);
        }
        let l = run.trace.channel("L").ok_or_else(|| ObserverError::MissingChannel("L".into()))?;
        let delta = derivative(l, grid);
        let m = steady_max(&delta, window_start(grid, m_window));
        m_estimates.push((w, m));
        let steady = window_start(grid, STEADY_FRACTION);
        let errors = estimation_errors(&run.trace)?;
        for (k, e) in errors.inner.iter().enumerate() {
            let i = k + 1;
            let bound = theorem1_bound(m, &lyap, w, n, i)?;
            let emp = steady_max(e, steady);
            cells.push(BoundCell {
                omega0: w,
                index: i,
                theoretical_bound: bound,
                empirical_steady_error: emp,
                ratio: if bound > 0.0 {
                    emp / bound
                } else if emp == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                },
            });
        }
    }
    let slopes = (1..=n + 1)
        .map(|i| {
            let y: Vec<f64> = cells
                .iter()
                .filter(|c| c.index == i)
                .map(|c| c.empirical_steady_error)
                .collect();
            loglog_slope(omega0_sweep, &y)
        })
        .collect();
    Ok(BoundReport {
        order: n,
        lyapunov: lyap,
        m_estimates,
        cells,
        slopes,
    })
}

/// Per-sample check of `|de_{n+1}/dt| <= |dL/dt| + |beta_{n+1} e_1|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Report {
    pub samples: usize,
    pub satisfied: usize,
    /// Samples satisfying the inequality with no slack at all.
    pub strict_satisfied: usize,
    /// Allowance for finite-difference error, `10 h max |d2 e_{n+1}/dt2|`.
    pub slack: f64,
    /// Largest `|de/dt| - (|dL/dt| + |beta e1|)` seen (may be negative).
    pub max_excess: f64,
}

impl Lemma2Report {
    pub fn fraction(&self) -> f64 {
        if self.samples == 0 {
            1.0
        } else {
            self.satisfied as f64 / self.samples as f64
        }
    }
}

/// Checks the rate inequality on the trailing `steady_fraction` of a
/// noise-free trace of the inner observer `cfg`.
pub fn lemma2_check(
    trace: &SimulationTrace,
    cfg: &LesoConfig,
    steady_fraction: f64,
) -> Result<Lemma2Report, BoundsError> {
    if !(steady_fraction > 0.0 && steady_fraction <= 1.0) {
        return Err(BoundsError::BadWindow(steady_fraction));
    }
    let grid = trace.grid();
    if grid.len() < 3 {
        return Err(BoundsError::TooShort);
    }
    let errors = estimation_errors(trace)?;
    let n = cfg.order();
    let e1 = &errors.inner[0];
    let ext = errors
        .inner
        .get(n)
        .ok_or_else(|| ObserverError::MissingChannel(format!("xhat{}", n + 1)))?;
    let l = trace.channel("L").ok_or_else(|| ObserverError::MissingChannel("L".into()))?;
    let beta = *cfg.gains().last().expect("non-empty gains");

    let de = derivative(ext, grid);
    let dl = derivative(l, grid);
    let start = window_start(grid, steady_fraction).max(1);
    let end = grid.len() - 1;
    let mut max_dd: f64 = 0.0;
    for k in start..end {
        let h1 = grid[k] - grid[k - 1];
        let h2 = grid[k + 1] - grid[k];
        let dd = 2.0 * ((ext[k + 1] - ext[k]) / h2 - (ext[k] - ext[k - 1]) / h1) / (h1 + h2);
        max_dd = max_dd.max(dd.abs());
    }
    let h = (grid[end] - grid[start - 1]) / (end - start + 1) as f64;
    let slack = 10.0 * h * max_dd;

    let mut satisfied = 0;
    let mut strict_satisfied = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for k in start..end {
        let lhs = de[k].abs();
        let rhs = dl[k].abs() + (beta * e1[k]).abs();
        max_excess = max_excess.max(lhs - rhs);
        if lhs <= rhs + slack {
            satisfied += 1;
        }
        if lhs <= rhs {
            strict_satisfied += 1;
        }
    }
    Ok(Lemma2Report {
        samples: end - start,
        satisfied,
        strict_satisfied,
        slack,
        max_excess,
    })
}
