//! Performance integrals on a sampled grid.
//!
//! All integrals use the trapezoid rule, i.e. they integrate the piecewise
//! linear interpolant of the integrand samples. Window edges that fall between
//! samples are interpolated, so windows are exactly additive.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("channel has {got} samples, grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("grid must contain at least two strictly increasing samples")]
    BadGrid,
}

fn check(values: &[f64], grid: &[f64]) -> Result<(), MetricsError> {
    if values.len() != grid.len() {
        return Err(MetricsError::LengthMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MetricsError::BadGrid);
    }
    Ok(())
}

/// Integral over `[t0, t1]` (clipped to the grid) of the linear interpolant
/// through `(grid[k], g[k])`.
pub fn trapezoid_window(g: &[f64], grid: &[f64], t0: f64, t1: f64) -> Result<f64, MetricsError> {
    check(g, grid)?;
    let lo = t0.max(grid[0]);
    let hi = t1.min(grid[grid.len() - 1]);
    if !(hi > lo) {
        return Ok(0.0);
    }
    let lerp = |k: usize, t: f64| {
        let s = (t - grid[k]) / (grid[k + 1] - grid[k]);
        g[k] + s * (g[k + 1] - g[k])
    };
    let mut total = 0.0;
    for k in 0..grid.len() - 1 {
        let (a, b) = (grid[k], grid[k + 1]);
        if b <= lo || a >= hi {
            continue;
        }
        let (ta, tb) = (a.max(lo), b.min(hi));
        let ga = if ta == a { g[k] } else { lerp(k, ta) };
        let gb = if tb == b { g[k + 1] } else { lerp(k, tb) };
        total += 0.5 * (tb - ta) * (ga + gb);
    }
    Ok(total)
}

/// Integral of time-weighted absolute error, `int_{t_start}^{tf} t |e(t)| dt`.
pub fn itae(error: &[f64], grid: &[f64], t_start: f64) -> Result<f64, MetricsError> {
    itae_window(error, grid, t_start, f64::INFINITY)
}

pub fn itae_window(error: &[f64], grid: &[f64], t0: f64, t1: f64) -> Result<f64, MetricsError> {
    check(error, grid)?;
    let g: Vec<f64> = grid.iter().zip(error).map(|(t, e)| t * e.abs()).collect();
    trapezoid_window(&g, grid, t0, t1)
}

/// Integral of squared control, `int u(t)^2 dt`, over the whole grid.
pub fn isu(control: &[f64], grid: &[f64]) -> Result<f64, MetricsError> {
    isu_window(control, grid, f64::NEG_INFINITY, f64::INFINITY)
}

pub fn isu_window(control: &[f64], grid: &[f64], t0: f64, t1: f64) -> Result<f64, MetricsError> {
    check(control, grid)?;
    let g: Vec<f64> = control.iter().map(|u| u * u).collect();
    trapezoid_window(&g, grid, t0, t1)
}

/// Integral of squared error, `int e(t)^2 dt`.
pub fn ise(error: &[f64], grid: &[f64]) -> Result<f64, MetricsError> {
    isu(error, grid)
}

/// Headline performance numbers of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// ITAE of the tracking error `r - x1`.
    pub itae: f64,
    /// ISU of the applied control `u`.
    pub isu: f64,
    /// Per-channel ITAE values (estimation errors and the like).
    pub per_channel: Vec<(String, f64)>,
}

impl Metrics {
    pub fn channel(&self, name: &str) -> Option<f64> {
        self.per_channel
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}
