//! Reproducible Gaussian measurement noise.
//!
//! Uniform variates come from a counter-based SplitMix64: sample `k` of seed
//! `s` is `mix(s + (k + 1) * 0x9E3779B97F4A7C15)`, using the 53 high bits as a
//! uniform in `(0, 1]`. Pairs of uniforms are mapped to pairs of standard
//! normals with the Box-Muller transform (cosine branch for even indices,
//! sine branch for odd ones). The sequence therefore depends only on the seed
//! and the sample index.

use std::f64::consts::TAU;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in `(0, 1]` for counter `k`.
fn uniform(seed: u64, k: u64) -> f64 {
    let bits = splitmix64(seed.wrapping_add(k.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)));
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal sample number `index` of the stream `seed`.
pub fn standard_normal(seed: u64, index: u64) -> f64 {
    let pair = index / 2;
    let u1 = uniform(seed, 2 * pair);
    let u2 = uniform(seed, 2 * pair + 1);
    let radius = (-2.0 * u1.ln()).sqrt();
    if index.is_multiple_of(2) {
        radius * (TAU * u2).cos()
    } else {
        radius * (TAU * u2).sin()
    }
}

/// One zero-mean Gaussian sample with the given variance per grid point.
pub fn gaussian_noise(seed: u64, variance: f64, grid: &[f64]) -> Vec<f64> {
    assert!(variance >= 0.0, "variance must be non-negative");
    if variance == 0.0 {
        return vec![0.0; grid.len()];
    }
    let sigma = variance.sqrt();
    (0..grid.len() as u64)
        .map(|k| sigma * standard_normal(seed, k))
        .collect()
}

/// A sampled signal, linearly interpolated between grid points and held
/// constant outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    grid: Vec<f64>,
    values: Vec<f64>,
    t0: f64,
    dt: f64,
}

impl SampledSignal {
    /// `grid` must be strictly increasing and (apart from a possibly shorter
    /// last interval) uniform.
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len());
        assert!(!grid.is_empty());
        let t0 = grid[0];
        let dt = if grid.len() > 1 { grid[1] - grid[0] } else { 1.0 };
        Self {
            grid,
            values,
            t0,
            dt,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        let last = self.grid.len() - 1;
        if t <= self.grid[0] {
            return self.values[0];
        }
        if t >= self.grid[last] {
            return self.values[last];
        }
        let mut k = (((t - self.t0) / self.dt).floor() as usize).min(last - 1);
        while k > 0 && self.grid[k] > t {
            k -= 1;
        }
        while k + 1 < last && self.grid[k + 1] <= t {
            k += 1;
        }
        let s = (t - self.grid[k]) / (self.grid[k + 1] - self.grid[k]);
        self.values[k] + s * (self.values[k + 1] - self.values[k])
    }
}
