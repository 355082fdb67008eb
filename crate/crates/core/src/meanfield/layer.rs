use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

use super::equilibria::slow_manifold_s;

/// Half-width of the solved window in units of `r`.
pub const LAYER_HALF_WIDTH: f64 = 8.0;
pub const LAYER_DAMPING: f64 = 0.5;
pub const LAYER_MAX_ITERATIONS: usize = 1_000_000;

/// Stationary 1D interface between a B region (left) and an A region (right),
/// in the scaled coordinate `ξ = (x - x0)/r`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerProfile {
    pub r: f64,
    pub xi: Vec<f64>,
    pub mu: Vec<f64>,
    /// `dμ/dξ` at `ξ = 0`; the spatial slope is this divided by `r`.
    pub slope_at_center: f64,
    pub iterations: usize,
}

impl LayerProfile {
    /// Extent in `ξ` of the region where `|μ| < 0.9`.
    pub fn width(&self) -> f64 {
        let inside: Vec<f64> = self
            .xi
            .iter()
            .zip(&self.mu)
            .filter(|(_, m)| m.abs() < 0.9)
            .map(|(x, _)| *x)
            .collect();
        match (inside.first(), inside.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn slope_in_space(&self) -> f64 {
        self.slope_at_center / self.r
    }

    /// The order parameter on the slow manifold across the layer.
    pub fn s(&self) -> Vec<f64> {
        self.mu.iter().map(|&m| slow_manifold_s(m)).collect()
    }
}

/// Cumulative of the chord kernel `(2/π)√(1-u²)` on `[-1, 1]`.
fn chord_cdf(u: f64) -> f64 {
    let u = u.clamp(-1.0, 1.0);
    0.5 + (u * (1.0 - u * u).sqrt() + u.asin()) / PI
}

/// Weights of the chord kernel integrated over cells of width `d` centered
/// on `k d`, for `|k| <= ceil(1/d)`.
pub fn chord_kernel_weights(d: f64) -> Vec<f64> {
    let k = (1.0 / d).ceil() as i64;
    (-k..=k)
        .map(|j| chord_cdf((j as f64 + 0.5) * d) - chord_cdf((j as f64 - 0.5) * d))
        .collect()
}

/// Solves the 1D stationary equation `μ(ξ) = ∫ K(u) s*(μ(ξ+u)) du` where the
/// disk average of a field varying in `x` only reduces to the chord kernel
/// `K(u) = (2/π)√(1-u²)`. Far-field values are pinned to `±1`; damped
/// fixed-point iteration with odd symmetrization runs until the largest
/// update falls below `tol`.
pub fn stationary_layer_profile(r: f64, cells_per_radius: usize, tol: f64) -> Result<LayerProfile> {
    if !(r > 0.0) {
        return Err(invalid("r", format!("interaction radius must be positive, got {r}")));
    }
    if cells_per_radius < 2 {
        return Err(invalid("cells_per_radius", "need at least two cells per radius"));
    }
    let d = 1.0 / cells_per_radius as f64;
    let weights = chord_kernel_weights(d);
    let reach = weights.len() / 2;
    let half = (LAYER_HALF_WIDTH * cells_per_radius as f64).round() as usize;
    let n = 2 * half + 1;

    let mut mu = vec![1.0; n];
    let mut ext = vec![0.0; n + 2 * reach];
    for e in &mut ext[..reach] {
        *e = -1.0;
    }
    for e in &mut ext[reach + n..] {
        *e = 1.0;
    }
    let mut next = vec![0.0; n];
    for it in 1..=LAYER_MAX_ITERATIONS {
        for (e, &m) in ext[reach..reach + n].iter_mut().zip(&mu) {
            *e = slow_manifold_s(m);
        }
        for (i, out) in next.iter_mut().enumerate() {
            let window = &ext[i..i + weights.len()];
            let conv: f64 = window.iter().zip(&weights).map(|(a, w)| a * w).sum();
            *out = (1.0 - LAYER_DAMPING) * mu[i] + LAYER_DAMPING * conv;
        }
        let mut change: f64 = 0.0;
        for i in 0..=half {
            let odd = 0.5 * (next[half + i] - next[half - i]);
            change = change.max((odd - mu[half + i]).abs()).max((-odd - mu[half - i]).abs());
            mu[half + i] = odd;
            mu[half - i] = -odd;
        }
        if change < tol {
            let xi: Vec<f64> = (0..n).map(|i| (i as f64 - half as f64) * d).collect();
            let slope_at_center = (mu[half + 1] - mu[half - 1]) / (2.0 * d);
            return Ok(LayerProfile { r, xi, mu, slope_at_center, iterations: it });
        }
    }
    Err(Error::NoConvergence {
        what: "stationary layer profile",
        iterations: LAYER_MAX_ITERATIONS,
        residual: f64::NAN,
    })
}
