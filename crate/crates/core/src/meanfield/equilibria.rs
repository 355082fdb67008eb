use crate::error::{invalid, Error, Result};

use super::grid::FieldGrid;
use super::stencil::{disk_average, DiskStencil};

/// Stationary per-cell concentrations for a fixed probability `f` of hearing A.
pub fn local_equilibrium(f: f64) -> (f64, f64) {
    let g = 1.0 - f;
    let den = f * f - f + 1.0;
    (f * f / den, g * g / den)
}

/// Order parameter on the slow manifold, `s*(μ) = 4μ/(μ² + 3)`.
pub fn slow_manifold_s(mu: f64) -> f64 {
    4.0 * mu / (mu * mu + 3.0)
}

/// Eigenvalues `-1 ± √(f(1-f))` of the linearized per-cell dynamics,
/// largest first.
pub fn convergence_eigenvalues(f: f64) -> (f64, f64) {
    let root = (f * (1.0 - f)).max(0.0).sqrt();
    (-1.0 + root, -1.0 - root)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReactionModel {
    NamingGame,
    Voter,
    Glauber { beta_j: f64 },
}

/// Reaction part of the slow-time-scale equation for `μ`.
pub fn reaction_term(mu: f64, model: ReactionModel) -> f64 {
    match model {
        ReactionModel::NamingGame => mu * (1.0 - mu * mu) / (3.0 + mu * mu),
        ReactionModel::Voter => 0.0,
        ReactionModel::Glauber { beta_j } => (beta_j * mu).tanh() - mu,
    }
}

/// `q_c = 7 - 4√3`, below which a committed minority cannot tip the system.
pub fn critical_committed_fraction() -> f64 {
    7.0 - 4.0 * 3f64.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    /// Saddle-node double root at `q = q_c`.
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub mu: f64,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub q: f64,
    pub q_c: f64,
    /// Sorted by decreasing `μ`; `μ = 1` first.
    pub roots: Vec<FixedPoint>,
}

/// The uniform committed self-consistency map `F(μ) = (1-q)·4μ/(μ²+3) + q`.
fn committed_map(mu: f64, q: f64) -> f64 {
    (1.0 - q) * slow_manifold_s(mu) + q
}

fn committed_map_slope(mu: f64, q: f64) -> f64 {
    let d = mu * mu + 3.0;
    (1.0 - q) * 4.0 * (3.0 - mu * mu) / (d * d)
}

/// Uniform stationary states with a fraction `q` of agents committed to A:
/// roots of `(μ - 1)(μ² + (1-q)μ + 3q) = 0` inside `[-1, 1]`.
pub fn committed_fixed_points(q: f64) -> Result<FixedPointReport> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid("q", format!("committed fraction must lie in [0,1], got {q}")));
    }
    let q_c = critical_committed_fraction();
    let mut roots = vec![FixedPoint { mu: 1.0, stability: Stability::Stable }];
    let disc = q * q - 14.0 * q + 1.0;
    // the discriminant is also positive again for q > 7 + 4√3 > 1, so only
    // the lower branch q <= q_c is physical here
    if q <= q_c + 1e-12 {
        if disc.abs() <= 1e-12 {
            roots.push(FixedPoint { mu: (q - 1.0) / 2.0, stability: Stability::Marginal });
        } else if disc > 0.0 {
            let sq = disc.sqrt();
            for mu in [(q - 1.0 + sq) / 2.0, (q - 1.0 - sq) / 2.0] {
                let stability = if committed_map_slope(mu, q) < 1.0 {
                    Stability::Stable
                } else {
                    Stability::Unstable
                };
                roots.push(FixedPoint { mu, stability });
            }
        }
    }
    Ok(FixedPointReport { q, q_c, roots })
}

/// Iteration cap for [`committed_mu`].
pub const COMMITTED_MAX_SWEEPS: usize = 100_000;

/// Stationary committed mean field by fixed-point iteration
/// `μ ← avg_disk[(1-q)·4μ/(μ²+3) + q]` starting from `mu0`.
pub fn committed_mu(
    mu0: &[f64],
    stencil: &DiskStencil,
    q: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid("q", format!("committed fraction must lie in [0,1], got {q}")));
    }
    let mut mu = mu0.to_vec();
    let mut src = vec![0.0; mu.len()];
    let mut residual = f64::INFINITY;
    for _ in 0..COMMITTED_MAX_SWEEPS {
        for (s, &m) in src.iter_mut().zip(&mu) {
            *s = committed_map(m, q);
        }
        let next = disk_average(&src, stencil);
        residual = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        mu = next;
        if residual < tol {
            return Ok(mu);
        }
    }
    Err(Error::NoConvergence { what: "committed mean field", iterations: COMMITTED_MAX_SWEEPS, residual })
}

/// Field whose every cell sits at the local equilibrium for its own `μ`.
pub fn equilibrium_field(m: usize, r: f64, q: f64, mu: f64) -> Result<FieldGrid> {
    let (a, b) = local_equilibrium(0.5 + 0.5 * mu);
    FieldGrid::uniform(m, r, q, a, b)
}
