use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::Graph;
use crate::meanfield::FieldGrid;
use crate::microsim::MicroState;

use super::boundary::{extract_zero_contours, Contour};
use super::stats::{linear_fit, LinearFit};

/// `|mean s|` above this counts as consensus.
pub const CONSENSUS_THRESHOLD: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminalState {
    ConsensusA,
    ConsensusB,
    Stripe,
    Other,
}

impl TerminalState {
    pub fn name(self) -> &'static str {
        match self {
            TerminalState::ConsensusA => "consensus_A",
            TerminalState::ConsensusB => "consensus_B",
            TerminalState::Stripe => "stripe",
            TerminalState::Other => "other",
        }
    }
}

/// Parallel bands wrapping the torus: an even, nonzero number of boundaries,
/// none contractible, all winding along the same direction.
pub fn is_stripe_pattern(contours: &[Contour]) -> bool {
    if contours.is_empty() || !contours.len().is_multiple_of(2) {
        return false;
    }
    let w0 = contours[0].winding;
    if w0 == (0, 0) {
        return false;
    }
    contours.iter().all(|c| {
        let w = c.winding;
        w != (0, 0) && w.0 * w0.1 == w.1 * w0.0
    })
}

fn classify(mean_s: f64, contours: impl FnOnce() -> Vec<Contour>) -> TerminalState {
    if mean_s > CONSENSUS_THRESHOLD {
        TerminalState::ConsensusA
    } else if mean_s < -CONSENSUS_THRESHOLD {
        TerminalState::ConsensusB
    } else if is_stripe_pattern(&contours()) {
        TerminalState::Stripe
    } else {
        TerminalState::Other
    }
}

pub fn classify_field(field: &FieldGrid) -> TerminalState {
    classify(field.mean_s(), || extract_zero_contours(&field.s(), field.m()))
}

/// Mean spin of the agents in each cell of an `m × m` partition of the
/// torus; empty cells are 0.
pub fn coarse_grain(state: &MicroState, graph: &Graph, m: usize) -> Vec<f64> {
    let mut sum = vec![0.0; m * m];
    let mut count = vec![0u32; m * m];
    for (i, p) in graph.positions().iter().enumerate() {
        let cx = ((p.x() * m as f64) as usize).min(m - 1);
        let cy = ((p.y() * m as f64) as usize).min(m - 1);
        sum[cy * m + cx] += state.spin(i).value() as f64;
        count[cy * m + cx] += 1;
    }
    sum.iter().zip(&count).map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect()
}

/// Agent-level classification: consensus from the spin counts, stripes
/// from the boundaries of the spin field coarse-grained to cells of width
/// about `2r`.
pub fn classify_micro(state: &MicroState, graph: &Graph) -> TerminalState {
    let m = ((0.5 / graph.radius()).floor() as usize).max(4);
    let n = state.n() as f64;
    let mean = (state.count(crate::microsim::Spin::A) as f64 - state.count(crate::microsim::Spin::B) as f64) / n;
    classify(mean, || extract_zero_contours(&coarse_grain(state, graph, m), m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSizeFit {
    pub fit: LinearFit,
    /// Last time included in the fit.
    pub window_end: f64,
    /// Boundary mobility `α = -slope/(2π)`.
    pub alpha: f64,
}

/// Linear fit of `S(t)` over the samples taken before `S` first drops
/// below a tenth of its initial value.
pub fn fit_domain_size(series: &[(f64, f64)]) -> Result<DomainSizeFit> {
    let Some(&(_, s0)) = series.first() else {
        return Err(Error::InsufficientData("empty domain-size series".into()));
    };
    let window: Vec<(f64, f64)> = series.iter().copied().take_while(|&(_, s)| s >= 0.1 * s0).collect();
    if window.len() < 3 {
        return Err(Error::InsufficientData("fewer than three samples before collapse".into()));
    }
    let (ts, ss): (Vec<f64>, Vec<f64>) = window.iter().copied().unzip();
    let fit = linear_fit(&ts, &ss)?;
    Ok(DomainSizeFit {
        fit,
        window_end: ts[ts.len() - 1],
        alpha: -fit.slope / (2.0 * std::f64::consts::PI),
    })
}

pub fn write_domain_size_csv<W: Write>(mut w: W, series: &[(f64, f64)]) -> std::io::Result<()> {
    writeln!(w, "t,S")?;
    for (t, s) in series {
        writeln!(w, "{t},{s}")?;
    }
    Ok(())
}
