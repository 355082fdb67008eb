use std::io::Write;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{min_image, torus_distance, BucketGrid, Graph};
use crate::meanfield::FieldGrid;
use crate::microsim::MicroState;

/// Bins with fewer samples than this are flagged.
pub const LOW_CONFIDENCE_COUNT: u64 = 100;

/// Largest distance between two points of the unit torus.
pub const MAX_TORUS_DISTANCE: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationBin {
    pub l_center: f64,
    pub c: f64,
    pub count: u64,
}

impl CorrelationBin {
    pub fn low_confidence(&self) -> bool {
        self.count < LOW_CONFIDENCE_COUNT
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    pub t: f64,
    pub bin_width: f64,
    pub bins: Vec<CorrelationBin>,
}

impl CorrelationCurve {
    /// Bins with at least [`LOW_CONFIDENCE_COUNT`] samples.
    pub fn confident(&self) -> impl Iterator<Item = &CorrelationBin> {
        self.bins.iter().filter(|b| !b.low_confidence())
    }

    /// Rows `t,L,C,count`; empty bins are skipped.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(w, "t,L,C,count")?;
        }
        for b in self.bins.iter().filter(|b| b.count > 0) {
            writeln!(w, "{},{},{},{}", self.t, b.l_center, b.c, b.count)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationOptions {
    pub bin_width: f64,
    pub n_samples: usize,
    /// Restrict sampling to pairs closer than this. Pairs are then drawn
    /// by picking a first point and a partner near it, which concentrates
    /// samples at short range.
    pub max_distance: Option<f64>,
}

impl CorrelationOptions {
    /// Bins of width `r/2`, 10⁶ pairs over the whole torus.
    pub fn for_radius(r: f64) -> Self {
        CorrelationOptions { bin_width: r / 2.0, n_samples: 1_000_000, max_distance: None }
    }

    fn validate(&self) -> Result<f64> {
        if !(self.bin_width > 0.0) {
            return Err(invalid("bin_width", format!("must be positive, got {}", self.bin_width)));
        }
        if self.n_samples == 0 {
            return Err(invalid("n_samples", "need at least one sample"));
        }
        let reach = self.max_distance.unwrap_or(MAX_TORUS_DISTANCE);
        if !(reach > 0.0 && reach <= MAX_TORUS_DISTANCE) {
            return Err(invalid("max_distance", format!("must lie in (0, {MAX_TORUS_DISTANCE}], got {reach}")));
        }
        Ok(reach)
    }
}

/// What the correlation is measured on.
#[derive(Debug, Clone, Copy)]
pub enum CorrelationSource<'a> {
    Micro { state: &'a MicroState, graph: &'a Graph },
    Field(&'a FieldGrid),
}

struct Accumulator {
    width: f64,
    sums: Vec<f64>,
    counts: Vec<u64>,
}

impl Accumulator {
    fn new(width: f64, reach: f64) -> Self {
        let n = (reach / width).ceil() as usize + 1;
        Accumulator { width, sums: vec![0.0; n], counts: vec![0; n] }
    }

    fn add(&mut self, l: f64, product: f64) {
        let k = (l / self.width) as usize;
        if k < self.sums.len() {
            self.sums[k] += product;
            self.counts[k] += 1;
        }
    }

    fn finish(self, t: f64) -> CorrelationCurve {
        let width = self.width;
        let bins = self
            .sums
            .iter()
            .zip(&self.counts)
            .enumerate()
            .map(|(k, (&s, &c))| CorrelationBin {
                l_center: (k as f64 + 0.5) * width,
                c: if c > 0 { s / c as f64 } else { 0.0 },
                count: c,
            })
            .collect();
        CorrelationCurve { t, bin_width: width, bins }
    }
}

/// Monte Carlo estimate of `C(L) = E[s s' | distance = L]` from random
/// ordered pairs. Distinct pairs only; self-pairs never enter.
pub fn pair_correlation<R: Rng + ?Sized>(
    source: CorrelationSource<'_>,
    options: &CorrelationOptions,
    rng: &mut R,
) -> Result<CorrelationCurve> {
    let reach = options.validate()?;
    let mut acc = Accumulator::new(options.bin_width, reach);
    let t = match source {
        CorrelationSource::Micro { state, graph } => {
            if state.n() != graph.n() {
                return Err(invalid("state", "microstate and graph sizes differ"));
            }
            if state.n() < 2 {
                return Err(Error::InsufficientData("need at least two agents".into()));
            }
            sample_micro(state, graph, options, reach, rng, &mut acc);
            state.t()
        }
        CorrelationSource::Field(field) => {
            sample_field(field, options, reach, rng, &mut acc);
            field.t()
        }
    };
    Ok(acc.finish(t))
}

fn sample_micro<R: Rng + ?Sized>(
    state: &MicroState,
    graph: &Graph,
    options: &CorrelationOptions,
    reach: f64,
    rng: &mut R,
    acc: &mut Accumulator,
) {
    let n = state.n();
    let pos = graph.positions();
    let spin = |i: usize| state.spin(i).value() as f64;
    match options.max_distance {
        None => {
            for _ in 0..options.n_samples {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                acc.add(torus_distance(&pos[i], &pos[j]), spin(i) * spin(j));
            }
        }
        Some(_) => {
            let grid = BucketGrid::new(pos, reach);
            let mut drawn = 0;
            let mut attempts = 0usize;
            let cap = options.n_samples.saturating_mul(1000);
            while drawn < options.n_samples && attempts < cap {
                attempts += 1;
                let i = rng.gen_range(0..n);
                let (cx, cy) = grid.cell_of(&pos[i]);
                let cells = grid.neighborhood(cx, cy, 1);
                let total: usize = cells.iter().map(|&(x, y)| grid.cell_items(x, y).len()).sum();
                let mut pick = rng.gen_range(0..total);
                let mut j = usize::MAX;
                for &(x, y) in &cells {
                    let items = grid.cell_items(x, y);
                    if pick < items.len() {
                        j = items[pick] as usize;
                        break;
                    }
                    pick -= items.len();
                }
                if j == i {
                    continue;
                }
                let l = torus_distance(&pos[i], &pos[j]);
                if l >= reach {
                    continue;
                }
                acc.add(l, spin(i) * spin(j));
                drawn += 1;
            }
        }
    }
}

fn sample_field<R: Rng + ?Sized>(
    field: &FieldGrid,
    options: &CorrelationOptions,
    reach: f64,
    rng: &mut R,
    acc: &mut Accumulator,
) {
    let m = field.m();
    let h = field.h();
    let s = field.s();
    let cells = m * m;
    match options.max_distance {
        None => {
            for _ in 0..options.n_samples {
                let a = rng.gen_range(0..cells);
                let mut b = rng.gen_range(0..cells - 1);
                if b >= a {
                    b += 1;
                }
                let dx = min_image(((a % m) as f64 - (b % m) as f64) * h);
                let dy = min_image(((a / m) as f64 - (b / m) as f64) * h);
                acc.add(dx.hypot(dy), s[a] * s[b]);
            }
        }
        Some(_) => {
            let k = (reach / h).ceil() as i64;
            let mut drawn = 0;
            while drawn < options.n_samples {
                let di = rng.gen_range(-k..=k);
                let dj = rng.gen_range(-k..=k);
                if di == 0 && dj == 0 {
                    continue;
                }
                let l = (di as f64 * h).hypot(dj as f64 * h);
                if l >= reach {
                    continue;
                }
                let a = rng.gen_range(0..cells);
                let (i, j) = ((a % m) as i64, (a / m) as i64);
                let mi = m as i64;
                let b = ((j + dj).rem_euclid(mi) * mi + (i + di).rem_euclid(mi)) as usize;
                acc.add(l, s[a] * s[b]);
                drawn += 1;
            }
        }
    }
}

/// Piecewise-linear interpolation on increasing `xs`; `None` outside.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    if xs.is_empty() || x < xs[0] || x > xs[xs.len() - 1] {
        return None;
    }
    let k = xs.partition_point(|&v| v <= x);
    if k == xs.len() {
        return Some(ys[xs.len() - 1]);
    }
    if k == 0 {
        return Some(ys[0]);
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let w = (x - x0) / (x1 - x0);
    Some(ys[k - 1] * (1.0 - w) + ys[k] * w)
}

/// Points on the common rescaled grid used by [`collapse_error`].
pub const COLLAPSE_GRID_POINTS: usize = 200;

/// Quality of a scaling collapse: every curve's distances are divided by
/// `length_scale(t)`, the curves are interpolated onto a common grid over
/// the overlap of their rescaled supports, and the mean squared deviation
/// over all curve pairs and grid points is returned. Low-confidence bins
/// are ignored.
pub fn collapse_error<F>(curves: &[CorrelationCurve], length_scale: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if curves.len() < 2 {
        return Err(Error::InsufficientData("collapse needs at least two curves".into()));
    }
    let mut rescaled: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(curves.len());
    for c in curves {
        let l = length_scale(c.t);
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid("length_scale", format!("l({}) = {l} is not a positive length", c.t)));
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = c.confident().map(|b| (b.l_center / l, b.c)).unzip();
        if xs.len() < 2 {
            return Err(Error::InsufficientData(format!("curve at t={} has fewer than two usable bins", c.t)));
        }
        rescaled.push((xs, ys));
    }
    let lo = rescaled.iter().map(|(x, _)| x[0]).fold(f64::MIN, f64::max);
    let hi = rescaled.iter().map(|(x, _)| x[x.len() - 1]).fold(f64::MAX, f64::min);
    if !(hi > lo) {
        return Err(Error::NoOverlap);
    }
    let grid: Vec<f64> = (0..COLLAPSE_GRID_POINTS)
        .map(|k| lo + (hi - lo) * k as f64 / (COLLAPSE_GRID_POINTS - 1) as f64)
        .collect();
    let sampled: Vec<Vec<f64>> = rescaled
        .iter()
        .map(|(xs, ys)| grid.iter().map(|&g| interpolate(xs, ys, g).expect("inside overlap")).collect())
        .collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..sampled.len() {
        for b in a + 1..sampled.len() {
            let msd: f64 = sampled[a].iter().zip(&sampled[b]).map(|(x, y)| (x - y).powi(2)).sum::<f64>()
                / grid.len() as f64;
            total += msd;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}
