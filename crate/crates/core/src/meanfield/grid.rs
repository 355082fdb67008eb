use rand::Rng;

use crate::error::{invalid, Result};
use crate::geometry::min_image;

/// Cells per axis must satisfy `1/m <= r / MIN_CELLS_PER_RADIUS`.
pub const MIN_CELLS_PER_RADIUS: f64 = 5.0;

/// Concentrations `(n_A, n_B)` on an `m × m` periodic grid; `n_AB` is the
/// remainder. Cell `(i, j)` has its center at `((i + ½) h, (j + ½) h)` and is
/// stored at index `j m + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    m: usize,
    r: f64,
    q: f64,
    t: f64,
    n_a: Vec<f64>,
    n_b: Vec<f64>,
}

/// Checks the resolution contract and parameter ranges of a grid.
pub fn validate_grid(m: usize, r: f64, q: f64) -> Result<()> {
    if !(r > 0.0 && r < 0.5) {
        return Err(invalid("r", format!("interaction radius must lie in (0, 0.5), got {r}")));
    }
    if m == 0 {
        return Err(invalid("m", "grid needs at least one cell"));
    }
    let h = 1.0 / m as f64;
    if h > r / MIN_CELLS_PER_RADIUS * (1.0 + 1e-12) {
        return Err(invalid(
            "m",
            format!(
                "resolution contract h <= r/5 violated: h = 1/{m} = {h} > r/5 = {} (need m >= {})",
                r / MIN_CELLS_PER_RADIUS,
                (MIN_CELLS_PER_RADIUS / r).ceil()
            ),
        ));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid("q", format!("committed fraction must lie in [0,1], got {q}")));
    }
    Ok(())
}

impl FieldGrid {
    /// Builds a grid from per-cell concentrations `cell(x, y) -> (n_A, n_B)`
    /// evaluated at cell centers.
    pub fn from_fn<F>(m: usize, r: f64, q: f64, mut cell: F) -> Result<Self>
    where
        F: FnMut(f64, f64) -> (f64, f64),
    {
        validate_grid(m, r, q)?;
        let h = 1.0 / m as f64;
        let mut n_a = Vec::with_capacity(m * m);
        let mut n_b = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                let (a, b) = cell((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if !(a >= 0.0 && b >= 0.0 && a + b <= 1.0 + 1e-12) {
                    return Err(invalid("n", format!("cell ({i},{j}) has invalid concentrations ({a}, {b})")));
                }
                n_a.push(a);
                n_b.push(b);
            }
        }
        Ok(FieldGrid { m, r, q, t: 0.0, n_a, n_b })
    }

    pub fn uniform(m: usize, r: f64, q: f64, n_a: f64, n_b: f64) -> Result<Self> {
        Self::from_fn(m, r, q, |_, _| (n_a, n_b))
    }

    /// Cells with `n_A = max(s, 0)`, `n_B = max(-s, 0)` for an order
    /// parameter `s(x, y)` in `[-1, 1]`.
    pub fn from_order_parameter<F>(m: usize, r: f64, q: f64, mut s: F) -> Result<Self>
    where
        F: FnMut(f64, f64) -> f64,
    {
        Self::from_fn(m, r, q, |x, y| {
            let v = s(x, y).clamp(-1.0, 1.0);
            (v.max(0.0), (-v).max(0.0))
        })
    }

    /// Every cell independently pure A or pure B with probability ½.
    pub fn random_ab<R: Rng + ?Sized>(m: usize, r: f64, q: f64, rng: &mut R) -> Result<Self> {
        Self::from_fn(m, r, q, |_, _| if rng.gen::<bool>() { (1.0, 0.0) } else { (0.0, 1.0) })
    }

    /// Pure A inside the disk, pure B outside.
    pub fn disk(m: usize, r: f64, q: f64, cx: f64, cy: f64, radius: f64) -> Result<Self> {
        Self::from_order_parameter(m, r, q, |x, y| {
            if min_image(x - cx).hypot(min_image(y - cy)) < radius {
                1.0
            } else {
                -1.0
            }
        })
    }

    /// Pure A for `x0 <= x < x1`, pure B elsewhere.
    pub fn stripe(m: usize, r: f64, q: f64, x0: f64, x1: f64) -> Result<Self> {
        Self::from_order_parameter(m, r, q, |x, _| if x >= x0 && x < x1 { 1.0 } else { -1.0 })
    }

    /// `tiles × tiles` checkerboard of pure A and B squares. Stationary in
    /// the interior of each layer but unstable where layers cross.
    pub fn checkerboard(m: usize, r: f64, q: f64, tiles: usize) -> Result<Self> {
        let tiles = tiles.max(1) as f64;
        Self::from_order_parameter(m, r, q, |x, y| {
            let parity = (x * tiles).floor() as i64 + (y * tiles).floor() as i64;
            if parity % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn len(&self) -> usize {
        self.n_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_a.is_empty()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.m + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    pub fn n_a(&self) -> &[f64] {
        &self.n_a
    }

    pub fn n_b(&self) -> &[f64] {
        &self.n_b
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.n_a, &mut self.n_b)
    }

    pub fn n_ab_at(&self, k: usize) -> f64 {
        1.0 - (self.n_a[k] + self.n_b[k])
    }

    /// Local order parameter `s = n_A - n_B`.
    pub fn s(&self) -> Vec<f64> {
        self.n_a.iter().zip(&self.n_b).map(|(a, b)| a - b).collect()
    }

    pub fn mean_s(&self) -> f64 {
        self.n_a.iter().zip(&self.n_b).map(|(a, b)| a - b).sum::<f64>() / self.len() as f64
    }

    pub fn min_n_ab(&self) -> f64 {
        (0..self.len()).map(|k| self.n_ab_at(k)).fold(f64::INFINITY, f64::min)
    }

    /// Area weighted by the fraction of A opinion, `Σ (1 + s)/2 · h²`.
    pub fn domain_size_a(&self) -> f64 {
        let h2 = self.h() * self.h();
        self.n_a.iter().zip(&self.n_b).map(|(a, b)| 0.5 * (1.0 + (a - b))).sum::<f64>() * h2
    }

    /// Relabels A ↔ B.
    pub fn swap_opinions(&mut self) {
        std::mem::swap(&mut self.n_a, &mut self.n_b);
    }
}
