use super::TorusPoint;

/// Uniform bucket grid over the torus with `cells × cells` square cells.
///
/// Items are stored in cell order (counting sort), so a cell's members are a
/// contiguous slice.
#[derive(Debug, Clone)]
pub struct BucketGrid {
    cells: usize,
    start: Vec<usize>,
    items: Vec<u32>,
}

impl BucketGrid {
    /// Builds a grid whose cell side is at least `min_cell`
    /// (`floor(1 / min_cell)` cells per axis).
    pub fn new(points: &[TorusPoint], min_cell: f64) -> Self {
        assert!(min_cell > 0.0);
        let cells = ((1.0 / min_cell).floor() as usize).max(1);
        let mut counts = vec![0usize; cells * cells + 1];
        let keys: Vec<usize> = points.iter().map(|p| Self::key(cells, p)).collect();
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for c in 1..counts.len() {
            counts[c] += counts[c - 1];
        }
        let start = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; points.len()];
        for (i, &k) in keys.iter().enumerate() {
            items[fill[k]] = i as u32;
            fill[k] += 1;
        }
        BucketGrid { cells, start, items }
    }

    fn key(cells: usize, p: &TorusPoint) -> usize {
        let cx = ((p.x() * cells as f64) as usize).min(cells - 1);
        let cy = ((p.y() * cells as f64) as usize).min(cells - 1);
        cy * cells + cx
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    pub fn cell_size(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn cell_of(&self, p: &TorusPoint) -> (usize, usize) {
        let k = Self::key(self.cells, p);
        (k % self.cells, k / self.cells)
    }

    pub fn cell_items(&self, cx: usize, cy: usize) -> &[u32] {
        let k = cy * self.cells + cx;
        &self.items[self.start[k]..self.start[k + 1]]
    }

    /// Distinct cells within `reach` cells (Chebyshev) of `(cx, cy)`, wrapping.
    pub fn neighborhood(&self, cx: usize, cy: usize, reach: usize) -> Vec<(usize, usize)> {
        let xs = wrapped_range(cx, reach, self.cells);
        let ys = wrapped_range(cy, reach, self.cells);
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for &y in &ys {
            for &x in &xs {
                out.push((x, y));
            }
        }
        out
    }
}

fn wrapped_range(c: usize, reach: usize, cells: usize) -> Vec<usize> {
    if 2 * reach + 1 >= cells {
        return (0..cells).collect();
    }
    (0..=2 * reach)
        .map(|k| (c + cells + k - reach) % cells)
        .collect()
}
