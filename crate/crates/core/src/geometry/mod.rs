//! Random geometric graphs on the unit torus `[0,1)²`.

mod components;
mod graph;
mod grid;

pub use components::{connected_components, ComponentReport, DisjointSet, GIANT_COMPONENT_MEAN_DEGREE};
pub use graph::{build_rgg, build_rgg_replica, Graph};
pub use grid::BucketGrid;

/// A point on the unit torus. Coordinates are always kept in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    x: f64,
    y: f64,
}

impl TorusPoint {
    /// Wraps arbitrary finite coordinates onto the torus.
    pub fn new(x: f64, y: f64) -> Self {
        TorusPoint {
            x: wrap_unit(x),
            y: wrap_unit(y),
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        TorusPoint::new(self.x + dx, self.y + dy)
    }

    /// Shortest displacement `q - self` among the periodic images of `q`.
    pub fn displacement_to(&self, q: &TorusPoint) -> (f64, f64) {
        (min_image(q.x - self.x), min_image(q.y - self.y))
    }
}

/// Maps a real coordinate into `[0, 1)`.
pub fn wrap_unit(v: f64) -> f64 {
    let w = v - v.floor();
    // v slightly below an integer can round up to exactly 1.0
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Nearest periodic image of a coordinate difference, in `[-0.5, 0.5]`.
pub fn min_image(d: f64) -> f64 {
    d - d.round()
}

/// Euclidean distance between the closest periodic images of `p` and `q`.
pub fn torus_distance(p: &TorusPoint, q: &TorusPoint) -> f64 {
    let (dx, dy) = p.displacement_to(q);
    dx.hypot(dy)
}
