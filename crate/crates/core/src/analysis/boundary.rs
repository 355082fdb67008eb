use std::collections::{HashMap, HashSet};
use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::geometry::min_image;
use crate::meanfield::FieldGrid;

/// Contours with fewer points are dropped.
pub const MIN_CONTOUR_POINTS: usize = 8;

/// Closed zero-level curve of the order parameter, traversed with the
/// positive (A) side on the left. Points are unwrapped: consecutive points
/// are close in the plane, and the last point equals the first shifted by
/// `winding`.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub points: Vec<(f64, f64)>,
    /// Net number of times the curve wraps the torus along x and y.
    pub winding: (i32, i32),
    /// Grid spacing of the field the contour came from.
    pub h: f64,
}

impl Contour {
    /// Distinct points; the closing duplicate is excluded.
    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_contractible(&self) -> bool {
        self.winding == (0, 0)
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1)).sum()
    }

    /// Point `k` of the periodic sequence, shifted by whole windings so that
    /// indices outside `0..len` continue the curve smoothly.
    fn point(&self, k: isize) -> (f64, f64) {
        let n = self.len() as isize;
        let q = k.div_euclid(n);
        let (x, y) = self.points[k.rem_euclid(n) as usize];
        (x + (q * self.winding.0 as isize) as f64, y + (q * self.winding.1 as isize) as f64)
    }

    /// Signed area enclosed, positive when A is inside. Only meaningful for
    /// contractible contours.
    pub fn signed_area(&self) -> f64 {
        0.5 * self.points.windows(2).map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1).sum::<f64>()
    }
}

/// Zero-level contours of a periodic scalar field stored row-major
/// (`s[j m + i]` at cell center `((i + ½)/m, (j + ½)/m)`). Values `> 0`
/// count as A. Crossings are linearly interpolated along the edges joining
/// cell centers; saddle squares are resolved by the mean of their corners.
pub fn extract_zero_contours(s: &[f64], m: usize) -> Vec<Contour> {
    assert_eq!(s.len(), m * m, "field is not m x m");
    let h = 1.0 / m as f64;
    let idx = |i: usize, j: usize| (j % m) * m + (i % m);
    let positive = |i: usize, j: usize| s[idx(i, j)] > 0.0;

    // Edge ids: horizontal (i,j)-(i+1,j) is 2k, vertical (i,j)-(i,j+1) is 2k+1.
    let crossing = |edge: usize| -> (f64, f64) {
        let k = edge / 2;
        let (i, j) = (k % m, k / m);
        let (di, dj) = if edge.is_multiple_of(2) { (1, 0) } else { (0, 1) };
        let a = s[idx(i, j)];
        let b = s[idx(i + di, j + dj)];
        let t = if a == b { 0.5 } else { a / (a - b) };
        (
            (i as f64 + 0.5 + t * di as f64) * h,
            (j as f64 + 0.5 + t * dj as f64) * h,
        )
    };

    // outgoing[edge] = edge where the contour leaves the square it entered
    let mut outgoing: HashMap<usize, usize> = HashMap::new();
    for j in 0..m {
        for i in 0..m {
            let corners = [positive(i, j), positive(i + 1, j), positive(i + 1, j + 1), positive(i, j + 1)];
            let edges = [
                2 * idx(i, j),
                2 * idx(i + 1, j) + 1,
                2 * idx(i, j + 1),
                2 * idx(i, j) + 1,
            ];
            // counterclockwise, an edge going A -> B is where the contour enters
            let entries: Vec<usize> = (0..4).filter(|&e| corners[e] && !corners[(e + 1) % 4]).collect();
            let exits: Vec<usize> = (0..4).filter(|&e| !corners[e] && corners[(e + 1) % 4]).collect();
            match entries.len() {
                0 => {}
                1 => {
                    outgoing.insert(edges[entries[0]], edges[exits[0]]);
                }
                _ => {
                    let center = 0.25 * (s[idx(i, j)] + s[idx(i + 1, j)] + s[idx(i + 1, j + 1)] + s[idx(i, j + 1)]);
                    for &e in &entries {
                        let partner = if center > 0.0 { (e + 1) % 4 } else { (e + 3) % 4 };
                        outgoing.insert(edges[e], edges[partner]);
                    }
                }
            }
        }
    }

    let mut starts: Vec<usize> = outgoing.keys().copied().collect();
    starts.sort_unstable();
    let mut visited: HashSet<usize> = HashSet::with_capacity(outgoing.len());
    let mut contours = Vec::new();
    for start in starts {
        if visited.contains(&start) {
            continue;
        }
        let mut pts = vec![crossing(start)];
        let mut edge = start;
        visited.insert(edge);
        loop {
            let next = outgoing[&edge];
            let prev = *pts.last().expect("non-empty");
            let raw = crossing(next);
            pts.push((prev.0 + min_image(raw.0 - prev.0), prev.1 + min_image(raw.1 - prev.1)));
            if next == start {
                break;
            }
            visited.insert(next);
            edge = next;
        }
        if pts.len() - 1 < MIN_CONTOUR_POINTS {
            continue;
        }
        let first = pts[0];
        let last = pts[pts.len() - 1];
        let winding = ((last.0 - first.0).round() as i32, (last.1 - first.1).round() as i32);
        contours.push(Contour { points: pts, winding, h });
    }
    contours
}

/// Zero-level contours of `s = n_A - n_B`. Empty when `s` has one sign.
pub fn extract_boundary(field: &FieldGrid) -> Vec<Contour> {
    extract_zero_contours(&field.s(), field.m())
}

/// Circle through points by algebraic (Kåsa) least squares refined by
/// Gauss-Newton on geometric distances. Returns `(cx, cy, radius)`.
pub fn fit_circle(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len();
    if n < 3 {
        return None;
    }
    let (mx, my) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (mx / n as f64, my / n as f64);
    let (mut suu, mut svv, mut suv, mut suuu, mut svvv, mut suvv, mut svuu) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut scale: f64 = 0.0;
    for &(x, y) in points {
        let (u, v) = (x - mx, y - my);
        suu += u * u;
        svv += v * v;
        suv += u * v;
        suuu += u * u * u;
        svvv += v * v * v;
        suvv += u * v * v;
        svuu += v * u * u;
        scale = scale.max(u.abs()).max(v.abs());
    }
    let det = suu * svv - suv * suv;
    if !(det.abs() > 1e-12 * (suu + svv).powi(2)) || scale == 0.0 {
        return None;
    }
    let b1 = 0.5 * (suuu + suvv);
    let b2 = 0.5 * (svvv + svuu);
    let uc = (b1 * svv - b2 * suv) / det;
    let vc = (suu * b2 - suv * b1) / det;
    let (mut cx, mut cy) = (uc + mx, vc + my);
    let mut radius = (uc * uc + vc * vc + (suu + svv) / n as f64).sqrt();
    for _ in 0..20 {
        // residual d_i - R, Jacobian rows (-(x-cx)/d, -(y-cy)/d, -1)
        let mut jtj = [[0.0f64; 3]; 3];
        let mut jtr = [0.0f64; 3];
        for &(x, y) in points {
            let (dx, dy) = (x - cx, y - cy);
            let d = dx.hypot(dy);
            if d == 0.0 {
                return None;
            }
            let row = [-dx / d, -dy / d, -1.0];
            let res = d - radius;
            for a in 0..3 {
                jtr[a] += row[a] * res;
                for b in 0..3 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let delta = solve3(jtj, jtr.map(|v| -v))?;
        cx += delta[0];
        cy += delta[1];
        radius += delta[2];
        if delta.iter().map(|d| d.abs()).fold(0.0, f64::max) < 1e-14 * radius.abs().max(1.0) {
            break;
        }
    }
    if !(radius.is_finite() && radius > 0.0) {
        return None;
    }
    Some((cx, cy, radius))
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = b[r];
        }
        *o = det(m) / d;
    }
    Some(out)
}

/// Local curvature radius and normal speed at one boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    /// Positive when the center of curvature lies on the A side.
    pub radius: f64,
    /// Positive when the boundary moves toward the A side.
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurvatureSpeed {
    pub samples: Vec<BoundarySample>,
    /// Points whose window was collinear or whose radius was below `2h`.
    pub skipped_fit: usize,
    /// Points whose normal did not meet the later contour within `R/10`.
    pub skipped_displacement: usize,
}

pub const BOUNDARY_CSV_HEADER: &str = "t,point_index,x,y,R,v";

impl CurvatureSpeed {
    pub fn write_csv<W: Write>(&self, mut w: W, t: f64, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(w, "{BOUNDARY_CSV_HEADER}")?;
        }
        for p in &self.samples {
            writeln!(w, "{t},{},{},{},{},{}", p.index, p.x, p.y, p.radius, p.speed)?;
        }
        Ok(())
    }
}

/// Half-window for the circle fit at a point on a curve with mean point
/// spacing `step` and estimated radius `radius`.
fn fit_half_window(radius: f64, step: f64) -> usize {
    ((0.2 * radius.abs() / step).round() as usize).max(5)
}

/// Signed curvature radius at every point of `contour` from circle fits
/// over centered windows. `None` where the fit is degenerate or below
/// `2h`.
pub fn curvature_radii(contour: &Contour) -> Vec<Option<(f64, (f64, f64))>> {
    let n = contour.len();
    let step = contour.length() / n as f64;
    let max_half = (n.saturating_sub(1)) / 2;
    (0..n)
        .map(|k| {
            let window = |w: usize| -> Vec<(f64, f64)> {
                (-(w as isize)..=w as isize).map(|o| contour.point(k as isize + o)).collect()
            };
            let mut w = 5.min(max_half);
            let mut fit = fit_circle(&window(w))?;
            for _ in 0..3 {
                let next = fit_half_window(fit.2, step).min(max_half);
                if next == w {
                    break;
                }
                w = next;
                fit = fit_circle(&window(w))?;
            }
            let (cx, cy, r) = fit;
            if r < 2.0 * contour.h {
                return None;
            }
            // left normal from the local tangent
            let a = contour.point(k as isize - 1);
            let b = contour.point(k as isize + 1);
            let (tx, ty) = (b.0 - a.0, b.1 - a.1);
            let norm = tx.hypot(ty);
            if norm == 0.0 {
                return None;
            }
            let left = (-ty / norm, tx / norm);
            let p = contour.point(k as isize);
            let toward_center = (cx - p.0) * left.0 + (cy - p.1) * left.1;
            let signed = if toward_center >= 0.0 { r } else { -r };
            Some((signed, left))
        })
        .collect()
}

/// Pairs every point of `earlier` with the crossing of its normal line
/// with `later`, `dt` time units afterwards.
pub fn curvature_and_speed(earlier: &Contour, later: &[Contour], dt: f64) -> Result<CurvatureSpeed> {
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("time between contours must be positive, got {dt}")));
    }
    if earlier.len() < MIN_CONTOUR_POINTS {
        return Err(Error::InsufficientData("contour too short".into()));
    }
    let radii = curvature_radii(earlier);
    let mut out = CurvatureSpeed::default();
    for (k, entry) in radii.into_iter().enumerate() {
        let Some((radius, normal)) = entry else {
            out.skipped_fit += 1;
            continue;
        };
        let p = earlier.points[k];
        let limit = radius.abs() / 10.0;
        match normal_crossing(p, normal, later, limit) {
            Some(lambda) => out.samples.push(BoundarySample {
                index: k,
                x: p.0.rem_euclid(1.0),
                y: p.1.rem_euclid(1.0),
                radius,
                speed: lambda / dt,
            }),
            None => out.skipped_displacement += 1,
        }
    }
    Ok(out)
}

/// Signed distance along `normal` from `p` to the nearest crossing with any
/// segment of `curves`, if one lies within `limit`.
fn normal_crossing(p: (f64, f64), normal: (f64, f64), curves: &[Contour], limit: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for c in curves {
        for w in c.points.windows(2) {
            let a = (p.0 + min_image(w[0].0 - p.0), p.1 + min_image(w[0].1 - p.1));
            let b = (a.0 + (w[1].0 - w[0].0), a.1 + (w[1].1 - w[0].1));
            // p + λ n = a + μ (b - a)
            let e = (b.0 - a.0, b.1 - a.1);
            let den = normal.0 * (-e.1) - normal.1 * (-e.0);
            if den.abs() < 1e-15 {
                continue;
            }
            let rhs = (a.0 - p.0, a.1 - p.1);
            let lambda = (rhs.0 * (-e.1) - rhs.1 * (-e.0)) / den;
            let mu = (normal.0 * rhs.1 - normal.1 * rhs.0) / den;
            if !(0.0..=1.0).contains(&mu) || lambda.abs() > limit {
                continue;
            }
            if best.is_none_or(|b| lambda.abs() < b.abs()) {
                best = Some(lambda);
            }
        }
    }
    best
}
