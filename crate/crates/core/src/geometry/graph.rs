use std::io::{BufRead, Write};

use rand::Rng;

use super::{torus_distance, BucketGrid, TorusPoint};
use crate::error::{invalid, Error, Result};
use crate::rng::{stream_rng, Purpose};

/// Random geometric graph: agents at fixed torus positions, linked when
/// `0 < distance < r`. Adjacency is stored in compressed rows; each row is
/// sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    r: f64,
    seed: u64,
    positions: Vec<TorusPoint>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

/// Places `n` agents uniformly at random and links them within radius `r`.
/// Positions come from the graph stream of `seed`.
pub fn build_rgg(n: usize, r: f64, seed: u64) -> Result<Graph> {
    build_rgg_replica(n, r, seed, 0)
}

/// Independent graph for replica `replica` of the same root seed.
pub fn build_rgg_replica(n: usize, r: f64, seed: u64, replica: u64) -> Result<Graph> {
    if n < 2 {
        return Err(invalid("n", format!("need at least 2 agents, got {n}")));
    }
    let mut rng = stream_rng(seed, Purpose::Graph, replica);
    let positions = (0..n)
        .map(|_| TorusPoint::new(rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    Graph::from_positions(positions, r, seed)
}

impl Graph {
    /// Links the given positions within radius `r` using a bucket grid of
    /// `floor(1/r)` cells per axis, so only the 3×3 surrounding cells are
    /// scanned for each node.
    pub fn from_positions(positions: Vec<TorusPoint>, r: f64, seed: u64) -> Result<Graph> {
        validate_radius(r)?;
        let n = positions.len();
        if n > u32::MAX as usize {
            return Err(invalid("n", "more than 2^32 agents"));
        }
        let grid = BucketGrid::new(&positions, r);
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        let mut row = Vec::new();
        for (i, p) in positions.iter().enumerate() {
            row.clear();
            let (cx, cy) = grid.cell_of(p);
            for (x, y) in grid.neighborhood(cx, cy, 1) {
                for &j in grid.cell_items(x, y) {
                    if j as usize == i {
                        continue;
                    }
                    let d = torus_distance(p, &positions[j as usize]);
                    if d > 0.0 && d < r {
                        row.push(j);
                    }
                }
            }
            row.sort_unstable();
            neighbors.extend_from_slice(&row);
            offsets.push(neighbors.len());
        }
        Ok(Graph {
            r,
            seed,
            positions,
            offsets,
            neighbors,
        })
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn positions(&self) -> &[TorusPoint] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> TorusPoint {
        self.positions[i]
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        self.neighbors.len() as f64 / self.n() as f64
    }

    /// Expected mean degree `π r² (n - 1)` of a uniform random placement.
    pub fn expected_mean_degree(n: usize, r: f64) -> f64 {
        std::f64::consts::PI * r * r * (n as f64 - 1.0)
    }

    /// Radius giving mean degree `k` in the large-`n` limit, `k = π r² n`.
    pub fn radius_for_mean_degree(n: usize, k: f64) -> f64 {
        (k / (std::f64::consts::PI * n as f64)).sqrt()
    }

    /// The `k`-th directed edge `(source, target)` in row order; every
    /// undirected edge appears twice, once per orientation.
    pub fn directed_edge(&self, k: usize) -> (usize, usize) {
        let source = self.offsets.partition_point(|&o| o <= k) - 1;
        (source, self.neighbors[k] as usize)
    }

    pub fn directed_edge_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Writes the plain-text form: `n r seed`, then `x y` per node, then the
    /// neighbor list of each node on its own line.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.n(), self.r, self.seed)?;
        for p in &self.positions {
            writeln!(w, "{} {}", p.x(), p.y())?;
        }
        for i in 0..self.n() {
            let row: Vec<String> = self.neighbors(i).iter().map(|j| j.to_string()).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    /// Reads the plain-text form back. The stored adjacency is taken as-is
    /// after checking symmetry and bounds.
    pub fn read_text<R: BufRead>(r: R) -> Result<Graph> {
        let mut lines = r.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?)),
                None => Err(Error::Parse {
                    line: 0,
                    msg: format!("unexpected end of input, expected {what}"),
                }),
            }
        };
        let (ln, header) = next("header")?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(ln, "header must be `n r seed`"));
        }
        let n: usize = fields[0].parse().map_err(|_| parse_err(ln, "bad n"))?;
        let radius: f64 = fields[1].parse().map_err(|_| parse_err(ln, "bad r"))?;
        let seed: u64 = fields[2].parse().map_err(|_| parse_err(ln, "bad seed"))?;
        validate_radius(radius)?;

        let mut positions = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = next("position")?;
            let mut it = l.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => {
                    if !(0.0..1.0).contains(&x) || !(0.0..1.0).contains(&y) {
                        return Err(parse_err(ln, "coordinate outside [0,1)"));
                    }
                    positions.push(TorusPoint::new(x, y));
                }
                _ => return Err(parse_err(ln, "expected `x y`")),
            }
        }
        let mut offsets = vec![0];
        let mut neighbors = Vec::new();
        for _ in 0..n {
            let (ln, l) = next("neighbor list")?;
            for tok in l.split_whitespace() {
                let j: u32 = tok.parse().map_err(|_| parse_err(ln, "bad neighbor index"))?;
                if j as usize >= n {
                    return Err(parse_err(ln, "neighbor index out of range"));
                }
                neighbors.push(j);
            }
            offsets.push(neighbors.len());
        }
        let g = Graph {
            r: radius,
            seed,
            positions,
            offsets,
            neighbors,
        };
        for i in 0..n {
            for &j in g.neighbors(i) {
                if j as usize == i || g.neighbors(j as usize).binary_search(&(i as u32)).is_err() {
                    return Err(parse_err(0, format!("adjacency not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(g)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn validate_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 0.5) {
        return Err(invalid(
            "r",
            format!("interaction radius must lie in (0, 0.5), got {r}; a disk of radius >= 0.5 wraps onto itself"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(positions: &[TorusPoint], r: f64) -> Vec<Vec<u32>> {
        let n = positions.len();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                let d = torus_distance(&positions[i], &positions[j]);
                if i != j && d > 0.0 && d < r {
                    adj[i].push(j as u32);
                }
            }
        }
        adj
    }

    #[test]
    fn single_pair() {
        let pos = vec![TorusPoint::new(0.1, 0.1), TorusPoint::new(0.1, 0.15)];
        let g = Graph::from_positions(pos, 0.1, 0).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn pair_across_the_seam() {
        let pos = vec![TorusPoint::new(0.99, 0.5), TorusPoint::new(0.01, 0.5)];
        let g = Graph::from_positions(pos, 0.05, 0).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
    }

    #[test]
    fn coincident_points_are_not_neighbors() {
        let pos = vec![TorusPoint::new(0.3, 0.3), TorusPoint::new(0.3, 0.3), TorusPoint::new(0.31, 0.3)];
        let g = Graph::from_positions(pos, 0.1, 0).unwrap();
        assert_eq!(g.neighbors(0), &[2]);
        assert_eq!(g.neighbors(1), &[2]);
        assert_eq!(g.neighbors(2), &[0, 1]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_rgg(100, 0.5, 1).is_err());
        assert!(build_rgg(100, 0.0, 1).is_err());
        assert!(build_rgg(1, 0.1, 1).is_err());
    }

    #[test]
    fn matches_brute_force_n500() {
        for seed in 0..5 {
            let g = build_rgg(500, 0.05, seed).unwrap();
            let adj = brute_force(g.positions(), 0.05);
            for (i, row) in adj.iter().enumerate() {
                assert_eq!(g.neighbors(i), row.as_slice(), "seed {seed} node {i}");
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(build_rgg(300, 0.07, 9).unwrap(), build_rgg(300, 0.07, 9).unwrap());
        assert_ne!(build_rgg(300, 0.07, 9).unwrap(), build_rgg(300, 0.07, 10).unwrap());
    }

    #[test]
    fn directed_edges_cover_rows() {
        let g = build_rgg(200, 0.1, 3).unwrap();
        let mut k = 0;
        for i in 0..g.n() {
            for &j in g.neighbors(i) {
                assert_eq!(g.directed_edge(k), (i, j as usize));
                k += 1;
            }
        }
        assert_eq!(k, g.directed_edge_count());
    }

    #[test]
    fn text_round_trip() {
        let g = build_rgg(150, 0.09, 4).unwrap();
        let mut buf = Vec::new();
        g.write_text(&mut buf).unwrap();
        let back = Graph::read_text(buf.as_slice()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn read_rejects_asymmetric_adjacency() {
        let text = "2 0.1 0\n0.1 0.1\n0.1 0.15\n1\n\n";
        assert!(Graph::read_text(text.as_bytes()).is_err());
    }

    #[test]
    fn mean_degree_at_large_n() {
        // <k> = π r² N ≈ 31.4 for N = 10^5, r = 0.01
        let g = build_rgg(100_000, 0.01, 2).unwrap();
        let k = g.mean_degree();
        assert!((k - 31.4).abs() / 31.4 < 0.05, "mean degree {k}");
    }

    #[test]
    fn mean_degree_within_three_standard_errors() {
        let (n, r) = (10_000, 0.02);
        let ks: Vec<f64> = (0..50).map(|s| build_rgg(n, r, 100 + s).unwrap().mean_degree()).collect();
        let mean = ks.iter().sum::<f64>() / ks.len() as f64;
        let var = ks.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (ks.len() - 1) as f64;
        let se = (var / ks.len() as f64).sqrt();
        let expected = Graph::expected_mean_degree(n, r);
        assert!((mean - expected).abs() < 3.0 * se, "mean {mean} expected {expected} se {se}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn grid_equals_brute_force(n in 2usize..1000, r in 0.01f64..0.45, seed in any::<u64>()) {
            let g = build_rgg(n, r, seed).unwrap();
            let adj = brute_force(g.positions(), r);
            for (i, row) in adj.iter().enumerate() {
                prop_assert_eq!(g.neighbors(i), row.as_slice());
            }
        }
    }
}
