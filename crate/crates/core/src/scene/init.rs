//! Scene initialization from sparse points.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ingest::SfmPoint;
use crate::linalg::{self, Vec3};
use crate::scene::cloud::{Gaussian, GaussianCloud, SH_LEN};
use crate::scene::sh;

pub const INITIAL_OPACITY: f64 = 0.1;
/// Floor on the neighbor distance so coincident points still get a finite
/// log-scale.
pub const MIN_NEIGHBOR_DISTANCE: f64 = 1e-7;

const K: usize = 3;

/// Uniform hash grid for exact k-nearest-neighbor queries.
struct Grid<'a> {
    points: &'a [Vec3],
    origin: Vec3,
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    max_ring: i64,
    key_hi: [i64; 3],
}

impl<'a> Grid<'a> {
    fn new(points: &'a [Vec3]) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let span = linalg::sub(hi, lo);
        let longest = span[0].max(span[1]).max(span[2]);
        // aim for about two points per occupied cell
        let cell = if longest > 0.0 {
            let vol: f64 = span.iter().map(|s| s.max(longest * 1e-3)).product();
            (2.0 * vol / points.len() as f64).cbrt()
        } else {
            1.0
        };
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut grid = Self {
            points,
            origin: lo,
            cell,
            cells: HashMap::new(),
            max_ring: 0,
            key_hi: [0; 3],
        };
        for (i, p) in points.iter().enumerate() {
            cells.entry(grid.key(*p)).or_default().push(i);
        }
        grid.max_ring = (0..3)
            .map(|a| (span[a] / cell).ceil() as i64 + 1)
            .max()
            .unwrap_or(1);
        grid.key_hi = grid.key(hi);
        grid.cells = cells;
        grid
    }

    fn key(&self, p: Vec3) -> [i64; 3] {
        [0, 1, 2].map(|a| ((p[a] - self.origin[a]) / self.cell).floor() as i64)
    }

    /// The `K` smallest distances from point `i` to other points, ascending.
    fn nearest(&self, i: usize) -> [f64; K] {
        let p = self.points[i];
        let home = self.key(p);
        let mut best = [f64::INFINITY; K];
        let mut ring = 0i64;
        loop {
            // keys are confined to [0, key_hi] on each axis
            let lo = [0, 1, 2].map(|a| (-ring).max(-home[a]));
            let hi = [0, 1, 2].map(|a| ring.min(self.key_hi[a] - home[a]));
            for dx in lo[0]..=hi[0] {
                for dy in lo[1]..=hi[1] {
                    for dz in lo[2]..=hi[2] {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        let key = [home[0] + dx, home[1] + dy, home[2] + dz];
                        if let Some(ids) = self.cells.get(&key) {
                            for &j in ids {
                                if j != i {
                                    insert_sorted(&mut best, point_distance(p, self.points[j]));
                                }
                            }
                        }
                    }
                }
            }
            // every unvisited point is at least `ring * cell` away
            if best[K - 1] <= ring as f64 * self.cell || ring > self.max_ring {
                return best;
            }
            ring += 1;
        }
    }
}

#[inline]
fn point_distance(a: Vec3, b: Vec3) -> f64 {
    linalg::norm(linalg::sub(a, b))
}

fn insert_sorted(best: &mut [f64; K], d: f64) {
    if d >= best[K - 1] {
        return;
    }
    let mut k = K - 1;
    while k > 0 && best[k - 1] > d {
        best[k] = best[k - 1];
        k -= 1;
    }
    best[k] = d;
}

/// Mean distance from each point to its three nearest neighbors.
pub fn mean_neighbor_distances(points: &[Vec3]) -> Result<Vec<f64>> {
    if points.len() < K + 1 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let grid = Grid::new(points);
    Ok((0..points.len())
        .map(|i| {
            let d = grid.nearest(i);
            (d[0] + d[1] + d[2]) / K as f64
        })
        .collect())
}

/// One isotropic Gaussian per sparse point, sized by its three nearest
/// neighbors, opacity 0.1, SH DC set from the point color.
pub fn init_from_points(points: &[SfmPoint]) -> Result<GaussianCloud> {
    let positions: Vec<Vec3> = points.iter().map(|p| p.position).collect();
    let dists = mean_neighbor_distances(&positions)?;
    let opacity_logit = linalg::logit(INITIAL_OPACITY);
    let gaussians = points.iter().zip(dists).map(|(p, d)| {
        let mut coeffs = [0.0; SH_LEN];
        for c in 0..3 {
            coeffs[c] = sh::rgb_to_dc(p.color[c]);
        }
        Gaussian {
            mean: p.position,
            log_scale: [d.max(MIN_NEIGHBOR_DISTANCE).ln(); 3],
            rotation: linalg::QUAT_IDENTITY,
            opacity_logit,
            sh: coeffs,
        }
    });
    Ok(GaussianCloud::from_gaussians(gaussians, 0))
}
