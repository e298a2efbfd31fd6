//! Clipped Voronoi diagrams of point seeds in an axis-aligned box.
//!
//! Each cell is cut out of the box by successive half-plane clips against the
//! perpendicular bisectors of neighboring seeds. Every polygon edge carries a
//! label (box side or cutting seed), so each final vertex is known as the
//! meeting point of two labeled lines. Vertex coordinates are then recomputed
//! from a canonical formula of the sorted defining seeds, which makes shared
//! vertices bit-identical across cells and lets the mesh be assembled by
//! exact coordinate matching.

use super::{MeshError, PolygonalMesh};
use crate::geometry::Point2;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Label {
    /// Box side: 0 bottom, 1 right, 2 top, 3 left.
    Side(u8),
    /// Bisector against another seed.
    Seed(usize),
}

#[derive(Debug, Clone, Copy)]
struct LVert {
    p: Point2,
    /// Label of the edge leaving this vertex.
    out: Label,
}

fn initial_box(lo: Point2, hi: Point2) -> Vec<LVert> {
    vec![
        LVert { p: Point2::new(lo.x, lo.y), out: Label::Side(0) },
        LVert { p: Point2::new(hi.x, lo.y), out: Label::Side(1) },
        LVert { p: Point2::new(hi.x, hi.y), out: Label::Side(2) },
        LVert { p: Point2::new(lo.x, hi.y), out: Label::Side(3) },
    ]
}

/// Clip `cell` by the half-plane of points closer to `si` than to `sj`.
fn clip_bisector(cell: &[LVert], si: Point2, sj: Point2, j: usize) -> Vec<LVert> {
    let d = sj - si;
    let m = (si + sj).scale(0.5);
    let f = |p: Point2| (p - m).dot(d);
    let n = cell.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let a = cell[k];
        let b = cell[(k + 1) % n];
        let fa = f(a.p);
        let fb = f(b.p);
        let inter = |fa: f64, fb: f64| {
            let t = fa / (fa - fb);
            a.p + (b.p - a.p) * t
        };
        if fa <= 0.0 {
            if fb <= 0.0 {
                out.push(b);
            } else {
                // leaving: cut vertex starts the bisector edge
                out.push(LVert { p: inter(fa, fb), out: Label::Seed(j) });
            }
        } else if fb <= 0.0 {
            // entering: cut vertex continues the original edge label
            out.push(LVert { p: inter(fa, fb), out: a.out });
            out.push(b);
        }
    }
    out
}

fn circumcenter(a: Point2, b: Point2, c: Point2) -> Point2 {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    let na = a.dot(a);
    let nb = b.dot(b);
    let nc = c.dot(c);
    let ux = (na * (b.y - c.y) + nb * (c.y - a.y) + nc * (a.y - b.y)) / d;
    let uy = (na * (c.x - b.x) + nb * (a.x - c.x) + nc * (b.x - a.x)) / d;
    Point2::new(ux, uy)
}

/// Intersection of the (p, q) bisector with a box side, computed from the
/// index-sorted seed pair so that both incident cells agree bitwise.
fn bisector_side_point(p: Point2, q: Point2, side: u8, lo: Point2, hi: Point2, fallback: Point2) -> Point2 {
    let d = q - p;
    let rhs = 0.5 * (q.dot(q) - p.dot(p));
    match side {
        0 | 2 => {
            let y = if side == 0 { lo.y } else { hi.y };
            if d.x.abs() < 1e-300 {
                return fallback;
            }
            Point2::new((rhs - y * d.y) / d.x, y)
        }
        1 | 3 => {
            let x = if side == 1 { hi.x } else { lo.x };
            if d.y.abs() < 1e-300 {
                return fallback;
            }
            Point2::new(x, (rhs - x * d.x) / d.y)
        }
        _ => unreachable!(),
    }
}

fn corner(a: u8, b: u8, lo: Point2, hi: Point2, fallback: Point2) -> Point2 {
    let pair = (a.min(b), a.max(b));
    match pair {
        (0, 1) => Point2::new(hi.x, lo.y),
        (1, 2) => Point2::new(hi.x, hi.y),
        (2, 3) => Point2::new(lo.x, hi.y),
        (0, 3) => Point2::new(lo.x, lo.y),
        _ => fallback,
    }
}

/// Canonical position of a vertex from the labels of its two incident edges.
fn canonical_position(
    i: usize,
    seeds: &[Point2],
    l_in: Label,
    l_out: Label,
    lo: Point2,
    hi: Point2,
    fallback: Point2,
) -> Point2 {
    match (l_in, l_out) {
        (Label::Seed(a), Label::Seed(b)) if a != b => {
            let mut idx = [i, a, b];
            idx.sort_unstable();
            circumcenter(seeds[idx[0]], seeds[idx[1]], seeds[idx[2]])
        }
        (Label::Seed(a), Label::Side(k)) | (Label::Side(k), Label::Seed(a)) => {
            let (p, q) = (i.min(a), i.max(a));
            bisector_side_point(seeds[p], seeds[q], k, lo, hi, fallback)
        }
        (Label::Side(a), Label::Side(b)) => corner(a, b, lo, hi, fallback),
        _ => fallback,
    }
}

/// One clipped Voronoi cell, with the security-radius stopping rule: a seed
/// farther than twice the current max vertex distance cannot cut the cell.
fn voronoi_cell(
    i: usize,
    seeds: &[Point2],
    grid: &SeedGrid,
    lo: Point2,
    hi: Point2,
) -> Result<Vec<LVert>, MeshError> {
    let si = seeds[i];
    let mut cell = initial_box(lo, hi);
    let mut radius =
        cell.iter().map(|v| v.p.dist(si)).fold(0.0, f64::max);
    let mut ring = 0usize;
    loop {
        let min_dist = grid.ring_min_dist(si, ring);
        if min_dist > 2.0 * radius && ring > 0 {
            break;
        }
        let Some(mut cands) = grid.ring_seeds(si, ring) else {
            break; // past the last occupied ring
        };
        cands.retain(|&j| j != i);
        cands.sort_by(|&a, &b| {
            seeds[a]
                .dist(si)
                .partial_cmp(&seeds[b].dist(si))
                .unwrap()
                .then(a.cmp(&b))
        });
        for j in cands {
            if seeds[j].dist(si) > 2.0 * radius {
                continue;
            }
            cell = clip_bisector(&cell, si, seeds[j], j);
            if cell.len() < 3 {
                return Err(MeshError::Generation(format!("degenerate Voronoi cell for seed {i}")));
            }
            radius = cell.iter().map(|v| v.p.dist(si)).fold(0.0, f64::max);
        }
        ring += 1;
    }
    Ok(cell)
}

struct SeedGrid {
    lo: Point2,
    g: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
    max_ring: usize,
}

impl SeedGrid {
    fn new(seeds: &[Point2], lo: Point2, hi: Point2) -> Self {
        let w = hi.x - lo.x;
        let h = hi.y - lo.y;
        let n = seeds.len().max(1);
        let g = (w * h / n as f64).sqrt().max(1e-12);
        let nx = (w / g).ceil().max(1.0) as usize;
        let ny = (h / g).ceil().max(1.0) as usize;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (i, s) in seeds.iter().enumerate() {
            let bx = (((s.x - lo.x) / g) as usize).min(nx - 1);
            let by = (((s.y - lo.y) / g) as usize).min(ny - 1);
            buckets[by * nx + bx].push(i);
        }
        SeedGrid { lo, g, nx, ny, buckets, max_ring: nx.max(ny) }
    }

    fn bucket_of(&self, p: Point2) -> (isize, isize) {
        let bx = (((p.x - self.lo.x) / self.g) as isize).clamp(0, self.nx as isize - 1);
        let by = (((p.y - self.lo.y) / self.g) as isize).clamp(0, self.ny as isize - 1);
        (bx, by)
    }

    /// Lower bound for the distance from `p` to any seed in ring `r`.
    fn ring_min_dist(&self, _p: Point2, r: usize) -> f64 {
        if r == 0 {
            0.0
        } else {
            (r as f64 - 1.0) * self.g
        }
    }

    /// Seeds whose bucket lies on ring `r` around the bucket of `p`.
    fn ring_seeds(&self, p: Point2, r: usize) -> Option<Vec<usize>> {
        if r > self.max_ring {
            return None;
        }
        let (cx, cy) = self.bucket_of(p);
        let mut out = Vec::new();
        let r = r as isize;
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs().max(dy.abs()) != r {
                    continue;
                }
                let bx = cx + dx;
                let by = cy + dy;
                if bx < 0 || by < 0 || bx >= self.nx as isize || by >= self.ny as isize {
                    continue;
                }
                out.extend_from_slice(&self.buckets[by as usize * self.nx + bx as usize]);
            }
        }
        Some(out)
    }
}

/// All clipped Voronoi cells as labeled polygons.
fn voronoi_polygons(seeds: &[Point2], lo: Point2, hi: Point2) -> Result<Vec<Vec<LVert>>, MeshError> {
    let grid = SeedGrid::new(seeds, lo, hi);
    (0..seeds.len())
        .map(|i| voronoi_cell(i, seeds, &grid, lo, hi))
        .collect()
}

/// Centroids of the Voronoi cells (one Lloyd step).
pub(crate) fn lloyd_step(seeds: &[Point2], lo: Point2, hi: Point2) -> Result<Vec<Point2>, MeshError> {
    let polys = voronoi_polygons(seeds, lo, hi)?;
    Ok(polys
        .iter()
        .map(|poly| {
            let pts: Vec<Point2> = poly.iter().map(|v| v.p).collect();
            crate::geometry::centroid(&pts)
        })
        .collect())
}

/// Clipped Voronoi tessellation of the box `[lo, hi]` as a conforming mesh.
pub fn voronoi_mesh(seeds: &[Point2], lo: Point2, hi: Point2) -> Result<PolygonalMesh, MeshError> {
    let polys = voronoi_polygons(seeds, lo, hi)?;
    let mut vertex_ids: HashMap<(u64, u64), usize> = HashMap::new();
    let mut vertices: Vec<Point2> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::with_capacity(polys.len());

    for (i, poly) in polys.iter().enumerate() {
        let n = poly.len();
        let mut cell = Vec::with_capacity(n);
        for k in 0..n {
            let l_in = poly[(k + n - 1) % n].out;
            let l_out = poly[k].out;
            let p = canonical_position(i, seeds, l_in, l_out, lo, hi, poly[k].p);
            let key = (p.x.to_bits(), p.y.to_bits());
            let id = *vertex_ids.entry(key).or_insert_with(|| {
                vertices.push(p);
                vertices.len() - 1
            });
            if cell.last() != Some(&id) {
                cell.push(id);
            }
        }
        while cell.len() > 1 && cell.first() == cell.last() {
            cell.pop();
        }
        if cell.len() < 3 {
            return Err(MeshError::Generation(format!("Voronoi cell {i} collapsed to fewer than 3 vertices")));
        }
        cells.push(cell);
    }
    PolygonalMesh::new(vertices, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_seed_gives_the_box() {
        let m = voronoi_mesh(&[Point2::new(0.5, 0.5)], Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap();
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.n_vertices(), 4);
        assert_abs_diff_eq!(m.total_area(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn two_seeds_split_at_the_bisector() {
        let seeds = [Point2::new(0.25, 0.5), Point2::new(0.75, 0.5)];
        let m = voronoi_mesh(&seeds, Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap();
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.n_vertices(), 6);
        for c in 0..2 {
            let g = m.cell_geometry(c);
            assert_abs_diff_eq!(g.area, 0.5, epsilon = 1e-14);
        }
        // split line x = 1/2
        let on_split: Vec<_> = m.vertices.iter().filter(|v| (v.x - 0.5).abs() < 1e-15).collect();
        assert_eq!(on_split.len(), 2);
    }

    #[test]
    fn random_seeds_tile_the_box_exactly() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let seeds: Vec<Point2> = (0..40).map(|_| Point2::new(rng.gen(), rng.gen())).collect();
        let m = voronoi_mesh(&seeds, Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap();
        assert_eq!(m.n_cells(), 40);
        assert_abs_diff_eq!(m.total_area(), 1.0, epsilon = 1e-10);
        // interior edges must have exactly two incident cells (guaranteed by
        // construction, but this exercises the canonical vertex matching)
        assert!(m.edges.iter().any(|e| e.cells[1].is_some()));
    }
}
