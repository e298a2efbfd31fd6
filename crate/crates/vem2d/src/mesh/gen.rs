//! Generators for the four mesh families: CVT polygons on the unit square,
//! randomly distorted quadrilateral grids, structured triangulations of the
//! unit disk, and CVT meshes mapped from the square onto the disk.

use super::voronoi::{lloyd_step, voronoi_mesh};
use super::{MeshError, PolygonalMesh};
use crate::geometry::{self, Point2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Bookkeeping from a generator run.
#[derive(Debug, Clone, Default)]
pub struct GenStats {
    /// Full regenerations triggered by a degenerate Voronoi cell.
    pub regenerations: usize,
    /// Short interior edges collapsed after clipping.
    pub collapsed_edges: usize,
}

/// Edges shorter than this fraction of the smaller incident cell diameter are
/// collapsed after Voronoi clipping.
const SHORT_EDGE_FRACTION: f64 = 0.08;

/// Centroidal Voronoi tessellation of the unit square.
///
/// Seed count is `round(1/target_h^2)`; Lloyd relaxation moves every seed to
/// its cell centroid. Deterministic for a fixed `rng_seed`.
pub fn generate_cvt(
    target_h: f64,
    lloyd_iterations: usize,
    rng_seed: u64,
) -> Result<(PolygonalMesh, GenStats), MeshError> {
    if !(target_h > 0.0 && target_h <= 1.0) {
        return Err(MeshError::Generation(format!("target_h must be in (0, 1], got {target_h}")));
    }
    let n = (1.0 / (target_h * target_h)).round().max(1.0) as usize;
    cvt_in_box(n, lloyd_iterations, rng_seed, Point2::new(0.0, 0.0), Point2::new(1.0, 1.0))
}

fn cvt_in_box(
    n_seeds: usize,
    lloyd_iterations: usize,
    rng_seed: u64,
    lo: Point2,
    hi: Point2,
) -> Result<(PolygonalMesh, GenStats), MeshError> {
    let mut stats = GenStats::default();
    let mut attempt_seed = rng_seed;
    for _ in 0..8 {
        match cvt_attempt(n_seeds, lloyd_iterations, attempt_seed, lo, hi) {
            Ok((mesh, collapsed)) => {
                stats.collapsed_edges = collapsed;
                return Ok((mesh, stats));
            }
            Err(MeshError::Generation(_)) => {
                stats.regenerations += 1;
                attempt_seed = attempt_seed.wrapping_add(1);
            }
            Err(e) => return Err(e),
        }
    }
    Err(MeshError::Generation(format!(
        "CVT generation kept producing degenerate cells after {} attempts",
        stats.regenerations
    )))
}

fn cvt_attempt(
    n_seeds: usize,
    lloyd_iterations: usize,
    rng_seed: u64,
    lo: Point2,
    hi: Point2,
) -> Result<(PolygonalMesh, usize), MeshError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut seeds: Vec<Point2> = (0..n_seeds)
        .map(|_| Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y)))
        .collect();
    for _ in 0..lloyd_iterations {
        seeds = lloyd_step(&seeds, lo, hi)?;
    }
    let mesh = voronoi_mesh(&seeds, lo, hi)?;
    collapse_short_edges(mesh, lo, hi)
}

/// Merge interior edges much shorter than their cells; near-degenerate
/// Voronoi vertices otherwise break the vertex-distance shape assumption.
fn collapse_short_edges(
    mesh: PolygonalMesh,
    lo: Point2,
    hi: Point2,
) -> Result<(PolygonalMesh, usize), MeshError> {
    let mut vertices = mesh.vertices.clone();
    let mut cells = mesh.cells.clone();
    let mut collapsed = 0usize;

    let is_corner = |p: Point2| {
        (p.x == lo.x || p.x == hi.x) && (p.y == lo.y || p.y == hi.y)
    };
    let same_side = |p: Point2, q: Point2| {
        (p.x == lo.x && q.x == lo.x)
            || (p.x == hi.x && q.x == hi.x)
            || (p.y == lo.y && q.y == lo.y)
            || (p.y == hi.y && q.y == hi.y)
    };

    for _pass in 0..mesh.n_edges() {
        let m = PolygonalMesh::new(vertices.clone(), cells.clone())?;
        // shortest offending edge first
        let mut worst: Option<(usize, f64)> = None;
        for (ei, e) in m.edges.iter().enumerate() {
            let len = m.vertices[e.v[0]].dist(m.vertices[e.v[1]]);
            let h_min = e
                .cells
                .iter()
                .flatten()
                .map(|&c| m.cell_geometry(c).diameter)
                .fold(f64::INFINITY, f64::min);
            if len < SHORT_EDGE_FRACTION * h_min && worst.map_or(true, |(_, l)| len < l) {
                worst = Some((ei, len));
            }
        }
        let Some((ei, _)) = worst else {
            return Ok((m, collapsed));
        };
        let [a, b] = m.edges[ei].v;
        let (pa, pb) = (m.vertices[a], m.vertices[b]);
        let ba = m.boundary_vertex[a];
        let bb = m.boundary_vertex[b];
        let target = match (ba, bb) {
            (false, false) => (pa + pb).scale(0.5),
            (true, false) => pa,
            (false, true) => pb,
            (true, true) => {
                if is_corner(pa) {
                    pa
                } else if is_corner(pb) {
                    pb
                } else if same_side(pa, pb) {
                    (pa + pb).scale(0.5)
                } else {
                    // collapsing would cut a corner; leave the edge alone and
                    // let the shape audit flag the mesh if it matters
                    return Ok((m, collapsed));
                }
            }
        };
        vertices[a] = target;
        for cell in cells.iter_mut() {
            for v in cell.iter_mut() {
                if *v == b {
                    *v = a;
                }
            }
            cell.dedup();
            while cell.len() > 1 && cell.first() == cell.last() {
                cell.pop();
            }
        }
        cells.retain(|c| c.len() >= 3);
        collapsed += 1;
    }
    let m = PolygonalMesh::new(vertices, cells)?;
    Ok((m, collapsed))
}

/// Uniform n x n quadrilateral grid with interior vertices displaced by a
/// uniform random vector of magnitude at most `amplitude / n`.
pub fn generate_distorted_quads(
    n_per_side: usize,
    amplitude: f64,
    rng_seed: u64,
) -> Result<PolygonalMesh, MeshError> {
    if n_per_side < 2 {
        return Err(MeshError::Generation("need at least 2 cells per side".into()));
    }
    if !(0.0..0.5).contains(&amplitude) {
        return Err(MeshError::Generation(format!("amplitude must be in [0, 0.5), got {amplitude}")));
    }
    let n = n_per_side;
    let dx = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point2::new(i as f64 * dx, j as f64 * dx));
        }
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let radius = amplitude * dx;
    if radius > 0.0 {
        for j in 1..n {
            for i in 1..n {
                let v = vid(i, j);
                let base = vertices[v];
                // resample until every incident quad stays a simple polygon
                let mut placed = false;
                for _try in 0..200 {
                    let d = loop {
                        let d = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                        if d.norm() <= 1.0 {
                            break d;
                        }
                    };
                    vertices[v] = base + d * radius;
                    let ok = [(i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j)].iter().all(|&(ci, cj)| {
                        let cell = &cells[cj * n + ci];
                        let pts: Vec<Point2> = cell.iter().map(|&w| vertices[w]).collect();
                        geometry::is_simple_ccw(&pts)
                    });
                    if ok {
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    vertices[v] = base;
                }
            }
        }
    }
    PolygonalMesh::new(vertices, cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiskFamily {
    Triangles,
    MappedCvt,
}

/// Structured triangulation of the unit disk with ring spacing ~ `target_h`.
/// Ring `r` holds `6r` vertices; triangles stitch consecutive rings.
pub fn generate_disk_triangles(target_h: f64) -> Result<PolygonalMesh, MeshError> {
    if !(target_h > 0.0 && target_h <= 1.0) {
        return Err(MeshError::Generation(format!("target_h must be in (0, 1], got {target_h}")));
    }
    let n = (1.0 / target_h).round().max(1.0) as usize;
    let mut vertices = vec![Point2::new(0.0, 0.0)];
    let mut ring_start = vec![0usize; n + 1];
    for r in 1..=n {
        ring_start[r] = vertices.len();
        let m = 6 * r;
        let radius = r as f64 / n as f64;
        for k in 0..m {
            let a = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            vertices.push(Point2::new(radius * a.cos(), radius * a.sin()));
        }
    }

    let mut cells = Vec::new();
    // innermost fan
    for k in 0..6 {
        cells.push(vec![0, ring_start[1] + k, ring_start[1] + (k + 1) % 6]);
    }
    // stitch ring r-1 (inner, 6(r-1) nodes) to ring r (outer, 6r nodes) by
    // advancing whichever ring has the smaller next angle
    for r in 2..=n {
        let ni = 6 * (r - 1);
        let no = 6 * r;
        let si = ring_start[r - 1];
        let so = ring_start[r];
        let angle = |count: usize, k: usize| 2.0 * std::f64::consts::PI * k as f64 / count as f64;
        let (mut i, mut o) = (0usize, 0usize);
        while i < ni || o < no {
            if o < no && (i >= ni || angle(no, o + 1) <= angle(ni, i + 1)) {
                cells.push(vec![si + i % ni, so + o % no, so + (o + 1) % no]);
                o += 1;
            } else {
                cells.push(vec![si + i % ni, so + o % no, si + (i + 1) % ni]);
                i += 1;
            }
        }
    }
    PolygonalMesh::new(vertices, cells)
}

/// CVT on the square [-1, 1]^2 pushed onto the unit disk through
/// `(x, y) -> (x sqrt(1 - y^2/2), y sqrt(1 - x^2/2))`.
pub fn generate_mapped_cvt(
    target_h: f64,
    lloyd_iterations: usize,
    rng_seed: u64,
) -> Result<(PolygonalMesh, GenStats), MeshError> {
    if !(target_h > 0.0 && target_h <= 1.0) {
        return Err(MeshError::Generation(format!("target_h must be in (0, 1], got {target_h}")));
    }
    let n = (4.0 / (target_h * target_h)).round().max(1.0) as usize;
    let lo = Point2::new(-1.0, -1.0);
    let hi = Point2::new(1.0, 1.0);
    let (square, stats) = cvt_in_box(n, lloyd_iterations, rng_seed, lo, hi)?;
    let mapped: Vec<Point2> = square.vertices.iter().map(|&v| disk_map(v)).collect();
    for (ci, cell) in square.cells.iter().enumerate() {
        let pts: Vec<Point2> = cell.iter().map(|&v| mapped[v]).collect();
        if !geometry::is_simple_ccw(&pts) {
            return Err(MeshError::Generation(format!("mapped cell {ci} is not a simple polygon")));
        }
    }
    let mesh = PolygonalMesh::new(mapped, square.cells)?;
    Ok((mesh, stats))
}

/// The square-to-disk map.
pub fn disk_map(p: Point2) -> Point2 {
    Point2::new(p.x * (1.0 - p.y * p.y / 2.0).sqrt(), p.y * (1.0 - p.x * p.x / 2.0).sqrt())
}
