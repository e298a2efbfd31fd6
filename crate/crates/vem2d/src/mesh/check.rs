//! Shape-regularity audit: per-cell star-shapedness and vertex-distance
//! ratios against a uniform threshold.

use super::PolygonalMesh;
use crate::geometry::{self, Point2};

/// Per-cell shape-regularity ratios, each normalized by the cell diameter so
/// that reported values lie in (0, 1].
#[derive(Debug, Clone)]
pub struct ShapeReport {
    /// Estimated diameter of the largest ball the cell is star-shaped with
    /// respect to, over the cell diameter.
    pub star_ratio: Vec<f64>,
    /// Smallest distance between two cell vertices over the cell diameter.
    pub vertex_ratio: Vec<f64>,
    /// Smallest ratio over all cells and both criteria.
    pub rho: f64,
    pub rho_min: f64,
}

impl ShapeReport {
    pub fn pass(&self) -> bool {
        self.rho >= self.rho_min
    }

    /// Cells failing the threshold, with their worst ratio.
    pub fn failures(&self) -> Vec<(usize, f64)> {
        self.star_ratio
            .iter()
            .zip(self.vertex_ratio.iter())
            .enumerate()
            .filter_map(|(c, (&s, &v))| {
                let worst = s.min(v);
                (worst < self.rho_min).then_some((c, worst))
            })
            .collect()
    }
}

/// Clip `poly` to the inner half-plane of the directed line (a, b).
fn clip_half_plane(poly: &[Point2], a: Point2, b: Point2) -> Vec<Point2> {
    let d = b - a;
    let f = |p: Point2| d.cross(p - a); // >= 0 is the inner (left) side
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let (fp, fq) = (f(p), f(q));
        let inter = || {
            let t = fp / (fp - fq);
            p + (q - p) * t
        };
        if fp >= 0.0 {
            if fq >= 0.0 {
                out.push(q);
            } else {
                out.push(inter());
            }
        } else if fq >= 0.0 {
            out.push(inter());
            out.push(q);
        }
    }
    out
}

/// Kernel of a simple polygon: intersection of the inner half-planes of all
/// edges. Empty for polygons that are nowhere star-shaped.
fn kernel_polygon(pts: &[Point2]) -> Vec<Point2> {
    let n = pts.len();
    let mut k: Vec<Point2> = pts.to_vec();
    for i in 0..n {
        k = clip_half_plane(&k, pts[i], pts[(i + 1) % n]);
        if k.len() < 3 {
            return Vec::new();
        }
    }
    k
}

fn star_ball_diameter(pts: &[Point2]) -> f64 {
    let kernel = kernel_polygon(pts);
    if kernel.len() < 3 || geometry::signed_area(&kernel) <= 0.0 {
        return 0.0;
    }
    // ball centered at the kernel centroid, radius limited by the kernel edges
    let c = geometry::centroid(&kernel);
    let n = kernel.len();
    let mut r = f64::INFINITY;
    for i in 0..n {
        r = r.min(geometry::dist_point_line(c, kernel[i], kernel[(i + 1) % n]));
    }
    2.0 * r
}

/// Audit all cells of a mesh against the shape threshold `rho_min`.
pub fn check_mesh(mesh: &PolygonalMesh, rho_min: f64) -> ShapeReport {
    let mut star_ratio = Vec::with_capacity(mesh.n_cells());
    let mut vertex_ratio = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let g = mesh.cell_geometry(c);
        star_ratio.push(star_ball_diameter(&g.vertices) / g.diameter);
        let mut dmin = f64::INFINITY;
        for i in 0..g.vertices.len() {
            for j in (i + 1)..g.vertices.len() {
                dmin = dmin.min(g.vertices[i].dist(g.vertices[j]));
            }
        }
        vertex_ratio.push(dmin / g.diameter);
    }
    let rho = star_ratio
        .iter()
        .chain(vertex_ratio.iter())
        .fold(f64::INFINITY, |a, &b| a.min(b));
    ShapeReport { star_ratio, vertex_ratio, rho, rho_min }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_cvt;

    #[test]
    fn unit_square_ratios() {
        let m = crate::mesh::read_mesh_str("vem-mesh 1\n4 1\n0 0\n1 0\n1 1\n0 1\n4 0 1 2 3\n").unwrap();
        let rep = check_mesh(&m, 0.5);
        assert!(rep.star_ratio[0] >= 0.5, "star ratio {}", rep.star_ratio[0]);
        assert!(rep.vertex_ratio[0] >= 0.5, "vertex ratio {}", rep.vertex_ratio[0]);
        assert!(rep.pass());
    }

    #[test]
    fn needle_quad_fails() {
        let s = "vem-mesh 1\n4 1\n0 0\n1 0\n1 1e-6\n0 1e-6\n4 0 1 2 3\n";
        let m = crate::mesh::read_mesh_str(s).unwrap();
        let rep = check_mesh(&m, 0.01);
        assert!(rep.vertex_ratio[0] < 2e-6);
        assert!(!rep.pass());
        assert_eq!(rep.failures().len(), 1);
    }

    #[test]
    fn cvt_meshes_pass_the_audit() {
        let (m, _) = generate_cvt(1.0 / 8.0, 100, 42).unwrap();
        let rep = check_mesh(&m, 0.1);
        assert!(rep.pass(), "CVT h=1/8 seed 42 failed with rho = {}", rep.rho);
        let (m16, _) = generate_cvt(1.0 / 16.0, 100, 42).unwrap();
        let rep16 = check_mesh(&m16, 0.05);
        assert!(rep16.pass(), "CVT h=1/16 seed 42 failed with rho = {}", rep16.rho);
    }
}
