//! Per-cell element machinery: the shared basis/quadrature bundle, the
//! velocity element, and the stream elements.

pub mod c1;
pub mod stream;
pub mod velocity;

pub use c1::{C1Element, C1Tables};
pub use stream::{interpolate_stream, StreamElement, StreamLayout};
pub use velocity::{interpolate_velocity, Trilinear, TrilinearTables, VelocityElement, VelocityLayout};

use crate::geometry::Point2;
use crate::mesh::CellGeometry;
use crate::poly::{self, ScaledBasis};
use crate::quad::{self, QuadRule};
use nalgebra::DMatrix;

/// Everything cell-local that both element families need: the scaled
/// monomial basis, a moment table, interior quadrature, and per-edge
/// quadrature with the edge frames.
pub struct CellBasis {
    pub geo: CellGeometry,
    pub basis: ScaledBasis,
    pub k: usize,
    /// Integrals of all scaled monomials up to degree 3k + 2.
    pub mom: Vec<f64>,
    pub rule: QuadRule,
    pub edges: Vec<EdgeData>,
}

pub struct EdgeData {
    pub tangent: Point2,
    pub normal: Point2,
    pub length: f64,
    /// Gauss points as parameters in [0, 1] along the edge.
    pub qs: Vec<f64>,
    /// Physical quadrature weights (include the edge length).
    pub qw: Vec<f64>,
    pub qx: Vec<Point2>,
}

impl CellBasis {
    pub fn new(geo: &CellGeometry, k: usize) -> Self {
        assert!(k >= 2, "the method needs k >= 2");
        let basis = ScaledBasis::new(geo.centroid, geo.diameter);
        let max_deg = 3 * k + 2;
        let rule = quad::polygon_rule(&geo.vertices, max_deg);
        let mut mom = vec![0.0; poly::dim_p(max_deg as i64)];
        for (&p, &w) in rule.points.iter().zip(rule.weights.iter()) {
            let vals = basis.eval(max_deg, p);
            for (m, v) in mom.iter_mut().zip(vals.iter()) {
                *m += w * v;
            }
        }

        let edges = (0..geo.n_edges())
            .map(|e| {
                let (a, b) = geo.edge(e);
                let (tangent, normal, length) = geo.edge_frame(e);
                let r = quad::edge_rule(a, b, 2 * k + 4);
                let qs: Vec<f64> = r
                    .points
                    .iter()
                    .map(|&p| (p - a).dot(tangent) / length)
                    .collect();
                EdgeData { tangent, normal, length, qs, qw: r.weights, qx: r.points }
            })
            .collect();

        CellBasis { geo: geo.clone(), basis, k, mom, rule, edges }
    }

    pub fn h(&self) -> f64 {
        self.geo.diameter
    }

    pub fn area(&self) -> f64 {
        self.geo.area
    }

    /// L2 Gram matrix of P_{n1} x P_{n2} monomials on the cell.
    pub fn gram(&self, n1: usize, n2: usize) -> DMatrix<f64> {
        poly::gram(&self.mom, n1, n2)
    }
}

/// Values of the 1D Lagrange basis on the node set `nodes` at point `s`.
pub fn lagrange_values(nodes: &[f64], s: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut vals = vec![1.0; n];
    for j in 0..n {
        for i in 0..n {
            if i != j {
                vals[j] *= (s - nodes[i]) / (nodes[j] - nodes[i]);
            }
        }
    }
    vals
}
