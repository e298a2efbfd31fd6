//! Polygonal meshes: storage, derived edge topology, generation of the four
//! mesh families used by the solver tests, text I/O, and shape auditing.

mod check;
mod gen;
mod io;
mod voronoi;

pub use check::{check_mesh, ShapeReport};
pub use gen::{generate_cvt, generate_disk_triangles, generate_distorted_quads, generate_mapped_cvt, DiskFamily, GenStats};
pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string};
pub use voronoi::voronoi_mesh;

use crate::geometry::{self, Point2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cell {cell} is invalid: {msg}")]
    InvalidCell { cell: usize, msg: String },
    #[error("broken topology: {0}")]
    Topology(String),
    #[error("mesh generation failed: {0}")]
    Generation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A unique mesh edge with canonical vertex order (`v[0] < v[1]`) and its
/// incident cells.
#[derive(Debug, Clone)]
pub struct Edge {
    pub v: [usize; 2],
    pub cells: [Option<usize>; 2],
}

/// Per-cell geometric cache.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub vertices: Vec<Point2>,
    pub centroid: Point2,
    pub diameter: f64,
    pub area: f64,
}

impl CellGeometry {
    pub fn from_vertices(vertices: Vec<Point2>) -> Self {
        let centroid = geometry::centroid(&vertices);
        let diameter = geometry::diameter(&vertices);
        let area = geometry::signed_area(&vertices);
        CellGeometry { vertices, centroid, diameter, area }
    }

    pub fn n_edges(&self) -> usize {
        self.vertices.len()
    }

    /// Endpoints of local edge `e` in traversal order.
    pub fn edge(&self, e: usize) -> (Point2, Point2) {
        let n = self.vertices.len();
        (self.vertices[e], self.vertices[(e + 1) % n])
    }

    /// Unit tangent along local edge `e`, outward unit normal, and length.
    pub fn edge_frame(&self, e: usize) -> (Point2, Point2, f64) {
        let (a, b) = self.edge(e);
        let len = a.dist(b);
        let t = (b - a).scale(1.0 / len);
        // outward normal of a counterclockwise cell
        (t, t.perp(), len)
    }
}

/// A 2D polygonal mesh with counterclockwise cells and derived edge topology.
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct PolygonalMesh {
    pub vertices: Vec<Point2>,
    pub cells: Vec<Vec<usize>>,
    pub edges: Vec<Edge>,
    /// Per cell: (edge index, true if traversed in canonical direction).
    pub cell_edges: Vec<Vec<(usize, bool)>>,
    pub boundary_vertex: Vec<bool>,
    pub boundary_edge: Vec<bool>,
    cell_geo: Vec<CellGeometry>,
}

impl PolygonalMesh {
    /// Builds the derived topology and validates the cell loops.
    pub fn new(vertices: Vec<Point2>, cells: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        use std::collections::HashMap;

        for (ci, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(MeshError::InvalidCell { cell: ci, msg: "fewer than 3 vertices".into() });
            }
            for &v in cell {
                if v >= vertices.len() {
                    return Err(MeshError::InvalidCell {
                        cell: ci,
                        msg: format!("vertex index {v} out of range ({} vertices)", vertices.len()),
                    });
                }
            }
            let pts: Vec<Point2> = cell.iter().map(|&v| vertices[v]).collect();
            if !geometry::is_simple_ccw(&pts) {
                return Err(MeshError::InvalidCell {
                    cell: ci,
                    msg: "not a simple counterclockwise polygon with positive area".into(),
                });
            }
        }

        let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (ci, cell) in cells.iter().enumerate() {
            let n = cell.len();
            let mut this = Vec::with_capacity(n);
            for i in 0..n {
                let a = cell[i];
                let b = cell[(i + 1) % n];
                if a == b {
                    return Err(MeshError::InvalidCell { cell: ci, msg: "repeated consecutive vertex".into() });
                }
                let key = (a.min(b), a.max(b));
                let idx = *edge_map.entry(key).or_insert_with(|| {
                    edges.push(Edge { v: [key.0, key.1], cells: [None, None] });
                    edges.len() - 1
                });
                let e = &mut edges[idx];
                if e.cells[0].is_none() {
                    e.cells[0] = Some(ci);
                } else if e.cells[1].is_none() {
                    e.cells[1] = Some(ci);
                } else {
                    return Err(MeshError::Topology(format!(
                        "edge ({}, {}) has more than two incident cells",
                        key.0, key.1
                    )));
                }
                this.push((idx, a == key.0));
            }
            cell_edges.push(this);
        }

        let boundary_edge: Vec<bool> = edges.iter().map(|e| e.cells[1].is_none()).collect();
        let mut boundary_vertex = vec![false; vertices.len()];
        for (e, &on_bd) in edges.iter().zip(boundary_edge.iter()) {
            if on_bd {
                boundary_vertex[e.v[0]] = true;
                boundary_vertex[e.v[1]] = true;
            }
        }

        let cell_geo = cells
            .iter()
            .map(|cell| CellGeometry::from_vertices(cell.iter().map(|&v| vertices[v]).collect()))
            .collect();

        Ok(PolygonalMesh { vertices, cells, edges, cell_edges, boundary_vertex, boundary_edge, cell_geo })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cell_geometry(&self, c: usize) -> &CellGeometry {
        &self.cell_geo[c]
    }

    /// Mesh size: the largest cell diameter.
    pub fn h(&self) -> f64 {
        self.cell_geo.iter().map(|g| g.diameter).fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        self.cell_geo.iter().map(|g| g.area).sum()
    }

    pub fn n_boundary_vertices(&self) -> usize {
        self.boundary_vertex.iter().filter(|&&b| b).count()
    }

    pub fn n_interior_vertices(&self) -> usize {
        self.n_vertices() - self.n_boundary_vertices()
    }

    pub fn n_interior_edges(&self) -> usize {
        self.boundary_edge.iter().filter(|&&b| !b).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn two_quads() -> PolygonalMesh {
        // two unit squares sharing the edge x = 1
        let vertices = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(2.0, 1.0),
        ];
        let cells = vec![vec![0, 1, 4, 3], vec![1, 2, 5, 4]];
        PolygonalMesh::new(vertices, cells).unwrap()
    }

    #[test]
    fn topology_of_two_quads() {
        let m = two_quads();
        assert_eq!(m.n_edges(), 7);
        let interior: Vec<_> = m.edges.iter().filter(|e| e.cells[1].is_some()).collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(interior[0].v, [1, 4]);
        assert_eq!(m.n_boundary_vertices(), 6);
        assert_abs_diff_eq!(m.total_area(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.h(), 2.0f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn edge_topology_is_involutive() {
        // reconstructing each cell loop from its edge list reproduces the cells
        let m = two_quads();
        for (ci, cell) in m.cells.iter().enumerate() {
            let loop_from_edges: Vec<usize> = m.cell_edges[ci]
                .iter()
                .map(|&(e, fwd)| if fwd { m.edges[e].v[0] } else { m.edges[e].v[1] })
                .collect();
            assert_eq!(&loop_from_edges, cell);
        }
    }

    #[test]
    fn rejects_bad_cells() {
        let vertices = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)];
        // clockwise loop -> negative area
        assert!(PolygonalMesh::new(vertices.clone(), vec![vec![0, 2, 1]]).is_err());
        // out-of-range index
        assert!(PolygonalMesh::new(vertices, vec![vec![0, 1, 3]]).is_err());
    }
}
