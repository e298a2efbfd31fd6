//! Global degree-of-freedom maps for the velocity and stream spaces.
//!
//! Edge DoFs live on canonically oriented edges (from the lower to the higher
//! vertex index). A cell traversing an edge backwards sees the interior
//! points mirrored, and for normal-derivative DoFs also a sign flip, since
//! its outward normal is the opposite of the canonical edge normal.

use crate::element::{StreamLayout, VelocityLayout};
use crate::geometry::Point2;
use crate::mesh::PolygonalMesh;
use crate::poly::dim_p;
use crate::quad::lobatto_interior_01;

/// Local-to-global entry: global DoF id and orientation sign.
#[derive(Debug, Clone, Copy)]
pub struct L2g {
    pub global: usize,
    pub sign: f64,
}

#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_global: usize,
    pub n_free: usize,
    /// Per cell, per local DoF.
    pub l2g: Vec<Vec<L2g>>,
    /// `Some(free index)` for unknowns, `None` for constrained DoFs.
    pub free_index: Vec<Option<usize>>,
    /// Constrained (boundary or condensed) DoF flags.
    pub fixed: Vec<bool>,
}

impl DofMap {
    /// Gather the full local DoF vector of a cell from global values.
    pub fn gather(&self, cell: usize, global: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
        let map = &self.l2g[cell];
        nalgebra::DVector::from_fn(map.len(), |i, _| map[i].sign * global[map[i].global])
    }
}

/// Velocity-space map. With `reduced` the divergence-moment DoFs are
/// condensed to zero (they are fixed, not unknowns).
pub fn velocity_dof_map(mesh: &PolygonalMesh, k: usize, reduced: bool) -> DofMap {
    let n_v = mesh.n_vertices();
    let n_e = mesh.n_edges();
    let per_edge = 2 * (k - 1);
    let n_xperp = dim_p(k as i64 - 3);
    let n_div = dim_p(k as i64 - 1) - 1;
    let per_cell = n_xperp + n_div;
    let edge_base = 2 * n_v;
    let cell_base = edge_base + per_edge * n_e;
    let n_global = cell_base + per_cell * mesh.n_cells();

    let mut fixed = vec![false; n_global];
    for (v, &bd) in mesh.boundary_vertex.iter().enumerate() {
        if bd {
            fixed[2 * v] = true;
            fixed[2 * v + 1] = true;
        }
    }
    for (e, &bd) in mesh.boundary_edge.iter().enumerate() {
        if bd {
            for s in 0..per_edge {
                fixed[edge_base + e * per_edge + s] = true;
            }
        }
    }
    if reduced {
        for c in 0..mesh.n_cells() {
            for s in 0..n_div {
                fixed[cell_base + c * per_cell + n_xperp + s] = true;
            }
        }
    }

    let mut l2g = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let cell = &mesh.cells[c];
        let layout = VelocityLayout::new(cell.len(), k);
        let mut map = vec![L2g { global: 0, sign: 1.0 }; layout.n_dofs()];
        for (lv, &gv) in cell.iter().enumerate() {
            for comp in 0..2 {
                map[layout.vertex_dof(lv, comp)] = L2g { global: 2 * gv + comp, sign: 1.0 };
            }
        }
        for (le, &(ge, forward)) in mesh.cell_edges[c].iter().enumerate() {
            for pt in 0..(k - 1) {
                let canon = if forward { pt } else { k - 2 - pt };
                for comp in 0..2 {
                    map[layout.edge_dof(le, pt, comp)] =
                        L2g { global: edge_base + ge * per_edge + 2 * canon + comp, sign: 1.0 };
                }
            }
        }
        for al in 0..n_xperp {
            map[layout.xperp_dof(al)] = L2g { global: cell_base + c * per_cell + al, sign: 1.0 };
        }
        for al in 1..=n_div {
            map[layout.div_dof(al)] =
                L2g { global: cell_base + c * per_cell + n_xperp + al - 1, sign: 1.0 };
        }
        l2g.push(map);
    }

    index_free(n_global, fixed, l2g)
}

/// Stream-space map (shared by the complex-compatible and C1 layouts).
pub fn stream_dof_map(mesh: &PolygonalMesh, k: usize) -> DofMap {
    let n_v = mesh.n_vertices();
    let n_e = mesh.n_edges();
    let per_edge = 2 * k - 3;
    let n_mom = dim_p(k as i64 - 3);
    let edge_base = 3 * n_v;
    let cell_base = edge_base + per_edge * n_e;
    let n_global = cell_base + n_mom * mesh.n_cells();

    let mut fixed = vec![false; n_global];
    for (v, &bd) in mesh.boundary_vertex.iter().enumerate() {
        if bd {
            for s in 0..3 {
                fixed[3 * v + s] = true;
            }
        }
    }
    for (e, &bd) in mesh.boundary_edge.iter().enumerate() {
        if bd {
            for s in 0..per_edge {
                fixed[edge_base + e * per_edge + s] = true;
            }
        }
    }

    let mut l2g = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let cell = &mesh.cells[c];
        let layout = StreamLayout::new(cell.len(), k);
        let mut map = vec![L2g { global: 0, sign: 1.0 }; layout.n_dofs()];
        for (lv, &gv) in cell.iter().enumerate() {
            map[layout.vertex_value_dof(lv)] = L2g { global: 3 * gv, sign: 1.0 };
            map[layout.vertex_grad_dof(lv, 0)] = L2g { global: 3 * gv + 1, sign: 1.0 };
            map[layout.vertex_grad_dof(lv, 1)] = L2g { global: 3 * gv + 2, sign: 1.0 };
        }
        for (le, &(ge, forward)) in mesh.cell_edges[c].iter().enumerate() {
            for pt in 0..(k - 2) {
                let canon = if forward { pt } else { k - 3 - pt };
                map[layout.edge_value_dof(le, pt)] =
                    L2g { global: edge_base + ge * per_edge + canon, sign: 1.0 };
            }
            for pt in 0..(k - 1) {
                let canon = if forward { pt } else { k - 2 - pt };
                map[layout.edge_normal_dof(le, pt)] = L2g {
                    global: edge_base + ge * per_edge + (k - 2) + canon,
                    sign: if forward { 1.0 } else { -1.0 },
                };
            }
        }
        for al in 0..n_mom {
            map[layout.moment_dof(al)] = L2g { global: cell_base + c * n_mom + al, sign: 1.0 };
        }
        l2g.push(map);
    }

    index_free(n_global, fixed, l2g)
}

fn index_free(n_global: usize, fixed: Vec<bool>, l2g: Vec<Vec<L2g>>) -> DofMap {
    let mut free_index = vec![None; n_global];
    let mut n_free = 0;
    for (g, &fx) in fixed.iter().enumerate() {
        if !fx {
            free_index[g] = Some(n_free);
            n_free += 1;
        }
    }
    DofMap { n_global, n_free, l2g, free_index, fixed }
}

/// Boundary values of the velocity space interpolating a smooth field; zero
/// elsewhere. Fixed interior (condensed) DoFs stay zero.
pub fn velocity_boundary_values(
    mesh: &PolygonalMesh,
    k: usize,
    map: &DofMap,
    u: &dyn Fn(Point2) -> (f64, f64),
) -> nalgebra::DVector<f64> {
    let mut g = nalgebra::DVector::zeros(map.n_global);
    let nodes = lobatto_interior_01(k - 1);
    for (v, &bd) in mesh.boundary_vertex.iter().enumerate() {
        if bd {
            let (ux, uy) = u(mesh.vertices[v]);
            g[2 * v] = ux;
            g[2 * v + 1] = uy;
        }
    }
    let edge_base = 2 * mesh.n_vertices();
    let per_edge = 2 * (k - 1);
    for (e, &bd) in mesh.boundary_edge.iter().enumerate() {
        if bd {
            let a = mesh.vertices[mesh.edges[e].v[0]];
            let b = mesh.vertices[mesh.edges[e].v[1]];
            for (pt, &s) in nodes.iter().enumerate() {
                let (ux, uy) = u(a + (b - a) * s);
                g[edge_base + e * per_edge + 2 * pt] = ux;
                g[edge_base + e * per_edge + 2 * pt + 1] = uy;
            }
        }
    }
    g
}

/// Boundary values of the stream space interpolating psi (values, gradients,
/// and canonical normal derivatives).
pub fn stream_boundary_values(
    mesh: &PolygonalMesh,
    k: usize,
    map: &DofMap,
    psi: &dyn Fn(Point2) -> f64,
    grad_psi: &dyn Fn(Point2) -> (f64, f64),
) -> nalgebra::DVector<f64> {
    let mut g = nalgebra::DVector::zeros(map.n_global);
    let value_nodes = lobatto_interior_01(k - 2);
    let normal_nodes = lobatto_interior_01(k - 1);
    for (v, &bd) in mesh.boundary_vertex.iter().enumerate() {
        if bd {
            let p = mesh.vertices[v];
            g[3 * v] = psi(p);
            let (gx, gy) = grad_psi(p);
            g[3 * v + 1] = gx;
            g[3 * v + 2] = gy;
        }
    }
    let edge_base = 3 * mesh.n_vertices();
    let per_edge = 2 * k - 3;
    for (e, &bd) in mesh.boundary_edge.iter().enumerate() {
        if bd {
            let a = mesh.vertices[mesh.edges[e].v[0]];
            let b = mesh.vertices[mesh.edges[e].v[1]];
            let t = (b - a).scale(1.0 / a.dist(b));
            let n = t.perp();
            for (pt, &s) in value_nodes.iter().enumerate() {
                g[edge_base + e * per_edge + pt] = psi(a + (b - a) * s);
            }
            for (pt, &s) in normal_nodes.iter().enumerate() {
                let (gx, gy) = grad_psi(a + (b - a) * s);
                g[edge_base + e * per_edge + (k - 2) + pt] = gx * n.x + gy * n.y;
            }
        }
    }
    g
}
