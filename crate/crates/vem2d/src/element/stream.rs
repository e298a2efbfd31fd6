//! The H2-conforming stream element compatible with the velocity element
//! through the curl operator.
//!
//! Degrees of freedom: vertex values, vertex gradients, values at k-2
//! interior edge points, normal derivatives at k-1 interior edge points, and
//! scaled moments of curl(phi) against `x_perp_s P_{k-3}`. The edge traces
//! (phi in P_{k+1}, normal derivative in P_k per edge) are reconstructed
//! from the boundary DoFs, which is what makes the transfer to velocity
//! DoFs and the boundary integrals computable.

use super::velocity::VelocityElement;
use super::{CellBasis, EdgeData};
use crate::geometry::Point2;
use crate::poly::{self, dim_p};
use crate::quad;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct StreamLayout {
    pub k: usize,
    pub n_edges: usize,
}

impl StreamLayout {
    pub fn new(n_edges: usize, k: usize) -> Self {
        StreamLayout { k, n_edges }
    }

    pub fn n_edge_values(&self) -> usize {
        self.k - 2
    }

    pub fn n_edge_normals(&self) -> usize {
        self.k - 1
    }

    pub fn n_moments(&self) -> usize {
        dim_p(self.k as i64 - 3)
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.n_edges + (2 * self.k - 3) * self.n_edges + self.n_moments()
    }

    pub fn vertex_value_dof(&self, v: usize) -> usize {
        3 * v
    }

    pub fn vertex_grad_dof(&self, v: usize, comp: usize) -> usize {
        3 * v + 1 + comp
    }

    pub fn edge_value_dof(&self, e: usize, p: usize) -> usize {
        3 * self.n_edges + e * (2 * self.k - 3) + p
    }

    pub fn edge_normal_dof(&self, e: usize, p: usize) -> usize {
        3 * self.n_edges + e * (2 * self.k - 3) + (self.k - 2) + p
    }

    pub fn moment_dof(&self, alpha: usize) -> usize {
        3 * self.n_edges + (2 * self.k - 3) * self.n_edges + alpha
    }
}

/// Per-edge trace reconstruction matrices: coefficient vectors (in powers of
/// the edge parameter s in [0, 1]) as linear maps of the stream DoFs.
pub struct EdgeTraces {
    /// phi on the edge: (k+2) x n_dof.
    pub value: Vec<DMatrix<f64>>,
    /// normal derivative of phi on the edge: (k+1) x n_dof.
    pub normal: Vec<DMatrix<f64>>,
    /// interior value nodes in [0, 1] (k-2 of them).
    pub value_nodes: Vec<f64>,
    /// interior normal-derivative nodes in [0, 1] (k-1 of them).
    pub normal_nodes: Vec<f64>,
}

/// Evaluate a 1D polynomial given by power coefficients at `s`.
pub fn eval_power(coeffs: &DVector<f64>, s: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * s + c;
    }
    acc
}

pub fn build_edge_traces(cell: &CellBasis, layout: &StreamLayout) -> EdgeTraces {
    let k = layout.k;
    let n_e = layout.n_edges;
    let n = layout.n_dofs();
    let value_nodes = quad::lobatto_interior_01(k - 2);
    let normal_nodes = quad::lobatto_interior_01(k - 1);

    // interpolation systems in the power basis on [0, 1]; shared by all edges
    let nv = k + 2;
    let mut vmat = DMatrix::zeros(nv, nv);
    for j in 0..nv {
        vmat[(0, j)] = if j == 0 { 1.0 } else { 0.0 }; // value at 0
        vmat[(1, j)] = 1.0; // value at 1
        vmat[(2, j)] = if j == 1 { 1.0 } else { 0.0 }; // derivative at 0
        vmat[(3, j)] = j as f64; // derivative at 1
    }
    for (r, &s) in value_nodes.iter().enumerate() {
        for j in 0..nv {
            vmat[(4 + r, j)] = s.powi(j as i32);
        }
    }
    let vinv = vmat.try_inverse().expect("edge value interpolation is unisolvent");

    let nn = k + 1;
    let mut nmat = DMatrix::zeros(nn, nn);
    for j in 0..nn {
        nmat[(0, j)] = if j == 0 { 1.0 } else { 0.0 };
        nmat[(1, j)] = 1.0;
    }
    for (r, &s) in normal_nodes.iter().enumerate() {
        for j in 0..nn {
            nmat[(2 + r, j)] = s.powi(j as i32);
        }
    }
    let ninv = nmat.try_inverse().expect("edge normal interpolation is unisolvent");

    let mut value = Vec::with_capacity(n_e);
    let mut normal = Vec::with_capacity(n_e);
    for e in 0..n_e {
        let ed = &cell.edges[e];
        let va = e;
        let vb = (e + 1) % n_e;
        let mut cond_v = DMatrix::zeros(nv, n);
        cond_v[(0, layout.vertex_value_dof(va))] = 1.0;
        cond_v[(1, layout.vertex_value_dof(vb))] = 1.0;
        // d phi/ds = length * (grad phi . t)
        cond_v[(2, layout.vertex_grad_dof(va, 0))] = ed.length * ed.tangent.x;
        cond_v[(2, layout.vertex_grad_dof(va, 1))] = ed.length * ed.tangent.y;
        cond_v[(3, layout.vertex_grad_dof(vb, 0))] = ed.length * ed.tangent.x;
        cond_v[(3, layout.vertex_grad_dof(vb, 1))] = ed.length * ed.tangent.y;
        for r in 0..(k - 2) {
            cond_v[(4 + r, layout.edge_value_dof(e, r))] = 1.0;
        }
        value.push(&vinv * cond_v);

        let mut cond_n = DMatrix::zeros(nn, n);
        cond_n[(0, layout.vertex_grad_dof(va, 0))] = ed.normal.x;
        cond_n[(0, layout.vertex_grad_dof(va, 1))] = ed.normal.y;
        cond_n[(1, layout.vertex_grad_dof(vb, 0))] = ed.normal.x;
        cond_n[(1, layout.vertex_grad_dof(vb, 1))] = ed.normal.y;
        for r in 0..(k - 1) {
            cond_n[(2 + r, layout.edge_normal_dof(e, r))] = 1.0;
        }
        normal.push(&ninv * cond_n);
    }
    EdgeTraces { value, normal, value_nodes, normal_nodes }
}

/// Rows mapping stream DoFs to the gradient of phi at parameter `s` on edge
/// `e`: returns (row of (grad phi)_x, row of (grad phi)_y).
pub fn gradient_rows_on_edge(
    traces: &EdgeTraces,
    ed: &EdgeData,
    e: usize,
    s: f64,
) -> (DVector<f64>, DVector<f64>) {
    let val = &traces.value[e];
    let nrm = &traces.normal[e];
    let n = val.ncols();
    let mut gx = DVector::zeros(n);
    let mut gy = DVector::zeros(n);
    // tangential derivative from d/ds of the value trace
    for j in 1..val.nrows() {
        let w = j as f64 * s.powi(j as i32 - 1) / ed.length;
        for c in 0..n {
            gx[c] += w * val[(j, c)] * ed.tangent.x;
            gy[c] += w * val[(j, c)] * ed.tangent.y;
        }
    }
    for j in 0..nrm.nrows() {
        let w = s.powi(j as i32);
        for c in 0..n {
            gx[c] += w * nrm[(j, c)] * ed.normal.x;
            gy[c] += w * nrm[(j, c)] * ed.normal.y;
        }
    }
    (gx, gy)
}

/// Row mapping stream DoFs to phi at parameter `s` on edge `e`.
pub fn value_row_on_edge(traces: &EdgeTraces, e: usize, s: f64) -> DVector<f64> {
    let val = &traces.value[e];
    let n = val.ncols();
    let mut row = DVector::zeros(n);
    for j in 0..val.nrows() {
        let w = s.powi(j as i32);
        for c in 0..n {
            row[c] += w * val[(j, c)];
        }
    }
    row
}

pub struct StreamElement {
    pub layout: StreamLayout,
    pub traces: EdgeTraces,
    /// Velocity DoFs of curl(phi): n_dof_vel x n_dof_stream.
    pub transfer: DMatrix<f64>,
    /// Exact moments of phi against the P_{k-1} monomials.
    pub phi_moments: DMatrix<f64>,
}

impl StreamElement {
    pub fn build(cell: &CellBasis, vel: &VelocityElement) -> Self {
        let k = cell.k;
        let n_e = cell.geo.n_edges();
        let layout = StreamLayout::new(n_e, k);
        let n = layout.n_dofs();
        let vlayout = &vel.layout;
        let traces = build_edge_traces(cell, &layout);

        // ---- transfer: curl(phi) = (phi_y, -phi_x)
        let mut transfer = DMatrix::zeros(vlayout.n_dofs(), n);
        for v in 0..n_e {
            transfer[(vlayout.vertex_dof(v, 0), layout.vertex_grad_dof(v, 1))] = 1.0;
            transfer[(vlayout.vertex_dof(v, 1), layout.vertex_grad_dof(v, 0))] = -1.0;
        }
        for e in 0..n_e {
            let ed = &cell.edges[e];
            for p in 0..(k - 1) {
                let s = traces.normal_nodes[p];
                let (gx, gy) = gradient_rows_on_edge(&traces, ed, e, s);
                for c in 0..n {
                    transfer[(vlayout.edge_dof(e, p, 0), c)] += gy[c];
                    transfer[(vlayout.edge_dof(e, p, 1), c)] -= gx[c];
                }
            }
        }
        for al in 0..layout.n_moments() {
            transfer[(vlayout.xperp_dof(al), layout.moment_dof(al))] = 1.0;
        }
        // divergence moment rows stay zero: div curl = 0

        // ---- moments of phi against P_{k-1} through the integration-by-parts
        // identity int phi q = int curl(phi) . x_perp p + bnd phi (x_perp p . t),
        // with q = curl(x_perp p)
        let nkm1 = dim_p(k as i64 - 1);
        let curl_xperp_mom = &vel.mom_xperp * &transfer; // moments of curl phi
        let mut phi_moments = DMatrix::zeros(nkm1, n);
        for al in 0..nkm1 {
            let mut q = vec![0.0; nkm1];
            q[al] = 1.0;
            let p_al = poly::curl_iso_solve(&q, cell.h());
            for (g, &pg) in p_al.iter().enumerate() {
                if pg != 0.0 {
                    for c in 0..n {
                        phi_moments[(al, c)] += pg * curl_xperp_mom[(g, c)];
                    }
                }
            }
            // boundary term
            for e in 0..n_e {
                let ed = &cell.edges[e];
                for (qq, &x) in ed.qx.iter().enumerate() {
                    let row = value_row_on_edge(&traces, e, ed.qs[qq]);
                    let mono = cell.basis.eval(k - 1, x);
                    let pval: f64 = p_al.iter().zip(mono.iter()).map(|(a, b)| a * b).sum();
                    let xs = (x.x - cell.basis.center.x) / cell.basis.h;
                    let ys = (x.y - cell.basis.center.y) / cell.basis.h;
                    // x_perp_s . t
                    let xt = ys * ed.tangent.x - xs * ed.tangent.y;
                    let w = ed.qw[qq] * pval * xt;
                    for c in 0..n {
                        phi_moments[(al, c)] += w * row[c];
                    }
                }
            }
        }

        StreamElement { layout, traces, transfer, phi_moments }
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.n_dofs()
    }
}

/// DoF interpolation of a smooth stream function with known gradient. With
/// `value_moments` the cell moments are those of phi itself (the C1 layout);
/// otherwise they are moments of curl(phi) (the complex-compatible layout).
pub fn interpolate_stream(
    cell: &CellBasis,
    layout: &StreamLayout,
    traces: &EdgeTraces,
    psi: &dyn Fn(Point2) -> f64,
    grad_psi: &dyn Fn(Point2) -> (f64, f64),
    value_moments: bool,
) -> DVector<f64> {
    let k = layout.k;
    let n_e = layout.n_edges;
    let mut dofs = DVector::zeros(layout.n_dofs());
    for v in 0..n_e {
        let p = cell.geo.vertices[v];
        dofs[layout.vertex_value_dof(v)] = psi(p);
        let (gx, gy) = grad_psi(p);
        dofs[layout.vertex_grad_dof(v, 0)] = gx;
        dofs[layout.vertex_grad_dof(v, 1)] = gy;
    }
    for e in 0..n_e {
        let (a, b) = cell.geo.edge(e);
        let ed = &cell.edges[e];
        for (p, &s) in traces.value_nodes.iter().enumerate() {
            dofs[layout.edge_value_dof(e, p)] = psi(a + (b - a) * s);
        }
        for (p, &s) in traces.normal_nodes.iter().enumerate() {
            let (gx, gy) = grad_psi(a + (b - a) * s);
            dofs[layout.edge_normal_dof(e, p)] = gx * ed.normal.x + gy * ed.normal.y;
        }
    }
    let area = cell.area();
    for al in 0..layout.n_moments() {
        let m = cell.rule.integrate(|p| {
            let mono = cell.basis.eval(k - 3, p);
            if value_moments {
                psi(p) * mono[al]
            } else {
                // moments of curl(psi) = (psi_y, -psi_x) against x_perp_s m
                let (gx, gy) = grad_psi(p);
                let xs = (p.x - cell.basis.center.x) / cell.basis.h;
                let ys = (p.y - cell.basis.center.y) / cell.basis.h;
                (gy * ys + gx * xs) * mono[al]
            }
        });
        dofs[layout.moment_dof(al)] = m / area;
    }
    dofs
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::element::velocity::interpolate_velocity;
    use crate::mesh::CellGeometry;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn square_cell() -> CellGeometry {
        CellGeometry::from_vertices(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
    }

    pub(crate) fn pentagon_cell() -> CellGeometry {
        CellGeometry::from_vertices(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.9, -0.1),
            Point2::new(1.3, 0.7),
            Point2::new(0.5, 1.1),
            Point2::new(-0.3, 0.6),
        ])
    }

    /// DoFs of a scalar polynomial in the cell's scaled basis.
    pub(crate) fn stream_dofs_of_poly(
        cell: &CellBasis,
        layout: &StreamLayout,
        traces: &EdgeTraces,
        coeffs: &[f64],
        value_moments: bool,
    ) -> DVector<f64> {
        let h = cell.h();
        let gx = poly::deriv_x(coeffs, h);
        let gy = poly::deriv_y(coeffs, h);
        let deg = poly::degree_of_len(coeffs.len());
        let psi = move |p: Point2| -> f64 {
            let v = cell.basis.eval(deg, p);
            coeffs.iter().zip(v.iter()).map(|(c, m)| c * m).sum()
        };
        let grad = move |p: Point2| -> (f64, f64) {
            let v = cell.basis.eval(deg.max(1) - 1, p);
            (
                gx.iter().zip(v.iter()).map(|(c, m)| c * m).sum(),
                gy.iter().zip(v.iter()).map(|(c, m)| c * m).sum(),
            )
        };
        interpolate_stream(cell, layout, traces, &psi, &grad, value_moments)
    }

    #[test]
    fn dof_count_square_k2_is_16() {
        let layout = StreamLayout::new(4, 2);
        assert_eq!(layout.n_dofs(), 16);
        for k in 2..=4usize {
            for n_e in [3usize, 4, 6] {
                let l = StreamLayout::new(n_e, k);
                assert_eq!(l.n_dofs(), 2 * n_e * k + (k - 1) * (k - 2) / 2);
            }
        }
    }

    #[test]
    fn edge_traces_reproduce_polynomial_restrictions() {
        for k in [2usize, 3, 4] {
            let cell = CellBasis::new(&pentagon_cell(), k);
            let layout = StreamLayout::new(5, k);
            let traces = build_edge_traces(&cell, &layout);
            let nkp1 = dim_p(k as i64 + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(3 + k as u64);
            let coeffs: Vec<f64> = (0..nkp1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dofs = stream_dofs_of_poly(&cell, &layout, &traces, &coeffs, false);
            let h = cell.h();
            let gx = poly::deriv_x(&coeffs, h);
            let gy = poly::deriv_y(&coeffs, h);
            for e in 0..5 {
                let (a, b) = cell.geo.edge(e);
                let ed = &cell.edges[e];
                let vc = &traces.value[e] * &dofs;
                let nc = &traces.normal[e] * &dofs;
                for &s in &[0.0, 0.23, 0.5, 0.77, 1.0] {
                    let x = a + (b - a) * s;
                    let exact = {
                        let v = cell.basis.eval(k + 1, x);
                        coeffs.iter().zip(v.iter()).map(|(c, m)| c * m).sum::<f64>()
                    };
                    assert_abs_diff_eq!(eval_power(&vc, s), exact, epsilon = 1e-11);
                    let v = cell.basis.eval(k, x);
                    let gn = gx.iter().zip(v.iter()).map(|(c, m)| c * m).sum::<f64>() * ed.normal.x
                        + gy.iter().zip(v.iter()).map(|(c, m)| c * m).sum::<f64>() * ed.normal.y;
                    assert_abs_diff_eq!(eval_power(&nc, s), gn, epsilon = 1e-11);
                }
            }
        }
    }

    #[test]
    fn constant_stream_has_zero_transfer() {
        let cell = CellBasis::new(&pentagon_cell(), 2);
        let vel = VelocityElement::build(&cell);
        let el = StreamElement::build(&cell, &vel);
        let mut coeffs = vec![0.0; dim_p(3)];
        coeffs[0] = 1.0;
        let d = stream_dofs_of_poly(&cell, &el.layout, &el.traces, &coeffs, false);
        let t = &el.transfer * &d;
        assert!(t.amax() < 1e-13);
    }

    #[test]
    fn linear_stream_transfers_to_constant_velocity() {
        // phi = x  ->  curl phi = (0, -1)
        let cell = CellBasis::new(&square_cell(), 2);
        let vel = VelocityElement::build(&cell);
        let el = StreamElement::build(&cell, &vel);
        let h = cell.h();
        let c = cell.basis.center;
        let mut coeffs = vec![0.0; dim_p(3)];
        coeffs[0] = c.x;
        coeffs[poly::index_of(1, 0)] = h;
        let d = stream_dofs_of_poly(&cell, &el.layout, &el.traces, &coeffs, false);
        let t = &el.transfer * &d;
        let vl = &vel.layout;
        for v in 0..4 {
            assert_abs_diff_eq!(t[vl.vertex_dof(v, 0)], 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(t[vl.vertex_dof(v, 1)], -1.0, epsilon = 1e-13);
        }
        for e in 0..4 {
            assert_abs_diff_eq!(t[vl.edge_dof(e, 0, 0)], 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(t[vl.edge_dof(e, 0, 1)], -1.0, epsilon = 1e-13);
        }
        for al in 1..dim_p(1) {
            assert_abs_diff_eq!(t[vl.div_dof(al)], 0.0);
        }
    }

    #[test]
    fn transfer_matches_velocity_interpolation_of_curl() {
        for k in [2usize, 3] {
            let cell = CellBasis::new(&pentagon_cell(), k);
            let vel = VelocityElement::build(&cell);
            let el = StreamElement::build(&cell, &vel);
            let nkp1 = dim_p(k as i64 + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(7 + k as u64);
            let coeffs: Vec<f64> = (0..nkp1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d = stream_dofs_of_poly(&cell, &el.layout, &el.traces, &coeffs, false);
            let transferred = &el.transfer * &d;
            let h = cell.h();
            let gx = poly::deriv_x(&coeffs, h);
            let gy = poly::deriv_y(&coeffs, h);
            let curl = |p: Point2| {
                let v = cell.basis.eval(k, p);
                (
                    gy.iter().zip(v.iter()).map(|(c, m)| c * m).sum::<f64>(),
                    -gx.iter().zip(v.iter()).map(|(c, m)| c * m).sum::<f64>(),
                )
            };
            let direct = interpolate_velocity(&cell, &vel, &curl, &|_| 0.0);
            assert!(
                (&transferred - &direct).amax() < 1e-11,
                "k={k}: {}",
                (&transferred - &direct).amax()
            );
        }
    }

    #[test]
    fn complex_exactness_on_a_cell() {
        // div . curl = 0 exactly, and the transfer kernel is the constants
        for k in [2usize, 3] {
            let cell = CellBasis::new(&pentagon_cell(), k);
            let vel = VelocityElement::build(&cell);
            let el = StreamElement::build(&cell, &vel);
            let prod = &vel.div_matrix * &el.transfer;
            assert!(prod.amax() < 1e-13, "k={k}: div curl = {}", prod.amax());
            let svd = el.transfer.clone().svd(false, false);
            let tol = svd.singular_values.max() * 1e-10;
            let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
            assert_eq!(rank, el.n_dofs() - 1, "k={k}");
        }
    }

    #[test]
    fn phi_moments_match_quadrature_for_polynomials() {
        for k in [2usize, 3] {
            let cell = CellBasis::new(&pentagon_cell(), k);
            let vel = VelocityElement::build(&cell);
            let el = StreamElement::build(&cell, &vel);
            let nkp1 = dim_p(k as i64 + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(29 + k as u64);
            let coeffs: Vec<f64> = (0..nkp1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d = stream_dofs_of_poly(&cell, &el.layout, &el.traces, &coeffs, false);
            let mom = &el.phi_moments * &d;
            for al in 0..dim_p(k as i64 - 1) {
                let mut mono = vec![0.0; dim_p(k as i64 - 1)];
                mono[al] = 1.0;
                let exact = poly::integrate(&cell.mom, &poly::poly_mul(&coeffs, &mono));
                assert_abs_diff_eq!(mom[al], exact, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn by_parts_identity_self_check() {
        // int phi q = int curl(phi) . x_perp p + bnd phi (x_perp p . t) for a
        // polynomial phi and q = curl(x_perp p), all by plain quadrature
        let cell = CellBasis::new(&pentagon_cell(), 3);
        let k = 3usize;
        let h = cell.h();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let phi: Vec<f64> = (0..dim_p(k as i64 + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p: Vec<f64> = (0..dim_p(k as i64 - 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = {
            let (px, py) = poly::xperp_times(&p);
            poly::curl_vector(&px, &py, h)
        };
        let lhs = poly::integrate(&cell.mom, &poly::poly_mul(&phi, &q));
        let gx = poly::deriv_x(&phi, h);
        let gy = poly::deriv_y(&phi, h);
        let mut rhs = 0.0;
        // interior: curl phi = (phi_y, -phi_x)
        let (xpx, xpy) = poly::xperp_times(&p);
        rhs += poly::integrate(&cell.mom, &poly::poly_mul(&gy, &xpx));
        rhs -= poly::integrate(&cell.mom, &poly::poly_mul(&gx, &xpy));
        for e in 0..cell.geo.n_edges() {
            let ed = &cell.edges[e];
            for (qq, &x) in ed.qx.iter().enumerate() {
                let vphi = {
                    let v = cell.basis.eval(k + 1, x);
                    phi.iter().zip(v.iter()).map(|(c, m)| c * m).sum::<f64>()
                };
                let vp = {
                    let v = cell.basis.eval(k - 1, x);
                    p.iter().zip(v.iter()).map(|(c, m)| c * m).sum::<f64>()
                };
                let xs = (x.x - cell.basis.center.x) / cell.basis.h;
                let ys = (x.y - cell.basis.center.y) / cell.basis.h;
                let xt = (ys * ed.tangent.x - xs * ed.tangent.y) * vp;
                rhs += ed.qw[qq] * vphi * xt;
            }
        }
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12 * (1.0 + lhs.abs()));
    }
}
