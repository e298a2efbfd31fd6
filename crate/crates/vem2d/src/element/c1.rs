//! The C1 stream element used by the direct stream-function scheme.
//!
//! Same DoF layout as the complex-compatible stream element except that the
//! cell moments are moments of phi itself against P_{k-3}. The element
//! carries the H2-seminorm projector onto P_{k+1}, L2 projections of the
//! value, gradient, curl, Laplacian, and Hessian, and the local biharmonic
//! form (consistency + stabilization) together with the convective evaluator.

use super::stream::{
    build_edge_traces, gradient_rows_on_edge, value_row_on_edge, EdgeTraces, StreamLayout,
};
use super::CellBasis;
use crate::poly::{self, dim_p};
use nalgebra::{DMatrix, DVector};

pub struct C1Element {
    pub layout: StreamLayout,
    pub traces: EdgeTraces,
    /// Exact moments of phi against all P_{k-1} monomials.
    pub phi_moments: DMatrix<f64>,
    /// H2-seminorm projector onto P_{k+1}.
    pub pi_hess_proj: DMatrix<f64>,
    /// L2 projection of the Laplacian onto P_{k-1}.
    pub pi_delta: DMatrix<f64>,
    /// L2 projection of phi onto P_{k-1}.
    pub pi_val: DMatrix<f64>,
    /// L2 projection of grad(phi) onto [P_k]^2 (x block then y block).
    pub pi_grad: DMatrix<f64>,
    /// L2 projection of the Hessian onto [P_{k-1}]^{2x2} (blocks 2c + d).
    pub pi_hess0: DMatrix<f64>,
    /// DoFs of the P_{k+1} monomials.
    pub dof_of_poly: DMatrix<f64>,
    /// Local form: Hessian consistency + scaled dofi-dofi stabilization.
    pub stiffness: DMatrix<f64>,
    /// Hessian Gram of the P_{k+1} monomials.
    pub hess_gram: DMatrix<f64>,
    eval_k: DMatrix<f64>,
    eval_km1: DMatrix<f64>,
}

impl C1Element {
    pub fn build(cell: &CellBasis) -> Self {
        let k = cell.k;
        let n_e = cell.geo.n_edges();
        let layout = StreamLayout::new(n_e, k);
        let n = layout.n_dofs();
        let nkp1 = dim_p(k as i64 + 1);
        let nk = dim_p(k as i64);
        let nkm1 = dim_p(k as i64 - 1);
        let nkm3 = dim_p(k as i64 - 3);
        let h = cell.h();
        let area = cell.area();
        let traces = build_edge_traces(cell, &layout);
        let perimeter: f64 = cell.edges.iter().map(|e| e.length).sum();

        // boundary rows of phi and grad(phi) at the edge quadrature points,
        // reused by every by-parts functional below
        struct BndPoint {
            w: f64,
            x: crate::geometry::Point2,
            val: DVector<f64>,
            gx: DVector<f64>,
            gy: DVector<f64>,
            normal: crate::geometry::Point2,
        }
        let mut bnd = Vec::new();
        for e in 0..n_e {
            let ed = &cell.edges[e];
            for (q, &x) in ed.qx.iter().enumerate() {
                let s = ed.qs[q];
                let val = value_row_on_edge(&traces, e, s);
                let (gx, gy) = gradient_rows_on_edge(&traces, ed, e, s);
                bnd.push(BndPoint { w: ed.qw[q], x, val, gx, gy, normal: ed.normal });
            }
        }

        // ---- H2-seminorm projector
        let lap = |c: &[f64]| -> Vec<f64> {
            let xx = poly::deriv_x(&poly::deriv_x(c, h), h);
            let yy = poly::deriv_y(&poly::deriv_y(c, h), h);
            xx.iter().zip(yy.iter()).map(|(a, b)| a + b).collect()
        };
        let mut hess_gram = DMatrix::zeros(nkp1, nkp1);
        for i in 0..nkp1 {
            let ci = unit(nkp1, i);
            let (ixx, ixy, iyy) = hessian(&ci, h);
            for j in i..nkp1 {
                let cj = unit(nkp1, j);
                let (jxx, jxy, jyy) = hessian(&cj, h);
                let mut v = poly::integrate(&cell.mom, &poly::poly_mul(&ixx, &jxx));
                v += 2.0 * poly::integrate(&cell.mom, &poly::poly_mul(&ixy, &jxy));
                v += poly::integrate(&cell.mom, &poly::poly_mul(&iyy, &jyy));
                hess_gram[(i, j)] = v;
                hess_gram[(j, i)] = v;
            }
        }

        let mut b_hess = DMatrix::zeros(nkp1, n);
        for i in 0..nkp1 {
            let ci = unit(nkp1, i);
            let (ixx, ixy, iyy) = hessian(&ci, h);
            // volume part: (lap^2 m_i, phi) with lap^2 m_i in P_{k-3}
            let bilap = lap(&lap(&ci));
            for (g, &c) in bilap.iter().enumerate() {
                if c != 0.0 {
                    b_hess[(i, layout.moment_dof(g))] += c * area;
                }
            }
            // boundary parts: (hess m_i n) . grad phi - dn(lap m_i) phi
            let lapi = lap(&ci);
            let dlx = poly::deriv_x(&lapi, h);
            let dly = poly::deriv_y(&lapi, h);
            for bp in &bnd {
                let mxx = eval_poly(&ixx, cell, bp.x);
                let mxy = eval_poly(&ixy, cell, bp.x);
                let myy = eval_poly(&iyy, cell, bp.x);
                let hn = (
                    mxx * bp.normal.x + mxy * bp.normal.y,
                    mxy * bp.normal.x + myy * bp.normal.y,
                );
                let dn_lap = eval_poly(&dlx, cell, bp.x) * bp.normal.x + eval_poly(&dly, cell, bp.x) * bp.normal.y;
                for c in 0..n {
                    b_hess[(i, c)] += bp.w * (hn.0 * bp.gx[c] + hn.1 * bp.gy[c] - dn_lap * bp.val[c]);
                }
            }
        }
        // constraint rows: boundary averages of the value and the gradient
        let mut g_mod = hess_gram.clone();
        let mut b_mod = b_hess.clone();
        for row in 0..3 {
            for j in 0..nkp1 {
                g_mod[(row, j)] = 0.0;
            }
            for c in 0..n {
                b_mod[(row, c)] = 0.0;
            }
        }
        for j in 0..nkp1 {
            let cj = unit(nkp1, j);
            let dx = poly::deriv_x(&cj, h);
            let dy = poly::deriv_y(&cj, h);
            let mut avg = 0.0;
            let mut avg_dx = 0.0;
            let mut avg_dy = 0.0;
            for bp in &bnd {
                avg += bp.w * eval_poly(&cj, cell, bp.x);
                avg_dx += bp.w * eval_poly(&dx, cell, bp.x);
                avg_dy += bp.w * eval_poly(&dy, cell, bp.x);
            }
            g_mod[(0, j)] = avg / perimeter;
            g_mod[(1, j)] = avg_dx / perimeter * h;
            g_mod[(2, j)] = avg_dy / perimeter * h;
        }
        for bp in &bnd {
            for c in 0..n {
                b_mod[(0, c)] += bp.w * bp.val[c] / perimeter;
                b_mod[(1, c)] += bp.w * bp.gx[c] / perimeter * h;
                b_mod[(2, c)] += bp.w * bp.gy[c] / perimeter * h;
            }
        }
        let pi_hess_proj = g_mod.lu().solve(&b_mod).expect("H2 projector system is invertible");

        // ---- full moments of phi: P_{k-3} directly, the orthogonal slice
        // through the enhancement constraint (phi - Pi phi, p_hat) = 0
        let mut phi_moments = DMatrix::zeros(nkm1, n);
        let proj_km3 = if nkm3 > 0 {
            let h_km3 = cell.gram(k - 3, k - 3);
            let cross = cell.gram(k - 3, k - 1);
            Some(h_km3.lu().solve(&cross).expect("P_{k-3} mass matrix is SPD"))
        } else {
            None
        };
        let g_kp1_km1 = cell.gram(k + 1, k - 1); // (nkp1 x nkm1)
        for al in 0..nkm1 {
            let mut proj = vec![0.0; nkm3];
            if let Some(pm) = &proj_km3 {
                for g in 0..nkm3 {
                    proj[g] = pm[(g, al)];
                }
            }
            for (g, &c) in proj.iter().enumerate() {
                if c != 0.0 {
                    phi_moments[(al, layout.moment_dof(g))] += c * area;
                }
            }
            // (Pi phi, p_hat) with p_hat = m_al - proj
            let mut w = DVector::zeros(nkp1);
            for i in 0..nkp1 {
                w[i] = g_kp1_km1[(i, al)];
                for (g, &c) in proj.iter().enumerate() {
                    if c != 0.0 {
                        w[i] -= c * g_kp1_km1[(i, g)];
                    }
                }
            }
            let contrib = w.transpose() * &pi_hess_proj;
            for c in 0..n {
                phi_moments[(al, c)] += contrib[c];
            }
        }

        let h_km1 = cell.gram(k - 1, k - 1);
        let h_km1_lu = h_km1.lu();
        let pi_val = h_km1_lu.solve(&phi_moments).expect("mass matrix");

        // ---- Laplacian projection
        let mut b_delta = DMatrix::zeros(nkm1, n);
        for al in 0..nkm1 {
            let ca = unit(nkm1, al);
            let lapa = lap(&ca);
            // (phi, lap m_al)
            for (g, &c) in lapa.iter().enumerate() {
                if c != 0.0 {
                    for j in 0..n {
                        b_delta[(al, j)] += c * phi_moments[(g, j)];
                    }
                }
            }
            let dax = poly::deriv_x(&ca, h);
            let day = poly::deriv_y(&ca, h);
            for bp in &bnd {
                let ma = eval_poly(&ca, cell, bp.x);
                let dna = eval_poly(&dax, cell, bp.x) * bp.normal.x + eval_poly(&day, cell, bp.x) * bp.normal.y;
                for c in 0..n {
                    // + dn(phi) m_al - phi dn(m_al)
                    let dnphi = bp.gx[c] * bp.normal.x + bp.gy[c] * bp.normal.y;
                    b_delta[(al, c)] += bp.w * (dnphi * ma - dna * bp.val[c]);
                }
            }
        }
        let pi_delta = h_km1_lu.solve(&b_delta).expect("mass matrix");

        // ---- gradient projection at degree k
        let h_k = cell.gram(k, k);
        let h_k_lu = h_k.lu();
        let mut pi_grad = DMatrix::zeros(2 * nk, n);
        for comp in 0..2 {
            let mut rows = DMatrix::zeros(nk, n);
            for be in 0..nk {
                let cb = unit(nk, be);
                let d = if comp == 0 { poly::deriv_x(&cb, h) } else { poly::deriv_y(&cb, h) };
                // -(phi, d_c m_be): degree k-1 moments
                for (g, &c) in d.iter().enumerate() {
                    if c != 0.0 {
                        for j in 0..n {
                            rows[(be, j)] -= c * phi_moments[(g, j)];
                        }
                    }
                }
                for bp in &bnd {
                    let mb = eval_poly(&cb, cell, bp.x);
                    let nc = if comp == 0 { bp.normal.x } else { bp.normal.y };
                    for c in 0..n {
                        rows[(be, c)] += bp.w * bp.val[c] * mb * nc;
                    }
                }
            }
            let sol = h_k_lu.solve(&rows).expect("mass matrix");
            pi_grad.rows_mut(comp * nk, nk).copy_from(&sol);
        }

        // ---- Hessian L2 projection
        let mut pi_hess0 = DMatrix::zeros(4 * nkm1, n);
        for cc in 0..2 {
            for dd in 0..2 {
                let mut rows = DMatrix::zeros(nkm1, n);
                for al in 0..nkm1 {
                    let ca = unit(nkm1, al);
                    let dmd = if dd == 0 { poly::deriv_x(&ca, h) } else { poly::deriv_y(&ca, h) };
                    let dmcd = if cc == 0 { poly::deriv_x(&dmd, h) } else { poly::deriv_y(&dmd, h) };
                    for (g, &c) in dmcd.iter().enumerate() {
                        if c != 0.0 {
                            for j in 0..n {
                                rows[(al, j)] += c * phi_moments[(g, j)];
                            }
                        }
                    }
                    for bp in &bnd {
                        let ma = eval_poly(&ca, cell, bp.x);
                        let dmd_v = eval_poly(&dmd, cell, bp.x);
                        let nc = if cc == 0 { bp.normal.x } else { bp.normal.y };
                        let nd = if dd == 0 { bp.normal.x } else { bp.normal.y };
                        for c in 0..n {
                            let gphi_c = if cc == 0 { bp.gx[c] } else { bp.gy[c] };
                            rows[(al, c)] += bp.w * (gphi_c * ma * nd - bp.val[c] * dmd_v * nc);
                        }
                    }
                }
                let sol = h_km1_lu.solve(&rows).expect("mass matrix");
                pi_hess0.rows_mut((2 * cc + dd) * nkm1, nkm1).copy_from(&sol);
            }
        }

        // ---- DoFs of the P_{k+1} monomials
        let mut dof_of_poly = DMatrix::zeros(n, nkp1);
        for i in 0..nkp1 {
            let ci = unit(nkp1, i);
            let dx = poly::deriv_x(&ci, h);
            let dy = poly::deriv_y(&ci, h);
            for v in 0..n_e {
                let x = cell.geo.vertices[v];
                dof_of_poly[(layout.vertex_value_dof(v), i)] = eval_poly(&ci, cell, x);
                dof_of_poly[(layout.vertex_grad_dof(v, 0), i)] = eval_poly(&dx, cell, x);
                dof_of_poly[(layout.vertex_grad_dof(v, 1), i)] = eval_poly(&dy, cell, x);
            }
            for e in 0..n_e {
                let (a, b) = cell.geo.edge(e);
                let ed = &cell.edges[e];
                for (p, &s) in traces.value_nodes.iter().enumerate() {
                    dof_of_poly[(layout.edge_value_dof(e, p), i)] = eval_poly(&ci, cell, a + (b - a) * s);
                }
                for (p, &s) in traces.normal_nodes.iter().enumerate() {
                    let x = a + (b - a) * s;
                    dof_of_poly[(layout.edge_normal_dof(e, p), i)] =
                        eval_poly(&dx, cell, x) * ed.normal.x + eval_poly(&dy, cell, x) * ed.normal.y;
                }
            }
            for al in 0..nkm3 {
                let mono = unit(nkm3, al);
                let prod = poly::poly_mul(&ci, &mono);
                dof_of_poly[(layout.moment_dof(al), i)] = poly::integrate(&cell.mom, &prod) / area;
            }
        }

        // ---- local form: Hessian consistency keeps the kernel at exactly
        // the affine functions; stabilization dofi-dofi scaled by 1/h^2 with
        // gradient-type DoFs weighted by h
        let consistency = pi_hess_proj.transpose() * &hess_gram * &pi_hess_proj;
        let complement = DMatrix::identity(n, n) - &dof_of_poly * &pi_hess_proj;
        let mut scale = DVector::from_element(n, 1.0);
        for v in 0..n_e {
            scale[layout.vertex_grad_dof(v, 0)] = h;
            scale[layout.vertex_grad_dof(v, 1)] = h;
        }
        for e in 0..n_e {
            for p in 0..(k - 1) {
                scale[layout.edge_normal_dof(e, p)] = h;
            }
        }
        let scaled = DMatrix::from_fn(n, n, |i, j| complement[(i, j)] * scale[i]);
        let stiffness = &consistency + scaled.transpose() * &scaled / (h * h);

        // evaluation tables
        let nq = cell.rule.points.len();
        let mut eval_k = DMatrix::zeros(nq, nk);
        let mut eval_km1 = DMatrix::zeros(nq, nkm1);
        for (q, &x) in cell.rule.points.iter().enumerate() {
            let mv = cell.basis.eval(k, x);
            for s in 0..nk {
                eval_k[(q, s)] = mv[s];
            }
            for s in 0..nkm1 {
                eval_km1[(q, s)] = mv[s];
            }
        }

        C1Element {
            layout,
            traces,
            phi_moments,
            pi_hess_proj,
            pi_delta,
            pi_val,
            pi_grad,
            pi_hess0,
            dof_of_poly,
            stiffness,
            hess_gram,
            eval_k,
            eval_km1,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.n_dofs()
    }

    /// Quadrature tables: projected Laplacian, curl, and gradient values.
    pub fn convective_tables(&self, cell: &CellBasis) -> C1Tables {
        let nk = self.eval_k.ncols();
        let gx = &self.eval_k * self.pi_grad.rows(0, nk);
        let gy = &self.eval_k * self.pi_grad.rows(nk, nk);
        C1Tables {
            weights: cell.rule.weights.clone(),
            delta: &self.eval_km1 * &self.pi_delta,
            gx,
            gy,
        }
    }
}

/// Quadrature-point tables for the stream convective form
/// `int (Pi lap zeta) (Pi curl psi) . (Pi grad phi)`.
pub struct C1Tables {
    weights: Vec<f64>,
    delta: DMatrix<f64>,
    gx: DMatrix<f64>,
    gy: DMatrix<f64>,
}

impl C1Tables {
    /// Entry (i, j) = c(zeta; phi_j, phi_i).
    pub fn matrix(&self, zeta: &DVector<f64>) -> DMatrix<f64> {
        let n = self.gx.ncols();
        let dz = &self.delta * zeta;
        let mut c = DMatrix::zeros(n, n);
        for (q, &w) in self.weights.iter().enumerate() {
            let s = w * dz[q];
            // curl phi_j . grad phi_i = gy_j gx_i - gx_j gy_i
            c += self.gx.row(q).transpose() * (self.gy.row(q) * s);
            c -= self.gy.row(q).transpose() * (self.gx.row(q) * s);
        }
        c
    }

    /// Entry (i, j) = c(phi_j; state, phi_i).
    pub fn wind_derivative(&self, state: &DVector<f64>) -> DMatrix<f64> {
        let n = self.gx.ncols();
        let cux = &self.gy * state; // curl_x = d/dy
        let cuy = -(&self.gx * state); // curl_y = -d/dx
        let mut c = DMatrix::zeros(n, n);
        for (q, &w) in self.weights.iter().enumerate() {
            let coef = self.gx.row(q).transpose() * (w * cux[q]) + self.gy.row(q).transpose() * (w * cuy[q]);
            c += coef * self.delta.row(q);
        }
        c
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut c = vec![0.0; n];
    c[i] = 1.0;
    c
}

fn eval_poly(coeffs: &[f64], cell: &CellBasis, x: crate::geometry::Point2) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    let deg = poly::degree_of_len(coeffs.len());
    let v = cell.basis.eval(deg, x);
    coeffs.iter().zip(v.iter()).map(|(c, m)| c * m).sum()
}

fn hessian(coeffs: &[f64], h: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let dx = poly::deriv_x(coeffs, h);
    let dy = poly::deriv_y(coeffs, h);
    (poly::deriv_x(&dx, h), poly::deriv_y(&dx, h), poly::deriv_y(&dy, h))
}
