//! Global assembly and nonlinear solution of the four formulations:
//! velocity-pressure, its reduced variant, the curl (stream-potential)
//! formulation built on the discrete complex, and the direct C1 stream
//! scheme. Also pressure recovery by least squares and the Bernoulli to
//! convective pressure conversion.

use crate::dofmap::{
    stream_boundary_values, stream_dof_map, velocity_boundary_values, velocity_dof_map, DofMap,
};
use crate::element::{
    C1Element, C1Tables, CellBasis, StreamElement, Trilinear, TrilinearTables, VelocityElement,
};
use crate::geometry::Point2;
use crate::mesh::PolygonalMesh;
use crate::poly::{self, dim_p};
use crate::problems::Problem;
use crate::sparse::{condition_estimate, Factorized, SolverError, Triplets};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    VelocityPressure,
    Reduced,
    Curl,
    StreamC1,
}

impl Formulation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "velocity-pressure" => Some(Formulation::VelocityPressure),
            "reduced" => Some(Formulation::Reduced),
            "curl" => Some(Formulation::Curl),
            "stream-c1" => Some(Formulation::StreamC1),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Formulation::VelocityPressure => "velocity-pressure",
            Formulation::Reduced => "reduced",
            Formulation::Curl => "curl",
            Formulation::StreamC1 => "stream-c1",
        }
    }

    pub fn is_stream(&self) -> bool {
        matches!(self, Formulation::Curl | Formulation::StreamC1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsMode {
    /// (Pi0_k f, v): the projected load.
    ProjectedF,
    /// ((curl f)_h, phi): only meaningful for the stream-based formulations.
    CurlF,
}

impl RhsMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "projected-f" => Some(RhsMode::ProjectedF),
            "curl-f" => Some(RhsMode::CurlF),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iters: usize,
    /// Picard linearization (frozen wind) instead of the exact Jacobian.
    pub picard: bool,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings { tol: 1e-10, max_iters: 50, picard: false }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Linear(#[from] SolverError),
    #[error("Newton did not converge after {iters} iterations (residual {residual:.3e})")]
    NonConvergence { iters: usize, residual: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub newton_iters: usize,
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
    pub converged: bool,
    pub n_unknowns: usize,
}

/// Per-cell element data for one mesh and order.
pub struct ElementSet {
    pub k: usize,
    pub cells: Vec<CellBasis>,
    pub vel: Vec<VelocityElement>,
    pub tri: Vec<TrilinearTables>,
    pub stream: Option<Vec<StreamElement>>,
    pub c1: Option<Vec<C1Element>>,
}

impl ElementSet {
    pub fn build(mesh: &PolygonalMesh, k: usize, formulation: Formulation) -> Self {
        let cells: Vec<CellBasis> = (0..mesh.n_cells())
            .into_par_iter()
            .map(|c| CellBasis::new(mesh.cell_geometry(c), k))
            .collect();
        let vel: Vec<VelocityElement> = cells.par_iter().map(VelocityElement::build).collect();
        let tri: Vec<TrilinearTables> =
            cells.par_iter().zip(vel.par_iter()).map(|(c, v)| TrilinearTables::new(c, v)).collect();
        let stream = match formulation {
            Formulation::Curl => Some(
                cells
                    .par_iter()
                    .zip(vel.par_iter())
                    .map(|(c, v)| StreamElement::build(c, v))
                    .collect(),
            ),
            _ => None,
        };
        let c1 = match formulation {
            Formulation::StreamC1 => Some(cells.par_iter().map(C1Element::build).collect()),
            _ => None,
        };
        ElementSet { k, cells, vel, tri, stream, c1 }
    }
}

/// Result of a nonlinear (or Stokes) solve.
pub struct Solution {
    pub formulation: Formulation,
    /// Full global velocity DoF vector (boundary values included). For the
    /// stream formulations this is the transferred curl of the potential.
    pub velocity: DVector<f64>,
    /// Full global stream DoF vector when a stream space was solved.
    pub stream: Option<DVector<f64>>,
    /// Per-cell pressure coefficient vectors (velocity-pressure and reduced
    /// solves; recovered separately for the curl formulation).
    pub pressure: Option<Vec<DVector<f64>>>,
    pub report: SolveReport,
}

struct VpWork<'a> {
    mesh: &'a PolygonalMesh,
    els: &'a ElementSet,
    map: DofMap,
    bc: DVector<f64>,
    npc: usize,
    n_unknowns: usize,
    vel_free: usize,
    load: Vec<DVector<f64>>,
    cell_mom: Vec<DVector<f64>>,
    nu_value: f64,
}

impl<'a> VpWork<'a> {
    fn full_velocity(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut full = self.bc.clone();
        for (g, fi) in self.map.free_index.iter().enumerate() {
            if let Some(i) = *fi {
                full[g] = x[i];
            }
        }
        full
    }

    fn pressure_coeffs(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let nkm1 = dim_p(self.els.k as i64 - 1);
        (0..self.mesh.n_cells())
            .map(|c| {
                let mut p = DVector::zeros(nkm1);
                for al in 0..self.npc {
                    p[al] = x[self.vel_free + c * self.npc + al];
                }
                p
            })
            .collect()
    }

    /// Residual and (optionally) Jacobian triplets at the current state.
    fn assemble(
        &self,
        x: &DVector<f64>,
        variant: Option<Trilinear>,
        jacobian: bool,
        picard: bool,
    ) -> (DVector<f64>, Option<Triplets>) {
        let n = self.n_unknowns;
        let mut r = DVector::zeros(n);
        let mut trips = jacobian.then(|| Triplets::new(n, n));
        let full = self.full_velocity(x);
        let lambda = x[n - 1];

        for c in 0..self.mesh.n_cells() {
            let el = &self.els.vel[c];
            let map = &self.map.l2g[c];
            let u_loc = self.map.gather(c, &full);
            let p_loc = DVector::from_fn(self.npc, |al, _| x[self.vel_free + c * self.npc + al]);

            let mut k_loc = &el.stiffness * self.nu();
            if let Some(v) = variant {
                k_loc += self.els.tri[c].matrix(v, &u_loc);
            }
            let mut r_vel = &k_loc * &u_loc - &self.load[c];
            // + B^T p
            for al in 0..self.npc {
                for i in 0..r_vel.len() {
                    r_vel[i] += el.div_matrix[(al, i)] * p_loc[al];
                }
            }
            // divergence rows: B u + lambda m
            let div_u = &el.div_matrix * &u_loc;
            for al in 0..self.npc {
                let rr = self.vel_free + c * self.npc + al;
                r[rr] += div_u[al] + lambda * self.cell_mom[c][al];
                // mean row
                r[n - 1] += self.cell_mom[c][al] * p_loc[al];
            }

            // scatter velocity residual
            for (i, t) in map.iter().enumerate() {
                if let Some(fi) = self.map.free_index[t.global] {
                    r[fi] += t.sign * r_vel[i];
                }
            }

            if let Some(tr) = trips.as_mut() {
                let mut j_loc = k_loc;
                if let Some(v) = variant {
                    if !picard {
                        j_loc += self.els.tri[c].wind_derivative(v, &u_loc);
                    }
                }
                for (i, ti) in map.iter().enumerate() {
                    let Some(fi) = self.map.free_index[ti.global] else { continue };
                    for (j, tj) in map.iter().enumerate() {
                        if let Some(fj) = self.map.free_index[tj.global] {
                            tr.push(fi, fj, ti.sign * tj.sign * j_loc[(i, j)]);
                        }
                    }
                    for al in 0..self.npc {
                        let col = self.vel_free + c * self.npc + al;
                        tr.push(fi, col, ti.sign * el.div_matrix[(al, i)]);
                    }
                }
                for al in 0..self.npc {
                    let row = self.vel_free + c * self.npc + al;
                    for (j, tj) in map.iter().enumerate() {
                        if let Some(fj) = self.map.free_index[tj.global] {
                            tr.push(row, fj, tj.sign * el.div_matrix[(al, j)]);
                        }
                    }
                    tr.push(row, n - 1, self.cell_mom[c][al]);
                    tr.push(n - 1, row, self.cell_mom[c][al]);
                }
            }
        }
        (r, trips)
    }

    fn nu(&self) -> f64 {
        self.nu_value
    }
}

pub fn solve(
    mesh: &PolygonalMesh,
    els: &ElementSet,
    problem: &Problem,
    formulation: Formulation,
    variant: Trilinear,
    rhs_mode: RhsMode,
    settings: &NewtonSettings,
) -> Result<Solution, SolveError> {
    match formulation {
        Formulation::VelocityPressure | Formulation::Reduced => {
            if rhs_mode == RhsMode::CurlF {
                return Err(SolveError::Config(
                    "rhs mode curl-f is only valid for the curl and stream formulations".into(),
                ));
            }
            solve_vp(mesh, els, problem, formulation == Formulation::Reduced, variant, settings)
        }
        Formulation::Curl => solve_curl(mesh, els, problem, variant, rhs_mode, settings),
        Formulation::StreamC1 => solve_stream_c1(mesh, els, problem, variant, rhs_mode, settings),
    }
}

fn newton_loop(
    n_unknowns: usize,
    settings: &NewtonSettings,
    stokes_only: bool,
    mut assemble: impl FnMut(&DVector<f64>, bool, bool) -> (DVector<f64>, Option<Triplets>),
) -> Result<(DVector<f64>, SolveReport), SolveError> {
    let mut x = DVector::zeros(n_unknowns);
    let mut history = Vec::new();

    // first iteration: the Stokes system (trilinear terms dropped)
    let (r0, t0) = assemble(&x, false, true);
    let a0 = Factorized::new(&t0.expect("jacobian requested").to_sparse()?)?;
    x -= a0.solve(&r0);
    let mut iters = 1;

    let scale = 1.0f64.max(r0.norm());
    let (mut r, _) = assemble(&x, !stokes_only, false);
    let mut res = r.norm() / scale;
    history.push(res);

    if !stokes_only {
        while res > settings.tol && iters < settings.max_iters {
            let (rr, tt) = assemble(&x, true, true);
            let a = Factorized::new(&tt.expect("jacobian requested").to_sparse()?)?;
            x -= a.solve(&rr);
            iters += 1;
            let (r1, _) = assemble(&x, true, false);
            r = r1;
            res = r.norm() / scale;
            history.push(res);
        }
    }

    let converged = res <= settings.tol;
    let report = SolveReport {
        newton_iters: iters,
        residual_history: history,
        final_residual: res,
        converged,
        n_unknowns,
    };
    if !converged {
        return Err(SolveError::NonConvergence { iters, residual: res });
    }
    Ok((x, report))
}

fn solve_vp(
    mesh: &PolygonalMesh,
    els: &ElementSet,
    problem: &Problem,
    reduced: bool,
    variant: Trilinear,
    settings: &NewtonSettings,
) -> Result<Solution, SolveError> {
    let work = vp_workspace(mesh, els, problem, reduced);
    let stokes_only = problem.stokes;
    let picard = settings.picard;
    let assemble = |x: &DVector<f64>, with_tri: bool, jac: bool| {
        work.assemble(x, with_tri.then_some(variant), jac, picard)
    };
    let (x, report) = newton_loop(work.n_unknowns, settings, stokes_only, assemble)?;
    let velocity = work.full_velocity(&x);
    let pressure = work.pressure_coeffs(&x);
    Ok(Solution { formulation: if reduced { Formulation::Reduced } else { Formulation::VelocityPressure }, velocity, stream: None, pressure: Some(pressure), report })
}

fn vp_workspace<'a>(
    mesh: &'a PolygonalMesh,
    els: &'a ElementSet,
    problem: &Problem,
    reduced: bool,
) -> VpWork<'a> {
    let k = els.k;
    let map = velocity_dof_map(mesh, k, reduced);
    let bc = velocity_boundary_values(mesh, k, &map, &|p| problem.velocity(p));
    let npc = if reduced { 1 } else { dim_p(k as i64 - 1) };
    let vel_free = map.n_free;
    let n_unknowns = vel_free + mesh.n_cells() * npc + 1;
    let load: Vec<DVector<f64>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| els.tri[c].load(&els.cells[c], &|p| problem.forcing(p)))
        .collect();
    let cell_mom: Vec<DVector<f64>> = (0..mesh.n_cells())
        .map(|c| DVector::from_fn(npc, |al, _| els.cells[c].mom[al]))
        .collect();
    VpWork { mesh, els, map, bc, npc, n_unknowns, vel_free, load, cell_mom, nu_value: problem.nu }
}

fn solve_curl(
    mesh: &PolygonalMesh,
    els: &ElementSet,
    problem: &Problem,
    variant: Trilinear,
    rhs_mode: RhsMode,
    settings: &NewtonSettings,
) -> Result<Solution, SolveError> {
    let k = els.k;
    let stream_els = els.stream.as_ref().expect("curl formulation needs stream elements");
    let map = stream_dof_map(mesh, k);
    let bc = stream_boundary_values(mesh, k, &map, &|p| problem.psi(p), &|p| problem.grad_psi(p));
    let n = map.n_free;
    let nu = problem.nu;

    // per-cell right-hand side in stream DoFs
    let rhs: Vec<DVector<f64>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| match rhs_mode {
            RhsMode::ProjectedF => {
                let l = els.tri[c].load(&els.cells[c], &|p| problem.forcing(p));
                stream_els[c].transfer.transpose() * l
            }
            RhsMode::CurlF => {
                curl_f_rhs(&els.cells[c], &stream_els[c].phi_moments, &|p| problem.forcing(p))
            }
        })
        .collect();

    let assemble = |x: &DVector<f64>, with_tri: bool, jac: bool| {
        let mut full = bc.clone();
        for (g, fi) in map.free_index.iter().enumerate() {
            if let Some(i) = *fi {
                full[g] = x[i];
            }
        }
        let mut r = DVector::zeros(n);
        let mut trips = jac.then(|| Triplets::new(n, n));
        for c in 0..mesh.n_cells() {
            let el = &els.vel[c];
            let t = &stream_els[c].transfer;
            let psi_loc = map.gather(c, &full);
            let u_loc = t * &psi_loc;
            let mut k_vel = &el.stiffness * nu;
            if with_tri {
                k_vel += els.tri[c].matrix(variant, &u_loc);
            }
            let r_vel = &k_vel * &u_loc;
            let r_loc = t.transpose() * r_vel - &rhs[c];
            for (i, ti) in map.l2g[c].iter().enumerate() {
                if let Some(fi) = map.free_index[ti.global] {
                    r[fi] += ti.sign * r_loc[i];
                }
            }
            if let Some(tr) = trips.as_mut() {
                let mut j_vel = k_vel;
                if with_tri && !settings.picard {
                    j_vel += els.tri[c].wind_derivative(variant, &u_loc);
                }
                let j_loc = t.transpose() * j_vel * t;
                for (i, ti) in map.l2g[c].iter().enumerate() {
                    let Some(fi) = map.free_index[ti.global] else { continue };
                    for (j, tj) in map.l2g[c].iter().enumerate() {
                        if let Some(fj) = map.free_index[tj.global] {
                            tr.push(fi, fj, ti.sign * tj.sign * j_loc[(i, j)]);
                        }
                    }
                }
            }
        }
        (r, trips)
    };

    let (x, report) = newton_loop(n, settings, problem.stokes, assemble)?;
    let mut full = bc.clone();
    for (g, fi) in map.free_index.iter().enumerate() {
        if let Some(i) = *fi {
            full[g] = x[i];
        }
    }
    // transfer the potential to a full global velocity vector
    let vmap = velocity_dof_map(mesh, k, false);
    let mut velocity = DVector::zeros(vmap.n_global);
    for c in 0..mesh.n_cells() {
        let psi_loc = map.gather(c, &full);
        let u_loc = &stream_els[c].transfer * psi_loc;
        for (i, t) in vmap.l2g[c].iter().enumerate() {
            velocity[t.global] = t.sign * u_loc[i];
        }
    }
    Ok(Solution { formulation: Formulation::Curl, velocity, stream: Some(full), pressure: None, report })
}

/// Right-hand side entries ((curl f)_h, phi_i) from the exact moments of phi:
/// the curl moments of f are computed by parts so only values of f are used.
fn curl_f_rhs(
    cell: &CellBasis,
    phi_moments: &DMatrix<f64>,
    f: &dyn Fn(Point2) -> (f64, f64),
) -> DVector<f64> {
    let k = cell.k;
    let nkm1 = dim_p(k as i64 - 1);
    // moments of curl f against the P_{k-1} monomials:
    // int (curl f) m = int f . curl(m) + bnd m (f . t)
    let mut mom = DVector::zeros(nkm1);
    for al in 0..nkm1 {
        let mut unit = vec![0.0; nkm1];
        unit[al] = 1.0;
        let (cx, cy) = poly::curl_scalar(&unit, cell.h());
        let interior = cell.rule.integrate(|p| {
            let (fx, fy) = f(p);
            let v = cell.basis.eval(k.max(2) - 2, p);
            let gx: f64 = cx.iter().zip(v.iter()).map(|(c, m)| c * m).sum();
            let gy: f64 = cy.iter().zip(v.iter()).map(|(c, m)| c * m).sum();
            fx * gx + fy * gy
        });
        let mut boundary = 0.0;
        for ed in &cell.edges {
            for (q, &x) in ed.qx.iter().enumerate() {
                let (fx, fy) = f(x);
                let mv = cell.basis.eval(k - 1, x);
                boundary += ed.qw[q] * mv[al] * (fx * ed.tangent.x + fy * ed.tangent.y);
            }
        }
        mom[al] = interior + boundary;
    }
    // (Pi0_{k-1} curl f, phi) = mom^T H^{-1} (phi moments)
    let h_km1 = cell.gram(k - 1, k - 1);
    let c = h_km1.lu().solve(&mom).expect("mass matrix");
    (c.transpose() * phi_moments).transpose()
}

fn solve_stream_c1(
    mesh: &PolygonalMesh,
    els: &ElementSet,
    problem: &Problem,
    _variant: Trilinear,
    rhs_mode: RhsMode,
    settings: &NewtonSettings,
) -> Result<Solution, SolveError> {
    if rhs_mode == RhsMode::ProjectedF {
        return Err(SolveError::Config(
            "the C1 stream scheme uses the curl-f right-hand side".into(),
        ));
    }
    let k = els.k;
    let c1 = els.c1.as_ref().expect("stream-c1 formulation needs C1 elements");
    let map = stream_dof_map(mesh, k);
    let bc = stream_boundary_values(mesh, k, &map, &|p| problem.psi(p), &|p| problem.grad_psi(p));
    let n = map.n_free;
    let nu = problem.nu;

    let tabs: Vec<C1Tables> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| c1[c].convective_tables(&els.cells[c]))
        .collect();
    let rhs: Vec<DVector<f64>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| curl_f_rhs(&els.cells[c], &c1[c].phi_moments, &|p| problem.forcing(p)))
        .collect();

    let assemble = |x: &DVector<f64>, with_tri: bool, jac: bool| {
        let mut full = bc.clone();
        for (g, fi) in map.free_index.iter().enumerate() {
            if let Some(i) = *fi {
                full[g] = x[i];
            }
        }
        let mut r = DVector::zeros(n);
        let mut trips = jac.then(|| Triplets::new(n, n));
        for c in 0..mesh.n_cells() {
            let el = &c1[c];
            let psi_loc = map.gather(c, &full);
            let mut k_loc = &el.stiffness * nu;
            if with_tri {
                k_loc += tabs[c].matrix(&psi_loc);
            }
            let r_loc = &k_loc * &psi_loc - &rhs[c];
            for (i, ti) in map.l2g[c].iter().enumerate() {
                if let Some(fi) = map.free_index[ti.global] {
                    r[fi] += ti.sign * r_loc[i];
                }
            }
            if let Some(tr) = trips.as_mut() {
                let mut j_loc = k_loc;
                if with_tri && !settings.picard {
                    j_loc += tabs[c].wind_derivative(&psi_loc);
                }
                for (i, ti) in map.l2g[c].iter().enumerate() {
                    let Some(fi) = map.free_index[ti.global] else { continue };
                    for (j, tj) in map.l2g[c].iter().enumerate() {
                        if let Some(fj) = map.free_index[tj.global] {
                            tr.push(fi, fj, ti.sign * tj.sign * j_loc[(i, j)]);
                        }
                    }
                }
            }
        }
        (r, trips)
    };

    let (x, report) = newton_loop(n, settings, problem.stokes, assemble)?;
    let mut full = bc.clone();
    for (g, fi) in map.free_index.iter().enumerate() {
        if let Some(i) = *fi {
            full[g] = x[i];
        }
    }
    Ok(Solution {
        formulation: Formulation::StreamC1,
        velocity: DVector::zeros(0),
        stream: Some(full),
        pressure: None,
        report,
    })
}

/// Least-squares pressure recovery for the curl formulation: solve
/// `B B^T p = B r` on the zero-mean pressure space, where the rows of `B`
/// are the divergence pairings and `r` holds the momentum residuals of the
/// solved potential against all interior velocity DoFs.
pub struct RecoveredPressure {
    pub coeffs: Vec<DVector<f64>>,
    /// Relative residual of the overdetermined system `B^T p = r`.
    pub lsq_residual: f64,
}

pub fn recover_pressure(
    mesh: &PolygonalMesh,
    els: &ElementSet,
    problem: &Problem,
    solution: &Solution,
    variant: Trilinear,
) -> Result<RecoveredPressure, SolveError> {
    let k = els.k;
    let nkm1 = dim_p(k as i64 - 1);
    let vmap = velocity_dof_map(mesh, k, false);
    let n_p = mesh.n_cells() * nkm1;
    let n_v = vmap.n_free;
    let nu = problem.nu;

    let mut b = Triplets::new(n_p, n_v);
    let mut r = DVector::zeros(n_v);
    for c in 0..mesh.n_cells() {
        let el = &els.vel[c];
        let u_loc = vmap.gather(c, &solution.velocity);
        let mut k_vel = &el.stiffness * nu;
        if !problem.stokes {
            k_vel += els.tri[c].matrix(variant, &u_loc);
        }
        let load = els.tri[c].load(&els.cells[c], &|p| problem.forcing(p));
        let r_loc = load - k_vel * &u_loc;
        for (i, t) in vmap.l2g[c].iter().enumerate() {
            if let Some(fi) = vmap.free_index[t.global] {
                r[fi] += t.sign * r_loc[i];
                for al in 0..nkm1 {
                    b.push(c * nkm1 + al, fi, t.sign * el.div_matrix[(al, i)]);
                }
            }
        }
    }
    let b_mat = b.to_sparse()?;

    // normal equations with one mean constraint appended
    let n = n_p + 1;
    let mut nt = Triplets::new(n, n);
    // B B^T assembled cell-wise is dense across pressure blocks of cells
    // sharing velocity DoFs; build it through sparse products column by column
    let bt = {
        let mut t = Triplets::new(n_v, n_p);
        for c in 0..mesh.n_cells() {
            let el = &els.vel[c];
            for (i, tt) in vmap.l2g[c].iter().enumerate() {
                if let Some(fi) = vmap.free_index[tt.global] {
                    for al in 0..nkm1 {
                        t.push(fi, c * nkm1 + al, tt.sign * el.div_matrix[(al, i)]);
                    }
                }
            }
        }
        t.to_sparse()?
    };
    // (B B^T)_{ij}: accumulate through the columns of B^T
    {
        use std::collections::HashMap;
        let mut cols: Vec<HashMap<usize, f64>> = vec![HashMap::new(); n_p];
        let rows = bt.row_indices();
        let vals = bt.values();
        // bt columns give B^T; (B B^T) = (B^T)^T (B^T)
        // work out products via the sparsity of each velocity row
        let mut by_vel_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_v];
        for j in 0..n_p {
            for idx in bt.col_range(j) {
                by_vel_row[rows[idx]].push((j, vals[idx]));
            }
        }
        for row in &by_vel_row {
            for &(j1, v1) in row {
                for &(j2, v2) in row {
                    *cols[j1].entry(j2).or_insert(0.0) += v1 * v2;
                }
            }
        }
        for (j1, col) in cols.into_iter().enumerate() {
            for (j2, v) in col {
                nt.push(j1, j2, v);
            }
        }
    }
    for c in 0..mesh.n_cells() {
        for al in 0..nkm1 {
            let m = els.cells[c].mom[al];
            nt.push(c * nkm1 + al, n - 1, m);
            nt.push(n - 1, c * nkm1 + al, m);
        }
    }
    let br = crate::sparse::spmv(&b_mat, &r);
    let mut rhs = DVector::zeros(n);
    for i in 0..n_p {
        rhs[i] = br[i];
    }
    let f = Factorized::new(&nt.to_sparse()?)?;
    let sol = f.solve(&rhs);
    let p_flat = DVector::from_fn(n_p, |i, _| sol[i]);

    // residual of the rectangular system
    let btp = crate::sparse::spmv(&bt, &p_flat);
    let lsq_residual = (&btp - &r).norm() / r.norm().max(1e-30);

    let coeffs = (0..mesh.n_cells())
        .map(|c| DVector::from_fn(nkm1, |al, _| p_flat[c * nkm1 + al]))
        .collect();
    Ok(RecoveredPressure { coeffs, lsq_residual })
}

/// Convert a Bernoulli pressure (rotational form output) to the convective
/// pressure: p = P + (Pi0_k u . Pi0_k u)/2 - lambda_h, with lambda_h the
/// global mean of the quadratic term. The result is a per-cell polynomial of
/// degree 2k.
pub fn bernoulli_to_convective(
    mesh: &PolygonalMesh,
    els: &ElementSet,
    bernoulli: &[DVector<f64>],
    velocity: &DVector<f64>,
) -> Vec<DVector<f64>> {
    let k = els.k;
    let nk = dim_p(k as i64);
    let n2k = dim_p(2 * k as i64);
    let vmap = velocity_dof_map(mesh, k, false);
    let mut quad_terms: Vec<Vec<f64>> = Vec::with_capacity(mesh.n_cells());
    let mut mean = 0.0;
    let mut area = 0.0;
    for c in 0..mesh.n_cells() {
        let el = &els.vel[c];
        let u_loc = vmap.gather(c, velocity);
        let coeffs = &el.pi0 * &u_loc;
        let ux: Vec<f64> = (0..nk).map(|s| coeffs[s]).collect();
        let uy: Vec<f64> = (0..nk).map(|s| coeffs[nk + s]).collect();
        let mut q = poly::poly_mul(&ux, &ux);
        for (qi, v) in poly::poly_mul(&uy, &uy).iter().enumerate() {
            q[qi] += v;
        }
        for v in q.iter_mut() {
            *v *= 0.5;
        }
        mean += poly::integrate(&els.cells[c].mom, &q);
        area += els.cells[c].area();
        quad_terms.push(q);
    }
    let lambda = mean / area;
    (0..mesh.n_cells())
        .map(|c| {
            let mut out = DVector::zeros(n2k);
            for (i, &v) in quad_terms[c].iter().enumerate() {
                out[i] = v;
            }
            for i in 0..bernoulli[c].len() {
                out[i] += bernoulli[c][i];
            }
            out[0] -= lambda;
            out
        })
        .collect()
}

/// Estimated 2-norm condition number of the first Newton operator (the
/// Stokes-level system) of a formulation.
pub fn first_operator_condition(
    mesh: &PolygonalMesh,
    els: &ElementSet,
    problem: &Problem,
    formulation: Formulation,
) -> Result<(f64, bool), SolveError> {
    let trips = first_operator(mesh, els, problem, formulation)?;
    Ok(condition_estimate(&trips.to_sparse()?, 5000))
}

fn first_operator(
    mesh: &PolygonalMesh,
    els: &ElementSet,
    problem: &Problem,
    formulation: Formulation,
) -> Result<Triplets, SolveError> {
    match formulation {
        Formulation::VelocityPressure | Formulation::Reduced => {
            let work = vp_workspace(mesh, els, problem, formulation == Formulation::Reduced);
            let x = DVector::zeros(work.n_unknowns);
            let (_, trips) = work.assemble(&x, None, true, false);
            Ok(trips.expect("jacobian requested"))
        }
        Formulation::Curl => {
            let stream_els = els.stream.as_ref().expect("stream elements");
            let map = stream_dof_map(mesh, els.k);
            let n = map.n_free;
            let mut tr = Triplets::new(n, n);
            for c in 0..mesh.n_cells() {
                let j_loc = stream_els[c].transfer.transpose()
                    * (&els.vel[c].stiffness * problem.nu)
                    * &stream_els[c].transfer;
                scatter_sym(&mut tr, &map, c, &j_loc);
            }
            Ok(tr)
        }
        Formulation::StreamC1 => {
            let c1 = els.c1.as_ref().expect("C1 elements");
            let map = stream_dof_map(mesh, els.k);
            let n = map.n_free;
            let mut tr = Triplets::new(n, n);
            for c in 0..mesh.n_cells() {
                let j_loc = &c1[c].stiffness * problem.nu;
                scatter_sym(&mut tr, &map, c, &j_loc);
            }
            Ok(tr)
        }
    }
}

fn scatter_sym(tr: &mut Triplets, map: &DofMap, c: usize, j_loc: &DMatrix<f64>) {
    for (i, ti) in map.l2g[c].iter().enumerate() {
        let Some(fi) = map.free_index[ti.global] else { continue };
        for (j, tj) in map.l2g[c].iter().enumerate() {
            if let Some(fj) = map.free_index[tj.global] {
                tr.push(fi, fj, ti.sign * tj.sign * j_loc[(i, j)]);
            }
        }
    }
}

/// Number of unknowns of each formulation on a mesh, using the conventions
/// of the DoF tables: velocity interior DoFs plus the zero-mean pressure
/// dimension for the saddle forms, free stream DoFs for the others.
pub fn dof_count(mesh: &PolygonalMesh, k: usize, formulation: Formulation) -> usize {
    match formulation {
        Formulation::VelocityPressure => {
            let m = velocity_dof_map(mesh, k, false);
            m.n_free + mesh.n_cells() * dim_p(k as i64 - 1) - 1
        }
        Formulation::Reduced => {
            let m = velocity_dof_map(mesh, k, true);
            m.n_free + mesh.n_cells() - 1
        }
        Formulation::Curl | Formulation::StreamC1 => stream_dof_map(mesh, k).n_free,
    }
}

/// Largest divergence pairing |b(u_h, q)| over all pressure basis functions.
pub fn divergence_residual(mesh: &PolygonalMesh, els: &ElementSet, velocity: &DVector<f64>) -> f64 {
    let k = els.k;
    let nkm1 = dim_p(k as i64 - 1);
    let vmap = velocity_dof_map(mesh, k, false);
    let mut rows = vec![0.0f64; mesh.n_cells() * nkm1];
    for c in 0..mesh.n_cells() {
        let u_loc = vmap.gather(c, velocity);
        let d = &els.vel[c].div_matrix * u_loc;
        for al in 0..nkm1 {
            rows[c * nkm1 + al] += d[al];
        }
    }
    rows.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}
