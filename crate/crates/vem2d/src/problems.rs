//! Manufactured Navier-Stokes problems with exact velocity, pressure, and
//! stream function. Forcing terms are assembled from second-order jets, so
//! no derivative is ever written out by hand.

use crate::geometry::Point2;
use crate::jet::Jet2;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    UnitSquare,
    UnitDisk,
}

type Scalar = Arc<dyn Fn(Point2) -> Jet2 + Send + Sync>;

/// A manufactured problem: exact fields as jets plus the viscosity and the
/// convective/Stokes switch that fix the forcing term.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub domain: Domain,
    pub nu: f64,
    /// If set, the forcing balances the Stokes equations (no convection).
    pub stokes: bool,
    ux: Scalar,
    uy: Scalar,
    pressure: Scalar,
    psi: Scalar,
}

impl Problem {
    /// Test problem on the unit square: trigonometric divergence-free
    /// velocity with stream function sin^2(pi 2x) sin^2(2 pi y) / (8 pi).
    pub fn test1(nu: f64) -> Problem {
        let ux = |p: Point2| {
            let x = Jet2::var_x(p.x);
            let y = Jet2::var_y(p.y);
            (x * (2.0 * PI)).sin().powi(2) * (y * (2.0 * PI)).sin() * (y * (2.0 * PI)).cos() * 0.5
        };
        let uy = |p: Point2| {
            let x = Jet2::var_x(p.x);
            let y = Jet2::var_y(p.y);
            -((y * (2.0 * PI)).sin().powi(2) * (x * (2.0 * PI)).sin() * (x * (2.0 * PI)).cos() * 0.5)
        };
        let pressure = |p: Point2| {
            let x = Jet2::var_x(p.x);
            let y = Jet2::var_y(p.y);
            (x * (2.0 * PI)).sin() * (y * (2.0 * PI)).cos() * (PI * PI)
        };
        let psi = |p: Point2| {
            let x = Jet2::var_x(p.x);
            let y = Jet2::var_y(p.y);
            (x * (2.0 * PI)).sin().powi(2) * (y * (2.0 * PI)).sin().powi(2) * (1.0 / (8.0 * PI))
        };
        Problem {
            name: "test1".into(),
            domain: Domain::UnitSquare,
            nu,
            stokes: false,
            ux: Arc::new(ux),
            uy: Arc::new(uy),
            pressure: Arc::new(pressure),
            psi: Arc::new(psi),
        }
    }

    /// Test problem on the unit disk with polynomial solution:
    /// u = (x^2 + y^2, -2xy), p = x^3 y^3 - 1/16, psi = x^2 y + y^3/3.
    pub fn test2(nu: f64) -> Problem {
        let ux = |p: Point2| {
            let x = Jet2::var_x(p.x);
            let y = Jet2::var_y(p.y);
            x.powi(2) + y.powi(2)
        };
        let uy = |p: Point2| {
            let x = Jet2::var_x(p.x);
            let y = Jet2::var_y(p.y);
            -(x * y * 2.0)
        };
        let pressure = |p: Point2| {
            let x = Jet2::var_x(p.x);
            let y = Jet2::var_y(p.y);
            x.powi(3) * y.powi(3) - Jet2::constant(1.0 / 16.0)
        };
        let psi = |p: Point2| {
            let x = Jet2::var_x(p.x);
            let y = Jet2::var_y(p.y);
            x.powi(2) * y + y.powi(3) * (1.0 / 3.0)
        };
        Problem {
            name: "test2".into(),
            domain: Domain::UnitDisk,
            nu,
            stokes: false,
            ux: Arc::new(ux),
            uy: Arc::new(uy),
            pressure: Arc::new(pressure),
            psi: Arc::new(psi),
        }
    }

    /// Zero forcing, zero solution.
    pub fn zero(nu: f64) -> Problem {
        let z = |_: Point2| Jet2::constant(0.0);
        Problem {
            name: "zero".into(),
            domain: Domain::UnitSquare,
            nu,
            stokes: false,
            ux: Arc::new(z),
            uy: Arc::new(z),
            pressure: Arc::new(z),
            psi: Arc::new(z),
        }
    }

    /// Stokes patch problem: psi in P_3 and p in P_1 given by coefficients in
    /// the plain monomial bases (1, x, y, x^2, xy, y^2, ...), u = curl psi.
    pub fn stokes_patch(psi_coeffs: [f64; 10], p_coeffs: [f64; 3], nu: f64) -> Problem {
        let jet_poly = |coeffs: Vec<(f64, usize, usize)>| {
            move |p: Point2| {
                let x = Jet2::var_x(p.x);
                let y = Jet2::var_y(p.y);
                let mut acc = Jet2::constant(0.0);
                for &(c, a, b) in &coeffs {
                    if c != 0.0 {
                        acc = acc + x.powi(a as i32) * y.powi(b as i32) * c;
                    }
                }
                acc
            }
        };
        let exps = crate::poly::multi_indices(3);
        let psi_terms: Vec<(f64, usize, usize)> = psi_coeffs
            .iter()
            .zip(exps.iter())
            .map(|(&c, &(a, b))| (c, a, b))
            .collect();
        // u = curl psi = (d psi/dy, -d psi/dx), by coefficient shifts
        let mut ux_terms = Vec::new();
        let mut uy_terms = Vec::new();
        for &(c, a, b) in &psi_terms {
            if b > 0 {
                ux_terms.push((c * b as f64, a, b - 1));
            }
            if a > 0 {
                uy_terms.push((-c * a as f64, a - 1, b));
            }
        }
        let p_terms = vec![(p_coeffs[0], 0, 0), (p_coeffs[1], 1, 0), (p_coeffs[2], 0, 1)];
        Problem {
            name: "stokes-patch".into(),
            domain: Domain::UnitSquare,
            nu,
            stokes: true,
            ux: Arc::new(jet_poly(ux_terms)),
            uy: Arc::new(jet_poly(uy_terms)),
            pressure: Arc::new(jet_poly(p_terms)),
            psi: Arc::new(jet_poly(psi_terms)),
        }
    }

    pub fn by_name(name: &str, nu: f64) -> Option<Problem> {
        match name {
            "test1" => Some(Problem::test1(nu)),
            "test2" => Some(Problem::test2(nu)),
            "zero" => Some(Problem::zero(nu)),
            _ => None,
        }
    }

    pub fn velocity(&self, p: Point2) -> (f64, f64) {
        ((self.ux)(p).v, (self.uy)(p).v)
    }

    /// Gradient components [d u_x/dx, d u_x/dy, d u_y/dx, d u_y/dy].
    pub fn grad_u(&self, p: Point2) -> [f64; 4] {
        let jx = (self.ux)(p);
        let jy = (self.uy)(p);
        [jx.dx, jx.dy, jy.dx, jy.dy]
    }

    pub fn div_u(&self, p: Point2) -> f64 {
        (self.ux)(p).dx + (self.uy)(p).dy
    }

    pub fn pressure(&self, p: Point2) -> f64 {
        (self.pressure)(p).v
    }

    pub fn psi(&self, p: Point2) -> f64 {
        (self.psi)(p).v
    }

    pub fn grad_psi(&self, p: Point2) -> (f64, f64) {
        let j = (self.psi)(p);
        (j.dx, j.dy)
    }

    /// Forcing: f = -nu lap(u) + (grad u) u - grad p, dropping the convective
    /// term for Stokes problems.
    pub fn forcing(&self, p: Point2) -> (f64, f64) {
        let jx = (self.ux)(p);
        let jy = (self.uy)(p);
        let jp = (self.pressure)(p);
        let mut fx = -self.nu * jx.lap() - jp.dx;
        let mut fy = -self.nu * jy.lap() - jp.dy;
        if !self.stokes {
            fx += jx.dx * jx.v + jx.dy * jy.v;
            fy += jy.dx * jx.v + jy.dy * jy.v;
        }
        (fx, fy)
    }
}
