//! Quadrature: Gauss-Legendre and Gauss-Lobatto rules on segments, exact
//! rules on triangles through the Duffy transform, and polygon rules by
//! sub-triangulation (centroid fan, with an ear-clipping fallback for cells
//! that are not star-shaped from their centroid).

use crate::geometry::{self, Point2};

/// Points and weights of a 2D quadrature rule, plus the polynomial degree it
/// integrates exactly.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadRule {
    pub fn integrate(&self, mut f: impl FnMut(Point2) -> f64) -> f64 {
        self.points
            .iter()
            .zip(self.weights.iter())
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton iteration on P_n from a Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_deriv(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Lobatto nodes on [-1, 1] (n >= 2 points, endpoints included).
pub fn gauss_lobatto_nodes(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[n - 1] = 1.0;
    // interior nodes are the roots of P'_{n-1}
    let m = n - 1;
    for i in 1..m {
        let mut x = (std::f64::consts::PI * i as f64 / m as f64).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(m, x);
            // f = d = P'_m, f' = P''_m from the Legendre ODE:
            // (1-x^2) P'' - 2x P' + m(m+1) P = 0
            let dd = (2.0 * x * d - (m * (m + 1)) as f64 * p) / (1.0 - x * x);
            let dx = d / dd;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[n - 1 - i] = x;
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes
}

/// Interior Gauss-Lobatto points of the (m+2)-point rule, mapped to [0, 1].
/// These serve as the edge degree-of-freedom points.
pub fn lobatto_interior_01(m: usize) -> Vec<f64> {
    if m == 0 {
        return Vec::new();
    }
    gauss_lobatto_nodes(m + 2)[1..=m]
        .iter()
        .map(|x| 0.5 * (x + 1.0))
        .collect()
}

/// Gauss-Legendre rule on the segment [a, b], exact to the given degree.
pub fn edge_rule(a: Point2, b: Point2, exactness: usize) -> QuadRule {
    let n = exactness / 2 + 1;
    let (xs, ws) = gauss_legendre(n);
    let len = a.dist(b);
    let points = xs
        .iter()
        .map(|&x| {
            let t = 0.5 * (x + 1.0);
            a + (b - a) * t
        })
        .collect();
    let weights = ws.iter().map(|w| 0.5 * len * w).collect();
    QuadRule { points, weights, exactness }
}

/// Exact rule on the triangle (a, b, c) through the Duffy transform of a
/// tensor Gauss grid. Weights are positive.
pub fn triangle_rule(a: Point2, b: Point2, c: Point2, exactness: usize) -> QuadRule {
    let d = exactness;
    let ns = (d + 2).div_ceil(2);
    let nt = (d + 1).div_ceil(2).max(1);
    let (xs, ws) = gauss_legendre(ns);
    let (xt, wt) = gauss_legendre(nt);
    let jac = 2.0 * geometry::signed_area(&[a, b, c]);
    let mut points = Vec::with_capacity(ns * nt);
    let mut weights = Vec::with_capacity(ns * nt);
    for (&s, &ws_i) in xs.iter().zip(ws.iter()) {
        let u = 0.5 * (s + 1.0);
        for (&t, &wt_j) in xt.iter().zip(wt.iter()) {
            let v = 0.5 * (t + 1.0) * (1.0 - u);
            // reference coordinates (u, v) on the unit triangle
            let p = a + (b - a) * u + (c - a) * v;
            let w = 0.25 * ws_i * wt_j * (1.0 - u) * jac;
            points.push(p);
            weights.push(w);
        }
    }
    QuadRule { points, weights, exactness }
}

/// Fan triangulation from an interior point; `None` if some fan triangle is
/// inverted (the polygon is not star-shaped from that point).
fn fan_triangles(pts: &[Point2], apex: Point2) -> Option<Vec<[Point2; 3]>> {
    let n = pts.len();
    let mut tris = Vec::with_capacity(n);
    for i in 0..n {
        let t = [apex, pts[i], pts[(i + 1) % n]];
        if geometry::signed_area(&t) <= 0.0 {
            return None;
        }
        tris.push(t);
    }
    Some(tris)
}

/// Ear-clipping triangulation of a simple counterclockwise polygon.
pub fn ear_clip(pts: &[Point2]) -> Vec<[Point2; 3]> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let mut tris = Vec::with_capacity(pts.len().saturating_sub(2));
    let inside_tri = |a: Point2, b: Point2, c: Point2, p: Point2| {
        let d1 = (b - a).cross(p - a);
        let d2 = (c - b).cross(p - b);
        let d3 = (a - c).cross(p - c);
        d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0
    };
    let mut guard = 0;
    while idx.len() > 3 {
        let n = idx.len();
        let mut clipped = false;
        for i in 0..n {
            let ia = idx[(i + n - 1) % n];
            let ib = idx[i];
            let ic = idx[(i + 1) % n];
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            if (b - a).cross(c - b) <= 0.0 {
                continue; // reflex corner
            }
            let mut ear = true;
            for &j in &idx {
                if j == ia || j == ib || j == ic {
                    continue;
                }
                if inside_tri(a, b, c, pts[j]) {
                    ear = false;
                    break;
                }
            }
            if ear {
                tris.push([a, b, c]);
                idx.remove(i);
                clipped = true;
                break;
            }
        }
        guard += 1;
        if !clipped || guard > 10_000 {
            panic!("ear clipping failed: polygon is not simple");
        }
    }
    tris.push([pts[idx[0]], pts[idx[1]], pts[idx[2]]]);
    tris
}

/// Quadrature on a simple polygon, exact to the requested degree.
///
/// Uses a centroid fan when the cell is star-shaped from its centroid and
/// falls back to ear clipping otherwise.
pub fn polygon_rule(pts: &[Point2], exactness: usize) -> QuadRule {
    let c = geometry::centroid(pts);
    let tris = fan_triangles(pts, c).unwrap_or_else(|| ear_clip(pts));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for t in tris {
        let r = triangle_rule(t[0], t[1], t[2], exactness);
        points.extend(r.points);
        weights.extend(r.weights);
    }
    QuadRule { points, weights, exactness }
}
