//! Scaled monomial bases on polygons and the vector-polynomial calculus
//! (gradients, curls, products, and the splitting of vector polynomials into
//! a gradient part plus an `x_perp` part) used by all projector builds.
//!
//! A scalar polynomial of degree `n` is stored as a coefficient vector over
//! the scaled monomials
//!
//! ```text
//!   m_(a,b)(x, y) = xi^a * eta^b,   xi = (x - xc)/h,  eta = (y - yc)/h,
//! ```
//!
//! ordered degree by degree, within a degree by decreasing `a`:
//! (0,0); (1,0), (0,1); (2,0), (1,1), (0,2); ...
//! Vector polynomials stack two scalar coefficient blocks `[px; py]`, tensor
//! (2x2) polynomials stack four blocks in row-major component order.

use crate::geometry::Point2;
use nalgebra::{DMatrix, DVector};

/// dim P_n in 2D; zero for negative `n`.
pub fn dim_p(n: i64) -> usize {
    if n < 0 {
        0
    } else {
        ((n + 1) * (n + 2) / 2) as usize
    }
}

/// Multi-indices (a, b) with a + b <= n, in basis order.
pub fn multi_indices(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim_p(n as i64));
    for d in 0..=n {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

/// Position of the multi-index (a, b) in the basis order.
pub fn index_of(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

/// Degree of the monomial at a given basis position.
pub fn degree_of_index(i: usize) -> usize {
    let mut d = 0usize;
    while (d + 1) * (d + 2) / 2 <= i {
        d += 1;
    }
    d
}

/// Monomial basis centered at a cell centroid and scaled by its diameter.
#[derive(Debug, Clone, Copy)]
pub struct ScaledBasis {
    pub center: Point2,
    pub h: f64,
}

impl ScaledBasis {
    pub fn new(center: Point2, h: f64) -> Self {
        ScaledBasis { center, h }
    }

    fn local(&self, p: Point2) -> (f64, f64) {
        ((p.x - self.center.x) / self.h, (p.y - self.center.y) / self.h)
    }

    /// Values of all monomials of degree <= n at `p`.
    pub fn eval(&self, n: usize, p: Point2) -> DVector<f64> {
        let (xi, eta) = self.local(p);
        let mut v = DVector::zeros(dim_p(n as i64));
        v[0] = 1.0;
        for d in 1..=n {
            let row = d * (d + 1) / 2;
            let prev = (d - 1) * d / 2;
            // (d, 0) = xi * (d-1, 0), then (d-b, b) = eta * (d-b, b-1)
            v[row] = v[prev] * xi;
            for b in 1..=d {
                v[row + b] = v[prev + b - 1] * eta;
            }
        }
        v
    }

    /// Value, d/dx, and d/dy of all monomials of degree <= n at `p`.
    pub fn eval_with_grad(&self, n: usize, p: Point2) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let v = self.eval(n, p);
        let nn = dim_p(n as i64);
        let mut dx = DVector::zeros(nn);
        let mut dy = DVector::zeros(nn);
        for (i, (a, b)) in multi_indices(n).into_iter().enumerate() {
            if a > 0 {
                dx[i] = a as f64 / self.h * v[index_of(a - 1, b)];
            }
            if b > 0 {
                dy[i] = b as f64 / self.h * v[index_of(a, b - 1)];
            }
        }
        (v, dx, dy)
    }
}

/// d/dx in coefficient space: P_n -> P_{n-1}; `h` is the basis scale.
pub fn deriv_x(coeffs: &[f64], h: f64) -> Vec<f64> {
    if coeffs.is_empty() {
        return Vec::new();
    }
    let n = degree_of_len(coeffs.len());
    let mut out = vec![0.0; dim_p(n as i64 - 1)];
    for (i, (a, b)) in multi_indices(n).into_iter().enumerate() {
        if a > 0 {
            out[index_of(a - 1, b)] += a as f64 / h * coeffs[i];
        }
    }
    out
}

/// d/dy in coefficient space.
pub fn deriv_y(coeffs: &[f64], h: f64) -> Vec<f64> {
    if coeffs.is_empty() {
        return Vec::new();
    }
    let n = degree_of_len(coeffs.len());
    let mut out = vec![0.0; dim_p(n as i64 - 1)];
    for (i, (a, b)) in multi_indices(n).into_iter().enumerate() {
        if b > 0 {
            out[index_of(a, b - 1)] += b as f64 / h * coeffs[i];
        }
    }
    out
}

/// Degree such that dim_p(degree) == len. Panics on invalid lengths.
pub fn degree_of_len(len: usize) -> usize {
    let mut n = 0;
    while dim_p(n as i64) < len {
        n += 1;
    }
    assert_eq!(dim_p(n as i64), len, "coefficient vector has invalid length {len}");
    n
}

/// Product of two scalar polynomials in the same scaled basis.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let na = degree_of_len(a.len());
    let nb = degree_of_len(b.len());
    let mut out = vec![0.0; dim_p((na + nb) as i64)];
    let ia = multi_indices(na);
    let ib = multi_indices(nb);
    for (i, &(a1, b1)) in ia.iter().enumerate() {
        if a[i] == 0.0 {
            continue;
        }
        for (j, &(a2, b2)) in ib.iter().enumerate() {
            if b[j] != 0.0 {
                out[index_of(a1 + a2, b1 + b2)] += a[i] * b[j];
            }
        }
    }
    out
}

/// Multiply by xi (shift the first exponent).
pub fn mul_xi(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.is_empty() {
        return Vec::new();
    }
    let n = degree_of_len(coeffs.len());
    let mut out = vec![0.0; dim_p(n as i64 + 1)];
    for (i, (a, b)) in multi_indices(n).into_iter().enumerate() {
        out[index_of(a + 1, b)] += coeffs[i];
    }
    out
}

/// Multiply by eta (shift the second exponent).
pub fn mul_eta(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.is_empty() {
        return Vec::new();
    }
    let n = degree_of_len(coeffs.len());
    let mut out = vec![0.0; dim_p(n as i64 + 1)];
    for (i, (a, b)) in multi_indices(n).into_iter().enumerate() {
        out[index_of(a, b + 1)] += coeffs[i];
    }
    out
}

/// Coefficients of `x_perp_s * p` where `x_perp_s = (eta, -xi)` is the scaled
/// rotated position field. Input P_{n}, output vector polynomial of degree n+1.
pub fn xperp_times(p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let px = mul_eta(p);
    let py = mul_xi(p).iter().map(|c| -c).collect();
    (px, py)
}

/// curl of a scalar polynomial: curl(phi) = (d phi/dy, -d phi/dx).
pub fn curl_scalar(coeffs: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    (deriv_y(coeffs, h), deriv_x(coeffs, h).iter().map(|c| -c).collect())
}

/// Scalar curl of a vector polynomial: curl(v) = d v2/dx - d v1/dy.
pub fn curl_vector(vx: &[f64], vy: &[f64], h: f64) -> Vec<f64> {
    let a = deriv_x(vy, h);
    let b = deriv_y(vx, h);
    a.iter().zip(b.iter()).map(|(p, q)| p - q).collect()
}

/// Unique `p` in P_{n-1} with `curl(x_perp_s * p) = q`.
///
/// In the scaled basis `curl(x_perp_s * m_ab) = -(2 + a + b)/h * m_ab`, so the
/// map is diagonal and the inverse is exact.
pub fn curl_iso_solve(q: &[f64], h: f64) -> Vec<f64> {
    if q.is_empty() {
        return Vec::new();
    }
    let n = degree_of_len(q.len());
    multi_indices(n)
        .into_iter()
        .zip(q.iter())
        .map(|((a, b), &c)| -c * h / (2.0 + (a + b) as f64))
        .collect()
}

/// Split of a vector polynomial of degree `n` as
/// `v = grad(q) + x_perp_s * p`, with `q` in P_{n+1} (no constant term) and
/// `p` in P_{n-1}. Returns `(q, p)` coefficient vectors.
pub fn decompose_vector(vx: &[f64], vy: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = degree_of_len(vx.len());
    let nn = vx.len();
    let n_grad = dim_p(n as i64 + 1) - 1;
    let n_perp = dim_p(n as i64 - 1);
    assert_eq!(n_grad + n_perp, 2 * nn);

    // Columns: h*grad(m_beta) for non-constant beta, then x_perp_s * m_alpha.
    // The matrix has integer entries and only depends on the degree.
    let mut m = DMatrix::zeros(2 * nn, 2 * nn);
    let idx_hi = multi_indices(n + 1);
    for (col, &(a, b)) in idx_hi.iter().enumerate().skip(1) {
        if a > 0 {
            m[(index_of(a - 1, b), col - 1)] = a as f64;
        }
        if b > 0 {
            m[(nn + index_of(a, b - 1), col - 1)] = b as f64;
        }
    }
    for (j, (a, b)) in multi_indices(n.saturating_sub(1)).into_iter().enumerate().take(n_perp) {
        // x_perp_s * m_ab = (m_(a,b+1), -m_(a+1,b))
        m[(index_of(a, b + 1), n_grad + j)] = 1.0;
        m[(nn + index_of(a + 1, b), n_grad + j)] = -1.0;
    }

    let mut rhs = DVector::zeros(2 * nn);
    for i in 0..nn {
        rhs[i] = vx[i];
        rhs[nn + i] = vy[i];
    }
    let lu = m.lu();
    let sol = lu.solve(&rhs).expect("vector polynomial decomposition is nonsingular");

    let mut q = vec![0.0; dim_p(n as i64 + 1)];
    for i in 0..n_grad {
        q[i + 1] = sol[i] * h;
    }
    let p = (0..n_perp).map(|j| sol[n_grad + j]).collect();
    (q, p)
}

/// L2 Gram matrix between P_{n1} and P_{n2} from the cell moment table
/// `mom[idx] = integral of m_idx` (which must cover degree n1 + n2).
pub fn gram(mom: &[f64], n1: usize, n2: usize) -> DMatrix<f64> {
    let r = dim_p(n1 as i64);
    let c = dim_p(n2 as i64);
    let i1 = multi_indices(n1);
    let i2 = multi_indices(n2);
    let mut g = DMatrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            let (a1, b1) = i1[i];
            let (a2, b2) = i2[j];
            g[(i, j)] = mom[index_of(a1 + a2, b1 + b2)];
        }
    }
    g
}

/// Integral of a polynomial against the moment table.
pub fn integrate(mom: &[f64], coeffs: &[f64]) -> f64 {
    coeffs.iter().zip(mom.iter()).map(|(c, m)| c * m).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn index_order_round_trip() {
        for n in 0..7usize {
            assert_eq!(dim_p(n as i64), multi_indices(n).len());
            for (i, (a, b)) in multi_indices(n).into_iter().enumerate() {
                assert_eq!(index_of(a, b), i);
                assert_eq!(degree_of_index(i), a + b);
            }
        }
        assert_eq!(dim_p(-1), 0);
        assert_eq!(dim_p(3), 10);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let basis = ScaledBasis::new(Point2::new(0.3, -0.2), 0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let coeffs: Vec<f64> = (0..dim_p(4)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dx = deriv_x(&coeffs, basis.h);
        let p = Point2::new(0.41, 0.11);
        let eps = 1e-6;
        let f = |pt: Point2| {
            let v = basis.eval(4, pt);
            coeffs.iter().zip(v.iter()).map(|(c, m)| c * m).sum::<f64>()
        };
        let fd = (f(Point2::new(p.x + eps, p.y)) - f(Point2::new(p.x - eps, p.y))) / (2.0 * eps);
        let v3 = basis.eval(3, p);
        let exact: f64 = dx.iter().zip(v3.iter()).map(|(c, m)| c * m).sum();
        assert_relative_eq!(fd, exact, epsilon = 1e-7);
    }

    #[test]
    fn curl_iso_constant() {
        // curl(x_perp_s * p) for constant p = c is -2c/h; so q = 1 gives p = -h/2.
        let p = curl_iso_solve(&[1.0], 1.0);
        assert_relative_eq!(p[0], -0.5);
        let z = curl_iso_solve(&[0.0, 0.0, 0.0], 2.0);
        assert!(z.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn curl_iso_round_trip_degree_two() {
        let h = 0.37;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q: Vec<f64> = (0..dim_p(2)).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let p = curl_iso_solve(&q, h);
        let (vx, vy) = xperp_times(&p);
        let back = curl_vector(&vx, &vy, h);
        for (a, b) in back.iter().zip(q.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn decomposition_reproduces_random_fields() {
        // spec invariant: for degrees n <= 2k+2 a random [P_n]^2 field is
        // reproduced by the grad + x_perp split within 1e-11.
        let h = 0.55;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 0..=6usize {
            let nn = dim_p(n as i64);
            let vx: Vec<f64> = (0..nn).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let vy: Vec<f64> = (0..nn).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (q, p) = decompose_vector(&vx, &vy, h);
            let gx = deriv_x(&q, h);
            let gy = deriv_y(&q, h);
            let (px, py) = xperp_times(&p);
            for i in 0..nn {
                let rx = gx[i] + px.get(i).copied().unwrap_or(0.0);
                let ry = gy[i] + py.get(i).copied().unwrap_or(0.0);
                assert_relative_eq!(rx, vx[i], epsilon = 1e-11, max_relative = 1e-11);
                assert_relative_eq!(ry, vy[i], epsilon = 1e-11, max_relative = 1e-11);
            }
        }
    }
}
