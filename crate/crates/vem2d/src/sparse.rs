//! Thin layer over the sparse direct solver plus 2-norm condition
//! estimation (dense SVD for small systems, power/inverse-power iteration
//! through the factorization for large ones).

use faer::prelude::SpSolver;
use faer::sparse::SparseColMat;
use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("linear system is singular")]
    Singular,
}

/// Triplet accumulator for a sparse matrix.
pub struct Triplets {
    pub n_rows: usize,
    pub n_cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Triplets { n_rows, n_cols, entries: Vec::new() }
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            debug_assert!(r < self.n_rows && c < self.n_cols);
            self.entries.push((r, c, v));
        }
    }

    pub fn to_sparse(&self) -> Result<SparseColMat<usize, f64>, SolverError> {
        SparseColMat::try_new_from_triplets(self.n_rows, self.n_cols, &self.entries)
            .map_err(|e| SolverError::Factorization(format!("{e:?}")))
    }
}

/// A factorized sparse system.
pub struct Factorized {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl Factorized {
    pub fn new(a: &SparseColMat<usize, f64>) -> Result<Self, SolverError> {
        let n = a.nrows();
        let lu = a.sp_lu().map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        Ok(Factorized { lu, n })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut b = faer::Mat::zeros(self.n, 1);
        for i in 0..self.n {
            b[(i, 0)] = rhs[i];
        }
        let x = self.lu.solve(&b);
        DVector::from_fn(self.n, |i, _| x[(i, 0)])
    }
}

/// Matrix-vector product for a faer sparse matrix.
pub fn spmv(a: &SparseColMat<usize, f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(a.nrows());
    for j in 0..a.ncols() {
        let range = a.col_range(j);
        let rows = a.row_indices();
        let vals = a.values();
        let xj = x[j];
        if xj != 0.0 {
            for idx in range {
                y[rows[idx]] += vals[idx] * xj;
            }
        }
    }
    y
}

/// 2-norm condition estimate of a symmetric operator.
///
/// Below `dense_limit` unknowns a dense SVD gives the exact value; above, a
/// power iteration on A and an inverse power iteration through the LU
/// factorization estimate the extreme singular values to ~10%. The second
/// element of the returned pair reports whether the iteration converged.
pub fn condition_estimate(a: &SparseColMat<usize, f64>, dense_limit: usize) -> (f64, bool) {
    let n = a.nrows();
    if n == 0 {
        return (1.0, true);
    }
    if n <= dense_limit {
        let dense = a.to_dense();
        let svd = dense.svd();
        let s = svd.s_diagonal();
        let smax: f64 = s[0];
        let smin: f64 = s[s.nrows() - 1];
        return (smax / smin.max(f64::MIN_POSITIVE), true);
    }

    let seed_vec = |seed: u64| {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0f64..1.0));
        v /= v.norm();
        v
    };

    // sigma_max via power iteration on A^T A = A^2 (symmetric operator)
    let mut x = seed_vec(1);
    let mut smax = 0.0f64;
    let mut ok_max = false;
    for _ in 0..300 {
        let y = spmv(a, &x);
        let ny = y.norm();
        if ny == 0.0 {
            break;
        }
        x = y / ny;
        if (ny - smax).abs() <= 0.005 * ny {
            smax = ny;
            ok_max = true;
            break;
        }
        smax = ny;
    }

    let Ok(f) = Factorized::new(a) else {
        return (f64::INFINITY, false);
    };
    let mut x = seed_vec(2);
    let mut inv_norm = 0.0f64;
    let mut ok_min = false;
    for _ in 0..300 {
        let y = f.solve(&x);
        let ny = y.norm();
        if ny == 0.0 {
            break;
        }
        x = y / ny;
        if (ny - inv_norm).abs() <= 0.005 * ny {
            inv_norm = ny;
            ok_min = true;
            break;
        }
        inv_norm = ny;
    }
    (smax * inv_norm, ok_max && ok_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_has_condition_one() {
        let mut t = Triplets::new(4, 4);
        for i in 0..4 {
            t.push(i, i, 1.0);
        }
        let a = t.to_sparse().unwrap();
        let (c, ok) = condition_estimate(&a, 100);
        assert!(ok);
        assert_relative_eq!(c, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_condition_is_ratio() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(1, 1, 1e-4);
        let a = t.to_sparse().unwrap();
        let (c, _) = condition_estimate(&a, 100);
        assert_relative_eq!(c, 1e4, epsilon = 1e-6);
    }

    #[test]
    fn iterative_estimate_matches_dense() {
        // symmetric tridiagonal with known spectrum
        let n = 60;
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 2.0);
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                t.push(i + 1, i, -1.0);
            }
        }
        let a = t.to_sparse().unwrap();
        let (exact, _) = condition_estimate(&a, 100);
        let (approx_c, ok) = condition_estimate(&a, 10);
        assert!(ok);
        assert!((approx_c - exact).abs() / exact < 0.1, "{approx_c} vs {exact}");
    }

    #[test]
    fn solve_round_trip() {
        let mut t = Triplets::new(3, 3);
        t.push(0, 0, 4.0);
        t.push(1, 1, 2.0);
        t.push(2, 2, 1.0);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        t.push(2, 0, 0.5);
        let a = t.to_sparse().unwrap();
        let f = Factorized::new(&a).unwrap();
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = f.solve(&b);
        let r = spmv(&a, &x) - b;
        assert!(r.amax() < 1e-12);
    }
}
