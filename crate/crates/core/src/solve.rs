//! SPD solves against mass matrices and weighted graph Laplacians.
//!
//! Small systems are factored densely (Cholesky); larger ones fall back to
//! Jacobi-preconditioned conjugate gradients. All solvers are immutable once
//! built, so one instance can be shared across threads.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Relative residual target for iterative solves.
    pub rel_tol: f64,
    /// Systems up to this size are factored densely.
    pub dense_limit: usize,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-12, dense_limit: 1600, max_iter: 20_000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CgStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Preconditioned conjugate gradients for a symmetric positive (semi)definite
/// operator. `deflate`, when given, projects vectors onto the complement of a
/// known kernel; the right-hand side must already be consistent.
pub fn conjugate_gradient<A, P>(
    apply: A,
    precondition: P,
    b: &DVector<f64>,
    rel_tol: f64,
    max_iter: usize,
    deflate: Option<&dyn Fn(&mut DVector<f64>)>,
) -> Result<(DVector<f64>, CgStats)>
where
    A: Fn(&DVector<f64>) -> DVector<f64>,
    P: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = b.len();
    let b_norm = b.norm();
    let mut x = DVector::zeros(n);
    if b_norm == 0.0 {
        return Ok((x, CgStats { iterations: 0, rel_residual: 0.0 }));
    }
    let mut r = b.clone();
    if let Some(d) = deflate {
        d(&mut r);
    }
    let mut z = precondition(&r);
    if let Some(d) = deflate {
        d(&mut z);
    }
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut rel = r.norm() / b_norm;
    for it in 0..max_iter {
        if rel <= rel_tol {
            return Ok((x, CgStats { iterations: it, rel_residual: rel }));
        }
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, 1.0);
        // recompute the true residual periodically to curb drift
        if (it + 1) % 50 == 0 {
            r = b - apply(&x);
        } else {
            r.axpy(-alpha, &ap, 1.0);
        }
        if let Some(d) = deflate {
            d(&mut r);
        }
        rel = r.norm() / b_norm;
        z = precondition(&r);
        if let Some(d) = deflate {
            d(&mut z);
        }
        let rz_next = r.dot(&z);
        let beta = rz_next / rz;
        rz = rz_next;
        p.axpy(1.0, &z, beta);
    }
    if rel <= rel_tol {
        Ok((x, CgStats { iterations: max_iter, rel_residual: rel }))
    } else {
        Err(Error::SolverDiverged { iterations: max_iter, residual: rel })
    }
}

/// Solver for an SPD matrix.
#[derive(Clone, Debug)]
pub enum SpdSolver {
    Identity(usize),
    Dense(Cholesky<f64, Dyn>),
    Iterative {
        matrix: CsrMatrix<f64>,
        inv_diag: DVector<f64>,
        options: SolverOptions,
    },
}

impl SpdSolver {
    pub fn new(matrix: &CsrMatrix<f64>, options: SolverOptions) -> Result<Self> {
        let n = matrix.nrows();
        if n <= options.dense_limit {
            let chol = Cholesky::new(matrix.to_dense()).ok_or(Error::NotPositiveDefinite)?;
            Ok(SpdSolver::Dense(chol))
        } else {
            let diag = matrix.diagonal();
            if diag.iter().any(|&d| d <= 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            Ok(SpdSolver::Iterative {
                matrix: matrix.clone(),
                inv_diag: diag.map(|d| 1.0 / d),
                options,
            })
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SpdSolver::Identity(n) => *n,
            SpdSolver::Dense(c) => c.l_dirty().nrows(),
            SpdSolver::Iterative { matrix, .. } => matrix.nrows(),
        }
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            SpdSolver::Identity(_) => Ok(b.clone()),
            SpdSolver::Dense(chol) => Ok(chol.solve(b)),
            SpdSolver::Iterative { matrix, inv_diag, options } => {
                let (x, _) = conjugate_gradient(
                    |v| matrix.mul_vec(v),
                    |r| r.component_mul(inv_diag),
                    b,
                    options.rel_tol,
                    options.max_iter,
                    None,
                )?;
                Ok(x)
            }
        }
    }
}

/// Solver for a singular weighted Laplacian `L = δᵀ M δ` on 0-cochains whose
/// kernel is spanned by the indicator vectors of connected components.
///
/// Solutions are returned in the mean-zero subspace of each component.
#[derive(Clone, Debug)]
pub struct LaplaceSolver {
    components: Vec<Vec<usize>>,
    inner: LaplaceInner,
}

#[derive(Clone, Debug)]
enum LaplaceInner {
    Dense(Cholesky<f64, Dyn>),
    Iterative {
        matrix: CsrMatrix<f64>,
        inv_diag: DVector<f64>,
        options: SolverOptions,
    },
}

impl LaplaceSolver {
    pub fn new(laplacian: &CsrMatrix<f64>, components: Vec<Vec<usize>>, options: SolverOptions) -> Result<Self> {
        let n = laplacian.nrows();
        let inner = if n <= options.dense_limit {
            let mut dense = laplacian.to_dense();
            let scale = (0..n).map(|i| dense[(i, i)]).sum::<f64>() / n.max(1) as f64;
            let scale = if scale > 0.0 { scale } else { 1.0 };
            // rank-one shifts along each kernel direction make the matrix SPD
            for comp in &components {
                let w = scale / comp.len() as f64;
                for &i in comp {
                    for &j in comp {
                        dense[(i, j)] += w;
                    }
                }
            }
            LaplaceInner::Dense(Cholesky::new(dense).ok_or(Error::NotPositiveDefinite)?)
        } else {
            let diag = laplacian.diagonal();
            let inv_diag = diag.map(|d| if d > 0.0 { 1.0 / d } else { 1.0 });
            LaplaceInner::Iterative { matrix: laplacian.clone(), inv_diag, options }
        };
        Ok(Self { components, inner })
    }

    fn remove_means(&self, v: &mut DVector<f64>) {
        for comp in &self.components {
            let mean = comp.iter().map(|&i| v[i]).sum::<f64>() / comp.len() as f64;
            for &i in comp {
                v[i] -= mean;
            }
        }
    }

    /// Solves `L f = b` for `b` orthogonal to the kernel (the component means
    /// of `b` are removed first).
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let mut rhs = b.clone();
        self.remove_means(&mut rhs);
        let mut x = match &self.inner {
            LaplaceInner::Dense(chol) => chol.solve(&rhs),
            LaplaceInner::Iterative { matrix, inv_diag, options } => {
                let deflate = |v: &mut DVector<f64>| self.remove_means(v);
                conjugate_gradient(
                    |v| matrix.mul_vec(v),
                    |r| r.component_mul(inv_diag),
                    &rhs,
                    options.rel_tol,
                    options.max_iter,
                    Some(&deflate),
                )?
                .0
            }
        };
        self.remove_means(&mut x);
        Ok(x)
    }
}

/// Dense symmetric solve used by small auxiliary problems.
pub fn dense_cholesky(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or(Error::NotPositiveDefinite)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.push((i, i, 1.0));
            t.push((i + 1, i + 1, 1.0));
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn cg_matches_dense_on_shifted_laplacian() {
        let l = path_laplacian(40);
        let shifted = CsrMatrix::from_triplets(
            40,
            40,
            &l.triplets().chain((0..40).map(|i| (i, i, 0.5))).collect::<Vec<_>>(),
        );
        let b = DVector::from_fn(40, |i, _| (i as f64).sin());
        let dense = SpdSolver::new(&shifted, SolverOptions::default()).unwrap();
        let iter = SpdSolver::new(&shifted, SolverOptions { dense_limit: 0, ..Default::default() }).unwrap();
        let (x1, x2) = (dense.solve(&b).unwrap(), iter.solve(&b).unwrap());
        assert!((x1 - x2).norm() < 1e-9);
    }

    #[test]
    fn singular_laplacian_both_routes() {
        let l = path_laplacian(30);
        let comps = vec![(0..30).collect::<Vec<_>>()];
        let mut b = DVector::from_fn(30, |i, _| (i as f64 * 0.3).cos());
        let mean = b.mean();
        b.add_scalar_mut(-mean);
        for limit in [1000, 0] {
            let s = LaplaceSolver::new(&l, comps.clone(), SolverOptions { dense_limit: limit, ..Default::default() }).unwrap();
            let x = s.solve(&b).unwrap();
            assert!((l.mul_vec(&x) - &b).norm() < 1e-10 * b.norm());
            assert!(x.sum().abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(SpdSolver::new(&m, SolverOptions::default()), Err(Error::NotPositiveDefinite)));
    }
}
