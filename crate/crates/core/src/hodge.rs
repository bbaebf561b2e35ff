//! Metric-dependent operators: adjoint coboundaries, the projection onto
//! co-closed 1-cochains, Hodge decomposition and harmonic cochains.

use std::sync::{Arc, OnceLock};

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::cochain::{Cochain, CupTable};
use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::solve::{conjugate_gradient, LaplaceSolver, SolverOptions, SpdSolver};
use crate::sparse::CsrMatrix;
use crate::whitney::whitney_mass_matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricKind {
    /// Elementary cochains are orthonormal.
    Toy,
    /// `L²` product of Whitney forms.
    Whitney,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Toy => "toy",
            MetricKind::Whitney => "whitney",
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy" => Ok(MetricKind::Toy),
            "whitney" => Ok(MetricKind::Whitney),
            other => Err(Error::InvalidArgument(format!("unknown metric '{other}'"))),
        }
    }
}

/// A complex together with an inner product on every `C^k`.
///
/// Factorizations are built lazily on first use and then shared; all solve
/// methods take `&self`, so a model can be used from several threads.
#[derive(Debug)]
pub struct InnerProductModel {
    kind: MetricKind,
    complex: Arc<SimplicialComplex>,
    options: SolverOptions,
    coboundaries: Vec<CsrMatrix<f64>>,
    mass: Vec<CsrMatrix<f64>>,
    solvers: Vec<OnceLock<SpdSolver>>,
    laplace: OnceLock<LaplaceSolver>,
    cup: OnceLock<CupTable>,
}

/// `c = exact + coexact + harmonic`, with `exact = δ₀ potential`.
#[derive(Clone, Debug)]
pub struct HodgeDecomposition {
    pub exact: Cochain,
    pub coexact: Cochain,
    pub harmonic: Cochain,
    pub potential: Cochain,
}

/// Orthonormal basis of `ker δ ∩ ker δ*` in degree 1.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    pub vectors: Vec<Cochain>,
    /// Generalized eigenvalues of the Hodge Laplacian, ascending.
    pub eigenvalues: Vec<f64>,
    pub threshold: f64,
    /// First rejected eigenvalue over the last accepted one.
    pub gap: f64,
}

fn init<T>(cell: &OnceLock<T>, make: impl FnOnce() -> Result<T>) -> Result<&T> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    let v = make()?;
    let _ = cell.set(v);
    Ok(cell.get().expect("just set"))
}

impl InnerProductModel {
    pub fn new(complex: Arc<SimplicialComplex>, kind: MetricKind, options: SolverOptions) -> Result<Self> {
        let n = complex.dim();
        let coboundaries = (0..n)
            .map(|k| Ok(complex.coboundary(k)?.map(|v| v as f64)))
            .collect::<Result<Vec<_>>>()?;
        let mass = match kind {
            MetricKind::Toy => (0..=n).map(|k| CsrMatrix::identity(complex.count(k))).collect(),
            MetricKind::Whitney => (0..=n).map(|k| whitney_mass_matrix(&complex, k)).collect::<Result<Vec<_>>>()?,
        };
        Ok(Self {
            kind,
            complex,
            options,
            coboundaries,
            mass,
            solvers: (0..=n).map(|_| OnceLock::new()).collect(),
            laplace: OnceLock::new(),
            cup: OnceLock::new(),
        })
    }

    pub fn toy(complex: Arc<SimplicialComplex>) -> Result<Self> {
        Self::new(complex, MetricKind::Toy, SolverOptions::default())
    }

    pub fn whitney(complex: Arc<SimplicialComplex>) -> Result<Self> {
        Self::new(complex, MetricKind::Whitney, SolverOptions::default())
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn complex(&self) -> &Arc<SimplicialComplex> {
        &self.complex
    }

    pub fn options(&self) -> SolverOptions {
        self.options
    }

    pub fn mass(&self, k: usize) -> &CsrMatrix<f64> {
        &self.mass[k]
    }

    /// `δ_k` as a floating matrix.
    pub fn coboundary(&self, k: usize) -> &CsrMatrix<f64> {
        &self.coboundaries[k]
    }

    pub fn cup_table(&self) -> &CupTable {
        self.cup.get_or_init(|| CupTable::build(&self.complex))
    }

    pub fn mass_solver(&self, k: usize) -> Result<&SpdSolver> {
        init(&self.solvers[k], || match self.kind {
            MetricKind::Toy => Ok(SpdSolver::Identity(self.complex.count(k))),
            MetricKind::Whitney => SpdSolver::new(&self.mass[k], self.options),
        })
    }

    /// Solver for `L = δ₀ᵀ M₁ δ₀` on 0-cochains.
    pub fn laplace_solver(&self) -> Result<&LaplaceSolver> {
        init(&self.laplace, || {
            let d0 = &self.coboundaries[0];
            let l = d0.transpose().matmul(&self.mass[1].matmul(d0));
            LaplaceSolver::new(&l, self.complex.connected_components(), self.options)
        })
    }

    pub fn inner(&self, k: usize, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match self.kind {
            MetricKind::Toy => a.dot(b),
            MetricKind::Whitney => self.mass[k].bilinear(a, b),
        }
    }

    pub fn norm(&self, k: usize, a: &DVector<f64>) -> f64 {
        self.inner(k, a, a).max(0.0).sqrt()
    }

    fn own(&self, c: &Cochain) -> Result<()> {
        if !Arc::ptr_eq(c.complex(), &self.complex) {
            return Err(Error::ComplexMismatch);
        }
        Ok(())
    }

    pub fn inner_cochains(&self, a: &Cochain, b: &Cochain) -> Result<f64> {
        self.own(a)?;
        a.check_compatible(b)?;
        Ok(self.inner(a.degree(), a.values(), b.values()))
    }

    pub fn norm_cochain(&self, a: &Cochain) -> Result<f64> {
        self.own(a)?;
        Ok(self.norm(a.degree(), a.values()))
    }

    /// `M_k⁻¹ δ_kᵀ M_{k+1} b` for `b ∈ C^{k+1}`; plain `δ_kᵀ b` for the toy model.
    pub fn adjoint_coboundary_values(&self, k: usize, b: &DVector<f64>) -> Result<DVector<f64>> {
        if k >= self.complex.dim() {
            return Err(Error::DegreeOutOfRange { degree: k, dim: self.complex.dim() });
        }
        match self.kind {
            MetricKind::Toy => Ok(self.coboundaries[k].tr_mul_vec(b)),
            MetricKind::Whitney => {
                let rhs = self.coboundaries[k].tr_mul_vec(&self.mass[k + 1].mul_vec(b));
                self.mass_solver(k)?.solve(&rhs)
            }
        }
    }

    /// `δ*` applied to a `(k+1)`-cochain.
    pub fn adjoint_coboundary(&self, b: &Cochain) -> Result<Cochain> {
        self.own(b)?;
        if b.degree() == 0 {
            return Err(Error::DegreeOutOfRange { degree: 0, dim: self.complex.dim() });
        }
        let v = self.adjoint_coboundary_values(b.degree() - 1, b.values())?;
        Cochain::new(self.complex.clone(), b.degree() - 1, v)
    }

    /// Potential `f` with `π(c) = c − δ₀ f`.
    fn potential(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        let rhs = self.coboundaries[0].tr_mul_vec(&self.mass[1].mul_vec(c));
        self.laplace_solver()?.solve(&rhs)
    }

    pub fn project_coclosed_values(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        let f = self.potential(c)?;
        Ok(c - self.coboundaries[0].mul_vec(&f))
    }

    /// `π(c)`: the orthogonal projection onto `ker δ*` in degree 1.
    pub fn project_coclosed(&self, c: &Cochain) -> Result<Cochain> {
        self.own(c)?;
        if c.degree() != 1 {
            return Err(Error::DegreeMismatch { expected: 1, found: c.degree() });
        }
        Ok(c.with_values(self.project_coclosed_values(c.values())?))
    }

    /// `‖δ*c‖` in the model norm of `C⁰`.
    pub fn coclosed_residual(&self, c: &DVector<f64>) -> Result<f64> {
        let d = self.adjoint_coboundary_values(0, c)?;
        Ok(self.norm(0, &d))
    }

    /// Coexact part `δ₁*g` of a 1-cochain: solves `δ₁ M₁⁻¹ δ₁ᵀ h = δ₁ c` by
    /// conjugate gradients (the system is singular but consistent) and
    /// returns `M₁⁻¹ δ₁ᵀ h`.
    fn coexact_part(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        if self.complex.dim() < 2 {
            return Ok(DVector::zeros(c.len()));
        }
        let d1 = &self.coboundaries[1];
        let m1 = self.mass_solver(1)?;
        let rhs = d1.mul_vec(c);
        // accuracy is wanted relative to c, not to a possibly tiny δ₁c
        let scale = operator_norm_bound(d1) * c.norm();
        let rel_tol = self.options.rel_tol * (scale / rhs.norm()).max(1.0);
        let failure = std::cell::RefCell::new(None);
        let apply = |h: &DVector<f64>| -> DVector<f64> {
            match m1.solve(&d1.tr_mul_vec(h)) {
                Ok(v) => d1.mul_vec(&v),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    DVector::zeros(h.len())
                }
            }
        };
        let (h, _) = conjugate_gradient(
            apply,
            |r| r.clone(),
            &rhs,
            rel_tol,
            self.options.max_iter,
            None,
        )?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        m1.solve(&d1.tr_mul_vec(&h))
    }

    pub fn hodge_decompose(&self, c: &Cochain) -> Result<HodgeDecomposition> {
        self.own(c)?;
        if c.degree() != 1 {
            return Err(Error::DegreeMismatch { expected: 1, found: c.degree() });
        }
        let f = self.potential(c.values())?;
        let exact = self.coboundaries[0].mul_vec(&f);
        let coclosed = c.values() - &exact;
        let coexact = self.coexact_part(&coclosed)?;
        let harmonic = &coclosed - &coexact;
        Ok(HodgeDecomposition {
            exact: c.with_values(exact),
            coexact: c.with_values(coexact),
            harmonic: c.with_values(harmonic),
            potential: Cochain::new(self.complex.clone(), 0, f)?,
        })
    }

    /// Harmonic 1-cochains from the near-kernel of the Hodge Laplacian,
    /// posed as `A x = λ M₁ x` with
    /// `A = M₁ δ₀ M₀⁻¹ δ₀ᵀ M₁ + δ₁ᵀ M₂ δ₁`. Eigenvalues below
    /// `1e-9 · λ_max` count as zero. Dense, so meant for moderate meshes.
    pub fn harmonic_basis(&self) -> Result<HarmonicBasis> {
        let n = self.complex.dim();
        if n < 1 {
            return Err(Error::DegreeOutOfRange { degree: 1, dim: n });
        }
        let ne = self.complex.count(1);
        let m1 = self.mass[1].to_dense();
        let d0 = self.coboundaries[0].to_dense();
        let m0_chol = Cholesky::new(self.mass[0].to_dense()).ok_or(Error::NotPositiveDefinite)?;
        let b = &m1 * &d0;
        let mut a = &b * m0_chol.solve(&b.transpose());
        if n >= 2 {
            let d1 = self.coboundaries[1].to_dense();
            a += d1.transpose() * self.mass[2].to_dense() * &d1;
        }
        let chol = Cholesky::new(m1).ok_or(Error::NotPositiveDefinite)?;
        let l = chol.l();
        let left = l.solve_lower_triangular(&a).ok_or(Error::NotPositiveDefinite)?;
        let mut c = l.solve_lower_triangular(&left.transpose()).ok_or(Error::NotPositiveDefinite)?;
        c = (&c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(c);
        let mut order: Vec<usize> = (0..ne).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let lmax = eigenvalues.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        let threshold = 1e-9 * lmax;
        let accepted = eigenvalues.iter().take_while(|&&v| v <= threshold).count();
        let gap = if accepted == ne {
            f64::INFINITY
        } else if accepted == 0 {
            eigenvalues[0] / threshold
        } else {
            eigenvalues[accepted] / eigenvalues[accepted - 1].abs().max(f64::EPSILON * lmax)
        };
        if eigenvalues.iter().any(|&v| v > threshold / 10.0 && v < threshold * 10.0) {
            return Err(Error::SpectrumNotSeparated { gap });
        }
        let lt = l.transpose();
        let mut vectors: Vec<DVector<f64>> = Vec::with_capacity(accepted);
        for &i in order.iter().take(accepted) {
            let y = eig.eigenvectors.column(i).into_owned();
            let x = lt.solve_upper_triangular(&y).ok_or(Error::NotPositiveDefinite)?;
            // clean up with the decomposition, then orthonormalize
            let c = Cochain::new(self.complex.clone(), 1, x)?;
            let mut h = self.hodge_decompose(&c)?.harmonic.into_values();
            for prev in &vectors {
                let p = self.inner(1, prev, &h);
                h.axpy(-p, prev, 1.0);
            }
            let nrm = self.norm(1, &h);
            if nrm == 0.0 {
                return Err(Error::SpectrumNotSeparated { gap });
            }
            vectors.push(h / nrm);
        }
        let vectors = vectors
            .into_iter()
            .map(|v| Cochain::new(self.complex.clone(), 1, v))
            .collect::<Result<Vec<_>>>()?;
        Ok(HarmonicBasis { vectors, eigenvalues, threshold, gap })
    }
}

/// `sqrt(max row sum · max column sum)` of `|A|`, an upper bound for `‖A‖₂`.
fn operator_norm_bound(a: &CsrMatrix<f64>) -> f64 {
    let mut cols = vec![0.0; a.ncols()];
    let mut row_max: f64 = 0.0;
    for r in 0..a.nrows() {
        let (idx, vals) = a.row(r);
        row_max = row_max.max(vals.iter().map(|v| v.abs()).sum());
        for (&c, v) in idx.iter().zip(vals) {
            cols[c] += v.abs();
        }
    }
    (row_max * cols.iter().fold(0.0f64, |m, &v| m.max(v))).sqrt()
}

/// Dense copy of a symmetric positive definite matrix's inverse, for tests.
pub fn dense_inverse(m: &CsrMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(m.to_dense()).ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.inverse())
}

impl HodgeDecomposition {
    /// Relative reconstruction error and the largest normalized pairwise
    /// inner product of the three parts.
    pub fn residuals(&self, model: &InnerProductModel, c: &Cochain) -> Result<(f64, f64)> {
        let sum = self.exact.values() + self.coexact.values() + self.harmonic.values();
        let scale = model.norm(1, c.values()).max(f64::MIN_POSITIVE);
        let recon = model.norm(1, &(sum - c.values())) / scale;
        let parts = [&self.exact, &self.coexact, &self.harmonic];
        let mut ortho: f64 = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                let p = model.inner(1, parts[i].values(), parts[j].values());
                ortho = ortho.max(p.abs() / (scale * scale));
            }
        }
        Ok((recon, ortho))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_flat_torus, build_icosahedron};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn toy_adjoint_is_transpose() {
        let k = Arc::new(build_flat_torus(3, 2).unwrap());
        let m = InnerProductModel::toy(k.clone()).unwrap();
        let b = random(k.count(2), 1);
        let d = m.adjoint_coboundary_values(1, &b).unwrap();
        assert_eq!(d, m.coboundary(1).tr_mul_vec(&b));
    }

    #[test]
    fn projection_properties_both_metrics() {
        let k = Arc::new(build_flat_torus(4, 2).unwrap());
        for kind in [MetricKind::Toy, MetricKind::Whitney] {
            let m = InnerProductModel::new(k.clone(), kind, SolverOptions::default()).unwrap();
            let c = random(k.count(1), 7);
            let p = m.project_coclosed_values(&c).unwrap();
            assert!(m.coclosed_residual(&p).unwrap() <= 1e-10 * m.norm(1, &c));
            let pp = m.project_coclosed_values(&p).unwrap();
            assert!(m.norm(1, &(&pp - &p)) <= 1e-12 * m.norm(1, &c));
            let f = random(k.count(0), 8);
            let df = m.coboundary(0).mul_vec(&f);
            assert!(m.inner(1, &p, &df).abs() <= 1e-10 * m.norm(1, &c) * m.norm(1, &df));
            assert!(m.norm(1, &m.project_coclosed_values(&df).unwrap()) <= 1e-10 * m.norm(1, &df));
        }
    }

    #[test]
    fn torus_has_two_harmonic_cochains_sphere_none() {
        let k = Arc::new(build_flat_torus(4, 2).unwrap());
        for kind in [MetricKind::Toy, MetricKind::Whitney] {
            let m = InnerProductModel::new(k.clone(), kind, SolverOptions::default()).unwrap();
            let h = m.harmonic_basis().unwrap();
            assert_eq!(h.vectors.len(), 2);
            assert!(h.gap >= 1e3);
        }
        let s = Arc::new(build_icosahedron());
        let m = InnerProductModel::whitney(s).unwrap();
        assert_eq!(m.harmonic_basis().unwrap().vectors.len(), 0);
    }

    #[test]
    fn decomposition_recombines() {
        let k = Arc::new(build_flat_torus(4, 2).unwrap());
        let m = InnerProductModel::whitney(k.clone()).unwrap();
        let c = Cochain::new(k.clone(), 1, random(k.count(1), 3)).unwrap();
        let h = m.hodge_decompose(&c).unwrap();
        let (recon, ortho) = h.residuals(&m, &c).unwrap();
        assert!(recon <= 1e-10 && ortho <= 1e-10, "{recon} {ortho}");
        let dh = m.coboundary(1).mul_vec(h.harmonic.values());
        assert!(m.norm(2, &dh) <= 1e-8);
    }
}
