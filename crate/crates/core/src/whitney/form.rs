//! Piecewise polynomial forms (one [`LocalForm`] per top simplex), the
//! Whitney and de Rham maps, and `L²` products and distances.

use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use super::analytic::AnalyticForm;
use super::local::{eval_compiled, Coeff, LocalForm, Rational, SimplexGeometry};
use super::quadrature::SimplexRule;
use crate::cochain::Cochain;
use crate::complex::{combinations, factorial, SimplicialComplex};
use crate::error::{Error, Result};

/// Controls adaptive quadrature of non-polynomial integrands.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions {
    /// Initial polynomial exactness degree.
    pub degree: usize,
    /// Accepted relative change between a rule and its doubled-degree rule.
    pub rel_tol: f64,
    pub max_degree: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { degree: 8, rel_tol: 1e-8, max_degree: 64 }
    }
}

/// A degree-`k` form given on each top simplex in its barycentric coordinates.
#[derive(Clone, Debug)]
pub struct PiecewisePolyForm<T = f64> {
    complex: Arc<SimplicialComplex>,
    degree: usize,
    pieces: Vec<LocalForm<T>>,
}

/// Geometry of every top simplex.
pub fn simplex_geometries(complex: &SimplicialComplex) -> Result<Vec<SimplexGeometry>> {
    let n = complex.dim();
    (0..complex.count(n))
        .into_par_iter()
        .map(|s| {
            let pts = complex.points(n, s)?;
            SimplexGeometry::new(&pts).ok_or_else(|| Error::DegenerateSimplex {
                vertices: complex.simplex(n, s).to_vec(),
                volume: crate::complex::simplex_volume(&pts),
            })
        })
        .collect()
}

fn whitney_generic<T: Coeff>(
    complex: &Arc<SimplicialComplex>,
    degree: usize,
    value: impl Fn(usize) -> T,
) -> Result<PiecewisePolyForm<T>> {
    if !complex.is_embedded() {
        return Err(Error::NotEmbedded);
    }
    let n = complex.dim();
    if degree > n {
        return Err(Error::DegreeOutOfRange { degree, dim: n });
    }
    let faces = combinations(n + 1, degree + 1);
    let basis: Vec<LocalForm<T>> = faces.iter().map(|f| LocalForm::whitney(n, f)).collect();
    let pieces = (0..complex.count(n))
        .map(|s| {
            let mut piece = LocalForm::zero(n, degree);
            for (f, w) in faces.iter().zip(&basis) {
                let v = value(complex.face_index(n, s, f));
                if v != T::zero() {
                    piece = piece.add(&w.scale(v));
                }
            }
            piece
        })
        .collect();
    Ok(PiecewisePolyForm { complex: complex.clone(), degree, pieces })
}

/// `W(c)`.
pub fn whitney_map(c: &Cochain) -> Result<PiecewisePolyForm<f64>> {
    whitney_generic(c.complex(), c.degree(), |i| c.values()[i])
}

/// `W` applied to a cochain with exact rational values.
pub fn whitney_map_exact(
    complex: &Arc<SimplicialComplex>,
    degree: usize,
    values: &[Rational],
) -> Result<PiecewisePolyForm<Rational>> {
    if values.len() != complex.count(degree) {
        return Err(Error::InvalidArgument(format!(
            "expected {} values, found {}",
            complex.count(degree),
            values.len()
        )));
    }
    whitney_generic(complex, degree, |i| values[i])
}

/// `R` of a piecewise polynomial form: exact integrals over every
/// `k`-simplex, each taken in the first top simplex containing it.
pub fn de_rham_poly<T: Coeff>(form: &PiecewisePolyForm<T>) -> Vec<T> {
    let cx = &form.complex;
    let (n, k) = (cx.dim(), form.degree);
    let mut out: Vec<Option<T>> = vec![None; cx.count(k)];
    let faces = combinations(n + 1, k + 1);
    for (s, piece) in form.pieces.iter().enumerate() {
        for f in &faces {
            let g = cx.face_index(n, s, f);
            if out[g].is_none() {
                out[g] = Some(piece.integrate_face(f));
            }
        }
    }
    out.into_iter().map(|v| v.unwrap_or_else(T::zero)).collect()
}

impl<T: Coeff> PiecewisePolyForm<T> {
    pub fn zero(complex: Arc<SimplicialComplex>, degree: usize) -> Self {
        let n = complex.dim();
        let pieces = vec![LocalForm::zero(n, degree); complex.count(n)];
        Self { complex, degree, pieces }
    }

    pub fn from_pieces(complex: Arc<SimplicialComplex>, degree: usize, pieces: Vec<LocalForm<T>>) -> Result<Self> {
        let n = complex.dim();
        if pieces.len() != complex.count(n) || pieces.iter().any(|p| p.degree() != degree || p.simplex_dim() != n) {
            return Err(Error::InvalidArgument("pieces do not match the complex".into()));
        }
        Ok(Self { complex, degree, pieces })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn complex(&self) -> &Arc<SimplicialComplex> {
        &self.complex
    }

    pub fn pieces(&self) -> &[LocalForm<T>] {
        &self.pieces
    }

    pub fn piece(&self, s: usize) -> &LocalForm<T> {
        &self.pieces[s]
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if !Arc::ptr_eq(&self.complex, &other.complex) {
            return Err(Error::ComplexMismatch);
        }
        Ok(())
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let degree = self.degree + other.degree;
        if degree > self.complex.dim() {
            return Err(Error::DegreeOutOfRange { degree, dim: self.complex.dim() });
        }
        let pieces = self.pieces.iter().zip(&other.pieces).map(|(a, b)| a.wedge(b)).collect();
        Ok(Self { complex: self.complex.clone(), degree, pieces })
    }

    pub fn d(&self) -> Result<Self> {
        if self.degree >= self.complex.dim() {
            return Err(Error::DegreeOutOfRange { degree: self.degree + 1, dim: self.complex.dim() });
        }
        let pieces = self.pieces.iter().map(|p| p.d()).collect();
        Ok(Self { complex: self.complex.clone(), degree: self.degree + 1, pieces })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        let pieces = self.pieces.iter().zip(&other.pieces).map(|(a, b)| a.sub(b)).collect();
        Ok(Self { complex: self.complex.clone(), degree: self.degree, pieces })
    }

    /// Equality of the represented functions, piece by piece.
    pub fn same_function(&self, other: &Self) -> bool {
        self.degree == other.degree
            && self.pieces.len() == other.pieces.len()
            && self.pieces.iter().zip(&other.pieces).all(|(a, b)| a.canonical() == b.canonical())
    }
}

impl PiecewisePolyForm<f64> {
    /// `R` of this form as a cochain.
    pub fn de_rham(&self) -> Result<Cochain> {
        Cochain::new(self.complex.clone(), self.degree, DVector::from_vec(de_rham_poly(self)))
    }

    /// Exact `L²` product.
    pub fn l2_inner(&self, other: &Self, geometries: &[SimplexGeometry]) -> Result<f64> {
        self.check_same(other)?;
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        let parts: Vec<f64> = self
            .pieces
            .par_iter()
            .zip(&other.pieces)
            .zip(geometries)
            .map(|((a, b), g)| a.integrate_inner(b, g))
            .collect();
        Ok(parts.iter().sum())
    }
}

/// Either kind of form, for [`l2_distance`].
#[derive(Clone, Copy, Debug)]
pub enum FormRef<'a> {
    Poly(&'a PiecewisePolyForm<f64>),
    Analytic(&'a AnalyticForm),
}

impl FormRef<'_> {
    fn degree(&self) -> usize {
        match self {
            FormRef::Poly(p) => p.degree(),
            FormRef::Analytic(a) => a.degree(),
        }
    }
}

/// Repeats a quadrature with doubled degree until the relative change is
/// below tolerance. `eval` returns (value, scale) where `scale` bounds the
/// magnitude of the integrand; changes below `1e-13 · scale` count as
/// converged, so integrals that vanish do not chase roundoff.
fn adaptive<F>(opts: &QuadratureOptions, eval: F) -> Result<f64>
where
    F: Fn(usize) -> (f64, f64),
{
    let mut degree = opts.degree.max(1);
    let (mut prev, _) = eval(degree);
    loop {
        let next_degree = degree * 2;
        let (next, scale) = eval(next_degree);
        let change = (next - prev).abs();
        let floor = 1e-13 * scale;
        if change <= (opts.rel_tol * next.abs()).max(floor) {
            return Ok(next);
        }
        if next_degree >= opts.max_degree {
            return Err(Error::QuadratureNotConverged {
                degree: next_degree,
                change: change / next.abs().max(floor).max(f64::MIN_POSITIVE),
            });
        }
        prev = next;
        degree = next_degree;
    }
}

/// Quadrature of `∫ f(p(x), a(x))` over the mesh of `poly`, where `f` sees the
/// ambient components of both forms. Returns (integral, ∫ |p|²+|a|²).
fn integrate_pair<F>(
    poly: &PiecewisePolyForm<f64>,
    analytic: &AnalyticForm,
    compiled: &[Vec<(Vec<u8>, Vec<f64>)>],
    geometries: &[SimplexGeometry],
    degree: usize,
    f: F,
) -> (f64, f64)
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let n = poly.complex.dim();
    let rule = SimplexRule::cached(n, degree);
    let ncomp = analytic.components().len();
    let parts: Vec<(f64, f64)> = (0..poly.pieces.len())
        .into_par_iter()
        .map(|s| {
            let g = &geometries[s];
            let mut pv = vec![0.0; ncomp];
            let (mut acc, mut norm) = (0.0, 0.0);
            for (lambda, w) in rule.points.iter().zip(&rule.weights) {
                eval_compiled(&compiled[s], lambda, &mut pv);
                let x = g.point_at(lambda);
                let av = analytic.eval(x.as_slice());
                acc += w * f(&pv, &av);
                norm += w * (pv.iter().map(|v| v * v).sum::<f64>() + av.iter().map(|v| v * v).sum::<f64>());
            }
            (acc * g.volume, norm * g.volume)
        })
        .collect();
    parts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y))
}

fn check_ambient(poly: &PiecewisePolyForm<f64>, analytic: &AnalyticForm) -> Result<()> {
    let emb = poly.complex.embedding().ok_or(Error::NotEmbedded)?;
    if emb.ambient_dim != analytic.dim() {
        return Err(Error::InvalidArgument(format!(
            "form lives in dimension {}, mesh in {}",
            analytic.dim(),
            emb.ambient_dim
        )));
    }
    if poly.degree != analytic.degree() {
        return Err(Error::DegreeMismatch { expected: poly.degree, found: analytic.degree() });
    }
    Ok(())
}

fn compile_all(poly: &PiecewisePolyForm<f64>, geometries: &[SimplexGeometry]) -> Vec<Vec<(Vec<u8>, Vec<f64>)>> {
    poly.pieces.par_iter().zip(geometries).map(|(p, g)| p.compile(g)).collect()
}

/// `∫ ⟨p, a⟩` by adaptive quadrature.
pub fn l2_inner_poly_analytic(
    poly: &PiecewisePolyForm<f64>,
    analytic: &AnalyticForm,
    opts: &QuadratureOptions,
) -> Result<f64> {
    check_ambient(poly, analytic)?;
    let geometries = simplex_geometries(&poly.complex)?;
    let compiled = compile_all(poly, &geometries);
    adaptive(opts, |deg| {
        integrate_pair(poly, analytic, &compiled, &geometries, deg, |p, a| {
            p.iter().zip(a).map(|(x, y)| x * y).sum()
        })
    })
}

/// `‖α − β‖_{L²}`: exact for two polynomial forms and for two analytic
/// forms, adaptive quadrature for a mixed pair.
pub fn l2_distance(a: FormRef<'_>, b: FormRef<'_>, opts: &QuadratureOptions) -> Result<f64> {
    if a.degree() != b.degree() {
        return Err(Error::DegreeMismatch { expected: a.degree(), found: b.degree() });
    }
    let sq = match (a, b) {
        (FormRef::Poly(p), FormRef::Poly(q)) => {
            let diff = p.sub(q)?;
            let geometries = simplex_geometries(&p.complex)?;
            diff.l2_inner(&diff, &geometries)?
        }
        (FormRef::Analytic(p), FormRef::Analytic(q)) => {
            let diff = p.sub(q)?;
            diff.l2_inner(&diff)?
        }
        (FormRef::Poly(p), FormRef::Analytic(q)) | (FormRef::Analytic(q), FormRef::Poly(p)) => {
            check_ambient(p, q)?;
            let geometries = simplex_geometries(&p.complex)?;
            let compiled = compile_all(p, &geometries);
            adaptive(opts, |deg| {
                integrate_pair(p, q, &compiled, &geometries, deg, |x, y| {
                    x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum()
                })
            })?
        }
    };
    Ok(sq.max(0.0).sqrt())
}

/// `R(ω)`: integrals of an analytic form over every simplex of its degree,
/// by Gauss quadrature with the order-doubling check.
pub fn de_rham_analytic(
    form: &AnalyticForm,
    complex: &Arc<SimplicialComplex>,
    opts: &QuadratureOptions,
) -> Result<Cochain> {
    let emb = complex.embedding().ok_or(Error::NotEmbedded)?;
    let d = emb.ambient_dim;
    if d != form.dim() {
        return Err(Error::InvalidArgument(format!("form lives in dimension {}, mesh in {d}", form.dim())));
    }
    let k = form.degree();
    if k > complex.dim() {
        return Err(Error::DegreeOutOfRange { degree: k, dim: complex.dim() });
    }
    let axes = combinations(d, k);
    // per simplex: base point, edge vectors and the minors det(E_I)
    let data: Vec<(Vec<nalgebra::DVector<f64>>, Vec<f64>)> = (0..complex.count(k))
        .map(|s| {
            let pts = complex.points(k, s)?;
            let minors = axes
                .iter()
                .map(|rows| {
                    if k == 0 {
                        return 1.0;
                    }
                    nalgebra::DMatrix::from_fn(k, k, |r, c| pts[c + 1][rows[r]] - pts[0][rows[r]]).determinant()
                })
                .collect();
            Ok((pts, minors))
        })
        .collect::<Result<_>>()?;
    let scale = 1.0 / factorial(k) as f64;
    let evaluate = |degree: usize| -> Vec<f64> {
        let rule = SimplexRule::cached(k, degree);
        data.par_iter()
            .map(|(pts, minors)| {
                let mut total = 0.0;
                for (lambda, w) in rule.points.iter().zip(&rule.weights) {
                    let mut x = nalgebra::DVector::zeros(d);
                    for (p, &l) in pts.iter().zip(lambda) {
                        x.axpy(l, p, 1.0);
                    }
                    let v = form.eval(x.as_slice());
                    total += w * v.iter().zip(minors).map(|(a, b)| a * b).sum::<f64>();
                }
                total * scale
            })
            .collect()
    };
    let values = if k == 0 {
        evaluate(0)
    } else {
        let mut degree = opts.degree.max(1);
        let mut prev = evaluate(degree);
        loop {
            let next_degree = degree * 2;
            let next = evaluate(next_degree);
            let size = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let change = next.iter().zip(&prev).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if change <= (opts.rel_tol * size).max(1e-15 * form.max_abs_coef()) {
                break next;
            }
            if next_degree >= opts.max_degree {
                return Err(Error::QuadratureNotConverged { degree: next_degree, change: change / size.max(f64::MIN_POSITIVE) });
            }
            prev = next;
            degree = next_degree;
        }
    };
    Cochain::new(complex.clone(), k, DVector::from_vec(values))
}
