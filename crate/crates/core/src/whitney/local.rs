//! Polynomial differential forms on a single simplex, written in barycentric
//! coordinates `μ_0..μ_n` and their differentials.
//!
//! A term is `coef · μ^α · dμ_{i_1} ∧ … ∧ dμ_{i_k}` with increasing indices.
//! Because `Σ μ_i = 1` and `Σ dμ_i = 0` the representation is redundant; the
//! exact operations (wedge, `d`, face integrals, moment integrals) work on the
//! redundant form directly and [`LocalForm::canonical`] removes `μ_0` and
//! `dμ_0` when two forms have to be compared term by term.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::Neg;

use nalgebra::{DMatrix, DVector};
use num_rational::Rational64;
use num_traits::{FromPrimitive, Num, ToPrimitive};

use crate::complex::{combinations, factorial};

/// Field of coefficients: `f64` for numerics, `Rational64` for exact checks.
pub trait Coeff: Clone + Debug + PartialEq + Num + Neg<Output = Self> + FromPrimitive + ToPrimitive {}
impl<T> Coeff for T where T: Clone + Debug + PartialEq + Num + Neg<Output = T> + FromPrimitive + ToPrimitive {}

pub type Rational = Rational64;

/// (wedge indices, monomial exponents over μ_0..μ_n)
pub type Term = (Vec<u8>, Vec<u8>);

#[derive(Clone, Debug, PartialEq)]
pub struct LocalForm<T> {
    simplex_dim: usize,
    degree: usize,
    terms: BTreeMap<Term, T>,
}

/// Sign and merged index set of `dμ_I ∧ dμ_J`, or `None` if they overlap.
pub fn merge_wedge(i: &[u8], j: &[u8]) -> Option<(i32, Vec<u8>)> {
    let mut inversions = 0;
    for &a in i {
        for &b in j {
            if a == b {
                return None;
            }
            if a > b {
                inversions += 1;
            }
        }
    }
    let mut merged: Vec<u8> = i.iter().chain(j).copied().collect();
    merged.sort_unstable();
    Some((if inversions % 2 == 0 { 1 } else { -1 }, merged))
}

fn from_i64<T: Coeff>(x: i64) -> T {
    T::from_i64(x).expect("coefficient conversion")
}

impl<T: Coeff> LocalForm<T> {
    pub fn zero(simplex_dim: usize, degree: usize) -> Self {
        Self { simplex_dim, degree, terms: BTreeMap::new() }
    }

    /// The constant 0-form `value`.
    pub fn constant(simplex_dim: usize, value: T) -> Self {
        let mut f = Self::zero(simplex_dim, 0);
        f.add_term(Vec::new(), vec![0; simplex_dim + 1], value);
        f
    }

    /// The barycentric coordinate `μ_i` as a 0-form.
    pub fn barycentric(simplex_dim: usize, i: usize) -> Self {
        let mut e = vec![0u8; simplex_dim + 1];
        e[i] = 1;
        let mut f = Self::zero(simplex_dim, 0);
        f.add_term(Vec::new(), e, T::one());
        f
    }

    /// Whitney form of the face with local vertices `face` (increasing):
    /// `j! Σ_i (-1)^i μ_{f_i} dμ_{f_0} ∧ … (omit f_i) … ∧ dμ_{f_j}`.
    pub fn whitney(simplex_dim: usize, face: &[usize]) -> Self {
        let j = face.len() - 1;
        let scale: T = from_i64(factorial(j) as i64);
        let mut f = Self::zero(simplex_dim, j);
        for (i, &fi) in face.iter().enumerate() {
            let mut e = vec![0u8; simplex_dim + 1];
            e[fi] = 1;
            let wedge: Vec<u8> = face.iter().enumerate().filter(|&(l, _)| l != i).map(|(_, &v)| v as u8).collect();
            let c = if i % 2 == 0 { scale.clone() } else { -scale.clone() };
            f.add_term(wedge, e, c);
        }
        f
    }

    pub fn simplex_dim(&self) -> usize {
        self.simplex_dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<Term, T> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, wedge: Vec<u8>, exps: Vec<u8>, coef: T) {
        debug_assert_eq!(wedge.len(), self.degree);
        debug_assert_eq!(exps.len(), self.simplex_dim + 1);
        if coef == T::zero() {
            return;
        }
        let key = (wedge, exps);
        let entry = self.terms.entry(key.clone()).or_insert_with(T::zero);
        *entry = entry.clone() + coef;
        if *entry == T::zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree, "degree mismatch");
        let mut out = self.clone();
        for ((w, e), c) in &other.terms {
            out.add_term(w.clone(), e.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = Self::zero(self.simplex_dim, self.degree);
        for ((w, e), c) in &self.terms {
            out.add_term(w.clone(), e.clone(), c.clone() * s.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn wedge(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.simplex_dim, self.degree + other.degree);
        for ((w1, e1), c1) in &self.terms {
            for ((w2, e2), c2) in &other.terms {
                if let Some((sign, w)) = merge_wedge(w1, w2) {
                    let e: Vec<u8> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                    let c = c1.clone() * c2.clone();
                    out.add_term(w, e, if sign > 0 { c } else { -c });
                }
            }
        }
        out
    }

    /// Exterior derivative: `d(μ^α dμ_I) = Σ_i α_i μ^{α - e_i} dμ_i ∧ dμ_I`.
    pub fn d(&self) -> Self {
        let mut out = Self::zero(self.simplex_dim, self.degree + 1);
        for ((w, e), c) in &self.terms {
            for i in 0..=self.simplex_dim {
                if e[i] == 0 {
                    continue;
                }
                if let Some((sign, merged)) = merge_wedge(&[i as u8], w) {
                    let mut e2 = e.clone();
                    e2[i] -= 1;
                    let coef = c.clone() * from_i64(e[i] as i64);
                    out.add_term(merged, e2, if sign > 0 { coef } else { -coef });
                }
            }
        }
        out
    }

    /// Exact integral over the face with local vertices `face` (increasing,
    /// `degree + 1` of them), oriented by vertex order.
    pub fn integrate_face(&self, face: &[usize]) -> T {
        assert_eq!(face.len(), self.degree + 1, "face dimension must match form degree");
        let k = self.degree;
        let mut total = T::zero();
        for ((w, e), c) in &self.terms {
            // monomial vanishes on the face if it involves an outside vertex
            if e.iter().enumerate().any(|(i, &a)| a > 0 && !face.contains(&i)) {
                continue;
            }
            if w.iter().any(|&i| !face.contains(&(i as usize))) {
                continue;
            }
            let missing = face.iter().position(|&f| !w.contains(&(f as u8))).expect("k of k+1 face vertices");
            let num: u64 = face.iter().map(|&f| factorial(e[f] as usize)).product();
            let total_deg: usize = face.iter().map(|&f| e[f] as usize).sum();
            let den = factorial(total_deg + k);
            let v = c.clone() * from_i64::<T>(num as i64) / from_i64::<T>(den as i64);
            total = if missing % 2 == 0 { total + v } else { total - v };
        }
        total
    }

    /// Removes `dμ_0` (via `dμ_0 = -Σ_{i≥1} dμ_i`) and `μ_0` (via
    /// `μ_0 = 1 - Σ_{i≥1} μ_i`), giving a unique representation.
    pub fn canonical(&self) -> BTreeMap<Term, T> {
        let n = self.simplex_dim;
        let mut stage = Self::zero(n, self.degree);
        for ((w, e), c) in &self.terms {
            if w.first() == Some(&0) {
                let rest = &w[1..];
                for i in 1..=n as u8 {
                    if let Some((sign, merged)) = merge_wedge(&[i], rest) {
                        let v = if sign > 0 { -c.clone() } else { c.clone() };
                        stage.add_term(merged, e.clone(), v);
                    }
                }
            } else {
                stage.add_term(w.clone(), e.clone(), c.clone());
            }
        }
        let mut out = Self::zero(n, self.degree);
        for ((w, e), c) in &stage.terms {
            let mut poly: BTreeMap<Vec<u8>, T> = BTreeMap::new();
            let mut base = e.clone();
            base[0] = 0;
            poly.insert(base, c.clone());
            for _ in 0..e[0] {
                // multiply by (1 - μ_1 - … - μ_n)
                let mut next: BTreeMap<Vec<u8>, T> = BTreeMap::new();
                for (m, v) in &poly {
                    let acc = next.entry(m.clone()).or_insert_with(T::zero);
                    *acc = acc.clone() + v.clone();
                    for i in 1..=n {
                        let mut m2 = m.clone();
                        m2[i] += 1;
                        let acc = next.entry(m2).or_insert_with(T::zero);
                        *acc = acc.clone() - v.clone();
                    }
                }
                poly = next;
            }
            for (m, v) in poly {
                out.add_term(w.clone(), m, v);
            }
        }
        out.terms
    }

    pub fn to_f64(&self) -> LocalForm<f64> {
        LocalForm {
            simplex_dim: self.simplex_dim,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), v.to_f64().expect("finite coefficient")))
                .collect(),
        }
    }
}

/// `∫_σ μ^γ dV / vol(σ) = γ! n! / (|γ| + n)!`.
pub fn moment(exps: &[u8]) -> f64 {
    let n = exps.len() - 1;
    let total: usize = exps.iter().map(|&a| a as usize).sum();
    let num: f64 = exps.iter().map(|&a| factorial(a as usize) as f64).product();
    num * factorial(n) as f64 / factorial(total + n) as f64
}

/// Evaluates a form prepared by [`LocalForm::compile`].
pub fn eval_compiled(compiled: &[(Vec<u8>, Vec<f64>)], lambda: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (e, comps) in compiled {
        let mono: f64 = e.iter().zip(lambda).map(|(&a, &l)| l.powi(a as i32)).product();
        for (o, c) in out.iter_mut().zip(comps) {
            *o += mono * c;
        }
    }
}

/// Per-simplex metric data: volume, barycentric gradients in ambient
/// coordinates and their Gram matrix `G_kl = ⟨dμ_k, dμ_l⟩`.
#[derive(Clone, Debug)]
pub struct SimplexGeometry {
    pub volume: f64,
    pub points: Vec<DVector<f64>>,
    /// `(n+1) × d`, row `i` is the gradient of `μ_i`.
    pub gradients: DMatrix<f64>,
    pub gram: DMatrix<f64>,
}

impl SimplexGeometry {
    /// From lifted vertex positions. Returns `None` for degenerate simplices.
    pub fn new(points: &[DVector<f64>]) -> Option<Self> {
        let n = points.len() - 1;
        let d = points[0].len();
        let e = DMatrix::from_fn(d, n, |r, c| points[c + 1][r] - points[0][r]);
        let metric = e.transpose() * &e;
        let det = metric.determinant();
        if !(det > 0.0) {
            return None;
        }
        let inv = metric.clone().try_inverse()?;
        // gradients of μ_1..μ_n: rows of g⁻¹ Eᵀ
        let partial = inv * e.transpose();
        let mut gradients = DMatrix::zeros(n + 1, d);
        for i in 0..n {
            for a in 0..d {
                gradients[(i + 1, a)] = partial[(i, a)];
                gradients[(0, a)] -= partial[(i, a)];
            }
        }
        let gram = &gradients * gradients.transpose();
        let volume = det.sqrt() / factorial(n) as f64;
        Some(Self { volume, points: points.to_vec(), gradients, gram })
    }

    pub fn dim(&self) -> usize {
        self.points.len() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.points[0].len()
    }

    /// `⟨dμ_I, dμ_J⟩ = det G[I, J]`.
    pub fn wedge_inner(&self, i: &[u8], j: &[u8]) -> f64 {
        let k = i.len();
        if k == 0 {
            return 1.0;
        }
        let m = DMatrix::from_fn(k, k, |r, c| self.gram[(i[r] as usize, j[c] as usize)]);
        m.determinant()
    }

    /// Physical point of barycentric coordinates `lambda`.
    pub fn point_at(&self, lambda: &[f64]) -> DVector<f64> {
        let mut x = DVector::zeros(self.ambient_dim());
        for (p, &l) in self.points.iter().zip(lambda) {
            x.axpy(l, p, 1.0);
        }
        x
    }

    /// Ambient components of `dμ_I` over the lexicographic `k`-subsets of
    /// the ambient axes.
    pub fn wedge_components(&self, wedge: &[u8]) -> Vec<f64> {
        let k = wedge.len();
        let d = self.ambient_dim();
        combinations(d, k)
            .iter()
            .map(|axes| {
                if k == 0 {
                    return 1.0;
                }
                DMatrix::from_fn(k, k, |r, c| self.gradients[(wedge[r] as usize, axes[c])]).determinant()
            })
            .collect()
    }
}

impl LocalForm<f64> {
    /// Exact `∫_σ ⟨self, other⟩ dV` from barycentric moments.
    pub fn integrate_inner(&self, other: &LocalForm<f64>, geom: &SimplexGeometry) -> f64 {
        assert_eq!(self.degree, other.degree);
        let mut total = 0.0;
        for ((w1, e1), c1) in &self.terms {
            for ((w2, e2), c2) in &other.terms {
                let g = geom.wedge_inner(w1, w2);
                if g == 0.0 {
                    continue;
                }
                let e: Vec<u8> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                total += c1 * c2 * g * moment(&e);
            }
        }
        total * geom.volume
    }

    /// Groups terms by monomial, with each coefficient expanded into ambient
    /// components; [`eval_compiled`] evaluates the result cheaply.
    pub fn compile(&self, geom: &SimplexGeometry) -> Vec<(Vec<u8>, Vec<f64>)> {
        let mut by_mono: BTreeMap<Vec<u8>, Vec<f64>> = BTreeMap::new();
        let mut cache: BTreeMap<&Vec<u8>, Vec<f64>> = BTreeMap::new();
        for ((w, e), c) in &self.terms {
            let comps = cache.entry(w).or_insert_with(|| geom.wedge_components(w));
            let acc = by_mono.entry(e.clone()).or_insert_with(|| vec![0.0; comps.len()]);
            for (a, v) in acc.iter_mut().zip(comps.iter()) {
                *a += c * v;
            }
        }
        by_mono.into_iter().collect()
    }

    /// Ambient components at the barycentric point `lambda`, ordered like
    /// [`SimplexGeometry::wedge_components`].
    pub fn eval_ambient(&self, lambda: &[f64], geom: &SimplexGeometry) -> Vec<f64> {
        let d = geom.ambient_dim();
        let ncomp = combinations(d, self.degree).len();
        let mut out = vec![0.0; ncomp];
        let mut by_wedge: BTreeMap<&Vec<u8>, f64> = BTreeMap::new();
        for ((w, e), c) in &self.terms {
            let mono: f64 = e.iter().zip(lambda).map(|(&a, &l)| l.powi(a as i32)).product();
            *by_wedge.entry(w).or_insert(0.0) += c * mono;
        }
        for (w, v) in by_wedge {
            if v == 0.0 {
                continue;
            }
            for (o, comp) in out.iter_mut().zip(geom.wedge_components(w)) {
                *o += v * comp;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = LocalForm<Rational>;

    #[test]
    fn vertex_whitney_form_is_hat_function() {
        let w = Q::whitney(2, &[1]);
        assert_eq!(w, Q::barycentric(2, 1));
    }

    #[test]
    fn edge_whitney_form() {
        let w = Q::whitney(2, &[0, 1]);
        let expected = Q::barycentric(2, 0)
            .wedge(&Q::barycentric(2, 1).d())
            .sub(&Q::barycentric(2, 1).wedge(&Q::barycentric(2, 0).d()));
        assert_eq!(w, expected);
    }

    #[test]
    fn integrals_reproduce_elementary_cochains() {
        // R W = Id on the faces of a tetrahedron
        for k in 0..=3 {
            for f in combinations(4, k + 1) {
                let w = Q::whitney(3, &f);
                for g in combinations(4, k + 1) {
                    let expect = if f == g { Rational::from_integer(1) } else { Rational::from_integer(0) };
                    assert_eq!(w.integrate_face(&g), expect, "face {f:?} on {g:?}");
                }
            }
        }
    }

    #[test]
    fn odd_self_wedge_vanishes() {
        let w = Q::whitney(2, &[0, 2]);
        assert!(w.wedge(&w).canonical().is_empty());
        let one = Q::constant(2, Rational::from_integer(1));
        assert_eq!(one.wedge(&w), w);
    }

    #[test]
    fn d_squared_is_zero() {
        let f = Q::whitney(3, &[0, 2]).wedge(&Q::whitney(3, &[1]));
        assert!(f.d().d().canonical().is_empty());
    }

    #[test]
    fn canonical_form_detects_equal_functions() {
        // μ_0 + μ_1 + μ_2 = 1 on a triangle
        let s = Q::barycentric(2, 0).add(&Q::barycentric(2, 1)).add(&Q::barycentric(2, 2));
        assert_eq!(s.canonical(), Q::constant(2, Rational::from_integer(1)).canonical());
        // dμ_0 + dμ_1 + dμ_2 = 0
        let ds = s.d();
        assert!(ds.canonical().is_empty());
    }

    #[test]
    fn geometry_of_reference_triangle() {
        let pts = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ];
        let g = SimplexGeometry::new(&pts).unwrap();
        assert!((g.volume - 0.5).abs() < 1e-15);
        assert!((g.gram[(0, 0)] - 2.0).abs() < 1e-14);
        assert!((g.gram[(1, 2)]).abs() < 1e-14);
        // rows of G sum to zero
        for i in 0..3 {
            assert!(g.gram.row(i).sum().abs() < 1e-14);
        }
        let degenerate = vec![pts[0].clone(), pts[1].clone(), DVector::from_vec(vec![2.0, 0.0])];
        assert!(SimplexGeometry::new(&degenerate).is_none());
    }

    #[test]
    fn p1_mass_matrix_on_triangle() {
        let pts = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![2.0, 0.0]),
            DVector::from_vec(vec![0.5, 1.5]),
        ];
        let g = SimplexGeometry::new(&pts).unwrap();
        let a = g.volume;
        for i in 0..3 {
            for j in 0..3 {
                let m = LocalForm::<f64>::whitney(2, &[i]).integrate_inner(&LocalForm::whitney(2, &[j]), &g);
                let expect = if i == j { a / 6.0 } else { a / 12.0 };
                assert!((m - expect).abs() < 1e-15);
            }
        }
    }
}
