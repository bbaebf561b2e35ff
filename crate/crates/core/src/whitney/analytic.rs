//! Smooth reference forms on the flat unit torus.
//!
//! A component is a trigonometric polynomial: a sum of products over the axes
//! of `cos(2πk x_a)` or `sin(2πk x_a)`. Products, derivatives, the Hodge star,
//! the codifferential and the projection onto co-closed forms are all exact
//! symbolic operations on this representation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::complex::combinations;
use crate::error::{Error, Result};
use crate::whitney::local::merge_wedge;

/// One factor of a term along a single axis, with integer frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trig {
    Cos(u32),
    Sin(u32),
}

impl Trig {
    fn eval(self, x: f64) -> f64 {
        match self {
            Trig::Cos(0) => 1.0,
            Trig::Cos(k) => (2.0 * PI * k as f64 * x).cos(),
            Trig::Sin(k) => (2.0 * PI * k as f64 * x).sin(),
        }
    }

    fn freq(self) -> u32 {
        match self {
            Trig::Cos(k) | Trig::Sin(k) => k,
        }
    }

    /// Product of two factors as at most two signed factors.
    fn mul(self, other: Trig) -> [(f64, Trig); 2] {
        let diff = |p: u32, q: u32| -> (f64, u32) {
            if p >= q {
                (1.0, p - q)
            } else {
                (-1.0, q - p)
            }
        };
        match (self, other) {
            (Trig::Cos(p), Trig::Cos(q)) => [(0.5, Trig::Cos(p.abs_diff(q))), (0.5, Trig::Cos(p + q))],
            (Trig::Sin(p), Trig::Sin(q)) => [(0.5, Trig::Cos(p.abs_diff(q))), (-0.5, Trig::Cos(p + q))],
            (Trig::Sin(p), Trig::Cos(q)) | (Trig::Cos(q), Trig::Sin(p)) => {
                let (s, d) = diff(p, q);
                [(0.5, Trig::Sin(p + q)), (0.5 * s, Trig::Sin(d))]
            }
        }
    }

    fn derivative(self) -> (f64, Trig) {
        match self {
            Trig::Cos(k) => (-2.0 * PI * k as f64, Trig::Sin(k)),
            Trig::Sin(k) => (2.0 * PI * k as f64, Trig::Cos(k)),
        }
    }
}

/// Trigonometric polynomial on the unit torus of dimension `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    dim: usize,
    terms: BTreeMap<Vec<Trig>, f64>,
}

impl TrigPoly {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![Trig::Cos(0); dim], c);
        p
    }

    /// `cos(2πk x_axis)` or `sin(2πk x_axis)`.
    pub fn factor(dim: usize, axis: usize, trig: Trig) -> Self {
        let mut key = vec![Trig::Cos(0); dim];
        key[axis] = trig;
        let mut p = Self::zero(dim);
        p.add_term(key, 1.0);
        p
    }

    /// `cos(2π k·x)` for an integer wave vector, expanded into products.
    pub fn cos_of(dim: usize, k: &[i64]) -> Self {
        Self::angle(dim, k).0
    }

    /// `sin(2π k·x)` for an integer wave vector, expanded into products.
    pub fn sin_of(dim: usize, k: &[i64]) -> Self {
        Self::angle(dim, k).1
    }

    fn angle(dim: usize, k: &[i64]) -> (Self, Self) {
        let mut c = Self::constant(dim, 1.0);
        let mut s = Self::zero(dim);
        for (axis, &ka) in k.iter().enumerate() {
            let f = ka.unsigned_abs() as u32;
            let sign = if ka < 0 { -1.0 } else { 1.0 };
            let ca = Self::factor(dim, axis, Trig::Cos(f));
            let sa = Self::factor(dim, axis, Trig::Sin(f)).scale(sign);
            // angle addition
            let nc = c.mul(&ca).sub(&s.mul(&sa));
            let ns = s.mul(&ca).add(&c.mul(&sa));
            c = nc;
            s = ns;
        }
        (c, s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &BTreeMap<Vec<Trig>, f64> {
        &self.terms
    }

    pub fn add_term(&mut self, key: Vec<Trig>, coef: f64) {
        if coef == 0.0 || key.contains(&Trig::Sin(0)) {
            return;
        }
        let e = self.terms.entry(key.clone()).or_insert(0.0);
        *e += coef;
        if *e == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), *v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.dim);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v * s);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim);
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                // expand the per-axis products
                let mut partial: Vec<(f64, Vec<Trig>)> = vec![(va * vb, Vec::with_capacity(self.dim))];
                for axis in 0..self.dim {
                    let prods = ka[axis].mul(kb[axis]);
                    let mut next = Vec::with_capacity(partial.len() * 2);
                    for (c, key) in &partial {
                        for &(s, t) in &prods {
                            if t == Trig::Sin(0) {
                                continue;
                            }
                            let mut k2 = key.clone();
                            k2.push(t);
                            next.push((c * s, k2));
                        }
                    }
                    partial = next;
                }
                for (c, key) in partial {
                    out.add_term(key, c);
                }
            }
        }
        out
    }

    /// `∂/∂x_axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (k, v) in &self.terms {
            let (s, t) = k[axis].derivative();
            let mut k2 = k.clone();
            k2[axis] = t;
            out.add_term(k2, v * s);
        }
        out
    }

    /// Mean over the torus (the constant term).
    pub fn mean(&self) -> f64 {
        self.terms.get(&vec![Trig::Cos(0); self.dim]).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, v)| v * k.iter().zip(x).map(|(t, &xa)| t.eval(xa)).product::<f64>())
            .sum()
    }

    pub fn max_abs_coef(&self) -> f64 {
        self.terms.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest frequency along any axis.
    pub fn max_freq(&self) -> u32 {
        self.terms.keys().flat_map(|k| k.iter().map(|t| t.freq())).max().unwrap_or(0)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs_coef() <= tol
    }

    /// Solves `-∇² u = self` on mean-zero functions; the constant term of
    /// the input is ignored.
    pub fn inverse_laplacian(&self) -> Self {
        let mut out = Self::zero(self.dim);
        for (k, v) in &self.terms {
            let k2: f64 = k.iter().map(|t| (t.freq() as f64).powi(2)).sum();
            if k2 > 0.0 {
                out.add_term(k.clone(), v / (4.0 * PI * PI * k2));
            }
        }
        out
    }
}

/// A smooth `k`-form on the flat unit torus `T^dim`, one component per
/// increasing index set `I` (lexicographic order) in the basis `dx_I`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticForm {
    dim: usize,
    degree: usize,
    comps: Vec<TrigPoly>,
}

impl AnalyticForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        let n = combinations(dim, degree).len();
        Self { dim, degree, comps: vec![TrigPoly::zero(dim); n] }
    }

    pub fn new(dim: usize, degree: usize, comps: Vec<TrigPoly>) -> Result<Self> {
        if degree > dim {
            return Err(Error::DegreeOutOfRange { degree, dim });
        }
        if comps.len() != combinations(dim, degree).len() || comps.iter().any(|c| c.dim != dim) {
            return Err(Error::InvalidArgument("component count does not match degree".into()));
        }
        Ok(Self { dim, degree, comps })
    }

    /// The 0-form `f`.
    pub fn function(f: TrigPoly) -> Self {
        Self { dim: f.dim, degree: 0, comps: vec![f] }
    }

    /// `f dx_I` for increasing axes `axes`.
    pub fn monomial(f: TrigPoly, axes: &[usize]) -> Result<Self> {
        let dim = f.dim;
        let mut out = Self::zero(dim, axes.len());
        let idx = combinations(dim, axes.len())
            .iter()
            .position(|c| c == axes)
            .ok_or_else(|| Error::InvalidArgument(format!("bad axes {axes:?}")))?;
        out.comps[idx] = f;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> &[TrigPoly] {
        &self.comps
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::InvalidArgument("forms on tori of different dimension".into()));
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect();
        Ok(Self { dim: self.dim, degree: self.degree, comps })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, degree: self.degree, comps: self.comps.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::InvalidArgument("forms on tori of different dimension".into()));
        }
        let degree = self.degree + other.degree;
        if degree > self.dim {
            return Err(Error::DegreeOutOfRange { degree, dim: self.dim });
        }
        let ia = combinations(self.dim, self.degree);
        let ib = combinations(self.dim, other.degree);
        let ic = combinations(self.dim, degree);
        let mut out = Self::zero(self.dim, degree);
        for (i, a) in ia.iter().enumerate() {
            for (j, b) in ib.iter().enumerate() {
                let (a8, b8): (Vec<u8>, Vec<u8>) =
                    (a.iter().map(|&x| x as u8).collect(), b.iter().map(|&x| x as u8).collect());
                if let Some((sign, merged)) = merge_wedge(&a8, &b8) {
                    let merged: Vec<usize> = merged.iter().map(|&x| x as usize).collect();
                    let pos = ic.iter().position(|c| *c == merged).expect("merged index set");
                    let p = self.comps[i].mul(&other.comps[j]).scale(sign as f64);
                    out.comps[pos] = out.comps[pos].add(&p);
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative.
    pub fn d(&self) -> Result<Self> {
        if self.degree >= self.dim {
            return Err(Error::DegreeOutOfRange { degree: self.degree + 1, dim: self.dim });
        }
        let ia = combinations(self.dim, self.degree);
        let ic = combinations(self.dim, self.degree + 1);
        let mut out = Self::zero(self.dim, self.degree + 1);
        for (pos, j) in ic.iter().enumerate() {
            for (p, &a) in j.iter().enumerate() {
                let rest: Vec<usize> = j.iter().copied().filter(|&x| x != a).collect();
                let i = ia.iter().position(|c| *c == rest).expect("face index set");
                let term = self.comps[i].derivative(a);
                out.comps[pos] = if p % 2 == 0 { out.comps[pos].add(&term) } else { out.comps[pos].sub(&term) };
            }
        }
        Ok(out)
    }

    /// Codifferential `d*`, the `L²` adjoint of `d` (so `d*d = -∇²` on
    /// functions).
    pub fn codifferential(&self) -> Result<Self> {
        if self.degree == 0 {
            return Err(Error::DegreeOutOfRange { degree: 0, dim: self.dim });
        }
        let ia = combinations(self.dim, self.degree);
        let ic = combinations(self.dim, self.degree - 1);
        let mut out = Self::zero(self.dim, self.degree - 1);
        for (i, set) in ia.iter().enumerate() {
            for (p, &a) in set.iter().enumerate() {
                let rest: Vec<usize> = set.iter().copied().filter(|&x| x != a).collect();
                let pos = ic.iter().position(|c| *c == rest).expect("face index set");
                let term = self.comps[i].derivative(a);
                // -∂_a f ι_a dx_I with ι_a dx_I = (-1)^p dx_{I\a}
                out.comps[pos] = if p % 2 == 0 { out.comps[pos].sub(&term) } else { out.comps[pos].add(&term) };
            }
        }
        Ok(out)
    }

    /// Hodge star for the flat metric: `dx_I ∧ ⋆dx_I = dx_1 ∧ … ∧ dx_n`.
    pub fn hodge_star(&self) -> Self {
        let ia = combinations(self.dim, self.degree);
        let ic = combinations(self.dim, self.dim - self.degree);
        let mut out = Self::zero(self.dim, self.dim - self.degree);
        for (i, set) in ia.iter().enumerate() {
            let comp: Vec<usize> = (0..self.dim).filter(|x| !set.contains(x)).collect();
            let pos = ic.iter().position(|c| *c == comp).expect("complement");
            let (a8, b8): (Vec<u8>, Vec<u8>) =
                (set.iter().map(|&x| x as u8).collect(), comp.iter().map(|&x| x as u8).collect());
            let (sign, _) = merge_wedge(&a8, &b8).expect("disjoint");
            out.comps[pos] = out.comps[pos].add(&self.comps[i].scale(sign as f64));
        }
        out
    }

    /// Pointwise inner product, a function.
    pub fn inner_pointwise(&self, other: &Self) -> Result<TrigPoly> {
        self.check(other)?;
        Ok(self.comps.iter().zip(&other.comps).fold(TrigPoly::zero(self.dim), |acc, (a, b)| acc.add(&a.mul(b))))
    }

    /// `∫_T ⟨α, β⟩`, exact.
    pub fn l2_inner(&self, other: &Self) -> Result<f64> {
        Ok(self.inner_pointwise(other)?.mean())
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).expect("same form").max(0.0).sqrt()
    }

    /// Component values at `x`, ordered like [`AnalyticForm::components`].
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }

    pub fn max_abs_coef(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.max_abs_coef()))
    }

    pub fn max_freq(&self) -> u32 {
        self.comps.iter().map(|c| c.max_freq()).max().unwrap_or(0)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.comps.iter().all(|c| c.is_zero(tol))
    }

    fn require_one_form(&self) -> Result<()> {
        if self.degree != 1 {
            return Err(Error::DegreeMismatch { expected: 1, found: self.degree });
        }
        Ok(())
    }

    /// Nonlinear term `T(ω)`, defined weakly by `⟨T(ω), η⟩ = ⟨dω, ω ∧ η⟩`;
    /// its `a`-th component is `⟨dω, ω ∧ dx_a⟩`.
    pub fn nonlinear_term(&self) -> Result<Self> {
        self.require_one_form()?;
        let dw = self.d()?;
        let mut comps = Vec::with_capacity(self.dim);
        for a in 0..self.dim {
            let dxa = Self::monomial(TrigPoly::constant(self.dim, 1.0), &[a])?;
            comps.push(dw.inner_pointwise(&self.wedge(&dxa)?)?);
        }
        Self::new(self.dim, 1, comps)
    }

    /// `T_ν(ω) = T(ω) − ν d*dω`.
    pub fn t_nu(&self, nu: f64) -> Result<Self> {
        let viscous = self.d()?.codifferential()?;
        self.nonlinear_term()?.sub(&viscous.scale(nu))
    }

    /// Orthogonal projection onto co-closed forms, `ω − d Δ⁻¹ d*ω`.
    pub fn project_coclosed(&self) -> Result<Self> {
        if self.degree == 0 {
            return Ok(self.clone());
        }
        let div = self.codifferential()?;
        let potential = Self {
            dim: self.dim,
            degree: self.degree - 1,
            comps: div.comps.iter().map(|c| c.inverse_laplacian()).collect(),
        };
        self.sub(&potential.d()?)
    }

    /// Size-aware tolerance for symbolic zero tests on forms derived from
    /// this one by at most `order` derivatives.
    pub fn symbolic_tolerance(&self, order: i32) -> f64 {
        let f = (2.0 * PI * self.max_freq().max(1) as f64).powi(order);
        1e-10 * (1.0 + self.max_abs_coef()).powi(2) * f
    }

    /// Verifies `d∘d = 0` and `d*∘d* = 0` on this form.
    pub fn self_check(&self) -> Result<()> {
        let tol = self.symbolic_tolerance(2);
        if self.degree + 2 <= self.dim && !self.d()?.d()?.is_zero(tol) {
            return Err(Error::Oracle("d∘d does not vanish".into()));
        }
        if self.degree >= 2 && !self.codifferential()?.codifferential()?.is_zero(tol) {
            return Err(Error::Oracle("d*∘d* does not vanish".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tg() -> AnalyticForm {
        let x = TrigPoly::factor(2, 0, Trig::Cos(1)).mul(&TrigPoly::factor(2, 1, Trig::Sin(1)));
        let y = TrigPoly::factor(2, 0, Trig::Sin(1)).mul(&TrigPoly::factor(2, 1, Trig::Cos(1))).scale(-1.0);
        AnalyticForm::new(2, 1, vec![x, y]).unwrap()
    }

    #[test]
    fn trig_products_match_pointwise() {
        let a = TrigPoly::sin_of(2, &[1, 2]);
        let b = TrigPoly::cos_of(2, &[3, -1]);
        let p = a.mul(&b);
        for x in [[0.1, 0.7], [0.33, 0.05], [0.9, 0.41]] {
            let direct = (2.0 * PI * (x[0] + 2.0 * x[1])).sin() * (2.0 * PI * (3.0 * x[0] - x[1])).cos();
            assert!((p.eval(&x) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let f = TrigPoly::sin_of(2, &[2, 1]).mul(&TrigPoly::cos_of(2, &[0, 3]));
        let h = 1e-6;
        let x = [0.23, 0.61];
        let fd = (f.eval(&[x[0] + h, x[1]]) - f.eval(&[x[0] - h, x[1]])) / (2.0 * h);
        assert!((f.derivative(0).eval(&x) - fd).abs() < 1e-6);
    }

    #[test]
    fn taylor_green_identities() {
        let w = tg();
        let tol = w.symbolic_tolerance(3);
        assert!(w.codifferential().unwrap().is_zero(tol));
        let dw = w.d().unwrap();
        let expect = TrigPoly::factor(2, 0, Trig::Cos(1)).mul(&TrigPoly::factor(2, 1, Trig::Cos(1))).scale(-4.0 * PI);
        assert!(dw.components()[0].sub(&expect).is_zero(tol));
        // nonlinear term is a gradient, so projection removes it
        assert!(w.nonlinear_term().unwrap().project_coclosed().unwrap().is_zero(tol));
        let viscous = dw.codifferential().unwrap();
        assert!(viscous.sub(&w.scale(8.0 * PI * PI)).unwrap().is_zero(tol));
    }

    #[test]
    fn projection_is_idempotent_and_coclosed() {
        let f = AnalyticForm::new(2, 1, vec![TrigPoly::sin_of(2, &[1, 1]), TrigPoly::cos_of(2, &[2, 0])]).unwrap();
        let p = f.project_coclosed().unwrap();
        let tol = f.symbolic_tolerance(2);
        assert!(p.codifferential().unwrap().is_zero(tol));
        assert!(p.project_coclosed().unwrap().sub(&p).unwrap().is_zero(tol));
        // the removed part is orthogonal to the kept part
        let removed = f.sub(&p).unwrap();
        assert!(removed.l2_inner(&p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn star_and_wedge() {
        let dx = AnalyticForm::monomial(TrigPoly::constant(3, 1.0), &[0]).unwrap();
        let dy = AnalyticForm::monomial(TrigPoly::constant(3, 1.0), &[1]).unwrap();
        let dz = AnalyticForm::monomial(TrigPoly::constant(3, 1.0), &[2]).unwrap();
        let dxdy = dx.wedge(&dy).unwrap();
        assert_eq!(dx.hodge_star(), dy.wedge(&dz).unwrap());
        assert_eq!(dy.hodge_star(), dz.wedge(&dx).unwrap());
        assert_eq!(dxdy.hodge_star(), dz);
        assert!(dx.wedge(&dx).unwrap().is_zero(0.0));
        assert_eq!(dy.wedge(&dx).unwrap(), dxdy.scale(-1.0));
    }

    #[test]
    fn d_squared_vanishes_symbolically() {
        let f = AnalyticForm::function(TrigPoly::sin_of(3, &[1, 2, -1]).mul(&TrigPoly::cos_of(3, &[0, 1, 1])));
        f.self_check().unwrap();
        let ddf = f.d().unwrap().d().unwrap();
        assert!(ddf.is_zero(f.symbolic_tolerance(2)));
        let w = f.d().unwrap().wedge(&AnalyticForm::monomial(TrigPoly::cos_of(3, &[1, 0, 0]), &[2]).unwrap()).unwrap();
        w.self_check().unwrap();
    }
}
