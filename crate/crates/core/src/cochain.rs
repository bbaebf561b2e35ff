//! Cochains over elementary cochains, the cup product and the toy metric.
//!
//! For elementary cochains `a` (degree `j`) and `b` (degree `k`) the product
//! `a ∪ b` vanishes unless the two simplices meet in exactly one vertex and
//! span a `(j+k)`-simplex `c`, in which case it is
//! `ε(a,b) · j! k! / (j+k+1)! · c`. The sign ε compares orientations: write
//! `a` so that it ends at the shared vertex and `b` so that it starts there,
//! concatenate, and take the sign of the permutation to the increasing
//! vertex order of `c`. The product is graded commutative but not
//! associative.

use std::sync::Arc;

use nalgebra::DVector;
use num_rational::Rational64;
use num_traits::ToPrimitive;

use crate::complex::{combinations, factorial, SimplicialComplex};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug)]
pub struct Cochain {
    complex: Arc<SimplicialComplex>,
    degree: usize,
    values: DVector<f64>,
}

impl Cochain {
    pub fn new(complex: Arc<SimplicialComplex>, degree: usize, values: DVector<f64>) -> Result<Self> {
        if degree > complex.dim() {
            return Err(Error::DegreeOutOfRange { degree, dim: complex.dim() });
        }
        if values.len() != complex.count(degree) {
            return Err(Error::InvalidArgument(format!(
                "degree-{degree} cochain needs {} values, got {}",
                complex.count(degree),
                values.len()
            )));
        }
        Ok(Self { complex, degree, values })
    }

    pub fn zeros(complex: Arc<SimplicialComplex>, degree: usize) -> Result<Self> {
        let n = complex.count(degree);
        Self::new(complex, degree, DVector::zeros(n))
    }

    /// The cochain valued 1 on simplex `index` and 0 elsewhere.
    pub fn elementary(complex: Arc<SimplicialComplex>, degree: usize, index: usize) -> Result<Self> {
        let mut c = Self::zeros(complex, degree)?;
        if index >= c.values.len() {
            return Err(Error::InvalidArgument(format!("no {degree}-simplex with index {index}")));
        }
        c.values[index] = 1.0;
        Ok(c)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn complex(&self) -> &Arc<SimplicialComplex> {
        &self.complex
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DVector<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    /// Same complex and same degree.
    pub fn check_compatible(&self, other: &Cochain) -> Result<()> {
        if !Arc::ptr_eq(&self.complex, &other.complex) {
            return Err(Error::ComplexMismatch);
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        Ok(())
    }

    pub fn with_values(&self, values: DVector<f64>) -> Cochain {
        assert_eq!(values.len(), self.values.len());
        Cochain { complex: self.complex.clone(), degree: self.degree, values }
    }

    /// `δ` applied to this cochain.
    pub fn coboundary(&self) -> Result<Cochain> {
        let d = self.complex.coboundary(self.degree)?.map(|x| x as f64);
        Ok(Cochain { complex: self.complex.clone(), degree: self.degree + 1, values: d.mul_vec(&self.values) })
    }

    pub fn linear_combination(&self, a: f64, other: &Cochain, b: f64) -> Result<Cochain> {
        self.check_compatible(other)?;
        Ok(self.with_values(&self.values * a + &other.values * b))
    }
}

/// Inner product declaring the elementary cochains orthonormal.
pub fn toy_inner_product(a: &Cochain, b: &Cochain) -> Result<f64> {
    a.check_compatible(b)?;
    Ok(a.values.dot(&b.values))
}

/// One nonzero structure constant: `(e_a ∪ e_b)(e_c) = coef`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CupEntry {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub coef: Rational64,
    pub value: f64,
}

/// Structure constants of the cup product for every `(j, k)` with
/// `j + k ≤ n`, built once per complex from its combinatorics.
#[derive(Clone, Debug)]
pub struct CupTable {
    dim: usize,
    blocks: Vec<Vec<CupEntry>>,
}

/// Sign of the permutation given as a sequence of distinct integers.
fn permutation_sign(seq: &[usize]) -> i64 {
    let mut inversions = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// ε for faces `a`, `b` (increasing local vertex positions of `c`) that share
/// exactly one vertex.
pub fn cup_sign(a: &[usize], b: &[usize]) -> i64 {
    let shared = *a.iter().find(|v| b.contains(v)).expect("faces share a vertex");
    let pa = a.iter().position(|&v| v == shared).expect("in a");
    let pb = b.iter().position(|&v| v == shared).expect("in b");
    let j = a.len() - 1;
    let mut seq: Vec<usize> = a.iter().copied().filter(|&v| v != shared).collect();
    seq.push(shared);
    seq.extend(b.iter().copied().filter(|&v| v != shared));
    // moving the shared vertex to the end of a and to the front of b
    let reorder = if (j - pa + pb).is_multiple_of(2) { 1 } else { -1 };
    reorder * permutation_sign(&seq)
}

/// `j! k! / (j+k+1)!`.
pub fn cup_coefficient(j: usize, k: usize) -> Rational64 {
    Rational64::new((factorial(j) * factorial(k)) as i64, factorial(j + k + 1) as i64)
}

impl CupTable {
    pub fn build(complex: &SimplicialComplex) -> Self {
        let n = complex.dim();
        let mut blocks = vec![Vec::new(); (n + 1) * (n + 1)];
        for m in 0..=n {
            // local face pairs are the same for every m-simplex
            let mut pairs = Vec::new();
            for j in 0..=m {
                let k = m - j;
                let coef = cup_coefficient(j, k);
                for fa in combinations(m + 1, j + 1) {
                    for fb in combinations(m + 1, k + 1) {
                        if fa.iter().filter(|v| fb.contains(v)).count() == 1 {
                            let sign = cup_sign(&fa, &fb);
                            pairs.push((j, k, fa.clone(), fb, coef * Rational64::from_integer(sign)));
                        }
                    }
                }
            }
            for c in 0..complex.count(m) {
                for (j, k, fa, fb, coef) in &pairs {
                    let a = complex.face_index(m, c, fa);
                    let b = complex.face_index(m, c, fb);
                    blocks[j * (n + 1) + k].push(CupEntry {
                        a,
                        b,
                        c,
                        coef: *coef,
                        value: coef.to_f64().expect("small rational"),
                    });
                }
            }
        }
        Self { dim: n, blocks }
    }

    pub fn entries(&self, j: usize, k: usize) -> &[CupEntry] {
        if j + k > self.dim {
            return &[];
        }
        &self.blocks[j * (self.dim + 1) + k]
    }

    pub fn cup(&self, a: &Cochain, b: &Cochain) -> Result<Cochain> {
        if !Arc::ptr_eq(a.complex(), b.complex()) {
            return Err(Error::ComplexMismatch);
        }
        let (j, k) = (a.degree(), b.degree());
        if j + k > self.dim {
            return Err(Error::DegreeOutOfRange { degree: j + k, dim: self.dim });
        }
        let mut out = DVector::zeros(a.complex().count(j + k));
        for e in self.entries(j, k) {
            out[e.c] += e.value * a.values()[e.a] * b.values()[e.b];
        }
        Cochain::new(a.complex().clone(), j + k, out)
    }

    /// Exact cup product of integer-valued cochains.
    pub fn cup_exact(&self, j: usize, a: &[Rational64], k: usize, b: &[Rational64], out_len: usize) -> Vec<Rational64> {
        let mut out = vec![Rational64::from_integer(0); out_len];
        for e in self.entries(j, k) {
            out[e.c] += e.coef * a[e.a] * b[e.b];
        }
        out
    }

    /// Matrix of `b ↦ c ∪ b` from 1-cochains to 2-cochains.
    pub fn cup_right_multiplication_matrix(&self, c: &Cochain) -> Result<CsrMatrix<f64>> {
        if c.degree() != 1 {
            return Err(Error::DegreeMismatch { expected: 1, found: c.degree() });
        }
        if self.dim < 2 {
            return Err(Error::DegreeOutOfRange { degree: 2, dim: self.dim });
        }
        let cx = c.complex();
        let triplets: Vec<_> = self
            .entries(1, 1)
            .iter()
            .map(|e| (e.c, e.b, e.value * c.values()[e.a]))
            .collect();
        Ok(CsrMatrix::from_triplets(cx.count(2), cx.count(1), &triplets))
    }

    /// `L_cᵀ r` for a 1-cochain `c` and 2-cochain values `r`, without
    /// assembling `L_c`.
    pub fn cup_transpose_apply(&self, c: &DVector<f64>, r: &DVector<f64>, out: &mut DVector<f64>) {
        out.fill(0.0);
        for e in self.entries(1, 1) {
            out[e.b] += e.value * c[e.a] * r[e.c];
        }
    }

    /// `c ∪ b` on raw 1-cochain values.
    pub fn cup11_apply(&self, c: &DVector<f64>, b: &DVector<f64>, out: &mut DVector<f64>) {
        out.fill(0.0);
        for e in self.entries(1, 1) {
            out[e.c] += e.value * c[e.a] * b[e.b];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::Cell;

    fn triangle() -> Arc<SimplicialComplex> {
        Arc::new(SimplicialComplex::from_cells(2, 3, &[Cell::new(vec![0, 1, 2])], None).unwrap())
    }

    #[test]
    fn edge_edge_coefficient_is_one_sixth() {
        let k = triangle();
        let t = CupTable::build(&k);
        let e01 = k.find(&[0, 1]).unwrap();
        let e12 = k.find(&[1, 2]).unwrap();
        let a = Cochain::elementary(k.clone(), 1, e01).unwrap();
        let b = Cochain::elementary(k.clone(), 1, e12).unwrap();
        let ab = t.cup(&a, &b).unwrap();
        assert_eq!(ab.values()[0], 1.0 / 6.0);
        let ba = t.cup(&b, &a).unwrap();
        assert_eq!(ba.values()[0], -1.0 / 6.0);
        assert_eq!(cup_coefficient(1, 1), Rational64::new(1, 6));
    }

    #[test]
    fn disjoint_simplices_multiply_to_zero() {
        let cells = [Cell::new(vec![0, 1, 2]), Cell::new(vec![3, 4, 5])];
        let k = Arc::new(SimplicialComplex::from_cells(2, 6, &cells, None).unwrap());
        let t = CupTable::build(&k);
        let a = Cochain::elementary(k.clone(), 1, k.find(&[0, 1]).unwrap()).unwrap();
        let b = Cochain::elementary(k.clone(), 1, k.find(&[3, 4]).unwrap()).unwrap();
        assert!(t.cup(&a, &b).unwrap().values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unit_zero_cochain_is_neutral() {
        let k = triangle();
        let t = CupTable::build(&k);
        let one = Cochain::new(k.clone(), 0, DVector::from_element(3, 1.0)).unwrap();
        let a = Cochain::new(k.clone(), 1, DVector::from_vec(vec![0.3, -1.0, 2.5])).unwrap();
        let left = t.cup(&one, &a).unwrap();
        let right = t.cup(&a, &one).unwrap();
        assert!((left.values() - a.values()).norm() < 1e-15);
        assert!((right.values() - a.values()).norm() < 1e-15);
    }

    #[test]
    fn degree_overflow_and_mismatch() {
        let k = triangle();
        let t = CupTable::build(&k);
        let a = Cochain::zeros(k.clone(), 2).unwrap();
        let b = Cochain::zeros(k.clone(), 1).unwrap();
        assert!(matches!(t.cup(&a, &b), Err(Error::DegreeOutOfRange { .. })));
        let other = triangle();
        let c = Cochain::zeros(other, 1).unwrap();
        assert!(matches!(t.cup(&b, &c), Err(Error::ComplexMismatch)));
        assert!(matches!(toy_inner_product(&b, &c), Err(Error::ComplexMismatch)));
    }

    #[test]
    fn toy_inner_product_examples() {
        let k = triangle();
        let e = |i| Cochain::elementary(k.clone(), 1, i).unwrap();
        assert_eq!(toy_inner_product(&e(0), &e(0)).unwrap(), 1.0);
        assert_eq!(toy_inner_product(&e(0), &e(1)).unwrap(), 0.0);
        let v = e(0).linear_combination(2.0, &e(1), 3.0).unwrap();
        assert_eq!(toy_inner_product(&v, &e(1)).unwrap(), 3.0);
    }

    #[test]
    fn sign_convention_matches_orientation_product() {
        // [0,1] ∪ [1,2] = +[0,1,2]; [1,2] ∪ [0,1] ends/starts at 1 after reordering
        assert_eq!(cup_sign(&[0, 1], &[1, 2]), 1);
        assert_eq!(cup_sign(&[1, 2], &[0, 1]), -1);
        assert_eq!(cup_sign(&[0, 2], &[1, 2]), 1);
        // vertex times edge
        assert_eq!(cup_sign(&[0], &[0, 1]), 1);
        assert_eq!(cup_sign(&[1], &[0, 1]), 1);
    }
}
