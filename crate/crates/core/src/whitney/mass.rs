//! Whitney mass matrices `M_k[a, b] = ∫ ⟨W(a), W(b)⟩ dV`.

use rayon::prelude::*;

use super::form::simplex_geometries;
use super::local::LocalForm;
use crate::complex::{combinations, SimplicialComplex};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Exact assembly from barycentric moments and per-simplex Gram matrices.
/// Local blocks are computed in parallel and summed in simplex order, so the
/// result does not depend on the thread count.
pub fn whitney_mass_matrix(complex: &SimplicialComplex, k: usize) -> Result<CsrMatrix<f64>> {
    let n = complex.dim();
    if k > n {
        return Err(Error::DegreeOutOfRange { degree: k, dim: n });
    }
    let geometries = simplex_geometries(complex)?;
    let faces = combinations(n + 1, k + 1);
    let basis: Vec<LocalForm<f64>> = faces.iter().map(|f| LocalForm::whitney(n, f)).collect();
    let blocks: Vec<Vec<(usize, usize, f64)>> = geometries
        .par_iter()
        .enumerate()
        .map(|(s, g)| {
            let idx: Vec<usize> = faces.iter().map(|f| complex.face_index(n, s, f)).collect();
            let mut out = Vec::with_capacity(faces.len() * faces.len());
            for i in 0..faces.len() {
                for j in i..faces.len() {
                    let v = basis[i].integrate_inner(&basis[j], g);
                    out.push((idx[i], idx[j], v));
                    if i != j {
                        out.push((idx[j], idx[i], v));
                    }
                }
            }
            out
        })
        .collect();
    let triplets: Vec<_> = blocks.into_iter().flatten().collect();
    let m = complex.count(k);
    Ok(CsrMatrix::from_triplets(m, m, &triplets))
}
