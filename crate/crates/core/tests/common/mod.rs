//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use cochain_flow::complex::Cell;
use cochain_flow::whitney::Rational;
use cochain_flow::{build_flat_torus, InnerProductModel, MetricKind, SimplicialComplex};
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn torus(n: usize) -> Arc<SimplicialComplex> {
    Arc::new(build_flat_torus(n, 2).unwrap())
}

pub fn model(n: usize, kind: MetricKind) -> InnerProductModel {
    InnerProductModel::new(torus(n), kind, Default::default()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform values in [-1, 1].
pub fn random_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-1.0..1.0))
}

/// Small integers as exact rationals.
pub fn random_rationals(rng: &mut ChaCha8Rng, len: usize) -> Vec<Rational> {
    (0..len).map(|_| Rational::from_integer(rng.random_range(-3..=3))).collect()
}

/// A combinatorial complex generated by `cells` random `dim`-simplices on
/// `vertices` vertices.
pub fn random_complex(seed: u64, dim: usize, vertices: usize, cells: usize) -> SimplicialComplex {
    let mut r = rng(seed);
    let mut chosen: Vec<Vec<usize>> = Vec::new();
    while chosen.len() < cells {
        let mut s = sample(&mut r, vertices, dim + 1).into_vec();
        s.sort_unstable();
        if !chosen.contains(&s) {
            chosen.push(s);
        }
    }
    let cells: Vec<Cell> = chosen.into_iter().map(Cell::new).collect();
    SimplicialComplex::from_cells(dim, vertices, &cells, None).unwrap()
}

/// Exact integer composition `δ_{k+1} δ_k` as a dense matrix.
pub fn coboundary_square(cx: &SimplicialComplex, k: usize) -> DMatrix<i64> {
    let a = cx.coboundary(k).unwrap();
    let b = cx.coboundary(k + 1).unwrap();
    let dense = |m: &cochain_flow::sparse::CsrMatrix<i64>| {
        let mut d = DMatrix::<i64>::zeros(m.nrows(), m.ncols());
        for (r, c, v) in m.triplets() {
            d[(r, c)] += v;
        }
        d
    };
    dense(&b) * dense(&a)
}

/// Barycentric gradients of a triangle in the plane, rows indexed by vertex.
pub fn planar_gradients(p: &[DVector<f64>]) -> [[f64; 2]; 3] {
    let e1 = [p[1][0] - p[0][0], p[1][1] - p[0][1]];
    let e2 = [p[2][0] - p[0][0], p[2][1] - p[0][1]];
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    // rows of the inverse of [e1 e2] are the gradients of μ_1, μ_2
    let g1 = [e2[1] / det, -e2[0] / det];
    let g2 = [-e1[1] / det, e1[0] / det];
    [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2]
}

/// Classical Whitney basis form of the local face `face` of a triangle at
/// barycentric point `l`, as ambient components.
pub fn classical_whitney(face: &[usize], l: &[f64], g: &[[f64; 2]; 3]) -> Vec<f64> {
    match face.len() {
        1 => vec![l[face[0]]],
        2 => {
            let (i, j) = (face[0], face[1]);
            (0..2).map(|a| l[i] * g[j][a] - l[j] * g[i][a]).collect()
        }
        3 => vec![2.0 * (g[1][0] * g[2][1] - g[1][1] * g[2][0])],
        _ => unreachable!(),
    }
}

/// Elementary rational cochain.
pub fn elementary(len: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::from_integer(0); len];
    v[i] = Rational::from_integer(1);
    v
}

/// `R(W a ∧ W b)` computed exactly on the polynomial side.
pub fn wedge_oracle(
    cx: &Arc<SimplicialComplex>,
    j: usize,
    a: &[Rational],
    k: usize,
    b: &[Rational],
) -> Vec<Rational> {
    use cochain_flow::whitney::{de_rham_poly, whitney_map_exact};
    let wa = whitney_map_exact(cx, j, a).unwrap();
    let wb = whitney_map_exact(cx, k, b).unwrap();
    de_rham_poly(&wa.wedge(&wb).unwrap())
}

/// Dense `M_k` of a planar (or flat-torus) 2-complex by quadrature of the
/// classical Whitney basis, independent of the moment-formula assembly.
pub fn quadrature_mass(cx: &SimplicialComplex, k: usize, degree: usize) -> DMatrix<f64> {
    use cochain_flow::complex::combinations;
    use cochain_flow::whitney::SimplexRule;
    let rule = SimplexRule::new(2, degree);
    let faces = combinations(3, k + 1);
    let mut m = DMatrix::zeros(cx.count(k), cx.count(k));
    for s in 0..cx.count(2) {
        let p = cx.points(2, s).unwrap();
        let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0])).abs();
        let g = planar_gradients(&p);
        let idx: Vec<usize> = faces.iter().map(|f| cx.face_index(2, s, f)).collect();
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let vals: Vec<Vec<f64>> = faces.iter().map(|f| classical_whitney(f, l, &g)).collect();
            for a in 0..faces.len() {
                for b in 0..faces.len() {
                    let dot: f64 = vals[a].iter().zip(&vals[b]).map(|(x, y)| x * y).sum();
                    m[(idx[a], idx[b])] += w * area * dot;
                }
            }
        }
    }
    m
}
