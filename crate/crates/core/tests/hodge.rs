mod common;

use std::sync::Arc;

use cochain_flow::{build_icosahedron, subdivide, Cochain, InnerProductModel, MetricKind};
use common::*;
use nalgebra::DVector;

const KINDS: [MetricKind; 2] = [MetricKind::Toy, MetricKind::Whitney];

#[test]
fn projection_is_an_orthogonal_projection_onto_coclosed_cochains() {
    for kind in KINDS {
        let m = model(4, kind);
        let ne = m.complex().count(1);
        let mut r = rng(1);
        for _ in 0..100 {
            let c = random_vector(&mut r, ne);
            let b = random_vector(&mut r, ne);
            let pc = m.project_coclosed_values(&c).unwrap();
            let pb = m.project_coclosed_values(&b).unwrap();
            let scale = m.norm(1, &c);
            assert!(m.norm(1, &(m.project_coclosed_values(&pc).unwrap() - &pc)) <= 1e-10 * scale);
            assert!((m.inner(1, &pc, &b) - m.inner(1, &c, &pb)).abs() <= 1e-10 * scale * m.norm(1, &b));
            assert!(m.coclosed_residual(&pc).unwrap() <= 1e-10 * scale);
        }
    }
}

#[test]
fn exact_cochains_are_annihilated_and_coclosed_fixed() {
    for kind in KINDS {
        let m = model(4, kind);
        let mut r = rng(2);
        let f = random_vector(&mut r, m.complex().count(0));
        let df = m.coboundary(0).mul_vec(&f);
        assert!(m.norm(1, &m.project_coclosed_values(&df).unwrap()) <= 1e-10 * m.norm(1, &df));
        let c = m.project_coclosed_values(&random_vector(&mut r, m.complex().count(1))).unwrap();
        assert!((m.project_coclosed_values(&c).unwrap() - &c).amax() <= 1e-12);
        assert!(m.inner(1, &c, &df).abs() <= 1e-10 * m.norm(1, &c) * m.norm(1, &df));
    }
}

#[test]
fn adjoint_coboundary_satisfies_its_defining_identity() {
    for kind in KINDS {
        let m = model(4, kind);
        let mut r = rng(3);
        for k in 0..2 {
            let a = random_vector(&mut r, m.complex().count(k));
            let b = random_vector(&mut r, m.complex().count(k + 1));
            let lhs = m.inner(k + 1, &m.coboundary(k).mul_vec(&a), &b);
            let rhs = m.inner(k, &a, &m.adjoint_coboundary_values(k, &b).unwrap());
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        }
        let b = random_vector(&mut r, m.complex().count(2));
        let twice = m.adjoint_coboundary_values(0, &m.adjoint_coboundary_values(1, &b).unwrap()).unwrap();
        assert!(twice.amax() <= 1e-9 * b.amax());
    }
}

#[test]
fn harmonic_dimension_is_topological() {
    for kind in KINDS {
        for n in [2, 3, 4, 8] {
            let b = model(n, kind).harmonic_basis().unwrap();
            assert_eq!(b.vectors.len(), 2, "torus {n}, {kind:?}");
            assert!(b.gap >= 1e3, "gap {} on torus {n}", b.gap);
        }
        for sphere in [build_icosahedron(), subdivide(&build_icosahedron()).unwrap()] {
            let m = InnerProductModel::new(Arc::new(sphere), kind, Default::default()).unwrap();
            let b = m.harmonic_basis().unwrap();
            assert!(b.vectors.is_empty());
            assert!(b.gap >= 1e3);
        }
    }
}

#[test]
fn harmonic_vectors_are_closed_coclosed_and_orthonormal() {
    for kind in KINDS {
        let m = model(4, kind);
        let b = m.harmonic_basis().unwrap();
        for (i, h) in b.vectors.iter().enumerate() {
            assert!(m.coboundary(1).mul_vec(h.values()).amax() <= 1e-8);
            assert!(m.coclosed_residual(h.values()).unwrap() <= 1e-8);
            for (j, g) in b.vectors.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((m.inner(1, h.values(), g.values()) - expected).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn decomposition_of_random_cochains() {
    for kind in KINDS {
        let m = model(4, kind);
        let mut r = rng(4);
        for _ in 0..5 {
            let c = Cochain::new(m.complex().clone(), 1, random_vector(&mut r, m.complex().count(1))).unwrap();
            let d = m.hodge_decompose(&c).unwrap();
            let (recon, ortho) = d.residuals(&m, &c).unwrap();
            assert!(recon <= 1e-10 && ortho <= 1e-10, "{recon} {ortho}");
        }
        let h = m.harmonic_basis().unwrap().vectors[0].clone();
        let d = m.hodge_decompose(&h).unwrap();
        assert!(d.exact.values().amax() <= 1e-10 && d.coexact.values().amax() <= 1e-10);
        assert!((d.harmonic.values() - h.values()).amax() <= 1e-10);
    }
}

#[test]
fn toy_adjoint_is_the_transpose() {
    let m = model(4, MetricKind::Toy);
    let b = DVector::from_fn(m.complex().count(1), |i, _| i as f64);
    assert_eq!(m.adjoint_coboundary_values(0, &b).unwrap(), m.coboundary(0).tr_mul_vec(&b));
}
