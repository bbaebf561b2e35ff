mod common;

use cochain_flow::solve::dense_cholesky;
use cochain_flow::whitney::{
    de_rham_analytic, l2_distance, parse_form, whitney_map, whitney_map_exact, whitney_mass_matrix, FormRef,
    PiecewisePolyForm,
};
use cochain_flow::{Cochain, MetricKind};
use common::*;
use nalgebra::DVector;

#[test]
fn de_rham_inverts_whitney_on_elementary_cochains() {
    for n in [4, 8] {
        let cx = torus(n);
        for k in 0..=2 {
            let mut worst = 0.0f64;
            for i in 0..cx.count(k) {
                let a = Cochain::elementary(cx.clone(), k, i).unwrap();
                let back = whitney_map(&a).unwrap().de_rham().unwrap();
                worst = worst.max((back.values() - a.values()).amax());
            }
            assert!(worst <= 1e-12, "n = {n}, k = {k}: {worst}");
        }
    }
}

#[test]
fn whitney_map_is_a_chain_map_exactly() {
    let cx = torus(4);
    let mut r = rng(17);
    for k in 0..2 {
        let a = random_rationals(&mut r, cx.count(k));
        let delta = cx.coboundary(k).unwrap();
        let mut da = vec![cochain_flow::whitney::Rational::from_integer(0); cx.count(k + 1)];
        for (row, col, v) in delta.triplets() {
            da[row] += a[col] * v;
        }
        let lhs = whitney_map_exact(&cx, k + 1, &da).unwrap();
        let rhs = whitney_map_exact(&cx, k, &a).unwrap().d().unwrap();
        assert!(lhs.same_function(&rhs), "k = {k}");
    }
}

#[test]
fn mass_matrices_match_quadrature_and_are_positive_definite() {
    let cx = torus(8);
    for k in 0..=2 {
        let m = whitney_mass_matrix(&cx, k).unwrap().to_dense();
        assert!((&m - m.transpose()).amax() <= 1e-14);
        let oracle = quadrature_mass(&cx, k, 8);
        assert!((&m - &oracle).amax() <= 1e-10, "k = {k}");
        assert!(dense_cholesky(m).is_ok());
    }
}

#[test]
fn model_inner_product_is_l2_of_whitney_forms() {
    let m = model(4, MetricKind::Whitney);
    let cx = m.complex().clone();
    let mut r = rng(5);
    let a = random_vector(&mut r, cx.count(1));
    let b = random_vector(&mut r, cx.count(1));
    let oracle = quadrature_mass(&cx, 1, 8);
    let expected = a.dot(&(&oracle * &b));
    assert!((m.inner(1, &a, &b) - expected).abs() <= 1e-10);
}

#[test]
fn de_rham_of_simple_forms() {
    let cx = torus(4);
    let one = de_rham_analytic(&parse_form("1", 2).unwrap(), &cx, &Default::default()).unwrap();
    assert!((one.values() - DVector::from_element(cx.count(0), 1.0)).amax() < 1e-15);
    let dx = de_rham_analytic(&parse_form("dx", 2).unwrap(), &cx, &Default::default()).unwrap();
    for e in 0..cx.count(1) {
        let p = cx.points(1, e).unwrap();
        assert!((dx.values()[e] - (p[1][0] - p[0][0])).abs() < 1e-15);
        assert!([0.0, 0.25].contains(&dx.values()[e].abs()));
    }
}

#[test]
fn wedge_identities() {
    let cx = torus(4);
    let mut r = rng(9);
    let a = Cochain::new(cx.clone(), 1, random_vector(&mut r, cx.count(1))).unwrap();
    let wa = whitney_map(&a).unwrap();
    assert!(wa.wedge(&wa).unwrap().same_function(&PiecewisePolyForm::zero(cx.clone(), 2)));
    let one = whitney_map(&Cochain::new(cx.clone(), 0, DVector::from_element(cx.count(0), 1.0)).unwrap()).unwrap();
    assert!(one.wedge(&wa).unwrap().same_function(&wa));
}

#[test]
fn distances_vanish_on_reproduced_forms() {
    let cx = torus(4);
    let mut r = rng(21);
    let a = Cochain::new(cx.clone(), 1, random_vector(&mut r, cx.count(1))).unwrap();
    let wa = whitney_map(&a).unwrap();
    let wrwa = whitney_map(&wa.de_rham().unwrap()).unwrap();
    let opts = Default::default();
    assert!(l2_distance(FormRef::Poly(&wa), FormRef::Poly(&wrwa), &opts).unwrap() < 1e-12);
    let tg = parse_form("taylor-green", 2).unwrap();
    assert_eq!(l2_distance(FormRef::Analytic(&tg), FormRef::Analytic(&tg), &opts).unwrap(), 0.0);
}

#[test]
fn constant_forms_are_reproduced() {
    // constant 1-forms lie in the Whitney space of a flat mesh
    let cx = torus(4);
    for src in ["dx", "dy", "2 dx - dy"] {
        let f = parse_form(src, 2).unwrap();
        let w = whitney_map(&de_rham_analytic(&f, &cx, &Default::default()).unwrap()).unwrap();
        let err = l2_distance(FormRef::Poly(&w), FormRef::Analytic(&f), &Default::default()).unwrap();
        assert!(err < 1e-12, "{src}: {err}");
    }
}
