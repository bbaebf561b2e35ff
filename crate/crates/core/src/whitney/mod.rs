//! Whitney forms and the de Rham map.
//!
//! Cochains become piecewise linear differential forms through the Whitney
//! map `W`; forms become cochains by integration over simplices (`R`). The
//! Whitney metric on cochains is the `L²` product of their Whitney forms,
//! assembled exactly from barycentric moments.

mod analytic;
mod expr;
mod form;
mod local;
mod mass;
mod quadrature;

pub use analytic::{AnalyticForm, Trig, TrigPoly};
pub use expr::{parse_form, taylor_green};
pub use form::{
    de_rham_analytic, de_rham_poly, l2_distance, l2_inner_poly_analytic, simplex_geometries, whitney_map,
    whitney_map_exact, FormRef, PiecewisePolyForm, QuadratureOptions,
};
pub use local::{eval_compiled, merge_wedge, moment, Coeff, LocalForm, Rational, SimplexGeometry};
pub use mass::whitney_mass_matrix;
pub use quadrature::{gauss_legendre, SimplexRule};
