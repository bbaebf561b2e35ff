//! Navier–Stokes and Euler flows on finite cochain complexes.
//!
//! A finite model is a simplicial cochain complex together with the cup
//! product of elementary cochains and a positive definite inner product,
//! either the orthonormal "toy" metric or the Whitney metric obtained by
//! integrating Whitney forms. On such a model the flow
//! `dc/dt = π(T_ν(c))` is defined by the weak pairing
//! `⟨T_ν(c), b⟩ = ⟨δc, c ∪ b⟩ − ν⟨δc, δb⟩` and the projection `π` onto
//! co-closed 1-cochains.
//!
//! Module map:
//! - [`complex`]: oriented (periodic) simplicial complexes, coboundaries, mesh files
//! - [`cochain`]: cochains, the cup product table, the toy inner product
//! - [`whitney`]: Whitney and de Rham maps, local polynomial forms, mass matrices,
//!   quadrature and analytic reference forms on the flat torus
//! - [`hodge`]: adjoints, the co-closed projection, Hodge decomposition
//! - [`flow`]: `T_ν`, time integration and diagnostics
//! - [`experiments`]: refinement studies against smooth references
//! - [`cli`]: the `cochain-flow` command line

pub mod cli;
pub mod cochain;
pub mod complex;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod hodge;
pub mod solve;
pub mod sparse;
pub mod whitney;

pub use cochain::{Cochain, CupTable};
pub use complex::{build_flat_torus, build_icosahedron, subdivide, MeshQuality, SimplicialComplex};
pub use error::{Error, Result};
pub use hodge::{HodgeDecomposition, InnerProductModel, MetricKind};
