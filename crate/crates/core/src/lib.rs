//! Numerical approximation of extremal toric Kähler metrics.
//!
//! A metric on a toric surface is encoded by a symplectic potential on its
//! moment polygon. Potentials are restricted to `u_can + F` with `F` a
//! polynomial of bounded degree, and the coefficients of `F` are chosen to
//! minimise a scalar-curvature functional evaluated by Gaussian quadrature.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod functionals;
pub mod io;
pub mod optim;
pub mod polytope;
pub mod potential;
pub mod quadrature;

pub use error::{Error, Result};
pub use polytope::{
    build_clw_pentagon, build_square, solve_extremal_affine, ExtremalAffineTarget, MomentPolytope, Vec2,
};
pub use potential::{MonomialBasis, SymplecticPotential};
pub use quadrature::{clw_split_scheme, default_scheme, gauss_legendre, triangulated_scheme, PolytopeQuadrature};

/// Class parameter of the Chen–LeBrun–Weber metric on the two-point blow-up.
pub const CLW_A: f64 = 1.9577128052;
