//! Matrix polynomials and matrix fraction descriptions in the delay `z^-1`.

mod matpoly;
mod poly;
mod rtm;
mod stability;

pub use matpoly::{one_step_division, poly_add, poly_eval, poly_mul, MatrixPolyRepr, MatrixPolynomial};
pub use poly::Poly;
pub use rtm::{rtm_inverse, rtm_mul, rtm_simplify, RationalTransferMatrix, RowFraction, RtmRepr, DEFAULT_CANCEL_TOL};
pub use stability::{is_minimum_phase_poly, stability_report, StabilityReport, DEFAULT_STABILITY_TOL};
