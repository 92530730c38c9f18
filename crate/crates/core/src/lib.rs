//! Numerical laboratory for curve Radon transforms: two-parameter
//! Carnot-Caratheodory balls, mixed norms, exponent regions and the
//! combinatorics behind restricted weak-type estimates.

pub mod calibration;
pub mod ccball;
pub mod decomp;
pub mod exponents;
pub mod geometry;
pub mod lattice;
pub mod mixednorm;
pub mod poly;
pub mod radon;
