//! Numerical laboratory for curvature identities and weighted integral
//! estimates along four-dimensional Ricci flow.

pub mod curvature;
pub mod forms;
pub mod quadrature;
pub mod scenarios;
pub mod warped;
pub mod monitor;
