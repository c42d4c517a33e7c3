//! Shared numerical kernels: special functions, adaptive quadrature and
//! bracketing root finding.

pub mod quad;
pub mod roots;
pub mod special;
