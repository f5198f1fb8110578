//! Numerical support layer: compensated summation, Gauss–Legendre quadrature,
//! Chebyshev interpolation, and fixed-Talbot Laplace inversion.

pub mod cheb;
pub mod kahan;
pub mod quad;
pub mod talbot;
