//! Finite-buffer packet loss near criticality.
//!
//! A renewal stream of packets feeds a buffer of unit capacity drained at a
//! constant rate; packets that do not fit are dropped whole. Near criticality
//! the occupancy is well described by a drift–diffusion process reflected at
//! the empty boundary and absorbed-and-reinjected at the full one, and the
//! dropped traffic maps onto the boundary local time. This crate provides
//! both sides of that correspondence:
//!
//! * an exact event-driven simulator of the packet process ([`sim`]),
//! * the continuum occupancy propagator and its Laplace transform
//!   ([`propagator`]),
//! * closed-form and quadrature-based loss statistics — moments, loss-amount
//!   distributions, window correlations ([`loss`]),
//! * the mapping from traffic descriptions to continuum parameters
//!   ([`traffic`]).

pub mod error;
pub mod loss;
pub mod numerics;
pub mod propagator;
pub mod sim;
pub mod traffic;

pub use error::{Error, Result};
