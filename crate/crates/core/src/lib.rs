//! Lifting paths through the exponential map of a pseudo-Riemannian chart.

pub mod cli;
pub mod connect;
pub mod dual;
pub mod error;
pub mod expr;
pub mod flow;
pub mod geometry;
pub mod lifting;
pub mod manifold;
