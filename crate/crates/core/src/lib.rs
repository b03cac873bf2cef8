//! Secrecy outage probability of transmitter selection over frequency
//! selective fading with SC-CP signalling and unreliable wireless backhaul.
//!
//! The crate evaluates the outage probability four independent ways: closed
//! forms ([`analytic`]), their high-SNR floors, adaptive quadrature of the
//! defining integral ([`oracle`]) and Monte Carlo simulation of the selection
//! rules ([`montecarlo`]).

pub mod analytic;
pub mod channel;
pub mod error;
pub mod montecarlo;
pub mod numerics;
pub mod oracle;
pub mod sweep;
pub mod validate;

pub use error::{Result, SopError};
