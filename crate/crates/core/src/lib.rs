//! The Arete noise distribution for ε-differential privacy.
//!
//! Arete noise is `X₁ − X₂ + Y` with two independent Gamma variables and an
//! independent Laplace variable. Its expected magnitude decays like
//! `e^{−ε/4}` and, unlike the Staircase distribution, it is infinitely
//! divisible, so a central noise draw can be split into per-client shares for
//! distributed summation.
//!
//! The crate provides
//! - exact samplers and closed-form moments ([`distributions`]),
//! - per-participant noise shares ([`divisibility`]),
//! - the Arete, Laplace and Staircase mechanisms ([`mechanisms`]),
//! - bin-mass density grids and their convolutions ([`density`]),
//! - empirical and analytic privacy-loss certificates ([`privacy`]),
//! - a local parameter search ([`search`]),
//! - a federated-sum simulator ([`fedsum`]).

pub mod density;
pub mod distributions;
pub mod divisibility;
pub mod error;
pub mod fedsum;
pub mod mechanisms;
pub mod privacy;
pub mod rng;
pub mod search;
pub mod stats;

pub use error::{Error, Result};
pub use rng::RngStream;
