//! Numerical toolkit for pairs of Riemannian metrics on a single chart.
//!
//! Given two metrics `g`, `gbar` presented as matrix fields over shared
//! coordinates, the crate constructs the family of quadratic first integrals
//! attached to the pair, integrates geodesic flows, measures Poisson brackets
//! and conservation drift, applies the Sinjukov transform, and discretizes the
//! associated commuting second-order operators on regular grids. A small
//! catalog provides the classical sphere/ellipsoid examples plus a
//! non-equivalent control pair.
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std` feature
//! enables threaded batch helpers. IO, file formats, and the command line
//! front end live in the companion `geoequiv` binary crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod catalog;
pub mod chart;
pub mod error;
pub mod expr;
pub mod flow;
pub mod integrals;
pub mod linalg;
pub mod metric;
pub mod operators;
pub mod quantum;
pub mod sample;

pub(crate) mod par;
pub(crate) mod real;

pub use chart::Chart;
pub use error::{Error, Result};
pub use expr::Expression;
pub use flow::GeodesicTrace;
pub use integrals::{IntegralFamily, PhasePoint};
pub use linalg::Mat;
pub use metric::{EmbeddingMap, MetricField};
pub use operators::{CharPoly, MetricPair, OperatorAtPoint};
