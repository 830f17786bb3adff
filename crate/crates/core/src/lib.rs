//! Deterministic, data-parallel microscopic traffic simulation.
//!
//! The crate is organized as a pipeline:
//!
//! * [`network`] compiles raw road geometry into a lane graph with
//!   junction connectors and signal programs.
//! * [`demand`] turns zones into OD matrices and OD matrices into trips.
//! * [`engine`] advances vehicles with IDM car following and randomized
//!   MOBIL lane changes.
//! * [`metrics`] scores simulated output against reference data.
//! * [`io`] reads and writes every on-disk format.

// `!(x > 0.0)` rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod demand;
pub mod engine;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod network;
pub mod rng;
