//! Toolkit for type-controlled inquisitive question generation.
//!
//! The crate covers the parts of the pipeline that do not need trained
//! weights: corpus handling and model-input construction ([`corpus`]),
//! tokenization and n-gram statistics ([`textproc`]), automatic metrics
//! ([`metrics`]), preference-pair construction and type selection
//! ([`ranking`]), annotation analytics ([`annotation`]) and the boundary to
//! external model services ([`modelio`]). [`pipeline`] wires them into
//! batch commands.

pub mod annotation;
pub mod config;
pub mod corpus;
pub mod metrics;
pub mod modelio;
pub mod pipeline;
pub mod ranking;
pub mod textproc;
