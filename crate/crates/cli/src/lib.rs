//! Experiment runner: configurations, certificates and plot-data emission.
// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod config;
pub mod emit;
pub mod experiments;
