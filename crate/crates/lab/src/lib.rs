//! Experiment harness for the `cxlab` toolkit: configuration, dispatch and
//! report serialization.

// `!(x > 0.0)` style range checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod run;
