// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod solver;
pub mod subproblem;
pub mod trace;
