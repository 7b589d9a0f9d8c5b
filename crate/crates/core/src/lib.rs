#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod aggregate;
pub mod bayes;
pub mod capital;
pub mod cell;
pub mod cli;
pub mod dependence;
pub mod dist;
pub mod error;
pub mod fit;
pub mod numeric;
pub mod rng;
