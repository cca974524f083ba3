#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod channels;
pub mod circuit;
pub mod error;
pub mod gf2;
pub mod lindblad;
pub mod measurement;
pub mod ndme;
pub mod oracle;
pub mod runner;
pub mod search;

pub use error::{PqcError, Result};
