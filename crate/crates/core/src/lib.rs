#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gauge;
pub mod dmrg;
pub mod linalg;
pub mod models;
pub mod spectral;
pub mod tn;
pub mod truncation;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/gauge.md")]
    mod gauge {}
    #[doc = include_str!("../../../book/src/truncation.md")]
    mod truncation {}
    #[doc = include_str!("../../../book/src/dmrg.md")]
    mod dmrg {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
}
