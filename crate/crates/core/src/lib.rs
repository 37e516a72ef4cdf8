// `!(a < b)` is deliberate: NaN bounds must fail the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod corekit;
pub mod entire;
pub mod cycles;
pub mod rootcount;
pub mod construct;
pub mod verify;
pub mod error;

pub use error::{Error, Result};

/// The guide's chapters, compiled so their snippets run as doc-tests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/exact.md")]
    pub mod exact {}
    #[doc = include_str!("../../../book/src/balls.md")]
    pub mod balls {}
    #[doc = include_str!("../../../book/src/counting.md")]
    pub mod counting {}
    #[doc = include_str!("../../../book/src/cycles.md")]
    pub mod cycles {}
    #[doc = include_str!("../../../book/src/stages.md")]
    pub mod stages {}
    #[doc = include_str!("../../../book/src/verify.md")]
    pub mod verify {}
    #[doc = include_str!("../../../book/src/files.md")]
    pub mod files {}
}
