//! Each chapter of the guide as a module, so `cargo test --doc` runs every
//! code block in the book against the current crates.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/estimators.md")]
pub mod estimators {}
#[doc = include_str!("../../../book/src/series.md")]
pub mod series {}
#[doc = include_str!("../../../book/src/plans.md")]
pub mod plans {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
