//! The guide under `book/` is an mdbook, which cannot run listings that
//! depend on external crates. Including each chapter as a module's docs lets
//! `cargo test --doc` run them against `twotime` instead. One module per
//! chapter keeps failures traceable to the file they came from.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}
#[doc = include_str!("../../../book/src/boundaries.md")]
pub mod boundaries {}
#[doc = include_str!("../../../book/src/histories.md")]
pub mod histories {}
#[doc = include_str!("../../../book/src/mzi.md")]
pub mod mzi {}
#[doc = include_str!("../../../book/src/born.md")]
pub mod born {}
#[doc = include_str!("../../../book/src/classify.md")]
pub mod classify {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
