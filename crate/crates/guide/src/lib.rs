//! The guide in `book/` as doc-tests: each chapter is attached to a module so
//! `cargo test --doc` runs its code blocks and a failure names the chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}
#[doc = include_str!("../../../book/src/splits.md")]
pub mod splits {}
#[doc = include_str!("../../../book/src/negatives.md")]
pub mod negatives {}
#[doc = include_str!("../../../book/src/similarity.md")]
pub mod similarity {}
#[doc = include_str!("../../../book/src/baseline.md")]
pub mod baseline {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
