//! Compiles and runs the code blocks of the guide in `book/` as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/tail-estimators.md")]
pub mod tail_estimators {}

#[doc = include_str!("../../../book/src/dependence.md")]
pub mod dependence {}

#[doc = include_str!("../../../book/src/aggregation.md")]
pub mod aggregation {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
