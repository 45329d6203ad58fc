//! mdBook cannot run a book's code samples as tests, so each chapter is
//! included here as a module doc and `cargo test --doc -p guide-tests`
//! exercises every fenced Rust block. One module per chapter keeps failure
//! origins identifiable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/basis.md")]
pub mod basis {}

#[doc = include_str!("../../../book/src/galerkin.md")]
pub mod galerkin {}

#[doc = include_str!("../../../book/src/solvers.md")]
pub mod solvers {}

#[doc = include_str!("../../../book/src/problems.md")]
pub mod problems {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
