//! mdbook cannot link the book's snippets against workspace crates, so each
//! chapter is pulled in as a module doc and `cargo test --doc` runs them.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}
#[doc = include_str!("../../../book/src/tension.md")]
pub mod tension {}
#[doc = include_str!("../../../book/src/contraction.md")]
pub mod contraction {}
#[doc = include_str!("../../../book/src/convergence.md")]
pub mod convergence {}
#[doc = include_str!("../../../book/src/attractors.md")]
pub mod attractors {}
#[doc = include_str!("../../../book/src/glyphs.md")]
pub mod glyphs {}
#[doc = include_str!("../../../book/src/analysis.md")]
pub mod analysis {}
#[doc = include_str!("../../../book/src/files.md")]
pub mod files {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
