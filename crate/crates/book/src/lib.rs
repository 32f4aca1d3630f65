//! Compiles every Rust snippet of the guide in `book/src` as a doctest, one
//! module per chapter so a failure points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/rule-bases.md")]
pub mod rule_bases {}
#[doc = include_str!("../../../book/src/minimal-inconsistent-subsets.md")]
pub mod minimal_inconsistent_subsets {}
#[doc = include_str!("../../../book/src/measures.md")]
pub mod measures {}
#[doc = include_str!("../../../book/src/case-streams.md")]
pub mod case_streams {}
#[doc = include_str!("../../../book/src/postulates.md")]
pub mod postulates {}
#[doc = include_str!("../../../book/src/synthetic-data.md")]
pub mod synthetic_data {}
#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
