//! The book chapters, compiled as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/tokens.md")]
pub mod tokens {}
#[doc = include_str!("../../../book/src/commands.md")]
pub mod commands {}
#[doc = include_str!("../../../book/src/alignment.md")]
pub mod alignment {}
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/construction.md")]
pub mod construction {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
