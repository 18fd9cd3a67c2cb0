//! The book chapters, compiled so that their code blocks run as doc-tests.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}

#[doc = include_str!("../../../book/src/scalars.md")]
pub mod scalars {}

#[doc = include_str!("../../../book/src/tensors.md")]
pub mod tensors {}

#[doc = include_str!("../../../book/src/quartics.md")]
pub mod quartics {}

#[doc = include_str!("../../../book/src/orbit.md")]
pub mod orbit {}

#[doc = include_str!("../../../book/src/model_spaces.md")]
pub mod model_spaces {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
