#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/grids.md")]
mod grids {}

#[doc = include_str!("../../../book/src/signal.md")]
mod signal {}

#[doc = include_str!("../../../book/src/density.md")]
mod density {}

#[doc = include_str!("../../../book/src/radial.md")]
mod radial {}

#[doc = include_str!("../../../book/src/diagnostics.md")]
mod diagnostics {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
