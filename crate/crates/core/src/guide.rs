// The book's code blocks compiled as doctests, one module per chapter so a
// failure names its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/pools.md")]
mod pools {}
#[doc = include_str!("../../../book/src/topology.md")]
mod topology {}
#[doc = include_str!("../../../book/src/generation.md")]
mod generation {}
#[doc = include_str!("../../../book/src/reconciliation.md")]
mod reconciliation {}
#[doc = include_str!("../../../book/src/protocol.md")]
mod protocol {}
#[doc = include_str!("../../../book/src/analytic.md")]
mod analytic {}
#[doc = include_str!("../../../book/src/baseline.md")]
mod baseline {}
#[doc = include_str!("../../../book/src/experiments.md")]
mod experiments {}
