//! Charts, Lipschitz graphs and graph transforms for closing orbits and
//! coding hyperbolic measures of holomorphic maps.

pub mod chart;
pub mod closing;
pub mod coding;
pub mod cocycle;
pub mod error;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod orbit;
pub mod system;
pub mod transform;

pub use error::{Error, Result};

/// The guide in `book/`, compiled here so its examples run as doc-tests.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/overview.md")]
    pub struct Overview;
    #[doc = include_str!("../../../book/src/orbits.md")]
    pub struct Orbits;
    #[doc = include_str!("../../../book/src/transforms.md")]
    pub struct Transforms;
    #[doc = include_str!("../../../book/src/closing.md")]
    pub struct Closing;
    #[doc = include_str!("../../../book/src/coding.md")]
    pub struct Coding;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
