//! Skinned-body toolkit built around one canonical mesh topology and
//! skeleton.

pub mod animation;
pub mod asset;
pub mod error;
pub mod fit;
pub mod geom;
pub mod inversion;
pub mod metrics;
pub mod synth;
pub mod topo;

pub use error::{Error, ErrorKind, Result};

/// Crate version, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/assets.md")]
    mod assets {}
    #[doc = include_str!("../../../book/src/topology.md")]
    mod topology {}
    #[doc = include_str!("../../../book/src/skeleton.md")]
    mod skeleton {}
    #[doc = include_str!("../../../book/src/animation.md")]
    mod animation {}
    #[doc = include_str!("../../../book/src/inversion.md")]
    mod inversion {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
}
