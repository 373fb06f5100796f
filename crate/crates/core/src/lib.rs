//! Q-valued functions in the sense of Almgren, sampled on meshes: the metric
//! G on Q-points, Lipschitz decomposition and selections, integer simplicial
//! chains with push-forwards and a flat norm, multisections, and the normal
//! reparametrization of a Q-valued graph over a curved surface.

pub mod assignment;
pub mod bank;
pub mod chains;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod multisection;
pub mod oracle;
pub mod poly;
pub mod qfields;
pub mod qpoints;
pub mod reparam;
pub mod suites;

pub use error::{Error, Result};

// The guide's code listings run as doctests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/qpoints.md")]
    pub mod qpoints {}
    #[doc = include_str!("../../../book/src/fields.md")]
    pub mod fields {}
    #[doc = include_str!("../../../book/src/chains.md")]
    pub mod chains {}
    #[doc = include_str!("../../../book/src/multisections.md")]
    pub mod multisections {}
    #[doc = include_str!("../../../book/src/reparametrization.md")]
    pub mod reparametrization {}
    #[doc = include_str!("../../../README.md")]
    pub mod readme {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
