pub mod cli;
pub mod error;
pub mod geometry;
pub mod measurement;
pub mod model;
pub mod qcore;
pub mod rng;
pub mod stategen;
pub mod training;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/states.md")]
    struct States;
    #[doc = include_str!("../../../book/src/ensemble.md")]
    struct Ensemble;
    #[doc = include_str!("../../../book/src/pauli.md")]
    struct Pauli;
    #[doc = include_str!("../../../book/src/model.md")]
    struct Model;
    #[doc = include_str!("../../../book/src/training.md")]
    struct Training;
    #[doc = include_str!("../../../book/src/geometry.md")]
    struct Geometry;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
