//! Higher-order mutual-information feature selection.

pub mod criteria;
pub mod data;
pub mod eval;
pub mod error;
pub mod hofs;
pub mod ica;
pub mod infotheory;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

/// The guide's code blocks, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    struct Intro;
    #[doc = include_str!("../../../book/src/entropy.md")]
    struct Entropy;
    #[doc = include_str!("../../../book/src/criteria.md")]
    struct Criteria;
    #[doc = include_str!("../../../book/src/ica.md")]
    struct Ica;
    #[doc = include_str!("../../../book/src/hofs.md")]
    struct Hofs;
    #[doc = include_str!("../../../book/src/synthetic.md")]
    struct Synthetic;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    struct Evaluation;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
    #[doc = include_str!("../../../README.md")]
    struct Readme;
}
