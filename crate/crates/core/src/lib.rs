//! Numerical laboratory for the Heisenberg group, Laakso graphs and Markov
//! convexity.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distortion;
pub mod embedder;
pub mod error;
pub mod heis;
pub mod inequalities;
pub mod laakso;
pub mod markov;
pub mod sampling;

pub use distortion::{measure, DistortionReport, FiniteMetric, Mode};
pub use embedder::{embed, AngleSchedule, EmbeddedMap};
pub use error::{Error, Result};
pub use heis::{CVector, HPoint, H1};
pub use laakso::{LaaksoGraph, PairClass, VertexId};

// The guide's code blocks run as doctests so the book cannot drift from the
// code.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/heisenberg.md")]
    mod heisenberg {}
    #[doc = include_str!("../../../book/src/laakso.md")]
    mod laakso {}
    #[doc = include_str!("../../../book/src/embedding.md")]
    mod embedding {}
    #[doc = include_str!("../../../book/src/distortion.md")]
    mod distortion {}
    #[doc = include_str!("../../../book/src/markov.md")]
    mod markov {}
    #[doc = include_str!("../../../book/src/inequalities.md")]
    mod inequalities {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
