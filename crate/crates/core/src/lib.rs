//! Discrete dyadic harmonic analysis on finite grids.

pub mod content;
pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod maximal;
pub mod morrey;
pub mod rearrange;
pub mod singular;
pub mod sparse;
pub mod weights;

pub use dyadic::{CellSet, DyadicCube, DyadicGrid, GridFunction, Pyramid, Weight};
pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/grids.md")]
    pub mod chapter1 {}
    #[doc = include_str!("../../../book/src/rearrangement.md")]
    pub mod chapter2 {}
    #[doc = include_str!("../../../book/src/maximal.md")]
    pub mod chapter3 {}
    #[doc = include_str!("../../../book/src/morrey.md")]
    pub mod chapter4 {}
    #[doc = include_str!("../../../book/src/sparse.md")]
    pub mod chapter5 {}
    #[doc = include_str!("../../../book/src/weights.md")]
    pub mod chapter6 {}
    #[doc = include_str!("../../../book/src/singular.md")]
    pub mod chapter7 {}
    #[doc = include_str!("../../../book/src/content.md")]
    pub mod chapter8 {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub mod chapter9 {}
}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
