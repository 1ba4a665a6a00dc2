//! Mollifier regularization of the Cauchy problem for the inhomogeneous
//! Helmholtz equation `Δu + k²η(x, y)u = S` on `[a, b] × [0, 1]`, with
//! Dirichlet and Neumann data given on `y = 0` only.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod mollifier;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};
pub use grid::Grid2D;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/discretization.md")]
    mod discretization {}
    #[doc = include_str!("../../../book/src/mollifier.md")]
    mod mollifier {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/parameter-choice.md")]
    mod parameter_choice {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    mod numerics {}
}
