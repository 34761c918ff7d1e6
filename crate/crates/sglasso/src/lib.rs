pub mod asym;
pub mod error;
pub mod io;
pub mod mat;
pub mod metrics;
pub mod penalty;
pub mod pipeline;
pub mod rng;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};

// The guide's code blocks run as doctests so the book cannot drift from the
// API. One module per chapter keeps failures attributable.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/penalties.md")]
    mod penalties {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/limit.md")]
    mod limit {}
    #[doc = include_str!("../../../book/src/panel.md")]
    mod panel {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
