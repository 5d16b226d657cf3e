pub mod aggl;
pub mod baselines;
pub mod error;
pub mod geofeatures;
pub mod harness;
pub mod netcore;
pub mod regions;
pub mod synth;

pub use error::{Error, Result};

/// The guide in `book/`, compiled so its snippets stay in sync.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/panels.md")]
    mod panels {}
    #[doc = include_str!("../../../book/src/aggregate-learning.md")]
    mod aggregate_learning {}
    #[doc = include_str!("../../../book/src/nowcasting.md")]
    mod nowcasting {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/geofeatures.md")]
    mod geofeatures {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
