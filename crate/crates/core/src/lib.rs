//! Pre-modular forms `Z^{(n)}_{r,s}(τ)` built from a Painlevé VI polynomial
//! recursion, together with the Lamé monodromy counting formulas they verify.

pub mod elliptic;
pub mod asymptotics;
pub mod counting;
pub mod error;
pub mod painleve;
pub mod poly;
pub mod premodular;
pub mod recursion;
pub mod scalar;
pub mod zeros;

pub use error::{Error, Result};
pub use scalar::{Mp, Scalar};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/elliptic.md")]
    mod elliptic {}
    #[doc = include_str!("../../../book/src/recursion.md")]
    mod recursion {}
    #[doc = include_str!("../../../book/src/painleve.md")]
    mod painleve {}
    #[doc = include_str!("../../../book/src/asymptotics.md")]
    mod asymptotics {}
    #[doc = include_str!("../../../book/src/counting.md")]
    mod counting {}
    #[doc = include_str!("../../../book/src/zeros.md")]
    mod zeros {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
