//! Pseudospectral solver for the 3D incompressible Euler equations on the
//! periodic box, instrumented with diagnostics built on the eigenvalues of
//! the deformation tensor.
//!
//! The guide in `book/` walks through the pieces; its code listings are
//! compiled and run as doctests of this crate.

// `!(a > b)` is deliberate where a NaN must count as a failed check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod deformation;
pub mod diagnostics;
pub mod eigen;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod init;
pub mod pointwise;
pub mod reduce;
pub mod snapshot;
pub mod solver;
pub mod spectral;

// The book's listings run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/running.md")]
    mod running {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/extrema.md")]
    mod extrema {}
    #[doc = include_str!("../../../book/src/snapshots.md")]
    mod snapshots {}
}
