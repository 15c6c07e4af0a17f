//! Indefinite binary quadratic forms, closed geodesics on the modular surface,
//! and numerical cycle integrals of hyperbolic Poincare series of weight `2k`.
//!
//! The crate is `no_std` and only needs an allocator. Everything that talks to
//! the outside world (files, command line, JSON) lives in `modgeo-cli`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cycles;
pub mod error;
pub mod geodesics;
pub mod lfun;
pub mod periods;
pub mod poincare;
pub mod qforms;
pub mod specialfn;

pub use error::{Error, Result};
pub use geodesics::{Geodesic, Intersection};
pub use poincare::{Flavor, SeriesEvaluator, SeriesHandle, TruncationPolicy};
pub use qforms::{FormClass, GroupElement, QForm};

/// Complex double used throughout.
pub type C64 = num_complex::Complex64;
