//! Numerical toolkit for time-frequency analysis on a periodic grid.
//!
//! The library works with complex-valued functions sampled on the torus
//! `[0, L)^d` (d = 1 or 2) and provides:
//!
//! * discrete Fourier analysis with a continuum-calibrated normalization
//!   ([`grid`]),
//! * alpha-coverings of frequency space and the associated smooth partitions
//!   of unity ([`partition`]),
//! * alpha-modulation norms, band decompositions and discrete atom
//!   expansions ([`modulation`]),
//! * band-limited sampling expansions and Bernstein-type ratio checks
//!   ([`sampling`]),
//! * mixed alpha-modulation kernel norms and boundedness / compactness
//!   certificates for integral operators ([`kernel`]),
//! * totally-bounded-set diagnostics via coefficient tail profiles
//!   ([`tails`]),
//! * short-time Fourier transforms, lattice Gabor frames and the
//!   modulation-space kernel certificates ([`gabor`]).
//!
//! All norm identities that hold only up to equivalence are exposed as
//! measured ratios with explicit tolerance bands; nothing is asserted
//! silently.

pub mod bump;
pub mod error;
pub mod fixtures;
pub mod gabor;
pub mod grid;
pub mod kernel;
pub mod modulation;
pub mod partition;
pub mod report;
pub mod sampling;
pub mod tails;

pub use bump::SmoothBump;
pub use error::{AmkError, Result};
pub use grid::{Grid, Signal, Spectrum};
pub use kernel::{Kernel2D, MixedNormParams, MixedVariant};
pub use modulation::{AtomCoefficients, ModNormParams};
pub use partition::{AlphaPartition, AtomFamily, BandGeometry};
pub use report::{Check, Report};
pub use tails::TailProfile;
