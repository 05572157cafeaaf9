//! Reconstruction of one-dimensional signals with Steklov sampling operators
//! `S_w^r`, certification of the discrete kernels they are built on, and
//! convergence measurement in Orlicz spaces (sup-norm, Luxemburg norm, and
//! modular convergence).
//!
//! The crate is organized around five subsystems:
//!
//! * [`kernels`] — the registered kernel families (Fejér, Jackson type,
//!   central B-splines), their Fourier transforms, discrete moments, and the
//!   partition-of-unity certificate that checks the time-domain sum against
//!   the equivalent Fourier condition.
//! * [`quad`] — composite Gauss–Legendre quadrature with breakpoint-aligned
//!   panels, adaptive improper integrals over the line with an explicit
//!   divergence flag, a numerical Fourier transform, and the Irwin–Hall
//!   weight that collapses the iterated Steklov integral to one dimension.
//! * [`operator`] — Steklov means `f_{r,h}`, the coefficient net
//!   `f_{r,w}(k/w)`, the sampling series itself, and two independent oracles
//!   (tensor-grid brute force and the Kantorovich operator).
//! * [`orlicz`] — φ-function families, the modular `I^φ`, the Luxemburg norm
//!   by bisection, and the modular-inequality audit.
//! * [`experiments`] — convergence ladders, audits, and report persistence
//!   behind the CLI.
//!
//! Grid evaluation, coefficient computation, and certificate scans are
//! data-parallel via rayon when the `parallel` feature (default) is enabled;
//! disabling it yields a fully sequential build with identical results.

pub mod error;
pub mod exec;
pub mod experiments;
pub mod kernels;
pub mod operator;
pub mod orlicz;
pub mod quad;
pub mod signals;
pub mod special;

pub use error::{Error, Result};
