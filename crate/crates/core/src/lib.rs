//! Corotating and translating vortex patch pairs obtained by desingularizing
//! a pair of point vortices.
//!
//! Each patch boundary is the image of the unit circle under the conformal
//! trace `phi(w) = w + eps f(w)`. The steady boundary condition is written as
//! a contour-integral equation on the circle, discretized with the spectrally
//! accurate trapezoidal rule, solved by Newton's method at fixed patch scale
//! and continued globally by pseudo-arclength in `(f, eps)`.

pub mod boundary;
pub mod cli_io;
pub mod continuation;
pub mod diagnostics;
pub mod error;
pub mod integrals;
pub mod operator;
pub mod riemann_hilbert;
pub mod solver;

pub use boundary::{FourierBoundary, GridSample, PairKind};


pub use continuation::{BranchRecord, ContinuationSettings, MonitorFloors, Termination};
pub use diagnostics::{Diagnostics, MonitorVector};
pub use solver::{NewtonSettings, SolutionPoint};
pub use error::{Error, Predicate, Result};
pub use integrals::QuadratureRule;
pub use operator::{SinSeries, SpeedKind, SpeedValue};

