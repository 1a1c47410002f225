//! Scattering on a weighted finite graph with one attached semi-infinite path.
//!
//! The crate computes the reflection coefficient `R(z) = -Q(1/z)/Q(z)` of the
//! instance, enumerates its evanescent, half-bound and confined bound states,
//! computes the winding number of `R` around the unit circle two independent
//! ways (argument principle on the reduced rational form, and adaptive phase
//! tracking), and checks the Levinson identity
//! `w = 2(m - n_b - n_c) - n_h` as an exact integer equation.
//!
//! Module map:
//!
//! * [`graph`]: validated instances and pointwise evaluators for `C`, `Q`, `R`.
//! * [`eigen`]: cyclic Jacobi eigensolver for small dense Hermitian matrices.
//! * [`poly`] / [`rational`]: real polynomials, root finding, the reduced
//!   rational form of `Q` and `R`, and argument-principle winding.
//! * [`spectra`]: bound-state census, amplitudes and eigen-residual checks.
//! * [`winding`]: phase-tracking winding on the unit circle.
//! * [`levinson`]: degenerate reduction, verification, fuzz instances and the
//!   truncated-lattice oracle.
//! * [`instance`]: the JSON instance file format used by the CLI.

pub mod eigen;
pub mod error;
pub mod graph;
pub mod instance;
pub mod levinson;
pub mod poly;
pub mod rational;
pub mod spectra;
pub mod winding;

pub use error::{Error, Result};
pub use graph::{GraphSpec, SpectralData, SpectralLine};
pub use levinson::{verify, VerificationReport};

/// Complex scalar used for all amplitudes and weights.
pub type Complex = num_complex::Complex64;
