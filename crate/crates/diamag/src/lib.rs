//! Numerical laboratory for planar magnetic heat kernels.
//!
//! Three independent routes to the same object — the heat kernel of a
//! two-dimensional magnetic Schrödinger operator with a scalar potential —
//! cross-validate each other:
//!
//! * **closed form** ([`exact`]): constant field plus isotropic oscillator,
//!   evaluated from the explicit kernel;
//! * **spectral** ([`iwatsuka`]): fields depending on one coordinate only,
//!   fibered over the conserved transverse momentum and diagonalized fiber
//!   by fiber; [`radial`] plays the same role for rotation-invariant
//!   problems at the level of ground energies;
//! * **sampling** ([`bridge_mc`]): Brownian-bridge averages of the gauge
//!   phase and potential weight, with reproducible per-sample streams.
//!
//! On top of the evaluators, [`checks`] machine-verifies a family of
//! diamagnetic comparison inequalities (kernel domination under field and
//! potential ordering, Gaussian upper bounds, a constant-field minorant,
//! ground-energy sandwiches) and scans for the known counterexamples that
//! delimit them. Everything is generic over the scalar type through
//! [`scalar::Real`]; the `*64` aliases fix `f64` for ordinary use.

pub mod bridge_mc;
pub mod checks;
pub mod config;
pub mod error;
pub mod exact;
pub mod fields;
pub mod iwatsuka;
pub mod point;
pub mod quad;
pub mod radial;
pub mod scalar;
pub mod tridiag;

pub use error::{Error, Flagged, Flags, Result};
pub use point::Point;
pub use scalar::Real;

pub use bridge_mc::MCEstimate;
pub use checks::{CheckReport, CheckStatus, PairGrid};
pub use exact::MehlerParams;
pub use fields::{FieldProfile, PotentialProfile};
pub use iwatsuka::{Grid1D, SpectralEvaluator, SpectralSettings};
pub use radial::RadialGrid;

pub type Point64 = Point<f64>;
pub type FieldProfile64 = FieldProfile<f64>;
pub type PotentialProfile64 = PotentialProfile<f64>;
pub type MehlerParams64 = MehlerParams<f64>;
pub type Grid1D64 = Grid1D<f64>;
pub type SpectralSettings64 = SpectralSettings<f64>;
pub type RadialGrid64 = RadialGrid<f64>;
pub type PairGrid64 = PairGrid<f64>;
pub type MCEstimate64 = MCEstimate<f64>;
