//! warplab: a numerical toolkit for the spectral geometry of warped-product
//! model manifolds and their perturbations.
//!
//! The crate covers four areas:
//!
//! * [`model`] — one-dimensional model geometry: the warping solution of
//!   h'' = H h, sphere/ball volumes, the Green kernel with its analytic
//!   tail, comparison functions against curvature -1, Ricci eigenvalues and
//!   the volume-growth bound for the essential spectrum.
//! * [`spectrum`] — the radial Schrodinger reduction: Dirichlet spectra by
//!   shooting and by matrix discretization, bottom-of-spectrum estimates on
//!   growing truncations, oscillation envelopes and an embedded-eigenvalue
//!   classifier with a dense-matrix cross-check.
//! * [`weyl`] — approximate eigenfunctions built from a complex radial wave
//!   and a C^2 cutoff, and the decay of their quotient
//!   ||Delta u + lambda u||^2 / ||u||^2 over widening windows.
//! * [`mesh`] — discrete potential theory on a polar-grid surface of
//!   revolution with a non-radial perturbation: Green kernel by exhaustion,
//!   the fake distance field it induces, and the level-set / weighted
//!   integral identities that certify it.

pub mod cutoff;
pub mod error;
pub mod mesh;
pub mod model;
pub mod numeric;
pub mod ode;
pub mod profile;
pub mod spectrum;
pub mod weyl;

pub use error::{GeometryError, MeshError, SpectrumError, WeylError};
pub use profile::{AsymptoticClass, CurvatureProfile, ProfileFamily};
