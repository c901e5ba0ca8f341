//! Möbius-invariant surface theory on sampled conformal immersions of
//! 2-tori: Schwarzian derivative and Hopf differential extraction, conformal
//! integrability checks, surface reconstruction from invariants, and the
//! KdV / Novikov-Veselov / Davey-Stewartson deformation flows with
//! conservation-law monitoring.
//!
//! The crate is organized bottom-up:
//! * [`grid`] / [`grid1d`]: pseudospectral calculus on the torus and circle,
//! * [`lightcone`]: Minkowski linear algebra and the projective light-cone
//!   model of the conformal n-sphere,
//! * [`kdv`]: the classical Schwarzian of maps to CP^1 and the KdV hierarchy,
//! * [`invariants`]: normalized lifts, central sphere frames, the invariants
//!   (c, kappa) and the conformal Gauss/Codazzi/Ricci residuals,
//! * [`reconstruct`]: the fundamental-theorem direction, integrating a frame
//!   from (c, kappa) for surfaces in S^3,
//! * [`flows`]: the conformal deformation engine and the named flows,
//! * [`special`]: isothermic / Willmore / CMC characterizations and the
//!   corpus of closed-form test surfaces in [`surfaces`],
//! * [`elliptic`]: Jacobi elliptic functions for the branched corpus map,
//! * [`io`]: field files, OBJ meshes, CSV series, hashing.

pub mod elliptic;
pub mod error;
pub mod flows;
pub mod grid;
pub mod grid1d;
pub mod invariants;
pub mod io;
pub mod kdv;
pub mod lightcone;
pub mod reconstruct;
pub mod special;
pub mod surfaces;

pub use error::{Error, Result};
pub use grid::{ScalarField, TorusLattice, VectorField};
pub use grid1d::{LineField, LineLattice};
