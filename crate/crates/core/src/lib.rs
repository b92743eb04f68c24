//! The curved n-body problem on the hyperbolic upper half-plane with the
//! cotangent potential.
//!
//! The crate is organised in five layers:
//!
//! * [`geometry`]: the half-plane model (metric, distance, geodesics, the
//!   Möbius action, and the isometry onto the Poincaré disk);
//! * [`clifford`]: the Clifford algebras `Cl(σ)`, the `SL(2,R)` representation,
//!   Iwasawa factorisation, one-parameter subgroups and their Killing fields;
//! * [`dynamics`]: the singular set, the potential, the equations of motion,
//!   an adaptive integrator, Noether quantities and a weak-form kinetic check;
//! * [`equilibria`]: residual systems for the five classes of Möbius
//!   (relative-equilibrium) solutions, a root finder for the classes that
//!   exist and sampling certificates for the two that do not;
//! * [`flows`]: closed-form flows of the Killing fields and the transport
//!   based invariance verifier.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod clifford;
pub mod dynamics;
pub mod equilibria;
mod error;
pub mod flows;
pub mod geometry;

pub use num_complex::Complex64;

pub use clifford::{
    CliffordNumber, IwasawaFactors, KillingFieldKind, Mat2, MobiusElement, Sigma, SubgroupClass,
};
pub use dynamics::{
    ConservedQuantities, IntegrateOptions, IntegratorStats, SystemState, Trajectory,
};
pub use equilibria::{
    CyclicParams, EquilibriumClass, NonexistenceCertificate, SolveOptions, Symmetry,
};
pub use error::{Error, Result};
pub use flows::{FlowSample, ResidualReport, Transport};
pub use geometry::{CurvatureRadius, GeodesicArc, HalfPlanePoint};

/// The imaginary unit.
pub const I: Complex64 = Complex64::new(0.0, 1.0);
