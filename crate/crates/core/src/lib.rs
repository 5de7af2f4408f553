//! Simulation library for synthetic gauge fields generated by multicolor
//! Rydberg dressing of atom arrays.
//!
//! The crate builds and evolves the exact driven many-atom Hamiltonian,
//! derives the effective flux-lattice model both in closed form and through
//! Floquet perturbation theory, analyzes two-body topological bound states on
//! a cylinder, and quantifies robustness under laser phase noise, Doppler
//! disorder, and Rydberg decay with post-selection.
//!
//! Unit conventions are fixed crate-wide (see [`units`]): lengths in μm,
//! times in μs, and every frequency-like quantity as an angular frequency in
//! rad·μs⁻¹. Interface layers convert from "2π × MHz" once at the boundary.

pub mod basis;
pub mod dynamics;
pub mod effective;
pub mod error;
pub mod floquet;
pub mod formulas;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod scalar;
pub mod spectra;
pub mod units;

/// Concrete scalar used by solvers and all default type aliases.
pub type Real = f64;
/// Complex amplitude over [`Real`].
pub type C64 = num_complex::Complex<Real>;

pub use error::{ModelError, NumericsError};
pub use geometry::ArrayGeometry;
pub use model::{ColorField, DressingConfig, InteractionLaw, NoiseSpec};
