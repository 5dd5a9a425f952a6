//! Numerical laboratory for `λ_k(A) + |A|` with the fractional Laplacian on
//! disjoint copies of `R^n`.
//!
//! Modules, bottom-up:
//! - [`lattice`]: grids, domains, fields, connected components.
//! - [`gagliardo`]: the discrete Gagliardo form and its region decomposition.
//! - [`spectral`]: Dirichlet eigenpairs, torsion, γ-distance, the objective.
//! - [`rearrange`]: symmetric decreasing rearrangement on the lattice.
//! - [`shape_opt`]: annealing over domains and free-boundary diagnostics.
//! - [`extension`]: the weighted extension solver and the Weiss functional.

pub mod error;
pub mod extension;
pub mod gagliardo;
pub mod lattice;
pub mod rearrange;
pub mod shape_opt;
pub mod spectral;

pub use error::{Error, Result};
pub use gagliardo::{
    assemble_form, assemble_with_table, bilinear, energy_decomposition, interaction_energy,
    rayleigh, EnergyDecomposition, FormMatrix, KernelTable,
};
pub use lattice::{
    connected_components, pair_distance, ComponentDecomposition, ComponentSign, GridSpec,
    KernelParams, LatticeField, LatticePoint, MultiIndicator,
};
