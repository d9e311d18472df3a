//! Noncommutative Chern characters of disordered lattice insulators.
//!
//! Covariant operators on finite tori and boxes, the crossed-product calculus
//! (`∂_j`, `𝒯`), Fermi projectors, the Dirac phase of the even Clifford algebra,
//! and the three routes to the top Chern number: the local cocycle on a torus,
//! the Fredholm index on an open box, and a momentum-space oracle.

pub mod clifford;
pub mod cocycle;
pub mod crossed;
pub mod dirac;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod operator;
pub mod oracle;
pub mod spectral;

pub use clifford::{build_clifford, clifford_trace, CliffordRep};
pub use cocycle::{
    central_identity_check, direct_cocycle, lambda_d, lambda_tilde_d, local_cocycle,
    weak_invariant_sigma12, CocycleResult, IdentityCheck, Route,
};
pub use crossed::{
    cesaro_sum, derivation, fourier_assemble, fourier_decompose, locality_profile, trace_t,
    FourierFamily, LocalityProfile,
};
pub use dirac::{
    dirac_phase, fedosov_tindex, kernel_dims, lift, midpoint_grid, random_shifts,
    summability_diagnostic, trace_that, DecayRecord, DiracPhase, ExtendedOperator, IndexValue,
    KernelDims,
};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentKind, ResultRecord};
pub use geometry::{Geometry, GeometryKind};
pub use linalg::C64;
pub use model::{
    atomic_insulator, build_hamiltonian, chain, chern_model, layered_chern_stack, sample_disorder,
    DisorderConfig, HoppingModel,
};
pub use operator::{CovariantOperator, Locality, Provenance};
pub use oracle::{momentum_oracle_chern, OracleResult};
pub use spectral::{fermi_projector, fermi_projector_with_threshold, SpectralProjector};
