//! Strained epitaxial films evolving by anisotropic surface diffusion with a
//! curvature regularization: geometry, energies, a minimizing-movement stepper,
//! linear-stability tools and interpolation-inequality probes.

pub mod anisotropy;
pub mod banded;
pub mod elasticity;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod probes;
pub mod spectral;
pub mod stability;
pub mod stepper;
pub mod surface_pde;

pub use anisotropy::{anisotropic_curvature, Anisotropy, PsiEval};
pub use elasticity::{solve_equilibrium, ElasticField, LameParams, PerturbationField};
pub use error::{FlowError, Result};
pub use geometry::{metrics, surface_integral, volume, Profile, SurfaceMetrics};
pub use spectral::{Backend, Grid};
pub use surface_pde::{hminus1_norm, laplace_beltrami_solve, mm_penalty, PenaltyEval};
pub use energy::{
    criticality_residual, energy_gradient, free_energy, weak_residual, Bulk, BulkModel, EnergyBreakdown, EnergyModel,
    FlowParams, SurfacePotential,
};
pub use stepper::{evolve, evolve_with, incremental_step, EvolutionTrace, StepResult, StepperOptions, TerminalEvent};
pub use probes::{probe_interpolation, ProbeId, ProbeParams, ProbeReport};
pub use stability::{d_loc, grinfeld_j, grinfeld_k, poisson_modulus, second_variation_flat, StabilityReport};
