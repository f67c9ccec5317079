//! Numerics for the doubly nonlinear porous medium problem
//!
//! ```text
//! u_t - div(|grad u^m|^(p-2) grad u^m) = f(u)   in Omega x (0, T)
//! u = 0 on the boundary,  u(., 0) = u0 >= 0
//! ```
//!
//! The crate is `no_std` (it needs `alloc`) and carries only the algorithmic
//! pieces: uniform tensor grids and their quadrature ([`mesh`]), source terms
//! and the hypothesis checker ([`nonlinearity`]), the discrete p-Laplacian of
//! `u^m` and the functionals `J`, `I`, `I_delta` ([`operators`]), the
//! potential-well machinery ([`variational`]) and the time stepper with its
//! blow-up / decay diagnostics ([`evolve`]). File formats, configuration and
//! the CLI live in the `pmwell-lab` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
mod linalg;
mod quadrature;
mod rng;

pub mod evolve;
pub mod mesh;
pub mod nonlinearity;
pub mod operators;
pub mod variational;

pub use error::{Error, Result};
pub use evolve::{
    blowup_bound, blowup_report, concavity_series, decay_fit, dissipation_slack, energy_identity_residual,
    integrate_trajectory, step, tighten_m, BlowupReport, DecayFit, DecayMode, Outcome, Scheme,
    StepperConfig, TrajectoryRecord,
};
pub use mesh::{FaceField, Field, Grid};
pub use nonlinearity::{
    check_h, f_eval, growth_constants, primitive_eval, Clause, ConditionReport, GrowthConstants,
    ProblemParams, SourceSpec,
};
pub use operators::{
    energy_j, energy_report, nehari_i, nehari_i_delta, p_laplacian_m, EnergyReport,
};
pub use variational::{
    a_delta, classify_state, embedding_constant, epsilon_delta, epsilon_star, fibering_phi,
    first_eigen_p, r_delta, well_depth, well_depth_with, well_profile, EigenResult, WellClass,
    WellDepth, WellDepthOptions, WellProfile,
};
