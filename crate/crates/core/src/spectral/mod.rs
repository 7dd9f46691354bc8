//! Activation matrices, expected iteration matrices and their spectra,
//! conductance, Markov-chain hitting and mixing times, and the FMMC baseline.
//!
//! Every chain here is doubly stochastic, so the stationary distribution is
//! uniform throughout.

mod activation;
mod conductance;
pub mod fmmc;
mod markov;
mod spectrum;

pub use activation::{
    build_activation, expected_iteration_matrix, metropolis_lazy, metropolis_weights,
    ActivationMatrix, Scheme, MASS_TOL,
};
pub use conductance::{
    c_barbell_conductance_closed_form, c_barbell_min_cut_set, cheeger_bounds,
    conductance_of_set, min_conductance_bruteforce, BRUTEFORCE_MAX_NODES,
};
pub use fmmc::{fmmc_subgradient, FmmcConfig, FmmcReference, FmmcResult};
pub use markov::{
    averaging_time_bounds, diameter_eigen_bound_check, hitting_times, mixing_time_empirical,
    neighbor_hitting_bounds, total_variation, DiameterBoundCheck, NeighborHitting, MIXING_CAP,
};
pub use spectrum::{
    barbell_closed_form_spectrum, general_barbell_eigenvalues, normalized_barbell_eigenvalues,
    spectrum, BarbellConstants, BarbellEigenvalues, Spectrum, MULTIPLICITY_TOL,
};

use crate::graphs::WeightedGraph;
use crate::resistance::effective_resistances;
use crate::Result;

/// `λ_{n-1}` of the expected iteration matrix of `scheme` on `g`.
pub fn second_eigenvalue(g: &WeightedGraph, scheme: Scheme) -> Result<f64> {
    let r = match scheme {
        Scheme::Resistance => Some(effective_resistances(g)?),
        _ => None,
    };
    let w = expected_iteration_matrix(&build_activation(g, scheme, r.as_ref())?);
    spectrum(&w)?
        .second_largest()
        .ok_or_else(|| crate::Error::param("graph needs at least two nodes"))
}
