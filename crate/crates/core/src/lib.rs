//! Distributed LMMSE estimation of a scalar Gaussian source by a wireless
//! sensor network transmitting over a coherent fading multiple-access channel,
//! with spatially correlated observations.
//!
//! * [`geometry`]: node placement and the power-exponential correlation models.
//! * [`estimator`]: the fusion-center LMMSE estimator and its normalized distortion.
//! * [`outage`]: quadratic-form matrices, eigen-spectra and closed-form outage probability.
//! * [`simulation`]: the seeded, thread-count independent Monte Carlo engine.
//! * [`cli`]: experiment runner writing CSV tables and run manifests.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod outage;
pub mod simulation;
pub mod validation;

pub use error::{Error, Result};
pub use estimator::{
    distortion_epa, distortion_fullrank_epa, distortion_rankone_epa, distortion_unity_epa, epa_gain,
    lmmse_estimate, lmmse_weight, normalized_distortion, ChannelParams, FadingRealization, GainVector,
};
pub use geometry::{
    build_correlation, correlation_coefficient, sample_geometry, CorrelationModel, CorrelationParams,
    CorrelationStructure, NetworkGeometry, Position,
};
pub use outage::{
    build_e, eigen_spectrum, lambda_plus, normalized_lambda_plus, outage_closed_form_general,
    outage_closed_form_simplified, outage_epa, weyl_lower_bound, ClosedFormOutage, EigenMode, EigenPolicy,
    EigenSpectrum, QuadraticForms,
};
pub use simulation::{
    draw_fading, mc_distortion_mean, mc_outage, sweep_eigenvalue, sweep_nodes, GeometryMode, MeanEstimate,
    OutagePoint, SimConfig,
};
