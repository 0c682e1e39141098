//! Predator-prey NERA model of illicit drug consumption.
//!
//! The model tracks non-users (N), experimental (E), recreational (R) and
//! addict (A) users as population fractions. Non-users are prey: they grow
//! logistically and are recruited into the user compartments through
//! saturating Holling type II influences; user compartments decay at their
//! own quit rates. The crate provides
//!
//! * the vector field and analytic Jacobian ([`model`]),
//! * closed-form and Newton-refined equilibria ([`equilibria`]) with
//!   eigenvalue stability classification ([`stability`]),
//! * fixed-step RK4 and adaptive Dormand-Prince 5(4) integration
//!   ([`integrate`]),
//! * full Lyapunov spectra with attractor classification ([`lyapunov`]),
//! * bifurcation diagrams over the non-user growth rate `beta1`
//!   ([`bifurcation`]), and
//! * genetic-algorithm parameter estimation from observed prevalence series
//!   ([`calibration`], [`series`]).
//!
//! Two calibrated presets, `colorado` and `washington`, ship with the crate
//! ([`ParameterSet::colorado`], [`ParameterSet::washington`]).

pub mod bifurcation;
pub mod calibration;
pub mod config;
pub mod equilibria;
pub mod integrate;
pub mod lyapunov;
pub mod manifest;
pub mod model;
pub mod params;
pub mod series;
pub mod stability;

pub use config::{ConfigDoc, ConfigError};
pub use equilibria::{
    closed_form_equilibria, find_all_numeric, find_i3, EquilibriumLabel, EquilibriumReport,
};
pub use integrate::{integrate, integrate_at, IntegratorConfig, Scheme, Trajectory};
pub use lyapunov::{classify, lyapunov_spectrum, AttractorClass, LyapunovConfig, LyapunovSpectrum};
pub use model::{holling2, jacobian, vector_field, ModelVariant, State};
pub use params::ParameterSet;
pub use series::ObservedSeries;
pub use stability::{eigenvalues_at, StabilityClass, StabilityReport};
