//! Analytic objects attached to a reproduction law and a self-similarity
//! index α: γ(n, β), the series m(t, β), γ(z, β), the asymptotic coefficient
//! C(β), and the moments of the limit measure ρ.

mod asymptotics;
pub mod dirichlet;
mod gamma;
mod integro;
mod series;

pub use asymptotics::{
    asymptotic_coefficient, asymptotic_coefficient_mp, filippov_lambda, filippov_rho_cdf, filippov_rho_density, homogeneous_m,
    psi_prime_at_malthus, rho_moment, rho_moments, y_moments_consistency, RhoMoments, YMomentReport,
};
pub use dirichlet::{dirichlet_roots, hypergeometric_coefficient, hypergeometric_rho_moment, malthusian_exponent_mp};
pub use gamma::{gamma_n, gamma_z, GammaExtrapolation};
pub use integro::{m_integro, IntegroSolution};
pub use series::{derivative_identity_check, m_series, m_series_with, SeriesEvaluation, SeriesOptions};
