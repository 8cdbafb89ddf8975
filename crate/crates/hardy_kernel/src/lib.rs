pub mod bessel_kernel;
pub mod couplings;
pub mod error;
mod krylov;
pub mod perturbation_engine;
pub mod quadrature;
pub mod special_functions;
pub mod stable_densities;
pub mod subordinated_kernel;
pub mod verification;
