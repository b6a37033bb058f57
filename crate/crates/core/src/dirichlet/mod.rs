//! ζ(s), the Euler product D₀(s) and the named constants of the variance
//! asymptotics, each with an explicit truncation-error estimate.

mod constants;
mod euler;
mod zeta;

pub use constants::{
    c2_by_integration, check_dirichlet_identity, constants, gamma_43_pow6, t_decay_constant,
    Constant, ConstantSet, DirichletCheck, SeriesContext, DEFAULT_PRIME_CUTOFF,
    DEFAULT_SERIES_CUTOFF, GAMMA_4_3, GAMMA_5_3, GAMMA_EULER, WARN_RELATIVE,
};
pub use euler::{d0, euler_factor, prime_tail_bound, D0Evaluator, EulerProductValue};
pub use zeta::zeta;
