//! Exact simulation and closed-form analysis of an epidemic with contact
//! tracing and whole-cluster isolation.
//!
//! Infected individuals contaminate at rate `gamma` (traceably with
//! probability `p`) and are detected at rate `delta`; a detection isolates
//! the detected individual's entire traceable cluster at once. The crate
//! provides
//!
//! - [`model`]: parameter validation and every closed-form law of a typical
//!   cluster (size marginals, isolation age, final size, offspring count);
//! - [`malthus`]: the Malthusian growth exponent and the limiting size
//!   profiles of active and isolated clusters, each computed by independent
//!   routes (series, quadrature, a linear recurrence and an ODE integrator)
//!   that certify one another;
//! - [`sim`]: an exact event-driven simulator with full genealogy and
//!   deterministic seeded replay;
//! - [`stats`]: estimators over traces and the distance and goodness-of-fit
//!   tests used to confront simulation with the formulas;
//! - [`paradox`]: a minimal Poisson-cohort model showing why the empirical
//!   distribution of *observed* (isolated) clusters is biased toward small
//!   sizes under exponential growth, and why the bias vanishes for
//!   sub-exponential growth.
//!
//! The numerical core is generic over the scalar type through
//! [`scalar::Real`]; the simulator works in `f64`, whose 64-bit event clock
//! is part of the reproducibility contract. Concrete aliases for the common
//! instantiations live at the crate root.

pub mod error;
pub mod malthus;
pub mod model;
pub mod numeric;
pub mod paradox;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision parameters, as consumed by the simulator.
pub type Params64 = model::Parameters<f64>;
/// Single-precision parameters, for the generic numerical core.
pub type Params32 = model::Parameters<f32>;
pub type Pmf64 = malthus::Pmf<f64>;
pub type Spectral64 = malthus::SpectralSolution<f64>;
pub type NuTrajectory64 = malthus::NuTrajectory<f64>;
