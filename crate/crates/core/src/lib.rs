//! A desk-scale laboratory for stochastic models of particle-laden flows.
//!
//! Two formulations of the same transport problems live side by side:
//!
//! * **Langevin**: stochastic differential equations driven by Wiener
//!   increments, simulated by Euler-Maruyama ensembles ([`langevin`]) and,
//!   at the density level, by a Fokker-Planck finite-difference solver
//!   ([`fokker_planck`]).
//! * **Random-coefficient (Liouville)**: the Wiener process is replaced by
//!   time-invariant random coefficients multiplying deterministic basis
//!   functions, which turns the density evolution into a first-order
//!   hyperbolic equation solvable exactly along characteristics
//!   ([`characteristics`], [`analytic`]).
//!
//! With standard-normal coefficients the two formulations agree; with
//! non-Gaussian coefficients the random-coefficient route produces skewed
//! and bounded densities that no Wiener-driven model can reach. The
//! [`fhhs`] module applies the machinery to fluidized homogeneous heating
//! systems, including data-driven calibration of the model constants.
//!
//! All ensemble computations are data-parallel over paths or coefficient
//! draws (rayon behind the `parallel` feature, on by default) and
//! reproducible bit for bit for a given seed regardless of thread count.

pub mod analytic;
pub mod characteristics;
pub mod dist;
pub mod error;
pub mod exec;
pub mod fhhs;
pub mod fokker_planck;
pub mod langevin;
pub mod models;
pub mod moments;
pub mod numeric;
pub mod pdf;
pub mod rng;
pub mod special;

pub use dist::CoefficientDistribution;
pub use error::{Error, Result};
pub use models::{FhhsModel, Model, PositionModel, RandomForcingModel, VelocityModel};
pub use pdf::{Grid1d, PdfCurve};
