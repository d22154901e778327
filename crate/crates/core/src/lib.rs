//! Factorial moment expansion (FME) of interference functionals.
//!
//! The crate computes the success probability of a typical link in a planar
//! wireless network as a truncated series whose `i`-th term integrates an
//! expansion kernel against the `(i+1)`-th product density of the transmitter
//! process. Poisson, Matérn hard-core (CSMA) and determinantal transmitter
//! processes are supported, together with rigorous truncation-error bounds
//! and a Monte Carlo simulator that serves as an independent oracle.
//!
//! Module map:
//!
//! * [`geometry`] – points, path-loss models and the link configuration.
//! * [`fading`] – mark distributions and the success functional `F`.
//! * [`models`] – point-process densities and product densities.
//! * [`kernels`] – expansion kernels and their mark expectations.
//! * [`series`] – the expansion engine and its error bound.
//! * [`montecarlo`] – point-process samplers and the success-probability simulator.
//! * [`reference`] – closed-form values used for comparison tables.

pub mod error;
pub mod exec;
pub mod fading;
pub mod geometry;
pub mod kernels;
pub mod models;
pub mod montecarlo;
pub mod quad;
pub mod reference;
pub mod series;
pub mod special;

pub use error::{FmeError, Result};
pub use exec::Execution;
pub use fading::{CustomFunctional, FadingModel, Functional, SuccessFunctional};
pub use geometry::{LinkConfig, PathLoss, Point2};
pub use models::{DppKernel, PointProcess};
pub use series::{FmeRequest, FmeResult, IntegrationPolicy, TermMethod};
