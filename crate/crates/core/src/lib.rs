//! Normal modes of a circular membrane whose areal density varies with radius.
//!
//! The radial equation
//!
//! ```text
//! R'' + R'/r + (rho(r) k'^2 - m^2/r^2) R = 0,    R(a) = 0
//! ```
//!
//! is solved by shooting: the equation is integrated outward from a small
//! radius with Bessel-series initial data, trial values of `k'` are scanned
//! for sign changes of `R(a)`, and each bracket is bisected. Modes are
//! labelled `(m, c)` by nodal diameters and interior nodal circles.
//!
//! Module map:
//!
//! * [`specfun`]: ascending-series Bessel functions `J_m` and their zeros.
//! * [`profiles`]: radial density models and their TOML file format.
//! * [`ode`]: fixed-step Runge–Kutta integration of the radial equation.
//! * [`shooting`]: eigenvalue search and node counting.
//! * [`spectrum`]: ratio tables, harmonicity and audibility.
//! * [`tuner`]: bounded Nelder–Mead fitting of profile parameters.
//! * [`report`]: the reference-table comparison document.
//!
//! With the default `parallel` feature, spectrum sweeps, boundary-value scans
//! and simplex evaluations run on rayon; [`Execution::Sequential`] (or building
//! without the feature) runs everything on the calling thread. Results are
//! identical either way.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ode;
mod par;
pub mod profiles;
pub mod report;
pub mod shooting;
pub mod specfun;
pub mod spectrum;
pub mod tuner;

pub use error::{Error, Result};
pub use ode::{RadialState, Scheme, Trajectory};
pub use par::Execution;
pub use profiles::{DensityProfile, LogExpParams, MembraneSpec, Ring};
pub use shooting::{EigenResult, ModeId, SearchConfig};
pub use spectrum::{HarmonicityReport, RatioTable};
