//! Numerical laboratory for free-boundary compressible resistive MHD written in
//! Lagrangian coordinates on the slab `T^2 x (0,1)`.
//!
//! The pieces, bottom up: [`grid`] (function spaces and norms), [`smoothing`]
//! (tangential mollifier), [`geometry`] (flow-map calculus), [`state`]
//! (equation of state and initial data), [`correction`] (harmonic correction
//! term), [`linear_step`] (one linearized iterate), [`picard`] (outer iteration
//! and smoothing-length sweep), [`diagnostics`] and [`cli`].

pub mod error;
pub mod cli;
pub mod corpus;
pub mod diagnostics;
pub mod correction;
pub mod geometry;
pub mod grid;
pub mod linear_step;
pub mod picard;
pub mod smoothing;
pub mod state;

pub use error::{Error, Result};
