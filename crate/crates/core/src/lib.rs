//! Computational geometry of half-lightlike submanifolds of semi-Euclidean
//! space.
//!
//! Given a parametric immersion whose induced metric has a one-dimensional
//! radical, this crate constructs the quasi-orthonormal frame (radical field,
//! screen frame, lightlike transversal, screen transversal), extracts the
//! second fundamental forms and shape operators, and machine-verifies the
//! classical structural identities of the setup at sampled chart points.  On
//! top of the frame it builds Newton transformations of screen-foliation
//! shape operators and checks the divergence and mean-curvature identities
//! they satisfy, numerically via order-3 jet arithmetic and, for the
//! space-form integral recurrences, exactly in rational arithmetic.
//!
//! The per-point verification work is embarrassingly parallel; with the
//! `parallel` feature (default) sample points are mapped with rayon, and
//! without it the same code runs sequentially.  Results are aggregated in a
//! deterministic order either way.

pub mod error;
pub mod expr;
pub mod foliation;
pub mod forms;
pub mod halflightlike;
pub mod jets;
pub mod linalg;
pub mod newton;
pub mod scalar;
pub mod semimetric;
pub mod report;
pub mod sample;
pub mod exec;
pub mod spaceform;
pub mod suite;
pub mod umbilic;
