//! Translatability of quantum texts.
//!
//! A *text* is an ordered set of distinct unit states, given by its Gram
//! matrix. This crate decides whether a text can be translated, i.e. whether
//! some unitary maps the entangled states
//! `Ω_i = (ψ_i⊗ψ_0 + q ψ_0⊗ψ_i)/√A_i` onto product states `χ_i⊗ψ_i`, and
//! for every positive decision constructs and verifies an explicit witness.
//!
//! Modules:
//! * [`text`]: validation, properties, embeddings and equivalence of texts.
//! * [`graph`]: orthogonality graphs and well-split recognition.
//! * [`translation`]: the translation equations and witness verification.
//! * [`classify`]: the translatability decision procedure.
//! * [`synth`]: witness construction.
//! * [`generate`]: random text generators and a brute-force feasibility oracle.

pub mod classify;
pub mod generate;
pub mod graph;
pub mod json;
pub mod linalg;
pub mod optimize;
pub mod synth;
pub mod text;
pub mod translation;

pub use nalgebra::Complex;

/// Complex scalar used for every inner product and amplitude.
pub type C64 = Complex<f64>;
