//! Exact solutions of the Cosserat rod compatibility equation
//! `∂t κ = ∂s ω + ω × κ`, the point-symmetry group acting on them, inverse
//! reconstruction of the generating functions, and a method-of-lines simulator
//! for the full elastic rod.

pub mod coeffs;
pub mod exprfield;
pub mod linalg3;
pub mod output;
pub mod reconstruct;
pub mod rodsim;
pub mod symmetry;
pub mod verify;

pub use linalg3::{cross, hat, Mat3, Vec3};
