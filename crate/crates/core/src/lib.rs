//! Forward and inverse spectral problems for
//!
//!   −(y¹)′ − σ(x) y¹ − σ²(x) y = λ y,   y¹ = y′ − σ y,   x ∈ (0, π),
//!
//! with y¹(0) = 0 and r₁(λ) y¹(π) + r₂(λ) y(π) = 0, where r₁, r₂ are
//! polynomials of the spectral parameter.
//!
//! The inverse solver reconstructs (σ, r₁, r₂) from a finite change of
//! spectral data relative to a known model problem by solving a linear
//! equation on a circle in the λ-plane.

pub mod cauchy;
pub mod config;
pub mod contour;
pub mod error;
pub mod forward;
pub mod inverse;
pub mod io;
pub mod linalg;
pub mod model;
pub mod par;
pub mod presets;
pub mod spectral;
pub mod spectrum;
pub mod sweep;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
