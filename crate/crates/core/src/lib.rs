//! Solution series and solution-complex diagnostics for the hypergeometric
//! system of a one-row integer matrix A = (a b), 0 < a < b, gcd(a,b) = 1.
//!
//! The system is generated by two Weyl-algebra operators in the variables
//! x₁, x₂:
//!
//! ```text
//! P = ∂₁ᵇ − ∂₂ᵃ,        E = a·x₁∂₁ + b·x₂∂₂ − β,
//! ```
//!
//! whose solution series near the singular axis Y = {x₂ = 0} are divergent
//! Gevrey series of index s = b/a. This crate constructs the classical
//! Γ-series solution families exactly (arbitrary-precision rationals),
//! estimates Gevrey indices numerically from coefficient growth, solves the
//! constructive recurrences that witness (non-)solvability of P(h) = f, and
//! cross-checks measured solution-space dimensions on jet spaces against the
//! closed-form predictions, at the origin and at points p = (ε, 0) of Y∖{0}.
//!
//! Module map:
//!
//! - [`rational`], [`series`]: exact scalars and sparse two-variable series
//!   with truncation bookkeeping.
//! - [`weyl`]: normal-ordered differential operators; application to series
//!   with guaranteed-region tracking; composition and initial forms.
//! - [`gamma`]: Γ-series families, resonance data, the modified series at
//!   the shifted exponent, minimal-negative-support scans.
//! - [`gevrey`]: ρ_s transform, coefficient-growth index estimation, the
//!   slope scan locating the index gap at b/a.
//! - [`solvers`]: Euler-operator inversion, the P-recurrence and its closed
//!   form, λ-obstruction extraction.
//! - [`ext`]: jet-space kernels of the solution complex, predicted vs
//!   measured dimension tables, monodromy eigenvalues.
//! - [`problem`], [`report`]: the text problem format, command dispatch and
//!   report emission used by the `gkz` binary.

pub mod ext;
pub mod gamma;
pub mod gevrey;
mod linalg;
pub mod problem;
pub mod rational;
pub mod report;
pub mod series;
pub mod solvers;
pub mod weyl;

pub use rational::Rational;
pub use series::{ExponentPair, FloatSeries, RayMeta, SparseSeries, TruncationSpec};
