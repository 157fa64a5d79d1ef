//! Collective single- and double-excitation states of planar ring oligomers
//! of z-polarized two-level emitters coupled through the free-space
//! electromagnetic field.
//!
//! Units: γ₀ = λ₀ = ħ = P₀ = 1, so `k₀ = 2π` and energies are detunings
//! `Δω − iγ/2` in units of γ₀.
//!
//! ```
//! use oligomer::{geometry::build_ring_plus_center, spectra::solve_single};
//!
//! let oligomer = build_ring_plus_center(6, 0.16).unwrap();
//! let spectrum = solve_single(&oligomer).unwrap();
//! let best = spectrum.most_subradiant(0).unwrap();
//! assert!(best.lifetime_enhancement() > 200.0);
//! ```

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drive;
pub mod eig;
pub mod em;
mod error;
pub mod farfield;
pub mod geometry;
pub mod hybrid;
pub mod manifolds;
pub mod par;
pub mod spectra;
pub mod sweep;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use par::Execution;
