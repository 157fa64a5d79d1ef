//! Natural units and the free-space electromagnetic kernel.
//!
//! Every quantity is expressed in units of the single-emitter decay rate
//! `γ₀ = 1` and resonant wavelength `λ₀ = 1`, so `k₀ = 2π`. Frequencies
//! enter only as detunings `(ω − ω₀)/γ₀`. Emitter dipoles point along `z`
//! and all emitters lie in the `z = 0` plane.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{domain, Result};

/// Single-emitter decay rate.
pub const GAMMA0: f64 = 1.0;
/// Resonant wavelength.
pub const LAMBDA0: f64 = 1.0;
/// Vacuum wavenumber at resonance, `2π/λ₀`.
pub const K0: f64 = 2.0 * PI / LAMBDA0;
/// Reduced Planck constant.
pub const HBAR: f64 = 1.0;
/// Power scale `ħω₀γ₀` used by the semiclassical radiation pattern.
pub const P0: f64 = 1.0;

pub type Complex3x3 = Matrix3<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dipole-dipole coupling rate `g(r, ω₀)` between two z-oriented emitters
/// separated by `separation` (in λ₀) within the xy-plane, in units of γ₀.
///
/// `g(r) = −(3γ₀/4) e^{ik₀r}/(k₀r) · (1 + i/(k₀r) − 1/(k₀r)²)`
pub fn coupling_rate(separation: f64) -> Result<Complex64> {
    if !(separation > 0.0) || !separation.is_finite() {
        return domain(format!(
            "coupling rate needs a positive finite separation, got {separation}"
        ));
    }
    let x = K0 * separation;
    let radial = Complex64::new(1.0 - 1.0 / (x * x), 1.0 / x);
    Ok(-0.75 * GAMMA0 * Complex64::from_polar(1.0 / x, x) * radial)
}

/// Full dyadic Green's tensor `G₀(r, ω₀)` of free space.
pub fn green_tensor(r: &Vector3<f64>) -> Result<Complex3x3> {
    let dist = r.norm();
    if !(dist > 0.0) || !dist.is_finite() {
        return domain("green tensor is singular at zero separation");
    }
    let x = K0 * dist;
    let prefactor = Complex64::from_polar(1.0 / (4.0 * PI * dist), x);
    let iso = Complex64::new(1.0 - 1.0 / (x * x), 1.0 / x);
    let dyad = Complex64::new(-1.0 + 3.0 / (x * x), -3.0 / x);
    let unit = r / dist;
    let outer = unit * unit.transpose();
    Ok(Complex3x3::from_fn(|i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        prefactor * (iso * delta + dyad * outer[(i, j)])
    }))
}

/// Angular factor of the far-field Green's tensor,
/// `e^{−ik₀ n·r_k} (I − n⊗n) / (4π)`.
///
/// The common `e^{ik₀r}/r` prefactor is dropped: it cancels in every
/// normalized far-field observable.
pub fn green_tensor_farfield(direction: &Vector3<f64>, source: &Vector3<f64>) -> Result<Complex3x3> {
    if (direction.norm() - 1.0).abs() > 1e-12 {
        return domain(format!(
            "far-field direction must be a unit vector (|n| = {})",
            direction.norm()
        ));
    }
    let phase = Complex64::from_polar(1.0 / (4.0 * PI), -K0 * direction.dot(source));
    let projector = Matrix3::identity() - direction * direction.transpose();
    Ok(projector.map(|v| phase * v))
}

/// Lorentz polarizability `α(ω) = −(6π/k₀³)(γ₀/2)/((ω−ω₀) + iγ₀/2)`,
/// returned in units of `1/k₀³`.
pub fn lorentz_polarizability(detuning: f64) -> Complex64 {
    -6.0 * PI * (0.5 * GAMMA0) / (detuning + 0.5 * I * GAMMA0)
}
