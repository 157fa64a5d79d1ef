//! Classical response of the array to a focused Bessel beam: coupled-dipole
//! solutions and normalized scattering cross sections.
//!
//! Only `E_z` is kept: the emitters are polarizable along z alone. The
//! Green's tensor is frozen at ω₀ and only the polarizability disperses,
//! so the coupled-dipole matrix is `(Δ + iγ₀/2) − H¹` up to a scalar.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eig::{CMatrix, CVector};
use crate::em::{lorentz_polarizability, GAMMA0, K0};
use crate::error::{domain, Error, Result};
use crate::farfield::{power_kernel, SphereGrid};
use crate::geometry::EmitterArray;
use crate::manifolds::coupling_matrix;
use crate::par::{self, Execution};

/// Default cone half-angle of the beam, 60°.
pub const DEFAULT_CONE_HALF_ANGLE: f64 = PI / 3.0;

/// Relative residual allowed for a coupled-dipole solve.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

/// Cylindrical Bessel function `J_n(x)` by Miller's backward recurrence,
/// normalized with `J₀ + 2Σ J_{2k} = 1`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let sign = if x < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
    let x = x.abs();
    let order = (n as f64).max(x);
    let start = 2 * (((order + 20.0 + (40.0 * (order + 1.0)).sqrt()) as usize) / 2);
    let (mut next, mut cur) = (0.0_f64, 1e-30_f64);
    let (mut norm, mut value) = (0.0_f64, 0.0_f64);
    for k in (1..=start).rev() {
        // cur = t_k, next = t_{k+1}
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if k - 1 == n as usize {
            value = cur;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            value *= 1e-250;
        }
    }
    norm += cur;
    sign * value / norm
}

/// Scalar Bessel beam along z with total angular momentum `ℓ + s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselBeam {
    pub oam_ell: i32,
    pub spin_s: i32,
    /// Cone half-angle `θ_b` in radians.
    pub cone_half_angle: f64,
    pub amplitude_e0: f64,
}

impl BesselBeam {
    pub fn new(oam_ell: i32, spin_s: i32) -> Result<Self> {
        Self::with_cone(oam_ell, spin_s, DEFAULT_CONE_HALF_ANGLE)
    }

    pub fn with_cone(oam_ell: i32, spin_s: i32, cone_half_angle: f64) -> Result<Self> {
        if !(-1..=1).contains(&spin_s) {
            return domain(format!("spin must be -1, 0 or +1, got {spin_s}"));
        }
        if !(cone_half_angle > 0.0 && cone_half_angle < PI / 2.0) {
            return domain(format!("cone half-angle must lie in (0, π/2), got {cone_half_angle}"));
        }
        Ok(Self { oam_ell, spin_s, cone_half_angle, amplitude_e0: 1.0 })
    }

    pub fn m_total(&self) -> i32 {
        self.oam_ell + self.spin_s
    }

    pub fn scaled(mut self, amplitude_e0: f64) -> Self {
        self.amplitude_e0 = amplitude_e0;
        self
    }
}

/// `E_z = E₀ J_{|m|}(k₀ sinθ_b ρ) e^{imφ} e^{ik₀ cosθ_b z}`.
pub fn bessel_field_z(beam: &BesselBeam, position: &Vector3<f64>) -> Complex64 {
    let m = beam.m_total();
    let rho = position.x.hypot(position.y);
    let phi = position.y.atan2(position.x);
    let radial = bessel_j(m.unsigned_abs(), K0 * beam.cone_half_angle.sin() * rho);
    let phase = m as f64 * phi + K0 * beam.cone_half_angle.cos() * position.z;
    Complex64::from_polar(beam.amplitude_e0 * radial, phase)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DipoleSolution {
    /// z-components `d_k`, in units of `E₀/k₀³`.
    pub dipole_moments: CVector,
    pub drive_detuning: f64,
    /// `‖M d − rhs‖/‖rhs‖` of the solve.
    pub residual: f64,
}

/// Coupled-dipole system of one geometry and beam, reusable across detunings.
#[derive(Debug, Clone)]
pub struct DipoleSystem {
    coupling: CMatrix,
    field: CVector,
}

impl DipoleSystem {
    pub fn new(geometry: &EmitterArray, beam: &BesselBeam) -> Result<Self> {
        let field = CVector::from_iterator(geometry.len(), geometry.positions().iter().map(|r| bessel_field_z(beam, r)));
        Ok(Self { coupling: coupling_matrix(geometry)?, field })
    }

    pub fn incident_field(&self) -> &CVector {
        &self.field
    }

    /// Solve `d = α E + (G/(Δ + iγ₀/2)) d`, i.e. `((Δ + iγ₀/2) − G) d = (Δ + iγ₀/2) α E`.
    pub fn solve(&self, detuning: f64) -> Result<DipoleSolution> {
        if !detuning.is_finite() {
            return domain(format!("detuning must be finite, got {detuning}"));
        }
        let n = self.field.len();
        let shift = Complex64::new(detuning, 0.5 * GAMMA0);
        let alpha = lorentz_polarizability(detuning);
        let matrix = CMatrix::identity(n, n) * shift - &self.coupling;
        let rhs = &self.field * (shift * alpha);
        let lu = matrix.clone().lu();
        let d = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Singular(format!("coupled-dipole matrix is singular at Δ = {detuning}")))?;
        let scale = rhs.norm().max(f64::MIN_POSITIVE);
        let residual = (&matrix * &d - &rhs).norm() / scale;
        if !(residual <= SOLVE_RESIDUAL_TOL) {
            let cond = matrix.norm() * matrix.try_inverse().map_or(f64::INFINITY, |m| m.norm());
            return Err(Error::Singular(format!(
                "coupled-dipole solve at Δ = {detuning} has residual {residual:.3e} (condition ≈ {cond:.3e})"
            )));
        }
        Ok(DipoleSolution { dipole_moments: d, drive_detuning: detuning, residual })
    }
}

pub fn solve_coupled_dipoles(geometry: &EmitterArray, beam: &BesselBeam, detuning: f64) -> Result<DipoleSolution> {
    DipoleSystem::new(geometry, beam)?.solve(detuning)
}

/// Resonant point-scatterer cross section `k₀⁴|α|²/(6π)` in units of λ₀².
pub fn single_emitter_cross_section(detuning: f64) -> f64 {
    lorentz_polarizability(detuning).norm_sqr() / (6.0 * PI * K0 * K0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScsPoint {
    pub detuning: f64,
    /// `σ(ω)/(Nσ₀(ω))`, or the reason this point failed.
    pub value: std::result::Result<f64, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScsSpectrum {
    pub points: Vec<ScsPoint>,
}

impl ScsSpectrum {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.value.is_err()).count()
    }

    /// `(detuning, value)` of successful points, in grid order.
    pub fn valid(&self) -> (Vec<f64>, Vec<f64>) {
        self.points.iter().filter_map(|p| p.value.as_ref().ok().map(|v| (p.detuning, *v))).unzip()
    }
}

/// Normalized scattering cross section
/// `σ/(Nσ₀) = 3 d†K d / (8πN |α E_z(0)|²)` over a detuning grid, with the
/// angular kernel `K` integrated once on `grid`.
pub fn scattering_cross_section_sweep(
    geometry: &EmitterArray,
    beam: &BesselBeam,
    detunings: &[f64],
    grid: &SphereGrid,
    exec: Execution,
) -> Result<ScsSpectrum> {
    let reference = bessel_field_z(beam, &Vector3::zeros());
    if reference.norm() == 0.0 {
        return domain(format!(
            "beam with total angular momentum {} has no field at the origin; σ₀ is undefined",
            beam.m_total()
        ));
    }
    let system = DipoleSystem::new(geometry, beam)?;
    let kernel = power_kernel(geometry, grid, exec);
    let n = geometry.len() as f64;
    let points = par::map(exec, detunings, |&detuning| {
        let value = system.solve(detuning).map(|sol| {
            let d = &sol.dipole_moments;
            let radiated = (d.adjoint() * &kernel * d)[(0, 0)].re;
            let single = (lorentz_polarizability(detuning) * reference).norm_sqr();
            3.0 * radiated / (8.0 * PI * n * single)
        });
        ScsPoint { detuning, value }
    });
    Ok(ScsSpectrum { points })
}

/// Evenly spaced grid including both end points.
pub fn linspace(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 || !(max > min) || !min.is_finite() || !max.is_finite() {
        return domain(format!("grid needs min < max and at least two points (got [{min}, {max}], {steps})"));
    }
    let h = (max - min) / (steps - 1) as f64;
    Ok((0..steps).map(|i| if i == steps - 1 { max } else { min + h * i as f64 }).collect())
}

/// Local maximum of a sampled spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFeature {
    pub index: usize,
    pub detuning: f64,
    pub value: f64,
}

/// Interior samples larger than their left neighbour and not smaller than their right one.
pub fn find_features(x: &[f64], y: &[f64]) -> Vec<SpectralFeature> {
    (1..y.len().saturating_sub(1))
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
        .map(|i| SpectralFeature { index: i, detuning: x[i], value: y[i] })
        .collect()
}

/// Complex pole `x₀ − iw/2` of a fitted line shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub center: f64,
    /// Full width at half maximum of the pole's Lorentzian, `2|Im pole|`.
    pub width: f64,
}

/// Rational model `y ≈ N(u)/D(u)` on the scaled axis `u = (x − center)/half`,
/// with a monic denominator of degree `2·n_poles`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFit {
    center: f64,
    half: f64,
    scale: f64,
    /// Ascending powers of `u`.
    numerator: Vec<f64>,
    denominator: Vec<f64>,
}

impl RationalFit {
    pub fn n_poles(&self) -> usize {
        (self.denominator.len() - 1) / 2
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.half;
        let horner = |c: &[f64]| c.iter().rev().fold(0.0, |acc, c| acc * u + c);
        self.scale * horner(&self.numerator) / horner(&self.denominator)
    }

    /// Largest `|fit − y|/|y|` over the samples.
    pub fn max_relative_residual(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(&x, &y)| (self.eval(x) - y).abs() / y.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Complex poles in the lower half plane, sorted by center.
    pub fn resonances(&self) -> Result<Vec<Resonance>> {
        let deg = self.denominator.len() - 1;
        let mut companion = CMatrix::zeros(deg, deg);
        for i in 1..deg {
            companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for j in 0..deg {
            companion[(j, deg - 1)] = Complex64::new(-self.denominator[j], 0.0);
        }
        let mut resonances: Vec<Resonance> = crate::eig::eig_dense_complex(&companion)?
            .into_iter()
            .filter(|p| p.value.im < 0.0)
            .map(|p| Resonance { center: self.center + self.half * p.value.re, width: 2.0 * self.half * p.value.im.abs() })
            .collect();
        if resonances.len() != self.n_poles() {
            return Err(Error::Singular(format!(
                "resonance fit produced {} complex poles for {} requested",
                resonances.len(),
                self.n_poles()
            )));
        }
        resonances.sort_by(|p, q| p.center.total_cmp(&q.center));
        Ok(resonances)
    }
}

/// Fit `y ≈ N(x) / Π_j ((x − x_j)² + w_j²/4)` with `n_poles` conjugate pole
/// pairs and a numerator of degree `2·n_poles`.
///
/// Linearized least squares (Levy) refined by Sanathanan–Koerner
/// reweighting on relative residuals.
pub fn fit_rational(x: &[f64], y: &[f64], n_poles: usize) -> Result<RationalFit> {
    let deg = 2 * n_poles;
    let unknowns = 2 * deg + 1;
    if n_poles == 0 || x.len() != y.len() || x.len() < 2 * unknowns {
        return domain("resonance fit needs at least one pole and enough samples");
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let (center, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let u: Vec<f64> = x.iter().map(|v| (v - center) / half).collect();
    let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let yn: Vec<f64> = y.iter().map(|v| v / scale).collect();

    // relative residuals, so the tall narrow lines do not swamp the broad ones
    let floor = 1e-12;
    let mut weights: Vec<f64> = yn.iter().map(|y| 1.0 / y.abs().max(floor)).collect();
    let mut denominator = vec![0.0; deg + 1];
    let mut numerator = vec![0.0; deg + 1];
    for _ in 0..30 {
        // unknowns: d_0..d_{deg−1}, n_0..n_deg; D is monic
        let mut a = DMatrix::<f64>::zeros(u.len(), unknowns);
        let mut b = DVector::<f64>::zeros(u.len());
        for (row, (&ui, &yi)) in u.iter().zip(&yn).enumerate() {
            let w = weights[row];
            let mut p = 1.0;
            for j in 0..=deg {
                if j < deg {
                    a[(row, j)] = w * yi * p;
                }
                a[(row, deg + j)] = -w * p;
                if j == deg {
                    b[row] = -w * yi * p;
                }
                p *= ui;
            }
        }
        let solution = a
            .svd(true, true)
            .solve(&b, 1e-300)
            .map_err(|e| Error::Singular(format!("resonance fit: {e}")))?;
        let mut next = solution.rows(0, deg).iter().copied().collect::<Vec<_>>();
        next.push(1.0);
        let change = next.iter().zip(&denominator).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        denominator = next;
        numerator = solution.rows(deg, deg + 1).iter().copied().collect();
        for ((w, &ui), &yi) in weights.iter_mut().zip(&u).zip(&yn) {
            let d = denominator.iter().rev().fold(0.0, |acc, c| acc * ui + c);
            *w = 1.0 / (d.abs() * yi.abs().max(floor)).max(1e-300);
        }
        if change < 1e-13 {
            break;
        }
    }
    Ok(RationalFit { center, half, scale, numerator, denominator })
}

/// Resonances of the fit with `n_poles` pole pairs, sorted by center.
pub fn fit_resonances(x: &[f64], y: &[f64], n_poles: usize) -> Result<Vec<Resonance>> {
    fit_rational(x, y, n_poles)?.resonances()
}

/// Resonances of the lowest-order rational fit (at most `max_poles` pole
/// pairs) that reproduces every sample to relative accuracy `tol`.
///
/// Unlike local maxima, this counts an asymmetric (Fano-shaped) line on a
/// sloping background once.
pub fn resolve_resonances(x: &[f64], y: &[f64], max_poles: usize, tol: f64) -> Result<Vec<Resonance>> {
    let mut worst = f64::INFINITY;
    for n in 1..=max_poles {
        if let Ok(fit) = fit_rational(x, y, n) {
            let residual = fit.max_relative_residual(x, y);
            if residual <= tol {
                if let Ok(lines) = fit.resonances() {
                    return Ok(lines);
                }
            }
            worst = worst.min(residual);
        }
    }
    Err(Error::NoConvergence { worst_residual: worst })
}
