//! Far-field radiation patterns, radiated power and two-photon correlations.
//!
//! Directions use `n = (sinθ cosφ, sinθ sinφ, cosθ)`. All emitters are
//! z-polarized, so every far-field amplitude carries the same polarization
//! factor `e_z − n (n·e_z)`; only the array factor `Σ_k e^{−ik₀n·r_k} c_k`
//! depends on the state.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eig::{CMatrix, CVector};
use crate::em::K0;
use crate::error::{domain, Result};
use crate::geometry::EmitterArray;
use crate::manifolds::PairIndex;
use crate::par::{self, Execution};

/// Total power radiated by one emitter, `(3/32π)·(8π/3)·P₀ = P₀/4`.
pub const P_SINGLE: f64 = 0.25;

/// Prefactor `3/(32π)` of the radiation pattern.
pub const PATTERN_PREFACTOR: f64 = 3.0 / (32.0 * PI);

pub const DEFAULT_THETA_NODES: usize = 64;
pub const DEFAULT_PHI_NODES: usize = 128;

/// Single-photon intensity below which a g² point is masked.
pub const G2_INTENSITY_FLOOR: f64 = 1e-12;

pub fn direction(theta: f64, phi: f64) -> Vector3<f64> {
    let s = theta.sin();
    Vector3::new(s * phi.cos(), s * phi.sin(), theta.cos())
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let dp = legendre(n, x).1;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Product grid on the sphere with solid-angle weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// `w_i` such that `∫ f dΩ ≈ Σ_ij w_i f(θ_i, φ_j)`.
    pub theta_weights: Vec<f64>,
    pub phi_step: f64,
}

impl SphereGrid {
    /// Gauss–Legendre in `cosθ`, trapezoid in `φ`.
    pub fn gauss_legendre(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 1 || n_phi < 1 {
            return domain("sphere grid needs at least one node per axis");
        }
        let (x, w) = gauss_legendre(n_theta);
        // ascending θ means descending cosθ
        let theta = x.iter().rev().map(|c| c.acos()).collect();
        let theta_weights = w.into_iter().rev().collect();
        Ok(Self::with_theta(theta, theta_weights, n_phi))
    }

    /// Midpoint grid in `θ` (weights `sinθ Δθ`), convenient for plotting.
    pub fn uniform(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 1 || n_phi < 1 {
            return domain("sphere grid needs at least one node per axis");
        }
        let step = PI / n_theta as f64;
        let theta: Vec<f64> = (0..n_theta).map(|i| (i as f64 + 0.5) * step).collect();
        let theta_weights = theta.iter().map(|t| t.sin() * step).collect();
        Ok(Self::with_theta(theta, theta_weights, n_phi))
    }

    fn with_theta(theta: Vec<f64>, theta_weights: Vec<f64>, n_phi: usize) -> Self {
        let phi_step = 2.0 * PI / n_phi as f64;
        let phi = (0..n_phi).map(|j| j as f64 * phi_step).collect();
        Self { theta, phi, theta_weights, phi_step }
    }

    pub fn len(&self) -> usize {
        self.theta.len() * self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(θ, φ, weight)` of flat index `q = i·n_φ + j`.
    pub fn node(&self, q: usize) -> (f64, f64, f64) {
        let (i, j) = (q / self.phi.len(), q % self.phi.len());
        (self.theta[i], self.phi[j], self.theta_weights[i] * self.phi_step)
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        (0..self.len()).map(|q| self.node(q).2 * values[q]).sum()
    }
}

impl Default for SphereGrid {
    fn default() -> Self {
        Self::gauss_legendre(DEFAULT_THETA_NODES, DEFAULT_PHI_NODES).expect("default grid")
    }
}

/// Real samples on a sphere grid; `mask[q]` is false where undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldMap {
    pub grid: SphereGrid,
    /// Row-major `θ × φ`.
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl FarFieldMap {
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        let q = i * self.grid.phi.len() + j;
        self.mask[q].then_some(self.values[q])
    }

    pub fn n_theta(&self) -> usize {
        self.grid.theta.len()
    }

    pub fn n_phi(&self) -> usize {
        self.grid.phi.len()
    }

    /// `(θ, φ, value)` of the largest defined sample.
    pub fn argmax(&self) -> Option<(f64, f64, f64)> {
        (0..self.values.len())
            .filter(|&q| self.mask[q])
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .map(|q| {
                let (t, p, _) = self.grid.node(q);
                (t, p, self.values[q])
            })
    }

    /// Largest defined value at polar index `i` over all `φ`.
    pub fn theta_profile(&self) -> Vec<Option<f64>> {
        (0..self.n_theta())
            .map(|i| (0..self.n_phi()).filter_map(|j| self.value(i, j)).reduce(f64::max))
            .collect()
    }

    /// Rows of `(θ, φ, value, mask)`; masked values are reported as NaN.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, bool)> + '_ {
        (0..self.values.len()).map(move |q| {
            let (t, p, _) = self.grid.node(q);
            let v = if self.mask[q] { self.values[q] } else { f64::NAN };
            (t, p, v, self.mask[q])
        })
    }
}

/// Phases `e^{−ik₀ n·r_k}` for every emitter.
pub fn phase_factors(n: &Vector3<f64>, geometry: &EmitterArray) -> CVector {
    CVector::from_iterator(
        geometry.len(),
        geometry.positions().iter().map(|r| Complex64::from_polar(1.0, -K0 * n.dot(r))),
    )
}

pub fn array_factor(amplitudes: &CVector, geometry: &EmitterArray, n: &Vector3<f64>) -> Complex64 {
    phase_factors(n, geometry).iter().zip(amplitudes.iter()).map(|(w, c)| w * c).sum()
}

/// `p(θ, φ) = (3/32π) sin²θ |Σ_k e^{−ik₀n·r_k} c_k|²` in units of `P₀`.
pub fn pattern_value(amplitudes: &CVector, geometry: &EmitterArray, theta: f64, phi: f64) -> f64 {
    let af = array_factor(amplitudes, geometry, &direction(theta, phi));
    PATTERN_PREFACTOR * theta.sin().powi(2) * af.norm_sqr()
}

fn check_amplitudes(amplitudes: &CVector, geometry: &EmitterArray) -> Result<()> {
    if amplitudes.len() != geometry.len() {
        return domain(format!("{} amplitudes for {} emitters", amplitudes.len(), geometry.len()));
    }
    let norm = amplitudes.norm_squared();
    if (norm - 1.0).abs() > 1e-8 {
        return domain(format!("amplitudes must be normalized (Σ|c|² = {norm})"));
    }
    Ok(())
}

pub fn radiation_pattern(
    amplitudes: &CVector,
    geometry: &EmitterArray,
    grid: &SphereGrid,
    exec: Execution,
) -> Result<FarFieldMap> {
    check_amplitudes(amplitudes, geometry)?;
    let values = par::map_range(exec, grid.len(), |q| {
        let (t, p, _) = grid.node(q);
        pattern_value(amplitudes, geometry, t, p)
    });
    Ok(FarFieldMap { grid: grid.clone(), mask: vec![true; values.len()], values })
}

/// Total radiated power `∫ p dΩ` in units of `P₀`.
pub fn total_power(map: &FarFieldMap) -> f64 {
    map.grid.integrate(&map.values)
}

/// `K_lk = Σ_q w_q sin²θ_q e^{−ik₀ n_q·(r_k − r_l)}`, so that
/// `∫ sin²θ |Σ_k e^{−ik₀n·r_k} d_k|² dΩ = d† K d`.
pub fn power_kernel(geometry: &EmitterArray, grid: &SphereGrid, exec: Execution) -> CMatrix {
    let n = geometry.len();
    let parts = par::map_range(exec, grid.theta.len(), |i| {
        let mut k = CMatrix::zeros(n, n);
        let s2 = grid.theta[i].sin().powi(2);
        for &p in &grid.phi {
            let w = phase_factors(&direction(grid.theta[i], p), geometry);
            k += (&w.conjugate() * w.transpose()) * Complex64::new(grid.theta_weights[i] * grid.phi_step * s2, 0.0);
        }
        k
    });
    parts.into_iter().fold(CMatrix::zeros(n, n), |acc, k| acc + k)
}

/// `P/P_single` of an amplitude vector from a precomputed kernel.
pub fn power_ratio_from_kernel(amplitudes: &CVector, kernel: &CMatrix) -> f64 {
    let p = (amplitudes.adjoint() * kernel * amplitudes)[(0, 0)].re;
    PATTERN_PREFACTOR * p / P_SINGLE
}

/// Detector placements of the correlation maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorConfig {
    /// Detector 1 on the +z axis, detector 2 scans the sphere.
    PolarFixed,
    /// Both detectors at the same scanning direction.
    Coincident,
}

/// Two detector directions `(θ, φ)` in the far zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorPair {
    pub r1: (f64, f64),
    pub r2: (f64, f64),
}

impl DetectorPair {
    pub fn new(r1: (f64, f64), r2: (f64, f64)) -> Result<Self> {
        for (t, p) in [r1, r2] {
            if !(0.0..=PI).contains(&t) || !p.is_finite() {
                return domain(format!("invalid detector direction (θ = {t}, φ = {p})"));
            }
        }
        Ok(Self { r1, r2 })
    }

    pub fn swapped(self) -> Self {
        Self { r1: self.r2, r2: self.r1 }
    }
}

/// Symmetric pair-amplitude matrix `c_kl = c_lk` from wedge amplitudes.
pub fn pair_matrix(wedge: &CVector, n: usize) -> Result<CMatrix> {
    let index = PairIndex::new(n);
    if wedge.len() != index.len() {
        return domain(format!("{} pair amplitudes for {} emitters", wedge.len(), n));
    }
    let mut c = CMatrix::zeros(n, n);
    for (p, &(k, l)) in index.pairs().iter().enumerate() {
        c[(k, l)] = wedge[p];
        c[(l, k)] = wedge[p];
    }
    Ok(c)
}

/// Precomputed pair matrix for repeated g² evaluation.
#[derive(Debug, Clone)]
pub struct PairState<'a> {
    geometry: &'a EmitterArray,
    pairs: CMatrix,
}

impl<'a> PairState<'a> {
    pub fn new(wedge: &CVector, geometry: &'a EmitterArray) -> Result<Self> {
        Ok(Self { geometry, pairs: pair_matrix(wedge, geometry.len())? })
    }

    /// Reduced single-photon intensity `Σ_l |Σ_k w_k c_kl|²`.
    pub fn intensity(&self, theta: f64, phi: f64) -> f64 {
        let w = phase_factors(&direction(theta, phi), self.geometry);
        (self.pairs.transpose() * w).norm_squared()
    }

    /// `g²(r₁, r₂)`; `None` where either single-photon intensity vanishes.
    ///
    /// The common polarization factor of both detectors cancels between the
    /// numerator and the product of intensities, leaving
    /// `|Σ_{k≠l} w_k(n₁) c_kl w_l(n₂)|² / (I(n₁) I(n₂))`.
    pub fn g2(&self, pair: &DetectorPair) -> Option<f64> {
        let w1 = phase_factors(&direction(pair.r1.0, pair.r1.1), self.geometry);
        let w2 = phase_factors(&direction(pair.r2.0, pair.r2.1), self.geometry);
        let v1 = self.pairs.transpose() * &w1;
        let i1 = v1.norm_squared();
        let i2 = (self.pairs.transpose() * &w2).norm_squared();
        if !(i1 > G2_INTENSITY_FLOOR && i2 > G2_INTENSITY_FLOOR) {
            return None;
        }
        let s: Complex64 = v1.iter().zip(w2.iter()).map(|(a, b)| a * b).sum();
        Some(s.norm_sqr() / (i1 * i2))
    }
}

pub fn g2(wedge: &CVector, geometry: &EmitterArray, pair: &DetectorPair) -> Result<Option<f64>> {
    Ok(PairState::new(wedge, geometry)?.g2(pair))
}

pub fn g2_map(
    wedge: &CVector,
    geometry: &EmitterArray,
    config: DetectorConfig,
    grid: &SphereGrid,
    exec: Execution,
) -> Result<FarFieldMap> {
    let norm = wedge.norm_squared();
    if (norm - 1.0).abs() > 1e-8 {
        return domain(format!("pair amplitudes must be normalized (Σ|c|² = {norm})"));
    }
    let state = PairState::new(wedge, geometry)?;
    let samples = par::map_range(exec, grid.len(), |q| {
        let (t, p, _) = grid.node(q);
        let pair = match config {
            DetectorConfig::PolarFixed => DetectorPair { r1: (0.0, 0.0), r2: (t, p) },
            DetectorConfig::Coincident => DetectorPair { r1: (t, p), r2: (t, p) },
        };
        state.g2(&pair)
    });
    let mask = samples.iter().map(Option::is_some).collect();
    let values = samples.into_iter().map(|v| v.unwrap_or(0.0)).collect();
    Ok(FarFieldMap { grid: grid.clone(), values, mask })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::green_tensor_farfield;
    use crate::geometry::{build_double_ring, build_ring, build_ring_plus_center, build_single};
    use crate::spectra::solve_single;
    use rand::{Rng, SeedableRng};

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn sphere_grid_area_and_sin_cubed() {
        let grid = SphereGrid::default();
        let ones = vec![1.0; grid.len()];
        assert!((grid.integrate(&ones) - 4.0 * PI).abs() < 1e-12);
        let s2: Vec<f64> = (0..grid.len()).map(|q| grid.node(q).0.sin().powi(2)).collect();
        assert!((grid.integrate(&s2) - 8.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_emitter_dipole_pattern() {
        let single = build_single();
        let c = CVector::from_element(1, Complex64::new(1.0, 0.0));
        let map = radiation_pattern(&c, &single, &SphereGrid::default(), Execution::Sequential).unwrap();
        let peak = pattern_value(&c, &single, PI / 2.0, 0.0);
        for (t, _, v, _) in map.rows() {
            assert!((v / peak - t.sin().powi(2)).abs() < 1e-14);
        }
        assert!((total_power(&map) - P_SINGLE).abs() < 1e-14);
    }

    #[test]
    fn ring_states_respect_rotation() {
        let ring = build_ring(6, 0.2).unwrap();
        let step = 2.0 * PI / 6.0;
        for state in solve_single(&ring).unwrap().states {
            for (t, p) in [(0.3, 0.1), (1.2, 2.0), (PI / 2.0, 4.4)] {
                let a = pattern_value(&state.amplitudes, &ring, t, p);
                let b = pattern_value(&state.amplitudes, &ring, t, p + step);
                assert!((a - b).abs() < 1e-12 * a.max(1e-300));
            }
        }
        // m = 0: flat up to the ring's J_6 harmonic, tiny for a small ring
        let small = build_ring(6, 0.1).unwrap();
        let c = CVector::from_element(6, Complex64::new(1.0 / 6f64.sqrt(), 0.0));
        for t in [0.4, 1.0, PI / 2.0] {
            let row: Vec<f64> = (0..64).map(|j| pattern_value(&c, &small, t, j as f64 * PI / 32.0)).collect();
            let (lo, hi) = row.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            assert!(hi - lo < 1e-4 * hi);
        }
    }

    #[test]
    fn power_equals_decay_rate() {
        let grid = SphereGrid::default();
        for geometry in [
            build_ring(6, 0.1).unwrap(),
            build_ring_plus_center(6, 0.16).unwrap(),
            build_double_ring(6, 0.16, 2.2).unwrap(),
        ] {
            let kernel = power_kernel(&geometry, &grid, Execution::Parallel);
            for state in solve_single(&geometry).unwrap().states {
                let map = radiation_pattern(&state.amplitudes, &geometry, &grid, Execution::Sequential).unwrap();
                let ratio = total_power(&map) / P_SINGLE;
                assert!((ratio - state.gamma()).abs() < 1e-6 * state.gamma().max(1.0));
                let via_kernel = power_ratio_from_kernel(&state.amplitudes, &kernel);
                assert!((via_kernel - ratio).abs() < 1e-10);
            }
        }
    }

    fn random_wedge(n: usize, seed: u64) -> CVector {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = n * (n - 1) / 2;
        let mut c = CVector::from_fn(m, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        c /= Complex64::new(c.norm(), 0.0);
        c
    }

    #[test]
    fn g2_exchange_symmetry() {
        let geometry = build_double_ring(6, 0.16, 2.2).unwrap();
        let state = PairState::new(&random_wedge(12, 3), &geometry).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut dir = || (rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI));
            let pair = DetectorPair::new(dir(), dir()).unwrap();
            let (a, b) = (state.g2(&pair).unwrap(), state.g2(&pair.swapped()).unwrap());
            assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        }
    }

    #[test]
    fn g2_invariant_under_global_phase() {
        let geometry = build_ring(5, 0.2).unwrap();
        let c = random_wedge(5, 8);
        let rotated = c.map(|z| z * Complex64::from_polar(1.0, 0.7));
        let pair = DetectorPair::new((0.4, 1.0), (2.0, -0.3)).unwrap();
        let a = g2(&c, &geometry, &pair).unwrap().unwrap();
        let b = g2(&rotated, &geometry, &pair).unwrap().unwrap();
        assert!((a - b).abs() < 1e-10 * a);
    }

    /// Field operators applied to the explicit two-excitation state in the
    /// full 2^N Fock space, with vector far-field Green's tensors.
    fn fock_space_g2(wedge: &CVector, geometry: &EmitterArray, n1: &Vector3<f64>, n2: &Vector3<f64>) -> f64 {
        let n = geometry.len();
        let dim = 1usize << n;
        let index = PairIndex::new(n);
        let mut psi = vec![Complex64::new(0.0, 0.0); dim];
        for (p, &(k, l)) in index.pairs().iter().enumerate() {
            psi[(1 << k) | (1 << l)] = wedge[p];
        }
        let lower = |state: &[Complex64], n_dir: &Vector3<f64>, alpha: usize| {
            let mut out = vec![Complex64::new(0.0, 0.0); dim];
            for (basis, amp) in state.iter().enumerate() {
                for k in 0..n {
                    if basis & (1 << k) != 0 {
                        let g = green_tensor_farfield(n_dir, &geometry.positions()[k]).unwrap();
                        out[basis & !(1 << k)] += g[(alpha, 2)] * amp;
                    }
                }
            }
            out
        };
        let norm2 = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let mut numerator = 0.0;
        for beta in 0..3 {
            let first = lower(&psi, n2, beta);
            for alpha in 0..3 {
                numerator += norm2(&lower(&first, n1, alpha));
            }
        }
        let intensity = |d: &Vector3<f64>| (0..3).map(|a| norm2(&lower(&psi, d, a))).sum::<f64>();
        numerator / (intensity(n1) * intensity(n2))
    }

    #[test]
    fn g2_matches_fock_space_construction() {
        let geometry = EmitterArray::from_points(&[[0.0, 0.0], [0.13, 0.02], [-0.05, 0.21], [0.3, -0.11]]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for seed in 0..5 {
            let c = random_wedge(4, seed);
            let state = PairState::new(&c, &geometry).unwrap();
            for _ in 0..10 {
                let (t1, p1) = (rng.random_range(0.1..3.0), rng.random_range(0.0..6.0));
                let (t2, p2) = (rng.random_range(0.1..3.0), rng.random_range(0.0..6.0));
                let fast = state.g2(&DetectorPair::new((t1, p1), (t2, p2)).unwrap()).unwrap();
                let brute = fock_space_g2(&c, &geometry, &direction(t1, p1), &direction(t2, p2));
                assert!((fast - brute).abs() <= 1e-10 * brute.max(1.0), "{fast} vs {brute}");
            }
        }
    }

    #[test]
    fn g2_map_masks_dark_directions() {
        // every row of the pair matrix sums to zero, so the on-axis intensity vanishes
        let square = build_ring(4, 0.25).unwrap();
        let c = CVector::from_row_slice(&[1.0, -1.0, 0.0, 0.0, -1.0, 1.0].map(|x| Complex64::new(x / 2.0, 0.0)));
        let grid = SphereGrid::uniform(9, 12).unwrap();
        let polar = g2_map(&c, &square, DetectorConfig::PolarFixed, &grid, Execution::Sequential).unwrap();
        assert!(polar.mask.iter().all(|m| !m));
        assert!(polar.rows().all(|(_, _, v, _)| v.is_nan()));
        let coincident = g2_map(&c, &square, DetectorConfig::Coincident, &grid, Execution::Sequential).unwrap();
        assert!(coincident.mask.iter().all(|&m| m));
    }
}
