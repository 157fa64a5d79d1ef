//! Collective eigenstates, their momentum labels and the analytic ring
//! spectrum.
//!
//! Symmetric geometries are diagonalized one momentum sector at a time, so
//! every state carries an exact quasi-momentum label and the `±m` degenerate
//! pairs never mix. The full-matrix solve is kept as a cross-check path.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eig::{eig_dense_complex, fix_phase, max_abs, residual, CMatrix, CVector, EigenPair};
use crate::em::coupling_rate;
use crate::error::{domain, Error, Result};
use crate::geometry::{ring_angle, ring_radius, EmitterArray, GeometryTag};
use crate::manifolds::{
    brillouin_zone, build_h1, build_h2, momentum_basis, sector_phase, Hamiltonian, Manifold,
    MomentumBasis,
};

/// Residual bound relative to `‖H‖_max` for every reported state.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Projection weight a state must carry in one sector to be labelled.
pub const CLASSIFY_TOL: f64 = 1e-8;

/// Irreducible representations of C₆ᵥ reached by single-excitation ring states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Irrep {
    A1,
    B2,
    E1,
    E2,
}

impl Irrep {
    /// Lookup for six-emitter rings; `None` for other ring sizes.
    pub fn for_six_fold(n_d: usize, m: i32) -> Option<Self> {
        if n_d != 6 {
            return None;
        }
        match m {
            0 => Some(Irrep::A1),
            1 | -1 => Some(Irrep::E1),
            2 | -2 => Some(Irrep::E2),
            3 | -3 => Some(Irrep::B2),
            _ => None,
        }
    }
}

/// Relative phase of the two subsystems of a hybridized state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HybridTag {
    Symmetric,
    Antisymmetric,
}

impl HybridTag {
    /// Symmetric when the relative phase of the two components is within π/2 of zero.
    pub fn from_components(first: Complex64, second: Complex64) -> Self {
        if (second * first.conj()).re >= 0.0 {
            HybridTag::Symmetric
        } else {
            HybridTag::Antisymmetric
        }
    }

    pub fn sign(self) -> char {
        match self {
            HybridTag::Symmetric => '+',
            HybridTag::Antisymmetric => '-',
        }
    }
}

/// A collective eigenstate of the single or double manifold.
///
/// Energies are `Δω − iγ/2` in units of γ₀. Amplitudes are Hermitian
/// normalized; for the double manifold they are the wedge amplitudes
/// `c_kl`, `k < l`.
#[derive(Debug, Clone)]
pub struct EigenState {
    pub manifold: Manifold,
    pub energy: Complex64,
    pub amplitudes: CVector,
    pub m: Option<i32>,
    pub irrep: Option<Irrep>,
    pub hybrid: Option<HybridTag>,
    /// Unconjugated self-product `cᵀc`.
    pub bilinear_norm: Complex64,
}

pub type SingleExcState = EigenState;
pub type DoubleExcState = EigenState;

impl EigenState {
    /// Decay rate `γ = −2 Im ε` in units of γ₀.
    pub fn gamma(&self) -> f64 {
        -2.0 * self.energy.im
    }

    /// Lifetime enhancement `γ₀/γ`.
    pub fn lifetime_enhancement(&self) -> f64 {
        1.0 / self.gamma()
    }

    pub fn detuning(&self) -> f64 {
        self.energy.re
    }

    pub fn near_defective(&self) -> bool {
        self.bilinear_norm.norm() <= crate::eig::DEFECTIVE_THRESHOLD
    }

    pub fn record(&self) -> StateRecord {
        StateRecord {
            energy: [self.energy.re, self.energy.im],
            gamma_over_gamma0: self.gamma(),
            m: self.m,
            irrep: self.irrep,
            hybrid: self.hybrid,
            amplitudes: self.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

/// JSON form of a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub energy: [f64; 2],
    pub gamma_over_gamma0: f64,
    pub m: Option<i32>,
    pub irrep: Option<Irrep>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hybrid: Option<HybridTag>,
    pub amplitudes: Vec<[f64; 2]>,
}

/// All eigenstates of one manifold for one geometry.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub hamiltonian: Hamiltonian,
    pub basis: Option<MomentumBasis>,
    /// Sector by sector in zone order, then by (Re, Im) of the energy.
    pub states: Vec<EigenState>,
}

impl Spectrum {
    pub fn manifold(&self) -> Manifold {
        self.hamiltonian.manifold
    }

    pub fn sector(&self, m: i32) -> impl Iterator<Item = &EigenState> {
        self.states.iter().filter(move |s| s.m == Some(m))
    }

    pub fn total_gamma(&self) -> f64 {
        self.states.iter().map(EigenState::gamma).sum()
    }

    /// Most subradiant state of sector `m` (smallest γ).
    pub fn most_subradiant(&self, m: i32) -> Option<&EigenState> {
        self.sector(m).min_by(|a, b| a.gamma().total_cmp(&b.gamma()))
    }
}

pub fn solve_single(geometry: &EmitterArray) -> Result<Spectrum> {
    solve(geometry, Manifold::Single)
}

pub fn solve_double(geometry: &EmitterArray) -> Result<Spectrum> {
    solve(geometry, Manifold::Double)
}

/// Diagonalize a manifold; symmetric geometries go sector by sector.
pub fn solve(geometry: &EmitterArray, manifold: Manifold) -> Result<Spectrum> {
    let hamiltonian = match manifold {
        Manifold::Single => build_h1(geometry)?,
        Manifold::Double => build_h2(geometry)?,
    };
    let h = &hamiltonian.matrix;
    let bound = RESIDUAL_TOL * max_abs(h);

    if !geometry.has_cyclic_symmetry(crate::manifolds::SYMMETRY_TOL) {
        let states = eig_dense_complex(h)?
            .into_iter()
            .map(|pair| state_from_pair(manifold, pair, None))
            .collect();
        return Ok(Spectrum { hamiltonian, basis: None, states });
    }

    let basis = momentum_basis(manifold, geometry)?;
    let n_d = basis.n_d;
    let mut states = Vec::with_capacity(h.nrows());
    let mut worst = 0.0_f64;
    for sector in basis.sectors.iter().filter(|s| s.dim() > 0) {
        let block = sector.project(h);
        for pair in eig_dense_complex(&block)? {
            let mut vector = &sector.basis * &pair.vector;
            fix_phase(&mut vector);
            worst = worst.max(residual(h, pair.value, &vector));
            let coords = sector.basis.adjoint() * &vector;
            let mut state = state_from_vector(manifold, pair.value, vector, Some(sector.m));
            if manifold == Manifold::Single {
                state.irrep = Irrep::for_six_fold(n_d, sector.m);
                state.hybrid = hybrid_tag(geometry, sector.m, &coords);
            }
            states.push(state);
        }
    }
    if !(worst <= bound) {
        return Err(Error::NoConvergence { worst_residual: worst });
    }
    Ok(Spectrum { hamiltonian, basis: Some(basis), states })
}

fn hybrid_tag(geometry: &EmitterArray, m: i32, coords: &CVector) -> Option<HybridTag> {
    let two_subsystems = match geometry.tag() {
        GeometryTag::RingCenter => m == 0,
        GeometryTag::DoubleRing => true,
        _ => false,
    };
    (two_subsystems && coords.len() == 2).then(|| HybridTag::from_components(coords[0], coords[1]))
}

fn state_from_pair(manifold: Manifold, pair: EigenPair, m: Option<i32>) -> EigenState {
    state_from_vector(manifold, pair.value, pair.vector, m)
}

fn state_from_vector(manifold: Manifold, energy: Complex64, amplitudes: CVector, m: Option<i32>) -> EigenState {
    let bilinear_norm = amplitudes.iter().map(|z| z * z).sum();
    EigenState { manifold, energy, amplitudes, m, irrep: None, hybrid: None, bilinear_norm }
}

/// Full-matrix diagonalization without symmetry reduction.
pub fn solve_full(h: &CMatrix) -> Result<Vec<EigenPair>> {
    eig_dense_complex(h)
}

/// Label states with their momentum sector.
///
/// Each vector must carry at least `1 − 1e-8` of its weight in one sector.
/// Groups of (numerically) degenerate states whose weight is split between
/// sectors are first rotated into rotation eigenvectors by diagonalizing the
/// rotation operator inside the degenerate subspace.
pub fn classify(
    states: &[(Complex64, CVector)],
    basis: &MomentumBasis,
) -> Result<Vec<(Complex64, CVector, i32)>> {
    let scale = states.iter().fold(1.0_f64, |m, (e, _)| m.max(e.norm()));
    let degenerate_tol = 1e-9 * scale;
    let mut used = vec![false; states.len()];
    let mut out = Vec::with_capacity(states.len());

    for i in 0..states.len() {
        if used[i] {
            continue;
        }
        let group: Vec<usize> = (i..states.len())
            .filter(|&j| !used[j] && (states[j].0 - states[i].0).norm() <= degenerate_tol)
            .collect();
        for &j in &group {
            used[j] = true;
        }

        let vectors: Vec<CVector> = if group.len() == 1 {
            vec![states[i].1.clone()]
        } else {
            rotate_into_eigenvectors(&group.iter().map(|&j| states[j].1.clone()).collect::<Vec<_>>(), basis)?
        };

        for (slot, v) in group.iter().zip(vectors) {
            let weights = basis.weights(&v);
            let total: f64 = v.norm_squared();
            let (best, w) = weights
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty zone");
            if *w < (1.0 - CLASSIFY_TOL) * total {
                return Err(Error::Classification(format!(
                    "state with energy {} has only {:.3e} of its weight in any sector",
                    states[*slot].0,
                    w / total
                )));
            }
            out.push((states[*slot].0, v, basis.sectors[best].m));
        }
    }
    Ok(out)
}

/// Diagonalize the rotation inside the span of `vectors`.
fn rotate_into_eigenvectors(vectors: &[CVector], basis: &MomentumBasis) -> Result<Vec<CVector>> {
    let span = CMatrix::from_columns(vectors);
    let rotated = CMatrix::from_columns(&vectors.iter().map(|v| basis.rotation.apply(v)).collect::<Vec<_>>());
    // R V = V A  =>  A = V⁺ R V
    let pinv = span
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::Classification(e.to_string()))?;
    let reduced = &pinv * rotated;
    eig_dense_complex(&reduced)?
        .into_iter()
        .map(|pair| {
            let mut v = &span * &pair.vector;
            fix_phase(&mut v);
            Ok(v)
        })
        .collect()
}

/// Analytic single-ring energy `−iγ₀/2 + Σ_{k≥2} g(|r₁ − r_k|) e^{imφ_k}`.
pub fn ring_energy_analytic(n_d: usize, spacing_a: f64, m: i32) -> Result<Complex64> {
    if n_d < 2 {
        return domain("a ring needs at least two emitters");
    }
    if !brillouin_zone(n_d).contains(&m) {
        return domain(format!("m = {m} outside the first Brillouin zone"));
    }
    let radius = ring_radius(n_d, spacing_a);
    let mut sum = Complex64::new(0.0, -0.5);
    for k in 1..n_d {
        let chord = 2.0 * radius * (ring_angle(n_d, k) / 2.0).sin();
        sum += coupling_rate(chord)? * sector_phase(m, n_d).powi(k as i32);
    }
    Ok(sum)
}

/// Closed form of the six-emitter dipole sum:
/// `2[g(a)cos(πm/3) + g(√3a)cos(2πm/3) + ½g(2a)cos(πm)]`.
pub fn hexagon_dipole_sum(spacing_a: f64, m: i32) -> Result<Complex64> {
    let m = m as f64;
    Ok(2.0
        * (coupling_rate(spacing_a)? * (PI * m / 3.0).cos()
            + coupling_rate(3f64.sqrt() * spacing_a)? * (2.0 * PI * m / 3.0).cos()
            + 0.5 * coupling_rate(2.0 * spacing_a)? * (PI * m).cos()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_double_ring, build_ring, build_ring_plus_center};

    #[test]
    fn isolated_emitter_decays_at_gamma0() {
        let single = EmitterArray::from_points(&[[0.0, 0.0]]).unwrap();
        let spectrum = solve_single(&single).unwrap();
        assert_eq!(spectrum.states.len(), 1);
        assert!((spectrum.states[0].gamma() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimer_split_by_coupling() {
        let r = 0.17;
        let dimer = EmitterArray::from_points(&[[0.0, 0.0], [r, 0.0]]).unwrap();
        let spectrum = solve_single(&dimer).unwrap();
        let g = coupling_rate(r).unwrap();
        let mut expected = [Complex64::new(0.0, -0.5) + g, Complex64::new(0.0, -0.5) - g];
        expected.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (s, e) in spectrum.states.iter().zip(expected) {
            assert!((s.energy - e).norm() < 1e-14);
            assert!((s.amplitudes[0].norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        }
    }

    #[test]
    fn six_ring_labels_and_irreps() {
        let spectrum = solve_single(&build_ring(6, 0.1).unwrap()).unwrap();
        let labels: Vec<_> = spectrum.states.iter().map(|s| (s.m.unwrap(), s.irrep.unwrap())).collect();
        assert_eq!(
            labels,
            vec![
                (0, Irrep::A1),
                (1, Irrep::E1),
                (-1, Irrep::E1),
                (2, Irrep::E2),
                (-2, Irrep::E2),
                (3, Irrep::B2)
            ]
        );
    }

    #[test]
    fn classify_elementary_patterns() {
        let ring = build_ring(6, 0.1).unwrap();
        let basis = momentum_basis(Manifold::Single, &ring).unwrap();
        let uniform = CVector::from_element(6, Complex64::new(1.0 / 6f64.sqrt(), 0.0));
        let alternating = CVector::from_fn(6, |k, _| Complex64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
        let labels = classify(
            &[(Complex64::new(0.0, 0.0), uniform), (Complex64::new(1.0, 0.0), alternating)],
            &basis,
        )
        .unwrap();
        assert_eq!(labels[0].2, 0);
        assert_eq!(Irrep::for_six_fold(6, labels[0].2), Some(Irrep::A1));
        assert_eq!(labels[1].2, 3);
        assert_eq!(Irrep::for_six_fold(6, labels[1].2), Some(Irrep::B2));
    }

    #[test]
    fn classify_resolves_mixed_degenerate_pairs() {
        let ring = build_ring(6, 0.1).unwrap();
        let basis = momentum_basis(Manifold::Single, &ring).unwrap();
        // cos(φ_k) and sin(φ_k): real standing waves mixing m = ±1
        let cos = CVector::from_fn(6, |k, _| Complex64::new(ring_angle(6, k).cos(), 0.0));
        let sin = CVector::from_fn(6, |k, _| Complex64::new(ring_angle(6, k).sin(), 0.0));
        let e = Complex64::new(0.3, -0.1);
        let mut labels: Vec<_> = classify(&[(e, cos), (e, sin)], &basis).unwrap().iter().map(|x| x.2).collect();
        labels.sort();
        assert_eq!(labels, vec![-1, 1]);
    }

    #[test]
    fn classify_rejects_broken_symmetry() {
        let ring = build_ring(6, 0.1).unwrap();
        let basis = momentum_basis(Manifold::Single, &ring).unwrap();
        let mut v = CVector::zeros(6);
        v[0] = Complex64::new(1.0, 0.0);
        assert!(classify(&[(Complex64::new(0.0, 0.0), v)], &basis).is_err());
    }

    #[test]
    fn hexagon_closed_form_matches_sum() {
        for i in 0..30 {
            let a = 0.02 + 0.28 * i as f64 / 29.0;
            for m in brillouin_zone(6) {
                let sum = ring_energy_analytic(6, a, m).unwrap();
                let closed = Complex64::new(0.0, -0.5) + hexagon_dipole_sum(a, m).unwrap();
                assert!((sum - closed).norm() <= 1e-14 * sum.norm().max(1.0));
                let mirrored = ring_energy_analytic(6, a, -m).unwrap_or(sum);
                assert!((sum - mirrored).norm() <= 1e-14 * sum.norm().max(1.0));
            }
        }
    }

    #[test]
    fn six_ring_subradiance_pattern() {
        let a = 0.1;
        let lifetime = |m| 1.0 / (-2.0 * ring_energy_analytic(6, a, m).unwrap().im);
        assert!(lifetime(3) > 10.0);
        assert!(lifetime(2) > 10.0);
        assert!(lifetime(0) <= 1.0);
    }

    #[test]
    fn hybrid_tags_present_for_two_subsystem_sectors() {
        let oligomer = build_ring_plus_center(6, 0.16).unwrap();
        let spectrum = solve_single(&oligomer).unwrap();
        let tags: Vec<_> = spectrum.sector(0).map(|s| s.hybrid.unwrap()).collect();
        assert_eq!(tags.len(), 2);
        assert!(tags.contains(&HybridTag::Symmetric) && tags.contains(&HybridTag::Antisymmetric));
        assert!(spectrum.sector(1).all(|s| s.hybrid.is_none()));

        let dr = solve_single(&build_double_ring(6, 0.16, 2.2).unwrap()).unwrap();
        assert!(dr.states.iter().all(|s| s.hybrid.is_some()));
    }

    #[test]
    fn record_serializes() {
        let spectrum = solve_single(&build_ring(6, 0.1).unwrap()).unwrap();
        let json = serde_json::to_value(spectrum.states[0].record()).unwrap();
        assert_eq!(json["m"], 0);
        assert_eq!(json["irrep"], "A1");
        assert_eq!(json["amplitudes"].as_array().unwrap().len(), 6);
    }
}
