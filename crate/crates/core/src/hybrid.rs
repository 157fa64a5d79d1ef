//! Two-mode hybridization of coupled subsystems, the B₁ doubly excited
//! states of the six-fold double ring, and the expansion of doubly excited
//! states in products of single-excitation eigenstates.

use num_complex::Complex64;

use crate::eig::{fix_phase, max_abs, residual, CMatrix, CVector};
use crate::em::coupling_rate;
use crate::error::{domain, Error, Result};
use crate::geometry::{build_double_ring, ring_angle, ring_radius, EmitterArray};
use crate::manifolds::{build_h2, brillouin_zone, wrap_momentum, Manifold, PairIndex};
use crate::spectra::{ring_energy_analytic, EigenState, HybridTag, Spectrum};

/// Coupled pair of modes `[[ε_a, κ], [κ, ε_b]]`.
///
/// `plus`/`minus` follow the sign in front of the square root
/// `s = √((ε_a − ε_b)² + 4κ²)`, whose branch has `Re s ≥ 0` (`Im s ≥ 0` on ties).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeModel {
    pub eps_a: Complex64,
    pub eps_b: Complex64,
    pub kappa: Complex64,
    pub eps_plus: Complex64,
    pub eps_minus: Complex64,
    /// `c_b/c_a` of each branch; infinite when the branch lives on `b` alone.
    pub eta_plus: Complex64,
    pub eta_minus: Complex64,
    /// Normalized `(c_a, c_b)` with `c_a` real and non-negative.
    pub c_plus: [Complex64; 2],
    pub c_minus: [Complex64; 2],
}

/// One hybridized branch: energy, mode vector and its symmetry tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridBranch {
    pub energy: Complex64,
    pub c: [Complex64; 2],
    pub tag: HybridTag,
}

impl HybridBranch {
    pub fn gamma(&self) -> f64 {
        -2.0 * self.energy.im
    }
}

fn principal_sqrt(z: Complex64) -> Complex64 {
    let s = z.sqrt();
    if s.re < 0.0 || (s.re == 0.0 && s.im < 0.0) {
        -s
    } else {
        s
    }
}

fn branch_vector(eps_a: Complex64, eps_b: Complex64, kappa: Complex64, eps: Complex64) -> [Complex64; 2] {
    // two equivalent null vectors of [[ε_a − ε, κ], [κ, ε_b − ε]]; keep the better conditioned one
    let u = [kappa, eps - eps_a];
    let v = [eps - eps_b, kappa];
    let norm = |w: &[Complex64; 2]| (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
    let w = if norm(&u) >= norm(&v) { u } else { v };
    let n = norm(&w);
    if n == 0.0 {
        // κ = 0 and ε_a = ε_b: any basis works
        return if eps == eps_a { [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)] } else { [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)] };
    }
    let phase = if w[0].norm() > 0.0 { w[0].conj() / w[0].norm() } else { w[1].conj() / w[1].norm() };
    [w[0] * phase / n, w[1] * phase / n]
}

pub fn hybridize(eps_a: Complex64, eps_b: Complex64, kappa: Complex64) -> TwoModeModel {
    let s = principal_sqrt((eps_a - eps_b).powi(2) + 4.0 * kappa * kappa);
    let eps_plus = 0.5 * (eps_a + eps_b + s);
    let eps_minus = 0.5 * (eps_a + eps_b - s);
    let (eps_plus, eps_minus, c_plus, c_minus) = if kappa == Complex64::new(0.0, 0.0) {
        // decoupled: each branch sits on whichever mode it equals
        let a_first = (eps_plus - eps_a).norm() <= (eps_plus - eps_b).norm();
        let ea = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let eb = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        if a_first {
            (eps_a, eps_b, ea, eb)
        } else {
            (eps_b, eps_a, eb, ea)
        }
    } else {
        let c_plus = branch_vector(eps_a, eps_b, kappa, eps_plus);
        (eps_plus, eps_minus, c_plus, branch_vector(eps_a, eps_b, kappa, eps_minus))
    };
    let eta = |c: [Complex64; 2]| {
        if c[0].norm() == 0.0 {
            Complex64::new(f64::INFINITY, 0.0)
        } else {
            c[1] / c[0]
        }
    };
    TwoModeModel {
        eps_a,
        eps_b,
        kappa,
        eps_plus,
        eps_minus,
        eta_plus: eta(c_plus),
        eta_minus: eta(c_minus),
        c_plus,
        c_minus,
    }
}

impl TwoModeModel {
    /// The `+` branch is tagged by its relative phase; the `−` branch gets the
    /// complementary tag (`η₊η₋ = −1` makes them opposite away from κ = 0).
    pub fn branches(&self) -> [HybridBranch; 2] {
        let tag_plus = HybridTag::from_components(self.c_plus[0], self.c_plus[1]);
        let tag_minus = match tag_plus {
            HybridTag::Symmetric => HybridTag::Antisymmetric,
            HybridTag::Antisymmetric => HybridTag::Symmetric,
        };
        [
            HybridBranch { energy: self.eps_plus, c: self.c_plus, tag: tag_plus },
            HybridBranch { energy: self.eps_minus, c: self.c_minus, tag: tag_minus },
        ]
    }

    pub fn branch(&self, tag: HybridTag) -> HybridBranch {
        let [p, m] = self.branches();
        if p.tag == tag {
            p
        } else {
            m
        }
    }

    pub fn symmetric(&self) -> HybridBranch {
        self.branch(HybridTag::Symmetric)
    }

    pub fn antisymmetric(&self) -> HybridBranch {
        self.branch(HybridTag::Antisymmetric)
    }

    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[self.eps_a, self.kappa, self.kappa, self.eps_b])
    }
}

/// `m = 0` model of a ring with a central emitter: `a` is the centre,
/// `b` the symmetric ring state.
pub fn ring_center_model(n_d: usize, spacing_a: f64) -> Result<TwoModeModel> {
    if n_d < 2 {
        return domain(format!("ring needs at least two emitters, got {n_d}"));
    }
    let eps_a = Complex64::new(0.0, -0.5);
    let eps_b = ring_energy_analytic(n_d, spacing_a, 0)?;
    let kappa = (n_d as f64).sqrt() * coupling_rate(ring_radius(n_d, spacing_a))?;
    Ok(hybridize(eps_a, eps_b, kappa))
}

/// Sector-`m` model of two concentric rings: `a` is the inner ring
/// (spacing `a`), `b` the outer ring (spacing `b = ratio·a`).
pub fn ring_ring_model(n_d: usize, spacing_a: f64, ratio: f64, m: i32) -> Result<TwoModeModel> {
    ring_ring_model_twisted(n_d, spacing_a, ratio, 0.0, m)
}

/// As [`ring_ring_model`] with the outer ring rotated by `twist`.
///
/// A twist makes the two sector couplings `κ_ab` and `κ_ba` differ; the
/// model uses `κ = √(κ_ab κ_ba)`, which preserves the energies exactly.
pub fn ring_ring_model_twisted(n_d: usize, spacing_a: f64, ratio: f64, twist: f64, m: i32) -> Result<TwoModeModel> {
    if !brillouin_zone(n_d).contains(&m) {
        return domain(format!("m = {m} outside the first Brillouin zone for N_d = {n_d}"));
    }
    if !(ratio > 1.0) {
        return domain(format!("outer ring must be larger than inner ring (b/a = {ratio})"));
    }
    let eps_a = ring_energy_analytic(n_d, spacing_a, m)?;
    let eps_b = ring_energy_analytic(n_d, spacing_a * ratio, m)?;
    let r_in = ring_radius(n_d, spacing_a);
    let r_out = ring_radius(n_d, spacing_a * ratio);
    let mut k_ab = Complex64::new(0.0, 0.0);
    let mut k_ba = Complex64::new(0.0, 0.0);
    for k in 0..n_d {
        let phase = Complex64::from_polar(1.0, m as f64 * ring_angle(n_d, k));
        let d_ab = chord(r_in, 0.0, r_out, ring_angle(n_d, k) + twist);
        let d_ba = chord(r_out, twist, r_in, ring_angle(n_d, k));
        k_ab += coupling_rate(d_ab)? * phase;
        k_ba += coupling_rate(d_ba)? * phase;
    }
    let kappa = if twist == 0.0 { k_ab } else { (k_ab * k_ba).sqrt() };
    Ok(hybridize(eps_a, eps_b, kappa))
}

fn chord(r1: f64, phi1: f64, r2: f64, phi2: f64) -> f64 {
    (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * (phi1 - phi2).cos()).sqrt()
}

/// Doubly excited B₁ state with its single-excitation ingredients.
#[derive(Debug, Clone)]
pub struct B1State {
    /// Tag of the `m = ±1` ingredient.
    pub s1: HybridTag,
    /// Tag of the `m = ±2` ingredient.
    pub s2: HybridTag,
    /// `ε^{(1)}_{s1} + ε^{(2)}_{s2}`.
    pub energy: Complex64,
    pub gamma_m1: f64,
    pub gamma_m2: f64,
    pub state: EigenState,
    /// `‖H²c − 𝓔c‖₂` for the Hermitian-normalized wedge vector.
    pub residual: f64,
}

impl B1State {
    pub fn gamma(&self) -> f64 {
        -2.0 * self.energy.im
    }

    pub fn lifetime_enhancement(&self) -> f64 {
        1.0 / self.gamma()
    }
}

/// Single-excitation hybrid state of a six-fold double ring built from its
/// two-mode model: `c_a e^{imφ_k}/√N_d` on the inner ring and
/// `c_b e^{imφ_k}/√N_d` on the outer ring.
fn double_ring_single(n_d: usize, m: i32, c: [Complex64; 2]) -> CVector {
    let norm = 1.0 / (n_d as f64).sqrt();
    CVector::from_fn(2 * n_d, |x, _| {
        let (ring, k) = (x / n_d, x % n_d);
        c[ring] * Complex64::from_polar(norm, m as f64 * ring_angle(n_d, k))
    })
}

const B1_N_D: usize = 6;

/// The four states `(i/2)(ψ₁ψ₂ + ψ₂ψ₁ − ψ₋₁ψ₋₂ − ψ₋₂ψ₋₁)` of the six-fold
/// double ring, ordered `(+,+), (+,−), (−,+), (−,−)` in `(s1, s2)`.
pub fn build_b1_states(spacing_a: f64, ratio: f64) -> Result<Vec<B1State>> {
    let geometry = build_double_ring(B1_N_D, spacing_a, ratio)?;
    let h2 = build_h2(&geometry)?;
    build_b1_states_with(&geometry, &h2.matrix)
}

/// As [`build_b1_states`] for an already assembled geometry and `H²`.
pub fn build_b1_states_with(geometry: &EmitterArray, h2: &CMatrix) -> Result<Vec<B1State>> {
    let spec = geometry.spec();
    let (Some(n_d), Some(ratio)) = (geometry.n_d(), spec.b_over_a) else {
        return Err(Error::Construction("B1 states need a double-ring geometry".into()));
    };
    if n_d != B1_N_D || spec.twist != 0.0 {
        return Err(Error::Construction(format!("B1 states need an untwisted six-fold double ring (N_d = {n_d})")));
    }
    let a = spec.a;
    let models: Vec<TwoModeModel> = [1, -1, 2, -2]
        .iter()
        .map(|&m| ring_ring_model(n_d, a, ratio, m))
        .collect::<Result<_>>()?;
    for pair in models.chunks(2) {
        let (p, q) = (&pair[0], &pair[1]);
        let scale = p.eps_plus.norm().max(p.eps_minus.norm());
        if (p.eps_plus - q.eps_plus).norm() > 1e-10 * scale || (p.eps_minus - q.eps_minus).norm() > 1e-10 * scale {
            return Err(Error::Construction("±m single-excitation energies are not degenerate".into()));
        }
    }

    let n = geometry.len();
    let index = PairIndex::new(n);
    let bound = 1e-8 * max_abs(h2).max(1.0);
    let tags = [HybridTag::Symmetric, HybridTag::Antisymmetric];
    let mut out = Vec::with_capacity(4);
    for &s1 in &tags {
        for &s2 in &tags {
            let b1 = models[0].branch(s1);
            let b2 = models[2].branch(s2);
            let psi = |m: i32, c| double_ring_single(n_d, m, c);
            let (p1, p2) = (psi(1, b1.c), psi(2, b2.c));
            let (q1, q2) = (psi(-1, models[1].branch(s1).c), psi(-2, models[3].branch(s2).c));
            let half_i = Complex64::new(0.0, 0.5);
            let tensor = (&p1 * p2.transpose() + &p2 * p1.transpose() - &q1 * q2.transpose() - &q2 * q1.transpose()) * half_i;

            let diag = (0..n).fold(0.0_f64, |m, k| m.max(tensor[(k, k)].norm()));
            if diag > 1e-10 {
                return Err(Error::Construction(format!("B1 tensor has double occupancy {diag:.3e}")));
            }
            let mut wedge = CVector::from_fn(index.len(), |p, _| {
                let (k, l) = index.pair(p);
                tensor[(k, l)] * std::f64::consts::SQRT_2
            });
            fix_phase(&mut wedge);
            let energy = b1.energy + b2.energy;
            let res = residual(h2, energy, &wedge);
            if !(res <= bound) {
                return Err(Error::Construction(format!("B1 state is not an H2 eigenvector (residual {res:.3e})")));
            }
            let bilinear_norm = wedge.iter().map(|z| z * z).sum();
            out.push(B1State {
                s1,
                s2,
                energy,
                gamma_m1: b1.gamma(),
                gamma_m2: b2.gamma(),
                state: EigenState {
                    manifold: Manifold::Double,
                    energy,
                    amplitudes: wedge,
                    m: Some(3),
                    irrep: None,
                    hybrid: None,
                    bilinear_norm,
                },
                residual: res,
            });
        }
    }
    Ok(out)
}

/// Most subradiant B₁ state `Ψ^{(3)}_{−−}`.
pub fn b1_minus_minus(spacing_a: f64, ratio: f64) -> Result<B1State> {
    let mut states = build_b1_states(spacing_a, ratio)?;
    Ok(states.swap_remove(3))
}

/// Expansion of one doubly excited state in products of single states.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    /// Right coefficients: `c̃ = Σ_ij v^R_ij ψ_i ⊗ ψ_j`.
    pub v_right: CMatrix,
    /// Left coefficients from the biorthogonal dual of the state.
    pub v_left: CMatrix,
    /// `Σ_ij v^L_ij v^R_ij (ε_i + ε_j)`.
    pub reconstructed_energy: Complex64,
    /// `Σ_ij |v^R_ij|² (ε_i + ε_j) / Σ_ij |v^R_ij|²`; exact only when the
    /// contributing single states are mutually orthogonal.
    pub hermitian_energy: Complex64,
    pub direct_energy: Complex64,
    /// Largest `|v^R_ij|` with `m_i + m_j ≢ m (mod N_d)`; `None` without labels.
    pub selection_violation: Option<f64>,
}

impl DecompositionResult {
    pub fn relative_error(&self) -> f64 {
        (self.reconstructed_energy - self.direct_energy).norm() / self.direct_energy.norm()
    }

    pub fn hermitian_relative_error(&self) -> f64 {
        (self.hermitian_energy - self.direct_energy).norm() / self.direct_energy.norm()
    }

    pub fn weight(&self) -> f64 {
        self.v_right.norm_squared()
    }

    /// Nonzero coefficients above `tol` as `(i, j, v^R_ij)`.
    pub fn support(&self, tol: f64) -> Vec<(usize, usize, Complex64)> {
        let n = self.v_right.nrows();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.v_right[(i, j)].norm() > tol)
            .map(|(i, j)| (i, j, self.v_right[(i, j)]))
            .collect()
    }
}

/// Single-excitation eigenbasis with its inverse.
#[derive(Debug, Clone)]
pub struct SingleBasis {
    pub energies: Vec<Complex64>,
    pub m: Vec<Option<i32>>,
    pub n_d: Option<usize>,
    pub right: CMatrix,
    /// `V⁻¹`; its rows are the left eigenvectors dual to `right`.
    pub left: CMatrix,
}

impl SingleBasis {
    pub fn new(singles: &Spectrum) -> Result<Self> {
        let columns: Vec<CVector> = singles.states.iter().map(|s| s.amplitudes.clone()).collect();
        let right = CMatrix::from_columns(&columns);
        let left = invert_checked(&right, "single-excitation")?;
        Ok(Self {
            energies: singles.states.iter().map(|s| s.energy).collect(),
            m: singles.states.iter().map(|s| s.m).collect(),
            n_d: singles.basis.as_ref().map(|b| b.n_d),
            right,
            left,
        })
    }
}

fn invert_checked(v: &CMatrix, what: &str) -> Result<CMatrix> {
    let n = v.nrows();
    let inv = v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DefectiveBasis(format!("{what} eigenvectors are linearly dependent")))?;
    let err = (&inv * v - CMatrix::identity(n, n)).norm();
    if !(err <= 1e-8) {
        return Err(Error::DefectiveBasis(format!("{what} eigenbasis is ill-conditioned (‖V⁻¹V − 1‖ = {err:.3e})")));
    }
    Ok(inv)
}

fn embed(c: &CVector, n: usize) -> CMatrix {
    let index = PairIndex::new(n);
    let mut t = CMatrix::zeros(n, n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for (p, &(k, l)) in index.pairs().iter().enumerate() {
        t[(k, l)] = c[p] * s;
        t[(l, k)] = c[p] * s;
    }
    t
}

/// Expand `state` (right wedge vector) with its dual `left` (`left·c = 1`).
pub fn decompose_double_state(state: &EigenState, left: &CVector, singles: &SingleBasis) -> Result<DecompositionResult> {
    let n = singles.right.nrows();
    if state.amplitudes.len() != n * (n - 1) / 2 || left.len() != state.amplitudes.len() {
        return domain("double state does not match the single-excitation basis");
    }
    let right_t = embed(&state.amplitudes, n);
    let left_t = embed(left, n);
    let v_right = &singles.left * right_t * singles.left.transpose();
    let v_left = singles.right.transpose() * left_t * &singles.right;

    let mut reconstructed = Complex64::new(0.0, 0.0);
    let mut hermitian = Complex64::new(0.0, 0.0);
    let mut weight = 0.0;
    let mut violation: Option<f64> = None;
    for i in 0..n {
        for j in 0..n {
            let pair_energy = singles.energies[i] + singles.energies[j];
            reconstructed += v_left[(i, j)] * v_right[(i, j)] * pair_energy;
            hermitian += v_right[(i, j)].norm_sqr() * pair_energy;
            weight += v_right[(i, j)].norm_sqr();
            if let (Some(n_d), Some(m), Some(mi), Some(mj)) = (singles.n_d, state.m, singles.m[i], singles.m[j]) {
                let worst = violation.get_or_insert(0.0);
                if wrap_momentum(mi as i64 + mj as i64, n_d) != m {
                    *worst = worst.max(v_right[(i, j)].norm());
                }
            }
        }
    }
    Ok(DecompositionResult {
        v_right,
        v_left,
        reconstructed_energy: reconstructed,
        hermitian_energy: hermitian / weight,
        direct_energy: state.energy,
        selection_violation: violation,
    })
}

/// Decompose every state of `doubles`; left duals come from the inverse of
/// the full doubly excited eigenbasis.
pub fn decompose_all(doubles: &Spectrum, singles: &Spectrum) -> Result<Vec<DecompositionResult>> {
    let basis = SingleBasis::new(singles)?;
    let columns: Vec<CVector> = doubles.states.iter().map(|s| s.amplitudes.clone()).collect();
    let w_inv = invert_checked(&CMatrix::from_columns(&columns), "double-excitation")?;
    doubles
        .states
        .iter()
        .enumerate()
        .map(|(i, state)| {
            let left = w_inv.row(i).transpose();
            decompose_double_state(state, &left, &basis)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_double_ring_twisted, build_ring_plus_center};
    use crate::spectra::{solve_double, solve_single};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn decoupled_limit() {
        let (ea, eb) = (c(0.3, -0.2), c(-1.0, -0.7));
        let model = hybridize(ea, eb, c(0.0, 0.0));
        let mut got = [model.eps_plus, model.eps_minus];
        got.sort_by(|x, y| x.re.total_cmp(&y.re));
        assert_eq!(got, [eb, ea]);
        assert!(model.c_plus.iter().chain(&model.c_minus).all(|z| z.norm() == 0.0 || z.norm() == 1.0));
    }

    #[test]
    fn degenerate_splitting() {
        let e = c(0.1, -0.5);
        let model = hybridize(e, e, c(0.25, 0.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((model.eps_plus - (e + 0.25)).norm() < 1e-15);
        assert!((model.eps_minus - (e - 0.25)).norm() < 1e-15);
        assert!((model.c_plus[0] - c(h, 0.0)).norm() < 1e-15 && (model.c_plus[1] - c(h, 0.0)).norm() < 1e-15);
        assert!((model.c_minus[1] + c(h, 0.0)).norm() < 1e-15);
        assert_eq!(model.symmetric().energy, model.eps_plus);
    }

    #[test]
    fn trace_determinant_and_normalization() {
        let model = hybridize(c(0.2, -0.5), c(-0.4, -0.1), c(0.3, -0.05));
        let tr = model.eps_a + model.eps_b;
        let det = model.eps_a * model.eps_b - model.kappa * model.kappa;
        assert!((model.eps_plus + model.eps_minus - tr).norm() < 1e-12 * tr.norm());
        assert!((model.eps_plus * model.eps_minus - det).norm() < 1e-12 * det.norm());
        for cv in [model.c_plus, model.c_minus] {
            assert!((cv[0].norm_sqr() + cv[1].norm_sqr() - 1.0).abs() < 1e-14);
        }
        assert!((model.eta_plus * model.eta_minus + 1.0).norm() < 1e-12);
        let [p, m] = model.branches();
        assert_ne!(p.tag, m.tag);
    }

    #[test]
    fn ring_center_matches_sector_eigenvalues() {
        for a in [0.08, 0.16, 0.21] {
            let model = ring_center_model(6, a).unwrap();
            let spectrum = solve_single(&build_ring_plus_center(6, a).unwrap()).unwrap();
            let sector: Vec<_> = spectrum.sector(0).collect();
            assert_eq!(sector.len(), 2);
            for eps in [model.eps_plus, model.eps_minus] {
                let best = sector.iter().map(|s| (s.energy - eps).norm()).fold(f64::INFINITY, f64::min);
                assert!(best <= 1e-10 * eps.norm());
            }
            for s in sector {
                let branch = model.branches().into_iter().min_by(|x, y| (x.energy - s.energy).norm().total_cmp(&(y.energy - s.energy).norm())).unwrap();
                assert_eq!(Some(branch.tag), s.hybrid);
            }
        }
    }

    #[test]
    fn ring_center_antisymmetric_state_at_peak() {
        let anti = ring_center_model(6, 0.16).unwrap().antisymmetric();
        let deviation = |b: &HybridBranch| std::f64::consts::PI - (b.c[1] / b.c[0]).arg().abs();
        // the relative phase passes through π a little above a = 0.16
        assert!(deviation(&anti) < 2e-2);
        let closest = (0..=100)
            .map(|i| deviation(&ring_center_model(6, 0.15 + 0.0002 * i as f64).unwrap().antisymmetric()))
            .fold(f64::INFINITY, f64::min);
        assert!(closest < 1e-3);
        assert!(anti.c[0].norm_sqr() > 0.5);
        assert!(1.0 / anti.gamma() > 200.0);
    }

    #[test]
    fn ring_ring_matches_sector_eigenvalues() {
        for (a, ratio, twist) in [(0.16, 2.2, 0.0), (0.1, 1.7, 0.0), (0.12, 2.0, 0.2)] {
            let geometry = build_double_ring_twisted(6, a, ratio, twist).unwrap();
            let spectrum = solve_single(&geometry).unwrap();
            for m in brillouin_zone(6) {
                let model = ring_ring_model_twisted(6, a, ratio, twist, m).unwrap();
                for eps in [model.eps_plus, model.eps_minus] {
                    let best = spectrum.sector(m).map(|s| (s.energy - eps).norm()).fold(f64::INFINITY, f64::min);
                    assert!(best <= 1e-10 * eps.norm(), "a={a} m={m}");
                }
            }
        }
    }

    #[test]
    fn ring_ring_is_parity_even() {
        for m in [1, 2] {
            let p = ring_ring_model(6, 0.13, 2.4, m).unwrap();
            let q = ring_ring_model(6, 0.13, 2.4, -m).unwrap();
            assert!((p.kappa - q.kappa).norm() < 1e-12 * p.kappa.norm());
            assert!((p.eps_minus - q.eps_minus).norm() < 1e-12);
        }
    }

    #[test]
    fn b1_states_are_exact_h2_eigenvectors() {
        let states = build_b1_states(0.16, 2.2).unwrap();
        assert_eq!(states.len(), 4);
        for s in &states {
            assert!(s.residual <= 1e-8);
            assert!((s.state.amplitudes.norm() - 1.0).abs() < 1e-14);
            let sum = s.gamma_m1 + s.gamma_m2;
            assert!((s.gamma() - sum).abs() <= 1e-8 * sum);
        }
        let mm = &states[3];
        assert_eq!((mm.s1, mm.s2), (HybridTag::Antisymmetric, HybridTag::Antisymmetric));
        assert!(mm.gamma_m2 < 0.1 * mm.gamma_m1);
        assert!((mm.gamma() - mm.gamma_m1).abs() < 0.1 * mm.gamma_m1);
    }

    #[test]
    fn b1_requires_six_fold_double_ring() {
        let geometry = build_double_ring(5, 0.16, 2.2).unwrap();
        let h2 = build_h2(&geometry).unwrap();
        assert!(matches!(build_b1_states_with(&geometry, &h2.matrix), Err(Error::Construction(_))));
        let ring = crate::geometry::build_ring(6, 0.1).unwrap();
        let h2 = build_h2(&ring).unwrap();
        assert!(build_b1_states_with(&ring, &h2.matrix).is_err());
    }

    #[test]
    fn decomposition_of_double_ring_states() {
        let geometry = build_double_ring(6, 0.16, 2.2).unwrap();
        let singles = solve_single(&geometry).unwrap();
        let doubles = solve_double(&geometry).unwrap();
        let results = decompose_all(&doubles, &singles).unwrap();
        assert_eq!(results.len(), 66);
        for r in &results {
            assert!(r.relative_error() < 1e-10, "{}", r.relative_error());
            assert!(r.selection_violation.unwrap() < 1e-10);
        }
    }

    #[test]
    fn decomposition_of_b1_state_has_four_terms() {
        let geometry = build_double_ring(6, 0.16, 2.2).unwrap();
        let singles = SingleBasis::new(&solve_single(&geometry).unwrap()).unwrap();
        let mm = b1_minus_minus(0.16, 2.2).unwrap();
        let left = mm.state.amplitudes.map(|z| z / mm.state.bilinear_norm);
        let result = decompose_double_state(&mm.state, &left, &singles).unwrap();
        let support = result.support(1e-8);
        assert_eq!(support.len(), 4);
        for (i, j, v) in support {
            assert!((v.norm() - 0.5).abs() < 1e-10);
            let pair = (singles.m[i].unwrap(), singles.m[j].unwrap());
            assert!([(1, 2), (2, 1), (-1, -2), (-2, -1)].contains(&pair));
        }
        assert!(result.relative_error() < 1e-10);
        assert!(result.hermitian_relative_error() < 1e-10);
    }
}
