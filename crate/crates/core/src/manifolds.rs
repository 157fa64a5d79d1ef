//! Single- and double-excitation Hamiltonians, discrete rotations and
//! momentum-sector bases.
//!
//! The double-excitation manifold is indexed by ordered pairs `(k, l)` with
//! `k < l`. Its amplitudes are symmetric (`c_kl = c_lk`), so a rotation that
//! carries a pair out of the `k < l` wedge maps back with coefficient `+1`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::eig::{CMatrix, CVector};
use crate::em::{coupling_rate, GAMMA0};
use crate::error::{domain, Error, Result};
use crate::geometry::EmitterArray;

/// Tolerance for the numerical check of rotational symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Manifold {
    Single,
    Double,
}

/// Bijection between flat indices `p ∈ [0, N(N−1)/2)` and pairs `k < l`,
/// in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairIndex {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairIndex {
    pub fn new(n: usize) -> Self {
        let pairs = (0..n).flat_map(|k| (k + 1..n).map(move |l| (k, l))).collect();
        Self { n, pairs }
    }

    pub fn n_emitters(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, p: usize) -> (usize, usize) {
        self.pairs[p]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Flat index of the unordered pair `{k, l}`; `None` when `k == l`.
    pub fn index(&self, k: usize, l: usize) -> Option<usize> {
        if k == l || k >= self.n || l >= self.n {
            return None;
        }
        let (k, l) = if k < l { (k, l) } else { (l, k) };
        // rows 0..k contribute (n-1) + (n-2) + ... + (n-k) entries
        Some(k * (2 * self.n - k - 1) / 2 + (l - k - 1))
    }
}

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub manifold: Manifold,
    pub matrix: CMatrix,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Coupling matrix `g(|r_k − r_l|)` with zero diagonal.
pub fn coupling_matrix(geometry: &EmitterArray) -> Result<CMatrix> {
    let n = geometry.len();
    let mut g = CMatrix::zeros(n, n);
    for k in 0..n {
        for l in k + 1..n {
            let value = coupling_rate(geometry.distance(k, l))?;
            g[(k, l)] = value;
            g[(l, k)] = value;
        }
    }
    Ok(g)
}

/// Single-excitation Hamiltonian: `−iγ₀/2` on the diagonal, `g(r_kl)` off it.
pub fn build_h1(geometry: &EmitterArray) -> Result<Hamiltonian> {
    let mut matrix = coupling_matrix(geometry)?;
    for k in 0..geometry.len() {
        matrix[(k, k)] = Complex64::new(0.0, -0.5 * GAMMA0);
    }
    Ok(Hamiltonian { manifold: Manifold::Single, matrix })
}

/// Double-excitation Hamiltonian on the `k < l` wedge: `−iγ₀` on the
/// diagonal; pairs sharing one emitter couple through `g` between the two
/// emitters that differ; disjoint pairs do not couple.
pub fn build_h2(geometry: &EmitterArray) -> Result<Hamiltonian> {
    let n = geometry.len();
    if n < 2 {
        return domain(format!("double excitations need at least two emitters, got {n}"));
    }
    let g = coupling_matrix(geometry)?;
    let index = PairIndex::new(n);
    let m = index.len();
    let mut matrix = CMatrix::zeros(m, m);
    for (p, &(k, l)) in index.pairs().iter().enumerate() {
        matrix[(p, p)] = Complex64::new(0.0, -GAMMA0);
        // move the first excitation: (k, l) -> (k', l)
        for kp in (0..n).filter(|&kp| kp != k && kp != l) {
            let q = index.index(kp, l).expect("distinct");
            matrix[(p, q)] = g[(k, kp)];
        }
        // move the second excitation: (k, l) -> (k, l')
        for lp in (0..n).filter(|&lp| lp != k && lp != l) {
            let q = index.index(k, lp).expect("distinct");
            matrix[(p, q)] = g[(l, lp)];
        }
    }
    Ok(Hamiltonian { manifold: Manifold::Double, matrix })
}

/// Discrete rotation by `2π/N_d` as a permutation of basis states.
///
/// `image[x]` is the state that `x` is carried to: amplitude vectors obey
/// `(R c)_x = c_{image[x]}`, i.e. `R_{x,y} = δ_{y,image[x]}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rotation {
    pub manifold: Manifold,
    pub n_d: usize,
    pub image: Vec<usize>,
}

impl Rotation {
    pub fn dim(&self) -> usize {
        self.image.len()
    }

    pub fn matrix(&self) -> CMatrix {
        let n = self.dim();
        let mut r = CMatrix::zeros(n, n);
        for (x, &y) in self.image.iter().enumerate() {
            r[(x, y)] = Complex64::new(1.0, 0.0);
        }
        r
    }

    /// `R c` without forming the matrix.
    pub fn apply(&self, c: &CVector) -> CVector {
        CVector::from_fn(self.dim(), |x, _| c[self.image[x]])
    }

    /// Cycles of the permutation, each starting at its smallest element and
    /// listed by following `image`. Orbits are ordered by their first element.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.dim()];
        let mut orbits = Vec::new();
        for start in 0..self.dim() {
            if seen[start] {
                continue;
            }
            let mut orbit = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                orbit.push(x);
                x = self.image[x];
            }
            orbits.push(orbit);
        }
        orbits
    }
}

pub fn rotation_operator(manifold: Manifold, geometry: &EmitterArray) -> Result<Rotation> {
    let (Some(n_d), Some(next)) = (geometry.n_d(), geometry.rotation_image()) else {
        return domain("geometry has no ring and hence no discrete rotation");
    };
    if !geometry.has_cyclic_symmetry(SYMMETRY_TOL) {
        return domain(format!("geometry is not invariant under rotation by 2π/{n_d}"));
    }
    let image = match manifold {
        Manifold::Single => next,
        Manifold::Double => {
            let index = PairIndex::new(geometry.len());
            index
                .pairs()
                .iter()
                .map(|&(k, l)| index.index(next[k], next[l]).expect("rotation is a bijection"))
                .collect()
        }
    };
    Ok(Rotation { manifold, n_d, image })
}

/// First Brillouin zone in canonical order `0, 1, −1, 2, −2, …`; for even
/// `N_d` the boundary momentum is reported once as `+N_d/2`.
pub fn brillouin_zone(n_d: usize) -> Vec<i32> {
    let n = n_d as i32;
    let mut zone = vec![0];
    for m in 1..=(n - 1) / 2 {
        zone.push(m);
        zone.push(-m);
    }
    if n % 2 == 0 && n > 0 {
        zone.push(n / 2);
    }
    zone
}

/// Reduce `m` into the first Brillouin zone.
pub fn wrap_momentum(m: i64, n_d: usize) -> i32 {
    let n = n_d as i64;
    let mut r = m.rem_euclid(n);
    if 2 * r > n {
        r -= n;
    }
    r as i32
}

/// Rotation eigenvalue `e^{i m 2π/N_d}` of momentum sector `m`.
pub fn sector_phase(m: i32, n_d: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n_d as f64)
}

#[derive(Debug, Clone)]
pub struct Sector {
    pub m: i32,
    /// Orthonormal columns spanning the sector.
    pub basis: CMatrix,
}

impl Sector {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `B† H B`, the Hamiltonian restricted to this sector.
    pub fn project(&self, h: &CMatrix) -> CMatrix {
        self.basis.adjoint() * h * &self.basis
    }
}

#[derive(Debug, Clone)]
pub struct MomentumBasis {
    pub manifold: Manifold,
    pub n_d: usize,
    pub rotation: Rotation,
    pub sectors: Vec<Sector>,
}

impl MomentumBasis {
    pub fn zone(&self) -> Vec<i32> {
        self.sectors.iter().map(|s| s.m).collect()
    }

    pub fn sector(&self, m: i32) -> Option<&Sector> {
        self.sectors.iter().find(|s| s.m == m)
    }

    pub fn dim(&self) -> usize {
        self.rotation.dim()
    }

    /// Squared norm of the projection of `v` onto each sector, in zone order.
    pub fn weights(&self, v: &CVector) -> Vec<f64> {
        self.sectors
            .iter()
            .map(|s| (s.basis.adjoint() * v).norm_squared())
            .collect()
    }
}

/// Sector bases built from discrete-Fourier combinations over each orbit of
/// the rotation: for orbit `x, Rx, R²x, …` of length `s`, the vector with
/// `c_{R^j x} = e^{i m 2π j/N_d}/√s` is a rotation eigenvector whenever
/// `m·s ≡ 0 (mod N_d)`.
pub fn momentum_basis(manifold: Manifold, geometry: &EmitterArray) -> Result<MomentumBasis> {
    let rotation = rotation_operator(manifold, geometry)?;
    let n_d = rotation.n_d;
    let dim = rotation.dim();
    let orbits = rotation.orbits();
    let sectors = brillouin_zone(n_d)
        .into_iter()
        .map(|m| {
            let columns: Vec<CVector> = orbits
                .iter()
                .filter(|orbit| (m as i64 * orbit.len() as i64).rem_euclid(n_d as i64) == 0)
                .map(|orbit| {
                    let norm = 1.0 / (orbit.len() as f64).sqrt();
                    let mut v = CVector::zeros(dim);
                    for (j, &x) in orbit.iter().enumerate() {
                        v[x] = sector_phase(m, n_d).powi(j as i32) * norm;
                    }
                    v
                })
                .collect();
            let basis = if columns.is_empty() {
                DMatrix::zeros(dim, 0)
            } else {
                CMatrix::from_columns(&columns)
            };
            Sector { m, basis }
        })
        .collect();
    Ok(MomentumBasis { manifold, n_d, rotation, sectors })
}

/// Number of doubly excited eigenstates with momentum `m` supported by
/// `n_r` concentric rings of `n_d` emitters each.
pub fn count_states(n_d: usize, n_r: usize, m: i32) -> Result<usize> {
    if n_d < 2 || n_r < 1 {
        return domain(format!("count_states needs n_d >= 2 and n_r >= 1 (got {n_d}, {n_r})"));
    }
    if !brillouin_zone(n_d).contains(&m) {
        return Err(Error::Domain(format!("m = {m} is outside the first Brillouin zone for N_d = {n_d}")));
    }
    let inter_ring = n_r * (n_r - 1) / 2 * n_d;
    let intra_ring = if n_d.is_multiple_of(2) {
        if m % 2 == 0 {
            n_d / 2
        } else {
            n_d / 2 - 1
        }
    } else {
        (n_d - 1) / 2
    };
    Ok(n_r * intra_ring + inter_ring)
}
