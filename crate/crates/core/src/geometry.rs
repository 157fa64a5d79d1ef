//! Emitter arrays: single rings, rings with a central emitter, concentric
//! double rings and generic planar point sets.
//!
//! Ring emitter `k` (0-based) sits at angle `φ_k = 2πk/N_d`; the first
//! emitter of every ring lies on the +x axis (plus an optional twist for the
//! outer ring of a double ring). For a ring with a central emitter the
//! centre is stored last.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Which construction produced an array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryTag {
    /// A lone emitter at the origin.
    Single,
    Ring,
    RingCenter,
    DoubleRing,
    /// Arbitrary planar points without assumed symmetry.
    Points,
}

/// Serializable description of a geometry; positions are always recomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub tag: GeometryTag,
    #[serde(default)]
    pub n_d: usize,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b_over_a: Option<f64>,
    #[serde(default)]
    pub twist: f64,
}

impl GeometrySpec {
    pub fn ring(n_d: usize, a: f64) -> Self {
        Self { tag: GeometryTag::Ring, n_d, a, b_over_a: None, twist: 0.0 }
    }

    pub fn ring_center(n_d: usize, a: f64) -> Self {
        Self { tag: GeometryTag::RingCenter, n_d, a, b_over_a: None, twist: 0.0 }
    }

    pub fn double_ring(n_d: usize, a: f64, b_over_a: f64) -> Self {
        Self { tag: GeometryTag::DoubleRing, n_d, a, b_over_a: Some(b_over_a), twist: 0.0 }
    }

    pub fn single() -> Self {
        Self { tag: GeometryTag::Single, n_d: 1, a: 0.0, b_over_a: None, twist: 0.0 }
    }

    pub fn build(&self) -> Result<EmitterArray> {
        match self.tag {
            GeometryTag::Single => Ok(build_single()),
            GeometryTag::Ring => build_ring(self.n_d, self.a),
            GeometryTag::RingCenter => build_ring_plus_center(self.n_d, self.a),
            GeometryTag::DoubleRing => {
                let ratio = self
                    .b_over_a
                    .ok_or_else(|| crate::Error::Domain("double ring needs b_over_a".into()))?;
                build_double_ring_twisted(self.n_d, self.a, ratio, self.twist)
            }
            GeometryTag::Points => domain("point sets cannot be rebuilt from a spec"),
        }
    }
}

/// Positions (in λ₀) of z-oriented emitters in the `z = 0` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterArray {
    positions: Vec<Vector3<f64>>,
    /// 0 = centre or inner ring, 1 = outer ring (or the ring when a centre exists).
    ring_of: Vec<usize>,
    /// Cyclic orbits: each ring listed in order of increasing angle.
    rings: Vec<Vec<usize>>,
    spec: GeometrySpec,
}

impl EmitterArray {
    /// Generic planar point set. Points must be distinct and lie at `z = 0`.
    pub fn from_points(points: &[[f64; 2]]) -> Result<Self> {
        let positions: Vec<_> = points.iter().map(|p| Vector3::new(p[0], p[1], 0.0)).collect();
        let spec = GeometrySpec { tag: GeometryTag::Points, n_d: 0, a: 0.0, b_over_a: None, twist: 0.0 };
        let array = Self { ring_of: vec![0; positions.len()], positions, rings: Vec::new(), spec };
        array.validate()?;
        Ok(array)
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn ring_of(&self) -> &[usize] {
        &self.ring_of
    }

    /// Emitters grouped into rings, each in angular order.
    pub fn rings(&self) -> &[Vec<usize>] {
        &self.rings
    }

    pub fn spec(&self) -> &GeometrySpec {
        &self.spec
    }

    pub fn tag(&self) -> GeometryTag {
        self.spec.tag
    }

    /// Number of emitters per ring, or `None` for arrays without a ring.
    pub fn n_d(&self) -> Option<usize> {
        self.rings.first().map(Vec::len)
    }

    pub fn distance(&self, k: usize, l: usize) -> f64 {
        (self.positions[k] - self.positions[l]).norm()
    }

    /// Smallest pairwise distance (`+∞` for fewer than two emitters).
    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..self.len() {
            for l in k + 1..self.len() {
                best = best.min(self.distance(k, l));
            }
        }
        best
    }

    /// Map each emitter to its image under rotation by `2π/N_d`: the next
    /// emitter of its ring, or itself for emitters on the axis.
    pub fn rotation_image(&self) -> Option<Vec<usize>> {
        let n_d = self.n_d()?;
        let mut next: Vec<usize> = (0..self.len()).collect();
        for ring in &self.rings {
            for (j, &k) in ring.iter().enumerate() {
                next[k] = ring[(j + 1) % n_d];
            }
        }
        Some(next)
    }

    /// Check numerically that the rotation by `2π/N_d` maps every emitter
    /// onto its ring successor.
    pub fn has_cyclic_symmetry(&self, tol: f64) -> bool {
        let (Some(n_d), Some(next)) = (self.n_d(), self.rotation_image()) else {
            return false;
        };
        if self.rings.iter().any(|r| r.len() != n_d) {
            return false;
        }
        let angle = 2.0 * PI / n_d as f64;
        let (s, c) = angle.sin_cos();
        self.positions.iter().enumerate().all(|(k, p)| {
            let rotated = Vector3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z);
            (rotated - self.positions[next[k]]).norm() <= tol
        })
    }

    fn validate(&self) -> Result<()> {
        if self.positions.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
            return domain("emitter positions must be finite");
        }
        let d = self.min_distance();
        if !(d > 0.0) {
            return domain("emitters must be at distinct positions");
        }
        Ok(())
    }
}

/// Ring radius for `n_d` emitters with nearest-neighbour spacing `a`.
pub fn ring_radius(n_d: usize, a: f64) -> f64 {
    a / (2.0 * (PI / n_d as f64).sin())
}

/// Angular coordinate `φ_k = 2πk/N_d` of ring emitter `k` (0-based).
pub fn ring_angle(n_d: usize, k: usize) -> f64 {
    2.0 * PI * k as f64 / n_d as f64
}

fn check_ring_args(n_d: usize, a: f64) -> Result<()> {
    if n_d < 2 {
        return domain(format!("a ring needs at least two emitters, got {n_d}"));
    }
    if !(a > 0.0) || !a.is_finite() {
        return domain(format!("ring spacing must be positive, got {a}"));
    }
    Ok(())
}

fn ring_points(n_d: usize, radius: f64, offset: f64) -> impl Iterator<Item = Vector3<f64>> {
    (0..n_d).map(move |k| {
        let phi = ring_angle(n_d, k) + offset;
        Vector3::new(radius * phi.cos(), radius * phi.sin(), 0.0)
    })
}

pub fn build_single() -> EmitterArray {
    EmitterArray {
        positions: vec![Vector3::zeros()],
        ring_of: vec![0],
        rings: Vec::new(),
        spec: GeometrySpec::single(),
    }
}

pub fn build_ring(n_d: usize, spacing_a: f64) -> Result<EmitterArray> {
    check_ring_args(n_d, spacing_a)?;
    let positions: Vec<_> = ring_points(n_d, ring_radius(n_d, spacing_a), 0.0).collect();
    let array = EmitterArray {
        positions,
        ring_of: vec![0; n_d],
        rings: vec![(0..n_d).collect()],
        spec: GeometrySpec::ring(n_d, spacing_a),
    };
    array.validate()?;
    Ok(array)
}

pub fn build_ring_plus_center(n_d: usize, spacing_a: f64) -> Result<EmitterArray> {
    check_ring_args(n_d, spacing_a)?;
    let mut positions: Vec<_> = ring_points(n_d, ring_radius(n_d, spacing_a), 0.0).collect();
    positions.push(Vector3::zeros());
    let mut ring_of = vec![1; n_d];
    ring_of.push(0);
    let array = EmitterArray {
        positions,
        ring_of,
        rings: vec![(0..n_d).collect()],
        spec: GeometrySpec::ring_center(n_d, spacing_a),
    };
    array.validate()?;
    Ok(array)
}

pub fn build_double_ring(n_d: usize, spacing_a: f64, ratio_b_over_a: f64) -> Result<EmitterArray> {
    build_double_ring_twisted(n_d, spacing_a, ratio_b_over_a, 0.0)
}

/// Concentric double ring; the outer ring is rotated by `twist` radians.
/// Inner emitters are `0..N_d`, outer emitters `N_d..2N_d`.
pub fn build_double_ring_twisted(
    n_d: usize,
    spacing_a: f64,
    ratio_b_over_a: f64,
    twist: f64,
) -> Result<EmitterArray> {
    check_ring_args(n_d, spacing_a)?;
    if !(ratio_b_over_a > 1.0) || !ratio_b_over_a.is_finite() {
        return domain(format!("outer ring must be larger than inner ring (b/a = {ratio_b_over_a})"));
    }
    if !twist.is_finite() {
        return domain("twist must be finite");
    }
    let inner = ring_radius(n_d, spacing_a);
    let outer = ring_radius(n_d, spacing_a * ratio_b_over_a);
    let positions: Vec<_> = ring_points(n_d, inner, 0.0).chain(ring_points(n_d, outer, twist)).collect();
    let mut ring_of = vec![0; n_d];
    ring_of.extend(std::iter::repeat_n(1, n_d));
    let mut spec = GeometrySpec::double_ring(n_d, spacing_a, ratio_b_over_a);
    spec.twist = twist;
    let array = EmitterArray {
        positions,
        ring_of,
        rings: vec![(0..n_d).collect(), (n_d..2 * n_d).collect()],
        spec,
    };
    array.validate()?;
    Ok(array)
}
