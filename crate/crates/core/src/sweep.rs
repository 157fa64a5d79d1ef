//! Parameter sweeps over ring spacing (and ring ratio) and the 2-D lifetime
//! optimization of the B₁ doubly excited state.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{GeometrySpec, GeometryTag};
use crate::hybrid::{b1_minus_minus, build_b1_states, ring_center_model, ring_ring_model_twisted};
use crate::manifolds::{brillouin_zone, Manifold};
use crate::par::{self, Execution};
use crate::spectra::{solve, HybridTag};

/// Inclusive, evenly spaced axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        let axis = Self { min, max, steps };
        axis.validate()?;
        Ok(axis)
    }

    /// A single-point axis.
    pub fn point(value: f64) -> Self {
        Self { min: value, max: value, steps: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0) || !self.max.is_finite() {
            return domain(format!("axis bounds must be positive and finite, got [{}, {}]", self.min, self.max));
        }
        match self.steps {
            0 => domain("axis needs at least one point"),
            1 if self.min == self.max => Ok(()),
            1 => domain("a one-point axis needs min == max"),
            _ if self.max > self.min => Ok(()),
            _ => domain(format!("axis must be strictly increasing, got [{}, {}]", self.min, self.max)),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.max } else { self.min + h * i as f64 })
            .collect()
    }

    pub fn spacing(&self) -> f64 {
        if self.steps < 2 {
            0.0
        } else {
            (self.max - self.min) / (self.steps - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepTarget {
    SingleSpectrum,
    DoubleSpectrum,
    TwoModeModel,
    B1Lifetime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Template; `a` and `b_over_a` are replaced by the axis values.
    pub geometry: GeometrySpec,
    pub a_axis: Axis,
    pub b_axis: Option<Axis>,
    pub target: SweepTarget,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.a_axis.validate()?;
        if self.a_axis.steps < 2 {
            return domain("sweep axes need at least two points");
        }
        if let Some(b) = &self.b_axis {
            b.validate()?;
            if b.steps < 2 {
                return domain("sweep axes need at least two points");
            }
            if self.geometry.tag != GeometryTag::DoubleRing {
                return domain("a b/a axis needs the double-ring geometry");
            }
        }
        match (self.target, self.geometry.tag) {
            (SweepTarget::TwoModeModel, GeometryTag::RingCenter | GeometryTag::DoubleRing) => Ok(()),
            (SweepTarget::TwoModeModel, _) => domain("the two-mode model needs a ring-center or double-ring geometry"),
            (SweepTarget::B1Lifetime, GeometryTag::DoubleRing) if self.geometry.n_d == 6 => Ok(()),
            (SweepTarget::B1Lifetime, _) => domain("B1 states need the six-fold double ring"),
            (_, GeometryTag::Ring | GeometryTag::RingCenter | GeometryTag::DoubleRing) => Ok(()),
            _ => domain("sweeps need a ring-based geometry"),
        }
    }

    /// Grid points in row-major order (`a` outer, `b/a` inner).
    pub fn points(&self) -> Vec<(f64, Option<f64>)> {
        let bs: Vec<Option<f64>> = match &self.b_axis {
            Some(b) => b.values().into_iter().map(Some).collect(),
            None => vec![self.geometry.b_over_a],
        };
        self.a_axis
            .values()
            .into_iter()
            .flat_map(|a| bs.iter().map(move |&b| (a, b)))
            .collect()
    }
}

/// One state observed at a grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSample {
    pub index: usize,
    pub m: Option<i32>,
    /// Hybrid tag, or `"+-"`-style pair for B₁ states.
    pub tag: Option<String>,
    pub energy: Complex64,
}

impl StateSample {
    pub fn gamma(&self) -> f64 {
        -2.0 * self.energy.im
    }

    pub fn lifetime_enhancement(&self) -> f64 {
        1.0 / self.gamma()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub a: f64,
    pub b_over_a: Option<f64>,
    pub result: std::result::Result<Vec<StateSample>, Error>,
}

fn tag_string(tag: Option<HybridTag>) -> Option<String> {
    tag.map(|t| t.sign().to_string())
}

/// Evaluate one grid point.
pub fn evaluate(template: &GeometrySpec, target: SweepTarget, a: f64, b_over_a: Option<f64>) -> Result<Vec<StateSample>> {
    let mut spec = template.clone();
    spec.a = a;
    spec.b_over_a = b_over_a;
    let n_d = spec.n_d;
    match target {
        SweepTarget::SingleSpectrum | SweepTarget::DoubleSpectrum => {
            let manifold = if target == SweepTarget::SingleSpectrum { Manifold::Single } else { Manifold::Double };
            let spectrum = solve(&spec.build()?, manifold)?;
            Ok(spectrum
                .states
                .iter()
                .enumerate()
                .map(|(index, s)| StateSample { index, m: s.m, tag: tag_string(s.hybrid), energy: s.energy })
                .collect())
        }
        SweepTarget::TwoModeModel => {
            let models = match spec.tag {
                GeometryTag::RingCenter => vec![(0, ring_center_model(n_d, a)?)],
                GeometryTag::DoubleRing => {
                    let ratio = b_over_a.ok_or_else(|| Error::Domain("double ring needs b/a".into()))?;
                    brillouin_zone(n_d)
                        .into_iter()
                        .map(|m| Ok((m, ring_ring_model_twisted(n_d, a, ratio, spec.twist, m)?)))
                        .collect::<Result<Vec<_>>>()?
                }
                _ => return domain("the two-mode model needs a ring-center or double-ring geometry"),
            };
            let mut out = Vec::with_capacity(2 * models.len());
            for (m, model) in models {
                for branch in model.branches() {
                    let index = out.len();
                    out.push(StateSample { index, m: Some(m), tag: Some(branch.tag.sign().to_string()), energy: branch.energy });
                }
            }
            Ok(out)
        }
        SweepTarget::B1Lifetime => {
            let ratio = b_over_a.ok_or_else(|| Error::Domain("B1 states need b/a".into()))?;
            Ok(build_b1_states(a, ratio)?
                .into_iter()
                .enumerate()
                .map(|(index, s)| StateSample {
                    index,
                    m: Some(3),
                    tag: Some(format!("{}{}", s.s1.sign(), s.s2.sign())),
                    energy: s.energy,
                })
                .collect())
        }
    }
}

pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::new();
    run_sweep_chunked(spec, exec, usize::MAX, |chunk| {
        out.extend(chunk);
        Ok(())
    })?;
    Ok(out)
}

/// Evaluate the grid in chunks of `chunk` points and hand each chunk, in
/// grid order, to `sink`; memory stays bounded by the chunk size.
pub fn run_sweep_chunked<F>(spec: &SweepSpec, exec: Execution, chunk: usize, mut sink: F) -> Result<()>
where
    F: FnMut(Vec<SweepPoint>) -> Result<()>,
{
    spec.validate()?;
    let points = spec.points();
    for block in points.chunks(chunk.max(1)) {
        let evaluated = par::map(exec, block, |&(a, b)| SweepPoint {
            a,
            b_over_a: b,
            result: evaluate(&spec.geometry, spec.target, a, b),
        });
        sink(evaluated)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// Grid argmax `(a/λ₀, b/a)`.
    pub best_point: (f64, f64),
    pub best_lifetime_enhancement: f64,
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    /// `γ₀/Γ^{(3)}_{−−}` indexed `[a][b]`; `None` where evaluation failed.
    pub grid_surface: Vec<Vec<Option<f64>>>,
    /// Golden-section refinement around the grid argmax, when requested.
    pub refined: Option<RefinedOptimum>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedOptimum {
    pub point: (f64, f64),
    pub lifetime_enhancement: f64,
}

/// `γ₀/Γ^{(3)}_{−−}` of the six-fold double ring.
pub fn b1_lifetime(a: f64, b_over_a: f64) -> Result<f64> {
    Ok(b1_minus_minus(a, b_over_a)?.lifetime_enhancement())
}

/// Grid search of `γ₀/Γ^{(3)}_{−−}` over `a × b/a`, optionally refined by
/// golden-section searches along each axis.
pub fn optimize(a_axis: &Axis, b_axis: &Axis, refine: bool, exec: Execution) -> Result<OptimizationResult> {
    a_axis.validate()?;
    b_axis.validate()?;
    if b_axis.min <= 1.0 {
        return domain(format!("b/a must exceed 1, got {}", b_axis.min));
    }
    let a_values = a_axis.values();
    let b_values = b_axis.values();
    let nb = b_values.len();
    let flat = par::map_range(exec, a_values.len() * nb, |q| {
        b1_lifetime(a_values[q / nb], b_values[q % nb]).ok().filter(|v| v.is_finite())
    });
    let grid_surface: Vec<Vec<Option<f64>>> = flat.chunks(nb).map(<[_]>::to_vec).collect();
    let (best_q, best) = flat
        .iter()
        .enumerate()
        .filter_map(|(q, v)| v.map(|v| (q, v)))
        .fold(None, |acc: Option<(usize, f64)>, (q, v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((q, v)),
        })
        .ok_or_else(|| Error::Domain("no grid point could be evaluated".into()))?;
    let best_point = (a_values[best_q / nb], b_values[best_q % nb]);

    let refined = refine.then(|| {
        let objective = |a: f64, b: f64| b1_lifetime(a, b).unwrap_or(f64::NEG_INFINITY);
        let (mut a, mut b) = best_point;
        let ha = a_axis.spacing().max(1e-3 * a);
        let hb = b_axis.spacing().max(1e-3 * b);
        for _ in 0..3 {
            a = golden_max(|x| objective(x, b), (a - ha).max(1e-6), a + ha, 1e-7);
            b = golden_max(|y| objective(a, y), (b - hb).max(1.0 + 1e-9), b + hb, 1e-7);
        }
        let value = objective(a, b);
        if value >= best {
            RefinedOptimum { point: (a, b), lifetime_enhancement: value }
        } else {
            RefinedOptimum { point: best_point, lifetime_enhancement: best }
        }
    });

    Ok(OptimizationResult { best_point, best_lifetime_enhancement: best, a_values, b_values, grid_surface, refined })
}

/// Golden-section search for a maximum of a unimodal function on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}
