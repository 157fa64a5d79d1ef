//! Flag and config-file settings. Every field is optional so a JSON config
//! can supply any of them; explicit flags win.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use oligomer::farfield::{DetectorConfig, SphereGrid};
use oligomer::geometry::GeometrySpec;
use oligomer::sweep::{Axis, SweepTarget};
use oligomer::Execution;

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryArg {
    Single,
    Ring,
    RingCenter,
    DoubleRing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetArg {
    SingleSpectrum,
    DoubleSpectrum,
    TwoModeModel,
    B1Lifetime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridArg {
    GaussLegendre,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorArg {
    Coincident,
    PolarFixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryArg>,
    /// Emitters per ring
    #[arg(long)]
    pub nd: Option<usize>,
    /// Nearest-neighbour spacing of the (inner) ring, in λ₀
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b_over_a: Option<f64>,
    /// Rotation of the outer ring, in radians
    #[arg(long)]
    pub twist: Option<f64>,
    #[arg(long)]
    pub excitations: Option<u8>,
    /// Restrict output to one momentum sector
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<i32>,
    /// Index of a state in the spectrum ordering
    #[arg(long)]
    pub state: Option<usize>,
    /// B1 state of the six-fold double ring as two signs, e.g. "--", "+-" or "mm"
    #[arg(long, allow_hyphen_values = true)]
    pub b1: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    pub beam_ell: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub beam_spin: Option<i32>,
    #[arg(long)]
    pub cone_deg: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub detuning_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub detuning_max: Option<f64>,
    #[arg(long)]
    pub detuning_steps: Option<usize>,

    #[arg(long)]
    pub theta_nodes: Option<usize>,
    #[arg(long)]
    pub phi_nodes: Option<usize>,
    #[arg(long, value_enum)]
    pub grid: Option<GridArg>,
    #[arg(long, value_enum)]
    pub detectors: Option<DetectorArg>,

    #[arg(long)]
    pub a_min: Option<f64>,
    #[arg(long)]
    pub a_max: Option<f64>,
    #[arg(long)]
    pub a_steps: Option<usize>,
    #[arg(long)]
    pub b_min: Option<f64>,
    #[arg(long)]
    pub b_max: Option<f64>,
    #[arg(long)]
    pub b_steps: Option<usize>,
    #[arg(long, value_enum)]
    pub target: Option<TargetArg>,
    /// Golden-section refinement around the grid optimum
    #[arg(long)]
    #[serde(default)]
    pub refine: bool,
    /// Number of concentric rings (count)
    #[arg(long)]
    pub nr: Option<usize>,

    #[arg(long, value_enum)]
    pub out: Option<Format>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON config file; flags override its entries
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub self_test: bool,
    /// Evaluate grids on one thread
    #[arg(long)]
    #[serde(skip)]
    pub sequential: bool,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl Settings {
    /// Merge the config file named by `--config` under the explicit flags.
    pub fn resolve(mut self) -> Result<Self, UsageError> {
        let Some(config) = self.config.clone() else {
            return Ok(self);
        };
        // `g2 --config coincident` names a detector layout rather than a file
        if !Path::new(&config).exists() {
            if let Ok(detectors) = DetectorArg::from_str(&config, true) {
                self.detectors.get_or_insert(detectors);
                return Ok(self);
            }
        }
        let text = std::fs::read_to_string(&config).map_err(|e| UsageError(format!("cannot read config {config}: {e}")))?;
        let mut base: Settings =
            serde_json::from_str(&text).map_err(|e| UsageError(format!("invalid config {config}: {e}")))?;
        let top = &self;
        overlay!(base, top; geometry, nd, a, b_over_a, twist, excitations, m, state, b1, beam_ell, beam_spin,
            cone_deg, detuning_min, detuning_max, detuning_steps, theta_nodes, phi_nodes, grid, detectors,
            a_min, a_max, a_steps, b_min, b_max, b_steps, target, nr, out, output);
        base.refine |= self.refine;
        base.config = self.config;
        base.self_test = self.self_test;
        base.sequential = self.sequential;
        Ok(base)
    }

    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn format(&self) -> Format {
        self.out.unwrap_or_default()
    }

    pub fn nd(&self) -> usize {
        self.nd.unwrap_or(6)
    }

    pub fn geometry(&self) -> Result<GeometrySpec, UsageError> {
        let tag = self.geometry.ok_or_else(|| UsageError("--geometry is required".into()))?;
        if tag == GeometryArg::Single {
            return Ok(GeometrySpec::single());
        }
        let a = self.a.ok_or_else(|| UsageError("--a is required for ring geometries".into()))?;
        let n_d = self.nd();
        Ok(match tag {
            GeometryArg::Single => unreachable!(),
            GeometryArg::Ring => GeometrySpec::ring(n_d, a),
            GeometryArg::RingCenter => GeometrySpec::ring_center(n_d, a),
            GeometryArg::DoubleRing => {
                let ratio = self
                    .b_over_a
                    .ok_or_else(|| UsageError("--b-over-a is required for the double ring".into()))?;
                let mut spec = GeometrySpec::double_ring(n_d, a, ratio);
                spec.twist = self.twist.unwrap_or(0.0);
                spec
            }
        })
    }

    /// Geometry template for sweeps, where `a` (and `b/a`) come from the axes.
    pub fn geometry_template(&self) -> Result<GeometrySpec, UsageError> {
        let mut probe = self.clone();
        probe.a.get_or_insert(self.a_min.unwrap_or(0.1));
        if self.b_min.is_some() {
            probe.b_over_a = self.b_min;
        }
        probe.geometry()
    }

    pub fn excitations(&self) -> Result<u8, UsageError> {
        match self.excitations.unwrap_or(1) {
            e @ (1 | 2) => Ok(e),
            e => Err(UsageError(format!("--excitations must be 1 or 2, got {e}"))),
        }
    }

    fn axis(name: &str, min: Option<f64>, max: Option<f64>, steps: Option<usize>) -> Result<Axis, UsageError> {
        match (min, max, steps) {
            (Some(min), Some(max), Some(steps)) => {
                Axis::new(min, max, steps).map_err(|e| UsageError(format!("--{name}-*: {e}")))
            }
            _ => Err(UsageError(format!("--{name}-min, --{name}-max and --{name}-steps are required"))),
        }
    }

    pub fn a_axis(&self) -> Result<Axis, UsageError> {
        Self::axis("a", self.a_min, self.a_max, self.a_steps)
    }

    pub fn b_axis(&self) -> Result<Option<Axis>, UsageError> {
        if self.b_min.is_none() && self.b_max.is_none() && self.b_steps.is_none() {
            return Ok(None);
        }
        Self::axis("b", self.b_min, self.b_max, self.b_steps).map(Some)
    }

    pub fn target(&self) -> SweepTarget {
        match self.target.unwrap_or(TargetArg::SingleSpectrum) {
            TargetArg::SingleSpectrum => SweepTarget::SingleSpectrum,
            TargetArg::DoubleSpectrum => SweepTarget::DoubleSpectrum,
            TargetArg::TwoModeModel => SweepTarget::TwoModeModel,
            TargetArg::B1Lifetime => SweepTarget::B1Lifetime,
        }
    }

    pub fn sphere_grid(&self, default: GridArg) -> Result<(GridArg, SphereGrid), UsageError> {
        let kind = self.grid.unwrap_or(default);
        let n_theta = self.theta_nodes.unwrap_or(oligomer::farfield::DEFAULT_THETA_NODES);
        let n_phi = self.phi_nodes.unwrap_or(oligomer::farfield::DEFAULT_PHI_NODES);
        let grid = match kind {
            GridArg::GaussLegendre => SphereGrid::gauss_legendre(n_theta, n_phi),
            GridArg::Uniform => SphereGrid::uniform(n_theta, n_phi),
        }
        .map_err(|e| UsageError(e.to_string()))?;
        Ok((kind, grid))
    }

    pub fn detectors(&self) -> DetectorConfig {
        match self.detectors.unwrap_or(DetectorArg::Coincident) {
            DetectorArg::Coincident => DetectorConfig::Coincident,
            DetectorArg::PolarFixed => DetectorConfig::PolarFixed,
        }
    }
}
