use std::f64::consts::PI;

use serde::Serialize;
use serde_json::json;

use oligomer::drive::{
    find_features, linspace, resolve_resonances, scattering_cross_section_sweep, single_emitter_cross_section, BesselBeam,
};
use oligomer::eig::CVector;
use oligomer::farfield::{
    g2_map, pattern_value, power_kernel, power_ratio_from_kernel, radiation_pattern, total_power, DetectorConfig,
    DetectorPair, PairState, SphereGrid, P_SINGLE,
};
use oligomer::geometry::{build_double_ring, build_ring, build_single, GeometrySpec, GeometryTag};
use oligomer::hybrid::build_b1_states_with;
use oligomer::manifolds::{brillouin_zone, build_h2, count_states, momentum_basis, Manifold};
use oligomer::spectra::{solve, EigenState, HybridTag};
use oligomer::sweep::{evaluate, optimize as optimize_grid, run_sweep_chunked, Axis, SweepPoint, SweepSpec};

use crate::output::{num, opt, Output};
use crate::settings::{GridArg, Settings};
use crate::{Failure, UsageError};

const SWEEP_CHUNK: usize = 64;

fn open(s: &Settings, command: &'static str, config: &impl Serialize, columns: &[&str]) -> Result<Output, Failure> {
    Ok(Output::open(s.output.as_deref(), s.format(), command, config, columns)?)
}

fn check(name: &str, deviation: f64, tol: f64) -> Result<(), Failure> {
    let pass = deviation <= tol;
    eprintln!(
        "self-test {name}: {} (deviation {deviation:.3e}, tolerance {tol:.0e})",
        if pass { "PASS" } else { "FAIL" }
    );
    if pass {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("self-test {name} failed")))
    }
}

fn state_fields(index: usize, s: &EigenState) -> Vec<String> {
    vec![
        index.to_string(),
        opt(s.m),
        opt(s.irrep.map(|i| format!("{i:?}"))),
        opt(s.hybrid.map(HybridTag::sign)),
        num(s.energy.re),
        num(s.energy.im),
        num(s.gamma()),
        num(s.lifetime_enhancement()),
    ]
}

const STATE_COLUMNS: [&str; 8] = ["index", "m", "irrep", "hybrid", "re_energy", "im_energy", "gamma", "lifetime_enhancement"];

#[derive(Serialize)]
struct SpectrumConfig {
    geometry: GeometrySpec,
    excitations: u8,
    m: Option<i32>,
}

pub fn spectrum(s: Settings) -> Result<(), Failure> {
    let config = SpectrumConfig { geometry: s.geometry()?, excitations: s.excitations()?, m: s.m };
    let array = config.geometry.build()?;
    let manifold = if config.excitations == 1 { Manifold::Single } else { Manifold::Double };
    let spectrum = solve(&array, manifold)?;
    if s.self_test {
        let n = array.len() as f64;
        let expect = if manifold == Manifold::Single { n } else { n * (n - 1.0) };
        check("trace sum rule", (spectrum.total_gamma() - expect).abs() / expect, 1e-10)?;
    }
    let selected: Vec<(usize, &EigenState)> =
        spectrum.states.iter().enumerate().filter(|(_, st)| config.m.is_none() || st.m == config.m).collect();

    let mut out = open(&s, "spectrum", &config, &STATE_COLUMNS)?;
    if out.is_csv() {
        out.note("states", selected.len())?;
        for (i, st) in &selected {
            out.row(&state_fields(*i, st))?;
        }
    } else {
        out.note("states", selected.len())?;
        let data: Vec<_> = selected.iter().map(|(i, st)| json!({ "index": i, "state": st.record() })).collect();
        out.json(data)?;
    }
    Ok(out.flush()?)
}

#[derive(Serialize)]
struct SweepConfig {
    #[serde(flatten)]
    spec: SweepSpec,
    m: Option<i32>,
}

fn sweep_rows(point: &SweepPoint, m: Option<i32>) -> Vec<Vec<String>> {
    let (a, b) = (num(point.a), opt(point.b_over_a));
    match &point.result {
        Ok(states) => states
            .iter()
            .filter(|st| m.is_none() || st.m == m)
            .map(|st| {
                vec![
                    a.clone(),
                    b.clone(),
                    st.index.to_string(),
                    opt(st.m),
                    st.tag.clone().unwrap_or_default(),
                    num(st.energy.re),
                    num(st.energy.im),
                    num(st.gamma()),
                    num(st.lifetime_enhancement()),
                    String::new(),
                ]
            })
            .collect(),
        Err(e) => {
            let mut row = vec![a, b];
            row.extend(std::iter::repeat_n(String::new(), 7));
            row.push(format!("\"{}\"", e.to_string().replace('"', "'")));
            vec![row]
        }
    }
}

pub fn sweep(s: Settings) -> Result<(), Failure> {
    let spec = SweepSpec { geometry: s.geometry_template()?, a_axis: s.a_axis()?, b_axis: s.b_axis()?, target: s.target() };
    spec.validate()?;
    let config = SweepConfig { spec, m: s.m };
    let spec = &config.spec;
    let mut out = open(&s, "sweep", &config, &["a", "b_over_a", "index", "m", "tag", "re_energy", "im_energy", "gamma", "lifetime_enhancement", "error"])?;
    let (mut total, mut failed) = (0, 0);
    let mut records = Vec::new();
    let mut first = true;
    let mut reproducible = None;
    run_sweep_chunked(spec, s.execution(), SWEEP_CHUNK, |chunk| {
        if s.self_test && first {
            let p = &chunk[0];
            let again = evaluate(&spec.geometry, spec.target, p.a, p.b_over_a);
            let same = match (&again, &p.result) {
                (Ok(x), Ok(y)) => x == y,
                (Err(x), Err(y)) => x == y,
                _ => false,
            };
            reproducible = Some(same);
        }
        first = false;
        for point in &chunk {
            total += 1;
            failed += usize::from(point.result.is_err());
            if out.is_csv() {
                for row in sweep_rows(point, config.m) {
                    out.row(&row).map_err(|e| oligomer::Error::Construction(e.to_string()))?;
                }
            } else {
                records.push(match &point.result {
                    Ok(states) => json!({
                        "a": point.a,
                        "b_over_a": point.b_over_a,
                        "states": states.iter().filter(|st| config.m.is_none() || st.m == config.m).collect::<Vec<_>>(),
                    }),
                    Err(e) => json!({ "a": point.a, "b_over_a": point.b_over_a, "error": e.to_string() }),
                });
            }
        }
        out.flush().map_err(|e| oligomer::Error::Construction(e.to_string()))
    })?;
    if !out.is_csv() {
        out.note("points", total)?;
        out.note("failed", failed)?;
        out.json(records)?;
    }
    out.flush()?;
    if let Some(same) = reproducible {
        check("reproducibility", if same { 0.0 } else { 1.0 }, 0.0)?;
    }
    match failed {
        0 => Ok(()),
        f if f == total => Err(Failure::Numerical(format!("all {total} grid points failed"))),
        f => Err(Failure::Partial { failed: f, total }),
    }
}

#[derive(Serialize)]
struct DetuningAxis {
    min: f64,
    max: f64,
    steps: usize,
}

#[derive(Serialize)]
struct ScsConfig {
    geometry: GeometrySpec,
    beam: BesselBeam,
    cone_deg: f64,
    detuning: DetuningAxis,
    grid: GridArg,
    theta_nodes: usize,
    phi_nodes: usize,
}

pub fn scs(s: Settings) -> Result<(), Failure> {
    let cone_deg = s.cone_deg.unwrap_or(60.0);
    let beam = BesselBeam::with_cone(s.beam_ell.unwrap_or(1), s.beam_spin.unwrap_or(-1), cone_deg.to_radians())?;
    let detuning = DetuningAxis {
        min: s.detuning_min.unwrap_or(-5.0),
        max: s.detuning_max.unwrap_or(5.0),
        steps: s.detuning_steps.unwrap_or(1001),
    };
    let (kind, grid) = s.sphere_grid(GridArg::GaussLegendre)?;
    let config = ScsConfig {
        geometry: s.geometry()?,
        beam,
        cone_deg,
        theta_nodes: grid.theta.len(),
        phi_nodes: grid.phi.len(),
        grid: kind,
        detuning,
    };
    let detunings = linspace(config.detuning.min, config.detuning.max, config.detuning.steps)?;
    let array = config.geometry.build()?;
    let spectrum = scattering_cross_section_sweep(&array, &beam, &detunings, &grid, s.execution())?;
    if s.self_test {
        check("single-emitter cross section", (single_emitter_cross_section(0.0) - 1.5 / PI).abs(), 1e-8)?;
        let reference = scattering_cross_section_sweep(&build_single(), &beam, &detunings, &grid, s.execution())?;
        let dev = reference.points.iter().map(|p| p.value.as_ref().map_or(f64::INFINITY, |v| (v - 1.0).abs())).fold(0.0, f64::max);
        check("single-emitter normalization", dev, 1e-8)?;
    }
    let (x, y) = spectrum.valid();
    let features = find_features(&x, &y);
    // lowest-order rational fit; absent when no order up to four reproduces the samples
    let resonances = resolve_resonances(&x, &y, 4, 1e-6).ok();
    let failed = spectrum.failures();

    let mut out = open(&s, "scs", &config, &["detuning", "value", "error"])?;
    if out.is_csv() {
        out.note("features", &features)?;
        out.note("resonances", &resonances)?;
        for p in &spectrum.points {
            let (value, error) = match &p.value {
                Ok(v) => (num(*v), String::new()),
                Err(e) => ("nan".into(), format!("\"{}\"", e.to_string().replace('"', "'"))),
            };
            out.row(&[num(p.detuning), value, error])?;
        }
    } else {
        out.note("features", &features)?;
        out.note("resonances", &resonances)?;
        let data: Vec<_> = spectrum
            .points
            .iter()
            .map(|p| match &p.value {
                Ok(v) => json!({ "detuning": p.detuning, "value": v }),
                Err(e) => json!({ "detuning": p.detuning, "value": null, "error": e.to_string() }),
            })
            .collect();
        out.json(data)?;
    }
    out.flush()?;
    match failed {
        0 => Ok(()),
        f if f == spectrum.points.len() => Err(Failure::Numerical("every detuning failed".into())),
        f => Err(Failure::Partial { failed: f, total: spectrum.points.len() }),
    }
}

#[derive(Serialize)]
struct PatternConfig {
    geometry: GeometrySpec,
    state: usize,
    grid: GridArg,
    theta_nodes: usize,
    phi_nodes: usize,
}

/// Largest `|f(θ, φ + 2π/N_d) − f(θ, φ)|` over the grid nodes.
fn rotation_deviation(grid: &SphereGrid, n_d: usize, f: impl Fn(f64, f64) -> Option<f64>) -> f64 {
    let step = 2.0 * PI / n_d as f64;
    (0..grid.len())
        .filter_map(|q| {
            let (t, p, _) = grid.node(q);
            Some((f(t, p + step)? - f(t, p)?).abs())
        })
        .fold(0.0, f64::max)
}

pub fn pattern(s: Settings) -> Result<(), Failure> {
    let geometry = s.geometry()?;
    let array = geometry.build()?;
    let spectrum = solve(&array, Manifold::Single)?;
    let index = match (s.state, s.m) {
        (Some(i), _) => i,
        (None, Some(m)) => {
            let best = spectrum.most_subradiant(m).ok_or_else(|| UsageError(format!("no state with m = {m}")))?;
            spectrum.states.iter().position(|st| std::ptr::eq(st, best)).unwrap_or(0)
        }
        (None, None) => 0,
    };
    let state = spectrum
        .states
        .get(index)
        .ok_or_else(|| UsageError(format!("state {index} out of range (0..{})", spectrum.states.len())))?;
    let (kind, grid) = s.sphere_grid(GridArg::GaussLegendre)?;
    let config = PatternConfig { geometry, state: index, grid: kind, theta_nodes: grid.theta.len(), phi_nodes: grid.phi.len() };
    let map = radiation_pattern(&state.amplitudes, &array, &grid, s.execution())?;
    let peak = map.values.iter().copied().fold(0.0, f64::max);
    let power_ratio = total_power(&map) / P_SINGLE;

    if s.self_test {
        let kernel = power_kernel(&array, &SphereGrid::default(), s.execution());
        let ratio = power_ratio_from_kernel(&state.amplitudes, &kernel);
        check("power balance", (ratio - state.gamma()).abs() / state.gamma().max(1e-300), 1e-6)?;
        if let Some(n_d) = array.n_d().filter(|&n| n > 1) {
            let dev = rotation_deviation(&grid, n_d, |t, p| Some(pattern_value(&state.amplitudes, &array, t, p)));
            check("rotation invariance", dev / peak.max(f64::MIN_POSITIVE), 1e-12)?;
        }
    }

    let mut out = open(&s, "pattern", &config, &["theta", "phi", "value", "normalized", "mask"])?;
    let info = json!({
        "index": index,
        "m": state.m,
        "energy": [state.energy.re, state.energy.im],
        "gamma": state.gamma(),
    });
    out.note("state", info)?;
    out.note("power_ratio", power_ratio)?;
    if out.is_csv() {
        for (t, p, v, _) in map.rows() {
            out.row(&[num(t), num(p), num(v), num(v / peak), "1".into()])?;
        }
    } else {
        out.json(&map)?;
    }
    Ok(out.flush()?)
}

fn parse_b1(tag: &str) -> Result<usize, UsageError> {
    let signs: Vec<usize> = tag
        .chars()
        .map(|c| match c {
            '+' | 'p' => Ok(0),
            '-' | 'm' => Ok(1),
            _ => Err(UsageError(format!("--b1 takes two signs such as \"--\" or \"pm\", got {tag:?}"))),
        })
        .collect::<Result<_, _>>()?;
    match signs[..] {
        [s1, s2] => Ok(2 * s1 + s2),
        _ => Err(UsageError(format!("--b1 takes exactly two signs, got {tag:?}"))),
    }
}

#[derive(Serialize)]
struct G2Config {
    geometry: GeometrySpec,
    state: String,
    detectors: DetectorConfig,
    grid: GridArg,
    theta_nodes: usize,
    phi_nodes: usize,
}

pub fn g2(s: Settings) -> Result<(), Failure> {
    let geometry = s.geometry()?;
    let array = geometry.build()?;
    if array.len() < 2 {
        return Err(UsageError("g2 needs at least two emitters".into()).into());
    }
    let six_fold_double = geometry.tag == GeometryTag::DoubleRing && geometry.n_d == 6 && geometry.twist == 0.0;
    let b1 = match (&s.b1, s.state) {
        (Some(tag), _) => Some(parse_b1(tag)?),
        (None, None) if six_fold_double => Some(3),
        _ => None,
    };
    let (label, wedge, energy): (String, CVector, _) = match b1 {
        Some(k) => {
            if !six_fold_double {
                return Err(UsageError("B1 states need the untwisted six-fold double ring".into()).into());
            }
            let h2 = build_h2(&array)?;
            let st = build_b1_states_with(&array, &h2.matrix)?.swap_remove(k);
            (format!("b1:{}{}", st.s1.sign(), st.s2.sign()), st.state.amplitudes.clone(), st.energy)
        }
        None => {
            let doubles = solve(&array, Manifold::Double)?;
            let index = match s.state {
                Some(i) => i,
                None => (0..doubles.states.len())
                    .min_by(|&i, &j| doubles.states[i].gamma().total_cmp(&doubles.states[j].gamma()))
                    .unwrap_or(0),
            };
            let st = doubles
                .states
                .get(index)
                .ok_or_else(|| UsageError(format!("state {index} out of range (0..{})", doubles.states.len())))?;
            (format!("index:{index}"), st.amplitudes.clone(), st.energy)
        }
    };
    let (kind, grid) = s.sphere_grid(GridArg::Uniform)?;
    let config = G2Config {
        geometry,
        state: label,
        detectors: s.detectors(),
        grid: kind,
        theta_nodes: grid.theta.len(),
        phi_nodes: grid.phi.len(),
    };
    let map = g2_map(&wedge, &array, config.detectors, &grid, s.execution())?;

    if s.self_test {
        let pairs = PairState::new(&wedge, &array)?;
        let detectors = |t: f64, p: f64| match config.detectors {
            DetectorConfig::PolarFixed => DetectorPair { r1: (0.0, 0.0), r2: (t, p) },
            DetectorConfig::Coincident => DetectorPair { r1: (t, p), r2: (t, p) },
        };
        let scale = map.argmax().map_or(1.0, |(_, _, v)| v.max(1.0));
        if let Some(n_d) = array.n_d().filter(|&n| n > 1) {
            let dev = rotation_deviation(&grid, n_d, |t, p| pairs.g2(&detectors(t, p)));
            check("azimuthal periodicity", dev / scale, 1e-8)?;
        }
        let n = grid.len();
        let dev = (0..n)
            .filter_map(|q| {
                let (t1, p1, _) = grid.node(q);
                let (t2, p2, _) = grid.node((7 * q + 3) % n);
                let pair = DetectorPair { r1: (t1, p1), r2: (t2, p2) };
                Some((pairs.g2(&pair)? - pairs.g2(&pair.swapped())?).abs())
            })
            .fold(0.0, f64::max);
        check("exchange symmetry", dev / scale, 1e-10)?;
    }

    let mut out = open(&s, "g2", &config, &["theta", "phi", "value", "mask"])?;
    out.note("energy", [energy.re, energy.im])?;
    out.note("argmax", map.argmax().map(|(t, p, v)| json!({ "theta": t, "phi": p, "value": v })))?;
    if out.is_csv() {
        for (t, p, v, defined) in map.rows() {
            out.row(&[num(t), num(p), num(v), u8::from(defined).to_string()])?;
        }
    } else {
        out.json(&map)?;
    }
    Ok(out.flush()?)
}

#[derive(Serialize)]
struct OptimizeConfig {
    n_d: usize,
    a_axis: Axis,
    b_axis: Axis,
    refine: bool,
}

pub fn optimize(s: Settings) -> Result<(), Failure> {
    if s.nd() != 6 {
        return Err(UsageError("optimize covers the six-fold double ring only".into()).into());
    }
    let axis = |min: Option<f64>, max: Option<f64>, steps: Option<usize>, d: (f64, f64, usize)| {
        Axis::new(min.unwrap_or(d.0), max.unwrap_or(d.1), steps.unwrap_or(d.2))
    };
    let config = OptimizeConfig {
        n_d: 6,
        a_axis: axis(s.a_min, s.a_max, s.a_steps, (0.05, 0.25, 41))?,
        b_axis: axis(s.b_min, s.b_max, s.b_steps, (1.5, 3.0, 31))?,
        refine: s.refine,
    };
    let result = optimize_grid(&config.a_axis, &config.b_axis, config.refine, s.execution())?;
    if s.self_test {
        let grid_max = result.grid_surface.iter().flatten().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        check("argmax attains grid maximum", (grid_max - result.best_lifetime_enhancement).abs(), 0.0)?;
        if let Some(r) = &result.refined {
            check("refinement does not lose", (result.best_lifetime_enhancement - r.lifetime_enhancement).max(0.0), 0.0)?;
        }
    }
    let mut out = open(&s, "optimize", &config, &["a", "b_over_a", "lifetime_enhancement", "mask"])?;
    out.note("best_point", result.best_point)?;
    out.note("best_lifetime_enhancement", result.best_lifetime_enhancement)?;
    out.note("refined", result.refined)?;
    if out.is_csv() {
        for (a, row) in result.a_values.iter().zip(&result.grid_surface) {
            for (b, v) in result.b_values.iter().zip(row) {
                out.row(&[num(*a), num(*b), v.map_or("nan".into(), num), u8::from(v.is_some()).to_string()])?;
            }
        }
    } else {
        out.json(&result)?;
    }
    Ok(out.flush()?)
}

#[derive(Serialize)]
struct CountConfig {
    n_d: usize,
    n_r: usize,
    excitations: u8,
}

pub fn count(s: Settings) -> Result<(), Failure> {
    let config = CountConfig { n_d: s.nd(), n_r: s.nr.unwrap_or(1), excitations: s.excitations.unwrap_or(2) };
    if !(1..=2).contains(&config.excitations) {
        return Err(UsageError(format!("--excitations must be 1 or 2, got {}", config.excitations)).into());
    }
    let manifold = if config.excitations == 1 { Manifold::Single } else { Manifold::Double };
    // numerical sector dimensions exist for the builders we have
    let geometry = match config.n_r {
        1 => Some(build_ring(config.n_d, 0.1)?),
        2 => Some(build_double_ring(config.n_d, 0.1, 2.0)?),
        _ => None,
    };
    let basis = geometry.as_ref().map(|g| momentum_basis(manifold, g)).transpose()?;
    let mut rows = Vec::new();
    for m in brillouin_zone(config.n_d) {
        let formula = match manifold {
            Manifold::Single => config.n_r,
            Manifold::Double => count_states(config.n_d, config.n_r, m)?,
        };
        let numeric = basis.as_ref().and_then(|b| b.sector(m)).map(|sec| sec.dim());
        rows.push((m, formula, numeric));
    }
    if s.self_test {
        let mismatches = rows.iter().filter(|(_, f, n)| n.is_some_and(|n| n != *f)).count();
        check("formula vs sector dimensions", mismatches as f64, 0.0)?;
    }
    let parity_row = |even: bool| {
        let mut counts = rows.iter().filter(|(m, _, _)| (m % 2 == 0) == even).map(|r| r.1);
        let first = counts.next()?;
        counts.all(|c| c == first).then_some(first)
    };
    let total: usize = rows.iter().map(|r| r.1).sum();

    let mut out = open(&s, "count", &config, &["m", "parity", "formula", "numeric"])?;
    out.note("total", total)?;
    out.note("row", json!({ "even": parity_row(true), "odd": parity_row(false) }))?;
    if out.is_csv() {
        for (m, formula, numeric) in &rows {
            let parity = if m % 2 == 0 { "even" } else { "odd" };
            out.row(&[m.to_string(), parity.into(), formula.to_string(), opt(*numeric)])?;
        }
    } else {
        let data: Vec<_> = rows.iter().map(|(m, f, n)| json!({ "m": m, "formula": f, "numeric": n })).collect();
        out.json(data)?;
    }
    Ok(out.flush()?)
}
