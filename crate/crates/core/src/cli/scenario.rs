use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::RawConfig;
use crate::dynamics::{GridControls, NonUniqueCurve, ParticleControls, RecordSchedule, SelfSimilarTransform};
use crate::energetics::{BumpSpec, EnergyModel, Internal, Kernel, Potential, Table};
use crate::equilibria::Metric;
use crate::error::{Error, Result};
use crate::measures::{read_measure_csv, Domain, GridMeasure, Measure, ParticleMeasure};

#[derive(Clone, Debug, PartialEq)]
pub enum InitialDatum {
    Uniform,
    /// `exp(−(x − center)² / (2 width²))`.
    GaussianLike { center: f64, width: f64 },
    /// Indicator of `[center − width/2, center + width/2]`.
    Box { center: f64, width: f64 },
    /// `1 + amplitude · cos(2π mode (x − phase) / L)`.
    PerturbedUniform { amplitude: f64, mode: u32, phase: f64 },
    Atoms { positions: Vec<f64>, weights: Vec<f64> },
    /// `count` equal atoms drawn uniformly and stretched to the exact `diameter` around `center`.
    RandomCloud { count: usize, center: f64, diameter: f64, seed: u64 },
    FromFile(PathBuf),
}

impl InitialDatum {
    pub fn build(&self, domain: Domain, cells: Option<usize>) -> Result<Measure> {
        let grid = |f: &dyn Fn(f64) -> f64| -> Result<Measure> {
            let n = cells.ok_or_else(|| Error::InvalidModel("density data need a cell count".into()))?;
            Ok(GridMeasure::from_fn(domain, n, f)?.into())
        };
        let dist = |x: f64, c: f64| domain.displacement(c, x);
        match self {
            InitialDatum::Uniform => grid(&|_| 1.0),
            InitialDatum::GaussianLike { center, width } => {
                grid(&|x| (-dist(x, *center).powi(2) / (2.0 * width * width)).exp())
            }
            InitialDatum::Box { center, width } => {
                grid(&|x| if dist(x, *center).abs() < 0.5 * width { 1.0 } else { 0.0 })
            }
            InitialDatum::PerturbedUniform { amplitude, mode, phase } => {
                let l = domain.length();
                grid(&|x| 1.0 + amplitude * (2.0 * PI * *mode as f64 * (x - phase) / l).cos())
            }
            InitialDatum::Atoms { positions, weights } => {
                Ok(ParticleMeasure::new(domain, positions.clone(), weights.clone())?.into())
            }
            InitialDatum::RandomCloud { count, center, diameter, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let u: Vec<f64> = (0..*count).map(|_| rng.gen::<f64>()).collect();
                let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let xs = u.iter().map(|v| center - 0.5 * diameter + diameter * (v - lo) / (hi - lo)).collect();
                Ok(ParticleMeasure::empirical(domain, xs)?.into())
            }
            InitialDatum::FromFile(path) => {
                let m = read_measure_csv(path)?;
                let d = match &m {
                    Measure::Grid(g) => *g.domain(),
                    Measure::Particles(p) => *p.domain(),
                };
                if !d.same_as(&domain) {
                    return Err(Error::DomainMismatch);
                }
                Ok(m)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Dynamics {
    Grid(GridControls),
    Particles(ParticleControls),
    /// Porous-medium flow in self-similar variables with exponent `m`.
    SelfSimilarPme { m: f64, controls: GridControls },
}

impl Dynamics {
    pub fn set_snapshot_stride(&mut self, stride: usize) {
        match self {
            Dynamics::Grid(c) | Dynamics::SelfSimilarPme { controls: c, .. } => c.snapshot_stride = stride,
            Dynamics::Particles(c) => c.snapshot_stride = stride,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MemberSpec {
    Uniform,
    Kuramoto { center: f64 },
    Barenblatt,
    WeakConfinement,
    FixedPoints { seeds: Vec<f64>, width: f64, damping: f64, max_iter: usize },
    /// Compact power profile for diffusion against quadratic attraction, centred at the initial mean.
    CompactPower,
    /// `δ` at the initial center of mass.
    Consensus,
    /// The initial atoms as a separated lattice.
    Lattice,
    Initial,
    Dirac { position: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriaSpec {
    pub members: Vec<MemberSpec>,
    pub translation_quotient: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateBound {
    Value(f64),
    /// `2 inf_{[−D, D]} φ` for the initial diameter `D`.
    Consensus,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Check {
    EnergyMonotone { factor: f64 },
    MsResidual { relative_tol: f64, window: Option<(f64, f64)> },
    GqBound,
    Convergence { metric: Metric, tol: f64, window: f64 },
    OmegaLimit { max_clusters: usize, tail: f64 },
    EnergyLimit { tol: f64, continuous: bool },
    SecondMoment { tol: f64 },
    Mass { bound: f64 },
    CenterOfMass { tol: f64 },
    Rate { window: Option<(f64, f64)>, min: Option<RateBound>, slack: f64, target: Option<(f64, f64)> },
    ClosedForm { curve: NonUniqueCurve, tol: f64 },
    MinGap,
    Stationary { tol: f64 },
    EquilibriaDissipation { tol: f64 },
    DistinctEquilibria { gap: f64 },
    MergedEquilibria { gap: f64 },
    OutsideP2,
    Nearest { label: String },
    SigmaResidual { tol: f64 },
    EquilibriumEnergyBelow { value: f64 },
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::EnergyMonotone { .. } => "energy_monotone",
            Check::MsResidual { .. } => "ms_residual",
            Check::GqBound => "gq_bound",
            Check::Convergence { .. } => "convergence",
            Check::OmegaLimit { .. } => "omega_limit",
            Check::EnergyLimit { .. } => "energy_limit",
            Check::SecondMoment { .. } => "second_moment",
            Check::Mass { .. } => "mass",
            Check::CenterOfMass { .. } => "center_of_mass",
            Check::Rate { .. } => "rate",
            Check::ClosedForm { .. } => "closed_form",
            Check::MinGap => "min_gap",
            Check::Stationary { .. } => "stationary",
            Check::EquilibriaDissipation { .. } => "equilibria_dissipation",
            Check::DistinctEquilibria { .. } => "distinct_equilibria",
            Check::MergedEquilibria { .. } => "merged_equilibria",
            Check::OutsideP2 => "outside_p2",
            Check::Nearest { .. } => "nearest",
            Check::SigmaResidual { .. } => "sigma_residual",
            Check::EquilibriumEnergyBelow { .. } => "equilibrium_energy_below",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub description: String,
    pub source: PathBuf,
    pub domain: Domain,
    pub cells: Option<usize>,
    pub model: EnergyModel,
    pub initial: InitialDatum,
    pub t_end: f64,
    pub dynamics: Dynamics,
    pub equilibria: EquilibriaSpec,
    pub checks: Vec<Check>,
}

impl Scenario {
    pub fn kappa(&self) -> Option<f64> {
        match self.model.interaction {
            Kernel::Kuramoto { kappa } | Kernel::QuadraticAttraction { kappa } => Some(kappa),
            _ => None,
        }
    }
}

pub fn parse_metric(s: &str) -> Option<Metric> {
    let s = s.trim().to_ascii_lowercase();
    match s.as_str() {
        "bl" => return Some(Metric::BoundedLipschitz),
        "w1" => return Some(Metric::W1),
        _ => {}
    }
    let p = s.strip_prefix("wp:").or_else(|| s.strip_prefix('w'))?.parse::<f64>().ok()?;
    if p == 1.0 {
        Some(Metric::W1)
    } else if p > 1.0 && p.is_finite() {
        Some(Metric::Wp(p))
    } else {
        None
    }
}

pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_scenario_str(&text, path)
}

/// Parses scenario text; relative file references resolve against the directory of `path`.
pub fn parse_scenario_str(text: &str, path: &Path) -> Result<Scenario> {
    let cfg = RawConfig::parse(text, &path.display().to_string())?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let scenario = build(&cfg, &base);
    cfg.finish()?;
    scenario.ok_or_else(|| Error::Validation(vec!["scenario could not be assembled".into()]))
}

fn resolve(base: &Path, cfg: &RawConfig, section: &str, key: &str) -> Option<PathBuf> {
    let p = base.join(cfg.str(section, key)?);
    if p.is_file() {
        Some(p)
    } else {
        cfg.error(format!("[{section}] {key}: file {} does not exist", p.display()));
        None
    }
}

fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(',').map(|s| s.trim().parse::<f64>());
        match (it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y))) => {
                xs.push(x);
                ys.push(y);
            }
            _ if k == 0 => {}
            _ => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: k + 1,
                    message: format!("expected `x,value`, got `{line}`"),
                })
            }
        }
    }
    Table::new(xs, ys, None)
}

fn positive(cfg: &RawConfig, name: &str, v: f64) -> f64 {
    if !(v > 0.0) && !v.is_nan() {
        cfg.error(format!("{name} must be positive"));
    }
    v
}

fn window(cfg: &RawConfig, section: &str, key: &str) -> Option<(f64, f64)> {
    let v = cfg.list_f64(section, key)?;
    if v.len() == 2 && v[0] < v[1] {
        Some((v[0], v[1]))
    } else {
        cfg.error(format!("[{section}] {key} must be two increasing times"));
        None
    }
}

fn build(cfg: &RawConfig, base: &Path) -> Option<Scenario> {
    let id = cfg.require_str("scenario", "id");
    if !id.is_empty() && !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        cfg.error(format!("scenario id `{id}` must use only letters, digits, `_` and `-`"));
    }
    let description = cfg.str_or("scenario", "description", "");

    let domain = build_domain(cfg);
    let cells = cfg.usize("domain", "cells");
    if cells == Some(0) {
        cfg.error("cells must be positive");
    }
    let (model, pme_m) = build_model(cfg, base);
    let initial = build_initial(cfg, base);
    let t_end = positive(cfg, "t_end", cfg.require_f64("dynamics", "t_end"));
    let dynamics = build_dynamics(cfg, pme_m);
    let equilibria = build_equilibria(cfg);
    let checks = build_checks(cfg);

    let model = model?;
    let domain = domain?;
    let needs_grid = !matches!(dynamics, Some(Dynamics::Particles(_)));
    if needs_grid && cells.is_none() {
        cfg.error("[domain] cells is required for density dynamics");
    }
    if matches!(dynamics, Some(Dynamics::Particles(_))) && !model.internal.is_none() {
        cfg.error("particle dynamics cannot carry an internal energy");
    }
    if let (Kernel::Kuramoto { .. }, Domain::Interval { .. }) = (&model.interaction, domain) {
        cfg.error("the kuramoto kernel lives on the torus");
    }
    Some(Scenario {
        id,
        description,
        source: base.to_path_buf(),
        domain,
        cells,
        model,
        initial: initial?,
        t_end,
        dynamics: dynamics?,
        equilibria: equilibria?,
        checks,
    })
}

fn build_domain(cfg: &RawConfig) -> Option<Domain> {
    let s = "domain";
    match cfg.require_str(s, "kind").as_str() {
        "torus" => {
            let period = positive(cfg, "period", cfg.f64_or(s, "period", 1.0));
            Domain::torus(period).map_err(|e| cfg.error(e.to_string())).ok()
        }
        "interval" => {
            let left = cfg.require_f64(s, "left");
            let right = cfg.require_f64(s, "right");
            let trunc = cfg.bool(s, "truncation_of_line").unwrap_or(false);
            if left.is_nan() || right.is_nan() {
                return None;
            }
            Domain::interval(left, right, trunc).map_err(|e| cfg.error(e.to_string())).ok()
        }
        "" => None,
        other => {
            cfg.error(format!("[domain] kind must be torus or interval, got `{other}`"));
            None
        }
    }
}

fn build_model(cfg: &RawConfig, base: &Path) -> (Option<EnergyModel>, Option<f64>) {
    let s = "energy";
    if let Some(preset) = cfg.str(s, "preset") {
        if preset != "selfsimilar_pme" {
            cfg.error(format!("[energy] unknown preset `{preset}`"));
            return (None, None);
        }
        let m = cfg.require_f64(s, "m");
        if !(m > 1.0) {
            cfg.error("m must exceed 1");
            return (None, None);
        }
        let model = SelfSimilarTransform::new(m).and_then(|t| t.model()).map_err(|e| cfg.error(e.to_string())).ok();
        return (model, Some(m));
    }
    let internal = match cfg.str_or(s, "internal", "none").as_str() {
        "none" => Some(Internal::None),
        "entropy" => Some(Internal::Entropy { scale: positive(cfg, "scale", cfg.f64_or(s, "scale", 1.0)) }),
        "power" => {
            let m = cfg.require_f64(s, "m");
            if !(m >= 1.0) && !m.is_nan() {
                cfg.error("m must be at least 1");
            }
            Some(Internal::Power { m, scale: positive(cfg, "scale", cfg.f64_or(s, "scale", 1.0)) })
        }
        other => {
            cfg.error(format!("[energy] internal must be none, entropy or power, got `{other}`"));
            None
        }
    };
    let potential = match cfg.str_or(s, "potential", "zero").as_str() {
        "zero" => Some(Potential::Zero),
        "weaklog" => {
            let dim = cfg.usize(s, "dim").unwrap_or(1);
            if dim == 0 {
                cfg.error("dim must be positive");
            }
            Some(Potential::WeakLog { dim: dim as u32 })
        }
        "quadratic" => Some(Potential::Quadratic { a: cfg.require_f64(s, "a") }),
        "bistable" => Some(Potential::Bistable { a: cfg.f64_or(s, "a", 1.0), b: cfg.f64_or(s, "b", 1.0) }),
        "confinement" => Some(Potential::Confinement { alpha: positive(cfg, "alpha", cfg.require_f64(s, "alpha")) }),
        "table" => resolve(base, cfg, s, "potential_file")
            .and_then(|p| read_table(&p).map_err(|e| cfg.error(e.to_string())).ok())
            .map(Potential::Tabulated),
        other => {
            cfg.error(format!("[energy] unknown potential `{other}`"));
            None
        }
    };
    let kernel = match cfg.str_or(s, "kernel", "zero").as_str() {
        "zero" => Some(Kernel::Zero),
        "kuramoto" => Some(Kernel::Kuramoto { kappa: positive(cfg, "kappa", cfg.require_f64(s, "kappa")) }),
        "quadratic_attraction" => {
            Some(Kernel::QuadraticAttraction { kappa: positive(cfg, "kappa", cfg.require_f64(s, "kappa")) })
        }
        "hk" => {
            let radius = positive(cfg, "radius", cfg.require_f64(s, "radius"));
            let mut spec = BumpSpec::smooth(radius);
            spec.normalization = positive(cfg, "normalization", cfg.f64_or(s, "normalization", 1.0));
            if radius > 0.0 && spec.normalization > 0.0 {
                Kernel::hk(spec).map_err(|e| cfg.error(e.to_string())).ok()
            } else {
                None
            }
        }
        "nonconvex" => Some(Kernel::NonConvex),
        "table" => resolve(base, cfg, s, "kernel_file")
            .and_then(|p| read_table(&p).map_err(|e| cfg.error(e.to_string())).ok())
            .map(Kernel::Tabulated),
        other => {
            cfg.error(format!("[energy] unknown kernel `{other}`"));
            None
        }
    };
    let p = cfg.f64_or(s, "p", 2.0);
    let model = match (internal, potential, kernel) {
        (Some(i), Some(v), Some(w)) => EnergyModel::new(i, v, w, p).map_err(|e| cfg.error(e.to_string())).ok(),
        _ => None,
    };
    (model, None)
}

fn build_initial(cfg: &RawConfig, base: &Path) -> Option<InitialDatum> {
    let s = "initial";
    let datum = match cfg.require_str(s, "kind").as_str() {
        "uniform" => InitialDatum::Uniform,
        "gaussian_like" => InitialDatum::GaussianLike {
            center: cfg.f64_or(s, "center", 0.0),
            width: positive(cfg, "width", cfg.require_f64(s, "width")),
        },
        "box" => InitialDatum::Box {
            center: cfg.f64_or(s, "center", 0.0),
            width: positive(cfg, "width", cfg.require_f64(s, "width")),
        },
        "perturbed_uniform" => {
            let amplitude = cfg.require_f64(s, "amplitude");
            if !(amplitude.abs() < 1.0) && !amplitude.is_nan() {
                cfg.error("amplitude must lie in (-1, 1) to keep the density positive");
            }
            InitialDatum::PerturbedUniform {
                amplitude,
                mode: cfg.usize(s, "mode").unwrap_or(1) as u32,
                phase: cfg.f64_or(s, "phase", 0.0),
            }
        }
        "atoms" => {
            let positions = cfg.list_f64(s, "positions").unwrap_or_default();
            if positions.is_empty() {
                cfg.error("[initial] positions must list at least one atom");
            }
            let weights = cfg
                .list_f64(s, "weights")
                .unwrap_or_else(|| vec![1.0 / positions.len().max(1) as f64; positions.len()]);
            if weights.len() != positions.len() {
                cfg.error("[initial] weights and positions differ in length");
            }
            InitialDatum::Atoms { positions, weights }
        }
        "random_cloud" => {
            let count = cfg.usize(s, "count").unwrap_or(0);
            if count < 2 {
                cfg.error("[initial] count must be at least 2");
            }
            InitialDatum::RandomCloud {
                count,
                center: cfg.f64_or(s, "center", 0.0),
                diameter: positive(cfg, "diameter", cfg.require_f64(s, "diameter")),
                seed: cfg.usize(s, "seed").unwrap_or(0) as u64,
            }
        }
        "from_file" => InitialDatum::FromFile(resolve(base, cfg, s, "path")?),
        "" => return None,
        other => {
            cfg.error(format!("[initial] unknown kind `{other}`"));
            return None;
        }
    };
    Some(datum)
}

fn build_schedule(cfg: &RawConfig) -> RecordSchedule {
    let s = "dynamics";
    let count = cfg.usize(s, "records").unwrap_or(200);
    match cfg.str_or(s, "schedule", "uniform").as_str() {
        "uniform" => RecordSchedule::Uniform { count },
        "geometric" => RecordSchedule::Geometric { first: positive(cfg, "first", cfg.require_f64(s, "first")), count },
        "times" => RecordSchedule::Times(cfg.list_f64(s, "times").unwrap_or_default()),
        other => {
            cfg.error(format!("[dynamics] schedule must be uniform, geometric or times, got `{other}`"));
            RecordSchedule::default()
        }
    }
}

fn grid_controls(cfg: &RawConfig) -> GridControls {
    let s = "dynamics";
    let d = GridControls::default();
    GridControls {
        cfl: positive(cfg, "cfl", cfg.f64_or(s, "cfl", d.cfl)),
        diffusion_number: positive(cfg, "diffusion_number", cfg.f64_or(s, "diffusion_number", d.diffusion_number)),
        max_steps: cfg.usize(s, "max_steps").unwrap_or(d.max_steps),
        schedule: build_schedule(cfg),
        snapshot_stride: cfg.usize(s, "snapshot_stride").unwrap_or(1).max(1),
        mass_defect_bound: cfg.f64_or(s, "mass_defect_bound", d.mass_defect_bound),
        energy_slack: cfg.f64_or(s, "monitor_slack", d.energy_slack),
        monitor_stride: cfg.usize(s, "monitor_stride").unwrap_or(d.monitor_stride).max(1),
        min_dt: d.min_dt,
        max_dt: cfg.f64(s, "max_dt"),
        guard_support: cfg.bool(s, "guard_support").unwrap_or(false),
        steady_tol: cfg.f64(s, "steady_tol"),
    }
}

fn build_dynamics(cfg: &RawConfig, pme_m: Option<f64>) -> Option<Dynamics> {
    let s = "dynamics";
    match cfg.require_str(s, "kind").as_str() {
        "grid" => Some(Dynamics::Grid(grid_controls(cfg))),
        "selfsimilar_pme" => match pme_m {
            Some(m) => Some(Dynamics::SelfSimilarPme { m, controls: grid_controls(cfg) }),
            None => {
                cfg.error("selfsimilar_pme dynamics need [energy] preset = selfsimilar_pme");
                None
            }
        },
        "particles" => Some(Dynamics::Particles(ParticleControls {
            dt: cfg.f64(s, "dt").map(|v| positive(cfg, "dt", v)),
            schedule: build_schedule(cfg),
            snapshot_stride: cfg.usize(s, "snapshot_stride").unwrap_or(1).max(1),
            departure: cfg.f64(s, "departure"),
        })),
        "" => None,
        other => {
            cfg.error(format!("[dynamics] kind must be grid, particles or selfsimilar_pme, got `{other}`"));
            None
        }
    }
}

fn build_equilibria(cfg: &RawConfig) -> Option<EquilibriaSpec> {
    let s = "equilibria";
    let names = cfg.list_str(s, "members").unwrap_or_default();
    if names.is_empty() {
        cfg.error("[equilibria] members must name at least one constructor");
    }
    let mut members = Vec::new();
    for name in names {
        members.push(match name.as_str() {
            "uniform" => MemberSpec::Uniform,
            "kuramoto" => MemberSpec::Kuramoto { center: cfg.f64_or(s, "center", 0.0) },
            "barenblatt" => MemberSpec::Barenblatt,
            "weak_confinement" => MemberSpec::WeakConfinement,
            "fixed_points" => MemberSpec::FixedPoints {
                seeds: cfg.list_f64(s, "seeds").unwrap_or_else(|| vec![0.0]),
                width: positive(cfg, "seed_width", cfg.f64_or(s, "seed_width", 0.25)),
                damping: cfg.f64_or(s, "damping", 0.5),
                max_iter: cfg.usize(s, "max_iter").unwrap_or(20_000),
            },
            "compact_power" => MemberSpec::CompactPower,
            "consensus" => MemberSpec::Consensus,
            "lattice" => MemberSpec::Lattice,
            "initial" => MemberSpec::Initial,
            "dirac" => MemberSpec::Dirac { position: cfg.f64_or(s, "position", 0.0) },
            other => {
                cfg.error(format!("[equilibria] unknown member `{other}`"));
                continue;
            }
        });
    }
    Some(EquilibriaSpec { members, translation_quotient: cfg.bool(s, "translation_quotient").unwrap_or(false) })
}

fn build_checks(cfg: &RawConfig) -> Vec<Check> {
    let s = RawConfig::checks_section();
    let keys = cfg.check_keys();
    let on = |key: &str| keys.iter().any(|k| k == key);
    let flag = |key: &str| cfg.bool(s, key).unwrap_or(false);
    let mut checks = Vec::new();
    if on("energy_monotone") {
        let v = cfg.str(s, "energy_monotone").unwrap_or_default();
        let factor = if matches!(v.as_str(), "true" | "on" | "yes") { 10.0 } else { cfg.f64(s, "energy_monotone").unwrap_or(10.0) };
        checks.push(Check::EnergyMonotone { factor });
    }
    if on("ms_residual") {
        checks.push(Check::MsResidual { relative_tol: cfg.f64_or(s, "ms_residual", 0.05), window: window(cfg, s, "ms_window") });
    }
    if on("gq_bound") && flag("gq_bound") {
        checks.push(Check::GqBound);
    }
    if on("convergence") {
        let name = cfg.str_or(s, "convergence", "bl");
        let metric = parse_metric(&name).unwrap_or_else(|| {
            cfg.error(format!("[checks] unknown metric `{name}`"));
            Metric::BoundedLipschitz
        });
        checks.push(Check::Convergence {
            metric,
            tol: positive(cfg, "convergence_tol", cfg.require_f64(s, "convergence_tol")),
            window: cfg.f64_or(s, "convergence_window", 0.2),
        });
    }
    if on("omega_limit") {
        checks.push(Check::OmegaLimit {
            max_clusters: cfg.usize(s, "omega_limit").unwrap_or(1),
            tail: cfg.f64_or(s, "omega_tail", 0.2),
        });
    }
    if on("energy_limit") {
        checks.push(Check::EnergyLimit {
            tol: cfg.f64_or(s, "energy_limit", 1e-3),
            continuous: cfg.bool(s, "energy_continuous").unwrap_or(true),
        });
    }
    if on("second_moment") {
        checks.push(Check::SecondMoment { tol: cfg.f64_or(s, "second_moment", 1e-12) });
    }
    if on("mass") {
        checks.push(Check::Mass { bound: cfg.f64_or(s, "mass", 1e-6) });
    }
    if on("center_of_mass") {
        checks.push(Check::CenterOfMass { tol: cfg.f64_or(s, "center_of_mass", 1e-10) });
    }
    if on("rate_min") || on("rate_target") {
        let min = cfg.str(s, "rate_min").map(|v| {
            if v == "consensus" {
                RateBound::Consensus
            } else {
                RateBound::Value(cfg_number(cfg, "rate_min", &v))
            }
        });
        let target = cfg.f64(s, "rate_target").map(|t| (t, cfg.f64_or(s, "rate_tol", 1e-3)));
        checks.push(Check::Rate { window: window(cfg, s, "rate_window"), min, slack: cfg.f64_or(s, "rate_slack", 0.05), target });
    }
    if on("closed_form") {
        let curve = match cfg.str_or(s, "closed_form", "").as_str() {
            "stationary" => NonUniqueCurve::Stationary,
            "collapsing" => NonUniqueCurve::Collapsing,
            other => {
                cfg.error(format!("[checks] closed_form must be stationary or collapsing, got `{other}`"));
                NonUniqueCurve::Stationary
            }
        };
        checks.push(Check::ClosedForm { curve, tol: cfg.f64_or(s, "closed_form_tol", 1e-6) });
    }
    if on("min_gap") && flag("min_gap") {
        checks.push(Check::MinGap);
    }
    if on("stationary") {
        checks.push(Check::Stationary { tol: cfg.f64_or(s, "stationary", 0.0) });
    }
    if on("equilibria_dissipation") {
        checks.push(Check::EquilibriaDissipation { tol: cfg.f64_or(s, "equilibria_dissipation", 1e-6) });
    }
    if on("distinct_equilibria") {
        checks.push(Check::DistinctEquilibria { gap: cfg.f64_or(s, "distinct_equilibria", 0.05) });
    }
    if on("merged_equilibria") {
        checks.push(Check::MergedEquilibria { gap: cfg.f64_or(s, "merged_equilibria", 1e-4) });
    }
    if on("outside_p2") && flag("outside_p2") {
        checks.push(Check::OutsideP2);
    }
    if on("nearest") {
        checks.push(Check::Nearest { label: cfg.str_or(s, "nearest", "") });
    }
    if on("sigma_residual") {
        checks.push(Check::SigmaResidual { tol: cfg.f64_or(s, "sigma_residual", 1e-10) });
    }
    if on("equilibrium_energy_below") {
        checks.push(Check::EquilibriumEnergyBelow { value: cfg.f64_or(s, "equilibrium_energy_below", 0.0) });
    }
    if checks.is_empty() {
        cfg.error("[checks] declares no checks");
    }
    checks
}

fn cfg_number(cfg: &RawConfig, key: &str, v: &str) -> f64 {
    super::config::parse_number(v).unwrap_or_else(|| {
        cfg.error(format!("[checks] {key}: expected a number, got `{v}`"));
        f64::NAN
    })
}
